#include <doctest.h>

#include "strokenet/commands.hpp"
#include "strokenet/io.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>

using namespace strokenet;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::current_path() / "scratch" / "cli" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

// Runs the CLI binary and returns its exit status.
int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" STROKENET_CLI "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_file(const std::string& name) {
  return (fs::path(STROKENET_SOURCE_DIR) / "configs" / name).string();
}

fs::path tiny_dataset(const std::string& name) {
  const fs::path out = scratch(name);
  REQUIRE(run("generate --config " + config_file("easy.ini") + " --count 5 --seed 11 --out " + out.string()) == 0);
  return out;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("generate writes one image, mask and label per sample") {
    const fs::path out = tiny_dataset("gen5");
    const DatasetIndex ds = load_dataset(out);
    REQUIRE(ds.samples.size() == 5);
    for (const auto& r : ds.samples) {
      CHECK(fs::exists(out / r.image));
      CHECK(fs::exists(out / r.mask));
    }
    const std::string labels = read_text(out / "annotations.jsonl");
    CHECK(std::count(labels.begin(), labels.end(), '\n') == 5);
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "run_manifest.json"));
  }

  TEST_CASE("generation is byte identical under a fixed clock") {
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    const std::string args = "generate --config " + config_file("easy.ini") + " --count 3 --seed 4 --out ";
    REQUIRE(run(args + a.string(), "SOURCE_DATE_EPOCH=1700000000") == 0);
    REQUIRE(run(args + b.string(), "SOURCE_DATE_EPOCH=1700000000") == 0);
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file()) continue;
      ++files;
      const fs::path rel = fs::relative(e.path(), a);
      std::string want = read_text(e.path());
      std::string got = read_text(b / rel);
      if (rel == "run_manifest.json") {
        // the output directory differs by construction
        json ja = json::parse(want), jb = json::parse(got);
        ja.erase("output_dir");
        jb.erase("output_dir");
        want = ja.dump();
        got = jb.dump();
      }
      INFO(rel.string());
      CHECK(want == got);
    }
    CHECK(files > 3);
  }

  TEST_CASE("failures exit nonzero") {
    CHECK(run("generate --config " + config_file("easy.ini") + " --count 5 --out /proc/strokenet-cli/out") != 0);
    CHECK_FALSE(fs::exists("/proc/strokenet-cli/out/manifest.json"));

    const fs::path data = tiny_dataset("bad_args");
    CHECK(run("train --data " + data.string() + " --ablation everything --out " + scratch("t").string()) == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("generate --count 5 --out " + scratch("x").string()) == 2);
    CHECK(run("eval --data " + data.string() + " --out " + scratch("e").string()) != 0);
    CHECK(run("--help") == 0);
  }

  TEST_CASE("eval scores a detections file") {
    const fs::path data = tiny_dataset("eval_data");
    const DatasetIndex ds = load_dataset(data);

    const fs::path perfect = scratch("perfect.jsonl");
    const fs::path empty = scratch("empty.jsonl");
    {
      std::ofstream p(perfect), e(empty);
      for (const auto& r : ds.samples) {
        std::vector<TextInstance> oracle;
        for (const auto& g : r.instances) oracle.push_back({{}, g.polygon, 1.0});
        p << detections_line(r.image, oracle) << '\n';
        e << detections_line(r.image, {}) << '\n';
      }
    }
    const fs::path out1 = scratch("eval_perfect");
    REQUIRE(run("eval --detections " + perfect.string() + " --data " + data.string() + " --out " + out1.string()) == 0);
    const json m1 = json::parse(read_text(out1 / "metrics.json"));
    CHECK(m1.at("hmean").get<double>() == 1.0);
    CHECK(m1.at("precision").get<double>() == 1.0);
    CHECK(m1.at("recall").get<double>() == 1.0);

    const fs::path out0 = scratch("eval_empty");
    REQUIRE(run("eval --detections " + empty.string() + " --data " + data.string() + " --out " + out0.string()) == 0);
    const json m0 = json::parse(read_text(out0 / "metrics.json"));
    CHECK(m0.at("hmean").get<double>() == 0.0);
    CHECK(m0.at("recall").get<double>() == 0.0);
  }

  TEST_CASE("detections round trip through the line format") {
    TextInstance t;
    t.polygon = {Point(1.5, 2), Point(9, 2), Point(9, 7.25), Point(1.5, 7.25)};
    t.score = 0.875;
    const fs::path f = scratch("one.jsonl");
    write_text(f, detections_line("images/0001.png", {t}) + "\n");
    const auto back = read_detections(f);
    REQUIRE(back.size() == 1);
    CHECK(back[0].first == "images/0001.png");
    REQUIRE(back[0].second.size() == 1);
    CHECK(back[0].second[0] == t.polygon);

    write_text(f, "{\"image\": 3}\n");
    CHECK_THROWS_WITH(read_detections(f), doctest::Contains(":1:"));
  }

  TEST_CASE("ablation table") {
    EvalReport r;
    r.precision = 0.5;
    r.recall = 0.25;
    r.hmean = 1.0 / 3.0;
    const std::string csv = ablation_csv({{Ablation::tlp, r}, {Ablation::full, r}});
    CHECK(csv.rfind("ablation,recall,precision,hmean\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }
}
