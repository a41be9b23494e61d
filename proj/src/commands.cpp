#include "strokenet/commands.hpp"

#include "strokenet/checkpoint.hpp"
#include "strokenet/parallel.hpp"
#include "strokenet/plot.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#ifndef STROKENET_GIT_DESCRIBE
#define STROKENET_GIT_DESCRIBE "unknown"
#endif

namespace strokenet {

namespace {

std::string iso_time(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string now_stamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) return iso_time(static_cast<std::time_t>(std::stoll(epoch)));
  return iso_time(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

RunConfig config_or_default(const std::optional<fs::path>& path) { return path ? load_config(*path) : RunConfig{}; }

std::string point_text(const Point& p) { return "[" + fixed(p.x()) + "," + fixed(p.y()) + "]"; }

struct Evaluated {
  EvalReport report;
  std::string detections;  // JSONL
};

// Runs the model over the samples, optionally writing overlays to out/overlays.
Evaluated run_eval(const Model& model, const DatasetIndex& ds, const std::vector<TrainSample>& samples, int offset,
                   const fs::path& out, int overlays) {
  std::vector<InferenceResult> results(samples.size());
  parallel_for(static_cast<int>(samples.size()),
               [&](int i) { results[static_cast<std::size_t>(i)] = model.infer(samples[static_cast<std::size_t>(i)].image); });
  Evaluated ev;
  std::ostringstream lines;
  if (overlays > 0) ensure_dir(out / "overlays");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& rec = ds.samples[static_cast<std::size_t>(offset) + i];
    lines << detections_line(rec.image, results[i].instances) << '\n';
    ev.report += evaluate(results[i].instances, samples[i].instances);
    if (static_cast<int>(i) < overlays) {
      std::vector<Polygon> det;
      std::vector<Polygon> gt;
      for (const auto& d : results[i].instances) det.push_back(d.polygon);
      for (const auto& g : samples[i].instances) gt.push_back(g.polygon);
      write_png(out / "overlays" / fs::path(rec.image).filename(),
                detection_panels(samples[i].image, det, gt, results[i].stroke_map));
    }
  }
  ev.report.finalize();
  ev.detections = lines.str();
  return ev;
}

std::pair<int, int> split_tail(int n, int holdout) {
  const int k = holdout > 0 ? holdout : std::max(1, n / 7);
  if (k >= n) throw std::runtime_error("holdout of " + std::to_string(k) + " leaves no training samples");
  return {n - k, k};
}

}  // namespace

std::vector<TrainSample> load_samples(const DatasetIndex& ds, int offset, int limit) {
  const int n = static_cast<int>(ds.samples.size());
  if (offset < 0 || offset > n) throw std::out_of_range("sample offset out of range");
  const int end = limit > 0 ? std::min(n, offset + limit) : n;
  std::vector<TrainSample> out(static_cast<std::size_t>(end - offset));
  parallel_for(end - offset, [&](int i) {
    const SampleRecord& r = ds.samples[static_cast<std::size_t>(offset + i)];
    TrainSample& s = out[static_cast<std::size_t>(i)];
    s.image = read_png_rgb(ds.root / r.image);
    if (!r.mask.empty()) s.stroke_mask = read_png_mask(ds.root / r.mask);
    s.instances = r.instances;
  });
  return out;
}

std::string detections_line(const std::string& image, const std::vector<TextInstance>& instances) {
  std::string s = "{\"image\":" + json(image).dump() + ",\"detections\":[";
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (i) s += ',';
    s += "{\"polygon\":[";
    const Polygon& p = instances[i].polygon;
    for (std::size_t k = 0; k < p.size(); ++k) s += (k ? "," : "") + point_text(p[k]);
    s += "],\"score\":" + fixed(instances[i].score) + "}";
  }
  return s + "]}";
}

std::string metrics_json(const EvalReport& r) {
  return "{\n  \"precision\": " + fixed(r.precision) + ",\n  \"recall\": " + fixed(r.recall) + ",\n  \"hmean\": " +
         fixed(r.hmean) + ",\n  \"num_pred\": " + std::to_string(r.num_pred) + ",\n  \"num_gt\": " +
         std::to_string(r.num_gt) + "\n}\n";
}

std::vector<std::pair<std::string, std::vector<Polygon>>> read_detections(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::pair<std::string, std::vector<Polygon>>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      std::vector<Polygon> polys;
      for (const auto& d : j.at("detections")) polys.push_back(polygon_from_json(d.at("polygon")));
      out.emplace_back(j.at("image").get<std::string>(), std::move(polys));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string s = "ablation,recall,precision,hmean\n";
  for (const auto& r : rows)
    s += ablation_label(r.ablation) + "," + fixed(r.report.recall) + "," + fixed(r.report.precision) + "," +
         fixed(r.report.hmean) + "\n";
  return s;
}

void write_run_manifest(const fs::path& out, const std::string& command, const std::string& config,
                        std::uint64_t seed, const json& extra) {
  json j = {{"command", command},
            {"config", config},
            {"seed", seed},
            {"git_describe", STROKENET_GIT_DESCRIBE},
            {"output_dir", out.string()},
            {"finished", now_stamp()}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_text(out / "run_manifest.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  const std::string started = now_stamp();
  try {
    const RunConfig rc = load_config(a.config);
    if (rc.subsets.empty()) throw ConfigError(a.config.string() + ": no [subset.NAME] sections");
    if (a.count < 1) throw std::invalid_argument("--count must be positive");
    ensure_dir(a.out);
    const DatasetSummary s = generate_dataset(rc.subsets, a.count, a.out, a.seed);
    write_run_manifest(a.out, "generate", a.config.string(), a.seed,
                       {{"started", started}, {"samples", s.samples}, {"dropped_words", s.dropped_words}});
    out << "generated " << s.samples << " samples in " << a.out.string() << " (" << s.dropped_words
        << " words dropped)\n";
    return 0;
  } catch (const std::exception& e) {
    err << "generate: " << e.what() << '\n';
    return 1;
  }
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const std::string started = now_stamp();
  try {
    RunConfig rc = config_or_default(a.config);
    if (a.ablation) rc.model.ablation = *a.ablation;
    if (a.seed) rc.train.seed = *a.seed;
    const DatasetIndex ds = load_dataset(a.data);
    const std::vector<TrainSample> samples = load_samples(ds, 0, a.limit);
    ensure_dir(a.out);
    Model model(rc.model, rc.train.seed);
    std::ofstream log(a.out / "train_log.jsonl", std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write " + (a.out / "train_log.jsonl").string());
    const auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    double last = 0.0;
    try {
      train(model, samples, rc.train, [&](const StepRecord& r) {
        log << r.to_json().dump() << '\n';
        last = r.loss.total;
      });
    } catch (const NonFiniteLoss& e) {
      err << "train: " << e.what() << "; last finite parameters saved to " << (a.out / "model.ckpt").string() << '\n';
      code = 1;
    }
    log.close();
    save_checkpoint(model, a.out / "model.ckpt");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_run_manifest(a.out, "train", a.config ? a.config->string() : "", rc.train.seed,
                       {{"started", started},
                        {"ablation", ablation_name(rc.model.ablation)},
                        {"data", a.data.string()},
                        {"samples", samples.size()},
                        {"checkpoint_digest", file_digest(a.out / "model.ckpt")}});
    if (code == 0)
      out << "trained " << ablation_label(rc.model.ablation) << " on " << samples.size() << " samples, final loss "
          << fixed(last, 4) << " (" << fixed(secs, 1) << " s)\n";
    return code;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << '\n';
    return 1;
  }
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const std::string started = now_stamp();
  try {
    if (!a.checkpoint && !a.detections) throw std::invalid_argument("one of --checkpoint or --detections is required");
    const DatasetIndex ds = load_dataset(a.data);
    const int n = static_cast<int>(ds.samples.size());
    const int offset = std::min(a.offset, n);
    ensure_dir(a.out);
    EvalReport report;
    std::string config;
    if (a.detections) {
      std::map<std::string, std::vector<Polygon>> by_image;
      for (auto& [img, polys] : read_detections(*a.detections)) by_image[img] = std::move(polys);
      const int end = a.limit > 0 ? std::min(n, offset + a.limit) : n;
      for (int i = offset; i < end; ++i) {
        const SampleRecord& r = ds.samples[static_cast<std::size_t>(i)];
        std::vector<Polygon> gt;
        for (const auto& g : r.instances) gt.push_back(g.polygon);
        auto it = by_image.find(r.image);
        report += evaluate(it == by_image.end() ? std::vector<Polygon>{} : it->second, gt);
      }
      report.finalize();
      config = a.detections->string();
    } else {
      const auto model = load_checkpoint(*a.checkpoint);
      const auto samples = load_samples(ds, offset, a.limit);
      const Evaluated ev = run_eval(*model, ds, samples, offset, a.out, a.overlays);
      write_text(a.out / "detections.jsonl", ev.detections);
      report = ev.report;
      config = a.checkpoint->string();
    }
    write_text(a.out / "metrics.json", metrics_json(report));
    write_run_manifest(a.out, "eval", config, 0, {{"started", started}, {"data", a.data.string()}});
    out << "precision " << fixed(report.precision) << " recall " << fixed(report.recall) << " hmean "
        << fixed(report.hmean) << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << '\n';
    return 1;
  }
}

int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  const std::string started = now_stamp();
  try {
    const RunConfig rc = config_or_default(a.config);
    const DatasetIndex ds = load_dataset(a.data);
    std::vector<TrainSample> train_set;
    std::vector<TrainSample> eval_set;
    DatasetIndex eval_ds;
    int eval_offset = 0;
    if (a.eval_data) {
      train_set = load_samples(ds);
      eval_ds = load_dataset(*a.eval_data);
      eval_set = load_samples(eval_ds);
    } else {
      const auto [ntrain, nhold] = split_tail(static_cast<int>(ds.samples.size()), a.holdout);
      train_set = load_samples(ds, 0, ntrain);
      eval_set = load_samples(ds, ntrain, nhold);
      eval_ds = ds;
      eval_offset = ntrain;
    }
    ensure_dir(a.out);
    std::vector<AblationRow> rows;
    for (Ablation ab : all_ablations()) {
      const fs::path dir = a.out / ablation_name(ab);
      ensure_dir(dir);
      ModelConfig mc = rc.model;
      mc.ablation = ab;
      Model model(mc, rc.train.seed);
      const auto t0 = std::chrono::steady_clock::now();
      std::ofstream log(dir / "train_log.jsonl", std::ios::trunc);
      train(model, train_set, rc.train, [&](const StepRecord& r) { log << r.to_json().dump() << '\n'; });
      log.close();
      save_checkpoint(model, dir / "model.ckpt");
      const Evaluated ev = run_eval(model, eval_ds, eval_set, eval_offset, dir, 0);
      write_text(dir / "detections.jsonl", ev.detections);
      write_text(dir / "metrics.json", metrics_json(ev.report));
      rows.push_back({ab, ev.report});
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out << ablation_label(ab) << ": hmean " << fixed(ev.report.hmean) << " (" << fixed(secs, 1) << " s)\n";
    }
    write_text(a.out / "ablation.csv", ablation_csv(rows));
    std::vector<BarSeries> series;
    for (const auto& r : rows)
      series.push_back({ablation_label(r.ablation), {r.report.recall, r.report.precision, r.report.hmean}});
    write_png(a.out / "ablation.png", bar_chart(series, {"recall", "precision", "hmean"}));
    write_run_manifest(a.out, "ablate", a.config ? a.config->string() : "", rc.train.seed,
                       {{"started", started}, {"data", a.data.string()}, {"train_samples", train_set.size()}, {"eval_samples", eval_set.size()}});
    out << "FULL hmean " << fixed(rows.back().report.hmean) << " vs TLP hmean " << fixed(rows.front().report.hmean)
        << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "ablate: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace strokenet
