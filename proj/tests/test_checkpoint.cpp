#include <doctest.h>

#include "strokenet/checkpoint.hpp"
#include "strokenet/synth.hpp"

#include <fstream>

using namespace strokenet;

namespace {

ModelConfig small(Ablation a) {
  ModelConfig c;
  c.ablation = a;
  c.sapn.backbone_width = 8;
  c.sapn.head_hidden = 8;
  c.sapn.internal_width = 8;
  c.sapn.attention_width = 4;
  c.hrgn.feature_channels = 8;
  c.hrgn.geometric_dim = 32;
  c.hrgn.content_dim = 8;
  c.hrgn.roi_grid = 2;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::current_path() / "scratch" / "ckpt";
  fs::create_directories(d);
  return d / name;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip keeps every parameter and inference bit for bit") {
    ModelConfig cfg = small(Ablation::full);
    cfg.loss.lambda3 = 0.25;
    cfg.inference.link_thresh = 0.4;
    Model m(cfg, 21);
    // move off the initial values so biases are not all zero
    Rng rng(4);
    for (Param* p : m.params().all())
      for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += rng.uniform(-0.05, 0.05);
    const fs::path path = scratch("full.ckpt");
    save_checkpoint(m, path);

    const auto back = load_checkpoint(path);
    CHECK(back->config().hash() == cfg.hash());
    CHECK(back->config().loss.lambda3 == 0.25);
    CHECK(back->config().inference.link_thresh == 0.4);
    const auto a = m.params().all();
    const auto b = back->params().all();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i]->name == b[i]->name);
      CHECK(a[i]->value == b[i]->value);
    }

    GenConfig g;
    g.width = g.height = 64;
    g.size_lo = 12;
    g.size_hi = 18;
    const SceneSample s = generate_sample(g, 8);
    const InferenceResult ra = m.infer(s.image);
    const InferenceResult rb = back->infer(s.image);
    CHECK((ra.stroke_map == rb.stroke_map).all());
    REQUIRE(ra.instances.size() == rb.instances.size());
    for (std::size_t i = 0; i < ra.instances.size(); ++i) {
      CHECK(ra.instances[i].polygon == rb.instances[i].polygon);
      CHECK(ra.instances[i].score == rb.instances[i].score);
    }

    // saving the loaded model reproduces the file
    const fs::path again = scratch("full2.ckpt");
    save_checkpoint(*back, again);
    CHECK(file_digest(path) == file_digest(again));
  }

  TEST_CASE("architecture mismatch names both hashes") {
    const Model tlp(small(Ablation::tlp), 1);
    const fs::path path = scratch("tlp.ckpt");
    save_checkpoint(tlp, path);
    Model full(small(Ablation::full), 1);
    try {
      load_checkpoint_into(full, path);
      FAIL("expected IncompatibleCheckpoint");
    } catch (const IncompatibleCheckpoint& e) {
      const std::string msg = e.what();
      CHECK(msg.find("file hash") != std::string::npos);
      CHECK(msg.find("model hash") != std::string::npos);
    }
    CHECK(tlp.config().hash() != full.config().hash());

    Model same(small(Ablation::tlp), 99);
    load_checkpoint_into(same, path);
    CHECK(same.params().get("head.conv2.weight").value == tlp.params().get("head.conv2.weight").value);
  }

  TEST_CASE("damaged files are rejected") {
    const fs::path bad = scratch("bad.ckpt");
    {
      std::ofstream(bad, std::ios::binary) << "NOPE";
    }
    CHECK_THROWS(load_checkpoint(bad));
    CHECK_THROWS(load_checkpoint(scratch("missing.ckpt")));

    const Model m(small(Ablation::tlp), 1);
    const fs::path path = scratch("cut.ckpt");
    save_checkpoint(m, path);
    const auto size = fs::file_size(path);
    fs::resize_file(path, size / 2);
    CHECK_THROWS(load_checkpoint(path));
  }

  TEST_CASE("file digest") {
    const fs::path a = scratch("a.bin");
    const fs::path b = scratch("b.bin");
    write_text(a, "strokes");
    write_text(b, "strokes");
    CHECK(file_digest(a) == file_digest(b));
    write_text(b, "strokez");
    CHECK(file_digest(a) != file_digest(b));
    // FNV-1a 64 of the empty input
    write_text(a, "");
    CHECK(file_digest(a) == "cbf29ce484222325");
  }
}
