#include <doctest.h>

#include "strokenet/synth.hpp"
#include "strokenet/train.hpp"

#include <cmath>
#include <numeric>

using namespace strokenet;

namespace {

ModelConfig tiny(Ablation a) {
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

std::vector<TrainSample> samples(int n, int canvas = 64) {
  GenConfig g;
  g.width = g.height = canvas;
  g.size_lo = 12;
  g.size_hi = 18;
  g.background = Background::plain;
  std::vector<TrainSample> out;
  for (int i = 0; i < n; ++i) {
    SceneSample s = generate_sample(g, 300 + static_cast<std::uint64_t>(i));
    out.push_back({std::move(s.image), std::move(s.stroke_mask), std::move(s.instances)});
  }
  return out;
}

TrainConfig quick(int steps, int batch = 2) {
  TrainConfig c;
  c.adam_steps = steps;
  c.batch_size = batch;
  return c;
}

std::vector<Mat> grads(Model& m, const TrainSample& s, std::uint64_t seed) {
  m.params().zero_grad();
  Tape t;
  Rng rng(seed);
  t.backward(m.build_loss(t, s, TrainOptions{}, rng).total);
  std::vector<Mat> out;
  for (const Param* p : m.params().all()) out.push_back(p->grad);
  return out;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("logged total equals the sum of weighted components") {
    Model m(tiny(Ablation::full), 1);
    const auto data = samples(1);
    TrainConfig cfg = quick(1, 1);
    cfg.flip_prob = 0.0;
    const TrainResult r = train(m, data, cfg);
    const LossBreakdown& l = r.steps.front().loss;
    const double sum = l.ta + l.tca + l.sin + l.cos + l.h + l.mse + l.ssim + l.linkage;
    CHECK(std::abs(l.total - sum) <= 1e-9);
    CHECK(l.strokes > 0);
    CHECK(l.links > 0);
  }

  TEST_CASE("training is deterministic for a seed") {
    const auto data = samples(4);
    Model a(tiny(Ablation::full), 3), b(tiny(Ablation::full), 3);
    const TrainResult ra = train(a, data, quick(3));
    const TrainResult rb = train(b, data, quick(3));
    for (std::size_t i = 0; i < ra.steps.size(); ++i) CHECK(ra.steps[i].loss.total == rb.steps[i].loss.total);
    const auto pa = a.params().all();
    const auto pb = b.params().all();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
  }

  TEST_CASE("loss trends down over the first 50 steps") {
    const auto data = samples(16);
    Model m(tiny(Ablation::tlp_slp), 5);
    const TrainResult r = train(m, data, quick(50));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(r.steps.size());
    for (const auto& s : r.steps) {
      sx += s.step;
      sy += s.loss.total;
      sxx += static_cast<double>(s.step) * s.step;
      sxy += s.step * s.loss.total;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope < 0.0);
  }

  TEST_CASE("ablations register only their sub-systems") {
    auto names = [](Ablation a) { return Model(tiny(a), 1).params().names(); };
    auto any_prefix = [](const std::vector<std::string>& ns, const std::string& pre) {
      return std::any_of(ns.begin(), ns.end(), [&](const std::string& n) { return n.rfind(pre, 0) == 0; });
    };
    const auto tlp = names(Ablation::tlp);
    CHECK_FALSE(any_prefix(tlp, "tfd."));
    CHECK_FALSE(any_prefix(tlp, "scf."));
    CHECK_FALSE(any_prefix(tlp, "hrgn."));
    CHECK(any_prefix(tlp, "backbone."));
    CHECK(any_prefix(tlp, "head."));
    const auto slp = names(Ablation::tlp_slp);
    CHECK(any_prefix(slp, "scf."));
    CHECK_FALSE(any_prefix(slp, "hrgn."));
    const auto tg = names(Ablation::tlp_tg);
    CHECK_FALSE(any_prefix(tg, "scf."));
    CHECK(any_prefix(tg, "hrgn.link"));
    CHECK_FALSE(any_prefix(tg, "hrgn.attention"));
    CHECK_FALSE(any_prefix(tg, "hrgn.mask"));
    CHECK_FALSE(any_prefix(tg, "hrgn.fuse"));
    const auto full = names(Ablation::full);
    CHECK(any_prefix(full, "hrgn.attention"));
    CHECK(any_prefix(full, "tfd."));
  }

  TEST_CASE("zero stroke weights isolate the stroke branch") {
    const auto data = samples(2);
    ModelConfig with = tiny(Ablation::tlp_slp);
    with.loss.lambda4 = 0.0;
    with.loss.lambda5 = 0.0;
    Model a(with, 9);
    Model b(tiny(Ablation::tlp), 9);
    const auto ga = grads(a, data[0], 4);
    const auto gb = grads(b, data[0], 4);
    const auto pa = a.params().all();
    const auto pb = b.params().all();
    std::size_t matched = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      if (b.params().contains(pa[i]->name)) {
        ++matched;
        CHECK(pa[i]->value == b.params().get(pa[i]->name).value);
        std::size_t j = 0;
        while (pb[j]->name != pa[i]->name) ++j;
        INFO(pa[i]->name);
        CHECK(ga[i] == gb[j]);
      } else {
        CHECK(ga[i].isZero());
      }
    }
    CHECK(matched == pb.size());
  }

  TEST_CASE("non-finite loss aborts and restores the last good parameters") {
    const auto data = samples(2);
    Model m(tiny(Ablation::tlp), 2);
    std::vector<Mat> snapshot;
    auto poison = [&](const StepRecord& r) {
      if (r.step != 1) return;
      for (const Param* p : m.params().all()) snapshot.push_back(p->value);
      m.params().get("head.conv2.bias").value(0, 0) = std::nan("");
    };
    bool thrown = false;
    try {
      train(m, data, quick(5, 1), poison);
    } catch (const NonFiniteLoss& e) {
      thrown = true;
      CHECK(e.step == 2);
      CHECK(std::string(e.what()).find("step 2") != std::string::npos);
    }
    CHECK(thrown);
    const auto ps = m.params().all();
    REQUIRE(snapshot.size() == ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) CHECK(ps[i]->value == snapshot[i]);
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    c.decay = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.adam_lr = -1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("learning rate schedule") {
    const auto data = samples(1);
    Model m(tiny(Ablation::tlp), 1);
    TrainConfig c = quick(2, 1);
    c.sgd_steps = 5;
    c.decay_every = 2;
    const TrainResult r = train(m, data, c);
    REQUIRE(r.steps.size() == 7);
    CHECK(r.steps[1].phase == "adam");
    CHECK(r.steps[2].phase == "sgd");
    CHECK(r.steps[2].lr == doctest::Approx(0.03));
    CHECK(r.steps[4].lr == doctest::Approx(0.015));
    CHECK(r.steps[6].lr == doctest::Approx(0.0075));
  }

  TEST_CASE("inference on a blank image finds nothing and repeats exactly") {
    Model m(tiny(Ablation::full), 4);
    train(m, samples(16), quick(60));
    for (std::uint8_t grey : {0, 128, 255}) {
      RgbImage blank(64, 64);
      std::fill(blank.data.begin(), blank.data.end(), grey);
      CHECK(m.infer(blank).instances.empty());
    }

    Model n(tiny(Ablation::full), 4);
    const auto data = samples(1);
    const InferenceResult a = n.infer(data[0].image);
    const InferenceResult b = n.infer(data[0].image);
    REQUIRE(a.instances.size() == b.instances.size());
    for (std::size_t i = 0; i < a.instances.size(); ++i) CHECK(a.instances[i].polygon == b.instances[i].polygon);
    CHECK((a.stroke_map == b.stroke_map).all());
  }

  TEST_CASE("horizontal flip mirrors geometry") {
    const Polygon p{Point(2, 3), Point(10, 3), Point(10, 7), Point(2, 7)};
    const Polygon f = flip_polygon(p, 20);
    CHECK(f == Polygon{Point(10, 3), Point(18, 3), Point(18, 7), Point(10, 7)});
    const auto data = samples(1);
    const TrainSample twice = flip_horizontal(flip_horizontal(data[0]));
    CHECK(twice.image.data == data[0].image.data);
    CHECK((twice.stroke_mask == data[0].stroke_mask).all());
  }
}
