#include <doctest.h>

#include "strokenet/config.hpp"

using namespace strokenet;

namespace {

fs::path config_file(const std::string& name) { return fs::path(STROKENET_SOURCE_DIR) / "configs" / name; }

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("shipped configurations parse") {
    const RunConfig easy = load_config(config_file("easy.ini"));
    REQUIRE(easy.subsets.size() == 1);
    CHECK(easy.subsets[0].id == "easy");
    CHECK(easy.subsets[0].width == 128);
    CHECK(easy.subsets[0].size_lo == 15);
    CHECK(easy.subsets[0].size_hi == 40);
    CHECK(easy.model.ablation == Ablation::full);
    CHECK(easy.model.hrgn.graph_layers == 2);
    CHECK(easy.model.hrgn.feature_channels == easy.model.sapn.backbone_width);
    CHECK(easy.train.adam_steps == 800);
    CHECK(easy.train.seed == 7);

    const RunConfig synth = load_config(config_file("synthstroke.ini"));
    CHECK(synth.subsets.size() >= 2);
    for (const auto& g : synth.subsets) CHECK_NOTHROW(g.validate());

    CHECK_NOTHROW(load_config(config_file("full_scale.ini")));
  }

  TEST_CASE("defaults apply when sections are absent") {
    const RunConfig rc = parse_config("");
    CHECK(rc.subsets.empty());
    CHECK(rc.model.hash() == [] {
      ModelConfig m;
      m.hrgn.feature_channels = m.sapn.backbone_width;
      return m.hash();
    }());
  }

  TEST_CASE("every section is read") {
    const RunConfig rc = parse_config(
        "[model]\nablation = tlp_tg\nroi_grid = 3\northogonal_scales = 1, 2\n"
        "[labels]\nshrink_ratio = 0.4\n"
        "[loss]\nlambda2 = 2.5\ntca_inside_ta = false\n"
        "[train]\nbatch_size = 3\nsgd_steps = 10\n"
        "[inference]\nlink_thresh = 0.7\nhop2 = 0\n"
        "[subset.a]\nangle_range = 10, 20\nbackground = procedural\n");
    CHECK(rc.model.ablation == Ablation::tlp_tg);
    CHECK(rc.model.hrgn.roi_grid == 3);
    CHECK(rc.model.sapn.orthogonal_scales == std::vector<int>{1, 2});
    CHECK(rc.model.labels.shrink_ratio == 0.4);
    CHECK(rc.model.loss.lambda2 == 2.5);
    CHECK_FALSE(rc.model.ohem.tca_inside_ta);
    CHECK(rc.train.batch_size == 3);
    CHECK(rc.train.sgd_steps == 10);
    CHECK(rc.model.inference.link_thresh == 0.7);
    CHECK(rc.model.inference.hop2 == 0);
    REQUIRE(rc.subsets.size() == 1);
    CHECK(rc.subsets[0].angle_lo == 10);
    CHECK(rc.subsets[0].angle_hi == 20);
    CHECK(rc.subsets[0].background == Background::procedural);
  }

  TEST_CASE("unknown names and bad values are errors") {
    CHECK_THROWS_WITH_AS(parse_config("[model]\nwidth = 3\n"), doctest::Contains("unknown key 'width'"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[modle]\n"), doctest::Contains("unknown section"), ConfigError);
    CHECK_THROWS_AS(parse_config("stray = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[subset.]\n"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[subset.a]\n[subset.b]\ngap = 3\n"), doctest::Contains("no keys"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[train]\nbatch_size = 4x\n"), doctest::Contains("train.batch_size"), ConfigError);
    CHECK_THROWS_AS(parse_config("[train]\nbatch_size = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[model]\nablation = most\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[model]\nstride = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[model]\ngeometric_dim = 48\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[loss]\ntca_inside_ta = maybe\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[subset.a]\nangle_range = 10\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[subset.a]\nsize_range = 40, 20\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[subset.a]\nbackground = noise\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[model\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), ConfigError);
  }
}
