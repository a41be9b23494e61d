#include "strokenet/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace strokenet;

int main(int argc, char** argv) {
  CLI::App app{"StrokeNet desk-scale scene text detector"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Render a synthetic dataset");
  g->add_option("--config", gen.config, "INI file with [subset.NAME] sections")->required()->check(CLI::ExistingFile);
  g->add_option("--count", gen.count, "Samples per subset")->required()->check(CLI::PositiveNumber);
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed, "Base seed");

  TrainArgs tr;
  std::string tr_ablation;
  std::uint64_t tr_seed = 0;
  std::string tr_config;
  auto* t = app.add_subcommand("train", "Train one ablation");
  t->add_option("--data", tr.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--config", tr_config, "INI run configuration")->check(CLI::ExistingFile);
  t->add_option("--ablation", tr_ablation, "tlp, tlp_slp, tlp_tg or full")
      ->check(CLI::IsMember({"tlp", "tlp_slp", "tlp_tg", "full"}));
  auto* tseed = t->add_option("--seed", tr_seed, "Overrides [train] seed");
  t->add_option("--limit", tr.limit, "Use only the first N samples")->check(CLI::NonNegativeNumber);
  t->add_option("--out", tr.out, "Output directory")->required();

  EvalArgs ev;
  std::string ev_ckpt;
  std::string ev_det;
  auto* e = app.add_subcommand("eval", "Run inference and score a dataset");
  auto* eckpt = e->add_option("--checkpoint", ev_ckpt, "Model checkpoint")->check(CLI::ExistingFile);
  auto* edet = e->add_option("--detections", ev_det, "Score this detections.jsonl instead of running a model")
                   ->check(CLI::ExistingFile);
  eckpt->excludes(edet);
  e->add_option("--data", ev.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--out", ev.out, "Output directory")->required();
  e->add_option("--overlays", ev.overlays, "Overlay figures for the first N images")->check(CLI::NonNegativeNumber);
  e->add_option("--offset", ev.offset, "First sample to evaluate")->check(CLI::NonNegativeNumber);
  e->add_option("--limit", ev.limit, "Number of samples (0 = all)")->check(CLI::NonNegativeNumber);

  AblateArgs ab;
  std::string ab_config;
  std::string ab_eval;
  auto* a = app.add_subcommand("ablate", "Train and evaluate all four ablation rows");
  a->add_option("--data", ab.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  a->add_option("--config", ab_config, "INI run configuration")->check(CLI::ExistingFile);
  a->add_option("--eval-data", ab_eval, "Held-out dataset (default: tail of --data)")->check(CLI::ExistingDirectory);
  a->add_option("--holdout", ab.holdout, "Tail samples held out of --data (0 = one seventh)")
      ->check(CLI::NonNegativeNumber);
  a->add_option("--out", ab.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  if (*g) return cmd_generate(gen, std::cout, std::cerr);
  if (*t) {
    if (!tr_config.empty()) tr.config = tr_config;
    if (!tr_ablation.empty()) tr.ablation = parse_ablation(tr_ablation);
    if (*tseed) tr.seed = tr_seed;
    return cmd_train(tr, std::cout, std::cerr);
  }
  if (*e) {
    if (!ev_ckpt.empty()) ev.checkpoint = ev_ckpt;
    if (!ev_det.empty()) ev.detections = ev_det;
    if (!ev.checkpoint && !ev.detections) {
      std::cerr << "eval: one of --checkpoint or --detections is required\n";
      return 2;
    }
    return cmd_eval(ev, std::cout, std::cerr);
  }
  if (!ab_config.empty()) ab.config = ab_config;
  if (!ab_eval.empty()) ab.eval_data = ab_eval;
  return cmd_ablate(ab, std::cout, std::cerr);
}
