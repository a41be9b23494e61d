#pragma once

// Command implementations behind the CLI. Each returns a process exit code
// (0 ok, 1 runtime failure) and reports failures on `err`.

#include "strokenet/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace strokenet {

struct GenerateArgs {
  fs::path config;
  int count = 0;  // per subset
  fs::path out;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  fs::path data;
  std::optional<fs::path> config;
  std::optional<Ablation> ablation;
  std::optional<std::uint64_t> seed;
  fs::path out;
  int limit = 0;  // use only the first `limit` samples when > 0
};

struct EvalArgs {
  std::optional<fs::path> checkpoint;
  std::optional<fs::path> detections;  // score an existing detections.jsonl instead
  fs::path data;
  fs::path out;
  int overlays = 0;  // overlay figures written for the first N images
  int offset = 0;    // evaluate samples [offset, offset + limit)
  int limit = 0;
};

struct AblateArgs {
  fs::path data;
  std::optional<fs::path> config;
  std::optional<fs::path> eval_data;  // default: hold out the tail of --data
  int holdout = 0;                    // tail samples held out; 0 means one seventh
  fs::path out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err);
int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err);
int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err);

// Shared pieces, exposed for tests.
std::vector<TrainSample> load_samples(const DatasetIndex& ds, int offset = 0, int limit = 0);
std::string detections_line(const std::string& image, const std::vector<TextInstance>& instances);
std::string metrics_json(const EvalReport& r);
// Parses detections.jsonl into image -> polygons.
std::vector<std::pair<std::string, std::vector<Polygon>>> read_detections(const fs::path& path);

struct AblationRow {
  Ablation ablation;
  EvalReport report;
};
std::string ablation_csv(const std::vector<AblationRow>& rows);

// Run bookkeeping: command, config path, seed, git describe, output directory
// and timestamps (SOURCE_DATE_EPOCH when set).
void write_run_manifest(const fs::path& out, const std::string& command, const std::string& config,
                        std::uint64_t seed, const json& extra = json::object());

}  // namespace strokenet
