#include "strokenet/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <functional>
#include <map>
#include <sstream>

namespace strokenet {

namespace {

namespace pt = boost::property_tree;

using Setter = std::function<void(const std::string&)>;
using KeyTable = std::map<std::string, Setter>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument(v);
  return d;
}

int to_int(const std::string& v) {
  std::size_t used = 0;
  const int i = std::stoi(v, &used);
  if (used != v.size()) throw std::invalid_argument(v);
  return i;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument(v);
}

template <typename T, typename Conv>
std::vector<T> to_list(const std::string& v, Conv conv) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(conv(trim(item)));
  return out;
}

template <typename T, typename Conv>
void to_pair(const std::string& v, T& lo, T& hi, Conv conv) {
  const auto xs = to_list<T>(v, conv);
  if (xs.size() != 2) throw std::invalid_argument(v);
  lo = xs[0];
  hi = xs[1];
}

Setter real(double& d) { return [&d](const std::string& v) { d = to_double(v); }; }
Setter integer(int& i) { return [&i](const std::string& v) { i = to_int(v); }; }
Setter flag(bool& b) { return [&b](const std::string& v) { b = to_bool(v); }; }

KeyTable model_keys(ModelConfig& m) {
  return {
      {"ablation", [&m](const std::string& v) { m.ablation = parse_ablation(v); }},
      {"backbone_width", integer(m.sapn.backbone_width)},
      {"stride", integer(m.sapn.stride)},
      {"head_hidden", integer(m.sapn.head_hidden)},
      {"internal_width", integer(m.sapn.internal_width)},
      {"attention_width", integer(m.sapn.attention_width)},
      {"orthogonal_scales", [&m](const std::string& v) { m.sapn.orthogonal_scales = to_list<int>(v, to_int); }},
      {"geometric_dim", integer(m.hrgn.geometric_dim)},
      {"content_dim", integer(m.hrgn.content_dim)},
      {"roi_grid", integer(m.hrgn.roi_grid)},
      {"graph_layers", integer(m.hrgn.graph_layers)},
      {"stroke_knn", integer(m.hrgn.stroke_knn)},
      {"leaky_slope", real(m.hrgn.leaky_slope)},
  };
}

KeyTable label_keys(LabelOptions& l) {
  return {{"shrink_ratio", real(l.shrink_ratio)}, {"end_trim", real(l.end_trim)}};
}

KeyTable loss_keys(ModelConfig& m) {
  return {
      {"lambda1", real(m.loss.lambda1)},          {"lambda2", real(m.loss.lambda2)},
      {"lambda3", real(m.loss.lambda3)},          {"lambda4", real(m.loss.lambda4)},
      {"lambda5", real(m.loss.lambda5)},          {"linkage_weight", real(m.linkage_weight)},
      {"ohem_ratio", real(m.ohem.negative_ratio)}, {"ohem_fallback", integer(m.ohem.fallback_negatives)},
      {"tca_inside_ta", flag(m.ohem.tca_inside_ta)},
  };
}

KeyTable train_keys(TrainConfig& t) {
  return {
      {"seed", [&t](const std::string& v) { t.seed = std::stoull(v); }},
      {"batch_size", integer(t.batch_size)},
      {"flip_prob", real(t.flip_prob)},
      {"clip_norm", real(t.clip_norm)},
      {"adam_steps", integer(t.adam_steps)},
      {"adam_lr", real(t.adam_lr)},
      {"beta1", real(t.beta1)},
      {"beta2", real(t.beta2)},
      {"eps", real(t.eps)},
      {"sgd_steps", integer(t.sgd_steps)},
      {"sgd_lr", real(t.sgd_lr)},
      {"momentum", real(t.momentum)},
      {"decay", real(t.decay)},
      {"decay_every", integer(t.decay_every)},
      {"max_strokes", integer(t.sample.max_strokes)},
      {"max_pivots", integer(t.sample.max_pivots)},
      {"jitter", real(t.sample.jitter)},
  };
}

KeyTable inference_keys(InferenceOptions& o) {
  return {
      {"ta_thresh", real(o.ta_thresh)},
      {"tca_thresh", real(o.tca_thresh)},
      {"nms_iou", real(o.nms_iou)},
      {"stroke_shrink", real(o.stroke_shrink)},
      {"stroke_keep", real(o.stroke_keep)},
      {"link_thresh", real(o.link_thresh)},
      {"hop1", integer(o.hop1)},
      {"hop2", integer(o.hop2)},
      {"max_stroke_links", integer(o.max_stroke_links)},
      {"end_slack", real(o.end_slack)},
      {"min_area", real(o.min_area)},
      {"min_score", real(o.min_score)},
  };
}

KeyTable subset_keys(GenConfig& g) {
  return {
      {"font_set", [&g](const std::string& v) { g.font_set = to_list<int>(v, to_int); }},
      {"angle_range", [&g](const std::string& v) { to_pair(v, g.angle_lo, g.angle_hi, to_double); }},
      {"size_range", [&g](const std::string& v) { to_pair(v, g.size_lo, g.size_hi, to_double); }},
      {"word_len_range", [&g](const std::string& v) { to_pair(v, g.min_word_len, g.max_word_len, to_int); }},
      {"words_per_image", [&g](const std::string& v) { to_pair(v, g.words_lo, g.words_hi, to_int); }},
      {"canvas", [&g](const std::string& v) { to_pair(v, g.width, g.height, to_int); }},
      {"alpha_count", integer(g.alpha_count)},
      {"digit_count", integer(g.digit_count)},
      {"background",
       [&g](const std::string& v) {
         if (v == "plain")
           g.background = Background::plain;
         else if (v == "procedural")
           g.background = Background::procedural;
         else
           throw std::invalid_argument(v);
       }},
      {"min_contrast", real(g.min_contrast)},
      {"max_tries", integer(g.max_tries)},
      {"gap", real(g.gap)},
  };
}

void apply(const pt::ptree& section, const std::string& name, const KeyTable& keys, const std::string& origin) {
  for (const auto& [key, node] : section) {
    auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(origin + ": unknown key '" + key + "' in [" + name + "]");
    const std::string value = trim(node.data());
    try {
      it->second(value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(origin + ": bad value '" + value + "' for " + name + "." + key);
    }
  }
}

bool known_section(const std::string& name) {
  return name == "model" || name == "labels" || name == "loss" || name == "train" || name == "inference" ||
         (name.rfind("subset.", 0) == 0 && name.size() > 7);
}

// read_ini drops sections without keys, so headers are checked on the raw text.
// Returns the number of subset headers.
std::size_t check_headers(const std::string& text, const std::string& origin) {
  std::size_t subsets = 0;
  std::istringstream in(text);
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    line = trim(line);
    if (line.empty() || line[0] != '[') continue;
    const auto end = line.find(']');
    if (end == std::string::npos) continue;  // read_ini reports it
    const std::string name = trim(line.substr(1, end - 1));
    if (!known_section(name)) throw ConfigError(origin + ":" + std::to_string(no) + ": unknown section [" + name + "]");
    if (name.rfind("subset.", 0) == 0) ++subsets;
  }
  return subsets;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  const std::size_t subset_headers = check_headers(text, origin);
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig rc;
  for (const auto& [name, section] : tree) {
    if (!section.data().empty()) throw ConfigError(origin + ": key '" + name + "' outside any section");
    if (name == "model") {
      apply(section, name, model_keys(rc.model), origin);
    } else if (name == "labels") {
      apply(section, name, label_keys(rc.model.labels), origin);
    } else if (name == "loss") {
      apply(section, name, loss_keys(rc.model), origin);
    } else if (name == "train") {
      apply(section, name, train_keys(rc.train), origin);
    } else if (name == "inference") {
      apply(section, name, inference_keys(rc.model.inference), origin);
    } else if (known_section(name)) {
      GenConfig g;
      g.id = name.substr(7);
      apply(section, name, subset_keys(g), origin);
      rc.subsets.push_back(g);
    } else {
      throw ConfigError(origin + ": unknown section [" + name + "]");
    }
  }
  if (rc.subsets.size() != subset_headers) throw ConfigError(origin + ": a [subset.NAME] section has no keys");
  rc.model.hrgn.feature_channels = rc.model.sapn.backbone_width;
  try {
    for (const GenConfig& g : rc.subsets) g.validate();
    rc.train.validate();
    const auto& s = rc.model.sapn;
    if (s.stride != 1 && s.stride != 2 && s.stride != 4) throw std::invalid_argument("model: stride must be 1, 2 or 4");
    if (s.backbone_width < 1 || s.head_hidden < 1 || s.internal_width < 4 || s.attention_width < 1 ||
        s.orthogonal_scales.empty())
      throw std::invalid_argument("model: widths must be positive");
    if (rc.model.hrgn.geometric_dim < 32 || rc.model.hrgn.geometric_dim % 32 != 0)
      throw std::invalid_argument("model: geometric_dim must be a positive multiple of 32");
    if (rc.model.hrgn.content_dim < 1 || rc.model.hrgn.roi_grid < 1 || rc.model.hrgn.graph_layers < 1)
      throw std::invalid_argument("model: graph sizes must be positive");
    const auto& o = rc.model.inference;
    if (o.hop1 < 1 || o.hop2 < 0 || o.max_stroke_links < 0) throw std::invalid_argument("inference: bad hop sizes");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return rc;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_config(read_text(path), path.string());
}

}  // namespace strokenet
