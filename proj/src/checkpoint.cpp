#include "strokenet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace strokenet {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'K', 'N'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& os, const std::string& s) {
  put(os, static_cast<std::uint64_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& is, const fs::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("truncated checkpoint " + path.string());
  return v;
}

std::string get_string(std::istream& is, const fs::path& path) {
  const auto n = get<std::uint64_t>(is, path);
  if (n > (1ull << 30)) throw std::runtime_error("corrupt checkpoint " + path.string());
  std::string s(n, '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(n))) throw std::runtime_error("truncated checkpoint " + path.string());
  return s;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

struct Header {
  std::uint64_t hash = 0;
  ModelConfig config;
};

Header read_header(std::istream& is, const fs::path& path) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path.string() + " is not a checkpoint");
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Header h;
  h.hash = get<std::uint64_t>(is, path);
  for (int i = 0; i < 6; ++i) get<double>(is, path);  // loss weights, echoed in the config
  h.config = ModelConfig::from_json(json::parse(get_string(is, path)));
  return h;
}

void read_tensors(std::istream& is, const fs::path& path, ParamStore& store) {
  const auto count = get<std::uint64_t>(is, path);
  if (count != store.size())
    throw std::runtime_error("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                             std::to_string(store.size()));
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = get_string(is, path);
    const auto rows = get<std::uint64_t>(is, path);
    const auto cols = get<std::uint64_t>(is, path);
    if (!store.contains(name)) throw std::runtime_error("checkpoint tensor '" + name + "' is not a model parameter");
    Param& p = store.get(name);
    if (static_cast<std::uint64_t>(p.value.rows()) != rows || static_cast<std::uint64_t>(p.value.cols()) != cols)
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                               std::to_string(cols));
    if (!is.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(rows * cols * sizeof(double))))
      throw std::runtime_error("truncated checkpoint " + path.string());
  }
}

}  // namespace

void save_checkpoint(const Model& model, const fs::path& path) {
  const ModelConfig& cfg = model.config();
  std::ostringstream os;
  os.write(kMagic, 4);
  put(os, kCheckpointVersion);
  put(os, cfg.hash());
  for (double w : {cfg.loss.lambda1, cfg.loss.lambda2, cfg.loss.lambda3, cfg.loss.lambda4, cfg.loss.lambda5,
                   cfg.linkage_weight})
    put(os, w);
  put_string(os, cfg.to_json().dump());
  const auto params = model.params().all();
  put(os, static_cast<std::uint64_t>(params.size()));
  for (const Param* p : params) {
    put_string(os, p->name);
    put(os, static_cast<std::uint64_t>(p->value.rows()));
    put(os, static_cast<std::uint64_t>(p->value.cols()));
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  write_text(path, os.str());
}

std::unique_ptr<Model> load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  const Header h = read_header(is, path);
  if (h.hash != h.config.hash())
    throw IncompatibleCheckpoint("checkpoint hash " + hex(h.hash) + " does not match its configuration hash " +
                                 hex(h.config.hash()));
  auto model = std::make_unique<Model>(h.config, 0);
  read_tensors(is, path, model->params());
  return model;
}

void load_checkpoint_into(Model& model, const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  const Header h = read_header(is, path);
  if (h.hash != model.config().hash())
    throw IncompatibleCheckpoint("incompatible checkpoint: file hash " + hex(h.hash) + ", model hash " +
                                 hex(model.config().hash()));
  read_tensors(is, path, model.params());
}

std::string file_digest(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return hex(h);
}

}  // namespace strokenet
