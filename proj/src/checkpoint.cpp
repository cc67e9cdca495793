#include "fsnas/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fsnas/error.hpp"

namespace fsnas {

using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'F', 'S', 'N', 'S'};
constexpr std::size_t kHeaderBytes = 16;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t pos) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return value;
}

void put_floats(std::string& out, const float* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) put_le(out, std::bit_cast<std::uint32_t>(data[i]));
}

void get_floats(const std::string& in, std::size_t pos, float* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<float>(get_le<std::uint32_t>(in, pos + 4 * i));
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorCode::CorruptCheckpoint, "corrupt checkpoint " + path.string() + ": " + what);
}

json space_to_json(const SearchSpace& space) {
  json vocab = json::array();
  for (const auto& op : space.vocab) vocab.push_back({{"id", op.id}, {"name", op.name}, {"kind", to_string(op.kind)}});
  return {{"nodes", space.nodes}, {"hidden_width", space.hidden_width}, {"vocab", vocab}};
}

SpacePtr space_from_json(const json& j) {
  std::vector<std::pair<std::string, OpKind>> ops;
  for (const auto& op : j.at("vocab")) ops.emplace_back(op.at("name").get<std::string>(), op_kind_from_string(op.at("kind").get<std::string>()));
  const int h = j.at("hidden_width").get<int>();
  return build_space(j.at("nodes").get<int>(), make_vocab(ops, h), h);
}

struct Entry {
  std::string name;
  std::vector<std::int64_t> shape;
  std::uint64_t offset = 0;
  std::uint64_t count = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct Parsed {
  json manifest;
  std::vector<Entry> tensors;
  std::vector<Entry> state;
  std::string bytes;
  std::size_t payload_start = 0;
  std::uint32_t version = 0;
};

std::vector<Entry> parse_index(const std::filesystem::path& path, const json& list, const char* what,
                               std::uint64_t& cursor) {
  std::vector<Entry> out;
  if (!list.is_array()) corrupt(path, std::string(what) + " index is not an array");
  for (const auto& e : list) {
    Entry entry;
    try {
      entry.name = e.at("name").get<std::string>();
      entry.shape = e.at("shape").get<std::vector<std::int64_t>>();
      entry.offset = e.at("offset").get<std::uint64_t>();
      entry.count = e.at("count").get<std::uint64_t>();
    } catch (const json::exception& ex) {
      corrupt(path, std::string(what) + " index entry malformed: " + ex.what());
    }
    std::uint64_t product = 1;
    for (auto d : entry.shape) {
      if (d <= 0) corrupt(path, "tensor '" + entry.name + "' has a non-positive dimension");
      product *= static_cast<std::uint64_t>(d);
    }
    if (entry.shape.empty() || entry.shape.size() > 2)
      corrupt(path, "tensor '" + entry.name + "' must have rank 1 or 2");
    if (product != entry.count) corrupt(path, "tensor '" + entry.name + "' element count does not match its shape");
    if (entry.offset < cursor) corrupt(path, "tensor '" + entry.name + "' overlaps the previous tensor");
    if (entry.offset != cursor) corrupt(path, "tensor '" + entry.name + "' leaves a gap in the payload");
    cursor = entry.offset + 4 * entry.count;
    out.push_back(std::move(entry));
  }
  return out;
}

Parsed parse(const std::filesystem::path& path) {
  Parsed p;
  p.bytes = read_file(path);
  const std::string& b = p.bytes;
  if (b.size() < kHeaderBytes) corrupt(path, "file shorter than the header");
  if (std::memcmp(b.data(), kMagic, 4) != 0) corrupt(path, "bad magic");
  p.version = get_le<std::uint32_t>(b, 4);
  if (p.version != kCheckpointVersion)
    throw Error(ErrorCode::UnsupportedVersion,
                "checkpoint " + path.string() + " has unsupported version " + std::to_string(p.version));
  const std::uint64_t manifest_len = get_le<std::uint64_t>(b, 8);
  if (manifest_len > b.size() - kHeaderBytes) corrupt(path, "manifest length exceeds file size");
  p.payload_start = kHeaderBytes + manifest_len;
  try {
    p.manifest = json::parse(b.begin() + kHeaderBytes, b.begin() + static_cast<std::ptrdiff_t>(p.payload_start));
  } catch (const json::exception& ex) {
    corrupt(path, std::string("manifest is not valid JSON: ") + ex.what());
  }
  if (!p.manifest.is_object() || !p.manifest.contains("tensors") || !p.manifest.contains("state"))
    corrupt(path, "manifest lacks tensor or state index");
  std::uint64_t cursor = 0;
  p.tensors = parse_index(path, p.manifest["tensors"], "tensor", cursor);
  p.state = parse_index(path, p.manifest["state"], "state", cursor);
  const std::uint64_t payload = b.size() - p.payload_start;
  if (payload != cursor)
    corrupt(path, "payload length " + std::to_string(payload) + " does not match index total " + std::to_string(cursor));
  return p;
}

MatrixRM<float> read_matrix(const Parsed& p, const Entry& e) {
  MatrixRM<float> m = e.shape.size() == 1 ? MatrixRM<float>(1, e.shape[0]) : MatrixRM<float>(e.shape[0], e.shape[1]);
  get_floats(p.bytes, p.payload_start + e.offset, m.data(), e.count);
  return m;
}

}  // namespace

void save_checkpoint(const Supernet& s, const std::filesystem::path& path) {
  json manifest;
  manifest["space"] = space_to_json(*s.region.space);
  manifest["region"] = s.region.allowed;
  manifest["input_dim"] = s.input_dim;
  manifest["num_classes"] = s.num_classes;
  manifest["trained_epochs"] = s.trained_epochs;
  manifest["val_loss"] = std::isnan(s.val_loss) ? json(nullptr) : json(s.val_loss);
  manifest["seed"] = s.seed;
  manifest["rng_labels"] = rng_labels();

  std::string payload;
  std::uint64_t offset = 0;
  auto add = [&](json& index, const std::string& name, const std::vector<std::int64_t>& shape, const float* data,
                 std::size_t count) {
    index.push_back({{"name", name}, {"shape", shape}, {"offset", offset}, {"count", count}});
    put_floats(payload, data, count);
    offset += 4 * count;
  };

  json tensors = json::array();
  for (const auto& [name, t] : s.weights) add(tensors, name, t.shape, t.value.data(), t.value.size());
  json state = json::array();
  for (const auto& [name, v] : s.momentum) add(state, "momentum/" + name, s.weights.at(name).shape, v.data(), v.size());
  if (s.mixture) {
    json alpha = json::array();
    for (const auto& a : s.mixture->alpha) alpha.push_back(std::vector<float>(a.data(), a.data() + a.size()));
    manifest["alpha"] = alpha;
    manifest["alpha_step"] = s.mixture->optimizer.step;
    const auto& opt = s.mixture->optimizer;
    for (std::size_t k = 0; k < opt.m.size(); ++k) {
      const std::vector<std::int64_t> shape{opt.m[k].size()};
      add(state, "alpha_m/edge" + std::to_string(k), shape, opt.m[k].data(), opt.m[k].size());
      add(state, "alpha_v/edge" + std::to_string(k), shape, opt.v[k].data(), opt.v[k].size());
    }
  } else {
    manifest["alpha"] = nullptr;
  }
  manifest["tensors"] = tensors;
  manifest["state"] = state;

  const std::string text = manifest.dump();
  std::string bytes(kMagic, 4);
  put_le<std::uint32_t>(bytes, kCheckpointVersion);
  put_le<std::uint64_t>(bytes, text.size());
  bytes += text;
  bytes += payload;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for checkpoint " + path.string());
}

CheckpointSummary validate_checkpoint(const std::filesystem::path& path) {
  const Parsed p = parse(path);
  CheckpointSummary summary;
  summary.version = p.version;
  summary.tensor_count = p.tensors.size();
  summary.state_count = p.state.size();
  summary.payload_bytes = p.bytes.size() - p.payload_start;
  try {
    const SpacePtr space = space_from_json(p.manifest.at("space"));
    Region region{space, p.manifest.at("region").get<std::vector<std::vector<int>>>()};
    validate_region(region);
    summary.region_size = region_size(region);
    summary.trained_epochs = p.manifest.at("trained_epochs").get<int>();
    summary.has_alpha = !p.manifest.at("alpha").is_null();

    // The tensor set is fully determined by the region.
    const Supernet expected =
        init_supernet(region, p.manifest.at("input_dim").get<int>(), p.manifest.at("num_classes").get<int>(), 0);
    if (expected.weights.size() != p.tensors.size())
      corrupt(path, "tensor count " + std::to_string(p.tensors.size()) + " does not match region (" +
                        std::to_string(expected.weights.size()) + ")");
    for (const Entry& e : p.tensors) {
      const auto it = expected.weights.find(e.name);
      if (it == expected.weights.end()) corrupt(path, "unexpected tensor '" + e.name + "'");
      if (it->second.shape != e.shape) corrupt(path, "tensor '" + e.name + "' has the wrong shape");
    }
    if (summary.has_alpha) {
      const auto alpha = p.manifest.at("alpha").get<std::vector<std::vector<float>>>();
      if (alpha.size() != region.allowed.size()) corrupt(path, "alpha edge count does not match region");
      for (std::size_t k = 0; k < alpha.size(); ++k)
        if (alpha[k].size() != region.allowed[k].size())
          corrupt(path, "alpha for edge " + std::to_string(k) + " does not match allowed ops");
    }
  } catch (const json::exception& ex) {
    corrupt(path, std::string("manifest field invalid: ") + ex.what());
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::CorruptCheckpoint) throw;
    corrupt(path, ex.what());
  }
  return summary;
}

Supernet load_checkpoint(const std::filesystem::path& path) {
  validate_checkpoint(path);
  const Parsed p = parse(path);
  const json& m = p.manifest;
  Supernet s;
  s.region = Region{space_from_json(m.at("space")), m.at("region").get<std::vector<std::vector<int>>>()};
  s.input_dim = m.at("input_dim").get<int>();
  s.num_classes = m.at("num_classes").get<int>();
  s.trained_epochs = m.at("trained_epochs").get<int>();
  s.val_loss = m.at("val_loss").is_null() ? std::nan("") : m.at("val_loss").get<double>();
  s.seed = m.at("seed").get<std::uint64_t>();
  for (const Entry& e : p.tensors) s.weights.emplace(e.name, Tensor{e.shape, read_matrix(p, e)});
  if (!m.at("alpha").is_null()) {
    MixtureParams mix;
    for (const auto& a : m.at("alpha").get<std::vector<std::vector<float>>>())
      mix.alpha.push_back(Eigen::Map<const Vector<float>>(a.data(), static_cast<Eigen::Index>(a.size())));
    mix.optimizer.step = m.at("alpha_step").get<std::int64_t>();
    s.mixture = std::move(mix);
  }
  for (const Entry& e : p.state) {
    const auto slash = e.name.find('/');
    const std::string kind = e.name.substr(0, slash);
    const std::string rest = e.name.substr(slash + 1);
    if (kind == "momentum") {
      if (!s.weights.count(rest)) corrupt(path, "momentum for unknown tensor '" + rest + "'");
      s.momentum.emplace(rest, read_matrix(p, e));
    } else if ((kind == "alpha_m" || kind == "alpha_v") && s.mixture) {
      const MatrixRM<float> v = read_matrix(p, e);
      auto& list = kind == "alpha_m" ? s.mixture->optimizer.m : s.mixture->optimizer.v;
      list.push_back(v.row(0).transpose());
    } else {
      corrupt(path, "unknown state entry '" + e.name + "'");
    }
  }
  return s;
}

namespace {

std::string member_file(int level, std::size_t index) {
  return "L" + std::to_string(level) + "_N" + std::to_string(index) + ".fsns";
}

}  // namespace

void save_tree(const SupernetTree& tree, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json levels = json::array();
  for (std::size_t l = 0; l < tree.levels.size(); ++l) {
    json files = json::array();
    for (std::size_t i = 0; i < tree.levels[l].size(); ++i) {
      const std::string file = member_file(static_cast<int>(l), i);
      save_checkpoint(tree.levels[l][i], dir / file);
      files.push_back(file);
    }
    levels.push_back(files);
  }
  json manifest = {{"format", "fsns-tree"},
                   {"version", kCheckpointVersion},
                   {"space", space_to_json(*tree.space)},
                   {"split_history", tree.split_history},
                   {"spent_epochs", tree.spent_epochs},
                   {"level_cost", tree.level_cost},
                   {"mode", to_string(tree.mode)},
                   {"seed", tree.seed},
                   {"levels", levels}};
  std::ofstream out(dir / "tree-manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "tree-manifest.json").string());
  out << manifest.dump(2) << '\n';
}

SupernetTree load_tree(const std::filesystem::path& dir) {
  const auto path = dir / "tree-manifest.json";
  json m;
  try {
    m = json::parse(read_file(path));
  } catch (const json::exception& ex) {
    corrupt(path, std::string("tree manifest is not valid JSON: ") + ex.what());
  }
  SupernetTree tree;
  try {
    if (m.at("version").get<std::uint32_t>() != kCheckpointVersion)
      throw Error(ErrorCode::UnsupportedVersion, "tree manifest " + path.string() + " has unsupported version");
    tree.space = space_from_json(m.at("space"));
    tree.split_history = m.at("split_history").get<std::vector<int>>();
    tree.spent_epochs = m.at("spent_epochs").get<std::int64_t>();
    tree.level_cost = m.at("level_cost").get<std::vector<std::int64_t>>();
    tree.mode = train_mode_from_string(m.at("mode").get<std::string>());
    tree.seed = m.at("seed").get<std::uint64_t>();
    for (const auto& files : m.at("levels")) {
      std::vector<Supernet> level;
      for (const auto& f : files) {
        Supernet s = load_checkpoint(dir / f.get<std::string>());
        if (!(*s.region.space == *tree.space)) corrupt(path, "member " + f.get<std::string>() + " uses another space");
        s.region.space = tree.space;
        level.push_back(std::move(s));
      }
      tree.levels.push_back(std::move(level));
    }
  } catch (const json::exception& ex) {
    corrupt(path, std::string("tree manifest field invalid: ") + ex.what());
  }
  if (tree.levels.empty() || tree.levels.size() != tree.split_history.size() + 1 ||
      tree.level_cost.size() != tree.levels.size())
    corrupt(path, "level count does not match split history");
  return tree;
}

}  // namespace fsnas
