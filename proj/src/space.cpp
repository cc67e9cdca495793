#include "fsnas/space.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "fsnas/error.hpp"

namespace fsnas {

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Zero: return "zero";
    case OpKind::Identity: return "identity";
    case OpKind::LinearRelu: return "linear_relu";
    case OpKind::LinearTanh: return "linear_tanh";
    case OpKind::DiagScale: return "diag_scale";
  }
  return "?";
}

OpKind op_kind_from_string(std::string_view name) {
  for (OpKind k : {OpKind::Zero, OpKind::Identity, OpKind::LinearRelu, OpKind::LinearTanh,
                   OpKind::DiagScale}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidSpace, "unknown op kind '" + std::string(name) + "'");
}

OpVocab make_vocab(const std::vector<std::pair<std::string, OpKind>>& ops, int hidden_width) {
  if (hidden_width < 1) throw Error(ErrorCode::InvalidSpace, "hidden width must be >= 1");
  OpVocab vocab;
  std::set<std::string> names;
  for (const auto& [name, kind] : ops) {
    if (!names.insert(name).second)
      throw Error(ErrorCode::InvalidSpace, "duplicate op name '" + name + "'");
    OpDesc op;
    op.id = static_cast<int>(vocab.size());
    op.name = name;
    op.kind = kind;
    const std::int64_t h = hidden_width;
    if (kind == OpKind::LinearRelu || kind == OpKind::LinearTanh) op.param_shape = {h, h};
    if (kind == OpKind::DiagScale) op.param_shape = {h};
    vocab.push_back(std::move(op));
  }
  return vocab;
}

OpVocab default_vocab(int m, int hidden_width) {
  static constexpr OpKind cycle[] = {OpKind::Zero, OpKind::Identity, OpKind::LinearRelu,
                                     OpKind::LinearTanh, OpKind::DiagScale};
  std::vector<std::pair<std::string, OpKind>> ops;
  for (int i = 0; i < m; ++i) {
    OpKind kind = cycle[i % 5];
    std::string name = to_string(kind);
    if (i >= 5) name += "_" + std::to_string(i / 5 + 1);
    ops.emplace_back(std::move(name), kind);
  }
  return make_vocab(ops, hidden_width);
}

int SearchSpace::edge_index(int i, int j) const {
  // Edges are ordered (1,2),(1,3),...,(1,n),(2,3),...
  int index = 0;
  for (int a = 1; a < i; ++a) index += nodes - a;
  return index + (j - i - 1);
}

SpacePtr build_space(int nodes, OpVocab vocab, int hidden_width) {
  if (nodes < 2) throw Error(ErrorCode::InvalidSpace, "node count must be >= 2");
  if (vocab.empty()) throw Error(ErrorCode::InvalidSpace, "operation vocabulary is empty");
  if (hidden_width < 1) throw Error(ErrorCode::InvalidSpace, "hidden width must be >= 1");
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i].id != static_cast<int>(i))
      throw Error(ErrorCode::InvalidSpace, "op ids must be contiguous from 0");
  }
  auto space = std::make_shared<SearchSpace>();
  space->nodes = nodes;
  space->hidden_width = hidden_width;
  space->vocab = std::move(vocab);
  for (int i = 1; i <= nodes; ++i)
    for (int j = i + 1; j <= nodes; ++j) space->edges.emplace_back(i, j);
  return space;
}

bool Region::is_singleton() const {
  return std::all_of(allowed.begin(), allowed.end(), [](const auto& a) { return a.size() == 1; });
}

Region root_region(const SpacePtr& space) {
  Region r{space, {}};
  std::vector<int> all(space->num_ops());
  for (int o = 0; o < space->num_ops(); ++o) all[o] = o;
  r.allowed.assign(space->num_edges(), all);
  return r;
}

Region region_of(const Architecture& arch) {
  Region r{arch.space, {}};
  for (int op : arch.choice) r.allowed.push_back({op});
  return r;
}

void validate_region(const Region& region) {
  if (!region.space) throw Error(ErrorCode::InvalidSpace, "region has no space");
  if (static_cast<int>(region.allowed.size()) != region.space->num_edges())
    throw Error(ErrorCode::InvalidSpace, "region edge count does not match space");
  for (std::size_t k = 0; k < region.allowed.size(); ++k) {
    const auto& a = region.allowed[k];
    if (a.empty())
      throw Error(ErrorCode::InvalidSpace, "edge " + std::to_string(k) + " has no allowed ops");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] < 0 || a[i] >= region.space->num_ops() || (i > 0 && a[i] <= a[i - 1]))
        throw Error(ErrorCode::InvalidSpace,
                    "edge " + std::to_string(k) + " allowed set is not a sorted subset of the vocabulary");
    }
  }
}

std::uint64_t region_size(const Region& region) {
  std::uint64_t size = 1;
  for (const auto& a : region.allowed) {
    if (__builtin_mul_overflow(size, static_cast<std::uint64_t>(a.size()), &size))
      throw Error(ErrorCode::InvalidSpace, "region size exceeds 64 bits");
  }
  return size;
}

std::vector<int> compound_edges(const Region& region) {
  std::vector<int> out;
  for (std::size_t k = 0; k < region.allowed.size(); ++k)
    if (region.allowed[k].size() >= 2) out.push_back(static_cast<int>(k));
  return out;
}

std::vector<Region> split_region(const Region& region, int edge) {
  if (edge < 0 || edge >= static_cast<int>(region.allowed.size()))
    throw Error(ErrorCode::InvalidSpace, "edge " + std::to_string(edge) + " out of range");
  const auto& ops = region.allowed[edge];
  if (ops.size() < 2)
    throw Error(ErrorCode::AlreadySplit, "edge " + std::to_string(edge) + " is already fixed");
  std::vector<Region> children;
  children.reserve(ops.size());
  for (int op : ops) {
    Region child = region;
    child.allowed[edge] = {op};
    children.push_back(std::move(child));
  }
  return children;
}

std::vector<Architecture> enumerate_region(const Region& region, std::uint64_t limit) {
  const std::uint64_t size = region_size(region);
  if (size > limit)
    throw Error(ErrorCode::EnumerationTooLarge, "region has " + std::to_string(size) +
                                                    " architectures, limit is " + std::to_string(limit));
  const std::size_t edges = region.allowed.size();
  std::vector<Architecture> out;
  out.reserve(size);
  std::vector<std::size_t> digit(edges, 0);
  for (std::uint64_t n = 0; n < size; ++n) {
    Architecture a{region.space, std::vector<int>(edges)};
    for (std::size_t k = 0; k < edges; ++k) a.choice[k] = region.allowed[k][digit[k]];
    out.push_back(std::move(a));
    for (std::size_t k = 0; k < edges; ++k) {
      if (++digit[k] < region.allowed[k].size()) break;
      digit[k] = 0;
    }
  }
  return out;
}

bool contains(const Region& region, const Architecture& arch) {
  if (!region.space || !arch.space || !(*region.space == *arch.space) ||
      arch.choice.size() != region.allowed.size())
    throw Error(ErrorCode::SpaceMismatch, "architecture and region belong to different spaces");
  for (std::size_t k = 0; k < arch.choice.size(); ++k) {
    if (!std::binary_search(region.allowed[k].begin(), region.allowed[k].end(), arch.choice[k]))
      return false;
  }
  return true;
}

bool is_subregion(const Region& inner, const Region& outer) {
  if (!(*inner.space == *outer.space) || inner.allowed.size() != outer.allowed.size()) return false;
  for (std::size_t k = 0; k < inner.allowed.size(); ++k) {
    if (!std::includes(outer.allowed[k].begin(), outer.allowed[k].end(), inner.allowed[k].begin(),
                       inner.allowed[k].end()))
      return false;
  }
  return true;
}

bool is_reachable(const Architecture& arch) {
  const SearchSpace& s = *arch.space;
  std::vector<bool> reach(s.nodes + 1, false);
  reach[1] = true;
  for (int j = 2; j <= s.nodes; ++j) {
    for (int i = 1; i < j; ++i) {
      const int op = arch.choice[s.edge_index(i, j)];
      if (reach[i] && s.vocab[op].kind != OpKind::Zero) reach[j] = true;
    }
  }
  return reach[s.nodes];
}

std::string encode(const Architecture& arch) {
  std::string out;
  for (std::size_t k = 0; k < arch.choice.size(); ++k) {
    if (k) out += '|';
    out += std::to_string(arch.choice[k]);
  }
  return out;
}

Architecture decode(const SpacePtr& space, std::string_view text) {
  Architecture arch{space, {}};
  const int edges = space->num_edges();
  std::size_t pos = 0;
  for (int k = 0;; ++k) {
    const std::size_t bar = text.find('|', pos);
    const std::string_view field = text.substr(pos, bar == std::string_view::npos ? text.npos : bar - pos);
    if (k >= edges)
      throw Error(ErrorCode::Parse, "edge " + std::to_string(k) + ": expected " +
                                        std::to_string(edges) + " edges in '" + std::string(text) + "'");
    int op = -1;
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), op);
    if (field.empty() || ec != std::errc{} || end != field.data() + field.size())
      throw Error(ErrorCode::Parse, "edge " + std::to_string(k) + ": malformed op id '" +
                                        std::string(field) + "'");
    if (op < 0 || op >= space->num_ops())
      throw Error(ErrorCode::Parse, "edge " + std::to_string(k) + ": op id " + std::to_string(op) +
                                        " out of range");
    arch.choice.push_back(op);
    if (bar == std::string_view::npos) break;
    pos = bar + 1;
  }
  if (static_cast<int>(arch.choice.size()) != edges)
    throw Error(ErrorCode::Parse, "edge " + std::to_string(arch.choice.size()) + ": expected " +
                                      std::to_string(edges) + " edges in '" + std::string(text) + "'");
  return arch;
}

}  // namespace fsnas
