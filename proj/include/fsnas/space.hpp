#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fsnas {

enum class OpKind { Zero, Identity, LinearRelu, LinearTanh, DiagScale };

const char* to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view name);

struct OpDesc {
  int id = 0;
  std::string name;
  OpKind kind = OpKind::Zero;
  /// Empty for zero/identity, (h, h) for linear ops, (h) for diag_scale.
  std::vector<std::int64_t> param_shape;

  bool has_params() const { return !param_shape.empty(); }
  bool operator==(const OpDesc&) const = default;
};

using OpVocab = std::vector<OpDesc>;

/// Builds a vocabulary from (name, kind) pairs, assigning ids in order.
OpVocab make_vocab(const std::vector<std::pair<std::string, OpKind>>& ops, int hidden_width);

/// The first `m` operations of the cycle zero, identity, linear_relu,
/// linear_tanh, diag_scale; repeated kinds get a numeric suffix.
OpVocab default_vocab(int m, int hidden_width);

/// Fully connected DAG over nodes 1..n with one compound edge per pair i < j.
struct SearchSpace {
  int nodes = 0;
  int hidden_width = 0;
  OpVocab vocab;
  /// (i, j) pairs, 1-based, lexicographic.
  std::vector<std::pair<int, int>> edges;

  int num_ops() const { return static_cast<int>(vocab.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  /// Canonical index of edge (i, j).
  int edge_index(int i, int j) const;

  bool operator==(const SearchSpace& other) const {
    return nodes == other.nodes && hidden_width == other.hidden_width && vocab == other.vocab;
  }
};

using SpacePtr = std::shared_ptr<const SearchSpace>;

SpacePtr build_space(int nodes, OpVocab vocab, int hidden_width);

/// One operation per edge.
struct Architecture {
  SpacePtr space;
  std::vector<int> choice;

  bool operator==(const Architecture& other) const { return choice == other.choice; }
};

/// Rectangular sub-space: a non-empty sorted set of allowed op ids per edge.
struct Region {
  SpacePtr space;
  std::vector<std::vector<int>> allowed;

  bool is_singleton() const;
  bool operator==(const Region& other) const { return allowed == other.allowed; }
};

Region root_region(const SpacePtr& space);
Region region_of(const Architecture& arch);
/// Validates allowed-set invariants; throws InvalidSpace on violation.
void validate_region(const Region& region);

/// Product of allowed-set sizes. Throws InvalidSpace if it exceeds 64 bits.
std::uint64_t region_size(const Region& region);

/// Edges whose allowed set has two or more ops, ascending.
std::vector<int> compound_edges(const Region& region);

/// One child per allowed op on `edge`, in ascending op order.
std::vector<Region> split_region(const Region& region, int edge);

/// Odometer order, edge 0 fastest. Throws EnumerationTooLarge above `limit`.
std::vector<Architecture> enumerate_region(const Region& region, std::uint64_t limit = 1u << 20);

bool contains(const Region& region, const Architecture& arch);
/// True if every allowed set of `inner` is a subset of the one in `outer`.
bool is_subregion(const Region& inner, const Region& outer);

/// True iff some path of non-zero ops joins node 1 to node n.
bool is_reachable(const Architecture& arch);

/// "o0|o1|...".
std::string encode(const Architecture& arch);
Architecture decode(const SpacePtr& space, std::string_view text);

}  // namespace fsnas
