#include <set>

#include "doctest.h"
#include "fsnas/error.hpp"
#include "fsnas/rng.hpp"
#include "fsnas/space.hpp"

using namespace fsnas;

namespace {

SpacePtr make_space(int n, int m, int h = 4) { return build_space(n, default_vocab(m, h), h); }

// Random sub-region: each edge keeps a random non-empty subset.
Region random_region(const SpacePtr& space, RngStream& rng) {
  Region r = root_region(space);
  for (auto& allowed : r.allowed) {
    std::vector<int> kept;
    for (int op : allowed)
      if (rng.below(2)) kept.push_back(op);
    if (kept.empty()) kept.push_back(allowed[rng.below(allowed.size())]);
    allowed = kept;
  }
  return r;
}

}  // namespace

TEST_CASE("build_space enumerates edges lexicographically") {
  const auto s = make_space(4, 5);
  CHECK(s->num_edges() == 6);
  CHECK(s->edges.front() == std::pair{1, 2});
  CHECK(s->edges[2] == std::pair{1, 4});
  CHECK(s->edges[3] == std::pair{2, 3});
  for (int k = 0; k < s->num_edges(); ++k) CHECK(s->edge_index(s->edges[k].first, s->edges[k].second) == k);

  const auto tiny = make_space(2, 1);
  CHECK(tiny->num_edges() == 1);
  CHECK(region_size(root_region(tiny)) == 1);
  CHECK(make_space(3, 6)->num_edges() == 3);
}

TEST_CASE("build_space rejects degenerate inputs") {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Usage;
  };
  CHECK(code([] { build_space(1, default_vocab(5, 4), 4); }) == ErrorCode::InvalidSpace);
  CHECK(code([] { build_space(3, {}, 4); }) == ErrorCode::InvalidSpace);
}

TEST_CASE("vocabulary parameter shapes") {
  const auto v = default_vocab(5, 16);
  CHECK(v[0].param_shape.empty());
  CHECK(v[1].param_shape.empty());
  CHECK(v[2].param_shape == std::vector<std::int64_t>{16, 16});
  CHECK(v[3].param_shape == std::vector<std::int64_t>{16, 16});
  CHECK(v[4].param_shape == std::vector<std::int64_t>{16});
  const auto six = default_vocab(6, 16);
  CHECK(six[5].name == "zero_2");
}

TEST_CASE("region sizes") {
  CHECK(region_size(root_region(make_space(4, 5))) == 15625);
  // Four edges need n with n(n-1)/2 = 4, which does not exist; count the
  // 1296 case on a region of a 4-node space restricted to four compound edges.
  Region r = root_region(make_space(4, 6));
  r.allowed[4] = {0};
  r.allowed[5] = {0};
  CHECK(region_size(r) == 1296);
  const auto s = make_space(3, 5);
  CHECK(region_size(region_of(Architecture{s, {1, 2, 3}})) == 1);
}

TEST_CASE("counting law matches enumeration for n <= 5, m <= 6") {
  for (int n = 2; n <= 5; ++n) {
    for (int m = 1; m <= 6; ++m) {
      const auto s = make_space(n, m);
      std::uint64_t expected = 1;
      for (int e = 0; e < n * (n - 1) / 2; ++e) expected *= static_cast<std::uint64_t>(m);
      CHECK(region_size(root_region(s)) == expected);
      if (expected <= 50000) CHECK(enumerate_region(root_region(s), 50000).size() == expected);
    }
  }
}

TEST_CASE("split_region") {
  const auto s = make_space(4, 5);
  const Region root = root_region(s);
  const auto children = split_region(root, 0);
  CHECK(children.size() == 5);
  std::uint64_t total = 0;
  for (const auto& c : children) total += region_size(c);
  CHECK(total == 15625);

  std::size_t leaves = 0;
  for (const auto& c : children) leaves += split_region(c, 1).size();
  CHECK(leaves == 25);

  CHECK_THROWS_AS(split_region(children[0], 0), Error);
  try {
    split_region(children[0], 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlreadySplit);
  }
}

TEST_CASE("partition law on random regions (property)") {
  const auto s = make_space(3, 5);
  RngStream rng(7, "test/partition");
  for (int trial = 0; trial < 200; ++trial) {
    const Region r = random_region(s, rng);
    const auto open = compound_edges(r);
    if (open.empty()) continue;
    const int edge = open[rng.below(open.size())];
    const auto children = split_region(r, edge);
    std::uint64_t sum = 0;
    for (const auto& c : children) {
      CHECK(is_subregion(c, r));
      sum += region_size(c);
    }
    CHECK(sum == region_size(r));
    for (const auto& a : enumerate_region(r)) {
      int hits = 0;
      for (const auto& c : children) hits += contains(c, a);
      CHECK(hits == 1);
    }
  }
}

TEST_CASE("enumerate_region order and uniqueness") {
  const auto s2 = make_space(3, 2);
  const auto all = enumerate_region(root_region(s2));
  REQUIRE(all.size() == 8);
  CHECK(all.front().choice == std::vector<int>{0, 0, 0});
  CHECK(all[1].choice == std::vector<int>{1, 0, 0});
  CHECK(all.back().choice == std::vector<int>{1, 1, 1});

  const auto s5 = make_space(3, 5);
  std::set<std::string> seen;
  for (const auto& a : enumerate_region(root_region(s5))) seen.insert(encode(a));
  CHECK(seen.size() == 125);

  const Architecture single{s5, {4, 0, 2}};
  const auto one = enumerate_region(region_of(single));
  REQUIRE(one.size() == 1);
  CHECK(one[0] == single);

  CHECK_THROWS_AS(enumerate_region(root_region(make_space(5, 6)), 1000), Error);
}

TEST_CASE("contains and routing uniqueness after a split") {
  const auto s = make_space(3, 5);
  const Region root = root_region(s);
  const auto children = split_region(root, 0);
  CHECK_FALSE(contains(children[2], Architecture{s, {3, 0, 0}}));
  CHECK(contains(children[2], Architecture{s, {2, 4, 1}}));
  for (const auto& a : enumerate_region(root)) {
    CHECK(contains(root, a));
    int hits = 0;
    for (const auto& c : children) hits += contains(c, a);
    CHECK(hits == 1);
  }
  const auto other = make_space(4, 5);
  CHECK_THROWS_AS(contains(root, Architecture{other, std::vector<int>(6, 0)}), Error);
}

TEST_CASE("codec") {
  const auto s = make_space(3, 5);
  CHECK(encode(Architecture{s, {2, 0, 1}}) == "2|0|1");
  for (const auto& a : enumerate_region(root_region(s))) CHECK(decode(s, encode(a)) == a);

  auto parse_message = [&](const char* text) {
    try {
      decode(s, text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(parse_message("2|0").find("edge 2") != std::string::npos);
  CHECK(parse_message("2|0|1|3").find("edge 3") != std::string::npos);
  CHECK(parse_message("2|x|1").find("edge 1") != std::string::npos);
  CHECK(parse_message("2|0|9").find("edge 2") != std::string::npos);
  CHECK(parse_message("").find("edge 0") != std::string::npos);
}

TEST_CASE("reachability flag") {
  const auto s = make_space(3, 5);
  // edges: 0=(1,2) 1=(1,3) 2=(2,3); op 0 = zero
  CHECK_FALSE(is_reachable(Architecture{s, {0, 0, 0}}));
  CHECK_FALSE(is_reachable(Architecture{s, {1, 0, 0}}));
  CHECK_FALSE(is_reachable(Architecture{s, {0, 0, 3}}));
  CHECK(is_reachable(Architecture{s, {1, 0, 1}}));
  CHECK(is_reachable(Architecture{s, {0, 4, 0}}));
  int unreachable = 0;
  for (const auto& a : enumerate_region(root_region(s))) unreachable += !is_reachable(a);
  // e13 = zero and (e12 = zero or e23 = zero): 5 + 5 - 1
  CHECK(unreachable == 9);
}
