#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsnas {

struct TraceStep {
  int index = 0;  // 1-based
  std::string encoding;
  double proxy_score = 0.0;
};

/// Every architecture a search evaluated, in order.
struct SearchTrace {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string evaluator;
  std::vector<TraceStep> steps;
};

}  // namespace fsnas
