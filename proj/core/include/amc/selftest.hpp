#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace amc {

struct SelfTestResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runtime invariant suite behind `amc selftest`: constellation geometry,
/// channel algebra, sampler statistics, cache consistency, chain contracts
/// and harness aggregation. Each check is seeded from `seed`.
std::vector<SelfTestResult> run_selftest(std::uint64_t seed,
                                         const std::function<void(const SelfTestResult&)>& on_result = {});

}  // namespace amc
