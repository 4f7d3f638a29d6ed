#ifndef VSTREAM_GRADCHECK_H_
#define VSTREAM_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace vstream {

struct GradCheckRow {
  std::string name;
  int instances = 0;
  // Max relative error for finite-difference rows, max absolute error for
  // the REINFORCE row.
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  bool all_passed() const;
};

inline constexpr double kGradientTolerance = 1e-4;
inline constexpr double kReinforceTolerance = 1e-9;

// Random toy instances for every differentiable loss, checked with central
// differences (epsilon 1e-5), plus the REINFORCE enumeration check over
// vocab <= 4 and caption length <= 3 against a five-point derivative of the
// exact expected reward. Instance i of every row draws from hash64(seed, i).
GradCheckReport run_gradient_suite(std::uint64_t seed, int instances);

std::string format_gradcheck_report(const GradCheckReport& report);

}  // namespace vstream

#endif  // VSTREAM_GRADCHECK_H_
