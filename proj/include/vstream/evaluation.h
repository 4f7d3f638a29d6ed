#ifndef VSTREAM_EVALUATION_H_
#define VSTREAM_EVALUATION_H_

#include <map>
#include <span>
#include <vector>

#include "vstream/core_model.h"

namespace vstream {

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

struct EvalReport {
  std::map<int, std::vector<PrPoint>> pr_points;  // by window
  std::map<int, double> ap_per_window;            // in [0, 100]
  double map_value = 0.0;
};

inline constexpr int kDefaultWindows[] = {0, 1, 2, 3, 4};

// True iff the truth has a changepoint and |kappa_hat - kappa*| <= window.
// Throws StreamMismatch if the stream ids differ, ValidationError if
// window < 0.
bool windowed_correct(const DetectionResult& detection,
                      const GroundTruth& truth, int window);

// Detections are swept by descending confidence; detections sharing a
// confidence enter together and yield one point. At each threshold,
// precision = correct / fired and recall = correct / (streams in `truths`
// with a changepoint). Throws StreamMismatch for a detection without truth
// or a stream detected twice, EmptyTruthSet when no truth has a changepoint.
std::vector<PrPoint> pr_curve(std::span<const DetectionResult> detections,
                              std::span<const GroundTruth> truths, int window);

// 11-point interpolated AP (recall 0.0, 0.1, ..., 1.0), scaled to [0, 100].
// Interpolated precision at r is the best precision at recall >= r, or 0.
double average_precision(std::span<const PrPoint> curve);

EvalReport map_over_windows(std::span<const DetectionResult> detections,
                            std::span<const GroundTruth> truths,
                            std::span<const int> windows = kDefaultWindows);

}  // namespace vstream

#endif  // VSTREAM_EVALUATION_H_
