#include "vstream/evaluation.h"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "vstream/errors.h"

namespace vstream {

bool windowed_correct(const DetectionResult& detection,
                      const GroundTruth& truth, int window) {
  if (window < 0) throw ValidationError("window must be >= 0");
  if (detection.stream_id != truth.stream_id) {
    throw StreamMismatch("detection for '" + detection.stream_id +
                         "' compared with truth for '" + truth.stream_id + "'");
  }
  if (!truth.kappa_star) return false;
  return std::abs(detection.kappa_hat - *truth.kappa_star) <= window;
}

std::vector<PrPoint> pr_curve(std::span<const DetectionResult> detections,
                              std::span<const GroundTruth> truths, int window) {
  std::unordered_map<std::string, const GroundTruth*> by_stream;
  std::size_t positives = 0;
  for (const auto& truth : truths) {
    if (!by_stream.emplace(truth.stream_id, &truth).second) {
      throw DuplicateStream("truth for '" + truth.stream_id +
                            "' appears more than once");
    }
    if (truth.kappa_star) ++positives;
  }
  if (positives == 0) {
    throw EmptyTruthSet("no ground-truth stream has a changepoint");
  }

  struct Scored {
    double confidence;
    bool correct;
  };
  std::vector<Scored> scored;
  scored.reserve(detections.size());
  std::unordered_set<std::string> detected;
  for (const auto& detection : detections) {
    auto it = by_stream.find(detection.stream_id);
    if (it == by_stream.end()) {
      throw StreamMismatch("no ground truth for stream '" +
                           detection.stream_id + "'");
    }
    if (!detected.insert(detection.stream_id).second) {
      throw StreamMismatch("stream '" + detection.stream_id +
                           "' has more than one detection");
    }
    scored.push_back(
        {detection.confidence, windowed_correct(detection, *it->second, window)});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) {
                     return a.confidence > b.confidence;
                   });

  std::vector<PrPoint> curve;
  std::size_t fired = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].confidence == scored[i].confidence) {
      correct += scored[j].correct ? 1 : 0;
      ++fired;
      ++j;
    }
    curve.push_back({static_cast<double>(correct) / static_cast<double>(positives),
                     static_cast<double>(correct) / static_cast<double>(fired)});
    i = j;
  }
  return curve;
}

double average_precision(std::span<const PrPoint> curve) {
  if (curve.empty()) throw ValidationError("empty precision-recall curve");
  double total = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double level = i / 10.0;
    double best = 0.0;
    for (const auto& point : curve) {
      if (point.recall >= level) best = std::max(best, point.precision);
    }
    total += best;
  }
  return 100.0 * total / 11.0;
}

EvalReport map_over_windows(std::span<const DetectionResult> detections,
                            std::span<const GroundTruth> truths,
                            std::span<const int> windows) {
  if (windows.empty()) throw ValidationError("no evaluation windows given");
  EvalReport report;
  for (int window : windows) {
    auto curve = pr_curve(detections, truths, window);
    report.ap_per_window[window] = average_precision(curve);
    report.pr_points[window] = std::move(curve);
  }
  double sum = 0.0;
  for (const auto& [window, ap] : report.ap_per_window) sum += ap;
  report.map_value = sum / static_cast<double>(report.ap_per_window.size());
  return report;
}

}  // namespace vstream
