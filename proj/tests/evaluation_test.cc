#include "vstream/evaluation.h"

#include <gtest/gtest.h>

#include "oracles.h"
#include "vstream/detectors.h"
#include "vstream/errors.h"
#include "vstream/simulator.h"

namespace vstream {
namespace {

DetectionResult det(std::string id, int kappa, double confidence) {
  return {std::move(id), Method::kRc, kappa, confidence, {}};
}

TEST(WindowedCorrect, Examples) {
  EXPECT_TRUE(windowed_correct(det("s", 3, 0), {"s", 3}, 0));
  EXPECT_FALSE(windowed_correct(det("s", 5, 0), {"s", 3}, 1));
  EXPECT_TRUE(windowed_correct(det("s", 5, 0), {"s", 3}, 2));
  for (int w = 0; w < 10; ++w) EXPECT_FALSE(windowed_correct(det("s", 5, 0), {"s", std::nullopt}, w));
  EXPECT_THROW(windowed_correct(det("a", 1, 0), {"b", 1}, 0), StreamMismatch);
  EXPECT_THROW(windowed_correct(det("a", 1, 0), {"a", 1}, -1), ValidationError);
}

TEST(PrCurve, AllCorrect) {
  const std::vector<DetectionResult> dets{det("a", 1, 0.9), det("b", 2, 0.8)};
  const std::vector<GroundTruth> truths{{"a", 1}, {"b", 2}};
  EXPECT_EQ(pr_curve(dets, truths, 0), (std::vector<PrPoint>{{0.5, 1.0}, {1.0, 1.0}}));
  EXPECT_EQ(average_precision(pr_curve(dets, truths, 0)), 100.0);
}

TEST(PrCurve, NoChangeStreamFiresFirst) {
  const std::vector<DetectionResult> dets{det("a", 1, 0.2), det("n", 4, 0.9)};
  const std::vector<GroundTruth> truths{{"a", 1}, {"n", std::nullopt}};
  const auto curve = pr_curve(dets, truths, 0);
  EXPECT_EQ(curve, (std::vector<PrPoint>{{0.0, 0.0}, {1.0, 0.5}}));
  EXPECT_DOUBLE_EQ(average_precision(curve), 50.0);
}

TEST(PrCurve, AllIncorrect) {
  const std::vector<DetectionResult> dets{det("a", 3, 0.2), det("b", 4, 0.9)};
  const std::vector<GroundTruth> truths{{"a", 1}, {"b", 1}};
  for (const auto& p : pr_curve(dets, truths, 1)) EXPECT_EQ(p.precision, 0.0);
  EXPECT_EQ(average_precision(pr_curve(dets, truths, 1)), 0.0);
}

TEST(PrCurve, TiesEnterTogether) {
  const std::vector<DetectionResult> dets{det("a", 1, 0.5), det("b", 9, 0.5), det("c", 1, 0.1)};
  const std::vector<GroundTruth> truths{{"a", 1}, {"b", 1}, {"c", 1}};
  const auto curve = pr_curve(dets, truths, 0);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_DOUBLE_EQ(curve[0].recall, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve[0].precision, 0.5);
}

TEST(PrCurve, Errors) {
  const std::vector<GroundTruth> none{{"a", std::nullopt}};
  EXPECT_THROW(pr_curve(std::vector<DetectionResult>{det("a", 1, 0.1)}, none, 0), EmptyTruthSet);
  const std::vector<GroundTruth> truths{{"a", 1}};
  EXPECT_THROW(pr_curve(std::vector<DetectionResult>{det("z", 1, 0.1)}, truths, 0), StreamMismatch);
  EXPECT_THROW(pr_curve(std::vector<DetectionResult>{det("a", 1, 0.1), det("a", 1, 0.2)}, truths, 0),
               StreamMismatch);
}

TEST(AveragePrecision, EmptyCorrect) {
  EXPECT_EQ(average_precision(std::vector<PrPoint>{{0.0, 0.0}}), 0.0);
}

class RandomEval : public ::testing::Test {
 protected:
  void SetUp() override {
    CounterRng rng(21);
    for (int i = 0; i < 300; ++i) {
      const std::string id = "s" + std::to_string(i);
      const bool change = rng.uniform() < 0.8;
      const int kappa = 1 + static_cast<int>(rng.below(8));
      truths.push_back({id, change ? std::optional<int>(kappa) : std::nullopt});
      const int hat = 1 + static_cast<int>(rng.below(8));
      // Coarse confidences make ties common.
      dets.push_back(det(id, rng.uniform() < 0.5 ? kappa : hat,
                         std::floor(rng.uniform() * 20) / 20));
    }
  }
  std::vector<GroundTruth> truths;
  std::vector<DetectionResult> dets;
};

TEST_F(RandomEval, MatchesOracle) {
  for (int w = 0; w <= 4; ++w) {
    const auto curve = pr_curve(dets, truths, w);
    const auto expected = oracle::pr_points(dets, truths, w);
    ASSERT_EQ(curve.size(), expected.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
      EXPECT_DOUBLE_EQ(curve[i].recall, expected[i].recall);
      EXPECT_DOUBLE_EQ(curve[i].precision, expected[i].precision);
    }
    EXPECT_NEAR(average_precision(curve), oracle::eleven_point_ap(expected), 1e-12);
  }
}

TEST_F(RandomEval, RecallNonDecreasingAndApMonotone) {
  const auto report = map_over_windows(dets, truths);
  double prev_ap = -1.0;
  double sum = 0.0;
  for (int w = 0; w <= 4; ++w) {
    const auto& curve = report.pr_points.at(w);
    for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GE(curve[i].recall, curve[i - 1].recall);
    const double ap = report.ap_per_window.at(w);
    EXPECT_GE(ap, prev_ap);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 100.0);
    prev_ap = ap;
    sum += ap;
  }
  EXPECT_DOUBLE_EQ(report.map_value, sum / 5);
}

TEST(MapOverWindows, NoiselessBenchmarkIsPerfect) {
  SimConfig c;
  c.num_streams = 10;
  c.no_change_streams = 10;
  c.rep_dim = 4;
  std::vector<DetectionResult> dets;
  std::vector<GroundTruth> truths;
  for (const auto& s : simulate_benchmark(c)) {
    dets.push_back(detect_incremental(s.table, Method::kRc, {}, s.truth.stream_id));
    truths.push_back(s.truth);
  }
  const auto report = map_over_windows(dets, truths);
  for (const auto& [w, ap] : report.ap_per_window) EXPECT_EQ(ap, 100.0);
  EXPECT_EQ(report.map_value, 100.0);
}

}  // namespace
}  // namespace vstream
