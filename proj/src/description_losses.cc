#include "vstream/description_losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "vstream/errors.h"

namespace vstream {

namespace {

void check_probability(double score, const char* what) {
  if (!(score > 0.0 && score < 1.0)) {
    throw ScoreOutOfRange(std::string(what) + " score " + std::to_string(score) +
                          " is not inside (0, 1)");
  }
}

void check_output(const GeneratorOutput& out) {
  for (const auto& a : out.temporal_attention) {
    double sum = 0.0;
    for (double v : a) {
      if (!(v >= 0.0)) {
        throw NonDistributionAttention("temporal attention has a negative entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw NonDistributionAttention("temporal attention sums to " +
                                     std::to_string(sum));
    }
  }
  if ((out.spatial_map_t.array() < 0.0).any() ||
      (out.spatial_map_tp.array() < 0.0).any()) {
    throw ValidationError("spatial attention maps must be non-negative");
  }
}

}  // namespace

double entropy(std::span<const double> distribution) {
  double h = 0.0;
  for (double a : distribution) {
    if (a > 0.0) h -= a * std::log(a);
  }
  return h;
}

double generator_loss(std::span<const GeneratorOutput> batch,
                      double lambda_attn, double mu_entropy) {
  double loss = 0.0;
  for (const auto& out : batch) {
    check_output(out);
    for (double lp : out.token_logprobs) loss -= lp;
    loss += lambda_attn * (out.spatial_map_t.sum() + out.spatial_map_tp.sum());
    for (const auto& a : out.temporal_attention) loss -= mu_entropy * entropy(a);
  }
  return loss;
}

double discriminator_loss(std::span<const double> positives,
                          std::span<const double> labeled_negatives,
                          std::span<const double> unlabeled_negatives) {
  double loss = 0.0;
  for (double d : positives) {
    check_probability(d, "positive");
    loss -= std::log(d);
  }
  for (double d : labeled_negatives) {
    check_probability(d, "labeled negative");
    loss -= std::log1p(-d);
  }
  for (double d : unlabeled_negatives) {
    check_probability(d, "unlabeled negative");
    loss -= std::log1p(-d);
  }
  return loss;
}

double phase3_loss(std::span<const GeneratorOutput> labeled,
                   std::span<const double> labeled_sample_validity,
                   std::span<const double> unlabeled_sample_validity,
                   const LossWeights& weights) {
  double reward = 0.0;
  for (double d : labeled_sample_validity) {
    check_probability(d, "sampled labeled");
    reward += std::log(d);
  }
  for (double d : unlabeled_sample_validity) {
    check_probability(d, "sampled unlabeled");
    reward += std::log(d);
  }
  return generator_loss(labeled, weights.lambda_attn, weights.mu_entropy) -
         weights.lambda_rl * reward;
}

namespace {

// Hardest negative of row i, or -1 for a 1x1 matrix.
Eigen::Index hardest_negative(const Eigen::MatrixXd& s, Eigen::Index i) {
  Eigen::Index best = -1;
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    if (j == i) continue;
    if (best < 0 || s(i, j) > s(i, best)) best = j;
  }
  return best;
}

void check_square(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) {
    throw ValidationError("triplet loss needs a square similarity matrix");
  }
}

}  // namespace

double triplet_loss(const Eigen::MatrixXd& similarity, double alpha) {
  check_square(similarity);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
    const Eigen::Index j = hardest_negative(similarity, i);
    if (j < 0) continue;
    loss += std::max(0.0, alpha - similarity(i, i) + similarity(i, j));
  }
  return loss;
}

Eigen::MatrixXd triplet_loss_gradient(const Eigen::MatrixXd& similarity,
                                      double alpha) {
  check_square(similarity);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(similarity.rows(), similarity.cols());
  for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
    const Eigen::Index j = hardest_negative(similarity, i);
    if (j < 0) continue;
    if (alpha - similarity(i, i) + similarity(i, j) > 0.0) {
      grad(i, i) -= 1.0;
      grad(i, j) += 1.0;
    }
  }
  return grad;
}

double finite_difference_check(const ScalarFunction& loss,
                               std::span<const double> analytic_gradient,
                               std::span<const double> params,
                               double epsilon) {
  if (analytic_gradient.size() != params.size()) {
    throw DimensionMismatch("gradient and parameter sizes differ");
  }
  std::vector<double> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + epsilon;
    const double plus = loss(probe);
    probe[i] = saved - epsilon;
    const double minus = loss(probe);
    probe[i] = saved;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double analytic = analytic_gradient[i];
    const double scale =
        std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

std::vector<double> five_point_gradient(const ScalarFunction& fn,
                                        std::span<const double> params,
                                        double step) {
  std::vector<double> probe(params.begin(), params.end());
  std::vector<double> grad(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    auto at = [&](double offset) {
      probe[i] = saved + offset;
      return fn(probe);
    };
    const double f2p = at(2.0 * step);
    const double f1p = at(step);
    const double f1m = at(-step);
    const double f2m = at(-2.0 * step);
    probe[i] = saved;
    grad[i] = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * step);
  }
  return grad;
}

}  // namespace vstream
