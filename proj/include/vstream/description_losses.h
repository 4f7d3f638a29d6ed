#ifndef VSTREAM_DESCRIPTION_LOSSES_H_
#define VSTREAM_DESCRIPTION_LOSSES_H_

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vstream {

// Three different constants share the name lambda in the captioning
// literature; here they are lambda_attn (attention sparsity in the
// generator loss), lambda_rl (discriminator reward weight) and lambda_rc
// (graph-cut weight, see detectors.h). lambda_attn and mu_entropy have no
// published values; the defaults are ours.
struct LossWeights {
  double lambda_attn = 0.1;
  double mu_entropy = 0.05;
  double lambda_rl = 0.2;
};

inline constexpr double kTripletMargin = 0.1;

// What a caption generator reports for one (pair, caption): the log
// probability of every caption token, the two spatial attention maps and
// the per-token temporal attention distributions.
struct GeneratorOutput {
  std::vector<double> token_logprobs;
  Eigen::MatrixXd spatial_map_t;
  Eigen::MatrixXd spatial_map_tp;
  std::vector<std::vector<double>> temporal_attention;
};

// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(std::span<const double> distribution);

// sum over the batch of
//   -sum_k log p(w_k) + lambda_attn (|A_t|_1 + |A_t'|_1) - mu sum_k H(a_k).
// Throws NonDistributionAttention if some a_k has a negative entry or does
// not sum to 1 within 1e-9, ValidationError on a negative map entry.
double generator_loss(std::span<const GeneratorOutput> batch,
                      double lambda_attn, double mu_entropy);

// -sum log D(pos) - sum log(1 - D(neg_labeled)) - sum log(1 - D(neg_unlabeled)).
// Throws ScoreOutOfRange unless every score lies strictly inside (0, 1).
double discriminator_loss(std::span<const double> positives,
                          std::span<const double> labeled_negatives,
                          std::span<const double> unlabeled_negatives);

// generator_loss(labeled) - lambda_rl * sum log D(sampled caption, pair) over
// the sampled captions of labeled and unlabeled pairs. `*_validity` holds
// D(w_hat, pair) for each sampled caption. Throws ScoreOutOfRange.
double phase3_loss(std::span<const GeneratorOutput> labeled,
                   std::span<const double> labeled_sample_validity,
                   std::span<const double> unlabeled_sample_validity,
                   const LossWeights& weights);

// Hard-negative triplet loss over a square caption/pair similarity matrix
// s(i, j) = s(w_i, pair_j):  sum_i max_{j != i} (alpha - s_ii + s_ij)_+.
double triplet_loss(const Eigen::MatrixXd& similarity, double alpha = kTripletMargin);

// d triplet_loss / d similarity. Each row with a positive hinge contributes
// -1 at (i, i) and +1 at its hardest negative (first one on ties).
Eigen::MatrixXd triplet_loss_gradient(const Eigen::MatrixXd& similarity,
                                      double alpha = kTripletMargin);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences of `loss` around `params` compared with
// `analytic_gradient`; returns max_i |g_i - n_i| / max(|g_i|, |n_i|, 1e-3).
// The floor treats near-zero components as absolute errors.
double finite_difference_check(const ScalarFunction& loss,
                               std::span<const double> analytic_gradient,
                               std::span<const double> params,
                               double epsilon = 1e-5);

// Five-point central-difference gradient, O(h^4) truncation error.
std::vector<double> five_point_gradient(const ScalarFunction& fn,
                                        std::span<const double> params,
                                        double step = 1e-3);

}  // namespace vstream

#endif  // VSTREAM_DESCRIPTION_LOSSES_H_
