#ifndef VSTREAM_TOY_MODELS_H_
#define VSTREAM_TOY_MODELS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vstream/core_model.h"
#include "vstream/description_losses.h"
#include "vstream/rng.h"

namespace vstream {

// A matrix stored column-major inside a flat parameter vector.
struct ParamBlock {
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

struct GeneratorShape {
  int frame_dim = 4;  // pair features are [frame_t; frame_t'], 2 * frame_dim
  int hidden = 8;
  int vocab = 7;
  int max_length = 2;
};

// Autoregressive categorical caption model conditioned on a pair feature
// x = [x_t; x_t'].
//
//   A = sigmoid(U1 x + c1), B = sigmoid(U2 x + c2)     spatial maps
//   slots v1 = A .* x_t, v2 = B .* x_t', v3 = v2 - v1
//   a_k = softmax(Q s_{k-1} + qb)                     temporal attention
//   s_k = tanh(R s_{k-1} + E[:, w_{k-1}] + C sum_j a_kj v_j + sb)
//   p(w_k | w_<k, x) = softmax(O s_k + ob)
//
// with s_0 = 0 and w_0 a begin token (embedding column `vocab`). Captions
// shorter than max_length are scored on their own tokens; sampling and
// greedy decoding always emit max_length tokens.
class ToyGenerator {
 public:
  static constexpr int kSlots = 3;

  explicit ToyGenerator(const GeneratorShape& shape, std::uint64_t seed = 0,
                        double init_scale = 0.3);

  const GeneratorShape& shape() const { return shape_; }
  int feature_dim() const { return 2 * shape_.frame_dim; }
  Eigen::Index num_params() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> output_weights();
  Eigen::Map<Eigen::VectorXd> output_bias();

  GeneratorOutput forward(const Eigen::VectorXd& x, const CaptionTokens& caption) const;
  double log_prob(const Eigen::VectorXd& x, const CaptionTokens& caption) const;

  // Adds to `grad` the gradient of
  //   logp_coef * log p(w|x) + lambda_attn (|A|_1 + |B|_1) - mu sum_k H(a_k).
  void accumulate_gradient(const Eigen::VectorXd& x, const CaptionTokens& caption,
                           double logp_coef, double lambda_attn, double mu,
                           Eigen::VectorXd& grad) const;
  Eigen::VectorXd log_prob_gradient(const Eigen::VectorXd& x,
                                    const CaptionTokens& caption) const;

  CaptionTokens sample(const Eigen::VectorXd& x, CounterRng& rng) const;
  CaptionTokens greedy(const Eigen::VectorXd& x) const;
  // Final state s_K of the greedy decode.
  Eigen::VectorXd hidden_state(const Eigen::VectorXd& x) const;

 private:
  struct Trace;
  Trace unroll(const Eigen::VectorXd& x, int steps,
               const std::function<int(int, const Eigen::VectorXd&)>& choose) const;
  Trace teacher_forced(const Eigen::VectorXd& x, const CaptionTokens& caption) const;

  GeneratorShape shape_;
  ParamBlock u1_, c1_, u2_, c2_, q_, qb_, r_, e_, c_, sb_, o_, ob_;
  Eigen::VectorXd params_;
};

struct DiscriminatorShape {
  int feature_dim = 8;
  int vocab = 7;
  int embed = 8;
  int hidden = 8;
};

// D(w, x) = sigmoid(e_w . (M x + u) + v . tanh(W x + b1) + b0) where e_w is
// the mean token embedding of w (a bag of tokens, so order and repetition
// of a single token do not matter).
class ToyDiscriminator {
 public:
  explicit ToyDiscriminator(const DiscriminatorShape& shape, std::uint64_t seed = 0,
                            double init_scale = 0.3);

  const DiscriminatorShape& shape() const { return shape_; }
  Eigen::Index num_params() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  double logit(const Eigen::VectorXd& x, const CaptionTokens& caption) const;
  // Strictly inside (0, 1): the sigmoid is clamped away from 0 and 1.
  double probability(const Eigen::VectorXd& x, const CaptionTokens& caption) const;
  void accumulate_logit_gradient(const Eigen::VectorXd& x,
                                 const CaptionTokens& caption, double coef,
                                 Eigen::VectorXd& grad) const;

 private:
  void check(const Eigen::VectorXd& x, const CaptionTokens& caption) const;

  DiscriminatorShape shape_;
  ParamBlock m_, u_, e_, w_, b1_, v_, b0_;
  Eigen::VectorXd params_;
};

// D~(x) = sigmoid(v . tanh(W x + b) + c), the probability that the pair
// shows no change.
class ToyImageOnlyDetector {
 public:
  ToyImageOnlyDetector(int feature_dim, int hidden, std::uint64_t seed = 0,
                       double init_scale = 0.3);

  int feature_dim() const { return feature_dim_; }
  Eigen::Index num_params() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  double logit(const Eigen::VectorXd& x) const;
  double probability(const Eigen::VectorXd& x) const;
  // tanh(W x + b), the penultimate layer.
  Eigen::VectorXd representation(const Eigen::VectorXd& x) const;
  void accumulate_logit_gradient(const Eigen::VectorXd& x, double coef,
                                 Eigen::VectorXd& grad) const;

 private:
  int feature_dim_;
  ParamBlock w_, b_, v_, c_;
  Eigen::VectorXd params_;
};

struct CaptionedPair {
  Eigen::VectorXd x;
  CaptionTokens caption;
};

// L_G summed over the batch; adds its gradient to *grad when given.
double generator_batch_loss(const ToyGenerator& generator,
                            std::span<const CaptionedPair> batch,
                            const LossWeights& weights,
                            Eigen::VectorXd* grad = nullptr);

struct DiscriminatorBatch {
  std::vector<CaptionedPair> positives;
  std::vector<CaptionedPair> labeled_negatives;
  std::vector<CaptionedPair> unlabeled_negatives;
};

// L_D, computed from logits with softplus so saturated scores stay finite.
double discriminator_batch_loss(const ToyDiscriminator& discriminator,
                                const DiscriminatorBatch& batch,
                                Eigen::VectorXd* grad = nullptr);

struct Phase3Batch {
  std::vector<CaptionedPair> labeled;
  std::vector<Eigen::VectorXd> unlabeled;
};

struct Phase3Samples {
  std::vector<CaptionTokens> labeled;
  std::vector<CaptionTokens> unlabeled;
};

// One caption per pair; pair i of the concatenation labeled ++ unlabeled
// uses the stream hash64(seed, i).
Phase3Samples draw_phase3_samples(const ToyGenerator& generator,
                                  const Phase3Batch& batch, std::uint64_t seed);

// L_3 at fixed samples. The gradient always holds grad L_G; with
// `include_reinforce` it also holds -lambda_rl sum log D(w^) grad log p(w^).
double phase3_batch_loss(const ToyGenerator& generator,
                         const ToyDiscriminator& discriminator,
                         const Phase3Batch& batch, const Phase3Samples& samples,
                         const LossWeights& weights, Eigen::VectorXd* grad = nullptr,
                         bool include_reinforce = true);

// E over w^ ~ p_G of L_3, summed exactly over all vocab^max_length captions.
double expected_phase3_loss(const ToyGenerator& generator,
                            const ToyDiscriminator& discriminator,
                            const Phase3Batch& batch, const LossWeights& weights);

// Every caption of the given length, in lexicographic order.
std::vector<CaptionTokens> all_captions(int vocab, int length);

using RewardFunction = std::function<double(const CaptionTokens&)>;

// R(w^) grad log p_G(w^|x) for one w^ drawn with CounterRng(sample_seed).
Eigen::VectorXd reinforce_gradient(const ToyGenerator& generator,
                                   const Eigen::VectorXd& x,
                                   const RewardFunction& reward,
                                   std::uint64_t sample_seed);
// Reward log D(w^, x).
Eigen::VectorXd reinforce_gradient(const ToyGenerator& generator,
                                   const Eigen::VectorXd& x,
                                   const ToyDiscriminator& discriminator,
                                   std::uint64_t sample_seed);

// sum_w p(w|x) R(w) grad log p(w|x) over all max_length captions.
Eigen::VectorXd reinforce_expectation(const ToyGenerator& generator,
                                      const Eigen::VectorXd& x,
                                      const RewardFunction& reward);
// sum_w p(w|x) R(w).
double expected_reward(const ToyGenerator& generator, const Eigen::VectorXd& x,
                       const RewardFunction& reward);

// -D(no change, x).
double no_change_statistic(const ToyDiscriminator& discriminator,
                           const Eigen::VectorXd& x);
// -D~(x).
double image_only_statistic(const ToyImageOnlyDetector& detector,
                            const Eigen::VectorXd& x);

// Binary cross-entropy with label 1 = no change.
double image_only_batch_loss(const ToyImageOnlyDetector& detector,
                             std::span<const Eigen::VectorXd> features,
                             std::span<const int> labels,
                             Eigen::VectorXd* grad = nullptr);

}  // namespace vstream

#endif  // VSTREAM_TOY_MODELS_H_
