#include "vstream/toy_models.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vstream/errors.h"

namespace vstream {

namespace {

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;

ParamBlock add_block(Eigen::Index& next, Eigen::Index rows, Eigen::Index cols) {
  ParamBlock block{next, rows, cols};
  next += rows * cols;
  return block;
}

ConstMatMap view(const Eigen::VectorXd& v, const ParamBlock& b) {
  return ConstMatMap(v.data() + b.offset, b.rows, b.cols);
}

MatMap view(Eigen::VectorXd& v, const ParamBlock& b) {
  return MatMap(v.data() + b.offset, b.rows, b.cols);
}

Eigen::VectorXd random_params(Eigen::Index n, std::uint64_t seed, double scale) {
  CounterRng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double clamp_probability(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(),
                    std::nextafter(1.0, 0.0));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

double log_softmax_at(const Eigen::VectorXd& z, int index) {
  const double m = z.maxCoeff();
  return z[index] - m - std::log((z.array() - m).exp().sum());
}

void check_feature(const Eigen::VectorXd& x, Eigen::Index dim) {
  if (x.size() != dim) {
    throw DimensionMismatch("pair feature has " + std::to_string(x.size()) +
                            " entries, expected " + std::to_string(dim));
  }
  if (!x.allFinite()) throw NonFiniteValue("pair feature is not finite");
}

void check_tokens(const CaptionTokens& caption, int vocab) {
  if (caption.empty()) throw ValidationError("caption is empty");
  for (int token : caption) {
    if (token < 0 || token >= vocab) {
      throw ValidationError("token " + std::to_string(token) +
                            " outside vocabulary of size " + std::to_string(vocab));
    }
  }
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// ToyGenerator

struct ToyGenerator::Trace {
  Eigen::VectorXd gate_a;
  Eigen::VectorXd gate_b;
  Eigen::MatrixXd slots;                   // frame_dim x kSlots
  std::vector<Eigen::VectorXd> states;     // s_0 .. s_L
  std::vector<Eigen::VectorXd> attention;  // a_1 .. a_L
  std::vector<Eigen::VectorXd> contexts;   // c_1 .. c_L
  std::vector<Eigen::VectorXd> logits;     // z_1 .. z_L
  CaptionTokens tokens;
};

ToyGenerator::ToyGenerator(const GeneratorShape& shape, std::uint64_t seed,
                           double init_scale)
    : shape_(shape) {
  if (shape.frame_dim < 1 || shape.hidden < 1 || shape.vocab < 1 ||
      shape.max_length < 1) {
    throw InvalidConfig("generator dimensions must be positive");
  }
  const Eigen::Index s = shape.frame_dim;
  const Eigen::Index f = 2 * s;
  const Eigen::Index h = shape.hidden;
  const Eigen::Index v = shape.vocab;
  Eigen::Index next = 0;
  u1_ = add_block(next, s, f);
  c1_ = add_block(next, s, 1);
  u2_ = add_block(next, s, f);
  c2_ = add_block(next, s, 1);
  q_ = add_block(next, kSlots, h);
  qb_ = add_block(next, kSlots, 1);
  r_ = add_block(next, h, h);
  e_ = add_block(next, h, v + 1);
  c_ = add_block(next, h, s);
  sb_ = add_block(next, h, 1);
  o_ = add_block(next, v, h);
  ob_ = add_block(next, v, 1);
  params_ = random_params(next, seed, init_scale);
}

Eigen::Map<Eigen::MatrixXd> ToyGenerator::output_weights() {
  return view(params_, o_);
}

Eigen::Map<Eigen::VectorXd> ToyGenerator::output_bias() {
  return Eigen::Map<Eigen::VectorXd>(params_.data() + ob_.offset, ob_.rows);
}

ToyGenerator::Trace ToyGenerator::unroll(
    const Eigen::VectorXd& x, int steps,
    const std::function<int(int, const Eigen::VectorXd&)>& choose) const {
  check_feature(x, feature_dim());
  const Eigen::Index s = shape_.frame_dim;
  const auto xa = x.head(s);
  const auto xb = x.tail(s);

  Trace trace;
  trace.gate_a = sigmoid(view(params_, u1_) * x + view(params_, c1_));
  trace.gate_b = sigmoid(view(params_, u2_) * x + view(params_, c2_));
  trace.slots.resize(s, kSlots);
  trace.slots.col(0) = trace.gate_a.cwiseProduct(xa);
  trace.slots.col(1) = trace.gate_b.cwiseProduct(xb);
  trace.slots.col(2) = trace.slots.col(1) - trace.slots.col(0);

  const auto q = view(params_, q_);
  const auto qb = view(params_, qb_);
  const auto r = view(params_, r_);
  const auto e = view(params_, e_);
  const auto c = view(params_, c_);
  const auto sb = view(params_, sb_);
  const auto o = view(params_, o_);
  const auto ob = view(params_, ob_);

  trace.states.push_back(Eigen::VectorXd::Zero(shape_.hidden));
  int previous = shape_.vocab;  // begin token
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd& s_prev = trace.states.back();
    Eigen::VectorXd a = softmax(q * s_prev + qb);
    Eigen::VectorXd ctx = trace.slots * a;
    Eigen::VectorXd state =
        (r * s_prev + e.col(previous) + c * ctx + sb).array().tanh().matrix();
    Eigen::VectorXd z = o * state + ob;
    const int token = choose(k, z);
    trace.attention.push_back(std::move(a));
    trace.contexts.push_back(std::move(ctx));
    trace.states.push_back(std::move(state));
    trace.logits.push_back(std::move(z));
    trace.tokens.push_back(token);
    previous = token;
  }
  return trace;
}

ToyGenerator::Trace ToyGenerator::teacher_forced(const Eigen::VectorXd& x,
                                                 const CaptionTokens& caption) const {
  check_tokens(caption, shape_.vocab);
  if (static_cast<int>(caption.size()) > shape_.max_length) {
    throw ValidationError("caption longer than the generator's max length");
  }
  return unroll(x, static_cast<int>(caption.size()),
                [&](int k, const Eigen::VectorXd&) { return caption[k]; });
}

GeneratorOutput ToyGenerator::forward(const Eigen::VectorXd& x,
                                      const CaptionTokens& caption) const {
  const Trace trace = teacher_forced(x, caption);
  GeneratorOutput out;
  for (std::size_t k = 0; k < caption.size(); ++k) {
    out.token_logprobs.push_back(log_softmax_at(trace.logits[k], caption[k]));
    out.temporal_attention.push_back(to_std(trace.attention[k]));
  }
  out.spatial_map_t = trace.gate_a;
  out.spatial_map_tp = trace.gate_b;
  return out;
}

double ToyGenerator::log_prob(const Eigen::VectorXd& x,
                              const CaptionTokens& caption) const {
  const Trace trace = teacher_forced(x, caption);
  double total = 0.0;
  for (std::size_t k = 0; k < caption.size(); ++k) {
    total += log_softmax_at(trace.logits[k], caption[k]);
  }
  return total;
}

void ToyGenerator::accumulate_gradient(const Eigen::VectorXd& x,
                                       const CaptionTokens& caption,
                                       double logp_coef, double lambda_attn,
                                       double mu, Eigen::VectorXd& grad) const {
  if (grad.size() != params_.size()) {
    throw DimensionMismatch("generator gradient has the wrong size");
  }
  const Trace t = teacher_forced(x, caption);
  const Eigen::Index s = shape_.frame_dim;
  const auto q = view(params_, q_);
  const auto r = view(params_, r_);
  const auto c = view(params_, c_);
  const auto o = view(params_, o_);

  auto dq = view(grad, q_);
  auto dqb = view(grad, qb_);
  auto dr = view(grad, r_);
  auto de = view(grad, e_);
  auto dc = view(grad, c_);
  auto dsb = view(grad, sb_);
  auto dout = view(grad, o_);
  auto dob = view(grad, ob_);

  Eigen::MatrixXd dslots = Eigen::MatrixXd::Zero(s, kSlots);
  Eigen::VectorXd ds_next = Eigen::VectorXd::Zero(shape_.hidden);
  for (int k = static_cast<int>(caption.size()) - 1; k >= 0; --k) {
    const Eigen::VectorXd& state = t.states[k + 1];
    const Eigen::VectorXd& s_prev = t.states[k];
    const Eigen::VectorXd& a = t.attention[k];

    Eigen::VectorXd dz = -logp_coef * softmax(t.logits[k]);
    dz[caption[k]] += logp_coef;
    dout += dz * state.transpose();
    dob += dz;

    const Eigen::VectorXd ds = o.transpose() * dz + ds_next;
    const Eigen::VectorXd dpre =
        ds.cwiseProduct((1.0 - state.array().square()).matrix());
    dr += dpre * s_prev.transpose();
    de.col(k == 0 ? shape_.vocab : caption[k - 1]) += dpre;
    dc += dpre * t.contexts[k].transpose();
    dsb += dpre;

    const Eigen::VectorXd dctx = c.transpose() * dpre;
    Eigen::VectorXd da = t.slots.transpose() * dctx;
    dslots += dctx * a.transpose();
    for (int j = 0; j < kSlots; ++j) {
      // d(-mu H)/da_j = mu (log a_j + 1); a_j > 0 under softmax.
      da[j] += mu * (std::log(a[j]) + 1.0);
    }
    const Eigen::VectorXd dl = a.cwiseProduct((da.array() - a.dot(da)).matrix());
    dq += dl * s_prev.transpose();
    dqb += dl;
    ds_next = r.transpose() * dpre + q.transpose() * dl;
  }

  const Eigen::VectorXd dv1 = dslots.col(0) - dslots.col(2);
  const Eigen::VectorXd dv2 = dslots.col(1) + dslots.col(2);
  const Eigen::VectorXd dgate_a = (dv1.cwiseProduct(x.head(s)).array() + lambda_attn).matrix();
  const Eigen::VectorXd dgate_b = (dv2.cwiseProduct(x.tail(s)).array() + lambda_attn).matrix();
  const Eigen::VectorXd dpre_a = dgate_a.cwiseProduct(
      t.gate_a.cwiseProduct((1.0 - t.gate_a.array()).matrix()));
  const Eigen::VectorXd dpre_b = dgate_b.cwiseProduct(
      t.gate_b.cwiseProduct((1.0 - t.gate_b.array()).matrix()));
  view(grad, u1_) += dpre_a * x.transpose();
  view(grad, c1_) += dpre_a;
  view(grad, u2_) += dpre_b * x.transpose();
  view(grad, c2_) += dpre_b;
}

Eigen::VectorXd ToyGenerator::log_prob_gradient(const Eigen::VectorXd& x,
                                                const CaptionTokens& caption) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  accumulate_gradient(x, caption, 1.0, 0.0, 0.0, grad);
  return grad;
}

CaptionTokens ToyGenerator::sample(const Eigen::VectorXd& x, CounterRng& rng) const {
  return unroll(x, shape_.max_length,
                [&](int, const Eigen::VectorXd& z) {
                  const Eigen::VectorXd p = softmax(z);
                  const double u = rng.uniform();
                  double cumulative = 0.0;
                  for (Eigen::Index i = 0; i < p.size(); ++i) {
                    cumulative += p[i];
                    if (u < cumulative) return static_cast<int>(i);
                  }
                  return static_cast<int>(p.size() - 1);
                })
      .tokens;
}

CaptionTokens ToyGenerator::greedy(const Eigen::VectorXd& x) const {
  return unroll(x, shape_.max_length,
                [](int, const Eigen::VectorXd& z) {
                  Eigen::Index best = 0;
                  z.maxCoeff(&best);
                  return static_cast<int>(best);
                })
      .tokens;
}

Eigen::VectorXd ToyGenerator::hidden_state(const Eigen::VectorXd& x) const {
  return unroll(x, shape_.max_length,
                [](int, const Eigen::VectorXd& z) {
                  Eigen::Index best = 0;
                  z.maxCoeff(&best);
                  return static_cast<int>(best);
                })
      .states.back();
}

// ---------------------------------------------------------------------------
// ToyDiscriminator

ToyDiscriminator::ToyDiscriminator(const DiscriminatorShape& shape,
                                   std::uint64_t seed, double init_scale)
    : shape_(shape) {
  if (shape.feature_dim < 1 || shape.vocab < 1 || shape.embed < 1 ||
      shape.hidden < 1) {
    throw InvalidConfig("discriminator dimensions must be positive");
  }
  Eigen::Index next = 0;
  m_ = add_block(next, shape.embed, shape.feature_dim);
  u_ = add_block(next, shape.embed, 1);
  e_ = add_block(next, shape.embed, shape.vocab);
  w_ = add_block(next, shape.hidden, shape.feature_dim);
  b1_ = add_block(next, shape.hidden, 1);
  v_ = add_block(next, shape.hidden, 1);
  b0_ = add_block(next, 1, 1);
  params_ = random_params(next, seed, init_scale);
}

void ToyDiscriminator::check(const Eigen::VectorXd& x,
                             const CaptionTokens& caption) const {
  check_feature(x, shape_.feature_dim);
  check_tokens(caption, shape_.vocab);
}

double ToyDiscriminator::logit(const Eigen::VectorXd& x,
                               const CaptionTokens& caption) const {
  check(x, caption);
  const auto e = view(params_, e_);
  Eigen::VectorXd bag = Eigen::VectorXd::Zero(shape_.embed);
  for (int token : caption) bag += e.col(token);
  bag /= static_cast<double>(caption.size());
  const Eigen::VectorXd proj = view(params_, m_) * x + view(params_, u_);
  const Eigen::VectorXd hid =
      (view(params_, w_) * x + view(params_, b1_)).array().tanh().matrix();
  return bag.dot(proj) + view(params_, v_).col(0).dot(hid) + params_[b0_.offset];
}

double ToyDiscriminator::probability(const Eigen::VectorXd& x,
                                     const CaptionTokens& caption) const {
  return clamp_probability(sigmoid(logit(x, caption)));
}

void ToyDiscriminator::accumulate_logit_gradient(const Eigen::VectorXd& x,
                                                 const CaptionTokens& caption,
                                                 double coef,
                                                 Eigen::VectorXd& grad) const {
  check(x, caption);
  if (grad.size() != params_.size()) {
    throw DimensionMismatch("discriminator gradient has the wrong size");
  }
  const auto e = view(params_, e_);
  const double inv_len = 1.0 / static_cast<double>(caption.size());
  Eigen::VectorXd bag = Eigen::VectorXd::Zero(shape_.embed);
  for (int token : caption) bag += e.col(token);
  bag *= inv_len;
  const Eigen::VectorXd proj = view(params_, m_) * x + view(params_, u_);
  const Eigen::VectorXd hid =
      (view(params_, w_) * x + view(params_, b1_)).array().tanh().matrix();

  auto de = view(grad, e_);
  for (int token : caption) de.col(token) += (coef * inv_len) * proj;
  view(grad, m_) += (coef * bag) * x.transpose();
  view(grad, u_) += coef * bag;
  view(grad, v_) += coef * hid;
  const Eigen::VectorXd dh = (coef * view(params_, v_).col(0))
                                 .cwiseProduct((1.0 - hid.array().square()).matrix());
  view(grad, w_) += dh * x.transpose();
  view(grad, b1_) += dh;
  grad[b0_.offset] += coef;
}

// ---------------------------------------------------------------------------
// ToyImageOnlyDetector

ToyImageOnlyDetector::ToyImageOnlyDetector(int feature_dim, int hidden,
                                           std::uint64_t seed, double init_scale)
    : feature_dim_(feature_dim) {
  if (feature_dim < 1 || hidden < 1) {
    throw InvalidConfig("image-only detector dimensions must be positive");
  }
  Eigen::Index next = 0;
  w_ = add_block(next, hidden, feature_dim);
  b_ = add_block(next, hidden, 1);
  v_ = add_block(next, hidden, 1);
  c_ = add_block(next, 1, 1);
  params_ = random_params(next, seed, init_scale);
}

Eigen::VectorXd ToyImageOnlyDetector::representation(const Eigen::VectorXd& x) const {
  check_feature(x, feature_dim_);
  return (view(params_, w_) * x + view(params_, b_)).array().tanh().matrix();
}

double ToyImageOnlyDetector::logit(const Eigen::VectorXd& x) const {
  return view(params_, v_).col(0).dot(representation(x)) + params_[c_.offset];
}

double ToyImageOnlyDetector::probability(const Eigen::VectorXd& x) const {
  return clamp_probability(sigmoid(logit(x)));
}

void ToyImageOnlyDetector::accumulate_logit_gradient(const Eigen::VectorXd& x,
                                                     double coef,
                                                     Eigen::VectorXd& grad) const {
  if (grad.size() != params_.size()) {
    throw DimensionMismatch("detector gradient has the wrong size");
  }
  const Eigen::VectorXd hid = representation(x);
  view(grad, v_) += coef * hid;
  const Eigen::VectorXd dh = (coef * view(params_, v_).col(0))
                                 .cwiseProduct((1.0 - hid.array().square()).matrix());
  view(grad, w_) += dh * x.transpose();
  view(grad, b_) += dh;
  grad[c_.offset] += coef;
}

// ---------------------------------------------------------------------------
// Model-level losses

double generator_batch_loss(const ToyGenerator& generator,
                            std::span<const CaptionedPair> batch,
                            const LossWeights& weights, Eigen::VectorXd* grad) {
  std::vector<GeneratorOutput> outputs;
  outputs.reserve(batch.size());
  for (const auto& item : batch) {
    outputs.push_back(generator.forward(item.x, item.caption));
    if (grad) {
      generator.accumulate_gradient(item.x, item.caption, -1.0, weights.lambda_attn,
                                    weights.mu_entropy, *grad);
    }
  }
  return generator_loss(outputs, weights.lambda_attn, weights.mu_entropy);
}

double discriminator_batch_loss(const ToyDiscriminator& discriminator,
                                const DiscriminatorBatch& batch,
                                Eigen::VectorXd* grad) {
  double loss = 0.0;
  for (const auto& item : batch.positives) {
    const double l = discriminator.logit(item.x, item.caption);
    loss += softplus(-l);
    if (grad) discriminator.accumulate_logit_gradient(item.x, item.caption, -sigmoid(-l), *grad);
  }
  auto negatives = [&](const std::vector<CaptionedPair>& items) {
    for (const auto& item : items) {
      const double l = discriminator.logit(item.x, item.caption);
      loss += softplus(l);
      if (grad) discriminator.accumulate_logit_gradient(item.x, item.caption, sigmoid(l), *grad);
    }
  };
  negatives(batch.labeled_negatives);
  negatives(batch.unlabeled_negatives);
  return loss;
}

Phase3Samples draw_phase3_samples(const ToyGenerator& generator,
                                  const Phase3Batch& batch, std::uint64_t seed) {
  Phase3Samples samples;
  std::uint64_t index = 0;
  for (const auto& item : batch.labeled) {
    CounterRng rng(hash64(seed, index++));
    samples.labeled.push_back(generator.sample(item.x, rng));
  }
  for (const auto& x : batch.unlabeled) {
    CounterRng rng(hash64(seed, index++));
    samples.unlabeled.push_back(generator.sample(x, rng));
  }
  return samples;
}

double phase3_batch_loss(const ToyGenerator& generator,
                         const ToyDiscriminator& discriminator,
                         const Phase3Batch& batch, const Phase3Samples& samples,
                         const LossWeights& weights, Eigen::VectorXd* grad,
                         bool include_reinforce) {
  if (samples.labeled.size() != batch.labeled.size() ||
      samples.unlabeled.size() != batch.unlabeled.size()) {
    throw DimensionMismatch("one sampled caption per pair is required");
  }
  std::vector<GeneratorOutput> outputs;
  outputs.reserve(batch.labeled.size());
  for (const auto& item : batch.labeled) {
    outputs.push_back(generator.forward(item.x, item.caption));
    if (grad) {
      generator.accumulate_gradient(item.x, item.caption, -1.0, weights.lambda_attn,
                                    weights.mu_entropy, *grad);
    }
  }
  std::vector<double> labeled_validity;
  std::vector<double> unlabeled_validity;
  auto score = [&](const Eigen::VectorXd& x, const CaptionTokens& w,
                   std::vector<double>& out) {
    const double d = discriminator.probability(x, w);
    out.push_back(d);
    if (grad && include_reinforce) {
      generator.accumulate_gradient(x, w, -weights.lambda_rl * std::log(d), 0.0, 0.0,
                                    *grad);
    }
  };
  for (std::size_t i = 0; i < batch.labeled.size(); ++i) {
    score(batch.labeled[i].x, samples.labeled[i], labeled_validity);
  }
  for (std::size_t i = 0; i < batch.unlabeled.size(); ++i) {
    score(batch.unlabeled[i], samples.unlabeled[i], unlabeled_validity);
  }
  return phase3_loss(outputs, labeled_validity, unlabeled_validity, weights);
}

std::vector<CaptionTokens> all_captions(int vocab, int length) {
  if (vocab < 1 || length < 1) throw InvalidConfig("vocab and length must be positive");
  std::vector<CaptionTokens> out;
  CaptionTokens current(length, 0);
  while (true) {
    out.push_back(current);
    int pos = length - 1;
    while (pos >= 0 && current[pos] == vocab - 1) current[pos--] = 0;
    if (pos < 0) break;
    ++current[pos];
  }
  return out;
}

double expected_phase3_loss(const ToyGenerator& generator,
                            const ToyDiscriminator& discriminator,
                            const Phase3Batch& batch, const LossWeights& weights) {
  const double lg = generator_batch_loss(generator, batch.labeled, weights);
  const auto captions =
      all_captions(generator.shape().vocab, generator.shape().max_length);
  double reward = 0.0;
  auto add = [&](const Eigen::VectorXd& x) {
    for (const auto& w : captions) {
      reward += std::exp(generator.log_prob(x, w)) *
                std::log(discriminator.probability(x, w));
    }
  };
  for (const auto& item : batch.labeled) add(item.x);
  for (const auto& x : batch.unlabeled) add(x);
  return lg - weights.lambda_rl * reward;
}

Eigen::VectorXd reinforce_gradient(const ToyGenerator& generator,
                                   const Eigen::VectorXd& x,
                                   const RewardFunction& reward,
                                   std::uint64_t sample_seed) {
  CounterRng rng(sample_seed);
  const CaptionTokens w = generator.sample(x, rng);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(generator.num_params());
  generator.accumulate_gradient(x, w, reward(w), 0.0, 0.0, grad);
  return grad;
}

Eigen::VectorXd reinforce_gradient(const ToyGenerator& generator,
                                   const Eigen::VectorXd& x,
                                   const ToyDiscriminator& discriminator,
                                   std::uint64_t sample_seed) {
  return reinforce_gradient(
      generator, x,
      [&](const CaptionTokens& w) { return std::log(discriminator.probability(x, w)); },
      sample_seed);
}

Eigen::VectorXd reinforce_expectation(const ToyGenerator& generator,
                                      const Eigen::VectorXd& x,
                                      const RewardFunction& reward) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(generator.num_params());
  for (const auto& w : all_captions(generator.shape().vocab,
                                    generator.shape().max_length)) {
    const double p = std::exp(generator.log_prob(x, w));
    generator.accumulate_gradient(x, w, p * reward(w), 0.0, 0.0, grad);
  }
  return grad;
}

double expected_reward(const ToyGenerator& generator, const Eigen::VectorXd& x,
                       const RewardFunction& reward) {
  double total = 0.0;
  for (const auto& w : all_captions(generator.shape().vocab,
                                    generator.shape().max_length)) {
    total += std::exp(generator.log_prob(x, w)) * reward(w);
  }
  return total;
}

double no_change_statistic(const ToyDiscriminator& discriminator,
                           const Eigen::VectorXd& x) {
  return -discriminator.probability(x, no_change_caption());
}

double image_only_statistic(const ToyImageOnlyDetector& detector,
                            const Eigen::VectorXd& x) {
  return -detector.probability(x);
}

double image_only_batch_loss(const ToyImageOnlyDetector& detector,
                             std::span<const Eigen::VectorXd> features,
                             std::span<const int> labels, Eigen::VectorXd* grad) {
  if (features.size() != labels.size()) {
    throw DimensionMismatch("one label per feature is required");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("labels must be 0 or 1");
    const double l = detector.logit(features[i]);
    if (labels[i] == 1) {
      loss += softplus(-l);
      if (grad) detector.accumulate_logit_gradient(features[i], -sigmoid(-l), *grad);
    } else {
      loss += softplus(l);
      if (grad) detector.accumulate_logit_gradient(features[i], sigmoid(l), *grad);
    }
  }
  return loss;
}

}  // namespace vstream
