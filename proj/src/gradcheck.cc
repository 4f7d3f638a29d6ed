#include "vstream/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "vstream/description_losses.h"
#include "vstream/rng.h"
#include "vstream/toy_models.h"

namespace vstream {

namespace {

constexpr double kEpsilon = 1e-5;

int between(CounterRng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

Eigen::VectorXd random_vector(CounterRng& rng, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

CaptionTokens random_caption(CounterRng& rng, int vocab, int length) {
  CaptionTokens w(length);
  for (int& token : w) token = static_cast<int>(rng.below(vocab));
  return w;
}

ToyGenerator random_generator(CounterRng& rng, int max_vocab, int max_length,
                              int max_frame_dim, int max_hidden) {
  GeneratorShape shape;
  shape.frame_dim = between(rng, 1, max_frame_dim);
  shape.hidden = between(rng, 2, max_hidden);
  shape.vocab = between(rng, 2, max_vocab);
  shape.max_length = between(rng, 1, max_length);
  return ToyGenerator(shape, rng(), 0.6);
}

ToyDiscriminator random_discriminator(CounterRng& rng, int feature_dim, int vocab) {
  DiscriminatorShape shape;
  shape.feature_dim = feature_dim;
  shape.vocab = vocab;
  shape.embed = between(rng, 2, 5);
  shape.hidden = between(rng, 2, 5);
  return ToyDiscriminator(shape, rng(), 0.6);
}

LossWeights random_weights(CounterRng& rng) {
  LossWeights w;
  w.lambda_attn = 0.2 * rng.uniform();
  w.mu_entropy = 0.2 * rng.uniform();
  w.lambda_rl = 0.5 * rng.uniform();
  return w;
}

std::vector<CaptionedPair> random_pairs(CounterRng& rng, int count, int feature_dim,
                                        int vocab, int max_length) {
  std::vector<CaptionedPair> out;
  for (int i = 0; i < count; ++i) {
    out.push_back({random_vector(rng, feature_dim),
                   random_caption(rng, vocab, between(rng, 1, max_length))});
  }
  return out;
}

// Runs `check` on every instance and folds the errors into one row.
GradCheckRow run_row(const std::string& name, std::uint64_t seed, int instances,
                     double tolerance,
                     const std::function<double(CounterRng&)>& check) {
  GradCheckRow row{name, instances, 0.0, tolerance, false};
  for (int i = 0; i < instances; ++i) {
    CounterRng rng(hash64(seed, static_cast<std::uint64_t>(i)));
    row.max_error = std::max(row.max_error, check(rng));
  }
  row.passed = row.max_error < tolerance;
  return row;
}

double check_generator(CounterRng& rng) {
  ToyGenerator generator = random_generator(rng, 5, 3, 3, 5);
  const auto batch = random_pairs(rng, between(rng, 1, 3), generator.feature_dim(),
                                  generator.shape().vocab, generator.shape().max_length);
  const LossWeights weights = random_weights(rng);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(generator.num_params());
  generator_batch_loss(generator, batch, weights, &grad);
  const Eigen::VectorXd theta = generator.params();
  ToyGenerator probe = generator;
  return finite_difference_check(
      [&](std::span<const double> p) {
        probe.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
        return generator_batch_loss(probe, batch, weights);
      },
      std::span<const double>(grad.data(), grad.size()),
      std::span<const double>(theta.data(), theta.size()), kEpsilon);
}

double check_discriminator(CounterRng& rng) {
  const int feature_dim = between(rng, 2, 6);
  const int vocab = between(rng, 2, 6);
  ToyDiscriminator discriminator = random_discriminator(rng, feature_dim, vocab);
  DiscriminatorBatch batch;
  batch.positives = random_pairs(rng, between(rng, 1, 3), feature_dim, vocab, 3);
  batch.labeled_negatives = random_pairs(rng, between(rng, 0, 3), feature_dim, vocab, 3);
  batch.unlabeled_negatives = random_pairs(rng, between(rng, 0, 3), feature_dim, vocab, 3);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(discriminator.num_params());
  discriminator_batch_loss(discriminator, batch, &grad);
  const Eigen::VectorXd theta = discriminator.params();
  ToyDiscriminator probe = discriminator;
  return finite_difference_check(
      [&](std::span<const double> p) {
        probe.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
        return discriminator_batch_loss(probe, batch);
      },
      std::span<const double>(grad.data(), grad.size()),
      std::span<const double>(theta.data(), theta.size()), kEpsilon);
}

// Samples are drawn once and held fixed, so the reward term is constant in
// the generator parameters and only the likelihood path is differentiated.
double check_phase3(CounterRng& rng) {
  ToyGenerator generator = random_generator(rng, 5, 3, 3, 5);
  const int vocab = generator.shape().vocab;
  const ToyDiscriminator discriminator =
      random_discriminator(rng, generator.feature_dim(), vocab);
  Phase3Batch batch;
  batch.labeled = random_pairs(rng, between(rng, 1, 3), generator.feature_dim(), vocab,
                               generator.shape().max_length);
  for (int i = between(rng, 0, 3); i > 0; --i) {
    batch.unlabeled.push_back(random_vector(rng, generator.feature_dim()));
  }
  const LossWeights weights = random_weights(rng);
  const Phase3Samples samples = draw_phase3_samples(generator, batch, rng());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(generator.num_params());
  phase3_batch_loss(generator, discriminator, batch, samples, weights, &grad, false);
  const Eigen::VectorXd theta = generator.params();
  ToyGenerator probe = generator;
  return finite_difference_check(
      [&](std::span<const double> p) {
        probe.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
        return phase3_batch_loss(probe, discriminator, batch, samples, weights);
      },
      std::span<const double>(grad.data(), grad.size()),
      std::span<const double>(theta.data(), theta.size()), kEpsilon);
}

double check_triplet(CounterRng& rng) {
  const int n = between(rng, 2, 5);
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s(i, j) = 0.5 * rng.normal();
  }
  const Eigen::MatrixXd grad = triplet_loss_gradient(s);
  return finite_difference_check(
      [&](std::span<const double> p) {
        return triplet_loss(Eigen::Map<const Eigen::MatrixXd>(p.data(), n, n));
      },
      std::span<const double>(grad.data(), grad.size()),
      std::span<const double>(s.data(), s.size()), kEpsilon);
}

double check_image_only(CounterRng& rng) {
  const int feature_dim = between(rng, 2, 6);
  ToyImageOnlyDetector detector(feature_dim, between(rng, 2, 5), rng(), 0.6);
  std::vector<Eigen::VectorXd> features;
  std::vector<int> labels;
  for (int i = between(rng, 1, 4); i > 0; --i) {
    features.push_back(random_vector(rng, feature_dim));
    labels.push_back(static_cast<int>(rng.below(2)));
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(detector.num_params());
  image_only_batch_loss(detector, features, labels, &grad);
  const Eigen::VectorXd theta = detector.params();
  ToyImageOnlyDetector probe = detector;
  return finite_difference_check(
      [&](std::span<const double> p) {
        probe.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
        return image_only_batch_loss(probe, features, labels);
      },
      std::span<const double>(grad.data(), grad.size()),
      std::span<const double>(theta.data(), theta.size()), kEpsilon);
}

// Max |sum_w p(w) R(w) grad log p(w) - grad sum_w p(w) R(w)| with the right
// side from a five-point stencil.
double check_reinforce(CounterRng& rng) {
  ToyGenerator generator = random_generator(rng, 4, 3, 2, 3);
  const Eigen::VectorXd x = random_vector(rng, generator.feature_dim());
  const auto captions = all_captions(generator.shape().vocab, generator.shape().max_length);
  std::vector<double> table;
  for (std::size_t i = 0; i < captions.size(); ++i) table.push_back(-2.0 * rng.uniform());
  const RewardFunction reward = [&](const CaptionTokens& w) {
    const auto it = std::lower_bound(captions.begin(), captions.end(), w);
    return table[static_cast<std::size_t>(it - captions.begin())];
  };
  const Eigen::VectorXd estimator = reinforce_expectation(generator, x, reward);
  const Eigen::VectorXd theta = generator.params();
  ToyGenerator probe = generator;
  const std::vector<double> exact = five_point_gradient(
      [&](std::span<const double> p) {
        probe.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
        return expected_reward(probe, x, reward);
      },
      std::span<const double>(theta.data(), theta.size()));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < estimator.size(); ++i) {
    worst = std::max(worst, std::abs(estimator[i] - exact[static_cast<std::size_t>(i)]));
  }
  return worst;
}

}  // namespace

bool GradCheckReport::all_passed() const {
  return !rows.empty() &&
         std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed; });
}

GradCheckReport run_gradient_suite(std::uint64_t seed, int instances) {
  GradCheckReport report;
  report.rows.push_back(run_row("generator L_G", hash64(seed, 0), instances,
                                kGradientTolerance, check_generator));
  report.rows.push_back(run_row("discriminator L_D", hash64(seed, 1), instances,
                                kGradientTolerance, check_discriminator));
  report.rows.push_back(run_row("generator L_3 (fixed samples)", hash64(seed, 2),
                                instances, kGradientTolerance, check_phase3));
  report.rows.push_back(run_row("triplet", hash64(seed, 3), instances,
                                kGradientTolerance, check_triplet));
  report.rows.push_back(run_row("image-only BCE", hash64(seed, 4), instances,
                                kGradientTolerance, check_image_only));
  report.rows.push_back(run_row("REINFORCE unbiasedness", hash64(seed, 5), instances,
                                kReinforceTolerance, check_reinforce));
  return report;
}

std::string format_gradcheck_report(const GradCheckReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-32s %9s %12s %10s  %s\n", "check", "instances",
                "max_error", "tolerance", "result");
  out += line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof(line), "%-32s %9d %12.3e %10.1e  %s\n", row.name.c_str(),
                  row.instances, row.max_error, row.tolerance,
                  row.passed ? "PASS" : "FAIL");
    out += line;
  }
  return out;
}

}  // namespace vstream
