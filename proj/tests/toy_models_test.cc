#include "vstream/toy_models.h"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "vstream/errors.h"
#include "vstream/gradcheck.h"

namespace vstream {
namespace {

Eigen::VectorXd random_feature(CounterRng& rng, int dim) {
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x(i) = rng.normal();
  return x;
}

// Generator with every weight zero except the output bias, so
// p(w_1) = softmax(bias).
ToyGenerator bias_only_generator(std::vector<double> bias, int length = 1) {
  GeneratorShape shape{1, 2, static_cast<int>(bias.size()), length};
  ToyGenerator gen(shape, 0);
  gen.params().setZero();
  for (std::size_t i = 0; i < bias.size(); ++i) gen.output_bias()(i) = bias[i];
  return gen;
}

Eigen::Index bias_offset(ToyGenerator& gen) {
  return gen.output_bias().data() - gen.params().data();
}

TEST(ToyGenerator, ProbabilitiesSumToOne) {
  CounterRng rng(1);
  GeneratorShape shape{3, 5, 4, 3};
  ToyGenerator gen(shape, 9, 0.8);
  const auto x = random_feature(rng, gen.feature_dim());
  double total = 0.0;
  for (const auto& w : all_captions(4, 3)) total += std::exp(gen.log_prob(x, w));
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(ToyGenerator, ForwardOutputIsConsistent) {
  CounterRng rng(2);
  ToyGenerator gen(GeneratorShape{}, 3);
  const auto x = random_feature(rng, gen.feature_dim());
  const CaptionTokens w{2, 5};
  const auto out = gen.forward(x, w);
  ASSERT_EQ(out.token_logprobs.size(), 2u);
  EXPECT_NEAR(out.token_logprobs[0] + out.token_logprobs[1], gen.log_prob(x, w), 1e-14);
  EXPECT_GE(out.spatial_map_t.minCoeff(), 0.0);
  EXPECT_GE(out.spatial_map_tp.minCoeff(), 0.0);
  for (const auto& a : out.temporal_attention) {
    ASSERT_EQ(a.size(), static_cast<std::size_t>(ToyGenerator::kSlots));
    double s = 0.0;
    for (double v : a) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_NO_THROW(generator_loss(std::vector<GeneratorOutput>{out}, 0.1, 0.05));
}

TEST(ToyGenerator, RejectsBadInput) {
  ToyGenerator gen(GeneratorShape{}, 3);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(gen.feature_dim());
  EXPECT_THROW(gen.log_prob(x, {7}), ValidationError);
  EXPECT_THROW(gen.log_prob(x, {1, 2, 3}), ValidationError);
  EXPECT_THROW(gen.log_prob(Eigen::VectorXd::Zero(3), {1}), ValidationError);
}

TEST(ToyGenerator, GreedyAndHiddenState) {
  auto gen = bias_only_generator({0.1, 2.0, -1.0}, 2);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
  EXPECT_EQ(gen.greedy(x), (CaptionTokens{1, 1}));
  EXPECT_EQ(gen.hidden_state(x).size(), 2);
}

TEST(ToyGenerator, SamplingFrequenciesMatchProbabilities) {
  CounterRng rng(4);
  ToyGenerator gen(GeneratorShape{1, 3, 3, 2}, 5, 1.0);
  const auto x = random_feature(rng, 2);
  std::map<CaptionTokens, int> counts;
  const int draws = 20000;
  CounterRng sampler(77);
  for (int i = 0; i < draws; ++i) ++counts[gen.sample(x, sampler)];
  for (const auto& w : all_captions(3, 2)) {
    const double p = std::exp(gen.log_prob(x, w));
    const double sd = std::sqrt(p * (1 - p) / draws);
    EXPECT_NEAR(counts[w] / static_cast<double>(draws), p, 5 * sd + 1e-12);
  }
}

TEST(ToyGenerator, SamplingIsSeeded) {
  CounterRng rng(5);
  ToyGenerator gen(GeneratorShape{}, 6);
  const auto x = random_feature(rng, gen.feature_dim());
  CounterRng a(10), b(10);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(gen.sample(x, a), gen.sample(x, b));
}

TEST(AllCaptions, Lexicographic) {
  const auto all = all_captions(2, 2);
  EXPECT_EQ(all, (std::vector<CaptionTokens>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
  EXPECT_EQ(all_captions(4, 3).size(), 64u);
}

TEST(ToyDiscriminator, StrictlyInsideUnitInterval) {
  ToyDiscriminator disc(DiscriminatorShape{}, 1);
  disc.params().setConstant(50.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(8, 50.0);
  const double hi = disc.probability(x, {1});
  EXPECT_LT(hi, 1.0);
  disc.params().setConstant(-50.0);
  const double lo = disc.probability(x, {1});
  EXPECT_GT(lo, 0.0);
  EXPECT_NO_THROW(discriminator_loss(std::vector<double>{hi, lo}, std::vector<double>{lo, hi}, {}));
}

TEST(ToyDiscriminator, BagOfTokens) {
  CounterRng rng(6);
  ToyDiscriminator disc(DiscriminatorShape{}, 2);
  const auto x = random_feature(rng, 8);
  EXPECT_EQ(disc.probability(x, {1, 4}), disc.probability(x, {4, 1}));
  EXPECT_EQ(disc.probability(x, {0}), disc.probability(x, {0, 0}));
}

TEST(ToyDiscriminator, ZeroParamsGiveHalf) {
  ToyDiscriminator disc(DiscriminatorShape{}, 2);
  disc.params().setZero();
  EXPECT_EQ(disc.probability(Eigen::VectorXd::Ones(8), {3, 4}), 0.5);
}

TEST(Statistics, SignConvention) {
  CounterRng rng(7);
  ToyDiscriminator disc(DiscriminatorShape{}, 3);
  const auto x = random_feature(rng, 8);
  EXPECT_EQ(no_change_statistic(disc, x), -disc.probability(x, no_change_caption()));
  ToyImageOnlyDetector det(8, 4, 3);
  EXPECT_EQ(image_only_statistic(det, x), -det.probability(x));
  EXPECT_GT(det.probability(x), 0.0);
  EXPECT_LT(det.probability(x), 1.0);
  EXPECT_EQ(det.representation(x).size(), 4);
}

TEST(Reinforce, TwoTokenExample) {
  auto gen = bias_only_generator({std::log(0.6), std::log(0.4)});
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  EXPECT_NEAR(std::exp(gen.log_prob(x, {0})), 0.6, 1e-15);
  const RewardFunction reward = [](const CaptionTokens& w) { return w[0] == 0 ? 1.0 : 0.0; };
  const auto o = bias_offset(gen);
  const auto estimator_mean = reinforce_expectation(gen, x, reward);
  EXPECT_NEAR(estimator_mean(o), 0.24, 1e-15);
  EXPECT_NEAR(estimator_mean(o + 1), -0.24, 1e-15);

  const std::vector<double> params(gen.params().data(), gen.params().data() + gen.num_params());
  const ScalarFunction expected = [&](std::span<const double> p) {
    ToyGenerator g = gen;
    g.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    return expected_reward(g, x, reward);
  };
  const auto exact = five_point_gradient(expected, params);
  EXPECT_NEAR(exact[o], 0.24, 1e-10);

  // Average the single-sample estimator over the two outcomes by hand.
  Eigen::VectorXd by_hand = 0.6 * 1.0 * gen.log_prob_gradient(x, {0});
  EXPECT_NEAR(by_hand(o), 0.24, 1e-15);
}

TEST(Reinforce, ZeroRewardAndDeterministicPolicy) {
  CounterRng rng(8);
  ToyGenerator gen(GeneratorShape{}, 4);
  const auto x = random_feature(rng, gen.feature_dim());
  const RewardFunction zero = [](const CaptionTokens&) { return 0.0; };
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_EQ(reinforce_gradient(gen, x, zero, s).norm(), 0.0);

  auto sure = bias_only_generator({0.0, -1000.0});
  const RewardFunction one = [](const CaptionTokens&) { return 1.0; };
  for (std::uint64_t s = 0; s < 5; ++s) {
    EXPECT_EQ(reinforce_gradient(sure, Eigen::VectorXd::Zero(2), one, s).norm(), 0.0);
  }
}

TEST(Reinforce, DiscriminatorRewardIsLogD) {
  CounterRng rng(9);
  ToyGenerator gen(GeneratorShape{}, 4);
  ToyDiscriminator disc(DiscriminatorShape{}, 5);
  const auto x = random_feature(rng, gen.feature_dim());
  const RewardFunction log_d = [&](const CaptionTokens& w) { return std::log(disc.probability(x, w)); };
  for (std::uint64_t s = 0; s < 5; ++s) {
    EXPECT_EQ(reinforce_gradient(gen, x, disc, s), reinforce_gradient(gen, x, log_d, s));
  }
}

TEST(Reinforce, UnbiasedOnEnumerableSpaces) {
  CounterRng rng(10);
  for (int vocab = 2; vocab <= 4; ++vocab) {
    for (int length = 1; length <= 3; ++length) {
      ToyGenerator gen(GeneratorShape{2, 3, vocab, length}, hash64(vocab, length), 1.0);
      const auto x = random_feature(rng, 4);
      std::map<CaptionTokens, double> table;
      for (const auto& w : all_captions(vocab, length)) table[w] = -2.0 * rng.uniform();
      const RewardFunction reward = [&](const CaptionTokens& w) { return table.at(w); };
      const auto mean = reinforce_expectation(gen, x, reward);
      const std::vector<double> params(gen.params().data(),
                                       gen.params().data() + gen.num_params());
      const ScalarFunction f = [&](std::span<const double> p) {
        ToyGenerator g = gen;
        g.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
        return expected_reward(g, x, reward);
      };
      const auto exact = five_point_gradient(f, params);
      for (Eigen::Index i = 0; i < gen.num_params(); ++i) EXPECT_NEAR(mean(i), exact[i], 1e-9);
    }
  }
}

TEST(Phase3, ZeroDiscriminatorGolden) {
  // D = 1/2 everywhere, so L_3 = L_G(labeled) + 2 lambda_rl ln 2 for any
  // samples drawn.
  CounterRng rng(11);
  ToyGenerator gen(GeneratorShape{}, 7);
  ToyDiscriminator disc(DiscriminatorShape{}, 0);
  disc.params().setZero();
  Phase3Batch batch;
  batch.labeled.push_back({random_feature(rng, 8), {2, 5}});
  batch.unlabeled.push_back(random_feature(rng, 8));
  const auto samples = draw_phase3_samples(gen, batch, 3);
  ASSERT_EQ(samples.labeled.size(), 1u);
  ASSERT_EQ(samples.unlabeled.size(), 1u);
  const LossWeights w;
  const double lg = generator_batch_loss(gen, batch.labeled, w);
  const double l3 = phase3_batch_loss(gen, disc, batch, samples, w);
  EXPECT_NEAR(l3, lg + 0.4 * std::numbers::ln2, 1e-12);
  EXPECT_NEAR(l3, 4.1624710457840024, 1e-12);
  EXPECT_NEAR(expected_phase3_loss(gen, disc, batch, w), l3, 1e-12);
  EXPECT_EQ(samples.labeled[0], (CaptionTokens{5, 3}));
  EXPECT_EQ(samples.unlabeled[0], (CaptionTokens{2, 2}));
}

TEST(Phase3, GradientComposition) {
  CounterRng rng(12);
  ToyGenerator gen(GeneratorShape{}, 8);
  ToyDiscriminator disc(DiscriminatorShape{}, 9);
  Phase3Batch batch;
  for (int i = 0; i < 3; ++i) batch.labeled.push_back({random_feature(rng, 8), {1, 4}});
  for (int i = 0; i < 2; ++i) batch.unlabeled.push_back(random_feature(rng, 8));
  const auto samples = draw_phase3_samples(gen, batch, 5);
  const LossWeights w;

  Eigen::VectorXd lg_grad = Eigen::VectorXd::Zero(gen.num_params());
  generator_batch_loss(gen, batch.labeled, w, &lg_grad);
  Eigen::VectorXd plain = Eigen::VectorXd::Zero(gen.num_params());
  phase3_batch_loss(gen, disc, batch, samples, w, &plain, false);
  EXPECT_LT((plain - lg_grad).cwiseAbs().maxCoeff(), 1e-12);

  Eigen::VectorXd expected = lg_grad;
  for (std::size_t i = 0; i < batch.labeled.size(); ++i) {
    expected -= w.lambda_rl * std::log(disc.probability(batch.labeled[i].x, samples.labeled[i])) *
                gen.log_prob_gradient(batch.labeled[i].x, samples.labeled[i]);
  }
  for (std::size_t i = 0; i < batch.unlabeled.size(); ++i) {
    expected -= w.lambda_rl * std::log(disc.probability(batch.unlabeled[i], samples.unlabeled[i])) *
                gen.log_prob_gradient(batch.unlabeled[i], samples.unlabeled[i]);
  }
  Eigen::VectorXd full = Eigen::VectorXd::Zero(gen.num_params());
  phase3_batch_loss(gen, disc, batch, samples, w, &full, true);
  EXPECT_LT((full - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Phase3, SampleStreamsPerPair) {
  CounterRng rng(13);
  ToyGenerator gen(GeneratorShape{}, 8);
  Phase3Batch batch;
  batch.labeled.push_back({random_feature(rng, 8), {1, 4}});
  batch.unlabeled.push_back(random_feature(rng, 8));
  const auto samples = draw_phase3_samples(gen, batch, 21);
  CounterRng first(hash64(21, 0)), second(hash64(21, 1));
  EXPECT_EQ(samples.labeled[0], gen.sample(batch.labeled[0].x, first));
  EXPECT_EQ(samples.unlabeled[0], gen.sample(batch.unlabeled[0], second));
}

TEST(ImageOnly, LossIsBce) {
  CounterRng rng(14);
  ToyImageOnlyDetector det(4, 3, 1);
  std::vector<Eigen::VectorXd> xs{random_feature(rng, 4), random_feature(rng, 4)};
  std::vector<int> labels{1, 0};
  const double expected = -std::log(det.probability(xs[0])) - std::log(1 - det.probability(xs[1]));
  EXPECT_NEAR(image_only_batch_loss(det, xs, labels), expected, 1e-12);
}

TEST(GradientSuite, AllRowsPass) {
  const auto report = run_gradient_suite(123, 8);
  ASSERT_EQ(report.rows.size(), 6u);
  for (const auto& row : report.rows) {
    EXPECT_TRUE(row.passed) << row.name << " " << row.max_error;
    EXPECT_EQ(row.instances, 8);
    EXPECT_LT(row.max_error, row.tolerance);
  }
  EXPECT_TRUE(report.all_passed());
  EXPECT_NE(format_gradcheck_report(report).find("REINFORCE"), std::string::npos);
}

TEST(GradientSuite, DetectsWrongGradient) {
  // The checker itself must flag a gradient that is off.
  CounterRng rng(15);
  ToyGenerator gen(GeneratorShape{}, 2);
  std::vector<CaptionedPair> batch{{random_feature(rng, 8), {1, 4}}};
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(gen.num_params());
  generator_batch_loss(gen, batch, LossWeights{}, &grad);
  grad(0) *= 1.01;
  grad(0) += 1e-2;
  const std::vector<double> params(gen.params().data(), gen.params().data() + gen.num_params());
  const ScalarFunction f = [&](std::span<const double> p) {
    ToyGenerator g = gen;
    g.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    return generator_batch_loss(g, batch, LossWeights{});
  };
  EXPECT_GT(finite_difference_check(f, std::vector<double>(grad.data(), grad.data() + grad.size()),
                                    params),
            1e-4);
}

}  // namespace
}  // namespace vstream
