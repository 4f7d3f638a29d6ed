#include "vstream/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "vstream/errors.h"
#include "vstream/pair_mining.h"
#include "vstream/rng.h"

namespace vstream {

namespace {

void check_finite(double loss, const char* phase, int epoch) {
  if (!std::isfinite(loss)) {
    throw DivergedLoss(std::string(phase) + " loss is not finite at epoch " +
                       std::to_string(epoch));
  }
}

void step(Eigen::VectorXd& params, double scale, const Eigen::VectorXd& grad,
          const char* phase, int epoch) {
  params -= scale * grad;
  if (!params.allFinite()) {
    throw DivergedLoss(std::string(phase) + " parameters are not finite at epoch " +
                       std::to_string(epoch));
  }
}

std::vector<CaptionTokens> distinct_captions(const ToyDataset& data) {
  std::vector<CaptionTokens> out;
  for (const auto& item : data.labeled) out.push_back(item.caption);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

CaptionTokens toy_caption(const ToyWorldConfig& world, int change_type) {
  if (change_type < 0) return no_change_caption();
  if (change_type >= world.change_types) {
    throw ValidationError("change type out of range");
  }
  return {1 + change_type, 1 + world.change_types + change_type};
}

ToyStream make_toy_stream(const ToyWorldConfig& world, std::uint64_t index,
                          bool has_change, bool annotated) {
  if (world.change_types < 1 || world.num_frames < 2) {
    throw InvalidConfig("toy world needs a change type and two frames");
  }
  CounterRng rng(hash64(world.seed, index));
  const int n = world.num_frames;
  const int c = world.change_types;
  std::vector<int> bits(c);
  for (int& b : bits) b = static_cast<int>(rng.below(2));
  const int kappa = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
  const int type = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));

  ToyStream stream;
  char id[32];
  std::snprintf(id, sizeof(id), "toy%06llu", static_cast<unsigned long long>(index));
  stream.manifest.stream_id = id;
  stream.manifest.num_frames = n;
  if (has_change) {
    stream.change_type = type;
    stream.manifest.true_changepoint = kappa;
    if (annotated) {
      stream.manifest.captions = {toy_caption(world, type)};
    }
  }

  double lighting = 0.5 * rng.uniform();
  for (int t = 0; t < n; ++t) {
    if (t > 0) lighting += world.lighting_step * rng.normal();
    Eigen::VectorXd frame(c + 1);
    for (int i = 0; i < c; ++i) {
      int bit = bits[i];
      if (has_change && i == type) bit = t >= kappa ? 1 : 0;
      frame[i] = bit + lighting + world.noise * rng.normal();
    }
    frame[c] = lighting + world.noise * rng.normal();
    stream.frames.push_back(std::move(frame));
  }
  return stream;
}

std::vector<ToyStream> make_toy_corpus(const ToyWorldConfig& world, int annotated,
                                       int unannotated, int no_change,
                                       std::uint64_t first_index) {
  std::vector<ToyStream> out;
  std::uint64_t index = first_index;
  for (int i = 0; i < annotated; ++i) out.push_back(make_toy_stream(world, index++, true, true));
  for (int i = 0; i < unannotated; ++i) out.push_back(make_toy_stream(world, index++, true, false));
  for (int i = 0; i < no_change; ++i) out.push_back(make_toy_stream(world, index++, false, false));
  return out;
}

Eigen::VectorXd pair_feature(const ToyStream& stream, const PairKey& key) {
  const int n = static_cast<int>(stream.frames.size());
  if (key.t < 0 || key.t >= key.t_prime || key.t_prime >= n) {
    throw InvalidPairKey("pair " + to_string(key) + " is not in the stream");
  }
  const auto& a = stream.frames[key.t];
  const auto& b = stream.frames[key.t_prime];
  Eigen::VectorXd x(a.size() + b.size());
  x << a, b;
  return x;
}

ToyDataset build_toy_dataset(std::span<const ToyStream> streams, int caption_length) {
  ToyDataset data;
  for (const auto& stream : streams) {
    const MinedPairs mined = mine_stream(stream.manifest);
    for (const auto& pair : mined.labeled) {
      CaptionTokens caption = pair.caption;
      while (static_cast<int>(caption.size()) < caption_length) {
        caption.push_back(caption.back());
      }
      data.labeled.push_back({pair_feature(stream, pair.key), std::move(caption)});
    }
    for (const auto& key : mined.unlabeled) {
      data.unlabeled.push_back(pair_feature(stream, key));
    }
  }
  return data;
}

double scheduled_rate(double lr0, int epoch, double decay, int every) {
  return lr0 * std::pow(decay, epoch / every);
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t num_batches,
                                                    std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  CounterRng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::vector<std::size_t>> batches(std::max<std::size_t>(1, num_batches));
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const std::size_t begin = b * n / batches.size();
    const std::size_t end = (b + 1) * n / batches.size();
    batches[b].assign(order.begin() + begin, order.begin() + end);
  }
  return batches;
}

namespace {

std::size_t num_batches(const ToyDataset& data, int batch_size) {
  if (batch_size <= 0) return 1;
  const auto size = static_cast<std::size_t>(batch_size);
  return std::max<std::size_t>(1, (data.labeled.size() + size - 1) / size);
}

// Batch b of an epoch: labeled slice b and unlabeled slice b, both shuffled
// with keys shared by Phase 1 and Phase 3.
Phase3Batch slice(const ToyDataset& data, const TrainConfig& config, int batch_size,
                  int epoch, std::size_t b) {
  const std::uint64_t key = hash64(hash64(config.seed, 10), static_cast<std::uint64_t>(epoch));
  const std::size_t count = num_batches(data, batch_size);
  const auto labeled = epoch_batches(data.labeled.size(), count, hash64(key, 0));
  const auto unlabeled = epoch_batches(data.unlabeled.size(), count, hash64(key, 1));
  Phase3Batch batch;
  for (std::size_t i : labeled[b]) batch.labeled.push_back(data.labeled[i]);
  for (std::size_t i : unlabeled[b]) batch.unlabeled.push_back(data.unlabeled[i]);
  return batch;
}

double per_item(std::size_t n) {
  return 1.0 / static_cast<double>(std::max<std::size_t>(1, n));
}

}  // namespace

std::vector<double> run_phase1(ToyGenerator& generator, const ToyDataset& data,
                               const TrainConfig& config, int epochs) {
  std::vector<double> history;
  const std::size_t count = num_batches(data, config.batch_size);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double lr = scheduled_rate(config.generator_lr, epoch, config.lr_decay,
                                     config.decay_every);
    double total = 0.0;
    for (std::size_t b = 0; b < count; ++b) {
      const Phase3Batch batch = slice(data, config, config.batch_size, epoch, b);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(generator.num_params());
      const double loss =
          generator_batch_loss(generator, batch.labeled, config.weights, &grad);
      check_finite(loss, "phase 1", epoch);
      total += loss;
      step(generator.params(), lr * per_item(batch.labeled.size()), grad, "phase 1", epoch);
    }
    history.push_back(total);
  }
  return history;
}

DiscriminatorBatch phase2_batch(const ToyDataset& data, std::uint64_t seed) {
  const std::vector<CaptionTokens> captions = distinct_captions(data);
  DiscriminatorBatch batch;
  batch.positives = data.labeled;
  CounterRng rng(seed);
  if (captions.size() >= 2) {
    for (const auto& item : data.labeled) {
      // Uniform over the distinct captions other than the pair's own.
      const auto own = std::lower_bound(captions.begin(), captions.end(), item.caption) -
                       captions.begin();
      auto pick = static_cast<std::ptrdiff_t>(rng.below(captions.size() - 1));
      if (pick >= own) ++pick;
      batch.labeled_negatives.push_back({item.x, captions[pick]});
    }
  }
  if (!captions.empty()) {
    for (const auto& x : data.unlabeled) {
      batch.unlabeled_negatives.push_back({x, captions[rng.below(captions.size())]});
    }
  }
  return batch;
}

std::vector<double> run_phase2(ToyDiscriminator& discriminator,
                               const ToyDataset& data, const TrainConfig& config,
                               int epochs) {
  std::vector<double> history;
  const std::uint64_t key = hash64(config.seed, 2);
  const std::size_t count = num_batches(data, config.batch_size);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::uint64_t epoch_key = hash64(key, static_cast<std::uint64_t>(epoch));
    const DiscriminatorBatch full = phase2_batch(data, hash64(epoch_key, 0));
    const auto labeled = epoch_batches(full.positives.size(), count, hash64(epoch_key, 1));
    const auto unlabeled =
        epoch_batches(full.unlabeled_negatives.size(), count, hash64(epoch_key, 2));
    const double lr = scheduled_rate(config.discriminator_lr, epoch, config.lr_decay,
                                     config.decay_every);
    double total = 0.0;
    for (std::size_t b = 0; b < count; ++b) {
      DiscriminatorBatch batch;
      for (std::size_t i : labeled[b]) {
        batch.positives.push_back(full.positives[i]);
        if (!full.labeled_negatives.empty()) {
          batch.labeled_negatives.push_back(full.labeled_negatives[i]);
        }
      }
      for (std::size_t i : unlabeled[b]) {
        batch.unlabeled_negatives.push_back(full.unlabeled_negatives[i]);
      }
      const std::size_t terms = batch.positives.size() + batch.labeled_negatives.size() +
                                batch.unlabeled_negatives.size();
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(discriminator.num_params());
      const double loss = discriminator_batch_loss(discriminator, batch, &grad);
      check_finite(loss, "phase 2", epoch);
      total += loss;
      step(discriminator.params(), lr * per_item(terms), grad, "phase 2", epoch);
    }
    history.push_back(total);
  }
  return history;
}

Phase3History run_phase3(ToyGenerator& generator,
                         const ToyDiscriminator& discriminator,
                         const ToyDataset& data, const TrainConfig& config,
                         int epochs) {
  Phase3History history;
  const std::uint64_t key = hash64(config.seed, 3);
  const std::size_t count = num_batches(data, config.phase3_batch_size);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    if (config.track_expected_phase3) {
      history.expected.push_back(
          expected_phase3_loss(generator, discriminator, data, config.weights));
    }
    const std::uint64_t epoch_key = hash64(key, static_cast<std::uint64_t>(epoch));
    const double lr = scheduled_rate(config.phase3_lr, epoch, config.lr_decay,
                                     config.decay_every);
    double total = 0.0;
    for (std::size_t b = 0; b < count; ++b) {
      const Phase3Batch batch = slice(data, config, config.phase3_batch_size, epoch, b);
      const Phase3Samples samples =
          draw_phase3_samples(generator, batch, hash64(epoch_key, b));
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(generator.num_params());
      const double loss = phase3_batch_loss(generator, discriminator, batch, samples,
                                            config.weights, &grad);
      check_finite(loss, "phase 3", epoch);
      total += loss;
      step(generator.params(), lr * per_item(batch.labeled.size()), grad, "phase 3", epoch);
    }
    history.sampled.push_back(total);
  }
  if (config.track_expected_phase3) {
    history.expected.push_back(
        expected_phase3_loss(generator, discriminator, data, config.weights));
  }
  return history;
}

TrainedModels train_phases(const ToyDataset& data, const TrainConfig& config) {
  if (data.labeled.empty()) throw ValidationError("training needs labeled pairs");
  const int feature_dim = static_cast<int>(data.labeled.front().x.size());
  if (feature_dim % 2 != 0) throw DimensionMismatch("pair features must have even size");

  GeneratorShape gshape;
  gshape.frame_dim = feature_dim / 2;
  gshape.hidden = config.generator_hidden;
  gshape.vocab = config.vocab;
  gshape.max_length = config.caption_length;
  DiscriminatorShape dshape;
  dshape.feature_dim = feature_dim;
  dshape.vocab = config.vocab;
  dshape.embed = config.discriminator_embed;
  dshape.hidden = config.discriminator_hidden;

  TrainedModels models{ToyGenerator(gshape, hash64(config.seed, 0)),
                       ToyDiscriminator(dshape, hash64(config.seed, 1)),
                       {}};
  models.history.phase1 = run_phase1(models.generator, data, config, config.phase1_epochs);
  models.history.phase2 =
      run_phase2(models.discriminator, data, config, config.phase2_epochs);
  models.history.phase3 = run_phase3(models.generator, models.discriminator, data,
                                     config, config.phase3_epochs);
  return models;
}

double discriminator_accuracy(const ToyDiscriminator& discriminator,
                              const ToyDataset& data, std::uint64_t seed) {
  const DiscriminatorBatch batch = phase2_batch(data, seed);
  std::size_t correct = 0;
  for (const auto& item : batch.positives) {
    if (discriminator.probability(item.x, item.caption) > 0.5) ++correct;
  }
  for (const auto& item : batch.labeled_negatives) {
    if (discriminator.probability(item.x, item.caption) < 0.5) ++correct;
  }
  const std::size_t total = batch.positives.size() + batch.labeled_negatives.size();
  if (total == 0) throw ValidationError("no labeled pairs to score");
  return static_cast<double>(correct) / static_cast<double>(total);
}

ToyImageOnlyDetector train_image_only(std::span<const ToyStream> streams,
                                      const ImageOnlyConfig& config,
                                      std::vector<double>* history) {
  std::vector<Eigen::VectorXd> features;
  std::vector<int> labels;
  for (const auto& stream : streams) {
    for (const auto& key : all_pair_keys(stream.manifest.num_frames)) {
      features.push_back(pair_feature(stream, key));
      const bool change = stream.manifest.true_changepoint &&
                          straddles(key, *stream.manifest.true_changepoint);
      labels.push_back(change ? 0 : 1);
    }
  }
  if (features.empty()) throw ValidationError("training needs at least one pair");
  ToyImageOnlyDetector detector(static_cast<int>(features.front().size()), config.hidden,
                                hash64(config.seed, 4));
  const std::size_t count =
      config.batch_size <= 0
          ? 1
          : (features.size() + static_cast<std::size_t>(config.batch_size) - 1) /
                static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = epoch_batches(features.size(), count,
                                       hash64(hash64(config.seed, 5), epoch));
    const double lr = scheduled_rate(config.lr, epoch);
    double total = 0.0;
    for (const auto& indices : batches) {
      std::vector<Eigen::VectorXd> xs;
      std::vector<int> ys;
      for (std::size_t i : indices) {
        xs.push_back(features[i]);
        ys.push_back(labels[i]);
      }
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(detector.num_params());
      const double loss = image_only_batch_loss(detector, xs, ys, &grad);
      check_finite(loss, "image-only", epoch);
      total += loss;
      step(detector.params(), lr * per_item(xs.size()), grad, "image-only", epoch);
    }
    if (history) history->push_back(total);
  }
  return detector;
}

StatTable discriminator_stat_table(const ToyStream& stream,
                                   const ToyDiscriminator& discriminator,
                                   const ToyGenerator& generator) {
  std::vector<PairObservation> observations;
  for (const auto& key : all_pair_keys(stream.manifest.num_frames)) {
    const Eigen::VectorXd x = pair_feature(stream, key);
    const Eigen::VectorXd h = generator.hidden_state(x);
    observations.push_back({key, no_change_statistic(discriminator, x),
                            std::vector<double>(h.data(), h.data() + h.size())});
  }
  return StatTable::from_observations(stream.manifest.num_frames, std::move(observations));
}

StatTable image_only_stat_table(const ToyStream& stream,
                                const ToyImageOnlyDetector& detector) {
  std::vector<PairObservation> observations;
  for (const auto& key : all_pair_keys(stream.manifest.num_frames)) {
    const Eigen::VectorXd x = pair_feature(stream, key);
    const Eigen::VectorXd h = detector.representation(x);
    observations.push_back({key, image_only_statistic(detector, x),
                            std::vector<double>(h.data(), h.data() + h.size())});
  }
  return StatTable::from_observations(stream.manifest.num_frames, std::move(observations));
}

}  // namespace vstream
