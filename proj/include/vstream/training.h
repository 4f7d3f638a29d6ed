#ifndef VSTREAM_TRAINING_H_
#define VSTREAM_TRAINING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vstream/core_model.h"
#include "vstream/description_losses.h"
#include "vstream/toy_models.h"

namespace vstream {

// A tiny world of frames. Cell i < change_types holds the presence bit of
// object i; the last cell is background. Every cell also sees a global
// lighting level that drifts as a random walk, plus Gaussian noise. A change
// of type c makes object c appear at frame kappa: its bit is 0 before and 1
// from kappa on, so a linear read-out of the frame difference separates the
// change types. Toy streams carry no reversed captions.
struct ToyWorldConfig {
  int change_types = 3;
  int num_frames = 8;
  double lighting_step = 0.1;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

inline int toy_frame_dim(const ToyWorldConfig& world) { return world.change_types + 1; }
// Token 0 is "no change", 1..C name the object, C+1..2C its change verb.
inline int toy_vocab(const ToyWorldConfig& world) { return 1 + 2 * world.change_types; }
inline constexpr int kToyCaptionLength = 2;

CaptionTokens toy_caption(const ToyWorldConfig& world, int change_type);

struct ToyStream {
  StreamManifest manifest;
  int change_type = -1;  // -1 without a change
  std::vector<Eigen::VectorXd> frames;
};

// Stream `index` draws from CounterRng(hash64(world.seed, index)). With a
// change, kappa is uniform on [1, N-1] and the type uniform on
// [0, change_types); only annotated streams carry captions.
ToyStream make_toy_stream(const ToyWorldConfig& world, std::uint64_t index,
                          bool has_change, bool annotated);

// Annotated, then unannotated, then no-change streams, using stream indices
// first_index, first_index + 1, ...
std::vector<ToyStream> make_toy_corpus(const ToyWorldConfig& world, int annotated,
                                       int unannotated, int no_change,
                                       std::uint64_t first_index = 0);

// [frame_t; frame_t'].
Eigen::VectorXd pair_feature(const ToyStream& stream, const PairKey& key);

// Mined pairs with features. Labeled captions shorter than `caption_length`
// are padded by repeating their last token, so the no-change caption {0}
// becomes (0, ..., 0).
using ToyDataset = Phase3Batch;
ToyDataset build_toy_dataset(std::span<const ToyStream> streams,
                             int caption_length = kToyCaptionLength);

struct TrainConfig {
  int vocab = 7;
  int caption_length = kToyCaptionLength;
  int generator_hidden = 8;
  int discriminator_embed = 8;
  int discriminator_hidden = 8;
  LossWeights weights;
  double generator_lr = 1.0;
  double discriminator_lr = 2.0;
  double phase3_lr = 0.1;
  // Labeled pairs per minibatch; unlabeled pairs are spread over the same
  // number of batches. 0 means full batch.
  int batch_size = 32;
  int phase3_batch_size = 0;
  int phase1_epochs = 30;
  int phase2_epochs = 30;
  int phase3_epochs = 10;
  double lr_decay = 0.9;
  int decay_every = 5;
  std::uint64_t seed = 0;
  bool track_expected_phase3 = true;
};

// lr0 * decay^floor(epoch / every).
double scheduled_rate(double lr0, int epoch, double decay = 0.9, int every = 5);

// The indices 0..n-1 shuffled with CounterRng(seed) and cut into
// num_batches contiguous slices of near-equal size.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t num_batches,
                                                    std::uint64_t seed);

// Minibatch gradient descent; each history entry sums the batch losses of
// one epoch, each taken before its step, and every step averages the
// gradient over the batch. Phase 1 and Phase 3 visit the same batches in
// the same order when batch_size equals phase3_batch_size. All throw
// DivergedLoss on a non-finite loss or parameter.
std::vector<double> run_phase1(ToyGenerator& generator, const ToyDataset& data,
                               const TrainConfig& config, int epochs);

// Positives are the labeled pairs. Each labeled pair also gets one caption
// drawn from the other distinct labeled captions as a labeled negative, and
// each unlabeled pair one labeled caption as a cross negative.
DiscriminatorBatch phase2_batch(const ToyDataset& data, std::uint64_t seed);

std::vector<double> run_phase2(ToyDiscriminator& discriminator,
                               const ToyDataset& data, const TrainConfig& config,
                               int epochs);

struct Phase3History {
  std::vector<double> sampled;   // summed batch L_3 at the drawn samples
  std::vector<double> expected;  // exact E[L_3] before each epoch and after the last
};

// The discriminator stays fixed. One caption is sampled per pair per step.
Phase3History run_phase3(ToyGenerator& generator,
                         const ToyDiscriminator& discriminator,
                         const ToyDataset& data, const TrainConfig& config,
                         int epochs);

struct TrainHistory {
  std::vector<double> phase1;
  std::vector<double> phase2;
  Phase3History phase3;
};

struct TrainedModels {
  ToyGenerator generator;
  ToyDiscriminator discriminator;
  TrainHistory history;
};

// Phase 1, then Phase 2, then Phase 3. Throws ValidationError on an empty
// dataset.
TrainedModels train_phases(const ToyDataset& data, const TrainConfig& config);

// Fraction of correct calls on the labeled pairs of `data` (D > 1/2) and on
// one mismatched caption per pair (D < 1/2).
double discriminator_accuracy(const ToyDiscriminator& discriminator,
                              const ToyDataset& data, std::uint64_t seed);

struct ImageOnlyConfig {
  int hidden = 8;
  double lr = 1.0;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 0;
};

// Every pair of every stream, label 1 unless it straddles the changepoint.
ToyImageOnlyDetector train_image_only(std::span<const ToyStream> streams,
                                      const ImageOnlyConfig& config,
                                      std::vector<double>* history = nullptr);

// p = -D(no change, pair), h = the generator's final hidden state.
StatTable discriminator_stat_table(const ToyStream& stream,
                                   const ToyDiscriminator& discriminator,
                                   const ToyGenerator& generator);
// p = -D~(pair), h = the detector's penultimate layer.
StatTable image_only_stat_table(const ToyStream& stream,
                                const ToyImageOnlyDetector& detector);

}  // namespace vstream

#endif  // VSTREAM_TRAINING_H_
