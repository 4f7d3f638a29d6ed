#ifndef VSTREAM_CORE_MODEL_H_
#define VSTREAM_CORE_MODEL_H_

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vstream {

// Frames are opaque indices 0..N-1. A changepoint kappa is the index of the
// first post-change frame: frames {0..kappa-1} precede the change and
// {kappa..N-1} follow it, so valid changepoints lie in [1, N-1].

using CaptionTokens = std::vector<int>;

// Token 0 is reserved for "no change"; the no-change caption is the single
// token sequence {0}.
inline constexpr int kNoChangeToken = 0;
inline const CaptionTokens& no_change_caption() {
  static const CaptionTokens caption{kNoChangeToken};
  return caption;
}

struct PairKey {
  int t = 0;
  int t_prime = 0;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

// True when the pair straddles `kappa`, i.e. t < kappa <= t_prime.
inline bool straddles(const PairKey& key, int kappa) {
  return key.t < kappa && kappa <= key.t_prime;
}

constexpr std::size_t pair_count(int num_frames) {
  return num_frames < 2 ? 0
                        : static_cast<std::size_t>(num_frames) *
                              static_cast<std::size_t>(num_frames - 1) / 2;
}

// Position of (t, t_prime) in the lexicographic enumeration of the upper
// triangle. Caller guarantees 0 <= t < t_prime < num_frames.
constexpr std::size_t pair_index(int num_frames, int t, int t_prime) {
  const auto n = static_cast<std::size_t>(num_frames);
  const auto row = static_cast<std::size_t>(t);
  return row * n - row * (row + 1) / 2 +
         static_cast<std::size_t>(t_prime - t - 1);
}

// All pair keys for `num_frames` frames, sorted by (t, t_prime).
std::vector<PairKey> all_pair_keys(int num_frames);

std::string to_string(const PairKey& key);

struct PairObservation {
  PairKey key;
  double p = 0.0;
  // Hidden representation; empty when the provider supplies none.
  std::vector<double> h;

  friend bool operator==(const PairObservation&,
                         const PairObservation&) = default;
};

// Throws MissingPair, InvalidPairKey, DimensionMismatch, NonFiniteValue or
// InvalidRepresentation naming the offending pair. Observations may come in
// any order.
void validate_stat_table(int num_frames,
                         std::span<const PairObservation> observations);

// Every pairwise change statistic p(t, t') and, optionally, hidden
// representation h(t, t') of one stream. Immutable once built; the only way
// in is from_observations, which validates.
class StatTable {
 public:
  static StatTable from_observations(int num_frames,
                                     std::vector<PairObservation> observations);

  int num_frames() const { return num_frames_; }
  std::size_t num_pairs() const { return p_.size(); }
  // 0 when the table carries no representations.
  int rep_dim() const { return rep_dim_; }
  bool has_representations() const { return rep_dim_ > 0; }

  double p(int t, int t_prime) const {
    return p_[pair_index(num_frames_, t, t_prime)];
  }
  double p(const PairKey& key) const { return p(key.t, key.t_prime); }
  std::span<const double> h(int t, int t_prime) const;
  std::span<const double> h(const PairKey& key) const {
    return h(key.t, key.t_prime);
  }

  // Statistics in lexicographic pair order.
  std::span<const double> p_values() const { return p_; }

  std::vector<PairObservation> observations() const;

  friend bool operator==(const StatTable&, const StatTable&) = default;

 private:
  StatTable() = default;

  int num_frames_ = 0;
  int rep_dim_ = 0;
  std::vector<double> p_;
  std::vector<double> h_;
};

struct StreamManifest {
  std::string stream_id;
  int num_frames = 0;
  std::optional<int> true_changepoint;
  std::vector<CaptionTokens> captions;
  // Captions describing the time-reversed stream; used only when mining the
  // reversed index sequence.
  std::vector<CaptionTokens> reversed_captions;
};

// Throws ValidationError if num_frames < 2 or the changepoint is out of
// [1, N-1].
void validate_manifest(const StreamManifest& manifest);

struct GroundTruth {
  std::string stream_id;
  std::optional<int> kappa_star;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

enum class Method { kStep, kGc, kRc, kStepIo, kGcIo, kRcIo, kRcLambda0 };

std::string_view method_name(Method method);
// Accepts the canonical names ("step", "gc", "rc", "step-io", "gc-io",
// "rc-io", "rc-lambda0") and the CLI shorthand "rc0". Throws ValidationError.
Method parse_method(std::string_view name);

struct DetectionResult {
  std::string stream_id;
  Method method = Method::kStep;
  int kappa_hat = 1;
  double confidence = 0.0;
  // profile[kappa - 1] is the score of candidate kappa, kappa in [1, N-1].
  // Empty for results read back from a detections file.
  std::vector<double> profile;

  friend bool operator==(const DetectionResult&,
                         const DetectionResult&) = default;
};

}  // namespace vstream

#endif  // VSTREAM_CORE_MODEL_H_
