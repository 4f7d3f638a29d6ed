#ifndef VSTREAM_DETECTORS_H_
#define VSTREAM_DETECTORS_H_

#include <string>
#include <vector>

#include "vstream/core_model.h"

namespace vstream {

// Cutting the complete pair graph at candidate kappa splits the pairs into
// the cut edges E = {(t, t') : t < kappa <= t'} and their complement.
struct CutPartition {
  int kappa = 1;
  std::vector<PairKey> cut_edges;
  std::vector<PairKey> complement_edges;
};

// Throws InvalidChangepoint unless 1 <= kappa <= num_frames - 1.
CutPartition cut_partition(int num_frames, int kappa);

enum class ConsistencyMode {
  // Mean cosine over ordered pairs of distinct cut edges; 1 for a lone edge.
  kMeanDistinctPairs,
  // Sum of cosines over all ordered pairs including self-pairs,
  // ||sum of unit representations||^2. Kept for comparison only.
  kRawSum,
};

struct RcParams {
  double lambda_rc = 1.25;
  ConsistencyMode consistency = ConsistencyMode::kMeanDistinctPairs;
};

// p(kappa - 1, kappa).
double step_score(const StatTable& table, int kappa);

// Mean statistic over cut edges minus mean over the complement. The
// complement mean is 0 when the complement is empty (N = 2).
double gc_score(const StatTable& table, int kappa);

// Throws MissingRepresentations when the table has none.
double consistency_score(
    const StatTable& table, int kappa,
    ConsistencyMode mode = ConsistencyMode::kMeanDistinctPairs);

// lambda_rc * gc_score + consistency_score.
double rc_score(const StatTable& table, int kappa, const RcParams& params = {});

// Score profile over kappa = 1..N-1 evaluated by the score functions above,
// one candidate at a time.
std::vector<double> score_profile(const StatTable& table, Method method,
                                  const RcParams& params = {});

// Same profile from running sums over the cut edges, moving kappa -> kappa+1
// by removing edges (t, kappa) and adding edges (kappa, t'). O(N^2 d) total.
std::vector<double> score_profile_incremental(const StatTable& table,
                                              Method method,
                                              const RcParams& params = {});

// kappa_hat is the smallest argmax of the profile, confidence its value.
DetectionResult detect(const StatTable& table, Method method,
                       const RcParams& params = {}, std::string stream_id = {});
DetectionResult detect_incremental(const StatTable& table,
                                   Method method = Method::kRc,
                                   const RcParams& params = {},
                                   std::string stream_id = {});

// Builds a DetectionResult from a profile.
DetectionResult result_from_profile(std::vector<double> profile, Method method,
                                    std::string stream_id);

}  // namespace vstream

#endif  // VSTREAM_DETECTORS_H_
