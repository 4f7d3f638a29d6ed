#ifndef VSTREAM_SIMULATOR_H_
#define VSTREAM_SIMULATOR_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vstream/core_model.h"

namespace vstream {

// Synthetic stand-in for a learned pairwise statistic provider. Defaults
// follow the CLEVR-Sequence shape: 10 frames per stream, changepoints 1..8,
// 400 streams per changepoint plus 400 distractor streams.
struct SimConfig {
  int num_streams = 400;  // per candidate changepoint
  int num_frames = 10;
  std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7, 8};
  int no_change_streams = 400;
  int rep_dim = 16;
  double mu_change = 1.0;
  double mu_nochange = 0.0;
  double sigma_p = 0.0;
  double sigma_h = 0.0;
  std::uint64_t seed = 0;
};

// Throws InvalidConfig.
void validate_sim_config(const SimConfig& config);

struct SimulatedStream {
  StatTable table;
  GroundTruth truth;
};

// Draw order within a stream (generator keyed by stream_seed): first the
// rep_dim normals of the change direction u, then for each pair in (t, t')
// order one normal for the statistic noise followed by rep_dim normals for
// the representation noise. The layout does not depend on the sigmas.
//
// Straddling pairs (t < kappa* <= t'): p = mu_change + sigma_p * n,
//   h = normalize(u + sigma_h * eps).
// Other pairs, and every pair of a no-change stream: p = mu_nochange +
//   sigma_p * n, h = normalize(eps).
//
// Throws InvalidChangepoint if kappa_star is outside the candidate set.
SimulatedStream simulate_stream(const SimConfig& config,
                                std::optional<int> kappa_star,
                                std::uint64_t stream_seed,
                                std::string stream_id = "stream");

// Stream i (0-based; change streams grouped by candidate in ascending order,
// then the no-change streams) has id "s" + 6-digit i and stream seed
// hash64(config.seed, i). Output is identical for any worker count.
std::vector<SimulatedStream> simulate_benchmark(const SimConfig& config,
                                                int workers = 1);

std::string benchmark_stream_id(std::size_t index);

}  // namespace vstream

#endif  // VSTREAM_SIMULATOR_H_
