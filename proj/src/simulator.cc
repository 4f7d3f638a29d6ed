#include "vstream/simulator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vstream/errors.h"
#include "vstream/parallel.h"
#include "vstream/rng.h"

namespace vstream {

namespace {

void normalize_in_place(std::vector<double>& v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  const double norm = std::sqrt(norm2);
  for (double& x : v) x /= norm;
}

}  // namespace

void validate_sim_config(const SimConfig& config) {
  if (config.num_frames < 2) {
    throw InvalidConfig("num_frames must be >= 2");
  }
  if (config.num_streams < 0 || config.no_change_streams < 0) {
    throw InvalidConfig("stream counts must be >= 0");
  }
  if (config.rep_dim < 0) throw InvalidConfig("rep_dim must be >= 0");
  if (!(config.mu_change > config.mu_nochange)) {
    throw InvalidConfig("mu_change must exceed mu_nochange");
  }
  if (!(config.sigma_p >= 0.0) || !(config.sigma_h >= 0.0) ||
      !std::isfinite(config.sigma_p) || !std::isfinite(config.sigma_h)) {
    throw InvalidConfig("sigma_p and sigma_h must be finite and >= 0");
  }
  for (int kappa : config.candidates) {
    if (kappa < 1 || kappa > config.num_frames - 1) {
      throw InvalidChangepoint("candidate changepoint " +
                               std::to_string(kappa) + " outside [1, " +
                               std::to_string(config.num_frames - 1) + "]");
    }
  }
}

SimulatedStream simulate_stream(const SimConfig& config,
                                std::optional<int> kappa_star,
                                std::uint64_t stream_seed,
                                std::string stream_id) {
  validate_sim_config(config);
  if (kappa_star &&
      std::find(config.candidates.begin(), config.candidates.end(),
                *kappa_star) == config.candidates.end()) {
    throw InvalidChangepoint("changepoint " + std::to_string(*kappa_star) +
                             " is not a configured candidate");
  }

  CounterRng rng(stream_seed);
  const auto dim = static_cast<std::size_t>(config.rep_dim);
  std::vector<double> direction(dim);
  for (double& x : direction) x = rng.normal();
  if (dim > 0) normalize_in_place(direction);

  std::vector<PairObservation> observations;
  observations.reserve(pair_count(config.num_frames));
  for (const PairKey& key : all_pair_keys(config.num_frames)) {
    const bool change = kappa_star && straddles(key, *kappa_star);
    PairObservation obs{key, 0.0, std::vector<double>(dim)};
    const double noise = rng.normal();
    obs.p = (change ? config.mu_change : config.mu_nochange) +
            config.sigma_p * noise;
    for (std::size_t i = 0; i < dim; ++i) {
      const double eps = rng.normal();
      obs.h[i] = change ? direction[i] + config.sigma_h * eps : eps;
    }
    if (dim > 0) normalize_in_place(obs.h);
    observations.push_back(std::move(obs));
  }
  return {StatTable::from_observations(config.num_frames,
                                       std::move(observations)),
          GroundTruth{std::move(stream_id), kappa_star}};
}

std::string benchmark_stream_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%06zu", index);
  return buf;
}

std::vector<SimulatedStream> simulate_benchmark(const SimConfig& config,
                                                int workers) {
  validate_sim_config(config);
  std::vector<int> candidates = config.candidates;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  std::vector<std::optional<int>> plan;
  for (int kappa : candidates) {
    plan.insert(plan.end(), static_cast<std::size_t>(config.num_streams),
                kappa);
  }
  plan.insert(plan.end(), static_cast<std::size_t>(config.no_change_streams),
              std::nullopt);

  std::vector<std::optional<SimulatedStream>> slots(plan.size());
  parallel_for(plan.size(), workers, [&](std::size_t i) {
    slots[i] = simulate_stream(config, plan[i], hash64(config.seed, i),
                               benchmark_stream_id(i));
  });
  std::vector<SimulatedStream> streams;
  streams.reserve(slots.size());
  for (auto& slot : slots) streams.push_back(std::move(*slot));
  return streams;
}

}  // namespace vstream
