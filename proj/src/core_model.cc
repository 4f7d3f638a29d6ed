#include "vstream/core_model.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "vstream/errors.h"

namespace vstream {

std::vector<PairKey> all_pair_keys(int num_frames) {
  std::vector<PairKey> keys;
  keys.reserve(pair_count(num_frames));
  for (int t = 0; t < num_frames; ++t) {
    for (int tp = t + 1; tp < num_frames; ++tp) keys.push_back({t, tp});
  }
  return keys;
}

std::string to_string(const PairKey& key) {
  return "(" + std::to_string(key.t) + "," + std::to_string(key.t_prime) + ")";
}

void validate_stat_table(int num_frames,
                         std::span<const PairObservation> observations) {
  if (num_frames < 2) {
    throw ValidationError("stat table needs at least 2 frames, got " +
                          std::to_string(num_frames));
  }
  std::vector<const PairObservation*> sorted;
  sorted.reserve(observations.size());
  for (const auto& obs : observations) sorted.push_back(&obs);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->key < b->key; });

  std::optional<std::size_t> rep_dim;
  const PairObservation* previous = nullptr;
  for (const auto* obs : sorted) {
    const PairKey& key = obs->key;
    if (key.t < 0 || key.t >= key.t_prime || key.t_prime >= num_frames) {
      throw InvalidPairKey("pair " + to_string(key) + " is not a valid pair of " +
                           std::to_string(num_frames) + " frames");
    }
    if (previous != nullptr && previous->key == key) {
      throw InvalidPairKey("duplicate pair " + to_string(key));
    }
    previous = obs;
    if (!std::isfinite(obs->p)) {
      throw NonFiniteValue("non-finite statistic at pair " + to_string(key));
    }
    if (!rep_dim) rep_dim = obs->h.size();
    if (obs->h.size() != *rep_dim) {
      throw DimensionMismatch("representation at pair " + to_string(key) +
                              " has dimension " +
                              std::to_string(obs->h.size()) + ", expected " +
                              std::to_string(*rep_dim));
    }
    double norm2 = 0.0;
    for (double v : obs->h) {
      if (!std::isfinite(v)) {
        throw NonFiniteValue("non-finite representation at pair " +
                             to_string(key));
      }
      norm2 += v * v;
    }
    if (!obs->h.empty() && !(norm2 > 0.0)) {
      throw InvalidRepresentation("zero representation at pair " +
                                  to_string(key));
    }
  }

  // With keys valid and unique, any shortfall is a missing pair; find the
  // first one in lexicographic order.
  if (sorted.size() != pair_count(num_frames)) {
    std::size_t i = 0;
    for (const PairKey& key : all_pair_keys(num_frames)) {
      if (i < sorted.size() && sorted[i]->key == key) {
        ++i;
        continue;
      }
      throw MissingPair("missing pair " + to_string(key));
    }
  }
}

StatTable StatTable::from_observations(
    int num_frames, std::vector<PairObservation> observations) {
  validate_stat_table(num_frames, observations);
  std::sort(observations.begin(), observations.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });
  StatTable table;
  table.num_frames_ = num_frames;
  table.rep_dim_ = static_cast<int>(observations.front().h.size());
  table.p_.reserve(observations.size());
  table.h_.reserve(observations.size() *
                   static_cast<std::size_t>(table.rep_dim_));
  for (auto& obs : observations) {
    table.p_.push_back(obs.p);
    table.h_.insert(table.h_.end(), obs.h.begin(), obs.h.end());
  }
  return table;
}

std::span<const double> StatTable::h(int t, int t_prime) const {
  if (rep_dim_ == 0) return {};
  const auto dim = static_cast<std::size_t>(rep_dim_);
  return std::span<const double>(h_).subspan(
      pair_index(num_frames_, t, t_prime) * dim, dim);
}

std::vector<PairObservation> StatTable::observations() const {
  std::vector<PairObservation> out;
  out.reserve(p_.size());
  std::size_t i = 0;
  for (const PairKey& key : all_pair_keys(num_frames_)) {
    auto rep = h(key);
    out.push_back({key, p_[i++], std::vector<double>(rep.begin(), rep.end())});
  }
  return out;
}

void validate_manifest(const StreamManifest& manifest) {
  if (manifest.num_frames < 2) {
    throw ValidationError("stream '" + manifest.stream_id +
                          "' needs at least 2 frames");
  }
  if (manifest.true_changepoint &&
      (*manifest.true_changepoint < 1 ||
       *manifest.true_changepoint > manifest.num_frames - 1)) {
    throw InvalidChangepoint("stream '" + manifest.stream_id +
                             "' has changepoint " +
                             std::to_string(*manifest.true_changepoint) +
                             " outside [1, " +
                             std::to_string(manifest.num_frames - 1) + "]");
  }
}

namespace {

struct MethodEntry {
  Method method;
  std::string_view name;
};

constexpr std::array<MethodEntry, 7> kMethods{{
    {Method::kStep, "step"},
    {Method::kGc, "gc"},
    {Method::kRc, "rc"},
    {Method::kStepIo, "step-io"},
    {Method::kGcIo, "gc-io"},
    {Method::kRcIo, "rc-io"},
    {Method::kRcLambda0, "rc-lambda0"},
}};

}  // namespace

std::string_view method_name(Method method) {
  for (const auto& entry : kMethods) {
    if (entry.method == method) return entry.name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "rc0") return Method::kRcLambda0;
  for (const auto& entry : kMethods) {
    if (entry.name == name) return entry.method;
  }
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

}  // namespace vstream
