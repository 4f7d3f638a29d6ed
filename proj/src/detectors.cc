#include "vstream/detectors.h"

#include <cmath>

#include "vstream/errors.h"

namespace vstream {

namespace {

void check_kappa(int num_frames, int kappa) {
  if (kappa < 1 || kappa > num_frames - 1) {
    throw InvalidChangepoint("candidate changepoint " + std::to_string(kappa) +
                             " outside [1, " + std::to_string(num_frames - 1) +
                             "]");
  }
}

void require_representations(const StatTable& table) {
  if (!table.has_representations()) {
    throw MissingRepresentations(
        "consistency scores need hidden representations, table has none");
  }
}

std::size_t cut_size(int num_frames, int kappa) {
  return static_cast<std::size_t>(kappa) *
         static_cast<std::size_t>(num_frames - kappa);
}

// Difference of means as a single fraction; exact whenever the sums and
// products are exact, which makes constant shifts cancel bit-for-bit.
double mean_difference(double cut_sum, std::size_t cut_count,
                       double complement_sum, std::size_t complement_count) {
  const auto n = static_cast<double>(cut_count);
  if (complement_count == 0) return cut_sum / n;
  const auto m = static_cast<double>(complement_count);
  return (m * cut_sum - n * complement_sum) / (n * m);
}

double consistency_from_sums(double sum_norm2, double self_norm2,
                             std::size_t count, ConsistencyMode mode) {
  if (mode == ConsistencyMode::kRawSum) return sum_norm2;
  if (count == 1) return 1.0;
  const auto n = static_cast<double>(count);
  return (sum_norm2 - self_norm2) / (n * (n - 1.0));
}

struct ScoreKind {
  enum { kStep, kGc, kRc } kind;
  double lambda = 0.0;
};

ScoreKind score_kind(Method method, const RcParams& params) {
  switch (method) {
    case Method::kStep:
    case Method::kStepIo:
      return {ScoreKind::kStep};
    case Method::kGc:
    case Method::kGcIo:
      return {ScoreKind::kGc};
    case Method::kRc:
    case Method::kRcIo:
      return {ScoreKind::kRc, params.lambda_rc};
    case Method::kRcLambda0:
      return {ScoreKind::kRc, 0.0};
  }
  return {ScoreKind::kStep};
}

void check_params(const RcParams& params) {
  if (!std::isfinite(params.lambda_rc) || params.lambda_rc < 0.0) {
    throw InvalidConfig("lambda_rc must be finite and >= 0");
  }
}

}  // namespace

CutPartition cut_partition(int num_frames, int kappa) {
  check_kappa(num_frames, kappa);
  CutPartition partition;
  partition.kappa = kappa;
  partition.cut_edges.reserve(cut_size(num_frames, kappa));
  for (const PairKey& key : all_pair_keys(num_frames)) {
    (straddles(key, kappa) ? partition.cut_edges : partition.complement_edges)
        .push_back(key);
  }
  return partition;
}

double step_score(const StatTable& table, int kappa) {
  check_kappa(table.num_frames(), kappa);
  return table.p(kappa - 1, kappa);
}

double gc_score(const StatTable& table, int kappa) {
  check_kappa(table.num_frames(), kappa);
  double cut_sum = 0.0;
  double complement_sum = 0.0;
  std::size_t cut_count = 0;
  std::size_t complement_count = 0;
  for (const PairKey& key : all_pair_keys(table.num_frames())) {
    if (straddles(key, kappa)) {
      cut_sum += table.p(key);
      ++cut_count;
    } else {
      complement_sum += table.p(key);
      ++complement_count;
    }
  }
  return mean_difference(cut_sum, cut_count, complement_sum, complement_count);
}

double consistency_score(const StatTable& table, int kappa,
                         ConsistencyMode mode) {
  check_kappa(table.num_frames(), kappa);
  require_representations(table);
  const auto dim = static_cast<std::size_t>(table.rep_dim());
  std::vector<double> sum(dim, 0.0);
  std::vector<double> unit(dim);
  double self_norm2 = 0.0;
  std::size_t count = 0;
  for (int t = 0; t < kappa; ++t) {
    for (int tp = kappa; tp < table.num_frames(); ++tp) {
      const auto h = table.h(t, tp);
      double norm2 = 0.0;
      for (double v : h) norm2 += v * v;
      const double norm = std::sqrt(norm2);
      double unit_norm2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        unit[i] = h[i] / norm;
        unit_norm2 += unit[i] * unit[i];
        sum[i] += unit[i];
      }
      self_norm2 += unit_norm2;
      ++count;
    }
  }
  double sum_norm2 = 0.0;
  for (double v : sum) sum_norm2 += v * v;
  return consistency_from_sums(sum_norm2, self_norm2, count, mode);
}

double rc_score(const StatTable& table, int kappa, const RcParams& params) {
  check_params(params);
  require_representations(table);
  return params.lambda_rc * gc_score(table, kappa) +
         consistency_score(table, kappa, params.consistency);
}

std::vector<double> score_profile(const StatTable& table, Method method,
                                  const RcParams& params) {
  const ScoreKind kind = score_kind(method, params);
  if (kind.kind == ScoreKind::kRc) require_representations(table);
  RcParams rc = params;
  rc.lambda_rc = kind.lambda;
  std::vector<double> profile;
  profile.reserve(static_cast<std::size_t>(table.num_frames() - 1));
  for (int kappa = 1; kappa < table.num_frames(); ++kappa) {
    switch (kind.kind) {
      case ScoreKind::kStep:
        profile.push_back(step_score(table, kappa));
        break;
      case ScoreKind::kGc:
        profile.push_back(gc_score(table, kappa));
        break;
      case ScoreKind::kRc:
        profile.push_back(rc_score(table, kappa, rc));
        break;
    }
  }
  return profile;
}

std::vector<double> score_profile_incremental(const StatTable& table,
                                              Method method,
                                              const RcParams& params) {
  const ScoreKind kind = score_kind(method, params);
  const int n = table.num_frames();
  std::vector<double> profile;
  profile.reserve(static_cast<std::size_t>(n - 1));
  if (kind.kind == ScoreKind::kStep) {
    for (int kappa = 1; kappa < n; ++kappa) {
      profile.push_back(table.p(kappa - 1, kappa));
    }
    return profile;
  }
  const bool with_reps = kind.kind == ScoreKind::kRc;
  if (with_reps) {
    check_params(params);
    require_representations(table);
  }

  const auto dim = with_reps ? static_cast<std::size_t>(table.rep_dim()) : 0;
  // Unit representations and their squared norms, in pair order.
  std::vector<double> units;
  std::vector<double> unit_norm2;
  if (with_reps) {
    units.resize(table.num_pairs() * dim);
    unit_norm2.resize(table.num_pairs());
    std::size_t e = 0;
    for (int t = 0; t < n; ++t) {
      for (int tp = t + 1; tp < n; ++tp, ++e) {
        const auto h = table.h(t, tp);
        double norm2 = 0.0;
        for (double v : h) norm2 += v * v;
        const double norm = std::sqrt(norm2);
        double u2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
          const double u = h[i] / norm;
          units[e * dim + i] = u;
          u2 += u * u;
        }
        unit_norm2[e] = u2;
      }
    }
  }

  double total = 0.0;
  for (double p : table.p_values()) total += p;

  double cut_sum = 0.0;
  double self_norm2 = 0.0;
  std::vector<double> rep_sum(dim, 0.0);
  auto add_edge = [&](int t, int tp, double sign) {
    const std::size_t e = pair_index(n, t, tp);
    cut_sum += sign * table.p(t, tp);
    if (!with_reps) return;
    self_norm2 += sign * unit_norm2[e];
    const double* u = &units[e * dim];
    for (std::size_t i = 0; i < dim; ++i) rep_sum[i] += sign * u[i];
  };

  for (int tp = 1; tp < n; ++tp) add_edge(0, tp, 1.0);
  const std::size_t all_pairs = table.num_pairs();
  for (int kappa = 1; kappa < n; ++kappa) {
    if (kappa > 1) {
      // E(kappa) = E(kappa-1) - {(t, kappa-1) : t < kappa-1}
      //                       + {(kappa-1, t') : t' >= kappa}
      for (int t = 0; t < kappa - 1; ++t) add_edge(t, kappa - 1, -1.0);
      for (int tp = kappa; tp < n; ++tp) add_edge(kappa - 1, tp, 1.0);
    }
    const std::size_t count = cut_size(n, kappa);
    const double gc = mean_difference(cut_sum, count, total - cut_sum,
                                      all_pairs - count);
    if (!with_reps) {
      profile.push_back(gc);
      continue;
    }
    double sum_norm2 = 0.0;
    for (double v : rep_sum) sum_norm2 += v * v;
    profile.push_back(kind.lambda * gc +
                      consistency_from_sums(sum_norm2, self_norm2, count,
                                            params.consistency));
  }
  return profile;
}

DetectionResult result_from_profile(std::vector<double> profile, Method method,
                                    std::string stream_id) {
  DetectionResult result;
  result.stream_id = std::move(stream_id);
  result.method = method;
  std::size_t best = 0;
  for (std::size_t i = 1; i < profile.size(); ++i) {
    if (profile[i] > profile[best]) best = i;
  }
  result.kappa_hat = static_cast<int>(best) + 1;
  result.confidence = profile.empty() ? 0.0 : profile[best];
  result.profile = std::move(profile);
  return result;
}

DetectionResult detect(const StatTable& table, Method method,
                       const RcParams& params, std::string stream_id) {
  return result_from_profile(score_profile(table, method, params), method,
                             std::move(stream_id));
}

DetectionResult detect_incremental(const StatTable& table, Method method,
                                   const RcParams& params,
                                   std::string stream_id) {
  return result_from_profile(score_profile_incremental(table, method, params),
                             method, std::move(stream_id));
}

}  // namespace vstream
