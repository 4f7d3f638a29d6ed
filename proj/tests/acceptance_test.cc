// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and budgets are fixed constants below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "vstream/cli.h"
#include "vstream/detectors.h"
#include "vstream/errors.h"
#include "vstream/gradcheck.h"
#include "vstream/pair_mining.h"
#include "vstream/stream_io.h"
#include "vstream/training.h"

namespace vstream {
namespace {

constexpr double kProfileTolerance = 1e-9;
constexpr double kOracleBudgetSeconds = 10.0;
constexpr double kHandExampleTolerance = 1e-12;
constexpr double kNoiselessBudgetSeconds = 60.0;
constexpr double kNoisyBudgetSeconds = 300.0;
constexpr double kOrderingMargin = 5.0;
constexpr double kGoldenApTolerance = 1e-9;
constexpr double kHeldOutAccuracy = 0.95;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, value);
  return buf;
}

int run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  if (code != 0) std::fprintf(stderr, "cli failed (%d): %s\n", code, err.str().c_str());
  return code;
}

// method -> window -> AP, plus window -1 for mAP.
using ApTable = std::map<std::string, std::map<int, double>>;

ApTable parse_report(const std::string& text) {
  ApTable table;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    const std::string method = line.substr(0, a);
    const std::string window = line.substr(a + 1, b - a - 1);
    table[method][window == "mAP" ? -1 : std::stoi(window)] = std::stod(line.substr(b + 1));
  }
  return table;
}

bool monotone(const ApTable& table, std::string& detail) {
  for (const auto& [method, aps] : table) {
    double prev = -1.0;
    for (int w = 0; w <= 4; ++w) {
      if (aps.at(w) < prev) {
        detail += method + " drops at window " + std::to_string(w) + "; ";
        return false;
      }
      prev = aps.at(w);
    }
  }
  return true;
}

// Runs simulate -> detect -> eval through the CLI and returns the report.
std::string pipeline(const std::filesystem::path& dir, std::vector<std::string> sim_flags,
                     std::vector<std::string> methods) {
  std::vector<std::string> sim{"simulate", "--out", (dir / "data").string()};
  sim.insert(sim.end(), sim_flags.begin(), sim_flags.end());
  if (run_cli(sim) != 0) throw Error("simulate failed");
  std::vector<std::string> det{"detect", "--scores", (dir / "data").string(), "--out",
                               (dir / "det.csv").string(), "--lambda", "1.25"};
  for (const auto& m : methods) {
    det.push_back("--method");
    det.push_back(m);
  }
  if (run_cli(det) != 0) throw Error("detect failed");
  if (run_cli({"eval", "--detections", (dir / "det.csv").string(), "--truth",
               (dir / "data" / "truth.csv").string(), "--windows", "0,1,2,3,4", "--out",
               (dir / "report.csv").string(), "--pr-out", (dir / "pr.csv").string()}) != 0) {
    throw Error("eval failed");
  }
  return read_text_file(dir / "report.csv");
}

ApTable noiseless_aps;
ApTable noisy_aps;

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  CounterRng rng(20240601);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + static_cast<int>(rng.below(23));
    const int d = 1 + static_cast<int>(rng.below(8));
    const auto table = oracle::random_table(rng, n, d);
    const auto incremental = score_profile_incremental(table, Method::kRc);
    const auto naive = oracle::profile(table, Method::kRc);
    for (std::size_t k = 0; k < naive.size(); ++k) {
      worst = std::max(worst, std::abs(incremental[k] - naive[k]));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < kProfileTolerance && elapsed < kOracleBudgetSeconds,
          "200 tables, max deviation " + fmt("%.3e", worst) + " (< 1e-9), " +
              fmt("%.2f", elapsed) + " s (< 10 s)"};
}

Outcome gc_hand_example() {
  const auto table = StatTable::from_observations(
      4, {{{0, 1}, 0.1, {}}, {{0, 2}, 0.9, {}}, {{0, 3}, 0.8, {}},
          {{1, 2}, 1.0, {}}, {{1, 3}, 0.7, {}}, {{2, 3}, 0.2, {}}});
  const std::vector<double> expected{-1.0 / 30.0, 0.70, -0.1};
  const auto result = detect(table, Method::kGc);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(result.profile[k] - expected[k]));
  return {worst <= kHandExampleTolerance && result.kappa_hat == 2,
          "profile error " + fmt("%.3e", worst) + " (<= 1e-12), kappa_hat " +
              std::to_string(result.kappa_hat)};
}

Outcome shift_scale_invariance() {
  CounterRng rng(77);
  int shift_failures = 0, argmax_failures = 0;
  for (int i = 0; i < 100; ++i) {
    // N >= 3: at N = 2 the empty complement has mean 0 by convention, so
    // the score is not shift invariant there.
    const int n = 3 + static_cast<int>(rng.below(22));
    // Dyadic grid: every sum in the score is exact, so equality is exact.
    const double c = std::ldexp(static_cast<double>(rng.below(1024)) - 512.0, -4);
    const double a = std::ldexp(1.0 + static_cast<double>(rng.below(63)), -3);
    std::vector<PairObservation> base, shifted, scaled;
    for (const auto& key : all_pair_keys(n)) {
      const double p = std::ldexp(static_cast<double>(rng.below(4096)) - 2048.0, -8);
      base.push_back({key, p, {}});
      shifted.push_back({key, p + c, {}});
      scaled.push_back({key, a * p, {}});
    }
    const auto t0 = StatTable::from_observations(n, base);
    const auto t1 = StatTable::from_observations(n, shifted);
    const auto t2 = StatTable::from_observations(n, scaled);
    for (int k = 1; k < n; ++k) {
      if (gc_score(t1, k) != gc_score(t0, k)) ++shift_failures;
    }
    if (detect(t2, Method::kGc).kappa_hat != detect(t0, Method::kGc).kappa_hat) ++argmax_failures;
  }
  return {shift_failures == 0 && argmax_failures == 0,
          "100 tables, " + std::to_string(shift_failures) + " inexact shifts, " +
              std::to_string(argmax_failures) + " argmax changes under scaling"};
}

Outcome noiseless_end_to_end() {
  const auto dir = oracle::scratch_dir("acceptance_noiseless");
  const auto start = Clock::now();
  const auto report = pipeline(dir, {"--seed", "1"}, {"step", "gc", "rc", "rc0"});
  const double elapsed = seconds_since(start);
  noiseless_aps = parse_report(report);

  const auto truths = load_ground_truth(dir / "data" / "truth.csv");
  std::map<std::string, std::optional<int>> truth_by_id;
  for (const auto& t : truths) truth_by_id[t.stream_id] = t.kappa_star;
  int misses = 0;
  for (const auto& d : load_detections(dir / "det.csv")) {
    const auto& k = truth_by_id.at(d.stream_id);
    if (k && *k != d.kappa_hat) ++misses;
  }
  bool perfect = noiseless_aps.size() == 4;
  for (const auto& [method, aps] : noiseless_aps) {
    for (const auto& [w, ap] : aps) perfect = perfect && ap == 100.0;
  }
  return {truths.size() == 3600 && misses == 0 && perfect && elapsed < kNoiselessBudgetSeconds,
          std::to_string(truths.size()) + " streams, " + std::to_string(misses) +
              " missed changepoints, all AP and mAP 100.0: " + (perfect ? "yes" : "no") + ", " +
              fmt("%.1f", elapsed) + " s (< 60 s)"};
}

Outcome noisy_ordering() {
  const auto dir = oracle::scratch_dir("acceptance_noisy");
  const auto start = Clock::now();
  const auto report =
      pipeline(dir, {"--seed", "42", "--sigma-p", "1.0", "--sigma-h", "0.2"},
               {"step", "gc", "rc", "rc0"});
  const double elapsed = seconds_since(start);
  noisy_aps = parse_report(report);
  const auto golden = parse_report(
      read_text_file(std::filesystem::path(VSTREAM_TEST_DATA_DIR) / "noisy_benchmark_ap.csv"));

  double golden_dev = 0.0;
  bool same_keys = golden.size() == noisy_aps.size();
  for (const auto& [method, aps] : golden) {
    for (const auto& [w, ap] : aps) {
      if (!noisy_aps.count(method) || !noisy_aps.at(method).count(w)) {
        same_keys = false;
        continue;
      }
      golden_dev = std::max(golden_dev, std::abs(noisy_aps.at(method).at(w) - ap));
    }
  }
  const double rc0 = noisy_aps["rc"][0], gc0 = noisy_aps["gc"][0], step0 = noisy_aps["step"][0];
  bool rc_beats_step = true;
  for (int w = -1; w <= 4; ++w) {
    rc_beats_step = rc_beats_step && noisy_aps["rc"][w] >= noisy_aps["step"][w] + kOrderingMargin;
  }
  const bool ok = rc0 >= gc0 + kOrderingMargin && rc_beats_step && same_keys &&
                  golden_dev <= kGoldenApTolerance && elapsed < kNoisyBudgetSeconds;
  return {ok, "AP@0 rc " + fmt("%.2f", rc0) + " gc " + fmt("%.2f", gc0) + " step " +
                  fmt("%.2f", step0) + " (margin 5 at every window and mAP vs step), golden deviation " +
                  fmt("%.1e", golden_dev) + " (<= 1e-9), " + fmt("%.1f", elapsed) + " s (< 300 s)"};
}

Outcome ap_monotonicity() {
  std::string detail;
  const bool a = !noiseless_aps.empty() && monotone(noiseless_aps, detail);
  const bool b = !noisy_aps.empty() && monotone(noisy_aps, detail);
  return {a && b, detail.empty() ? "non-decreasing for every method on both benchmarks" : detail};
}

GradCheckReport gradient_report;

Outcome gradient_suite() {
  gradient_report = run_gradient_suite(0, 50);
  bool ok = true;
  std::string detail;
  for (const auto& row : gradient_report.rows) {
    if (row.name.find("REINFORCE") != std::string::npos) continue;
    ok = ok && row.instances == 50 && row.max_error < kGradientTolerance;
    detail += row.name + " " + fmt("%.1e", row.max_error) + "; ";
  }
  return {ok && gradient_report.rows.size() == 6, detail + "tolerance 1e-4, 50 instances"};
}

Outcome reinforce_unbiasedness() {
  for (const auto& row : gradient_report.rows) {
    if (row.name.find("REINFORCE") == std::string::npos) continue;
    return {row.instances == 50 && row.max_error < kReinforceTolerance,
            "max abs error " + fmt("%.2e", row.max_error) + " (< 1e-9) over 50 instances, V<=4, K<=3"};
  }
  return {false, "no REINFORCE row"};
}

Outcome mining_counts() {
  int failures = 0;
  for (int n = 2; n <= 12; ++n) {
    for (int k = 1; k < n; ++k) {
      const auto annotated = mine_annotated({"s", n, k, {{1, 2}}, {}});
      const auto unannotated = mine_unannotated({"s", n, k, {}, {}});
      long long straddling = 0, no_change = 0;
      for (const auto& p : annotated.labeled) {
        (p.caption == no_change_caption() ? no_change : straddling) += 1;
      }
      const bool ok =
          straddling == static_cast<long long>(k) * (n - k) &&
          no_change == oracle::choose2(k) + oracle::choose2(n - k) &&
          static_cast<long long>(annotated.labeled.size() + annotated.unlabeled.size()) ==
              oracle::choose2(n) &&
          static_cast<long long>(unannotated.labeled.size() + unannotated.unlabeled.size()) ==
              oracle::choose2(n) &&
          static_cast<long long>(unannotated.unlabeled.size()) == straddling;
      if (!ok) ++failures;
    }
  }
  const auto fig = mine_annotated({"fig3", 5, 3, {{1, 2}}, {}});
  std::vector<PairKey> none, change;
  for (const auto& p : fig.labeled) (p.caption == no_change_caption() ? none : change).push_back(p.key);
  const bool fig_ok =
      none == std::vector<PairKey>{{0, 1}, {0, 2}, {1, 2}, {3, 4}} &&
      change == std::vector<PairKey>{{0, 3}, {0, 4}, {1, 3}, {1, 4}, {2, 3}, {2, 4}};
  return {failures == 0 && fig_ok,
          std::to_string(failures) + " count failures over N in [2,12]; figure stream " +
              std::to_string(none.size()) + " no-change + " + std::to_string(change.size()) +
              " change pairs"};
}

Outcome toy_training() {
  ToyWorldConfig world;
  world.seed = 11;
  const auto train = make_toy_corpus(world, 20, 10, 10, 0);
  const auto held_out = make_toy_corpus(world, 10, 5, 5, 1000);
  const auto train_data = build_toy_dataset(train);
  const auto held_data = build_toy_dataset(held_out);
  double worst_accuracy = 1.0;
  int non_decreasing = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    TrainConfig config;
    config.seed = seed;
    const auto models = train_phases(train_data, config);
    worst_accuracy = std::min(
        worst_accuracy, discriminator_accuracy(models.discriminator, held_data, hash64(seed, 99)));
    const auto& l3 = models.history.phase3.expected;
    if (l3.size() != 11) ++non_decreasing;
    for (std::size_t i = 1; i < l3.size(); ++i) {
      if (!(l3[i] < l3[i - 1])) {
        ++non_decreasing;
        break;
      }
    }
  }
  return {worst_accuracy > kHeldOutAccuracy && non_decreasing == 0,
          "8 seeds, worst held-out accuracy " + fmt("%.4f", worst_accuracy) +
              " (> 0.95), " + std::to_string(non_decreasing) +
              " runs without strictly decreasing expected L_3 over 10 epochs"};
}

Outcome reproducibility() {
  std::vector<std::filesystem::path> dirs;
  for (const char* name : {"acceptance_repro_a", "acceptance_repro_b"}) {
    const auto dir = oracle::scratch_dir(name);
    pipeline(dir,
             {"--seed", "9", "--sigma-p", "0.7", "--sigma-h", "0.3", "--streams-per-changepoint",
              "30", "--no-change", "30", "--workers", dirs.empty() ? "1" : "4"},
             {"step", "gc", "rc", "rc0"});
    write_text_file(dir / "manifest.json",
                    R"({"streams":[{"stream_id":"a","num_frames":7,"true_changepoint":3,"captions":[[1,4],[2,5]]},)"
                    R"({"stream_id":"b","num_frames":6,"true_changepoint":2},{"stream_id":"c","num_frames":4}]})");
    if (run_cli({"mine-pairs", "--manifest", (dir / "manifest.json").string(), "--out",
                 (dir / "pairs.csv").string()}) != 0) {
      return {false, "mine-pairs failed"};
    }
    dirs.push_back(dir);
  }
  int files = 0, differing = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dirs[0])) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dirs[0]);
    ++files;
    if (!std::filesystem::exists(dirs[1] / rel) ||
        read_text_file(entry.path()) != read_text_file(dirs[1] / rel)) {
      ++differing;
    }
  }
  ToyWorldConfig world;
  world.seed = 3;
  const auto data = build_toy_dataset(make_toy_corpus(world, 5, 3, 2));
  TrainConfig config;
  config.phase1_epochs = config.phase2_epochs = 5;
  config.phase3_epochs = 3;
  const auto m1 = train_phases(data, config);
  const auto m2 = train_phases(data, config);
  const bool models_equal = m1.generator.params() == m2.generator.params() &&
                            m1.discriminator.params() == m2.discriminator.params();
  return {files > 100 && differing == 0 && models_equal,
          std::to_string(files) + " files compared, " + std::to_string(differing) +
              " differ; trained parameters identical: " + (models_equal ? "yes" : "no")};
}

}  // namespace
}  // namespace vstream

int main() {
  using vstream::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence of incremental rc profiles", vstream::oracle_equivalence},
      {"hand-worked graph-cut example", vstream::gc_hand_example},
      {"shift/scale invariance of the graph-cut score", vstream::shift_scale_invariance},
      {"noiseless end-to-end benchmark", vstream::noiseless_end_to_end},
      {"noisy benchmark ordering and golden APs", vstream::noisy_ordering},
      {"AP monotone in the window", vstream::ap_monotonicity},
      {"gradient suite", vstream::gradient_suite},
      {"REINFORCE unbiasedness", vstream::reinforce_unbiasedness},
      {"mining counts", vstream::mining_counts},
      {"toy three-phase training", vstream::toy_training},
      {"reproducibility", vstream::reproducibility},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
