#include "vstream/cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "vstream/core_model.h"
#include "vstream/detectors.h"
#include "vstream/errors.h"
#include "vstream/evaluation.h"
#include "vstream/gradcheck.h"
#include "vstream/pair_mining.h"
#include "vstream/parallel.h"
#include "vstream/rng.h"
#include "vstream/simulator.h"
#include "vstream/stream_io.h"

namespace vstream {

namespace fs = std::filesystem;

namespace {

struct SimulateFlags {
  SimConfig config;
  std::string out;
  int workers = 1;
};

struct DetectFlags {
  std::string scores;
  std::vector<std::string> methods{"rc"};
  bool image_only = false;
  double lambda = 1.25;
  std::string consistency = "mean";
  std::string out;
  int workers = 1;
};

struct EvalFlags {
  std::string detections;
  std::string truth;
  std::vector<int> windows{0, 1, 2, 3, 4};
  std::string out;
  std::string pr_out;
};

struct MineFlags {
  std::string manifest;
  std::string out;
  bool reverse = false;
};

struct GradcheckFlags {
  std::uint64_t seed = 0;
  int instances = 50;
};

struct BenchFlags {
  int frames = 512;
  std::uint64_t seed = 3;
  double sigma_p = 1.0;
  double sigma_h = 0.2;
  int rep_dim = 16;
  std::string method = "rc";
};

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

struct ScoreSource {
  std::string stream_id;
  fs::path path;
};

// index.csv (stream_id,file) when present, otherwise every *.json sorted by
// file name with the stem as stream id.
std::vector<ScoreSource> list_score_sources(const fs::path& scores) {
  std::error_code ec;
  if (fs::is_regular_file(scores, ec)) return {{scores.stem().string(), scores}};
  if (!fs::is_directory(scores, ec)) {
    throw IoError("--scores: " + scores.string() + " is neither a file nor a directory");
  }
  std::vector<ScoreSource> sources;
  const fs::path index = scores / "index.csv";
  if (fs::is_regular_file(index, ec)) {
    std::istringstream in(read_text_file(index));
    std::string line;
    bool header = true;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (header) {
        if (line != "stream_id,file") {
          throw ParseError(index.string() + ": expected header 'stream_id,file'");
        }
        header = false;
        continue;
      }
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
        throw ParseError(index.string() + ":" + std::to_string(line_no) +
                         ": expected 'stream_id,file'");
      }
      sources.push_back({fields[0], scores / fields[1]});
    }
    return sources;
  }
  for (const auto& entry : fs::directory_iterator(scores)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      sources.push_back({entry.path().stem().string(), entry.path()});
    }
  }
  std::sort(sources.begin(), sources.end(),
            [](const auto& a, const auto& b) { return a.path < b.path; });
  return sources;
}

int do_simulate(const SimulateFlags& flags, std::ostream& out) {
  validate_sim_config(flags.config);
  const fs::path dir(flags.out);
  ensure_directory(dir);
  const auto streams = simulate_benchmark(flags.config, flags.workers);
  std::vector<GroundTruth> truths;
  std::string index = "stream_id,file\n";
  for (const auto& stream : streams) {
    const std::string file = stream.truth.stream_id + ".json";
    save_stat_table(stream.table, dir / file);
    truths.push_back(stream.truth);
    index += stream.truth.stream_id + "," + file + "\n";
  }
  write_ground_truth(truths, dir / "truth.csv");
  write_text_file(dir / "index.csv", index);
  out << "wrote " << streams.size() << " streams to " << dir.string() << "\n";
  return kExitOk;
}

Method with_image_only(Method method) {
  switch (method) {
    case Method::kStep:
      return Method::kStepIo;
    case Method::kGc:
      return Method::kGcIo;
    case Method::kRc:
      return Method::kRcIo;
    default:
      return method;
  }
}

int do_detect(const DetectFlags& flags, std::ostream& out) {
  std::vector<Method> methods;
  for (const auto& name : flags.methods) {
    try {
      Method m = parse_method(name);
      methods.push_back(flags.image_only ? with_image_only(m) : m);
    } catch (Error& e) {
      e.add_context("--method");
      throw;
    }
  }
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  if (!std::isfinite(flags.lambda) || flags.lambda < 0.0) {
    throw InvalidConfig("--lambda must be finite and >= 0");
  }
  RcParams params;
  params.lambda_rc = flags.lambda;
  if (flags.consistency == "mean") {
    params.consistency = ConsistencyMode::kMeanDistinctPairs;
  } else if (flags.consistency == "sum") {
    params.consistency = ConsistencyMode::kRawSum;
  } else {
    throw InvalidConfig("--consistency must be 'mean' or 'sum'");
  }

  const auto sources = list_score_sources(flags.scores);
  std::vector<std::vector<DetectionResult>> per_stream(sources.size());
  parallel_for(sources.size(), flags.workers, [&](std::size_t i) {
    const StatTable table = load_stat_table(sources[i].path);
    for (Method method : methods) {
      try {
        per_stream[i].push_back(
            detect_incremental(table, method, params, sources[i].stream_id));
      } catch (Error& e) {
        e.add_context(sources[i].path.string());
        throw;
      }
      per_stream[i].back().profile.clear();
    }
  });
  std::vector<DetectionResult> results;
  for (auto& chunk : per_stream) {
    for (auto& r : chunk) results.push_back(std::move(r));
  }
  write_detections(results, flags.out);
  out << "wrote " << results.size() << " detections for " << sources.size()
      << " streams to " << flags.out << "\n";
  return kExitOk;
}

int do_eval(const EvalFlags& flags, std::ostream& out) {
  if (flags.windows.empty()) throw InvalidConfig("--windows must not be empty");
  for (int w : flags.windows) {
    if (w < 0) throw InvalidConfig("--windows entries must be >= 0");
  }
  const auto detections = load_detections(flags.detections);
  const auto truths = load_ground_truth(flags.truth);
  std::map<std::string, std::vector<DetectionResult>> by_method;
  for (const auto& d : detections) by_method[std::string(method_name(d.method))].push_back(d);
  if (by_method.empty()) throw ValidationError(flags.detections + ": no detections");

  std::string report = "method,window,ap\n";
  std::string pr = "method,window,recall,precision\n";
  std::ostringstream table;
  char cell[32];
  table << "method      ";
  for (int w : flags.windows) {
    std::snprintf(cell, sizeof(cell), "%8s", ("AP@" + std::to_string(w)).c_str());
    table << cell;
  }
  table << "     mAP\n";
  for (const auto& [name, dets] : by_method) {
    EvalReport result;
    try {
      result = map_over_windows(dets, truths, flags.windows);
    } catch (Error& e) {
      e.add_context("method " + name);
      throw;
    }
    char label[32];
    std::snprintf(label, sizeof(label), "%-12s", name.c_str());
    table << label;
    for (int w : flags.windows) {
      std::snprintf(cell, sizeof(cell), "%8.2f", result.ap_per_window.at(w));
      table << cell;
    }
    std::snprintf(cell, sizeof(cell), "%8.2f\n", result.map_value);
    table << cell;
    for (const auto& [w, ap] : result.ap_per_window) {
      report += name + "," + std::to_string(w) + "," + format_real(ap) + "\n";
      for (const auto& point : result.pr_points.at(w)) {
        pr += name + "," + std::to_string(w) + "," + format_real(point.recall) + "," +
              format_real(point.precision) + "\n";
      }
    }
    report += name + ",mAP," + format_real(result.map_value) + "\n";
  }
  out << table.str();
  if (!flags.out.empty()) write_text_file(flags.out, report);
  if (!flags.pr_out.empty()) write_text_file(flags.pr_out, pr);
  return kExitOk;
}

int do_mine(const MineFlags& flags, std::ostream& out) {
  const auto manifests = load_manifests(flags.manifest);
  std::vector<std::pair<std::string, MinedPairs>> mined;
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
  for (const auto& manifest : manifests) {
    const StreamManifest source = flags.reverse ? reverse_manifest(manifest) : manifest;
    try {
      mined.emplace_back(source.stream_id, mine_stream(source));
    } catch (Error& e) {
      e.add_context("stream '" + source.stream_id + "'");
      throw;
    }
    labeled += mined.back().second.labeled.size();
    unlabeled += mined.back().second.unlabeled.size();
  }
  write_text_file(flags.out, format_mined_pairs(mined));
  out << "mined " << labeled << " labeled and " << unlabeled << " unlabeled pairs from "
      << manifests.size() << " streams\n";
  return kExitOk;
}

int do_gradcheck(const GradcheckFlags& flags, std::ostream& out) {
  if (flags.instances < 1) throw InvalidConfig("--instances must be >= 1");
  const GradCheckReport report = run_gradient_suite(flags.seed, flags.instances);
  out << format_gradcheck_report(report);
  out << (report.all_passed() ? "all checks passed\n" : "some checks FAILED\n");
  return report.all_passed() ? kExitOk : kExitValidation;
}

int do_bench(const BenchFlags& flags, std::ostream& out) {
  if (flags.frames < 2) throw InvalidConfig("--frames must be >= 2");
  const Method method = parse_method(flags.method);
  SimConfig config;
  config.num_frames = flags.frames;
  config.candidates = {flags.frames / 2 > 0 ? flags.frames / 2 : 1};
  config.rep_dim = flags.rep_dim;
  config.sigma_p = flags.sigma_p;
  config.sigma_h = flags.sigma_h;
  config.seed = flags.seed;
  validate_sim_config(config);
  const StatTable table =
      simulate_stream(config, config.candidates.front(), hash64(flags.seed, 0), "bench").table;

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto naive = score_profile(table, method);
  const auto t1 = Clock::now();
  const auto incremental = score_profile_incremental(table, method);
  const auto t2 = Clock::now();
  double deviation = 0.0;
  for (std::size_t i = 0; i < naive.size(); ++i) {
    deviation = std::max(deviation, std::abs(naive[i] - incremental[i]));
  }
  const double naive_s = std::chrono::duration<double>(t1 - t0).count();
  const double incr_s = std::chrono::duration<double>(t2 - t1).count();
  char line[256];
  std::snprintf(line, sizeof(line),
                "naive_seconds %.6f\nincremental_seconds %.6f\nspeedup %.1f\n"
                "max_profile_deviation %.3e\n",
                naive_s, incr_s, incr_s > 0.0 ? naive_s / incr_s : 0.0, deviation);
  out << line;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Changepoint detection over pairwise change statistics", "vstream"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic benchmark");
  simulate->add_option("--seed", sim.config.seed, "Global seed");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--frames", sim.config.num_frames, "Frames per stream");
  simulate->add_option("--streams-per-changepoint", sim.config.num_streams,
                       "Change streams per candidate changepoint");
  simulate->add_option("--candidates", sim.config.candidates, "Candidate changepoints")
      ->delimiter(',');
  simulate->add_option("--no-change", sim.config.no_change_streams, "No-change streams");
  simulate->add_option("--rep-dim", sim.config.rep_dim, "Representation dimension");
  simulate->add_option("--mu-change", sim.config.mu_change, "Mean statistic on straddling pairs");
  simulate->add_option("--mu-nochange", sim.config.mu_nochange, "Mean statistic elsewhere");
  simulate->add_option("--sigma-p", sim.config.sigma_p, "Statistic noise");
  simulate->add_option("--sigma-h", sim.config.sigma_h, "Representation noise");
  simulate->add_option("--workers", sim.workers, "Worker threads");

  DetectFlags det;
  auto* detect_cmd = app.add_subcommand("detect", "Detect changepoints");
  detect_cmd->add_option("--scores", det.scores, "Stat table file or directory")->required();
  detect_cmd->add_option("--method", det.methods,
                         "step|gc|rc|rc0|step-io|gc-io|rc-io|rc-lambda0 (repeatable)");
  detect_cmd->add_flag("--image-only", det.image_only,
                       "Report step/gc/rc as their image-only variants");
  detect_cmd->add_option("--lambda", det.lambda, "Graph-cut weight of the rc score");
  detect_cmd->add_option("--consistency", det.consistency, "mean|sum");
  detect_cmd->add_option("--out", det.out, "Detections CSV")->required();
  detect_cmd->add_option("--workers", det.workers, "Worker threads");

  EvalFlags ev;
  auto* eval_cmd = app.add_subcommand("eval", "Windowed AP and mAP");
  eval_cmd->add_option("--detections", ev.detections, "Detections CSV")->required();
  eval_cmd->add_option("--truth", ev.truth, "Ground truth CSV")->required();
  eval_cmd->add_option("--windows", ev.windows, "Tolerance windows")->delimiter(',');
  eval_cmd->add_option("--out", ev.out, "Report CSV");
  eval_cmd->add_option("--pr-out", ev.pr_out, "Precision-recall points CSV");

  MineFlags mine;
  auto* mine_cmd = app.add_subcommand("mine-pairs", "Mine training pairs from manifests");
  mine_cmd->add_option("--manifest", mine.manifest, "Manifest JSON")->required();
  mine_cmd->add_option("--out", mine.out, "Pairs CSV")->required();
  mine_cmd->add_flag("--reverse", mine.reverse, "Mine the time-reversed streams");

  GradcheckFlags grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  grad_cmd->add_option("--seed", grad.seed, "Seed");
  grad_cmd->add_option("--instances", grad.instances, "Random instances per check");

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Naive vs incremental profile timing");
  bench_cmd->add_option("--frames", bench.frames, "Frames");
  bench_cmd->add_option("--seed", bench.seed, "Seed");
  bench_cmd->add_option("--sigma-p", bench.sigma_p, "Statistic noise");
  bench_cmd->add_option("--sigma-h", bench.sigma_h, "Representation noise");
  bench_cmd->add_option("--rep-dim", bench.rep_dim, "Representation dimension");
  bench_cmd->add_option("--method", bench.method, "Scoring method");

  std::vector<std::string> argv_storage{"vstream"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  CLI::App* chosen = app.get_subcommands().front();
  out << "# " << chosen->get_name() << " config\n" << chosen->config_to_str(true, false);
  try {
    if (chosen == simulate) return do_simulate(sim, out);
    if (chosen == detect_cmd) return do_detect(det, out);
    if (chosen == eval_cmd) return do_eval(ev, out);
    if (chosen == mine_cmd) return do_mine(mine, out);
    if (chosen == grad_cmd) return do_gradcheck(grad, out);
    return do_bench(bench, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace vstream
