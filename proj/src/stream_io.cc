#include "vstream/stream_io.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vstream/errors.h"

namespace vstream {

using nlohmann::json;

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(',', start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

int parse_int_field(std::string_view field, std::string_view what,
                    std::size_t line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " +
                     std::string(what) + " '" + std::string(field) + "'");
  }
  return value;
}

double parse_real_field(std::string_view field, std::string_view what,
                        std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " +
                     std::string(what) + " '" + std::string(field) + "'");
  }
  return value;
}

void check_csv_id(std::string_view id) {
  if (id.empty() || id.find_first_of(",\n\r") != std::string_view::npos) {
    throw ValidationError("stream id '" + std::string(id) +
                          "' is empty or contains a CSV delimiter");
  }
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

int json_int(const json& object, const char* field) {
  auto it = object.find(field);
  if (it == object.end() || !it->is_number_integer()) {
    throw ParseError(std::string("field '") + field +
                     "' missing or not an integer");
  }
  return it->get<int>();
}

double json_real(const json& value, const char* what) {
  if (!value.is_number()) {
    throw ParseError(std::string(what) + " is not a number");
  }
  return value.get<double>();
}

CaptionTokens json_caption(const json& value) {
  if (!value.is_array() || value.empty()) {
    throw ParseError("caption must be a non-empty array of token ids");
  }
  CaptionTokens tokens;
  for (const auto& token : value) {
    if (!token.is_number_integer() || token.get<int>() < 0) {
      throw ParseError("caption token must be a non-negative integer");
    }
    tokens.push_back(token.get<int>());
  }
  return tokens;
}

std::vector<CaptionTokens> json_captions(const json& stream, const char* field) {
  std::vector<CaptionTokens> captions;
  auto it = stream.find(field);
  if (it == stream.end() || it->is_null()) return captions;
  if (!it->is_array()) {
    throw ParseError(std::string("field '") + field + "' must be an array");
  }
  for (const auto& caption : *it) captions.push_back(json_caption(caption));
  return captions;
}

}  // namespace

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  std::string out(buf);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Stat tables

StatTable parse_stat_table(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw ParseError("stat table must be a JSON object");
  const int version = json_int(doc, "schema_version");
  if (version != kStatTableSchemaVersion) {
    throw ParseError("unsupported schema_version " + std::to_string(version));
  }
  const int num_frames = json_int(doc, "num_frames");
  const int rep_dim = json_int(doc, "rep_dim");
  if (rep_dim < 0) throw ParseError("rep_dim must be >= 0");
  auto records = doc.find("records");
  if (records == doc.end() || !records->is_array()) {
    throw ParseError("field 'records' missing or not an array");
  }

  std::vector<PairObservation> observations;
  observations.reserve(records->size());
  std::set<PairKey> seen;
  for (const auto& record : *records) {
    if (!record.is_object()) throw ParseError("record is not an object");
    PairObservation obs;
    obs.key = {json_int(record, "t"), json_int(record, "t_prime")};
    if (!seen.insert(obs.key).second) {
      throw ParseError("duplicate record " + to_string(obs.key));
    }
    auto p = record.find("p");
    if (p == record.end()) {
      throw ParseError("record " + to_string(obs.key) + " has no 'p'");
    }
    obs.p = json_real(*p, "p");
    auto h = record.find("h");
    if (h != record.end()) {
      if (!h->is_array()) {
        throw ParseError("record " + to_string(obs.key) + ": 'h' not an array");
      }
      obs.h.reserve(h->size());
      for (const auto& v : *h) obs.h.push_back(json_real(v, "h entry"));
    }
    if (obs.h.size() != static_cast<std::size_t>(rep_dim)) {
      throw DimensionMismatch("record " + to_string(obs.key) + " has " +
                              std::to_string(obs.h.size()) +
                              " representation entries, rep_dim is " +
                              std::to_string(rep_dim));
    }
    observations.push_back(std::move(obs));
  }
  return StatTable::from_observations(num_frames, std::move(observations));
}

std::string format_stat_table(const StatTable& table) {
  std::string out = "{\"schema_version\":" +
                    std::to_string(kStatTableSchemaVersion) +
                    ",\"num_frames\":" + std::to_string(table.num_frames()) +
                    ",\"rep_dim\":" + std::to_string(table.rep_dim()) +
                    ",\"records\":[\n";
  const auto keys = all_pair_keys(table.num_frames());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const PairKey& key = keys[i];
    out += "{\"t\":" + std::to_string(key.t) +
           ",\"t_prime\":" + std::to_string(key.t_prime) +
           ",\"p\":" + format_real(table.p(key));
    if (table.has_representations()) {
      out += ",\"h\":[";
      bool first = true;
      for (double v : table.h(key)) {
        if (!first) out += ',';
        out += format_real(v);
        first = false;
      }
      out += ']';
    }
    out += '}';
    if (i + 1 < keys.size()) out += ',';
    out += '\n';
  }
  out += "]}\n";
  return out;
}

StatTable load_stat_table(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_stat_table(text);
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

void save_stat_table(const StatTable& table,
                     const std::filesystem::path& path) {
  write_text_file(path, format_stat_table(table));
}

// ---------------------------------------------------------------------------
// Ground truth

std::vector<GroundTruth> parse_ground_truth(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != "stream_id,kappa_star") {
    throw ParseError("ground truth must start with header 'stream_id,kappa_star'");
  }
  std::vector<GroundTruth> truths;
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != 2 || fields[0].empty()) {
      throw ParseError("line " + std::to_string(i + 1) +
                       ": expected 'stream_id,kappa_star'");
    }
    GroundTruth truth{std::string(fields[0]), std::nullopt};
    if (!fields[1].empty()) {
      truth.kappa_star = parse_int_field(fields[1], "kappa_star", i + 1);
      if (*truth.kappa_star < 1) {
        throw InvalidChangepoint("line " + std::to_string(i + 1) +
                                 ": kappa_star must be >= 1");
      }
    }
    if (!seen.insert(truth.stream_id).second) {
      throw DuplicateStream("stream '" + truth.stream_id +
                            "' appears more than once");
    }
    truths.push_back(std::move(truth));
  }
  return truths;
}

std::string format_ground_truth(std::span<const GroundTruth> truths) {
  std::vector<const GroundTruth*> sorted;
  for (const auto& truth : truths) {
    check_csv_id(truth.stream_id);
    sorted.push_back(&truth);
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->stream_id < b->stream_id;
  });
  std::string out = "stream_id,kappa_star\n";
  for (const auto* truth : sorted) {
    out += truth->stream_id + ',';
    if (truth->kappa_star) out += std::to_string(*truth->kappa_star);
    out += '\n';
  }
  return out;
}

std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_ground_truth(text);
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

void write_ground_truth(std::span<const GroundTruth> truths,
                        const std::filesystem::path& path) {
  write_text_file(path, format_ground_truth(truths));
}

// ---------------------------------------------------------------------------
// Detections

std::string format_detections(std::span<const DetectionResult> results) {
  std::vector<const DetectionResult*> sorted;
  for (const auto& result : results) {
    check_csv_id(result.stream_id);
    sorted.push_back(&result);
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    if (a->stream_id != b->stream_id) return a->stream_id < b->stream_id;
    return method_name(a->method) < method_name(b->method);
  });
  std::string out = "stream_id,method,kappa_hat,confidence\n";
  for (const auto* r : sorted) {
    out += r->stream_id + ',' + std::string(method_name(r->method)) + ',' +
           std::to_string(r->kappa_hat) + ',' + format_real(r->confidence) +
           '\n';
  }
  return out;
}

std::vector<DetectionResult> parse_detections(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != "stream_id,method,kappa_hat,confidence") {
    throw ParseError(
        "detections must start with header "
        "'stream_id,method,kappa_hat,confidence'");
  }
  std::vector<DetectionResult> results;
  std::set<std::pair<std::string, Method>> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != 4 || fields[0].empty()) {
      throw ParseError("line " + std::to_string(i + 1) +
                       ": expected 4 fields");
    }
    DetectionResult result;
    result.stream_id = std::string(fields[0]);
    try {
      result.method = parse_method(fields[1]);
    } catch (const ValidationError&) {
      throw ParseError("line " + std::to_string(i + 1) + ": unknown method '" +
                       std::string(fields[1]) + "'");
    }
    result.kappa_hat = parse_int_field(fields[2], "kappa_hat", i + 1);
    result.confidence = parse_real_field(fields[3], "confidence", i + 1);
    if (!seen.insert({result.stream_id, result.method}).second) {
      throw DuplicateStream("stream '" + result.stream_id + "' has two '" +
                            std::string(fields[1]) + "' detections");
    }
    results.push_back(std::move(result));
  }
  return results;
}

void write_detections(std::span<const DetectionResult> results,
                      const std::filesystem::path& path) {
  write_text_file(path, format_detections(results));
}

std::vector<DetectionResult> load_detections(
    const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_detections(text);
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

// ---------------------------------------------------------------------------
// Manifests

std::vector<StreamManifest> parse_manifests(std::string_view text) {
  const json doc = parse_json(text);
  auto streams = doc.is_object() ? doc.find("streams") : doc.end();
  if (!doc.is_object() || streams == doc.end() || !streams->is_array()) {
    throw ParseError("manifest must be an object with a 'streams' array");
  }
  std::vector<StreamManifest> manifests;
  std::set<std::string> seen;
  for (const auto& stream : *streams) {
    if (!stream.is_object()) throw ParseError("stream entry is not an object");
    StreamManifest manifest;
    auto id = stream.find("stream_id");
    if (id == stream.end() || !id->is_string()) {
      throw ParseError("stream entry without a string 'stream_id'");
    }
    manifest.stream_id = id->get<std::string>();
    manifest.num_frames = json_int(stream, "num_frames");
    auto kappa = stream.find("true_changepoint");
    if (kappa != stream.end() && !kappa->is_null()) {
      manifest.true_changepoint = json_int(stream, "true_changepoint");
    }
    manifest.captions = json_captions(stream, "captions");
    manifest.reversed_captions = json_captions(stream, "reversed_captions");
    try {
      validate_manifest(manifest);
    } catch (Error& e) {
      e.add_context("stream '" + manifest.stream_id + "'");
      throw;
    }
    if (!seen.insert(manifest.stream_id).second) {
      throw DuplicateStream("stream '" + manifest.stream_id +
                            "' appears more than once");
    }
    manifests.push_back(std::move(manifest));
  }
  return manifests;
}

std::vector<StreamManifest> load_manifests(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_manifests(text);
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

}  // namespace vstream
