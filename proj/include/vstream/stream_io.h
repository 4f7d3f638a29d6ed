#ifndef VSTREAM_STREAM_IO_H_
#define VSTREAM_STREAM_IO_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vstream/core_model.h"

namespace vstream {

inline constexpr int kStatTableSchemaVersion = 1;

// Stat table JSON:
//   {"schema_version":1,"num_frames":N,"rep_dim":d,"records":[
//   {"t":0,"t_prime":1,"p":0.3,"h":[...]},
//   ...
//   ]}
// One record per line, sorted by (t, t_prime); "h" omitted when rep_dim is 0.
// Reals are written with 17 significant digits, so doubles round-trip
// bit-exactly. The loader accepts records in any order but rejects
// duplicates (ParseError) and unknown schema versions (ParseError).
StatTable parse_stat_table(std::string_view text);
std::string format_stat_table(const StatTable& table);
StatTable load_stat_table(const std::filesystem::path& path);
void save_stat_table(const StatTable& table, const std::filesystem::path& path);

// Ground truth CSV with header `stream_id,kappa_star`; kappa_star is empty
// for streams without a change.
std::vector<GroundTruth> parse_ground_truth(std::string_view text);
std::string format_ground_truth(std::span<const GroundTruth> truths);
std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(std::span<const GroundTruth> truths,
                        const std::filesystem::path& path);

// Detections CSV with header `stream_id,method,kappa_hat,confidence`, rows
// sorted by (stream_id, method name). Profiles are not persisted.
std::string format_detections(std::span<const DetectionResult> results);
std::vector<DetectionResult> parse_detections(std::string_view text);
void write_detections(std::span<const DetectionResult> results,
                      const std::filesystem::path& path);
std::vector<DetectionResult> load_detections(
    const std::filesystem::path& path);

// Stream manifests JSON:
//   {"streams":[{"stream_id":"s1","num_frames":5,"true_changepoint":3,
//                "captions":[[3,4]],"reversed_captions":[[5,6]]}, ...]}
// true_changepoint may be null or absent; caption lists may be absent.
std::vector<StreamManifest> parse_manifests(std::string_view text);
std::vector<StreamManifest> load_manifests(const std::filesystem::path& path);

// %.17g, with ".0" appended when the result would otherwise read back as a
// JSON integer (so -0.0 survives the round trip).
std::string format_real(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace vstream

#endif  // VSTREAM_STREAM_IO_H_
