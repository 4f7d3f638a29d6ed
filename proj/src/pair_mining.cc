#include "vstream/pair_mining.h"

#include <algorithm>

#include "vstream/errors.h"

namespace vstream {

namespace {

int require_changepoint(const StreamManifest& manifest) {
  validate_manifest(manifest);
  if (!manifest.true_changepoint) {
    throw MissingChangepoint("stream '" + manifest.stream_id +
                             "' has no changepoint");
  }
  return *manifest.true_changepoint;
}

}  // namespace

MinedPairs mine_annotated(const StreamManifest& manifest) {
  const int kappa = require_changepoint(manifest);
  if (manifest.captions.empty()) {
    throw MissingCaption("stream '" + manifest.stream_id +
                         "' has no change caption");
  }
  MinedPairs mined;
  for (const PairKey& key : all_pair_keys(manifest.num_frames)) {
    if (straddles(key, kappa)) {
      for (const auto& caption : manifest.captions) {
        mined.labeled.push_back({key, caption});
      }
    } else {
      mined.labeled.push_back({key, no_change_caption()});
    }
  }
  return mined;
}

MinedPairs mine_unannotated(const StreamManifest& manifest) {
  const int kappa = require_changepoint(manifest);
  MinedPairs mined;
  for (const PairKey& key : all_pair_keys(manifest.num_frames)) {
    if (straddles(key, kappa)) {
      mined.unlabeled.push_back(key);
    } else {
      mined.labeled.push_back({key, no_change_caption()});
    }
  }
  return mined;
}

MinedPairs mine_no_change(const StreamManifest& manifest) {
  validate_manifest(manifest);
  if (manifest.true_changepoint) {
    throw ValidationError("stream '" + manifest.stream_id +
                          "' has a changepoint; not a no-change stream");
  }
  MinedPairs mined;
  for (const PairKey& key : all_pair_keys(manifest.num_frames)) {
    mined.labeled.push_back({key, no_change_caption()});
  }
  return mined;
}

MinedPairs mine_stream(const StreamManifest& manifest) {
  if (!manifest.true_changepoint) return mine_no_change(manifest);
  if (!manifest.captions.empty()) return mine_annotated(manifest);
  return mine_unannotated(manifest);
}

StreamManifest reverse_manifest(const StreamManifest& manifest) {
  validate_manifest(manifest);
  StreamManifest reversed = manifest;
  if (manifest.true_changepoint) {
    reversed.true_changepoint = manifest.num_frames - *manifest.true_changepoint;
  }
  std::swap(reversed.captions, reversed.reversed_captions);
  return reversed;
}

std::string format_mined_pairs(
    std::span<const std::pair<std::string, MinedPairs>> streams) {
  std::string out = "stream_id,t,t_prime,label\n";
  for (const auto& [stream_id, mined] : streams) {
    if (stream_id.empty() ||
        stream_id.find_first_of(",\n\r") != std::string::npos) {
      throw ValidationError("stream id '" + stream_id +
                            "' is empty or contains a CSV delimiter");
    }
    std::size_t li = 0;
    std::size_t ui = 0;
    while (li < mined.labeled.size() || ui < mined.unlabeled.size()) {
      const bool take_labeled =
          ui == mined.unlabeled.size() ||
          (li < mined.labeled.size() &&
           !(mined.unlabeled[ui] < mined.labeled[li].key));
      const PairKey key =
          take_labeled ? mined.labeled[li].key : mined.unlabeled[ui];
      out += stream_id + ',' + std::to_string(key.t) + ',' +
             std::to_string(key.t_prime) + ',';
      if (take_labeled) {
        const auto& caption = mined.labeled[li++].caption;
        for (std::size_t k = 0; k < caption.size(); ++k) {
          if (k > 0) out += ' ';
          out += std::to_string(caption[k]);
        }
      } else {
        ++ui;
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace vstream
