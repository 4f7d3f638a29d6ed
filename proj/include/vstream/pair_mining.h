#ifndef VSTREAM_PAIR_MINING_H_
#define VSTREAM_PAIR_MINING_H_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vstream/core_model.h"

namespace vstream {

struct LabeledPair {
  PairKey key;
  CaptionTokens caption;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

// Labeled and unlabeled training pairs mined from one stream, each list
// sorted by key. A straddling pair of an annotated stream appears once per
// caption.
struct MinedPairs {
  std::vector<LabeledPair> labeled;
  std::vector<PairKey> unlabeled;
};

// Straddling pairs get each caption, same-side pairs the no-change caption.
// Throws MissingChangepoint or MissingCaption.
MinedPairs mine_annotated(const StreamManifest& manifest);

// Same-side pairs get the no-change caption; straddling pairs go unlabeled.
// Throws MissingChangepoint.
MinedPairs mine_unannotated(const StreamManifest& manifest);

// Every pair gets the no-change caption. Throws ValidationError if the
// manifest has a changepoint.
MinedPairs mine_no_change(const StreamManifest& manifest);

// Dispatches on the manifest: no changepoint -> mine_no_change; changepoint
// with captions -> mine_annotated; otherwise mine_unannotated.
MinedPairs mine_stream(const StreamManifest& manifest);

// The manifest of the time-reversed stream: frame i becomes N-1-i, so the
// changepoint kappa becomes N-kappa, and reversed_captions become the
// captions (and vice versa).
StreamManifest reverse_manifest(const StreamManifest& manifest);

// CSV `stream_id,t,t_prime,label`; the label is the space-separated token ids
// ("0" for no change) and empty for unlabeled pairs. Rows are grouped by
// stream in the given order, then sorted by key (labeled before unlabeled
// for equal keys, captions in manifest order).
std::string format_mined_pairs(
    std::span<const std::pair<std::string, MinedPairs>> streams);

}  // namespace vstream

#endif  // VSTREAM_PAIR_MINING_H_
