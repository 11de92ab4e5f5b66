// Copyright 2026 The LanePerf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LANEPERF_CORE_HPP
#define LANEPERF_CORE_HPP

#include <string>
#include <vector>

#include "types.hpp"

namespace laneperf {

// Parses and validates a manifest document. Defaults are applied for absent
// optional fields; any invariant breach throws DataError naming the field.
Manifest parse_manifest(const std::string& path);
Manifest parse_manifest_text(const std::string& text, const std::string& base_dir);

std::string manifest_to_text(const Manifest& m);

// Stable hex digest over the manifest's canonical serialization. Artifacts
// record it and refuse to apply against a different manifest.
std::string manifest_fingerprint(const Manifest& m);

// Loads one record file (one sample per line) into a MiniDataset with the
// declared role. Every Lane/Sample invariant is checked; errors carry the
// offending line number.
MiniDataset load_segment(const SegmentDecl& decl, const Manifest& m);

// Line serialization, inverse of the record parser.
std::string sample_to_line(const Sample& s);
Sample sample_from_line(const std::string& line, const Manifest& m,
                        const std::string& context);
std::string segment_to_text(const MiniDataset& d);

// Splits ordered samples into consecutive chunks of `size`. A final short
// chunk is kept if it holds at least size/2 samples, otherwise merged into
// the previous chunk. A lone short chunk (input smaller than size/2) is kept.
std::vector<MiniDataset> chunk_minidatasets(const std::vector<Sample>& samples,
                                            int size, const std::string& id_prefix,
                                            SegmentRole role);

// Loads every declared segment and chunks each into mini-datasets of
// `size` (<= 0 means manifest.minidataset_size).
std::vector<MiniDataset> load_corpus(const Manifest& m, int size_override);

// Writes `text` to `path` via a temp file and rename.
void atomic_write(const std::string& path, const std::string& text);

}  // namespace laneperf

#endif  // LANEPERF_CORE_HPP
