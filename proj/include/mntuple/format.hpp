// Copyright 2026 The mntuple Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mntuple/codec.hpp"
#include "mntuple/schema.hpp"
#include "mntuple/sink.hpp"

namespace mntuple {

// Single-file container layout, all integers little-endian:
//
//   header:   "MNT1" u16 version u16 flags u8 codec 3x u8 reserved
//             u32 schema_len, schema bytes
//   pages:    raw page payloads at reserved offsets, no per-page framing
//   footer:   u32 n_clusters, cluster descriptors in commit order,
//             u32 crc32c over the preceding footer bytes
//   trailer:  u64 footer_offset u64 footer_len "MNTF"
//
// Cluster descriptor: u64 first_entry, u64 n_entries, then one column range
// per column (dense): u64 first_element, u64 n_elements, u32 n_pages, pages.
// Page locator: u64 file_offset, u32 on_disk_bytes, u32 uncompressed_bytes,
// u32 n_elements, u8 codec_id.

inline constexpr uint8_t kHeaderMagic[4] = {'M', 'N', 'T', '1'};
inline constexpr uint8_t kTrailerMagic[4] = {'M', 'N', 'T', 'F'};
inline constexpr uint16_t kFormatVersion = 1;
inline constexpr uint64_t kFixedHeaderBytes = 16;  // without schema
inline constexpr uint64_t kTrailerBytes = 20;

struct PageLocator {
  uint64_t file_offset = 0;
  uint32_t on_disk_bytes = 0;
  uint32_t uncompressed_bytes = 0;
  uint32_t n_elements = 0;
  uint8_t codec_id = 0;

  friend bool operator==(const PageLocator&, const PageLocator&) = default;
};

inline constexpr size_t kPageLocatorBytes = 8 + 4 + 4 + 4 + 1;

/// One column's slice of a cluster: where its elements start globally and
/// the pages holding them.
struct ColumnRange {
  uint64_t first_element = 0;
  uint64_t n_elements = 0;
  std::vector<PageLocator> pages;

  friend bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

struct ClusterDescriptor {
  uint64_t first_entry = 0;
  uint64_t n_entries = 0;
  std::vector<ColumnRange> columns;  // dense, one per schema column

  friend bool operator==(const ClusterDescriptor&,
                         const ClusterDescriptor&) = default;
};

struct FileFooter {
  std::vector<ClusterDescriptor> clusters;  // in commit order

  uint64_t total_entries() const;

  friend bool operator==(const FileFooter&, const FileFooter&) = default;
};

struct FileHeader {
  FieldTree tree;
  CodecId default_codec = CodecId::kNone;
  uint64_t header_bytes = 0;  // on-disk length including schema
};

struct FileTrailer {
  uint64_t footer_offset = 0;
  uint64_t footer_len = 0;
};

/// Writes the header at offset 0 of an empty sink; returns its byte count.
uint64_t write_header(Sink& sink, const FieldTree& tree, CodecId default_codec);

FileHeader read_header(const Source& src);

/// Atomically extends the file's logical end by n_bytes; returns the start
/// of the reserved region. Optionally asks the filesystem to preallocate.
uint64_t append_reserved(Sink& sink, uint64_t n_bytes,
                         bool preallocate = false);

std::vector<uint8_t> encode_footer(const FileFooter& footer);

/// Checks the crc and structural bounds; n_columns comes from the schema.
FileFooter decode_footer(std::span<const uint8_t> bytes, uint32_t n_columns);

/// Serializes footer then trailer; completes the file.
void write_footer_and_trailer(Sink& sink, const FileFooter& footer);

/// Parses and sanity-checks the trailer of a finished file.
FileTrailer read_trailer(const Source& src);

/// Semantic validation against the schema: entry-range chain, per-column
/// element continuity, page sizes and element widths, page regions within
/// file bounds and mutually disjoint.
void validate_footer(const FileFooter& footer, const FieldTree& tree,
                     uint64_t data_begin, uint64_t data_end);

}  // namespace mntuple
