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

#include "mntuple/format.hpp"

#include <algorithm>
#include <cstring>

#include "mntuple/bytes.hpp"

namespace mntuple {

uint64_t FileFooter::total_entries() const {
  uint64_t total = 0;
  for (const auto& c : clusters) total += c.n_entries;
  return total;
}

uint64_t write_header(Sink& sink, const FieldTree& tree,
                      CodecId default_codec) {
  if (sink.end_offset() != 0) {
    throw StateError("header must be written to an empty sink");
  }
  const std::vector<uint8_t> schema = tree.serialize();
  ByteWriter w;
  w.bytes(kHeaderMagic, 4);
  w.u16(kFormatVersion);
  w.u16(0);  // flags
  w.u8(static_cast<uint8_t>(default_codec));
  w.u8(0);
  w.u8(0);
  w.u8(0);
  w.u32(static_cast<uint32_t>(schema.size()));
  w.bytes(schema.data(), schema.size());
  const std::vector<uint8_t> bytes = w.take();
  const uint64_t offset = append_reserved(sink, bytes.size());
  sink.write_at(offset, bytes);
  return bytes.size();
}

FileHeader read_header(const Source& src) {
  if (src.size() < kFixedHeaderBytes) {
    throw IncompleteFileError("file shorter than a header");
  }
  uint8_t fixed[kFixedHeaderBytes];
  src.read_at(0, fixed);
  if (std::memcmp(fixed, kHeaderMagic, 4) != 0) {
    throw FormatError("bad header magic");
  }
  const uint16_t version = load_le16(fixed + 4);
  if (version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version));
  }
  const uint8_t codec = fixed[8];
  if (!codec_known(codec)) {
    throw UnknownCodecError("unknown default codec id " +
                            std::to_string(codec));
  }
  const uint32_t schema_len = load_le32(fixed + 12);
  if (kFixedHeaderBytes + schema_len > src.size()) {
    throw FormatError("schema extends past end of file");
  }
  std::vector<uint8_t> schema(schema_len);
  src.read_at(kFixedHeaderBytes, schema);
  FileHeader h;
  h.tree = FieldTree::deserialize(schema);
  h.default_codec = static_cast<CodecId>(codec);
  h.header_bytes = kFixedHeaderBytes + schema_len;
  return h;
}

uint64_t append_reserved(Sink& sink, uint64_t n_bytes, bool preallocate) {
  if (n_bytes == 0) {
    throw StateError("cannot reserve zero bytes");
  }
  return sink.reserve(n_bytes, preallocate);
}

namespace {

void encode_descriptor(ByteWriter& w, const ClusterDescriptor& c) {
  w.u64(c.first_entry);
  w.u64(c.n_entries);
  for (const ColumnRange& range : c.columns) {
    w.u64(range.first_element);
    w.u64(range.n_elements);
    w.u32(static_cast<uint32_t>(range.pages.size()));
    for (const PageLocator& p : range.pages) {
      w.u64(p.file_offset);
      w.u32(p.on_disk_bytes);
      w.u32(p.uncompressed_bytes);
      w.u32(p.n_elements);
      w.u8(p.codec_id);
    }
  }
}

}  // namespace

std::vector<uint8_t> encode_footer(const FileFooter& footer) {
  ByteWriter w;
  w.u32(static_cast<uint32_t>(footer.clusters.size()));
  for (const ClusterDescriptor& c : footer.clusters) {
    encode_descriptor(w, c);
  }
  std::vector<uint8_t> bytes = w.take();
  const uint32_t crc = crc32c(bytes);
  append_le(bytes, crc);
  return bytes;
}

FileFooter decode_footer(std::span<const uint8_t> bytes, uint32_t n_columns) {
  if (bytes.size() < 8) {
    throw FormatError("footer too short");
  }
  const std::span<const uint8_t> payload = bytes.first(bytes.size() - 4);
  const uint32_t stored_crc = load_le32(bytes.data() + bytes.size() - 4);
  if (crc32c(payload) != stored_crc) {
    throw ChecksumError("footer crc32c mismatch");
  }
  ByteReader r(payload);
  const uint32_t n_clusters = r.u32();
  // Every cluster costs at least 16 bytes plus 20 per column range.
  const uint64_t min_cluster = 16 + static_cast<uint64_t>(n_columns) * 20;
  if (static_cast<uint64_t>(n_clusters) * min_cluster > payload.size()) {
    throw FormatError("footer cluster count exceeds payload size");
  }
  FileFooter footer;
  footer.clusters.reserve(n_clusters);
  for (uint32_t i = 0; i < n_clusters; ++i) {
    ClusterDescriptor c;
    c.first_entry = r.u64();
    c.n_entries = r.u64();
    c.columns.resize(n_columns);
    for (ColumnRange& range : c.columns) {
      range.first_element = r.u64();
      range.n_elements = r.u64();
      const uint32_t n_pages = r.u32();
      if (static_cast<uint64_t>(n_pages) * kPageLocatorBytes > r.remaining()) {
        throw FormatError("footer page count exceeds payload size");
      }
      range.pages.resize(n_pages);
      for (PageLocator& p : range.pages) {
        p.file_offset = r.u64();
        p.on_disk_bytes = r.u32();
        p.uncompressed_bytes = r.u32();
        p.n_elements = r.u32();
        p.codec_id = r.u8();
      }
    }
    footer.clusters.push_back(std::move(c));
  }
  if (!r.done()) {
    throw FormatError("trailing bytes after footer clusters");
  }
  return footer;
}

void write_footer_and_trailer(Sink& sink, const FileFooter& footer) {
  std::vector<uint8_t> bytes = encode_footer(footer);
  const uint64_t footer_len = bytes.size();
  ByteWriter t;
  t.u64(0);  // patched below
  t.u64(footer_len);
  t.bytes(kTrailerMagic, 4);
  std::vector<uint8_t> trailer = t.take();
  const uint64_t footer_offset =
      append_reserved(sink, footer_len + kTrailerBytes);
  store_le64(trailer.data(), footer_offset);
  sink.write_at(footer_offset, bytes);
  sink.write_at(footer_offset + footer_len, trailer);
  sink.flush();
}

FileTrailer read_trailer(const Source& src) {
  if (src.size() < kFixedHeaderBytes + kTrailerBytes) {
    throw IncompleteFileError("file too short to hold a trailer");
  }
  uint8_t bytes[kTrailerBytes];
  src.read_at(src.size() - kTrailerBytes, bytes);
  if (std::memcmp(bytes + 16, kTrailerMagic, 4) != 0) {
    throw IncompleteFileError("trailer magic missing: incomplete file");
  }
  FileTrailer t;
  t.footer_offset = load_le64(bytes);
  t.footer_len = load_le64(bytes + 8);
  if (t.footer_offset + t.footer_len + kTrailerBytes != src.size()) {
    throw FormatError("trailer does not match file size");
  }
  return t;
}

void validate_footer(const FileFooter& footer, const FieldTree& tree,
                     uint64_t data_begin, uint64_t data_end) {
  const uint32_t n_columns = tree.n_columns();
  uint64_t next_entry = 0;
  std::vector<uint64_t> next_element(n_columns, 0);
  std::vector<std::pair<uint64_t, uint64_t>> regions;

  for (size_t k = 0; k < footer.clusters.size(); ++k) {
    const ClusterDescriptor& c = footer.clusters[k];
    if (c.columns.size() != n_columns) {
      throw FormatError("cluster " + std::to_string(k) +
                        " column count mismatch");
    }
    if (c.n_entries == 0) {
      throw FormatError("cluster " + std::to_string(k) + " has no entries");
    }
    if (c.first_entry != next_entry) {
      throw FormatError("cluster " + std::to_string(k) +
                        " breaks the entry-range chain");
    }
    next_entry += c.n_entries;
    for (uint32_t col = 0; col < n_columns; ++col) {
      const ColumnRange& range = c.columns[col];
      const uint32_t width = tree.column(col).element_width;
      if (range.first_element != next_element[col]) {
        throw FormatError("column " + std::to_string(col) +
                          " breaks the element chain at cluster " +
                          std::to_string(k));
      }
      next_element[col] += range.n_elements;
      uint64_t elements_in_pages = 0;
      for (const PageLocator& p : range.pages) {
        if (p.n_elements == 0) {
          throw FormatError("page with zero elements");
        }
        if (!codec_known(p.codec_id)) {
          throw UnknownCodecError("page uses unknown codec id " +
                                  std::to_string(p.codec_id));
        }
        if (p.uncompressed_bytes !=
            static_cast<uint64_t>(p.n_elements) * width) {
          throw FormatError("page byte count does not match element count");
        }
        if (p.codec_id == 0 && p.on_disk_bytes != p.uncompressed_bytes) {
          throw FormatError("stored page with mismatched sizes");
        }
        if (p.codec_id != 0 && p.on_disk_bytes > p.uncompressed_bytes) {
          throw FormatError("compressed page larger than its payload");
        }
        if (p.file_offset < data_begin ||
            p.file_offset + p.on_disk_bytes > data_end) {
          throw FormatError("page outside the file's data region");
        }
        elements_in_pages += p.n_elements;
        regions.emplace_back(p.file_offset, p.on_disk_bytes);
      }
      if (elements_in_pages != range.n_elements) {
        throw FormatError("column range element count does not match pages");
      }
    }
  }

  std::sort(regions.begin(), regions.end());
  for (size_t i = 1; i < regions.size(); ++i) {
    if (regions[i - 1].first + regions[i - 1].second > regions[i].first) {
      throw FormatError("page regions overlap");
    }
  }
}

}  // namespace mntuple
