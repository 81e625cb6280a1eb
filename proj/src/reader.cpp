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

#include "mntuple/reader.hpp"

#include <algorithm>

#include "mntuple/bytes.hpp"
#include "mntuple/codec.hpp"

namespace mntuple {

/// Per-pass cache: for every projected column, the most recently used page
/// of the current cluster, decompressed.
struct Reader::PageCache {
  struct ColumnState {
    uint64_t cluster = UINT64_MAX;
    size_t page_index = SIZE_MAX;
    uint64_t page_first_element = 0;  // cluster-local
    std::vector<uint8_t> elements;
  };
  std::vector<ColumnState> columns;
};

Reader::Reader(std::unique_ptr<Source> source, ReaderOptions options)
    : src_(std::move(source)) {
  header_ = read_header(*src_);
  const FileTrailer trailer = read_trailer(*src_);
  if (trailer.footer_offset < header_.header_bytes) {
    throw FormatError("footer overlaps the header");
  }
  std::vector<uint8_t> footer_bytes(trailer.footer_len);
  src_->read_at(trailer.footer_offset, footer_bytes);
  footer_ = decode_footer(footer_bytes, header_.tree.n_columns());
  validate_footer(footer_, header_.tree, header_.header_bytes,
                  trailer.footer_offset);
  total_entries_ = footer_.total_entries();
  projected_ = header_.tree.project(options.projected_fields, &proj_);
}

Reader Reader::open_file(const std::string& path, ReaderOptions options) {
  return Reader(std::make_unique<FileSource>(path), std::move(options));
}

uint64_t Reader::cluster_of(uint64_t index) const {
  // Clusters are chained in entry order, so the footer is sorted by
  // first_entry.
  const auto it = std::upper_bound(
      footer_.clusters.begin(), footer_.clusters.end(), index,
      [](uint64_t idx, const ClusterDescriptor& c) {
        return idx < c.first_entry;
      });
  return static_cast<uint64_t>(it - footer_.clusters.begin()) - 1;
}

std::vector<uint8_t> Reader::raw_page_bytes(const PageLocator& loc) const {
  std::vector<uint8_t> bytes(loc.on_disk_bytes);
  src_->read_at(loc.file_offset, bytes);
  return bytes;
}

namespace {

struct ElementRef {
  const std::vector<uint8_t>* bytes;
  size_t offset;
};

}  // namespace

Value Reader::decode_entry(uint64_t cluster, uint64_t local_index,
                           PageCache& cache) const {
  const ClusterDescriptor& desc = footer_.clusters[cluster];

  // Fetches the page holding `element` of a projected column, reusing the
  // cached page when possible. Sequential passes touch each page once.
  auto fetch = [&](uint32_t pcol, uint64_t element) -> ElementRef {
    PageCache::ColumnState& state = cache.columns[pcol];
    const uint32_t fcol = proj_.source_column[pcol];
    const ColumnRange& range = desc.columns[fcol];
    const uint32_t width = projected_.column(pcol).element_width;
    if (element >= range.n_elements) {
      throw FormatError("element index outside its column range");
    }
    if (state.cluster != cluster || state.page_index == SIZE_MAX ||
        element < state.page_first_element ||
        element >= state.page_first_element + state.elements.size() / width) {
      uint64_t first = 0;
      size_t page_index = 0;
      while (page_index < range.pages.size() &&
             element >= first + range.pages[page_index].n_elements) {
        first += range.pages[page_index].n_elements;
        ++page_index;
      }
      if (page_index == range.pages.size()) {
        throw FormatError("column range is missing pages");
      }
      const PageLocator& loc = range.pages[page_index];
      if (!codec_known(loc.codec_id)) {
        throw UnknownCodecError("page uses unknown codec id " +
                                std::to_string(loc.codec_id));
      }
      std::vector<uint8_t> on_disk = raw_page_bytes(loc);
      state.elements = decompress(static_cast<CodecId>(loc.codec_id), on_disk,
                                  loc.uncompressed_bytes);
      state.cluster = cluster;
      state.page_index = page_index;
      state.page_first_element = first;
      pages_decompressed_.fetch_add(1, std::memory_order_relaxed);
    }
    const size_t in_page =
        static_cast<size_t>(element - state.page_first_element) * width;
    return ElementRef{&state.elements, in_page};
  };

  auto offset_at = [&](uint32_t pcol, uint64_t element) -> uint64_t {
    const ElementRef ref = fetch(pcol, element);
    return load_le64(ref.bytes->data() + ref.offset);
  };

  // Instance streams are cluster-local and aligned across the children of a
  // record, so one instance index drives the whole subtree.
  auto decode_field = [&](auto&& self, uint32_t field_id,
                          uint64_t instance) -> Value {
    const Field& f = projected_.field(field_id);
    switch (f.kind) {
      case FieldKind::kRecord: {
        std::vector<Value> members;
        members.reserve(f.children.size());
        for (uint32_t child : f.children) {
          members.push_back(self(self, child, instance));
        }
        return Value::record(std::move(members));
      }
      case FieldKind::kCollection: {
        const auto col = static_cast<uint32_t>(f.column);
        // Ascending access keeps the page cache moving strictly forward.
        const uint64_t begin = instance == 0 ? 0 : offset_at(col, instance - 1);
        const uint64_t end = offset_at(col, instance);
        if (end < begin) {
          throw FormatError("offset column is not monotone");
        }
        std::vector<Value> items;
        items.reserve(static_cast<size_t>(end - begin));
        for (uint64_t j = begin; j < end; ++j) {
          items.push_back(self(self, f.children[0], j));
        }
        return Value::list(std::move(items));
      }
      case FieldKind::kLeaf: {
        const auto col = static_cast<uint32_t>(f.column);
        const ElementRef ref = fetch(col, instance);
        const uint8_t* p = ref.bytes->data() + ref.offset;
        switch (f.leaf_type) {
          case LeafType::kI32:
            return Value(load_le<int32_t>(p));
          case LeafType::kI64:
            return Value(load_le<int64_t>(p));
          case LeafType::kF32:
            return Value(load_le<float>(p));
          case LeafType::kF64:
            return Value(load_le<double>(p));
        }
        throw FormatError("unreachable leaf type");
      }
    }
    throw FormatError("unreachable field kind");
  };

  return decode_field(decode_field, 0, local_index);
}

Value Reader::read_entry(uint64_t index) const {
  if (index >= total_entries_) {
    throw StateError("entry index " + std::to_string(index) +
                     " out of range (have " + std::to_string(total_entries_) +
                     ")");
  }
  const uint64_t cluster = cluster_of(index);
  PageCache cache;
  cache.columns.resize(projected_.n_columns());
  return decode_entry(cluster, index - footer_.clusters[cluster].first_entry,
                      cache);
}

void Reader::for_each(
    const std::function<void(uint64_t, const Value&)>& fn) const {
  PageCache cache;
  cache.columns.resize(projected_.n_columns());
  uint64_t index = 0;
  for (uint64_t cluster = 0; cluster < footer_.clusters.size(); ++cluster) {
    const uint64_t n = footer_.clusters[cluster].n_entries;
    for (uint64_t local = 0; local < n; ++local, ++index) {
      fn(index, decode_entry(cluster, local, cache));
    }
  }
}

std::vector<Value> Reader::read_all() const {
  std::vector<Value> out;
  out.reserve(static_cast<size_t>(total_entries_));
  for_each([&](uint64_t, const Value& v) { out.push_back(v); });
  return out;
}

std::vector<uint8_t> Reader::column_elements(uint64_t cluster,
                                             uint32_t projected_column) const {
  if (cluster >= footer_.clusters.size()) {
    throw StateError("cluster index out of range");
  }
  const uint32_t fcol = proj_.source_column[projected_column];
  const ColumnRange& range = footer_.clusters[cluster].columns[fcol];
  std::vector<uint8_t> out;
  for (const PageLocator& loc : range.pages) {
    std::vector<uint8_t> on_disk = raw_page_bytes(loc);
    std::vector<uint8_t> elements = decompress(
        static_cast<CodecId>(loc.codec_id), on_disk, loc.uncompressed_bytes);
    out.insert(out.end(), elements.begin(), elements.end());
    pages_decompressed_.fetch_add(1, std::memory_order_relaxed);
  }
  return out;
}

}  // namespace mntuple
