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

#include "mntuple/writer.hpp"

#include <algorithm>
#include <utility>

#include "mntuple/parallel_writer.hpp"

namespace mntuple {

void WriterOptions::validate(const FieldTree& tree) const {
  uint32_t max_width = 1;
  for (const ColumnDescriptor& c : tree.columns()) {
    max_width = std::max(max_width, c.element_width);
  }
  if (target_page_bytes < max_width) {
    throw StateError("target_page_bytes smaller than one element");
  }
  if (target_cluster_bytes < target_page_bytes) {
    throw StateError("target_cluster_bytes smaller than target_page_bytes");
  }
  if (!codec_known(static_cast<uint8_t>(codec))) {
    throw UnknownCodecError("unknown codec id");
  }
  if (mode == CommitMode::kUnbuffered && compression_threads > 0) {
    throw StateError("compression threads require buffered mode");
  }
}

FillContext::FillContext(const FieldTree& tree, const WriterOptions& options)
    : tree_(&tree), options_(options) {
  options_.validate(tree);
  const uint32_t n = tree.n_columns();
  elements_per_page_.resize(n);
  for (uint32_t c = 0; c < n; ++c) {
    elements_per_page_[c] =
        options_.target_page_bytes / tree.column(c).element_width;
  }
  open_.resize(n);
  staged_.resize(n);
  locators_.resize(n);
  cluster_elements_.assign(n, 0);
  collection_counts_.assign(n, 0);
}

FillContext::FillContext(ParallelWriter* writer)
    : FillContext(writer->tree(), writer->options()) {
  writer_ = writer;
}

FillContext::~FillContext() {
  for (auto& col : staged_) {
    for (StagedPage& staged : col) {
      if (staged.pending) staged.pending->wait();
    }
  }
  if (dirty_registered_) set_dirty(false);
}

struct FillContext::Emitter {
  FillContext& ctx;

  void value_i32(uint32_t col, int32_t v) { put(col, v); }
  void value_i64(uint32_t col, int64_t v) { put(col, v); }
  void value_f32(uint32_t col, float v) { put(col, v); }
  void value_f64(uint32_t col, double v) { put(col, v); }
  void offset(uint32_t col, uint64_t v) { put(col, v); }

  template <typename T>
  void put(uint32_t col, T v) {
    uint8_t tmp[8];
    if constexpr (sizeof(T) == 4) {
      store_le32(tmp, std::bit_cast<uint32_t>(v));
    } else {
      store_le64(tmp, std::bit_cast<uint64_t>(v));
    }
    ctx.append_element(col, tmp, sizeof(T));
  }
};

void FillContext::fill(const Value& entry) {
  if (broken_) {
    throw StateError("context unusable after a failed fill; discard it");
  }
  if (writer_ != nullptr && writer_->closed()) {
    throw StateError("fill on a context of a closed writer");
  }
  if (!dirty_registered_ && writer_ != nullptr) set_dirty(true);
  try {
    Emitter emit{*this};
    shred_entry(*tree_, entry, collection_counts_, emit);
  } catch (...) {
    broken_ = true;  // a partially appended entry cannot be unwound
    throw;
  }
  ++entries_in_cluster_;
  ++entries_filled_;
  if (writer_ != nullptr) {
    const bool over_bytes =
        uncompressed_bytes_in_cluster_ >= options_.target_cluster_bytes;
    const bool over_entries =
        options_.max_entries_per_cluster != 0 &&
        entries_in_cluster_ >= options_.max_entries_per_cluster;
    if (over_bytes || over_entries) commit_cluster();
  }
}

void FillContext::append_element(uint32_t column, const uint8_t* data,
                                 uint32_t width) {
  OpenPage& page = open_[column];
  page.bytes.insert(page.bytes.end(), data, data + width);
  ++page.n_elements;
  ++cluster_elements_[column];
  uncompressed_bytes_in_cluster_ += width;
  if (page.n_elements >= elements_per_page_[column]) {
    seal_page(column);
  }
}

SealedPage FillContext::make_sealed(uint32_t column, std::vector<uint8_t> raw,
                                    uint32_t n_elements) const {
  SealedPage page;
  page.column = column;
  page.n_elements = n_elements;
  page.uncompressed_bytes = static_cast<uint32_t>(raw.size());
  if (options_.codec != CodecId::kNone) {
    std::vector<uint8_t> frame =
        compress(options_.codec, options_.codec_level, raw);
    if (frame.size() < raw.size()) {
      page.codec_id = static_cast<uint8_t>(options_.codec);
      page.bytes = std::move(frame);
      return page;
    }
  }
  page.codec_id = 0;  // stored: compression did not shrink the page
  page.bytes = std::move(raw);
  return page;
}

void FillContext::seal_page(uint32_t column) {
  OpenPage& open = open_[column];
  std::vector<uint8_t> raw;
  raw.swap(open.bytes);
  const uint32_t n_elements = open.n_elements;
  open.n_elements = 0;

  if (options_.mode == CommitMode::kUnbuffered) {
    if (writer_ == nullptr) {
      throw StateError("unbuffered contexts need an attached writer");
    }
    const SealedPage page = make_sealed(column, std::move(raw), n_elements);
    locators_[column].push_back(writer_->commit_page(column, page));
    return;
  }

  TaskPool* pool = writer_ != nullptr ? writer_->compression_pool() : nullptr;
  StagedPage staged;
  if (pool != nullptr) {
    staged.pending = pool->submit(
        [this, column, raw = std::move(raw), n_elements]() mutable {
          return make_sealed(column, std::move(raw), n_elements);
        });
  } else {
    staged.ready = make_sealed(column, std::move(raw), n_elements);
  }
  staged_[column].push_back(std::move(staged));
}

SealedCluster FillContext::seal_cluster() {
  if (entries_in_cluster_ == 0) {
    throw StateError("cannot seal an empty cluster");
  }
  if (broken_) {
    throw StateError("context unusable after a failed fill; discard it");
  }
  if (options_.mode == CommitMode::kUnbuffered) {
    throw StateError("unbuffered contexts commit page by page");
  }
  const uint32_t n = tree_->n_columns();
  for (uint32_t c = 0; c < n; ++c) {
    if (open_[c].n_elements > 0) seal_page(c);
  }
  SealedCluster cluster;
  cluster.n_entries = entries_in_cluster_;
  cluster.uncompressed_bytes = uncompressed_bytes_in_cluster_;
  cluster.column_elements = cluster_elements_;
  cluster.pages.resize(n);
  for (uint32_t c = 0; c < n; ++c) {
    cluster.pages[c].reserve(staged_[c].size());
    for (StagedPage& staged : staged_[c]) {
      SealedPage page = std::move(staged).get();
      cluster.on_disk_bytes += page.bytes.size();
      cluster.pages[c].push_back(std::move(page));
    }
  }
  reset_cluster();
  return cluster;
}

void FillContext::commit_cluster() {
  if (entries_in_cluster_ == 0) return;
  if (writer_ == nullptr) {
    throw StateError("context is not attached to a writer");
  }
  if (options_.mode == CommitMode::kUnbuffered) {
    if (broken_) {
      throw StateError("context unusable after a failed fill; discard it");
    }
    const uint32_t n = tree_->n_columns();
    for (uint32_t c = 0; c < n; ++c) {
      if (open_[c].n_elements > 0) seal_page(c);
    }
    writer_->commit_cluster_metadata(entries_in_cluster_, cluster_elements_,
                                     std::move(locators_));
    locators_.assign(n, {});
    reset_cluster();
  } else {
    writer_->commit_cluster(seal_cluster());
  }
}

void FillContext::discard() {
  for (auto& col : staged_) {
    for (StagedPage& staged : col) {
      if (staged.pending) staged.pending->wait();
    }
  }
  reset_cluster();
  locators_.assign(tree_->n_columns(), {});
  broken_ = false;
}

void FillContext::reset_cluster() {
  for (OpenPage& page : open_) {
    page.bytes.clear();  // keeps capacity for the next cluster
    page.n_elements = 0;
  }
  for (auto& col : staged_) col.clear();
  std::fill(cluster_elements_.begin(), cluster_elements_.end(), 0);
  std::fill(collection_counts_.begin(), collection_counts_.end(), 0);
  entries_in_cluster_ = 0;
  uncompressed_bytes_in_cluster_ = 0;
  if (dirty_registered_) set_dirty(false);
}

void FillContext::set_dirty(bool dirty) {
  dirty_registered_ = dirty;
  if (writer_ != nullptr) writer_->register_dirty(dirty);
}

WriteStats sequential_write(Sink& sink, const FieldTree& tree,
                            const WriterOptions& options, EntryStream stream,
                            TaskPool* compression_pool) {
  WriterOptions opts = options;
  opts.mode = CommitMode::kBuffered;
  ParallelWriter writer(sink, tree, opts, compression_pool);
  auto ctx = writer.create_context();
  while (std::optional<Value> entry = stream()) {
    ctx->fill(*entry);
  }
  ctx->commit_cluster();
  return writer.close();
}

WriteStats sequential_write(Sink& sink, const FieldTree& tree,
                            const WriterOptions& options,
                            std::span<const Value> entries,
                            TaskPool* compression_pool) {
  size_t i = 0;
  return sequential_write(
      sink, tree, options,
      [&]() -> std::optional<Value> {
        if (i == entries.size()) return std::nullopt;
        return entries[i++];
      },
      compression_pool);
}

}  // namespace mntuple
