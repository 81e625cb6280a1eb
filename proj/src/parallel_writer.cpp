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

#include "mntuple/parallel_writer.hpp"

#include <utility>

namespace mntuple {

ParallelWriter::ParallelWriter(Sink& sink, const FieldTree& tree,
                               const WriterOptions& options,
                               TaskPool* compression_pool)
    : sink_(sink), tree_(tree), options_(options) {
  options_.validate(tree_);
  if (compression_pool != nullptr) {
    compression_pool_ = compression_pool;
  } else if (options_.compression_threads > 0) {
    owned_pool_ = std::make_unique<TaskPool>(options_.compression_threads);
    compression_pool_ = owned_pool_.get();
  }
  next_element_.assign(tree_.n_columns(), 0);
  write_header(sink_, tree_, options_.codec);
  start_ = std::chrono::steady_clock::now();
}

ParallelWriter::~ParallelWriter() = default;

std::unique_lock<std::mutex> ParallelWriter::enter_commit_region() {
  std::unique_lock lock(commit_mu_);
  lock_count_.fetch_add(1, std::memory_order_relaxed);
  return lock;
}

void ParallelWriter::check_writable() const {
  if (closed_.load()) {
    throw StateError("writer already closed");
  }
  if (failed_.load()) {
    throw StateError("writer failed earlier: " + fail_reason_);
  }
}

void ParallelWriter::poison(const std::string& why) {
  {
    std::scoped_lock lock(fail_mu_);
    if (fail_reason_.empty()) fail_reason_ = why;
  }
  failed_.store(true);
}

void ParallelWriter::register_dirty(bool dirty) {
  if (dirty) {
    dirty_contexts_.fetch_add(1, std::memory_order_relaxed);
  } else {
    dirty_contexts_.fetch_sub(1, std::memory_order_relaxed);
  }
}

std::unique_ptr<FillContext> ParallelWriter::create_context() {
  check_writable();
  return std::unique_ptr<FillContext>(new FillContext(this));
}

uint64_t ParallelWriter::committed_entries() const {
  return next_entry_.load();
}

void ParallelWriter::commit_cluster(SealedCluster cluster) {
  check_writable();
  if (cluster.n_entries == 0) {
    throw StateError("cannot commit an empty cluster");
  }
  if (cluster.pages.size() != tree_.n_columns() ||
      cluster.column_elements.size() != tree_.n_columns()) {
    throw StateError("sealed cluster does not match the writer's schema");
  }

  // Page writes to perform after leaving the critical section.
  std::vector<std::pair<uint64_t, const SealedPage*>> deferred;
  if (options_.decoupled_write) {
    deferred.reserve(64);
  }

  try {
    auto lock = enter_commit_region();
    const uint64_t base =
        append_reserved(sink_, cluster.on_disk_bytes, options_.preallocate);
    ClusterDescriptor desc;
    desc.first_entry = next_entry_.load();
    desc.n_entries = cluster.n_entries;
    desc.columns.resize(tree_.n_columns());
    uint64_t offset = base;
    for (uint32_t col = 0; col < tree_.n_columns(); ++col) {
      ColumnRange& range = desc.columns[col];
      range.first_element = next_element_[col];
      range.n_elements = cluster.column_elements[col];
      range.pages.reserve(cluster.pages[col].size());
      for (const SealedPage& page : cluster.pages[col]) {
        PageLocator loc;
        loc.file_offset = offset;
        loc.on_disk_bytes = static_cast<uint32_t>(page.bytes.size());
        loc.uncompressed_bytes = page.uncompressed_bytes;
        loc.n_elements = page.n_elements;
        loc.codec_id = page.codec_id;
        range.pages.push_back(loc);
        if (options_.decoupled_write) {
          deferred.emplace_back(offset, &page);
        } else {
          sink_.write_at(offset, page.bytes);
        }
        offset += page.bytes.size();
        ++pages_;
        bytes_uncompressed_ += page.uncompressed_bytes;
        bytes_on_disk_ += page.bytes.size();
      }
      next_element_[col] += range.n_elements;
    }
    next_entry_.store(next_entry_.load() + cluster.n_entries);
    footer_.clusters.push_back(std::move(desc));
  } catch (const IoError& e) {
    poison(e.what());
    throw;
  }

  if (options_.decoupled_write) {
    try {
      for (const auto& [offset, page] : deferred) {
        sink_.write_at(offset, page->bytes);
      }
    } catch (const IoError& e) {
      poison(e.what());
      throw;
    }
  }
}

PageLocator ParallelWriter::commit_page(uint32_t column,
                                        const SealedPage& page) {
  check_writable();
  if (options_.mode != CommitMode::kUnbuffered) {
    throw StateError("commit_page requires unbuffered mode");
  }
  if (page.n_elements == 0) {
    throw StateError("cannot commit a page of zero elements");
  }
  if (column >= tree_.n_columns()) {
    throw StateError("page column out of range");
  }
  PageLocator loc;
  loc.on_disk_bytes = static_cast<uint32_t>(page.bytes.size());
  loc.uncompressed_bytes = page.uncompressed_bytes;
  loc.n_elements = page.n_elements;
  loc.codec_id = page.codec_id;
  try {
    auto lock = enter_commit_region();
    loc.file_offset =
        append_reserved(sink_, page.bytes.size(), options_.preallocate);
    sink_.write_at(loc.file_offset, page.bytes);
    ++pages_;
    bytes_uncompressed_ += page.uncompressed_bytes;
    bytes_on_disk_ += page.bytes.size();
  } catch (const IoError& e) {
    poison(e.what());
    throw;
  }
  return loc;
}

void ParallelWriter::commit_cluster_metadata(
    uint64_t n_entries, std::vector<uint64_t> column_elements,
    std::vector<std::vector<PageLocator>> locators) {
  check_writable();
  if (options_.mode != CommitMode::kUnbuffered) {
    throw StateError("commit_cluster_metadata requires unbuffered mode");
  }
  if (n_entries == 0) {
    throw StateError("cannot commit an empty cluster");
  }
  if (column_elements.size() != tree_.n_columns() ||
      locators.size() != tree_.n_columns()) {
    throw StateError("cluster metadata does not match the writer's schema");
  }
  auto lock = enter_commit_region();
  ClusterDescriptor desc;
  desc.first_entry = next_entry_.load();
  desc.n_entries = n_entries;
  desc.columns.resize(tree_.n_columns());
  for (uint32_t col = 0; col < tree_.n_columns(); ++col) {
    ColumnRange& range = desc.columns[col];
    range.first_element = next_element_[col];
    range.n_elements = column_elements[col];
    range.pages = std::move(locators[col]);
    next_element_[col] += range.n_elements;
  }
  next_entry_.store(next_entry_.load() + n_entries);
  footer_.clusters.push_back(std::move(desc));
}

WriteStats ParallelWriter::close() {
  check_writable();
  if (dirty_contexts_.load() != 0) {
    throw StateError("a fill context still holds unsealed entries");
  }
  WriteStats stats;
  try {
    auto lock = enter_commit_region();
    write_footer_and_trailer(sink_, footer_);
    closed_.store(true);
    stats.entries = next_entry_.load();
    stats.clusters = footer_.clusters.size();
    stats.pages = pages_;
    stats.bytes_uncompressed = bytes_uncompressed_;
    stats.bytes_on_disk = bytes_on_disk_;
  } catch (const IoError& e) {
    poison(e.what());
    throw;
  }
  stats.bytes_written_total = sink_.bytes_written();
  stats.lock_acquisitions = lock_count_.load();
  stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
          .count();
  return stats;
}

}  // namespace mntuple
