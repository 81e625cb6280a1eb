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

#include <doctest.h>

#include <thread>

#include "mntuple/reader.hpp"
#include "test_support.hpp"

using namespace mntuple;

namespace {

FieldTree pair_tree() {
  return FieldTree::build(
      "row", TypeSpec::record({
                 {"tag", TypeSpec::leaf(LeafType::kI64)},
                 {"seq", TypeSpec::leaf(LeafType::kI64)},
                 {"vals", TypeSpec::collection(TypeSpec::leaf(LeafType::kI32))},
             }));
}

Value row(int64_t tag, int64_t seq, std::vector<int32_t> vals) {
  std::vector<Value> items;
  for (int32_t v : vals) items.emplace_back(v);
  return Value::record({Value(tag), Value(seq), Value::list(std::move(items))});
}

WriterOptions plain_options() {
  WriterOptions opts;
  opts.codec = CodecId::kNone;
  return opts;
}

}  // namespace

TEST_CASE("contexts created from many threads fill independently") {
  test::TempDir dir("par_ctx");
  const FieldTree tree = pair_tree();
  constexpr int kThreads = 8;
  constexpr int kPerThread = 200;

  std::vector<Value> expected;
  for (int t = 0; t < kThreads; ++t) {
    for (int i = 0; i < kPerThread; ++i) {
      expected.push_back(row(t, i, {t * 1000 + i}));
    }
  }

  FileSink sink(dir.file("f.mnt"));
  ParallelWriter writer(sink, tree, plain_options());
  {
    std::vector<std::thread> threads;
    for (int t = 0; t < kThreads; ++t) {
      threads.emplace_back([&, t] {
        auto ctx = writer.create_context();
        for (int i = 0; i < kPerThread; ++i) {
          ctx->fill(row(t, i, {t * 1000 + i}));
        }
        ctx->commit_cluster();
      });
    }
    for (auto& th : threads) th.join();
  }
  const WriteStats stats = writer.close();
  CHECK(stats.entries == kThreads * kPerThread);

  Reader reader = Reader::open_file(dir.file("f.mnt"));
  CHECK(test::multiset_of(reader.read_all()) == test::multiset_of(expected));
}

TEST_CASE("buffered commits take exactly one exclusion each plus the footer") {
  const FieldTree tree = pair_tree();
  MemorySink sink;
  ParallelWriter writer(sink, tree, plain_options());
  auto ctx = writer.create_context();
  constexpr int kClusters = 7;
  for (int c = 0; c < kClusters; ++c) {
    for (int i = 0; i < 20; ++i) ctx->fill(row(c, i, {}));
    ctx->commit_cluster();
  }
  CHECK(writer.lock_acquisitions() == kClusters);
  const WriteStats stats = writer.close();
  CHECK(stats.lock_acquisitions == kClusters + 1);
  CHECK(stats.clusters == kClusters);
}

TEST_CASE("compression happens before the commit exclusion region") {
  const FieldTree tree = pair_tree();
  MemorySink sink;
  WriterOptions opts;
  opts.codec = CodecId::kZstd;
  ParallelWriter writer(sink, tree, opts);
  auto ctx = writer.create_context();
  for (int i = 0; i < 5000; ++i) ctx->fill(row(1, i, {i, i + 1}));

  SealedCluster cluster = ctx->seal_cluster();
  const uint64_t compress_calls_before = compress_call_count();
  writer.commit_cluster(std::move(cluster));
  CHECK(compress_call_count() == compress_calls_before);
  writer.close();
}

TEST_CASE("unbuffered clusters cost one exclusion per page plus one") {
  const FieldTree tree =
      FieldTree::build("v", TypeSpec::leaf(LeafType::kF32));
  MemorySink sink;
  WriterOptions opts = plain_options();
  opts.mode = CommitMode::kUnbuffered;
  opts.target_page_bytes = 4096;  // 1024 elements per page
  ParallelWriter writer(sink, tree, opts);
  auto ctx = writer.create_context();
  for (int i = 0; i < 3000; ++i) ctx->fill(Value(static_cast<float>(i)));
  // Two pages sealed during filling; the remainder flushes on commit.
  CHECK(writer.lock_acquisitions() == 2);
  ctx->commit_cluster();
  CHECK(writer.lock_acquisitions() == 4);  // 3 pages + 1 descriptor
  const WriteStats stats = writer.close();
  CHECK(stats.lock_acquisitions == 5);
  CHECK(stats.pages == 3);
}

TEST_CASE("unbuffered and buffered files decode identically") {
  test::TempDir dir("modes");
  const FieldTree tree = pair_tree();
  std::vector<Value> entries;
  for (int i = 0; i < 2000; ++i) {
    entries.push_back(row(0, i, {i, 2 * i, 3 * i}));
  }

  for (CommitMode mode : {CommitMode::kBuffered, CommitMode::kUnbuffered}) {
    WriterOptions opts;
    opts.codec = CodecId::kZstd;
    opts.target_page_bytes = 1024;
    opts.max_entries_per_cluster = 300;
    opts.mode = mode;
    const std::string path =
        dir.file(mode == CommitMode::kBuffered ? "b.mnt" : "u.mnt");
    FileSink sink(path);
    ParallelWriter writer(sink, tree, opts);
    auto ctx = writer.create_context();
    for (const Value& e : entries) ctx->fill(e);
    ctx->commit_cluster();
    writer.close();
  }

  Reader buffered = Reader::open_file(dir.file("b.mnt"));
  Reader unbuffered = Reader::open_file(dir.file("u.mnt"));
  const auto a = buffered.read_all();
  const auto b = unbuffered.read_all();
  REQUIRE(a.size() == entries.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i] == entries[i]);
  }
}

TEST_CASE("pages of zero elements are rejected") {
  const FieldTree tree = FieldTree::build("v", TypeSpec::leaf(LeafType::kI32));
  MemorySink sink;
  WriterOptions opts = plain_options();
  opts.mode = CommitMode::kUnbuffered;
  ParallelWriter writer(sink, tree, opts);
  SealedPage page;
  page.column = 0;
  page.n_elements = 0;
  CHECK_THROWS_AS((void)writer.commit_page(0, page), StateError);
}

TEST_CASE("closing with no commits produces a valid empty file") {
  test::TempDir dir("par_empty");
  const FieldTree tree = pair_tree();
  {
    FileSink sink(dir.file("e.mnt"));
    ParallelWriter writer(sink, tree, plain_options());
    const WriteStats stats = writer.close();
    CHECK(stats.entries == 0);
    CHECK(stats.lock_acquisitions == 1);
  }
  Reader reader = Reader::open_file(dir.file("e.mnt"));
  CHECK(reader.n_entries() == 0);
}

TEST_CASE("stats account for every page and fill") {
  test::TempDir dir("par_stats");
  const FieldTree tree = pair_tree();
  FileSink sink(dir.file("s.mnt"));
  WriterOptions opts;
  opts.codec = CodecId::kZstd;
  opts.target_page_bytes = 512;
  opts.max_entries_per_cluster = 111;
  ParallelWriter writer(sink, tree, opts);

  std::mt19937_64 rng(2026);
  uint64_t fills = 0;
  {
    std::vector<std::thread> threads;
    for (int t = 0; t < 3; ++t) {
      threads.emplace_back([&, t] {
        auto ctx = writer.create_context();
        const int n = 500 + t * 137;
        for (int i = 0; i < n; ++i) {
          ctx->fill(row(t, i, {i}));
        }
        ctx->commit_cluster();
      });
    }
    for (auto& th : threads) th.join();
    fills = 500 + (500 + 137) + (500 + 274);
  }
  const WriteStats stats = writer.close();
  CHECK(stats.entries == fills);

  Reader reader = Reader::open_file(dir.file("s.mnt"));
  uint64_t page_uncompressed = 0, pages = 0;
  for (const auto& cluster : reader.footer().clusters) {
    for (const auto& range : cluster.columns) {
      for (const auto& page : range.pages) {
        page_uncompressed += page.uncompressed_bytes;
        ++pages;
      }
    }
  }
  CHECK(stats.bytes_uncompressed == page_uncompressed);
  CHECK(stats.pages == pages);
  CHECK(reader.n_entries() == fills);
}

TEST_CASE("closing while a context holds entries is an error") {
  const FieldTree tree = pair_tree();
  MemorySink sink;
  ParallelWriter writer(sink, tree, plain_options());
  auto ctx = writer.create_context();
  ctx->fill(row(1, 1, {}));
  CHECK_THROWS_AS((void)writer.close(), StateError);
  ctx->discard();
  CHECK_NOTHROW(writer.close());
}

TEST_CASE("contexts and commits fail after close") {
  const FieldTree tree = pair_tree();
  MemorySink sink;
  ParallelWriter writer(sink, tree, plain_options());
  auto ctx = writer.create_context();
  writer.close();
  CHECK_THROWS_AS((void)writer.create_context(), StateError);
  CHECK_THROWS_AS(ctx->fill(row(1, 1, {})), StateError);
  CHECK_THROWS_AS((void)writer.close(), StateError);
}

TEST_CASE("interleavings assign disjoint covering entry ranges") {
  const FieldTree tree = pair_tree();
  MemorySink sink;
  ParallelWriter writer(sink, tree, plain_options());
  auto a = writer.create_context();
  auto b = writer.create_context();
  for (int i = 0; i < 3; ++i) a->fill(row(0, i, {}));
  for (int i = 0; i < 5; ++i) b->fill(row(1, i, {}));
  b->commit_cluster();
  a->commit_cluster();
  writer.close();

  Reader reader(std::make_unique<MemorySource>(sink.take_bytes()));
  REQUIRE(reader.n_clusters() == 2);
  const auto& clusters = reader.footer().clusters;
  CHECK(clusters[0].first_entry == 0);
  CHECK(clusters[0].n_entries == 5);  // first-come-first-serve
  CHECK(clusters[1].first_entry == 5);
  CHECK(clusters[1].n_entries == 3);
}

TEST_CASE("multiset equivalence holds for any interleaving") {
  std::mt19937_64 rng(424242);
  for (int round = 0; round < 5; ++round) {
    const FieldTree tree = pair_tree();
    MemorySink sink;
    WriterOptions opts;
    opts.codec = CodecId::kLz4;
    opts.target_page_bytes = 256;
    opts.max_entries_per_cluster = 37;
    ParallelWriter writer(sink, tree, opts);

    const int n_threads = 2 + static_cast<int>(rng() % 5);
    std::vector<std::thread> threads;
    std::vector<std::vector<Value>> produced(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      const int n = 50 + static_cast<int>(rng() % 300);
      threads.emplace_back([&, t, n] {
        std::mt19937_64 local(1000 + t);
        auto ctx = writer.create_context();
        for (int i = 0; i < n; ++i) {
          Value v = row(t, i, {static_cast<int32_t>(local() % 1000)});
          produced[t].push_back(v);
          ctx->fill(v);
        }
        ctx->commit_cluster();
      });
    }
    for (auto& th : threads) th.join();
    writer.close();

    std::vector<Value> expected;
    for (auto& p : produced) {
      expected.insert(expected.end(), p.begin(), p.end());
    }
    Reader reader(std::make_unique<MemorySource>(sink.take_bytes()));
    const auto got = reader.read_all();
    CHECK(test::multiset_of(got) == test::multiset_of(expected));

    // Each context's own order survives at cluster granularity: per tag,
    // the seq fields must appear in increasing order.
    std::vector<int64_t> last_seq(n_threads, -1);
    for (const Value& v : got) {
      const auto tag = v.as_record().members[0].as<int64_t>();
      const auto seq = v.as_record().members[1].as<int64_t>();
      CHECK(seq > last_seq[static_cast<size_t>(tag)]);
      last_seq[static_cast<size_t>(tag)] = seq;
    }
  }
}

TEST_CASE("one-thread parallel output equals the sequential writer's") {
  const FieldTree tree = pair_tree();
  std::vector<Value> entries;
  for (int i = 0; i < 1234; ++i) {
    entries.push_back(row(3, i, {i, i + 1}));
  }
  WriterOptions opts;
  opts.codec = CodecId::kZstd;
  opts.max_entries_per_cluster = 200;

  MemorySink parallel_sink;
  {
    ParallelWriter writer(parallel_sink, tree, opts);
    auto ctx = writer.create_context();
    for (const Value& e : entries) ctx->fill(e);
    ctx->commit_cluster();
    writer.close();
  }
  MemorySink sequential_sink;
  sequential_write(sequential_sink, tree, opts, entries);

  CHECK(parallel_sink.take_bytes() == sequential_sink.take_bytes());
}

TEST_CASE("decoupled page writes produce byte-identical files") {
  const FieldTree tree = pair_tree();
  std::vector<Value> entries;
  std::mt19937_64 rng(31337);
  for (int i = 0; i < 3000; ++i) {
    entries.push_back(row(1, i, {static_cast<int32_t>(rng() % 50), 2}));
  }
  std::vector<std::vector<uint8_t>> outputs;
  for (bool decoupled : {false, true}) {
    WriterOptions opts;
    opts.codec = CodecId::kZstd;
    opts.target_page_bytes = 2048;
    opts.max_entries_per_cluster = 500;
    opts.decoupled_write = decoupled;
    MemorySink sink;
    sequential_write(sink, tree, opts, entries);
    outputs.push_back(sink.take_bytes());
  }
  CHECK(outputs[0] == outputs[1]);
}

TEST_CASE("relocatability: the same payload lands byte-identically anywhere") {
  const FieldTree tree = pair_tree();
  std::vector<Value> payload;
  for (int i = 0; i < 100; ++i) payload.push_back(row(9, i, {i, -i}));

  WriterOptions opts;
  opts.codec = CodecId::kZstd;

  const auto seal_payload = [&](ParallelWriter& writer) {
    auto ctx = writer.create_context();
    for (const Value& e : payload) ctx->fill(e);
    return ctx->seal_cluster();
  };

  MemorySink sink_a;
  ParallelWriter writer_a(sink_a, tree, opts);
  SealedCluster first = seal_payload(writer_a);

  MemorySink sink_b;
  ParallelWriter writer_b(sink_b, tree, opts);
  for (int k = 0; k < 4; ++k) {
    auto ctx = writer_b.create_context();
    for (int i = 0; i < 50; ++i) ctx->fill(row(k, i, {k * i}));
    ctx->commit_cluster();
  }
  SealedCluster fifth = seal_payload(writer_b);

  REQUIRE(first.pages.size() == fifth.pages.size());
  for (size_t c = 0; c < first.pages.size(); ++c) {
    REQUIRE(first.pages[c].size() == fifth.pages[c].size());
    for (size_t p = 0; p < first.pages[c].size(); ++p) {
      CHECK(first.pages[c][p].bytes == fifth.pages[c][p].bytes);
    }
  }

  // Commit both and make sure the files decode to the same payload at
  // either position.
  writer_a.commit_cluster(std::move(first));
  writer_a.close();
  writer_b.commit_cluster(std::move(fifth));
  writer_b.close();

  Reader ra(std::make_unique<MemorySource>(sink_a.take_bytes()));
  Reader rb(std::make_unique<MemorySource>(sink_b.take_bytes()));
  const auto all_b = rb.read_all();
  const std::vector<Value> tail_b(all_b.end() - payload.size(), all_b.end());
  const auto all_a = ra.read_all();
  for (size_t i = 0; i < payload.size(); ++i) {
    CHECK(all_a[i] == payload[i]);
    CHECK(tail_b[i] == payload[i]);
  }
}
