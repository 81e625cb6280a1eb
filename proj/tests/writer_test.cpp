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

#include <doctest.h>

#include "mntuple/parallel_writer.hpp"
#include "mntuple/reader.hpp"
#include "test_support.hpp"

using namespace mntuple;

namespace {

FieldTree event_tree() {
  return FieldTree::build(
      "Event",
      TypeSpec::record({
          {"fId", TypeSpec::leaf(LeafType::kI64)},
          {"fTracks",
           TypeSpec::collection(TypeSpec::record({
               {"fEnergy", TypeSpec::leaf(LeafType::kF32)},
               {"fIds", TypeSpec::collection(TypeSpec::leaf(LeafType::kI32))},
           }))},
      }));
}

Value track(float energy, std::vector<int32_t> ids) {
  std::vector<Value> id_values;
  for (int32_t id : ids) id_values.emplace_back(id);
  return Value::record({Value(energy), Value::list(std::move(id_values))});
}

Value event(int64_t id, std::vector<Value> tracks) {
  return Value::record({Value(id), Value::list(std::move(tracks))});
}

std::vector<Value> table_entries() {
  std::vector<Value> entries;
  entries.push_back(
      event(6873, {track(25.4f, {42, 27}), track(32.8f, {16})}));
  entries.push_back(event(6874, {track(14.7f, {21, 8})}));
  return entries;
}

WriterOptions plain_options() {
  WriterOptions opts;
  opts.codec = CodecId::kNone;
  return opts;
}

std::vector<uint8_t> page_stream(const SealedCluster& cluster, uint32_t col) {
  std::vector<uint8_t> out;
  for (const SealedPage& page : cluster.pages[col]) {
    REQUIRE(page.codec_id == 0);
    out.insert(out.end(), page.bytes.begin(), page.bytes.end());
  }
  return out;
}

}  // namespace

TEST_CASE("writer options are validated") {
  const FieldTree tree = event_tree();
  WriterOptions opts = plain_options();
  opts.target_page_bytes = 4;  // smaller than the 8-byte columns
  CHECK_THROWS_AS(opts.validate(tree), StateError);

  opts = plain_options();
  opts.target_cluster_bytes = 1024;
  opts.target_page_bytes = 2048;
  CHECK_THROWS_AS(opts.validate(tree), StateError);

  opts = plain_options();
  opts.mode = CommitMode::kUnbuffered;
  opts.compression_threads = 2;
  CHECK_THROWS_AS(opts.validate(tree), StateError);
}

TEST_CASE("filling the example entries yields the example column streams") {
  const FieldTree tree = event_tree();
  FillContext ctx(tree, plain_options());
  for (const Value& entry : table_entries()) ctx.fill(entry);

  CHECK(ctx.entries_in_cluster() == 2);
  SealedCluster cluster = ctx.seal_cluster();
  CHECK(cluster.n_entries == 2);
  CHECK(cluster.column_elements == std::vector<uint64_t>{2, 2, 3, 3, 5});

  CHECK(decode_elements<int64_t>(page_stream(cluster, 0)) ==
        std::vector<int64_t>{6873, 6874});
  CHECK(decode_elements<uint64_t>(page_stream(cluster, 1)) ==
        std::vector<uint64_t>{2, 3});
  CHECK(decode_elements<float>(page_stream(cluster, 2)) ==
        std::vector<float>{25.4f, 32.8f, 14.7f});
  CHECK(decode_elements<uint64_t>(page_stream(cluster, 3)) ==
        std::vector<uint64_t>{2, 3, 5});
  CHECK(decode_elements<int32_t>(page_stream(cluster, 4)) ==
        std::vector<int32_t>{42, 27, 16, 21, 8});
}

TEST_CASE("a column splits into pages at the page size target") {
  // 64 KiB of 4-byte elements is 16384 per page.
  const FieldTree tree = FieldTree::build("v", TypeSpec::leaf(LeafType::kF32));
  FillContext ctx(tree, plain_options());
  for (int i = 0; i < 16384 + 1; ++i) {
    ctx.fill(Value(static_cast<float>(i)));
  }
  SealedCluster cluster = ctx.seal_cluster();
  REQUIRE(cluster.pages[0].size() == 2);
  CHECK(cluster.pages[0][0].n_elements == 16384);
  CHECK(cluster.pages[0][1].n_elements == 1);
  CHECK(cluster.uncompressed_bytes == 4 * 16385);
}

TEST_CASE("entries with empty collections advance only offset columns") {
  const FieldTree tree = event_tree();
  FillContext ctx(tree, plain_options());
  ctx.fill(event(1, {}));
  SealedCluster cluster = ctx.seal_cluster();
  CHECK(cluster.column_elements == std::vector<uint64_t>{1, 1, 0, 0, 0});
}

TEST_CASE("sealing an empty cluster is an error") {
  const FieldTree tree = event_tree();
  FillContext ctx(tree, plain_options());
  CHECK_THROWS_AS((void)ctx.seal_cluster(), StateError);
  ctx.fill(event(1, {}));
  (void)ctx.seal_cluster();
  CHECK_THROWS_AS((void)ctx.seal_cluster(), StateError);  // nothing new
}

TEST_CASE("sealed clusters do not depend on what was sealed before") {
  const FieldTree tree = event_tree();
  FillContext ctx(tree, plain_options());

  for (const Value& entry : table_entries()) ctx.fill(entry);
  const SealedCluster first = ctx.seal_cluster();

  // Stage some unrelated clusters in between.
  std::mt19937_64 rng(99);
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 50; ++i) {
      ctx.fill(event(static_cast<int64_t>(rng()),
                     {track(1.5f * static_cast<float>(i), {1, 2, 3})}));
    }
    (void)ctx.seal_cluster();
  }

  for (const Value& entry : table_entries()) ctx.fill(entry);
  const SealedCluster again = ctx.seal_cluster();

  REQUIRE(first.pages.size() == again.pages.size());
  for (size_t c = 0; c < first.pages.size(); ++c) {
    REQUIRE(first.pages[c].size() == again.pages[c].size());
    for (size_t p = 0; p < first.pages[c].size(); ++p) {
      CHECK(first.pages[c][p].bytes == again.pages[c][p].bytes);
      CHECK(first.pages[c][p].codec_id == again.pages[c][p].codec_id);
    }
  }
}

TEST_CASE("incompressible pages fall back to stored form") {
  const FieldTree tree = FieldTree::build("v", TypeSpec::leaf(LeafType::kI32));
  WriterOptions opts;
  opts.codec = CodecId::kZstd;
  FillContext ctx(tree, opts);
  std::mt19937_64 rng(123);
  for (int i = 0; i < 16384; ++i) {
    ctx.fill(Value(static_cast<int32_t>(rng())));
  }
  SealedCluster cluster = ctx.seal_cluster();
  REQUIRE(cluster.pages[0].size() == 1);
  CHECK(cluster.pages[0][0].codec_id == 0);  // stored
  CHECK(cluster.pages[0][0].bytes.size() ==
        cluster.pages[0][0].uncompressed_bytes);

  // Constant values compress and keep the codec id.
  for (int i = 0; i < 16384; ++i) {
    ctx.fill(Value(int32_t{7}));
  }
  SealedCluster compressed = ctx.seal_cluster();
  CHECK(compressed.pages[0][0].codec_id ==
        static_cast<uint8_t>(CodecId::kZstd));
  CHECK(compressed.pages[0][0].bytes.size() <
        compressed.pages[0][0].uncompressed_bytes);
}

TEST_CASE("a failed fill leaves the context unusable until discarded") {
  const FieldTree tree = event_tree();
  FillContext ctx(tree, plain_options());
  ctx.fill(event(1, {track(1.0f, {1})}));
  CHECK_THROWS_AS(ctx.fill(Value(int64_t{3})), SchemaError);
  CHECK_THROWS_AS(ctx.fill(event(2, {})), StateError);
  CHECK_THROWS_AS((void)ctx.seal_cluster(), StateError);
  ctx.discard();
  ctx.fill(event(2, {}));
  CHECK(ctx.entries_in_cluster() == 1);
}

TEST_CASE("sequential write of no entries produces a valid empty file") {
  test::TempDir dir("seq_empty");
  const FieldTree tree = event_tree();
  {
    FileSink sink(dir.file("empty.mnt"));
    const WriteStats stats = sequential_write(
        sink, tree, plain_options(), [] { return std::optional<Value>{}; });
    CHECK(stats.entries == 0);
    CHECK(stats.clusters == 0);
  }
  Reader reader = Reader::open_file(dir.file("empty.mnt"));
  CHECK(reader.n_entries() == 0);
}

TEST_CASE("sequential write preserves entry order") {
  test::TempDir dir("seq_order");
  const FieldTree tree = event_tree();
  const auto entries = table_entries();
  {
    FileSink sink(dir.file("t.mnt"));
    const WriteStats stats =
        sequential_write(sink, tree, plain_options(), entries);
    CHECK(stats.entries == 2);
    CHECK(stats.clusters == 1);
  }
  Reader reader = Reader::open_file(dir.file("t.mnt"));
  REQUIRE(reader.n_entries() == 2);
  CHECK(reader.read_entry(0) == entries[0]);
  CHECK(reader.read_entry(1) == entries[1]);
}

TEST_CASE("the entries-per-cluster override splits clusters") {
  test::TempDir dir("seq_split");
  const FieldTree tree = event_tree();
  WriterOptions opts = plain_options();
  opts.max_entries_per_cluster = 10;
  std::mt19937_64 rng(5);
  std::vector<Value> entries;
  for (int i = 0; i < 35; ++i) {
    entries.push_back(event(i, {track(0.5f, {i})}));
  }
  FileSink sink(dir.file("t.mnt"));
  const WriteStats stats = sequential_write(sink, tree, opts, entries);
  CHECK(stats.clusters == 4);  // 10 + 10 + 10 + 5

  Reader reader = Reader::open_file(dir.file("t.mnt"));
  CHECK(reader.n_clusters() == 4);
  const auto got = reader.read_all();
  for (size_t i = 0; i < entries.size(); ++i) CHECK(got[i] == entries[i]);
}

TEST_CASE("a compression pool changes nothing about the bytes written") {
  const FieldTree tree = event_tree();
  std::mt19937_64 rng(17);
  std::vector<Value> entries;
  for (int i = 0; i < 4000; ++i) {
    entries.push_back(
        event(i, {track(static_cast<float>(rng() % 100), {1, 2, 3, 4})}));
  }
  WriterOptions opts;
  opts.codec = CodecId::kZstd;
  opts.target_page_bytes = 1024;
  opts.max_entries_per_cluster = 1000;

  MemorySink inline_sink;
  sequential_write(inline_sink, tree, opts, entries);

  MemorySink pooled_sink;
  {
    TaskPool pool(3);
    sequential_write(pooled_sink, tree, opts, entries, &pool);
  }
  CHECK(inline_sink.take_bytes() == pooled_sink.take_bytes());
}
