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

#include <doctest.h>

#include "mntuple/parallel_writer.hpp"
#include "mntuple/writer.hpp"
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

std::vector<uint8_t> write_table_file() {
  MemorySink sink;
  WriterOptions opts;
  opts.codec = CodecId::kNone;
  std::vector<Value> entries;
  entries.push_back(event(6873, {track(25.4f, {42, 27}), track(32.8f, {16})}));
  entries.push_back(event(6874, {track(14.7f, {21, 8})}));
  sequential_write(sink, event_tree(), opts, entries);
  return sink.take_bytes();
}

}  // namespace

TEST_CASE("reading back the example file reconstructs both entries") {
  Reader reader(std::make_unique<MemorySource>(write_table_file()));
  REQUIRE(reader.n_entries() == 2);

  const Value first = reader.read_entry(0);
  CHECK(first ==
        event(6873, {track(25.4f, {42, 27}), track(32.8f, {16})}));
  const Value second = reader.read_entry(1);
  CHECK(second == event(6874, {track(14.7f, {21, 8})}));

  CHECK_THROWS_AS((void)reader.read_entry(2), StateError);
}

TEST_CASE("iteration equals random access on a random file") {
  std::mt19937_64 rng(777);
  for (int round = 0; round < 10; ++round) {
    const FieldTree tree = test::random_tree(rng);
    const auto entries = test::random_entries(tree, rng, 1 + rng() % 100);
    WriterOptions opts;
    opts.codec = static_cast<CodecId>(rng() % 4);
    opts.target_page_bytes = 256;
    opts.max_entries_per_cluster = 1 + rng() % 40;
    MemorySink sink;
    sequential_write(sink, tree, opts, entries);

    Reader reader(std::make_unique<MemorySource>(sink.take_bytes()));
    REQUIRE(reader.n_entries() == entries.size());
    const auto scanned = reader.read_all();
    for (size_t i = 0; i < entries.size(); ++i) {
      CHECK(scanned[i] == entries[i]);
      CHECK(reader.read_entry(i) == entries[i]);
    }
  }
}

TEST_CASE("a full pass decompresses each page exactly once") {
  std::mt19937_64 rng(888);
  const FieldTree tree = event_tree();
  std::vector<Value> entries;
  for (int i = 0; i < 500; ++i) {
    entries.push_back(event(
        i, {track(static_cast<float>(i), {i, i + 1, i + 2}), track(0.f, {})}));
  }
  WriterOptions opts;
  opts.codec = CodecId::kZstd;
  opts.target_page_bytes = 512;
  opts.max_entries_per_cluster = 120;
  MemorySink sink;
  sequential_write(sink, tree, opts, entries);

  Reader reader(std::make_unique<MemorySource>(sink.take_bytes()));
  uint64_t total_pages = 0;
  for (const auto& cluster : reader.footer().clusters) {
    for (const auto& range : cluster.columns) {
      total_pages += range.pages.size();
    }
  }
  REQUIRE(reader.n_clusters() > 1);
  const uint64_t before = reader.pages_decompressed();
  uint64_t seen = 0;
  reader.for_each([&](uint64_t i, const Value& v) {
    CHECK(v == entries[i]);
    ++seen;
  });
  CHECK(seen == entries.size());
  CHECK(reader.pages_decompressed() - before == total_pages);
}

TEST_CASE("projected reads never touch dropped columns") {
  const FieldTree tree = event_tree();
  std::vector<Value> entries;
  for (int i = 0; i < 300; ++i) {
    entries.push_back(event(i, {track(1.0f * i, {i}), track(2.0f * i, {})}));
  }
  WriterOptions opts;
  opts.codec = CodecId::kZstd;
  opts.target_page_bytes = 512;
  MemorySink sink;
  sequential_write(sink, tree, opts, entries);
  const auto bytes = sink.take_bytes();

  ReaderOptions ropts;
  ropts.projected_fields = {"fId"};
  Reader reader(std::make_unique<MemorySource>(bytes), ropts);
  CHECK(reader.tree().n_columns() == 1);

  uint64_t id_pages = 0;
  for (const auto& cluster : reader.footer().clusters) {
    id_pages += cluster.columns[0].pages.size();  // fId is column 0
  }
  reader.for_each([&](uint64_t i, const Value& v) {
    CHECK(v == Value::record({Value(static_cast<int64_t>(i))}));
  });
  CHECK(reader.pages_decompressed() == id_pages);

  // Projecting a nested leaf keeps the enclosing offset columns.
  ReaderOptions nested;
  nested.projected_fields = {"fTracks._0.fEnergy"};
  Reader reader2(std::make_unique<MemorySource>(bytes), nested);
  CHECK(reader2.tree().n_columns() == 2);
  const Value v = reader2.read_entry(10);
  CHECK(v == Value::record({Value::list({
                Value::record({Value(10.0f)}),
                Value::record({Value(20.0f)}),
            })}));
}

TEST_CASE("iteration crosses cluster boundaries seamlessly") {
  const FieldTree tree = event_tree();
  std::vector<Value> entries;
  for (int i = 0; i < 90; ++i) {
    entries.push_back(event(i, {track(0.5f * i, {i, -i})}));
  }
  WriterOptions opts;
  opts.codec = CodecId::kNone;
  opts.max_entries_per_cluster = 30;
  MemorySink sink;
  sequential_write(sink, tree, opts, entries);

  Reader reader(std::make_unique<MemorySource>(sink.take_bytes()));
  REQUIRE(reader.n_clusters() == 3);
  // Boundary entries decode like any other.
  for (uint64_t i : {29, 30, 59, 60, 89}) {
    CHECK(reader.read_entry(i) == entries[i]);
  }
}

TEST_CASE("open rejects damaged files with distinct error classes") {
  const auto good = write_table_file();

  SUBCASE("empty file") {
    CHECK_THROWS_AS(Reader(std::make_unique<MemorySource>(
                        std::vector<uint8_t>{})),
                    IncompleteFileError);
  }
  SUBCASE("missing trailer") {
    auto bytes = good;
    bytes.resize(bytes.size() - kTrailerBytes);
    CHECK_THROWS_AS(Reader(std::make_unique<MemorySource>(bytes)),
                    IncompleteFileError);
  }
  SUBCASE("flipped footer bit") {
    auto bytes = good;
    bytes[bytes.size() - kTrailerBytes - 10] ^= 0x02;
    CHECK_THROWS_AS(Reader(std::make_unique<MemorySource>(bytes)),
                    ChecksumError);
  }
  SUBCASE("unknown codec id in a page locator") {
    // Patch the first page's codec byte inside the footer, then re-seal the
    // footer with a valid checksum so only the codec check can fire.
    auto bytes = good;
    const MemorySource src(bytes);
    const FileTrailer trailer = read_trailer(src);
    std::vector<uint8_t> footer(
        bytes.begin() + trailer.footer_offset,
        bytes.begin() + trailer.footer_offset + trailer.footer_len);
    // footer layout: u32 count, u64 first_entry, u64 n_entries, then the
    // first column range (u64,u64,u32) and its first locator.
    const size_t codec_pos = 4 + 16 + 20 + 20;
    footer[codec_pos] = 9;
    const uint32_t crc =
        crc32c(std::span(footer.data(), footer.size() - 4));
    store_le32(footer.data() + footer.size() - 4, crc);
    std::copy(footer.begin(), footer.end(),
              bytes.begin() + trailer.footer_offset);
    CHECK_THROWS_AS(Reader(std::make_unique<MemorySource>(bytes)),
                    UnknownCodecError);
  }
}
