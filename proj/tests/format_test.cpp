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

#include <doctest.h>

#include <thread>

#include "mntuple/bytes.hpp"
#include "test_support.hpp"

using namespace mntuple;

namespace {

FieldTree small_tree() {
  return FieldTree::build("value", TypeSpec::leaf(LeafType::kF64));
}

FileFooter two_cluster_footer(uint32_t n_columns) {
  FileFooter footer;
  uint64_t file_offset = 100;
  uint64_t first_entry = 0;
  std::vector<uint64_t> first_element(n_columns, 0);
  for (uint64_t n_entries : {3, 5}) {
    ClusterDescriptor c;
    c.first_entry = first_entry;
    c.n_entries = n_entries;
    first_entry += n_entries;
    for (uint32_t col = 0; col < n_columns; ++col) {
      ColumnRange range;
      range.first_element = first_element[col];
      range.n_elements = n_entries;
      first_element[col] += n_entries;
      PageLocator page;
      page.file_offset = file_offset;
      page.n_elements = static_cast<uint32_t>(n_entries);
      page.uncompressed_bytes = static_cast<uint32_t>(8 * n_entries);
      page.on_disk_bytes = page.uncompressed_bytes;
      page.codec_id = 0;
      file_offset += page.on_disk_bytes;
      range.pages.push_back(page);
      c.columns.push_back(std::move(range));
    }
    footer.clusters.push_back(std::move(c));
  }
  return footer;
}

}  // namespace

TEST_CASE("header length is the fixed part plus the schema") {
  const FieldTree tree = small_tree();
  MemorySink sink;
  const uint64_t n = write_header(sink, tree, CodecId::kNone);
  CHECK(n == 16 + tree.serialize().size());
  CHECK(sink.end_offset() == n);

  const MemorySource src(sink.take_bytes());
  const FileHeader h = read_header(src);
  CHECK(h.tree == tree);
  CHECK(h.default_codec == CodecId::kNone);
  CHECK(h.header_bytes == n);
}

TEST_CASE("header bytes are identical across writes") {
  const FieldTree tree = FieldTree::build(
      "Event",
      TypeSpec::record({
          {"fId", TypeSpec::leaf(LeafType::kI64)},
          {"fTracks",
           TypeSpec::collection(TypeSpec::record({
               {"fEnergy", TypeSpec::leaf(LeafType::kF32)},
               {"fIds", TypeSpec::collection(TypeSpec::leaf(LeafType::kI32))},
           }))},
      }));
  MemorySink a, b;
  write_header(a, tree, CodecId::kZstd);
  write_header(b, tree, CodecId::kZstd);
  CHECK(a.take_bytes() == b.take_bytes());
}

TEST_CASE("unsupported header versions are rejected") {
  const FieldTree tree = small_tree();
  MemorySink sink;
  write_header(sink, tree, CodecId::kNone);
  const auto good = sink.take_bytes();

  auto bad_version = good;
  store_le16(bad_version.data() + 4, 2);
  CHECK_THROWS_AS((void)read_header(MemorySource(bad_version)), FormatError);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS((void)read_header(MemorySource(bad_magic)), FormatError);

  auto bad_codec = good;
  bad_codec[8] = 200;
  CHECK_THROWS_AS((void)read_header(MemorySource(bad_codec)),
                  UnknownCodecError);
}

TEST_CASE("concurrent reservations receive disjoint regions") {
  NullSink sink;
  constexpr int kThreads = 8;
  constexpr int kPerThread = 500;
  std::vector<std::vector<std::pair<uint64_t, uint64_t>>> got(kThreads);
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < kPerThread; ++i) {
        const uint64_t n = 100 + static_cast<uint64_t>((t + i) % 3) * 100;
        got[t].emplace_back(append_reserved(sink, n), n);
      }
    });
  }
  for (auto& w : workers) w.join();

  std::vector<std::pair<uint64_t, uint64_t>> all;
  uint64_t total = 0;
  for (const auto& per_thread : got) {
    for (const auto& r : per_thread) {
      all.push_back(r);
      total += r.second;
    }
  }
  std::sort(all.begin(), all.end());
  for (size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i - 1].first + all[i - 1].second <= all[i].first);
  }
  CHECK(sink.end_offset() == total);
}

TEST_CASE("two reservations advance the end by their sum") {
  NullSink sink;
  const uint64_t a = append_reserved(sink, 100);
  const uint64_t b = append_reserved(sink, 200);
  CHECK(a + 100 <= b);
  CHECK(sink.end_offset() == 300);
}

TEST_CASE("zero-byte reservations are rejected") {
  NullSink sink;
  CHECK_THROWS_AS((void)append_reserved(sink, 0), StateError);
}

TEST_CASE("preallocating reservations work on a tmpfs path") {
  test::TempDir dir("prealloc");
  FileSink sink(dir.file("p.bin"));
  const uint64_t off = sink.reserve(1 << 20, /*preallocate=*/true);
  CHECK(off == 0);
  std::vector<uint8_t> data(1024, 7);
  sink.write_at(0, data);
  CHECK(sink.bytes_written() == 1024);
}

TEST_CASE("footer round-trips exactly") {
  const FileFooter footer = two_cluster_footer(2);
  const auto bytes = encode_footer(footer);
  const FileFooter back = decode_footer(bytes, 2);
  CHECK(back == footer);
  CHECK(back.total_entries() == 8);
}

TEST_CASE("empty footers are valid") {
  const FileFooter footer;
  const auto bytes = encode_footer(footer);
  CHECK(bytes.size() == 8);  // count + crc
  const FileFooter back = decode_footer(bytes, 3);
  CHECK(back.clusters.empty());
  CHECK(back.total_entries() == 0);
}

TEST_CASE("any single-bit footer corruption fails the checksum") {
  const auto bytes = encode_footer(two_cluster_footer(1));
  for (size_t bit = 0; bit < bytes.size() * 8; ++bit) {
    auto corrupt = bytes;
    corrupt[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
    CHECK_THROWS_AS((void)decode_footer(corrupt, 1), ChecksumError);
  }
}

TEST_CASE("trailer records the footer position") {
  MemorySink sink;
  const FieldTree tree = small_tree();
  write_header(sink, tree, CodecId::kNone);
  const uint64_t header_end = sink.end_offset();
  const FileFooter footer;  // no clusters
  write_footer_and_trailer(sink, footer);

  const MemorySource src(sink.take_bytes());
  const FileTrailer trailer = read_trailer(src);
  CHECK(trailer.footer_offset == header_end);
  CHECK(trailer.footer_offset + trailer.footer_len + kTrailerBytes ==
        src.size());
}

TEST_CASE("truncated trailers are reported as incomplete files") {
  MemorySink sink;
  write_header(sink, small_tree(), CodecId::kNone);
  auto bytes = sink.take_bytes();
  CHECK_THROWS_AS((void)read_trailer(MemorySource(bytes)),
                  IncompleteFileError);
}

TEST_CASE("footer validation enforces the invariant chain") {
  const FieldTree tree = small_tree();
  FileFooter footer = two_cluster_footer(1);
  CHECK_NOTHROW(validate_footer(footer, tree, 0, 1 << 20));

  SUBCASE("entry chain break") {
    footer.clusters[1].first_entry = 4;
    CHECK_THROWS_AS(validate_footer(footer, tree, 0, 1 << 20), FormatError);
  }
  SUBCASE("element chain break") {
    footer.clusters[1].columns[0].first_element = 2;
    CHECK_THROWS_AS(validate_footer(footer, tree, 0, 1 << 20), FormatError);
  }
  SUBCASE("width mismatch") {
    footer.clusters[0].columns[0].pages[0].uncompressed_bytes += 4;
    CHECK_THROWS_AS(validate_footer(footer, tree, 0, 1 << 20), FormatError);
  }
  SUBCASE("overlapping pages") {
    footer.clusters[1].columns[0].pages[0].file_offset =
        footer.clusters[0].columns[0].pages[0].file_offset + 1;
    CHECK_THROWS_AS(validate_footer(footer, tree, 0, 1 << 20), FormatError);
  }
  SUBCASE("page outside the data region") {
    CHECK_THROWS_AS(validate_footer(footer, tree, 0, 150), FormatError);
  }
  SUBCASE("unknown page codec") {
    footer.clusters[0].columns[0].pages[0].codec_id = 9;
    CHECK_THROWS_AS(validate_footer(footer, tree, 0, 1 << 20),
                    UnknownCodecError);
  }
}
