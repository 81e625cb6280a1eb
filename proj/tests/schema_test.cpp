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

#include "mntuple/schema.hpp"

#include <doctest.h>

#include "test_support.hpp"

using namespace mntuple;

namespace {

// Event { i64 fId; vector<Track> fTracks; };
// Track { f32 fEnergy; vector<i32> fIds; };
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

Value event_entry_1() {
  return event(6873, {track(25.4f, {42, 27}), track(32.8f, {16})});
}

Value event_entry_2() { return event(6874, {track(14.7f, {21, 8})}); }

}  // namespace

TEST_CASE("event schema decomposes into seven fields") {
  const FieldTree tree = event_tree();
  REQUIRE(tree.n_fields() == 7);

  CHECK(tree.field(0).name == "Event");
  CHECK(tree.field(0).kind == FieldKind::kRecord);
  CHECK(tree.field(0).parent == kRootParent);

  CHECK(tree.path_of(1) == "fId");
  CHECK(tree.field(1).kind == FieldKind::kLeaf);
  CHECK(tree.field(1).leaf_type == LeafType::kI64);

  CHECK(tree.path_of(2) == "fTracks");
  CHECK(tree.field(2).kind == FieldKind::kCollection);
  CHECK(tree.path_of(3) == "fTracks._0");
  CHECK(tree.field(3).kind == FieldKind::kRecord);
  CHECK(tree.path_of(4) == "fTracks._0.fEnergy");
  CHECK(tree.field(4).leaf_type == LeafType::kF32);
  CHECK(tree.path_of(5) == "fTracks._0.fIds");
  CHECK(tree.field(5).kind == FieldKind::kCollection);
  CHECK(tree.path_of(6) == "fTracks._0.fIds._0");
  CHECK(tree.field(6).leaf_type == LeafType::kI32);

  CHECK(tree.resolve_path("fTracks._0.fIds") == 5);
  CHECK_THROWS_AS((void)tree.resolve_path("fTracks.fIds"), SchemaError);
}

TEST_CASE("event schema maps to five columns in depth-first order") {
  const FieldTree tree = event_tree();
  const auto columns = map_columns(tree);
  REQUIRE(columns.size() == 5);

  CHECK(columns[0].role == ColumnRole::kValue);  // fId
  CHECK(columns[0].leaf_type == LeafType::kI64);
  CHECK(columns[0].element_width == 8);
  CHECK(columns[0].source_field == 1);

  CHECK(columns[1].role == ColumnRole::kOffset);  // fTracks
  CHECK(columns[1].element_width == 8);
  CHECK(columns[1].source_field == 2);

  CHECK(columns[2].role == ColumnRole::kValue);  // fEnergy
  CHECK(columns[2].leaf_type == LeafType::kF32);
  CHECK(columns[2].element_width == 4);

  CHECK(columns[3].role == ColumnRole::kOffset);  // fIds
  CHECK(columns[4].role == ColumnRole::kValue);   // fIds._0
  CHECK(columns[4].leaf_type == LeafType::kI32);

  // Pure function: same tree, same mapping.
  CHECK(map_columns(tree) == columns);
  CHECK(tree.columns() == columns);
}

TEST_CASE("single-leaf root maps to one column") {
  const FieldTree tree =
      FieldTree::build("value", TypeSpec::leaf(LeafType::kF64));
  CHECK(tree.n_fields() == 1);
  REQUIRE(tree.n_columns() == 1);
  CHECK(tree.column(0).role == ColumnRole::kValue);
  CHECK(tree.column(0).element_width == 8);
}

TEST_CASE("collection of collection of i32 maps to offset offset value") {
  const FieldTree tree = FieldTree::build(
      "nested", TypeSpec::collection(
                    TypeSpec::collection(TypeSpec::leaf(LeafType::kI32))));
  REQUIRE(tree.n_columns() == 3);
  CHECK(tree.column(0).role == ColumnRole::kOffset);
  CHECK(tree.column(1).role == ColumnRole::kOffset);
  CHECK(tree.column(2).role == ColumnRole::kValue);
  CHECK(tree.column(2).leaf_type == LeafType::kI32);
}

TEST_CASE("two sibling leaves map to two value columns in order") {
  const FieldTree tree = FieldTree::build(
      "pair", TypeSpec::record({{"a", TypeSpec::leaf(LeafType::kI32)},
                                {"b", TypeSpec::leaf(LeafType::kF64)}}));
  REQUIRE(tree.n_columns() == 2);
  CHECK(tree.column(0).source_field == tree.resolve_path("a"));
  CHECK(tree.column(1).source_field == tree.resolve_path("b"));
}

TEST_CASE("invalid schemas are rejected") {
  CHECK_THROWS_AS(FieldTree::build("r", TypeSpec::record({})), SchemaError);
  CHECK_THROWS_AS(
      FieldTree::build("r",
                       TypeSpec::record({{"x", TypeSpec::leaf(LeafType::kI32)},
                                         {"x", TypeSpec::leaf(LeafType::kI64)}})),
      SchemaError);
  CHECK_THROWS_AS(
      FieldTree::build("r", TypeSpec::record({{"", TypeSpec::leaf(
                                                        LeafType::kI32)}})),
      SchemaError);
}

TEST_CASE("schema serialization is deterministic and round-trips") {
  const FieldTree tree = event_tree();
  const auto bytes = tree.serialize();
  CHECK(bytes == tree.serialize());
  const FieldTree back = FieldTree::deserialize(bytes);
  CHECK(back == tree);
  CHECK(back.n_columns() == tree.n_columns());

  // Layout spot-check: count, then first field record.
  REQUIRE(bytes.size() > 17);
  CHECK(load_le32(bytes.data()) == 7);          // field count
  CHECK(load_le32(bytes.data() + 4) == 0);      // field id
  CHECK(load_le32(bytes.data() + 8) == kRootParent);
  CHECK(bytes[12] == 0);                        // record kind
  CHECK(bytes[13] == kNoLeafType);
  CHECK(load_le16(bytes.data() + 14) == 5);     // "Event"
  CHECK(std::string(bytes.begin() + 16, bytes.begin() + 21) == "Event");
}

TEST_CASE("shredding the first example entry with zero bases") {
  const FieldTree tree = event_tree();
  std::vector<uint64_t> counts(tree.n_columns(), 0);
  const auto cols = shred_entry_bytes(tree, event_entry_1(), counts);

  CHECK(decode_elements<int64_t>(cols[0]) == std::vector<int64_t>{6873});
  CHECK(decode_elements<uint64_t>(cols[1]) == std::vector<uint64_t>{2});
  CHECK(decode_elements<float>(cols[2]) == std::vector<float>{25.4f, 32.8f});
  CHECK(decode_elements<uint64_t>(cols[3]) == std::vector<uint64_t>{2, 3});
  CHECK(decode_elements<int32_t>(cols[4]) ==
        std::vector<int32_t>{42, 27, 16});
}

TEST_CASE("offsets continue cumulatively within a cluster") {
  const FieldTree tree = event_tree();
  std::vector<uint64_t> counts(tree.n_columns(), 0);
  (void)shred_entry_bytes(tree, event_entry_1(), counts);
  const auto cols = shred_entry_bytes(tree, event_entry_2(), counts);

  CHECK(decode_elements<int64_t>(cols[0]) == std::vector<int64_t>{6874});
  CHECK(decode_elements<uint64_t>(cols[1]) == std::vector<uint64_t>{3});
  CHECK(decode_elements<float>(cols[2]) == std::vector<float>{14.7f});
  CHECK(decode_elements<uint64_t>(cols[3]) == std::vector<uint64_t>{5});
  CHECK(decode_elements<int32_t>(cols[4]) == std::vector<int32_t>{21, 8});
}

TEST_CASE("empty collections advance only offset columns") {
  const FieldTree tree = event_tree();
  std::vector<uint64_t> counts(tree.n_columns(), 0);
  (void)shred_entry_bytes(tree, event_entry_1(), counts);
  const auto cols = shred_entry_bytes(tree, event(7000, {}), counts);

  CHECK(decode_elements<uint64_t>(cols[1]) ==
        std::vector<uint64_t>{2});  // repeats the running base
  CHECK(cols[2].empty());
  CHECK(cols[3].empty());  // no track instances, no inner offsets
  CHECK(cols[4].empty());
}

TEST_CASE("nonconforming entries are rejected") {
  const FieldTree tree = event_tree();
  std::vector<uint64_t> counts(tree.n_columns(), 0);
  CHECK_THROWS_AS((void)shred_entry_bytes(tree, Value(int64_t{1}), counts),
                  SchemaError);
  // i32 where the schema wants i64
  CHECK_THROWS_AS(
      (void)shred_entry_bytes(
          tree, Value::record({Value(int32_t{1}), Value::list({})}), counts),
      SchemaError);
  // record of wrong arity
  CHECK_THROWS_AS(
      (void)shred_entry_bytes(tree, Value::record({Value(int64_t{1})}),
                              counts),
      SchemaError);
}

TEST_CASE("offset columns are monotone and end at the child instance count") {
  std::mt19937_64 rng(20260809);
  for (int round = 0; round < 40; ++round) {
    const FieldTree tree = test::random_tree(rng);
    std::vector<uint64_t> counts(tree.n_columns(), 0);
    std::vector<uint64_t> instance_oracle(tree.n_fields(), 0);
    std::vector<std::vector<uint8_t>> streams(tree.n_columns());

    const auto entries = test::random_entries(tree, rng, 1 + rng() % 20);
    for (const Value& entry : entries) {
      auto cols = shred_entry_bytes(tree, entry, counts);
      for (uint32_t c = 0; c < tree.n_columns(); ++c) {
        streams[c].insert(streams[c].end(), cols[c].begin(), cols[c].end());
      }
      test::count_instances(tree, entry, 0, instance_oracle);
    }

    for (const ColumnDescriptor& col : tree.columns()) {
      if (col.role != ColumnRole::kOffset) continue;
      const auto offsets = decode_elements<uint64_t>(streams[col.id]);
      uint64_t prev = 0;
      for (uint64_t off : offsets) {
        CHECK(off >= prev);
        prev = off;
      }
      const uint64_t last = offsets.empty() ? 0 : offsets.back();
      CHECK(last == instance_oracle[col.source_field]);
    }
  }
}

TEST_CASE("projection keeps ancestors and whole subtrees") {
  const FieldTree tree = event_tree();
  Projection proj;
  const FieldTree projected = tree.project({"fTracks._0.fEnergy"}, &proj);

  // Event, fTracks, _0, fEnergy survive; fId and fIds do not.
  REQUIRE(projected.n_fields() == 4);
  CHECK(projected.path_of(3) == "fTracks._0.fEnergy");
  REQUIRE(projected.n_columns() == 2);  // fTracks offsets + fEnergy values
  CHECK(proj.source_column == std::vector<uint32_t>{1, 2});

  // Naming a collection keeps its entire subtree.
  Projection proj2;
  const FieldTree tracks = tree.project({"fTracks"}, &proj2);
  CHECK(tracks.n_fields() == 6);
  CHECK(proj2.source_column == std::vector<uint32_t>{1, 2, 3, 4});

  // Empty path list keeps everything.
  Projection proj3;
  const FieldTree all = tree.project({}, &proj3);
  CHECK(all == tree);
  CHECK(proj3.source_column == std::vector<uint32_t>{0, 1, 2, 3, 4});
}
