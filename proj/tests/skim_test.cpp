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

#include "mntuple/skim.hpp"

#include <doctest.h>

#include <map>

#include "mntuple/parallel_writer.hpp"
#include "mntuple/reader.hpp"
#include "test_support.hpp"

using namespace mntuple;
using namespace mntuple::skim;

namespace {

Value jets_event(int64_t id, std::vector<float> jet_pts,
                 std::vector<float> lep_pts) {
  auto pts = [](const std::vector<float>& v) {
    std::vector<Value> items;
    for (float pt : v) items.push_back(Value::record({Value(pt)}));
    return Value::list(std::move(items));
  };
  return Value::record({Value(id), pts(jet_pts), pts(lep_pts)});
}

std::vector<float> jet_pts_of(const Value& v) {
  std::vector<float> out;
  for (const Value& jet : v.as_record().members[1].as_list().items) {
    out.push_back(jet.as_record().members[0].as<float>());
  }
  return out;
}

}  // namespace

TEST_CASE("count rules reject entries below the count threshold") {
  const FieldTree tree = demo_schema();
  SkimConfig config;
  config.rules = {{"fJets", "fPt", 20.0, 4}};
  const CompiledSkim skim(tree, config);

  // Only three jets above 20.
  CHECK(!skim.skim_entry(jets_event(1, {25, 30, 21, 19}, {50})).has_value());
  // Exactly four pass.
  CHECK(skim.skim_entry(jets_event(1, {25, 30, 21, 20.5f}, {})).has_value());
  // The threshold is strict: 20.0 itself does not count.
  CHECK(!skim.skim_entry(jets_event(1, {20, 20, 20, 20}, {})).has_value());
}

TEST_CASE("element filters drop elements below the minimum") {
  const FieldTree tree = demo_schema();
  SkimConfig config;
  config.rules = {{"fJets", "fPt", 20.0, 4}};
  config.element_filters = {{"fJets", "fPt", 20.0}};
  const CompiledSkim skim(tree, config);

  const auto out =
      skim.skim_entry(jets_event(1, {15, 25, 30, 30, 40}, {1, 2}));
  REQUIRE(out.has_value());
  CHECK(jet_pts_of(*out) == std::vector<float>{25, 30, 30, 40});
  // Untouched collections survive as-is.
  CHECK(out->as_record().members[2].as_list().items.size() == 2);
}

TEST_CASE("an empty config is the identity skim") {
  const FieldTree tree = demo_schema();
  const SkimConfig config;
  const CompiledSkim skim(tree, config);
  const Value entry = jets_event(42, {1, 2, 3}, {4});
  const auto out = skim.skim_entry(entry);
  REQUIRE(out.has_value());
  CHECK(*out == entry);
  CHECK(skim.output_tree() == tree);
}

TEST_CASE("horizontal projection drops fields from the output schema") {
  const FieldTree tree = demo_schema();
  SkimConfig config;
  config.keep_fields = {"fId", "fJets"};
  const CompiledSkim skim(tree, config);
  CHECK(skim.output_tree().n_fields() == 5);  // Event, fId, fJets, _0, fPt
  const auto out = skim.skim_entry(jets_event(7, {30}, {60}));
  REQUIRE(out.has_value());
  CHECK(out->as_record().members.size() == 2);
}

TEST_CASE("unresolvable config paths fail at compile time") {
  const FieldTree tree = demo_schema();
  SkimConfig config;
  config.rules = {{"fMuons", "fPt", 20.0, 1}};
  CHECK_THROWS_AS(CompiledSkim(tree, config), ConfigError);

  config.rules = {{"fJets", "fEta", 20.0, 1}};
  CHECK_THROWS_AS(CompiledSkim(tree, config), ConfigError);

  config.rules = {{"fId", "", 20.0, 1}};  // not a collection
  CHECK_THROWS_AS(CompiledSkim(tree, config), ConfigError);

  // A filter referencing a projected-away field is a config error.
  config.rules.clear();
  config.keep_fields = {"fId"};
  config.element_filters = {{"fJets", "fPt", 20.0}};
  CHECK_THROWS_AS(CompiledSkim(tree, config), ConfigError);
}

TEST_CASE("config json round-trips") {
  SkimConfig config;
  config.inputs = {{"a.mnt", "p0"}, {"b.mnt", "p1"}};
  config.keep_fields = {"fId", "fJets"};
  config.rules = {{"fJets", "fPt", 20.0, 4}};
  config.element_filters = {{"fJets", "fPt", 20.0}};
  config.threads = 3;
  config.strategy = Strategy::kSeparateThenMerge;
  config.out_dir = "out";
  config.writer.codec = CodecId::kLz4;

  const SkimConfig back = SkimConfig::from_json_text(config.to_json());
  CHECK(back.inputs.size() == 2);
  CHECK(back.inputs[1].partition == "p1");
  CHECK(back.keep_fields == config.keep_fields);
  CHECK(back.rules.size() == 1);
  CHECK(back.rules[0].min_count == 4);
  CHECK(back.element_filters.size() == 1);
  CHECK(back.threads == 3);
  CHECK(back.strategy == Strategy::kSeparateThenMerge);
  CHECK(back.writer.codec == CodecId::kLz4);

  CHECK_THROWS_AS(SkimConfig::from_json_text("{nope"), ConfigError);
}

TEST_CASE("merging concatenates entries and re-clusters") {
  test::TempDir dir("merge");
  const FieldTree tree = demo_schema();
  WriterOptions opts;
  opts.codec = CodecId::kNone;

  std::vector<Value> first, second;
  for (int i = 0; i < 3; ++i) first.push_back(jets_event(i, {1.f * i}, {}));
  for (int i = 0; i < 5; ++i) {
    second.push_back(jets_event(100 + i, {}, {2.f * i}));
  }
  {
    FileSink a(dir.file("a.mnt"));
    sequential_write(a, tree, opts, first);
    FileSink b(dir.file("b.mnt"));
    sequential_write(b, tree, opts, second);
  }

  merge_files({dir.file("a.mnt"), dir.file("b.mnt")}, dir.file("m.mnt"), opts);
  Reader merged = Reader::open_file(dir.file("m.mnt"));
  REQUIRE(merged.n_entries() == 8);
  const auto got = merged.read_all();
  for (size_t i = 0; i < 3; ++i) CHECK(got[i] == first[i]);
  for (size_t i = 0; i < 5; ++i) CHECK(got[3 + i] == second[i]);

  // Single-input merge is a logical copy.
  merge_files({dir.file("a.mnt")}, dir.file("copy.mnt"), opts);
  Reader copy = Reader::open_file(dir.file("copy.mnt"));
  CHECK(test::multiset_of(copy.read_all()) == test::multiset_of(first));

  // Mismatched schemas are rejected.
  const FieldTree other =
      FieldTree::build("x", TypeSpec::leaf(LeafType::kI32));
  {
    FileSink c(dir.file("c.mnt"));
    sequential_write(c, other, opts, std::vector<Value>{Value(int32_t{1})});
  }
  CHECK_THROWS_AS(
      merge_files({dir.file("a.mnt"), dir.file("c.mnt")}, dir.file("x.mnt"),
                  opts),
      SchemaError);
}

namespace {

/// Test-side oracle: plain in-memory filter/projection over all input
/// entries, written independently of the library's skim path.
std::map<std::string, std::vector<Value>> oracle_skim(
    const std::map<std::string, std::vector<Value>>& inputs_by_partition,
    double jet_cut, uint64_t min_jets, double elem_min, bool keep_leps) {
  std::map<std::string, std::vector<Value>> out;
  for (const auto& [partition, entries] : inputs_by_partition) {
    for (const Value& e : entries) {
      const auto& members = e.as_record().members;
      uint64_t passing = 0;
      for (const Value& jet : members[1].as_list().items) {
        if (jet.as_record().members[0].as<float>() > jet_cut) ++passing;
      }
      if (passing < min_jets) continue;
      std::vector<Value> jets;
      for (const Value& jet : members[1].as_list().items) {
        if (jet.as_record().members[0].as<float>() >= elem_min) {
          jets.push_back(jet);
        }
      }
      std::vector<Value> projected{members[0], Value::list(std::move(jets))};
      if (keep_leps) projected.push_back(members[2]);
      out[partition].push_back(Value::record(std::move(projected)));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("all strategies match the in-memory oracle") {
  test::TempDir dir("skim_oracle");
  const FieldTree tree = demo_schema();
  WriterOptions in_opts;
  in_opts.codec = CodecId::kZstd;

  // Three partitions, two files each, with deterministic contents.
  std::mt19937_64 rng(314159);
  std::map<std::string, std::vector<Value>> by_partition;
  SkimConfig config;
  int64_t id = 0;
  for (int p = 0; p < 3; ++p) {
    const std::string partition = "p" + std::to_string(p);
    for (int f = 0; f < 2; ++f) {
      std::vector<Value> entries;
      const int n = 40 + static_cast<int>(rng() % 40);
      for (int i = 0; i < n; ++i) {
        std::vector<float> jets(rng() % 8), leps(rng() % 3);
        for (auto& pt : jets) pt = static_cast<float>(rng() % 6000) / 100.0f;
        for (auto& pt : leps) pt = static_cast<float>(rng() % 6000) / 100.0f;
        entries.push_back(jets_event(id++, jets, leps));
      }
      const std::string path = dir.file(partition + "_" + std::to_string(f));
      FileSink sink(path);
      sequential_write(sink, tree, in_opts, entries);
      config.inputs.push_back({path, partition});
      auto& all = by_partition[partition];
      all.insert(all.end(), entries.begin(), entries.end());
    }
  }

  config.keep_fields = {"fId", "fJets"};
  config.rules = {{"fJets", "fPt", 30.0, 2}};
  config.element_filters = {{"fJets", "fPt", 10.0}};
  config.threads = 3;
  config.writer.codec = CodecId::kNone;

  const auto expected = oracle_skim(by_partition, 30.0, 2, 10.0, false);

  for (Strategy strategy :
       {Strategy::kParallelWriter, Strategy::kSeparateThenMerge,
        Strategy::kImtOnly}) {
    config.strategy = strategy;
    config.out_dir = dir.file(std::string("out_") + to_string(strategy));
    const SkimReport report = run_skim(config);
    REQUIRE(report.partitions.size() == 3);
    for (const PartitionReport& pr : report.partitions) {
      Reader reader = Reader::open_file(pr.output_path);
      const auto got = reader.read_all();
      const auto& want = expected.at(pr.partition);
      CHECK(test::multiset_of(got) == test::multiset_of(want));
      CHECK(pr.entries_out == want.size());
      CHECK(pr.entries_in == by_partition.at(pr.partition).size());
      CHECK(pr.bytes_out <= pr.bytes_in);
    }
    if (strategy == Strategy::kSeparateThenMerge) {
      CHECK(report.merge_seconds > 0);
      CHECK(report.temp_file_bytes > 0);
      // The merge transiently needs the temporaries plus the final files.
      CHECK(report.temp_file_bytes + report.output_file_bytes >=
            2 * report.output_file_bytes);
    }
  }
}

TEST_CASE("identity skims preserve the union of inputs") {
  test::TempDir dir("skim_id");
  const FieldTree tree = demo_schema();
  WriterOptions opts;
  opts.codec = CodecId::kNone;

  std::vector<Value> all;
  SkimConfig config;
  for (int f = 0; f < 3; ++f) {
    std::vector<Value> entries;
    for (int i = 0; i < 25; ++i) {
      entries.push_back(
          jets_event(f * 100 + i, {1.f * i, 2.f * i}, {3.f * i}));
    }
    const std::string path = dir.file("in" + std::to_string(f));
    FileSink sink(path);
    sequential_write(sink, tree, opts, entries);
    config.inputs.push_back({path, "only"});
    all.insert(all.end(), entries.begin(), entries.end());
  }
  config.out_dir = dir.file("out");
  config.threads = 2;
  config.writer.codec = CodecId::kNone;
  const SkimReport report = run_skim(config);
  REQUIRE(report.partitions.size() == 1);
  Reader reader = Reader::open_file(report.partitions[0].output_path);
  CHECK(test::multiset_of(reader.read_all()) == test::multiset_of(all));
  CHECK(report.partitions[0].bytes_in == report.partitions[0].bytes_out);
}

TEST_CASE("demo inputs come with a runnable config") {
  test::TempDir dir("demo");
  WriterOptions opts;
  opts.codec = CodecId::kZstd;
  SkimConfig config =
      write_demo_inputs(dir.file("in"), 3, 2, 200, 42, opts);
  CHECK(config.inputs.size() == 6);
  config.out_dir = dir.file("out");
  config.threads = 2;
  const SkimReport report = run_skim(config);
  REQUIRE(report.partitions.size() == 3);
  uint64_t in = 0, out = 0;
  for (const auto& pr : report.partitions) {
    in += pr.entries_in;
    out += pr.entries_out;
    Reader reader = Reader::open_file(pr.output_path);
    CHECK(reader.n_entries() == pr.entries_out);
  }
  CHECK(in == 3 * 2 * 200);
  CHECK(out > 0);     // the demo cuts pass a healthy fraction
  CHECK(out < in);    // but not everything
}
