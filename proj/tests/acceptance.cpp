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

// End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
// exit code is the number of failures. Pass check numbers as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mntuple/bench.hpp"
#include "mntuple/parallel_writer.hpp"
#include "mntuple/reader.hpp"
#include "mntuple/skim.hpp"
#include "mntuple/writer.hpp"
#include "test_support.hpp"

using namespace mntuple;
using mntuple::test::TempDir;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
  void fail(const std::string& s) {
    ok = false;
    note(s);
  }
  void require(bool cond, const std::string& s) {
    if (!cond) fail(s);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. ROUND-TRIP: randomized schema/options/mode/thread-count cases must read
//    back as the exact input multiset; sequential mode preserves order.

Outcome check_round_trip() {
  Outcome out;
  std::mt19937_64 rng(0xACCE5501);
  const unsigned max_threads = 2 * bench::physical_cores();
  int files_checked = 0;

  for (int round = 0; round < 200 && out.ok; ++round) {
    const FieldTree tree = test::random_tree(rng);
    const auto entries = test::random_entries(tree, rng, 1 + rng() % 400);

    WriterOptions opts;
    constexpr uint32_t kPageChoices[] = {256, 1024, 4096, 65536};
    opts.target_page_bytes = kPageChoices[rng() % 4];
    opts.target_cluster_bytes = 4096 << (rng() % 9);
    if (opts.target_cluster_bytes < opts.target_page_bytes) {
      opts.target_cluster_bytes = opts.target_page_bytes;
    }
    if (rng() % 2) opts.max_entries_per_cluster = 1 + rng() % 60;
    opts.codec = static_cast<CodecId>(rng() % 4);
    opts.preallocate = rng() % 2;
    opts.decoupled_write = rng() % 2;

    const int mode = static_cast<int>(rng() % 3);
    const unsigned threads = 1 + rng() % max_threads;

    std::vector<uint8_t> file_bytes;
    const bool to_disk = round % 10 == 0;
    TempDir dir("c1");
    const std::string path = dir.file("f.mnt");

    const auto write_with = [&](Sink& sink) {
      if (mode == 0) {
        sequential_write(sink, tree, opts, entries);
        return;
      }
      opts.mode =
          mode == 1 ? CommitMode::kBuffered : CommitMode::kUnbuffered;
      ParallelWriter writer(sink, tree, opts);
      std::vector<std::thread> workers;
      for (unsigned t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          auto ctx = writer.create_context();
          for (size_t i = t; i < entries.size(); i += threads) {
            ctx->fill(entries[i]);
          }
          ctx->commit_cluster();
        });
      }
      for (auto& w : workers) w.join();
      writer.close();
    };

    if (to_disk) {
      FileSink sink(path);
      write_with(sink);
      ++files_checked;
    } else {
      MemorySink sink;
      write_with(sink);
      file_bytes = sink.take_bytes();
    }

    Reader reader =
        to_disk ? Reader::open_file(path)
                : Reader(std::make_unique<MemorySource>(file_bytes));
    const auto got = reader.read_all();
    if (test::multiset_of(got) != test::multiset_of(entries)) {
      out.fail("multiset mismatch in round " + std::to_string(round) +
               " (mode " + std::to_string(mode) + ", threads " +
               std::to_string(threads) + ")");
      break;
    }
    if (mode == 0) {
      for (size_t i = 0; i < entries.size(); ++i) {
        if (!(got[i] == entries[i])) {
          out.fail("sequential order broken in round " +
                   std::to_string(round));
          break;
        }
      }
    }
  }
  out.note("200 randomized cases, thread counts up to " +
           std::to_string(max_threads) + ", " + std::to_string(files_checked) +
           " on disk");
  return out;
}

// ---------------------------------------------------------------------------
// 2. TABLE-1 FIXTURE: the nested-example schema yields exactly the expected
//    five column streams and reads back identically.

FieldTree fixture_tree() {
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

std::vector<Value> fixture_entries() {
  const auto track = [](float energy, std::vector<int32_t> ids) {
    std::vector<Value> id_values;
    for (int32_t id : ids) id_values.emplace_back(id);
    return Value::record({Value(energy), Value::list(std::move(id_values))});
  };
  std::vector<Value> entries;
  entries.push_back(Value::record(
      {Value(int64_t{6873}),
       Value::list({track(25.4f, {42, 27}), track(32.8f, {16})})}));
  entries.push_back(Value::record(
      {Value(int64_t{6874}), Value::list({track(14.7f, {21, 8})})}));
  return entries;
}

Outcome check_fixture() {
  Outcome out;
  const FieldTree tree = fixture_tree();
  const auto entries = fixture_entries();

  WriterOptions opts;
  opts.codec = CodecId::kNone;
  FillContext ctx(tree, opts);
  for (const Value& e : entries) ctx.fill(e);
  SealedCluster cluster = ctx.seal_cluster();

  const auto stream = [&](uint32_t col) {
    std::vector<uint8_t> bytes;
    for (const SealedPage& p : cluster.pages[col]) {
      bytes.insert(bytes.end(), p.bytes.begin(), p.bytes.end());
    }
    return bytes;
  };
  out.require(decode_elements<int64_t>(stream(0)) ==
                  std::vector<int64_t>{6873, 6874},
              "id column");
  out.require(decode_elements<uint64_t>(stream(1)) ==
                  std::vector<uint64_t>{2, 3},
              "outer offset column");
  out.require(decode_elements<float>(stream(2)) ==
                  std::vector<float>{25.4f, 32.8f, 14.7f},
              "energy column");
  out.require(decode_elements<uint64_t>(stream(3)) ==
                  std::vector<uint64_t>{2, 3, 5},
              "inner offset column");
  out.require(decode_elements<int32_t>(stream(4)) ==
                  std::vector<int32_t>{42, 27, 16, 21, 8},
              "inner value column");

  MemorySink sink;
  sequential_write(sink, tree, opts, entries);
  Reader reader(std::make_unique<MemorySource>(sink.take_bytes()));
  out.require(reader.n_entries() == 2, "entry count");
  out.require(reader.read_entry(0) == entries[0], "entry 0 round-trip");
  out.require(reader.read_entry(1) == entries[1], "entry 1 round-trip");
  out.note("5 column streams exact");
  return out;
}

// ---------------------------------------------------------------------------
// 3. RELOCATABILITY: identical payload sealed as the 1st vs the 5th cluster
//    of a file has byte-identical page payloads.

Outcome check_relocatability() {
  Outcome out;
  const FieldTree tree = fixture_tree();
  std::mt19937_64 rng(303);
  const auto payload = test::random_entries(tree, rng, 256);

  WriterOptions opts;  // default zstd
  const auto seal_in = [&](ParallelWriter& writer) {
    auto ctx = writer.create_context();
    for (const Value& e : payload) ctx->fill(e);
    return ctx->seal_cluster();
  };

  MemorySink sink_a;
  ParallelWriter writer_a(sink_a, tree, opts);
  const SealedCluster as_first = seal_in(writer_a);
  writer_a.commit_cluster(as_first);
  writer_a.close();

  MemorySink sink_b;
  ParallelWriter writer_b(sink_b, tree, opts);
  for (int k = 0; k < 4; ++k) {
    auto ctx = writer_b.create_context();
    for (const Value& e : test::random_entries(tree, rng, 64)) ctx->fill(e);
    ctx->commit_cluster();
  }
  const SealedCluster as_fifth = seal_in(writer_b);

  size_t pages = 0;
  for (size_t c = 0; c < as_first.pages.size() && out.ok; ++c) {
    if (as_first.pages[c].size() != as_fifth.pages[c].size()) {
      out.fail("page count differs in column " + std::to_string(c));
      break;
    }
    for (size_t p = 0; p < as_first.pages[c].size(); ++p) {
      ++pages;
      if (as_first.pages[c][p].bytes != as_fifth.pages[c][p].bytes) {
        out.fail("payload bytes differ in column " + std::to_string(c) +
                 " page " + std::to_string(p));
        break;
      }
    }
  }
  out.note(std::to_string(pages) + " pages byte-identical at both positions");
  return out;
}

// ---------------------------------------------------------------------------
// 4. SYNCHRONIZATION BUDGET: with 4 KiB pages and 8 MiB clusters the
//    unbuffered mode acquires the exclusion region at least 50x as often.

Outcome check_lock_budget() {
  Outcome out;
  bench::BenchConfig config;
  config.threads = 2;
  config.entries_per_thread = 300000;
  config.sink = "null";
  config.page_bytes = 4 * 1024;
  config.cluster_bytes = 8 * 1024 * 1024;
  config.repetitions = 1;

  config.mode = bench::BenchMode::kBuffered;
  const uint64_t buffered =
      bench::run_benchmark(config).reps[0].lock_acquisitions;
  config.mode = bench::BenchMode::kUnbuffered;
  const uint64_t unbuffered =
      bench::run_benchmark(config).reps[0].lock_acquisitions;

  out.require(buffered > 0, "buffered count present");
  out.require(unbuffered >= 50 * buffered,
              "expected >=50x, got " + std::to_string(unbuffered) + " vs " +
                  std::to_string(buffered));
  out.note("locks: buffered " + std::to_string(buffered) + ", unbuffered " +
           std::to_string(unbuffered) + " (" +
           fmt(static_cast<double>(unbuffered) /
               static_cast<double>(buffered)) +
           "x)");
  return out;
}

// ---------------------------------------------------------------------------
// 5. SCALING: weak scaling on the null sink with zstd; bandwidth ratios vs
//    one thread must reach 0.85*T for T in {2,4} and 0.7*T at min(8,cores).

Outcome check_scaling() {
  Outcome out;
  const unsigned cores = bench::physical_cores();
  const unsigned t_cores = std::min(8u, cores);

  std::set<unsigned> thread_counts{1, 2, 4, t_cores};
  std::map<unsigned, double> bandwidth;
  for (unsigned threads : thread_counts) {
    bench::BenchConfig config;
    config.threads = threads;
    config.entries_per_thread = 1'000'000;
    config.sink = "null";
    config.mode = bench::BenchMode::kBuffered;
    config.codec = CodecId::kZstd;
    config.repetitions = 5;
    config.warmup = 1;
    const bench::BenchResult result = bench::run_benchmark(config);
    bandwidth[threads] = result.physical_bandwidth;
    if (!result.ci_ok) {
      out.note("CI over 5% at T=" + std::to_string(threads) + " (" +
               fmt(100 * result.ci95_halfwidth_fraction) + "%)");
    }
  }

  const double base = bandwidth[1];
  const auto speedup = [&](unsigned t) { return bandwidth[t] / base; };
  std::ostringstream seen;
  for (unsigned t : thread_counts) {
    seen << "T" << t << "=" << fmt(speedup(t)) << "x ";
  }
  out.note(seen.str() + "(physical cores: " + std::to_string(cores) + ")");

  out.require(speedup(2) >= 0.85 * 2,
              "T=2 speedup " + fmt(speedup(2)) + " < 1.7");
  out.require(speedup(4) >= 0.85 * 4,
              "T=4 speedup " + fmt(speedup(4)) + " < 3.4");
  out.require(speedup(t_cores) >= 0.7 * t_cores,
              "T=" + std::to_string(t_cores) + " speedup " +
                  fmt(speedup(t_cores)) + " < " + fmt(0.7 * t_cores));
  return out;
}

// ---------------------------------------------------------------------------
// 6. UNBUFFERED DEGRADATION: at T = physical cores with 4 KiB pages the
//    buffered mode must not be slower than the unbuffered mode.

Outcome check_unbuffered_degradation() {
  Outcome out;
  TempDir dir("c6");
  bench::BenchConfig config;
  config.threads = bench::physical_cores();
  config.entries_per_thread = 300000;
  config.sink = dir.file("c6.mnt");
  config.page_bytes = 4 * 1024;
  config.cluster_bytes = 8 * 1024 * 1024;
  config.codec = CodecId::kZstd;
  config.repetitions = 3;

  config.mode = bench::BenchMode::kBuffered;
  const double buffered = bench::run_benchmark(config).physical_bandwidth;
  config.mode = bench::BenchMode::kUnbuffered;
  const double unbuffered = bench::run_benchmark(config).physical_bandwidth;

  out.require(buffered >= unbuffered,
              "buffered " + fmt(buffered / 1e6) + " MB/s < unbuffered " +
                  fmt(unbuffered / 1e6) + " MB/s");
  out.note("buffered " + fmt(buffered / 1e6) + " MB/s vs unbuffered " +
           fmt(unbuffered / 1e6) + " MB/s at T=" +
           std::to_string(config.threads));
  return out;
}

// ---------------------------------------------------------------------------
// 7. VOLUME ARITHMETIC: the synthetic workload averages 36 uncompressed
//    bytes per entry (8 id + 8 offset + 4 per Poisson(5) element).

Outcome check_volume() {
  Outcome out;
  bench::BenchConfig config;
  config.threads = 1;
  config.entries_per_thread = 1'000'000;
  config.sink = "null";
  config.codec = CodecId::kNone;
  config.repetitions = 1;
  const bench::BenchResult result = bench::run_benchmark(config);
  const bench::Repetition& rep = result.reps[0];
  const double per_entry =
      static_cast<double>(rep.logical_bytes) / rep.entries;
  out.require(per_entry >= 35.0 && per_entry <= 37.0,
              "bytes/entry " + fmt(per_entry) + " outside [35, 37]");

  bench::EventGenerator gen(config.seed, 0, config.entries_per_thread);
  Value entry = bench::EventGenerator::make_entry();
  for (uint64_t i = 0; i < config.entries_per_thread; ++i) gen.next(entry);
  out.require(gen.bytes_generated() == rep.logical_bytes,
              "generator accounting disagrees with writer accounting");
  out.note("mean " + fmt(per_entry) + " bytes/entry over 1e6 entries");
  return out;
}

// ---------------------------------------------------------------------------
// 8. COMPRESSION RATIO: default-zstd compressed/uncompressed ratio of the
//    synthetic workload sits in [0.35, 0.60].

Outcome check_ratio() {
  Outcome out;
  const FieldTree tree = bench::workload_schema();
  NullSink sink;
  WriterOptions opts;  // zstd default
  ParallelWriter writer(sink, tree, opts);
  auto ctx = writer.create_context();
  bench::EventGenerator gen(1, 0, 1'000'000);
  Value entry = bench::EventGenerator::make_entry();
  for (int i = 0; i < 1'000'000; ++i) {
    gen.next(entry);
    ctx->fill(entry);
  }
  ctx->commit_cluster();
  const WriteStats stats = writer.close();
  const double ratio = static_cast<double>(stats.bytes_on_disk) /
                       static_cast<double>(stats.bytes_uncompressed);
  out.require(ratio >= 0.35 && ratio <= 0.60,
              "ratio " + fmt(ratio) + " outside [0.35, 0.60]");
  out.note("zstd ratio " + fmt(ratio) + " over " +
           std::to_string(stats.bytes_uncompressed) + " bytes");
  return out;
}

// ---------------------------------------------------------------------------
// 9. SKIM ORACLE: randomized configs, all strategies, per-partition output
//    multisets equal a plain in-memory filter/projection oracle.

struct OracleConfig {
  bool keep_id = true, keep_jets = true, keep_leps = true;
  std::vector<skim::CountAtLeastRule> rules;
  std::vector<skim::ElementFilter> filters;
};

std::vector<Value> oracle_partition(const std::vector<Value>& entries,
                                    const OracleConfig& cfg) {
  // Demo schema positions: members[0]=fId, [1]=fJets, [2]=fLeps; each
  // collection element is a record whose member[0] is fPt.
  const auto member_of = [](const std::string& name) {
    return name == "fJets" ? 1 : 2;
  };
  std::vector<Value> out;
  for (const Value& e : entries) {
    const auto& members = e.as_record().members;
    bool pass = true;
    for (const auto& rule : cfg.rules) {
      uint64_t count = 0;
      for (const Value& item :
           members[member_of(rule.collection)].as_list().items) {
        if (item.as_record().members[0].as<float>() > rule.threshold) {
          ++count;
        }
      }
      if (count < rule.min_count) {
        pass = false;
        break;
      }
    }
    if (!pass) continue;

    const auto filtered = [&](int idx, const std::string& name) {
      std::vector<Value> items = members[idx].as_list().items;
      for (const auto& f : cfg.filters) {
        if (f.collection != name) continue;
        std::erase_if(items, [&](const Value& item) {
          return item.as_record().members[0].as<float>() < f.min_value;
        });
      }
      return Value::list(std::move(items));
    };
    std::vector<Value> projected;
    if (cfg.keep_id) projected.push_back(members[0]);
    if (cfg.keep_jets) projected.push_back(filtered(1, "fJets"));
    if (cfg.keep_leps) projected.push_back(filtered(2, "fLeps"));
    out.push_back(Value::record(std::move(projected)));
  }
  return out;
}

Outcome check_skim_oracle() {
  Outcome out;
  std::mt19937_64 rng(0x5C19);
  const FieldTree tree = skim::demo_schema();
  int configs_run = 0;

  for (int round = 0; round < 50 && out.ok; ++round) {
    TempDir dir("c9");
    WriterOptions in_opts;
    in_opts.codec = static_cast<CodecId>(rng() % 4);

    const unsigned partitions = 1 + rng() % 3;
    const unsigned files = 1 + rng() % 3;
    std::map<std::string, std::vector<Value>> by_partition;
    skim::SkimConfig config;
    int64_t id = 0;
    for (unsigned p = 0; p < partitions; ++p) {
      const std::string name = "p" + std::to_string(p);
      for (unsigned f = 0; f < files; ++f) {
        std::vector<Value> entries;
        const int n = 100 + static_cast<int>(rng() % 400);
        for (int i = 0; i < n; ++i) {
          const auto coll = [&](int max_n) {
            std::vector<Value> items;
            const int k = static_cast<int>(rng() % (max_n + 1));
            for (int j = 0; j < k; ++j) {
              items.push_back(Value::record(
                  {Value(static_cast<float>(rng() % 6000) / 100.0f)}));
            }
            return Value::list(std::move(items));
          };
          entries.push_back(Value::record({Value(id++), coll(8), coll(3)}));
        }
        const std::string path = dir.file(name + "_" + std::to_string(f));
        FileSink sink(path);
        sequential_write(sink, tree, in_opts, entries);
        config.inputs.push_back({path, name});
        auto& all = by_partition[name];
        all.insert(all.end(), entries.begin(), entries.end());
      }
    }

    OracleConfig oracle;
    oracle.keep_jets = true;
    oracle.keep_id = rng() % 2;
    oracle.keep_leps = rng() % 2;
    config.keep_fields.clear();
    if (oracle.keep_id) config.keep_fields.push_back("fId");
    config.keep_fields.push_back("fJets");
    if (oracle.keep_leps) config.keep_fields.push_back("fLeps");
    if (oracle.keep_id && oracle.keep_leps && rng() % 4 == 0) {
      config.keep_fields.clear();  // keep-all spelling
    }

    const unsigned n_rules = rng() % 3;
    for (unsigned r = 0; r < n_rules; ++r) {
      skim::CountAtLeastRule rule;
      rule.collection = rng() % 2 ? "fJets" : "fLeps";
      rule.leaf = "fPt";
      rule.threshold = static_cast<double>(rng() % 50);
      rule.min_count = 1 + rng() % 3;
      config.rules.push_back(rule);
      oracle.rules.push_back(rule);
    }
    if (rng() % 2) {
      skim::ElementFilter filter;
      filter.collection = "fJets";
      filter.leaf = "fPt";
      filter.min_value = static_cast<double>(rng() % 40);
      config.element_filters.push_back(filter);
      oracle.filters.push_back(filter);
    }
    if (oracle.keep_leps && rng() % 2) {
      skim::ElementFilter filter;
      filter.collection = "fLeps";
      filter.leaf = "fPt";
      filter.min_value = static_cast<double>(rng() % 40);
      config.element_filters.push_back(filter);
      oracle.filters.push_back(filter);
    }

    config.threads = 1 + rng() % 4;
    config.writer.codec = static_cast<CodecId>(rng() % 4);

    for (skim::Strategy strategy :
         {skim::Strategy::kParallelWriter, skim::Strategy::kSeparateThenMerge,
          skim::Strategy::kImtOnly}) {
      config.strategy = strategy;
      config.out_dir =
          dir.file(std::string("out_") + skim::to_string(strategy));
      const skim::SkimReport report = skim::run_skim(config);
      ++configs_run;
      for (const auto& pr : report.partitions) {
        Reader reader = Reader::open_file(pr.output_path);
        const auto got = test::multiset_of(reader.read_all());
        const auto want = test::multiset_of(
            oracle_partition(by_partition.at(pr.partition), oracle));
        if (got != want) {
          out.fail("strategy " + std::string(skim::to_string(strategy)) +
                   " diverges from the oracle in round " +
                   std::to_string(round) + ", partition " + pr.partition);
          break;
        }
      }
      if (!out.ok) break;
    }
  }
  out.note(std::to_string(configs_run) + " strategy runs across 50 configs");
  return out;
}

// ---------------------------------------------------------------------------
// 10. STRATEGY ORDERING: on a 9-partition skim, the shared parallel writer
//     is at worst marginally slower than separate files before their merge,
//     and strictly faster than separate files plus merge.

Outcome check_strategy_ordering() {
  Outcome out;
  TempDir dir("c10");
  WriterOptions gen_opts;  // zstd
  skim::SkimConfig config = skim::write_demo_inputs(
      dir.file("in"), 9, 4, 30000, 7, gen_opts);  // 36 files
  config.threads = std::min(8u, bench::physical_cores());

  config.strategy = skim::Strategy::kParallelWriter;
  config.out_dir = dir.file("out_par");
  const skim::SkimReport parallel = skim::run_skim(config);

  config.strategy = skim::Strategy::kSeparateThenMerge;
  config.out_dir = dir.file("out_sep");
  const skim::SkimReport separate = skim::run_skim(config);

  out.note("parallel " + fmt(parallel.skim_seconds) + " s; separate skim " +
           fmt(separate.skim_seconds) + " s + merge " +
           fmt(separate.merge_seconds) + " s at T=" +
           std::to_string(config.threads));
  out.require(parallel.skim_seconds <= 1.05 * separate.skim_seconds,
              "parallel exceeds 1.05x the separate skim time");
  out.require(
      parallel.skim_seconds < separate.skim_seconds + separate.merge_seconds,
      "parallel is not faster than separate skim plus merge");

  // Consistency: identical per-partition outputs.
  for (size_t p = 0; p < parallel.partitions.size(); ++p) {
    if (parallel.partitions[p].entries_out !=
        separate.partitions[p].entries_out) {
      out.fail("strategies disagree on partition " +
               parallel.partitions[p].partition);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 11. DECOUPLED-WRITE EQUIVALENCE: writing with the page writes moved out
//     of the critical section yields a byte-identical file.

Outcome check_decoupled_equivalence() {
  Outcome out;
  const FieldTree tree = bench::workload_schema();
  std::vector<std::vector<uint8_t>> outputs;
  for (bool decoupled : {false, true}) {
    WriterOptions opts;  // zstd
    opts.target_cluster_bytes = 1024 * 1024;
    opts.decoupled_write = decoupled;
    MemorySink sink;
    ParallelWriter writer(sink, tree, opts);
    auto ctx = writer.create_context();
    bench::EventGenerator gen(99, 0, 200000);
    Value entry = bench::EventGenerator::make_entry();
    for (int i = 0; i < 200000; ++i) {
      gen.next(entry);
      ctx->fill(entry);
    }
    ctx->commit_cluster();
    writer.close();
    outputs.push_back(sink.take_bytes());
  }
  out.require(outputs[0] == outputs[1], "file bytes differ");
  out.note(std::to_string(outputs[0].size()) + " bytes identical");
  return out;
}

// ---------------------------------------------------------------------------
// 12. FORMAT ROBUSTNESS: distinct error classes for the three canonical
//     corruptions, and no crash on 10k fuzzed footers.

Outcome check_robustness() {
  Outcome out;
  const FieldTree tree = fixture_tree();
  WriterOptions opts;
  MemorySink sink;
  sequential_write(sink, tree, opts, fixture_entries());
  const std::vector<uint8_t> good = sink.take_bytes();

  const auto open_bytes = [](std::vector<uint8_t> bytes) {
    Reader reader(std::make_unique<MemorySource>(std::move(bytes)));
    return reader.n_entries();
  };

  {
    auto truncated = good;
    truncated.resize(truncated.size() - 7);
    try {
      open_bytes(truncated);
      out.fail("truncated trailer accepted");
    } catch (const IncompleteFileError&) {
    } catch (const Error& e) {
      out.fail(std::string("truncated trailer: wrong class: ") + e.what());
    }
  }
  {
    const FileTrailer trailer = read_trailer(MemorySource(good));
    auto flipped = good;
    flipped[trailer.footer_offset + 5] ^= 0x10;
    try {
      open_bytes(flipped);
      out.fail("flipped footer bit accepted");
    } catch (const ChecksumError&) {
    } catch (const Error& e) {
      out.fail(std::string("flipped bit: wrong class: ") + e.what());
    }
  }
  {
    // Re-seal the footer with an unknown page codec id and a fixed crc, so
    // the codec check is the one that fires.
    const FileTrailer trailer = read_trailer(MemorySource(good));
    auto bytes = good;
    std::vector<uint8_t> footer(
        bytes.begin() + static_cast<ptrdiff_t>(trailer.footer_offset),
        bytes.begin() +
            static_cast<ptrdiff_t>(trailer.footer_offset + trailer.footer_len));
    footer[4 + 16 + 20 + 20] = 77;
    const uint32_t crc = crc32c(std::span(footer.data(), footer.size() - 4));
    store_le32(footer.data() + footer.size() - 4, crc);
    std::copy(footer.begin(), footer.end(),
              bytes.begin() + static_cast<ptrdiff_t>(trailer.footer_offset));
    try {
      open_bytes(bytes);
      out.fail("unknown codec id accepted");
    } catch (const UnknownCodecError&) {
    } catch (const Error& e) {
      out.fail(std::string("unknown codec: wrong class: ") + e.what());
    }
  }

  // Fuzzed footers: random payloads and random trailer geometry must all be
  // rejected via the error hierarchy, never by crashing.
  std::mt19937_64 rng(0xF022);
  const FileTrailer trailer = read_trailer(MemorySource(good));
  int rejected = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<uint8_t> bytes(good.begin(),
                               good.begin() + static_cast<ptrdiff_t>(
                                                  trailer.footer_offset));
    const size_t len = 1 + rng() % 300;
    for (size_t k = 0; k < len; ++k) {
      bytes.push_back(static_cast<uint8_t>(rng()));
    }
    uint8_t tail[20];
    store_le64(tail, trailer.footer_offset);
    store_le64(tail + 8, rng() % 4 == 0 ? rng() % (len + 50) : len);
    std::memcpy(tail + 16, "MNTF", 4);
    bytes.insert(bytes.end(), tail, tail + 20);
    try {
      open_bytes(bytes);
      out.fail("fuzzed footer accepted at iteration " + std::to_string(i));
      break;
    } catch (const Error&) {
      ++rejected;
    }
  }
  out.note(std::to_string(rejected) + "/10000 fuzzed footers rejected");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  struct Check {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Check> checks = {
      {1, "round-trip", check_round_trip},
      {2, "nested-example fixture", check_fixture},
      {3, "relocatability", check_relocatability},
      {4, "synchronization budget", check_lock_budget},
      {5, "weak scaling", check_scaling},
      {6, "unbuffered degradation", check_unbuffered_degradation},
      {7, "volume arithmetic", check_volume},
      {8, "compression ratio", check_ratio},
      {9, "skim oracle", check_skim_oracle},
      {10, "strategy ordering", check_strategy_ordering},
      {11, "decoupled-write equivalence", check_decoupled_equivalence},
      {12, "format robustness", check_robustness},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Check& check : checks) {
    if (!selected.empty() && !selected.count(check.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check.run();
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] %2d %-28s (%.1fs)%s%s\n",
                outcome.ok ? "PASS" : "FAIL", check.id, check.name, secs,
                outcome.detail.empty() ? "" : "  ",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.ok) ++failures;
  }
  return failures;
}
