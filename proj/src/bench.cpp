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

#include "mntuple/bench.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mntuple/reader.hpp"

namespace mntuple::bench {

using nlohmann::json;

FieldTree workload_schema() {
  return FieldTree::build(
      "Event",
      TypeSpec::record({
          {"eventId", TypeSpec::leaf(LeafType::kI64)},
          {"particles", TypeSpec::collection(TypeSpec::leaf(LeafType::kF32))},
      }));
}

EventGenerator::EventGenerator(uint64_t seed, unsigned thread_index,
                               uint64_t entries_per_thread)
    : rng_(seed ^ thread_index),
      length_(5.0),
      value_(0.0f, 100.0f),
      next_id_(static_cast<int64_t>(thread_index) *
               static_cast<int64_t>(entries_per_thread)) {}

Value EventGenerator::make_entry() {
  return Value::record({Value(int64_t{0}), Value::list({})});
}

void EventGenerator::next(Value& out) {
  auto& members = out.as_record().members;
  members[0] = Value(next_id_++);
  auto& items = members[1].as_list().items;
  items.clear();
  const int n = length_(rng_);
  items.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    items.emplace_back(value_(rng_));
  }
  bytes_generated_ += 8 + 8 + 4 * static_cast<uint64_t>(n);
}

const char* to_string(BenchMode mode) {
  switch (mode) {
    case BenchMode::kBuffered:
      return "buffered";
    case BenchMode::kUnbuffered:
      return "unbuffered";
    case BenchMode::kSeparateFiles:
      return "separate-files";
  }
  return "?";
}

WriterOptions BenchConfig::writer_options() const {
  WriterOptions opts;
  opts.target_page_bytes = page_bytes;
  opts.target_cluster_bytes = cluster_bytes;
  opts.codec = codec;
  opts.codec_level = codec_level;
  opts.preallocate = preallocate;
  opts.decoupled_write = decoupled_write;
  opts.mode = mode == BenchMode::kUnbuffered ? CommitMode::kUnbuffered
                                             : CommitMode::kBuffered;
  return opts;
}

namespace {

std::unique_ptr<Sink> make_sink(const std::string& spec) {
  if (spec == "null" || spec == "/dev/null") {
    return std::make_unique<NullSink>();
  }
  return std::make_unique<FileSink>(spec);
}

struct RepOutcome {
  Repetition rep;
  std::vector<std::string> files;  // for post-run validation
};

RepOutcome run_once(const BenchConfig& config, const FieldTree& tree) {
  const WriterOptions opts = config.writer_options();
  RepOutcome outcome;
  const unsigned T = std::max(1u, config.threads);

  if (config.mode == BenchMode::kSeparateFiles) {
    // The baseline: fully independent sequential writers, one per thread.
    std::vector<std::unique_ptr<Sink>> sinks;
    std::vector<std::string> paths;
    for (unsigned t = 0; t < T; ++t) {
      if (config.sink == "null" || config.sink == "/dev/null") {
        sinks.push_back(std::make_unique<NullSink>());
      } else {
        paths.push_back(config.sink + ".t" + std::to_string(t));
        sinks.push_back(std::make_unique<FileSink>(paths.back()));
      }
    }
    outcome.files = paths;
    std::vector<WriteStats> stats(T);
    std::barrier ready(static_cast<std::ptrdiff_t>(T) + 1);
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < T; ++t) {
      workers.emplace_back([&, t] {
        EventGenerator gen(config.seed, t, config.entries_per_thread);
        Value entry = EventGenerator::make_entry();
        ready.arrive_and_wait();
        ParallelWriter writer(*sinks[t], tree, opts);
        auto ctx = writer.create_context();
        for (uint64_t i = 0; i < config.entries_per_thread; ++i) {
          gen.next(entry);
          ctx->fill(entry);
        }
        ctx->commit_cluster();
        stats[t] = writer.close();
      });
    }
    ready.arrive_and_wait();
    const auto t0 = std::chrono::steady_clock::now();
    for (auto& w : workers) w.join();
    const auto t1 = std::chrono::steady_clock::now();
    outcome.rep.seconds = std::chrono::duration<double>(t1 - t0).count();
    for (unsigned t = 0; t < T; ++t) {
      outcome.rep.physical_bytes += sinks[t]->bytes_written();
      outcome.rep.logical_bytes += stats[t].bytes_uncompressed;
      outcome.rep.entries += stats[t].entries;
      outcome.rep.clusters += stats[t].clusters;
      outcome.rep.lock_acquisitions += stats[t].lock_acquisitions;
    }
    return outcome;
  }

  std::unique_ptr<Sink> sink = make_sink(config.sink);
  if (config.sink != "null" && config.sink != "/dev/null") {
    outcome.files.push_back(config.sink);
  }
  ParallelWriter writer(*sink, tree, opts);
  std::barrier ready(static_cast<std::ptrdiff_t>(T) + 1);
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < T; ++t) {
    workers.emplace_back([&, t] {
      EventGenerator gen(config.seed, t, config.entries_per_thread);
      Value entry = EventGenerator::make_entry();
      auto ctx = writer.create_context();
      ready.arrive_and_wait();
      for (uint64_t i = 0; i < config.entries_per_thread; ++i) {
        gen.next(entry);
        ctx->fill(entry);
      }
      ctx->commit_cluster();
    });
  }
  ready.arrive_and_wait();
  const auto t0 = std::chrono::steady_clock::now();
  for (auto& w : workers) w.join();
  const WriteStats stats = writer.close();
  const auto t1 = std::chrono::steady_clock::now();

  outcome.rep.seconds = std::chrono::duration<double>(t1 - t0).count();
  outcome.rep.physical_bytes = sink->bytes_written();
  outcome.rep.logical_bytes = stats.bytes_uncompressed;
  outcome.rep.entries = stats.entries;
  outcome.rep.clusters = stats.clusters;
  outcome.rep.lock_acquisitions = stats.lock_acquisitions;
  return outcome;
}

double harmonic_mean(const std::vector<double>& xs) {
  double inv = 0;
  for (double x : xs) inv += 1.0 / x;
  return static_cast<double>(xs.size()) / inv;
}

}  // namespace

double t_quantile_95(unsigned n) {
  // Two-sided 95% Student t quantiles by degrees of freedom (n - 1).
  static constexpr double kTable[] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (n < 2) return 0;
  const unsigned df = n - 1;
  if (df <= 30) return kTable[df - 1];
  return 1.960;
}

BenchResult run_benchmark(const BenchConfig& config) {
  if (config.repetitions < 1) {
    throw ConfigError("repetitions must be at least 1");
  }
  if (config.entries_per_thread < 1) {
    throw ConfigError("entries_per_thread must be at least 1");
  }
  const FieldTree tree = workload_schema();
  BenchResult result;
  result.config = config;

  for (unsigned i = 0; i < config.warmup; ++i) {
    (void)run_once(config, tree);
  }
  for (unsigned rep = 0; rep < config.repetitions; ++rep) {
    RepOutcome outcome = run_once(config, tree);
    for (const std::string& path : outcome.files) {
      Reader reader = Reader::open_file(path);  // validates on open
      if (config.verify) {
        uint64_t n = 0;
        reader.for_each([&](uint64_t, const Value&) { ++n; });
        if (n != reader.n_entries()) {
          throw FormatError("verification scan lost entries");
        }
      }
    }
    result.reps.push_back(outcome.rep);
  }

  std::vector<double> physical, logical;
  for (const Repetition& r : result.reps) {
    physical.push_back(static_cast<double>(r.physical_bytes) / r.seconds);
    logical.push_back(static_cast<double>(r.logical_bytes) / r.seconds);
  }
  result.physical_bandwidth = harmonic_mean(physical);
  result.logical_bandwidth = harmonic_mean(logical);

  const unsigned n = static_cast<unsigned>(physical.size());
  if (n >= 2) {
    double mean = 0;
    for (double x : physical) mean += x;
    mean /= n;
    double var = 0;
    for (double x : physical) var += (x - mean) * (x - mean);
    var /= (n - 1);
    const double halfwidth = t_quantile_95(n) * std::sqrt(var / n);
    result.ci95_halfwidth_fraction = halfwidth / mean;
    result.ci_ok = result.ci95_halfwidth_fraction <= 0.05;
  } else {
    result.ci95_halfwidth_fraction = 0;
    result.ci_ok = true;
  }
  return result;
}

std::string BenchResult::to_json() const {
  json j;
  j["config"] = {
      {"threads", config.threads},
      {"entries_per_thread", config.entries_per_thread},
      {"sink", config.sink},
      {"mode", to_string(config.mode)},
      {"codec", codec_name(config.codec)},
      {"level", config.codec_level},
      {"page_bytes", config.page_bytes},
      {"cluster_bytes", config.cluster_bytes},
      {"preallocate", config.preallocate},
      {"decoupled_write", config.decoupled_write},
      {"repetitions", config.repetitions},
      {"seed", config.seed},
  };
  j["reps"] = json::array();
  for (const Repetition& r : reps) {
    j["reps"].push_back({
        {"mode", to_string(config.mode)},
        {"threads", config.threads},
        {"entries", r.entries},
        {"bytes_compressed", r.physical_bytes},
        {"bytes_uncompressed", r.logical_bytes},
        {"wall_seconds", r.seconds},
        {"lock_acquisitions", r.lock_acquisitions},
        {"clusters", r.clusters},
    });
  }
  j["physical_bandwidth_bytes_per_s"] = physical_bandwidth;
  j["logical_bandwidth_bytes_per_s"] = logical_bandwidth;
  j["ci95_halfwidth_fraction"] = ci95_halfwidth_fraction;
  j["ci_ok"] = ci_ok;
  return j.dump(2);
}

std::string BenchResult::csv_header() {
  return "mode,threads,entries_per_thread,codec,physical_bandwidth,"
         "logical_bandwidth,ci95_halfwidth_fraction,lock_acquisitions";
}

std::string BenchResult::csv_row() const {
  std::ostringstream os;
  os << to_string(config.mode) << ',' << config.threads << ','
     << config.entries_per_thread << ',' << codec_name(config.codec) << ','
     << physical_bandwidth << ',' << logical_bandwidth << ','
     << ci95_halfwidth_fraction << ','
     << (reps.empty() ? 0 : reps.back().lock_acquisitions);
  return os.str();
}

unsigned physical_cores() {
  std::ifstream in("/proc/cpuinfo");
  if (in) {
    std::set<std::pair<int, int>> cores;
    int physical_id = -1;
    std::string line;
    while (std::getline(in, line)) {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = line.substr(0, line.find('\t'));
      const int value = std::atoi(line.c_str() + colon + 1);
      if (key.rfind("physical id", 0) == 0) {
        physical_id = value;
      } else if (key.rfind("core id", 0) == 0) {
        cores.emplace(physical_id, value);
      }
    }
    if (!cores.empty()) return static_cast<unsigned>(cores.size());
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace mntuple::bench
