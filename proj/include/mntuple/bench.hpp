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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mntuple/parallel_writer.hpp"
#include "mntuple/schema.hpp"
#include "mntuple/value.hpp"
#include "mntuple/writer.hpp"

namespace mntuple::bench {

/// Synthetic workload schema: an event id plus a variable-length collection
/// of f32 values.
FieldTree workload_schema();

/// Deterministic per-thread entry generator. Ids are sequential within a
/// thread; collection lengths are Poisson(5); values are uniform in
/// [0, 100).
class EventGenerator {
 public:
  EventGenerator(uint64_t seed, unsigned thread_index,
                 uint64_t entries_per_thread);

  /// Overwrites `out` with the next entry (reuses allocations).
  void next(Value& out);

  /// A fresh entry value of the right shape for next().
  static Value make_entry();

  uint64_t bytes_generated() const { return bytes_generated_; }

 private:
  std::mt19937_64 rng_;
  std::poisson_distribution<int> length_;
  std::uniform_real_distribution<float> value_;
  int64_t next_id_;
  uint64_t bytes_generated_ = 0;
};

enum class BenchMode {
  kBuffered,
  kUnbuffered,
  kSeparateFiles,  // one sequential writer per thread, no sharing
};

const char* to_string(BenchMode mode);

struct BenchConfig {
  unsigned threads = 1;
  uint64_t entries_per_thread = 1'000'000;
  std::string sink = "null";  // "null" or a file path
  BenchMode mode = BenchMode::kBuffered;
  CodecId codec = CodecId::kZstd;
  int codec_level = kDefaultCodecLevel;
  uint32_t page_bytes = 64 * 1024;
  uint64_t cluster_bytes = 50ull * 1024 * 1024;
  bool preallocate = false;
  bool decoupled_write = false;
  unsigned repetitions = 5;
  /// Uncounted runs before the measured repetitions.
  unsigned warmup = 0;
  uint64_t seed = 1;
  /// Re-read written files entirely after each repetition.
  bool verify = false;

  WriterOptions writer_options() const;
};

struct Repetition {
  double seconds = 0;
  uint64_t physical_bytes = 0;  // everything that reached the sink
  uint64_t logical_bytes = 0;   // uncompressed page payloads
  uint64_t entries = 0;
  uint64_t clusters = 0;
  uint64_t lock_acquisitions = 0;
};

struct BenchResult {
  BenchConfig config;
  std::vector<Repetition> reps;
  double physical_bandwidth = 0;  // bytes/s, harmonic mean over repetitions
  double logical_bandwidth = 0;   // bytes/s, harmonic mean
  double ci95_halfwidth_fraction = 0;  // of the mean physical bandwidth
  bool ci_ok = false;                  // halfwidth <= 5% of mean

  std::string to_json() const;
  std::string csv_row() const;
  static std::string csv_header();
};

/// Weak-scaling run: every thread writes entries_per_thread entries through
/// its own fill context (or its own writer in separate-files mode), timed
/// from first fill to close, repeated config.repetitions times.
BenchResult run_benchmark(const BenchConfig& config);

/// Physical core count (unique core ids), falling back to the logical
/// count when the topology is unreadable.
unsigned physical_cores();

/// 95% two-sided Student t quantile for n samples (n >= 2).
double t_quantile_95(unsigned n);

}  // namespace mntuple::bench
