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

// Synthetic weak-scaling write benchmark: every thread generates and writes
// a fixed number of entries; modes cover the shared parallel writer
// (buffered or unbuffered) and fully independent per-thread writers.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mntuple/bench.hpp"

using namespace mntuple;
using namespace mntuple::bench;

int main(int argc, char** argv) {
  CLI::App app{"mntuple synthetic write benchmark"};

  BenchConfig config;
  std::string mode = "buffered";
  std::string codec = "zstd";
  std::string out_json;
  std::string out_csv;

  app.add_option("--threads", config.threads, "Writer thread count")
      ->default_val(1);
  app.add_option("--entries", config.entries_per_thread,
                 "Entries per thread (weak scaling)")
      ->default_val(1'000'000);
  app.add_option("--sink", config.sink, "'null' or an output file path")
      ->default_val("null");
  app.add_option("--mode", mode, "buffered | unbuffered | separate-files")
      ->default_val("buffered");
  app.add_option("--codec", codec, "none | zstd | lz4 | deflate")
      ->default_val("zstd");
  app.add_option("--level", config.codec_level,
                 "Codec level (0 = backend default)")
      ->default_val(0);
  app.add_option("--page-bytes", config.page_bytes,
                 "Uncompressed page size target")
      ->default_val(64 * 1024);
  app.add_option("--cluster-bytes", config.cluster_bytes,
                 "Uncompressed cluster size target")
      ->default_val(50ull * 1024 * 1024);
  app.add_flag("--preallocate", config.preallocate,
               "Preallocate cluster regions in the filesystem");
  app.add_flag("--decoupled-write", config.decoupled_write,
               "Write page bytes outside the commit critical section");
  app.add_option("--reps", config.repetitions, "Repetitions per point")
      ->default_val(5);
  app.add_option("--warmup", config.warmup, "Uncounted warmup runs")
      ->default_val(0);
  app.add_option("--seed", config.seed, "Generator seed")->default_val(1);
  app.add_flag("--verify", config.verify,
               "Fully re-read file outputs after every repetition");
  app.add_option("--out", out_json, "Write the result as JSON to this path");
  app.add_option("--csv", out_csv, "Append one CSV row to this path");

  CLI11_PARSE(app, argc, argv);

  if (auto m = codec_from_name(codec)) {
    config.codec = *m;
  } else {
    std::cerr << "unknown codec '" << codec << "'\n";
    return 1;
  }
  if (mode == "buffered") {
    config.mode = BenchMode::kBuffered;
  } else if (mode == "unbuffered") {
    config.mode = BenchMode::kUnbuffered;
  } else if (mode == "separate-files") {
    config.mode = BenchMode::kSeparateFiles;
  } else {
    std::cerr << "unknown mode '" << mode << "'\n";
    return 1;
  }

  try {
    const BenchResult result = run_benchmark(config);

    std::printf("mode=%s threads=%u entries/thread=%llu codec=%s\n",
                to_string(config.mode), config.threads,
                static_cast<unsigned long long>(config.entries_per_thread),
                codec_name(config.codec));
    for (size_t i = 0; i < result.reps.size(); ++i) {
      const Repetition& r = result.reps[i];
      std::printf(
          "  rep %zu: %.3f s, %.1f MB physical, %.1f MB logical, "
          "%llu locks\n",
          i, r.seconds, r.physical_bytes / 1e6, r.logical_bytes / 1e6,
          static_cast<unsigned long long>(r.lock_acquisitions));
    }
    std::printf("bandwidth: %.1f MB/s physical, %.1f MB/s logical "
                "(harmonic mean of %zu reps)\n",
                result.physical_bandwidth / 1e6,
                result.logical_bandwidth / 1e6, result.reps.size());
    std::printf("95%% CI halfwidth: %.2f%% of mean%s\n",
                100.0 * result.ci95_halfwidth_fraction,
                result.ci_ok ? "" : "  [exceeds the 5% budget]");

    if (!out_json.empty()) {
      std::ofstream out(out_json);
      out << result.to_json() << "\n";
    }
    if (!out_csv.empty()) {
      const bool fresh = !std::ifstream(out_csv).good();
      std::ofstream out(out_csv, std::ios::app);
      if (fresh) out << BenchResult::csv_header() << "\n";
      out << result.csv_row() << "\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
