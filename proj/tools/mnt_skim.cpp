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

// Skims many input files into one output file per partition, applying
// entry cuts, field projection, and collection-element filters. The `gen`
// subcommand produces synthetic inputs plus a matching config for demos
// and experiments.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mntuple/skim.hpp"

using namespace mntuple;
using namespace mntuple::skim;

int main(int argc, char** argv) {
  CLI::App app{"mntuple dataset skimming"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string strategy_name;
  std::string out_dir;
  std::string report_path;
  unsigned threads = 0;

  app.add_option("--config", config_path, "Skim config (json)");
  app.add_option("--threads", threads, "Worker thread count");
  app.add_option("--strategy", strategy_name,
                 "parallel | separate-merge | imt");
  app.add_option("--out-dir", out_dir, "Output directory");
  app.add_option("--report", report_path, "Write the run report json here");

  CLI::App* gen = app.add_subcommand(
      "gen", "Generate synthetic inputs and a matching config");
  std::string gen_dir = "skim-demo";
  unsigned gen_partitions = 9;
  unsigned gen_files = 4;
  uint64_t gen_entries = 20000;
  uint64_t gen_seed = 1;
  std::string gen_codec = "zstd";
  gen->add_option("--dir", gen_dir, "Directory for inputs and config")
      ->default_val("skim-demo");
  gen->add_option("--partitions", gen_partitions)->default_val(9);
  gen->add_option("--files-per-partition", gen_files)->default_val(4);
  gen->add_option("--entries-per-file", gen_entries)->default_val(20000);
  gen->add_option("--seed", gen_seed)->default_val(1);
  gen->add_option("--codec", gen_codec)->default_val("zstd");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      WriterOptions opts;
      if (auto codec = codec_from_name(gen_codec)) {
        opts.codec = *codec;
      } else {
        std::cerr << "unknown codec '" << gen_codec << "'\n";
        return 1;
      }
      SkimConfig config = write_demo_inputs(gen_dir, gen_partitions, gen_files,
                                            gen_entries, gen_seed, opts);
      config.out_dir = gen_dir + "/out";
      config.threads = threads == 0 ? 4 : threads;
      const std::string path = gen_dir + "/skim.json";
      std::ofstream out(path);
      out << config.to_json() << "\n";
      std::printf("wrote %zu input files and %s\n", config.inputs.size(),
                  path.c_str());
      return 0;
    }

    if (config_path.empty()) {
      std::cerr << "--config is required (or use the gen subcommand)\n";
      return 1;
    }
    SkimConfig config = SkimConfig::load(config_path);
    if (threads != 0) config.threads = threads;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (!strategy_name.empty()) {
      if (auto s = strategy_from_name(strategy_name)) {
        config.strategy = *s;
      } else {
        std::cerr << "unknown strategy '" << strategy_name << "'\n";
        return 1;
      }
    }

    const SkimReport report = run_skim(config);
    for (const PartitionReport& p : report.partitions) {
      std::printf("%-16s %6llu files  %9llu -> %8llu entries  "
                  "%10.1f -> %8.1f MB  %s\n",
                  p.partition.c_str(),
                  static_cast<unsigned long long>(p.input_files),
                  static_cast<unsigned long long>(p.entries_in),
                  static_cast<unsigned long long>(p.entries_out),
                  p.bytes_in / 1e6, p.bytes_out / 1e6,
                  p.output_path.c_str());
    }
    std::printf("skim: %.3f s", report.skim_seconds);
    if (config.strategy == Strategy::kSeparateThenMerge) {
      std::printf(", merge: %.3f s (temporaries held %.1f MB)",
                  report.merge_seconds, report.temp_file_bytes / 1e6);
    }
    std::printf("\n");

    if (!report_path.empty()) {
      std::ofstream out(report_path);
      out << report.to_json() << "\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
