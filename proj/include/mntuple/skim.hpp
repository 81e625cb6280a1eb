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
#include <optional>
#include <string>
#include <vector>

#include "mntuple/schema.hpp"
#include "mntuple/value.hpp"
#include "mntuple/writer.hpp"

namespace mntuple::skim {

/// Entry-level cut: keep the entry when `collection` has at least
/// `min_count` elements whose `leaf` value is strictly greater than
/// `threshold`. `leaf` is resolved relative to the collection's element;
/// empty means the element itself.
struct CountAtLeastRule {
  std::string collection;
  std::string leaf;
  double threshold = 0;
  uint64_t min_count = 1;
};

/// Element-level cut applied after projection: drop elements of
/// `collection` whose `leaf` value is below `min_value`.
struct ElementFilter {
  std::string collection;
  std::string leaf;
  double min_value = 0;
};

enum class Strategy {
  kParallelWriter,     // one shared parallel writer per partition
  kSeparateThenMerge,  // one output per input file, then merge
  kImtOnly,            // sequential writers, page compression on a pool
};

const char* to_string(Strategy s);
std::optional<Strategy> strategy_from_name(std::string_view name);

struct SkimInput {
  std::string path;
  std::string partition;
};

struct SkimConfig {
  std::vector<SkimInput> inputs;
  std::vector<std::string> keep_fields;  // empty keeps all fields
  std::vector<CountAtLeastRule> rules;
  std::vector<ElementFilter> element_filters;
  unsigned threads = 1;
  Strategy strategy = Strategy::kParallelWriter;
  std::string out_dir;
  WriterOptions writer;

  std::string to_json() const;
  static SkimConfig from_json_text(const std::string& text);
  static SkimConfig load(const std::string& path);
};

/// The per-schema compiled form of a config: resolved field ids against one
/// input schema plus the projected output schema. Construction fails on
/// unresolvable or ill-typed paths.
class CompiledSkim {
 public:
  CompiledSkim(const FieldTree& input_tree, const SkimConfig& config);

  const FieldTree& input_tree() const { return input_; }
  const FieldTree& output_tree() const { return output_; }

  /// Applies entry cuts, projection, and element filters.
  /// Returns nothing when the entry is rejected.
  std::optional<Value> skim_entry(const Value& entry) const;

 private:
  struct ResolvedRule {
    std::vector<uint32_t> collection_steps;  // record-member indexes
    std::vector<uint32_t> leaf_steps;        // within the element
    double threshold;
    uint64_t min_count;
  };
  struct ResolvedFilter {
    std::vector<uint32_t> collection_steps;  // in the projected tree
    std::vector<uint32_t> leaf_steps;
    double min_value;
  };

  FieldTree input_;
  FieldTree output_;
  Projection projection_;
  std::vector<bool> keep_member_;  // per input field id: kept by projection
  std::vector<ResolvedRule> rules_;
  std::vector<ResolvedFilter> filters_;

  Value project_value(const Value& v, uint32_t src_field) const;
};

struct PartitionReport {
  std::string partition;
  std::string output_path;
  uint64_t input_files = 0;
  uint64_t entries_in = 0;
  uint64_t entries_out = 0;
  uint64_t bytes_in = 0;   // uncompressed page payloads of the inputs
  uint64_t bytes_out = 0;  // uncompressed page payloads written
};

struct SkimReport {
  std::vector<PartitionReport> partitions;
  double skim_seconds = 0;
  double merge_seconds = 0;      // separate-then-merge only
  uint64_t temp_file_bytes = 0;  // on-disk bytes of intermediate files
  uint64_t output_file_bytes = 0;

  std::string to_json() const;
};

/// Runs the configured skim with the configured strategy and thread count.
SkimReport run_skim(const SkimConfig& config);

/// Concatenates same-schema files into one, re-clustered sequentially.
void merge_files(const std::vector<std::string>& inputs,
                 const std::string& output, const WriterOptions& options,
                 TaskPool* compression_pool = nullptr);

/// Synthetic AGC-shaped inputs: id plus two collections ("fJets", "fLeps")
/// of single-f32-leaf records. Writes `files_per_partition` files for each
/// of `partitions` partitions under `dir` and returns a ready-to-run config
/// whose cuts mirror the bundled example (>=1 lepton-like and >=4 jet-like
/// elements above a 20.0 threshold, elements below 20.0 dropped).
SkimConfig write_demo_inputs(const std::string& dir, unsigned partitions,
                             unsigned files_per_partition,
                             uint64_t entries_per_file, uint64_t seed,
                             const WriterOptions& options);

FieldTree demo_schema();

}  // namespace mntuple::skim
