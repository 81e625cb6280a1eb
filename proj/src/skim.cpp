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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <random>

#include <json.hpp>

#include "mntuple/parallel_writer.hpp"
#include "mntuple/reader.hpp"
#include "mntuple/task_pool.hpp"

namespace mntuple::skim {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kParallelWriter:
      return "parallel";
    case Strategy::kSeparateThenMerge:
      return "separate-merge";
    case Strategy::kImtOnly:
      return "imt";
  }
  return "?";
}

std::optional<Strategy> strategy_from_name(std::string_view name) {
  if (name == "parallel") return Strategy::kParallelWriter;
  if (name == "separate-merge") return Strategy::kSeparateThenMerge;
  if (name == "imt") return Strategy::kImtOnly;
  return std::nullopt;
}

// --- config <-> json ---

namespace {

json writer_to_json(const WriterOptions& w) {
  return json{{"codec", codec_name(w.codec)},
              {"level", w.codec_level},
              {"page_bytes", w.target_page_bytes},
              {"cluster_bytes", w.target_cluster_bytes},
              {"preallocate", w.preallocate}};
}

WriterOptions writer_from_json(const json& j) {
  WriterOptions w;
  if (j.contains("codec")) {
    const auto codec = codec_from_name(j["codec"].get<std::string>());
    if (!codec) throw ConfigError("unknown codec in writer options");
    w.codec = *codec;
  }
  w.codec_level = j.value("level", w.codec_level);
  w.target_page_bytes = j.value("page_bytes", w.target_page_bytes);
  w.target_cluster_bytes = j.value("cluster_bytes", w.target_cluster_bytes);
  w.preallocate = j.value("preallocate", w.preallocate);
  return w;
}

}  // namespace

std::string SkimConfig::to_json() const {
  json j;
  j["inputs"] = json::array();
  for (const SkimInput& in : inputs) {
    j["inputs"].push_back({{"path", in.path}, {"partition", in.partition}});
  }
  j["keep_fields"] = keep_fields;
  j["rules"] = json::array();
  for (const CountAtLeastRule& r : rules) {
    j["rules"].push_back({{"collection", r.collection},
                          {"leaf", r.leaf},
                          {"threshold", r.threshold},
                          {"min_count", r.min_count}});
  }
  j["element_filters"] = json::array();
  for (const ElementFilter& f : element_filters) {
    j["element_filters"].push_back({{"collection", f.collection},
                                    {"leaf", f.leaf},
                                    {"min", f.min_value}});
  }
  j["threads"] = threads;
  j["strategy"] = to_string(strategy);
  j["out_dir"] = out_dir;
  j["writer"] = writer_to_json(writer);
  return j.dump(2);
}

SkimConfig SkimConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config json: ") + e.what());
  }
  try {
    SkimConfig c;
    for (const json& in : j.value("inputs", json::array())) {
      c.inputs.push_back({in.at("path").get<std::string>(),
                          in.at("partition").get<std::string>()});
    }
    c.keep_fields = j.value("keep_fields", std::vector<std::string>{});
    for (const json& r : j.value("rules", json::array())) {
      c.rules.push_back({r.at("collection").get<std::string>(),
                         r.value("leaf", std::string{}),
                         r.at("threshold").get<double>(),
                         r.value("min_count", uint64_t{1})});
    }
    for (const json& f : j.value("element_filters", json::array())) {
      c.element_filters.push_back({f.at("collection").get<std::string>(),
                                   f.value("leaf", std::string{}),
                                   f.at("min").get<double>()});
    }
    c.threads = j.value("threads", 1u);
    if (j.contains("strategy")) {
      const auto s = strategy_from_name(j["strategy"].get<std::string>());
      if (!s) throw ConfigError("unknown strategy in config");
      c.strategy = *s;
    }
    c.out_dir = j.value("out_dir", std::string{"."});
    if (j.contains("writer")) c.writer = writer_from_json(j["writer"]);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config json: ") + e.what());
  }
}

SkimConfig SkimConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

// --- compiled skim ---

namespace {

/// Resolves a dotted path that must pass through records only; returns the
/// record-member indexes to walk and the final field id.
std::pair<std::vector<uint32_t>, uint32_t> record_steps(
    const FieldTree& tree, uint32_t from, std::string_view dotted,
    const std::string& what) {
  std::vector<uint32_t> steps;
  uint32_t id = from;
  size_t pos = 0;
  while (pos < dotted.size()) {
    size_t dot = dotted.find('.', pos);
    if (dot == std::string_view::npos) dot = dotted.size();
    const std::string_view seg = dotted.substr(pos, dot - pos);
    const Field& f = tree.field(id);
    if (f.kind != FieldKind::kRecord) {
      throw ConfigError(what + ": path segment '" + std::string(seg) +
                        "' descends through non-record field '" +
                        tree.path_of(id) + "'");
    }
    bool found = false;
    for (uint32_t i = 0; i < f.children.size(); ++i) {
      if (tree.field(f.children[i]).name == seg) {
        steps.push_back(i);
        id = f.children[i];
        found = true;
        break;
      }
    }
    if (!found) {
      throw ConfigError(what + ": no field '" + std::string(seg) +
                        "' under '" + tree.path_of(id) + "'");
    }
    pos = dot + 1;
  }
  return {std::move(steps), id};
}

const Value& walk(const Value& v, std::span<const uint32_t> steps) {
  const Value* cur = &v;
  for (uint32_t i : steps) {
    cur = &cur->as_record().members[i];
  }
  return *cur;
}

double numeric_leaf(const Value& v) {
  if (v.is<int32_t>()) return v.as<int32_t>();
  if (v.is<int64_t>()) return static_cast<double>(v.as<int64_t>());
  if (v.is<float>()) return v.as<float>();
  return v.as<double>();
}

void check_numeric_leaf(const FieldTree& tree, uint32_t id,
                        const std::string& what) {
  if (tree.field(id).kind != FieldKind::kLeaf) {
    throw ConfigError(what + ": '" + tree.path_of(id) +
                      "' is not a leaf field");
  }
}

}  // namespace

CompiledSkim::CompiledSkim(const FieldTree& input_tree,
                           const SkimConfig& config)
    : input_(input_tree) {
  output_ = input_.project(config.keep_fields, &projection_);
  keep_member_.assign(input_.n_fields(), false);
  for (uint32_t src : projection_.source_field) keep_member_[src] = true;

  for (const CountAtLeastRule& rule : config.rules) {
    if (!std::isfinite(rule.threshold)) {
      throw ConfigError("rule threshold must be finite");
    }
    auto [steps, coll_id] =
        record_steps(input_, 0, rule.collection, "rule collection");
    if (input_.field(coll_id).kind != FieldKind::kCollection) {
      throw ConfigError("rule collection '" + rule.collection +
                        "' is not a collection field");
    }
    const uint32_t element = input_.field(coll_id).children[0];
    auto [leaf_steps, leaf_id] =
        record_steps(input_, element, rule.leaf, "rule leaf");
    check_numeric_leaf(input_, leaf_id, "rule leaf");
    rules_.push_back(ResolvedRule{std::move(steps), std::move(leaf_steps),
                                  rule.threshold, rule.min_count});
  }

  for (const ElementFilter& filter : config.element_filters) {
    if (!std::isfinite(filter.min_value)) {
      throw ConfigError("element filter threshold must be finite");
    }
    // Filters run on projected entries, so paths resolve in the output tree.
    auto [steps, coll_id] =
        record_steps(output_, 0, filter.collection, "element filter");
    if (output_.field(coll_id).kind != FieldKind::kCollection) {
      throw ConfigError("element filter collection '" + filter.collection +
                        "' is not a collection field");
    }
    const uint32_t element = output_.field(coll_id).children[0];
    auto [leaf_steps, leaf_id] =
        record_steps(output_, element, filter.leaf, "element filter leaf");
    check_numeric_leaf(output_, leaf_id, "element filter leaf");
    filters_.push_back(ResolvedFilter{std::move(steps), std::move(leaf_steps),
                                      filter.min_value});
  }
}

Value CompiledSkim::project_value(const Value& v, uint32_t src_field) const {
  const Field& f = input_.field(src_field);
  switch (f.kind) {
    case FieldKind::kLeaf:
      return v;
    case FieldKind::kRecord: {
      std::vector<Value> members;
      const auto& src_members = v.as_record().members;
      for (uint32_t i = 0; i < f.children.size(); ++i) {
        if (keep_member_[f.children[i]]) {
          members.push_back(project_value(src_members[i], f.children[i]));
        }
      }
      return Value::record(std::move(members));
    }
    case FieldKind::kCollection: {
      std::vector<Value> items;
      items.reserve(v.as_list().items.size());
      for (const Value& item : v.as_list().items) {
        items.push_back(project_value(item, f.children[0]));
      }
      return Value::list(std::move(items));
    }
  }
  throw SchemaError("unreachable field kind");
}

std::optional<Value> CompiledSkim::skim_entry(const Value& entry) const {
  for (const ResolvedRule& rule : rules_) {
    const Value& coll = walk(entry, rule.collection_steps);
    uint64_t count = 0;
    for (const Value& item : coll.as_list().items) {
      if (numeric_leaf(walk(item, rule.leaf_steps)) > rule.threshold) {
        ++count;
        if (count >= rule.min_count) break;
      }
    }
    if (count < rule.min_count) return std::nullopt;
  }

  Value projected = project_value(entry, 0);

  for (const ResolvedFilter& filter : filters_) {
    Value* coll = &projected;
    for (uint32_t i : filter.collection_steps) {
      coll = &coll->as_record().members[i];
    }
    auto& items = coll->as_list().items;
    std::erase_if(items, [&](const Value& item) {
      return numeric_leaf(walk(item, filter.leaf_steps)) < filter.min_value;
    });
  }
  return projected;
}

// --- strategy runners ---

namespace {

struct PartitionWork {
  std::string name;
  std::vector<std::string> files;  // in config order
  std::unique_ptr<CompiledSkim> skim;
  std::string output_path;
  std::atomic<uint64_t> entries_in{0};
  std::atomic<uint64_t> entries_out{0};
  std::atomic<uint64_t> bytes_in{0};
};

uint64_t footer_uncompressed_bytes(const FileFooter& footer) {
  uint64_t total = 0;
  for (const auto& cluster : footer.clusters) {
    for (const auto& range : cluster.columns) {
      for (const auto& page : range.pages) total += page.uncompressed_bytes;
    }
  }
  return total;
}

std::vector<std::unique_ptr<PartitionWork>> group_partitions(
    const SkimConfig& config) {
  if (config.inputs.empty()) {
    throw ConfigError("skim config lists no inputs");
  }
  std::vector<std::unique_ptr<PartitionWork>> parts;
  std::map<std::string, PartitionWork*> by_name;
  for (const SkimInput& in : config.inputs) {
    PartitionWork*& slot = by_name[in.partition];
    if (slot == nullptr) {
      auto work = std::make_unique<PartitionWork>();
      work->name = in.partition;
      work->output_path =
          (fs::path(config.out_dir) / (in.partition + ".mnt")).string();
      slot = work.get();
      parts.push_back(std::move(work));
    }
    slot->files.push_back(in.path);
  }
  for (auto& part : parts) {
    Reader probe = Reader::open_file(part->files.front());
    part->skim = std::make_unique<CompiledSkim>(probe.file_tree(), config);
  }
  return parts;
}

/// Skims one input file into `fill`; checks the schema matches the
/// partition's and accumulates the partition counters.
void skim_file(const std::string& path, PartitionWork& part,
               const std::function<void(const Value&)>& fill) {
  Reader reader = Reader::open_file(path);
  if (!(reader.file_tree() == part.skim->input_tree())) {
    throw SchemaError("input '" + path + "' does not match partition '" +
                      part.name + "' schema");
  }
  part.entries_in.fetch_add(reader.n_entries());
  part.bytes_in.fetch_add(footer_uncompressed_bytes(reader.footer()));
  uint64_t kept = 0;
  reader.for_each([&](uint64_t, const Value& entry) {
    if (std::optional<Value> out = part.skim->skim_entry(entry)) {
      fill(*out);
      ++kept;
    }
  });
  part.entries_out.fetch_add(kept);
}

uint64_t file_bytes(const std::string& path) {
  std::error_code ec;
  const auto n = fs::file_size(path, ec);
  return ec ? 0 : static_cast<uint64_t>(n);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void rethrow_first_failure(std::vector<std::future<void>>& futures) {
  std::exception_ptr first;
  for (auto& f : futures) {
    try {
      f.get();
    } catch (...) {
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace

void merge_files(const std::vector<std::string>& inputs,
                 const std::string& output, const WriterOptions& options,
                 TaskPool* compression_pool) {
  if (inputs.empty()) {
    throw ConfigError("merge needs at least one input");
  }
  std::vector<std::unique_ptr<Reader>> readers;
  readers.reserve(inputs.size());
  for (const std::string& path : inputs) {
    readers.push_back(std::make_unique<Reader>(
        std::make_unique<FileSource>(path), ReaderOptions{}));
    if (!(readers.back()->file_tree() == readers.front()->file_tree())) {
      throw SchemaError("merge inputs disagree on schema: '" + path + "'");
    }
  }
  WriterOptions opts = options;
  opts.mode = CommitMode::kBuffered;
  FileSink sink(output);
  ParallelWriter writer(sink, readers.front()->file_tree(), opts,
                        compression_pool);
  auto ctx = writer.create_context();
  for (auto& reader : readers) {
    reader->for_each([&](uint64_t, const Value& v) { ctx->fill(v); });
  }
  ctx->commit_cluster();
  writer.close();
}

SkimReport run_skim(const SkimConfig& config) {
  auto parts = group_partitions(config);
  fs::create_directories(config.out_dir);
  const unsigned threads = std::max(1u, config.threads);
  SkimReport report;

  const auto t0 = std::chrono::steady_clock::now();

  switch (config.strategy) {
    case Strategy::kParallelWriter: {
      struct PartitionWriter {
        std::unique_ptr<FileSink> sink;
        std::unique_ptr<ParallelWriter> writer;
      };
      std::vector<PartitionWriter> writers(parts.size());
      for (size_t p = 0; p < parts.size(); ++p) {
        writers[p].sink = std::make_unique<FileSink>(parts[p]->output_path);
        writers[p].writer = std::make_unique<ParallelWriter>(
            *writers[p].sink, parts[p]->skim->output_tree(), config.writer);
      }
      {
        TaskPool pool(threads);
        std::vector<std::future<void>> futures;
        for (size_t p = 0; p < parts.size(); ++p) {
          for (const std::string& path : parts[p]->files) {
            futures.push_back(pool.submit([&, p, path] {
              auto ctx = writers[p].writer->create_context();
              skim_file(path, *parts[p],
                        [&](const Value& v) { ctx->fill(v); });
              ctx->commit_cluster();
            }));
          }
        }
        rethrow_first_failure(futures);
      }
      for (size_t p = 0; p < parts.size(); ++p) {
        const WriteStats stats = writers[p].writer->close();
        PartitionReport pr;
        pr.bytes_out = stats.bytes_uncompressed;
        pr.partition = parts[p]->name;
        pr.output_path = parts[p]->output_path;
        report.partitions.push_back(pr);
      }
      report.skim_seconds = seconds_since(t0);
      break;
    }

    case Strategy::kSeparateThenMerge: {
      const fs::path tmp_dir = fs::path(config.out_dir) / "tmp";
      fs::create_directories(tmp_dir);
      std::vector<std::vector<std::string>> temp_files(parts.size());
      for (size_t p = 0; p < parts.size(); ++p) {
        temp_files[p].resize(parts[p]->files.size());
        for (size_t k = 0; k < parts[p]->files.size(); ++k) {
          temp_files[p][k] = (tmp_dir / (parts[p]->name + "_" +
                                         std::to_string(k) + ".mnt"))
                                 .string();
        }
      }
      {
        TaskPool pool(threads);
        std::vector<std::future<void>> futures;
        for (size_t p = 0; p < parts.size(); ++p) {
          for (size_t k = 0; k < parts[p]->files.size(); ++k) {
            futures.push_back(pool.submit([&, p, k] {
              FileSink sink(temp_files[p][k]);
              WriterOptions opts = config.writer;
              opts.mode = CommitMode::kBuffered;
              ParallelWriter writer(sink, parts[p]->skim->output_tree(),
                                    opts);
              auto ctx = writer.create_context();
              skim_file(parts[p]->files[k], *parts[p],
                        [&](const Value& v) { ctx->fill(v); });
              ctx->commit_cluster();
              writer.close();
            }));
          }
        }
        rethrow_first_failure(futures);
      }
      report.skim_seconds = seconds_since(t0);
      for (const auto& files : temp_files) {
        for (const std::string& path : files) {
          report.temp_file_bytes += file_bytes(path);
        }
      }

      const auto t_merge = std::chrono::steady_clock::now();
      {
        TaskPool pool(threads);
        std::vector<std::future<void>> futures;
        for (size_t p = 0; p < parts.size(); ++p) {
          futures.push_back(pool.submit([&, p] {
            merge_files(temp_files[p], parts[p]->output_path, config.writer);
          }));
        }
        rethrow_first_failure(futures);
      }
      report.merge_seconds = seconds_since(t_merge);

      for (size_t p = 0; p < parts.size(); ++p) {
        PartitionReport pr;
        pr.partition = parts[p]->name;
        pr.output_path = parts[p]->output_path;
        {
          Reader merged = Reader::open_file(parts[p]->output_path);
          pr.bytes_out = footer_uncompressed_bytes(merged.footer());
        }
        report.partitions.push_back(pr);
      }
      std::error_code ec;
      fs::remove_all(tmp_dir, ec);
      break;
    }

    case Strategy::kImtOnly: {
      TaskPool compression(threads);
      TaskPool pool(threads);
      std::vector<std::future<WriteStats>> futures;
      for (size_t p = 0; p < parts.size(); ++p) {
        futures.push_back(pool.submit([&, p]() -> WriteStats {
          FileSink sink(parts[p]->output_path);
          WriterOptions opts = config.writer;
          opts.mode = CommitMode::kBuffered;
          ParallelWriter writer(sink, parts[p]->skim->output_tree(), opts,
                                &compression);
          auto ctx = writer.create_context();
          for (const std::string& path : parts[p]->files) {
            skim_file(path, *parts[p], [&](const Value& v) { ctx->fill(v); });
          }
          ctx->commit_cluster();
          return writer.close();
        }));
      }
      std::exception_ptr first;
      for (size_t p = 0; p < parts.size(); ++p) {
        try {
          const WriteStats stats = futures[p].get();
          PartitionReport pr;
          pr.partition = parts[p]->name;
          pr.output_path = parts[p]->output_path;
          pr.bytes_out = stats.bytes_uncompressed;
          report.partitions.push_back(pr);
        } catch (...) {
          if (!first) first = std::current_exception();
        }
      }
      if (first) std::rethrow_exception(first);
      report.skim_seconds = seconds_since(t0);
      break;
    }
  }

  for (size_t p = 0; p < parts.size(); ++p) {
    PartitionReport& pr = report.partitions[p];
    pr.input_files = parts[p]->files.size();
    pr.entries_in = parts[p]->entries_in.load();
    pr.entries_out = parts[p]->entries_out.load();
    pr.bytes_in = parts[p]->bytes_in.load();
    report.output_file_bytes += file_bytes(pr.output_path);
  }
  return report;
}

std::string SkimReport::to_json() const {
  json j;
  j["partitions"] = json::array();
  for (const PartitionReport& p : partitions) {
    j["partitions"].push_back({{"partition", p.partition},
                               {"output", p.output_path},
                               {"input_files", p.input_files},
                               {"entries_in", p.entries_in},
                               {"entries_out", p.entries_out},
                               {"bytes_in", p.bytes_in},
                               {"bytes_out", p.bytes_out}});
  }
  j["skim_seconds"] = skim_seconds;
  j["merge_seconds"] = merge_seconds;
  j["temp_file_bytes"] = temp_file_bytes;
  j["output_file_bytes"] = output_file_bytes;
  return j.dump(2);
}

// --- demo inputs ---

FieldTree demo_schema() {
  const TypeSpec with_pt =
      TypeSpec::record({{"fPt", TypeSpec::leaf(LeafType::kF32)}});
  return FieldTree::build(
      "Event", TypeSpec::record({
                   {"fId", TypeSpec::leaf(LeafType::kI64)},
                   {"fJets", TypeSpec::collection(with_pt)},
                   {"fLeps", TypeSpec::collection(with_pt)},
               }));
}

SkimConfig write_demo_inputs(const std::string& dir, unsigned partitions,
                             unsigned files_per_partition,
                             uint64_t entries_per_file, uint64_t seed,
                             const WriterOptions& options) {
  if (partitions == 0 || files_per_partition == 0 || entries_per_file == 0) {
    throw ConfigError("demo inputs need partitions, files and entries >= 1");
  }
  fs::create_directories(dir);
  const FieldTree tree = demo_schema();

  SkimConfig config;
  config.writer = options;
  config.keep_fields = {"fId", "fJets", "fLeps"};
  config.rules = {{"fLeps", "fPt", 20.0, 1}, {"fJets", "fPt", 20.0, 4}};
  config.element_filters = {{"fJets", "fPt", 20.0}, {"fLeps", "fPt", 20.0}};

  uint64_t next_id = 0;
  for (unsigned p = 0; p < partitions; ++p) {
    char name[16];
    std::snprintf(name, sizeof(name), "part%02u", p);
    for (unsigned k = 0; k < files_per_partition; ++k) {
      const std::string path =
          (fs::path(dir) / (std::string(name) + "_" + std::to_string(k) +
                            ".mnt"))
              .string();
      std::mt19937_64 rng(seed ^ (uint64_t{p} << 32) ^ k);
      std::poisson_distribution<int> n_jets(5.0);
      std::poisson_distribution<int> n_leps(2.0);
      std::uniform_real_distribution<float> pt(0.0f, 100.0f);

      FileSink sink(path);
      uint64_t remaining = entries_per_file;
      sequential_write(sink, tree, options, [&]() -> std::optional<Value> {
        if (remaining == 0) return std::nullopt;
        --remaining;
        auto particles = [&](int n) {
          std::vector<Value> items;
          items.reserve(static_cast<size_t>(n));
          for (int i = 0; i < n; ++i) {
            items.push_back(Value::record({Value(pt(rng))}));
          }
          return Value::list(std::move(items));
        };
        return Value::record({Value(static_cast<int64_t>(next_id++)),
                              particles(n_jets(rng)), particles(n_leps(rng))});
      });
      config.inputs.push_back({path, name});
    }
  }
  return config;
}

}  // namespace mntuple::skim
