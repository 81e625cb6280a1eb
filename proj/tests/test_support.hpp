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

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mntuple/schema.hpp"
#include "mntuple/value.hpp"

namespace mntuple::test {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("mnt_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)) + "_" +
             std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

/// Random nested type of bounded depth; sibling names are unique by
/// construction.
inline TypeSpec random_type(std::mt19937_64& rng, int depth) {
  const auto leaf = [&] {
    static constexpr LeafType kTypes[] = {LeafType::kI32, LeafType::kI64,
                                          LeafType::kF32, LeafType::kF64};
    return TypeSpec::leaf(kTypes[rng() % 4]);
  };
  if (depth <= 0) return leaf();
  switch (rng() % 4) {
    case 0:
    case 1: {
      const int n = 1 + static_cast<int>(rng() % 3);
      std::vector<std::pair<std::string, TypeSpec>> members;
      for (int i = 0; i < n; ++i) {
        members.emplace_back("m" + std::to_string(i),
                             random_type(rng, depth - 1));
      }
      return TypeSpec::record(std::move(members));
    }
    case 2:
      return TypeSpec::collection(random_type(rng, depth - 1));
    default:
      return leaf();
  }
}

inline FieldTree random_tree(std::mt19937_64& rng, int max_depth = 3) {
  return FieldTree::build("root", random_type(rng, max_depth));
}

/// Random value conforming to `tree` rooted at `field_id`.
inline Value random_value(const FieldTree& tree, std::mt19937_64& rng,
                          uint32_t field_id = 0, int max_items = 4) {
  const Field& f = tree.field(field_id);
  switch (f.kind) {
    case FieldKind::kRecord: {
      std::vector<Value> members;
      members.reserve(f.children.size());
      for (uint32_t child : f.children) {
        members.push_back(random_value(tree, rng, child, max_items));
      }
      return Value::record(std::move(members));
    }
    case FieldKind::kCollection: {
      const int n = static_cast<int>(rng() % (max_items + 1));
      std::vector<Value> items;
      items.reserve(n);
      for (int i = 0; i < n; ++i) {
        items.push_back(random_value(tree, rng, f.children[0], max_items));
      }
      return Value::list(std::move(items));
    }
    case FieldKind::kLeaf:
      switch (f.leaf_type) {
        case LeafType::kI32:
          return Value(static_cast<int32_t>(rng()));
        case LeafType::kI64:
          return Value(static_cast<int64_t>(rng()));
        case LeafType::kF32:
          return Value(static_cast<float>(rng() % 100000) / 7.0f);
        case LeafType::kF64:
          return Value(static_cast<double>(rng() % 1000000) / 13.0);
      }
  }
  return Value(int64_t{0});
}

inline std::vector<Value> random_entries(const FieldTree& tree,
                                         std::mt19937_64& rng, size_t n,
                                         int max_items = 4) {
  std::vector<Value> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    out.push_back(random_value(tree, rng, 0, max_items));
  }
  return out;
}

/// Order-insensitive fingerprint for comparing entry sets.
inline std::vector<std::string> multiset_of(const std::vector<Value>& vs) {
  std::vector<std::string> keys;
  keys.reserve(vs.size());
  for (const Value& v : vs) keys.push_back(canonical_encoding(v));
  std::sort(keys.begin(), keys.end());
  return keys;
}

/// Independent count of collection-child instances per field, by walking
/// the value itself (oracle for offset-column checks).
inline void count_instances(const FieldTree& tree, const Value& v,
                            uint32_t field_id, std::vector<uint64_t>& counts) {
  const Field& f = tree.field(field_id);
  switch (f.kind) {
    case FieldKind::kRecord: {
      const auto& members = v.as_record().members;
      for (size_t i = 0; i < f.children.size(); ++i) {
        count_instances(tree, members[i], f.children[i], counts);
      }
      break;
    }
    case FieldKind::kCollection: {
      counts[field_id] += v.as_list().items.size();
      for (const Value& item : v.as_list().items) {
        count_instances(tree, item, f.children[0], counts);
      }
      break;
    }
    case FieldKind::kLeaf:
      break;
  }
}

}  // namespace mntuple::test
