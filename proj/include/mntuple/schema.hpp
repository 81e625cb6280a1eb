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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mntuple/bytes.hpp"
#include "mntuple/errors.hpp"
#include "mntuple/value.hpp"

namespace mntuple {

enum class FieldKind : uint8_t {
  kRecord = 0,      // fixed group of named children, owns no column
  kCollection = 1,  // variable-length sequence, owns one offset column
  kLeaf = 2,        // primitive, owns one value column
};

enum class LeafType : uint8_t {
  kI32 = 0,
  kI64 = 1,
  kF32 = 2,
  kF64 = 3,
};

inline constexpr uint32_t leaf_width(LeafType t) {
  switch (t) {
    case LeafType::kI32:
    case LeafType::kF32:
      return 4;
    case LeafType::kI64:
    case LeafType::kF64:
      return 8;
  }
  return 0;
}

const char* to_string(FieldKind kind);
const char* to_string(LeafType type);

/// Recursive description of a nested type, the input to FieldTree::build.
struct TypeSpec {
  FieldKind kind = FieldKind::kLeaf;
  LeafType leaf_type = LeafType::kI64;
  std::vector<std::pair<std::string, TypeSpec>> members;  // records
  std::vector<TypeSpec> element;                          // collections, size 1

  static TypeSpec leaf(LeafType t) {
    TypeSpec s;
    s.kind = FieldKind::kLeaf;
    s.leaf_type = t;
    return s;
  }
  static TypeSpec record(std::vector<std::pair<std::string, TypeSpec>> m) {
    TypeSpec s;
    s.kind = FieldKind::kRecord;
    s.members = std::move(m);
    return s;
  }
  static TypeSpec collection(TypeSpec elem) {
    TypeSpec s;
    s.kind = FieldKind::kCollection;
    s.element.push_back(std::move(elem));
    return s;
  }
};

inline constexpr uint32_t kRootParent = 0xFFFFFFFFu;
inline constexpr uint8_t kNoLeafType = 0xFF;
inline constexpr int32_t kNoColumn = -1;

struct Field {
  uint32_t id = 0;
  uint32_t parent = kRootParent;
  std::string name;
  FieldKind kind = FieldKind::kLeaf;
  LeafType leaf_type = LeafType::kI64;  // leaves only
  std::vector<uint32_t> children;       // in declaration order
  int32_t column = kNoColumn;           // owning column id, if any
};

enum class ColumnRole : uint8_t {
  kOffset = 0,  // u64 cumulative end offsets, cluster-local
  kValue = 1,   // leaf elements
};

struct ColumnDescriptor {
  uint32_t id = 0;
  uint32_t source_field = 0;
  ColumnRole role = ColumnRole::kValue;
  LeafType leaf_type = LeafType::kI64;  // VALUE columns only
  uint32_t element_width = 8;

  friend bool operator==(const ColumnDescriptor&,
                         const ColumnDescriptor&) = default;
};

/// Id mappings from a projected tree back into its source tree.
struct Projection {
  std::vector<uint32_t> source_field;   // projected field id -> source id
  std::vector<uint32_t> source_column;  // projected column id -> source id
};

/// Immutable flattened field tree plus its deterministic column mapping.
///
/// Field ids are assigned depth-first in declaration order, so the schema
/// (and everything serialized from it) is a pure function of the TypeSpec.
class FieldTree {
 public:
  /// An empty tree; usable only as a target for assignment.
  FieldTree() = default;

  /// Decomposes a nested type description into fields. Collections introduce
  /// an implicit child named "_0" for their element type.
  static FieldTree build(std::string root_name, const TypeSpec& spec);

  const std::vector<Field>& fields() const { return fields_; }
  const Field& field(uint32_t id) const { return fields_[id]; }
  uint32_t n_fields() const { return static_cast<uint32_t>(fields_.size()); }

  const std::vector<ColumnDescriptor>& columns() const { return columns_; }
  const ColumnDescriptor& column(uint32_t id) const { return columns_[id]; }
  uint32_t n_columns() const { return static_cast<uint32_t>(columns_.size()); }

  const Field& root() const { return fields_[0]; }

  /// Count-prefixed little-endian field records; consumed by the file header.
  std::vector<uint8_t> serialize() const;
  static FieldTree deserialize(std::span<const uint8_t> bytes);

  /// Dotted path from the root ("fTracks._0.fEnergy") to a field id.
  uint32_t resolve_path(std::string_view dotted) const;
  std::string path_of(uint32_t field_id) const;

  /// Throws SchemaError unless the value conforms to this tree.
  void check_entry(const Value& entry) const;

  /// Restricts the tree to `paths` (plus all their ancestors and
  /// descendants). Empty `paths` keeps everything. Returns the projected
  /// tree; `out` receives the id mappings back into this tree.
  FieldTree project(const std::vector<std::string>& paths,
                    Projection* out) const;

  friend bool operator==(const FieldTree& a, const FieldTree& b) {
    return a.serialize() == b.serialize();
  }

 private:
  void index_and_validate();  // children/columns derivation + invariants

  std::vector<Field> fields_;
  std::vector<ColumnDescriptor> columns_;
};

/// Pure function from a field tree to its flat column list: one OFFSET
/// column per collection, one VALUE column per leaf, depth-first order.
std::vector<ColumnDescriptor> map_columns(const FieldTree& tree);

/// Decomposes one entry into per-column element appends.
///
/// `collection_counts` carries the cluster-local running child counts,
/// indexed by column id; entries for offset columns are read and updated,
/// the rest are ignored. The caller resets them at cluster boundaries.
///
/// The emitter receives, in nesting order:
///   emit.value_i32(col, v) / value_i64 / value_f32 / value_f64
///   emit.offset(col, cumulative_end)
template <typename Emitter>
void shred_entry(const FieldTree& tree, const Value& entry,
                 std::span<uint64_t> collection_counts, Emitter&& emit);

/// Convenience form used for verification: returns per-column appended
/// elements as raw little-endian bytes.
std::vector<std::vector<uint8_t>> shred_entry_bytes(
    const FieldTree& tree, const Value& entry,
    std::span<uint64_t> collection_counts);

/// Decodes a raw element buffer into typed values (test/verification aid).
template <typename T>
std::vector<T> decode_elements(std::span<const uint8_t> bytes);

// --- template implementations ---

namespace detail {

[[noreturn]] void throw_mismatch(const FieldTree& tree, uint32_t field_id,
                                 const char* expected);

template <typename Emitter>
void shred_field(const FieldTree& tree, uint32_t field_id, const Value& v,
                 std::span<uint64_t> counts, Emitter& emit) {
  const Field& f = tree.field(field_id);
  switch (f.kind) {
    case FieldKind::kRecord: {
      if (!v.is_record()) throw_mismatch(tree, field_id, "record");
      const auto& members = v.as_record().members;
      if (members.size() != f.children.size()) {
        throw SchemaError("record value for field '" + tree.path_of(field_id) +
                          "' has " + std::to_string(members.size()) +
                          " members, schema has " +
                          std::to_string(f.children.size()));
      }
      for (size_t i = 0; i < members.size(); ++i) {
        shred_field(tree, f.children[i], members[i], counts, emit);
      }
      break;
    }
    case FieldKind::kCollection: {
      if (!v.is_list()) throw_mismatch(tree, field_id, "list");
      const auto& items = v.as_list().items;
      const auto col = static_cast<uint32_t>(f.column);
      counts[col] += items.size();
      emit.offset(col, counts[col]);
      for (const Value& item : items) {
        shred_field(tree, f.children[0], item, counts, emit);
      }
      break;
    }
    case FieldKind::kLeaf: {
      const auto col = static_cast<uint32_t>(f.column);
      switch (f.leaf_type) {
        case LeafType::kI32:
          if (!v.is<int32_t>()) throw_mismatch(tree, field_id, "i32");
          emit.value_i32(col, v.as<int32_t>());
          break;
        case LeafType::kI64:
          if (!v.is<int64_t>()) throw_mismatch(tree, field_id, "i64");
          emit.value_i64(col, v.as<int64_t>());
          break;
        case LeafType::kF32:
          if (!v.is<float>()) throw_mismatch(tree, field_id, "f32");
          emit.value_f32(col, v.as<float>());
          break;
        case LeafType::kF64:
          if (!v.is<double>()) throw_mismatch(tree, field_id, "f64");
          emit.value_f64(col, v.as<double>());
          break;
      }
      break;
    }
  }
}

}  // namespace detail

template <typename Emitter>
void shred_entry(const FieldTree& tree, const Value& entry,
                 std::span<uint64_t> collection_counts, Emitter&& emit) {
  detail::shred_field(tree, 0, entry, collection_counts, emit);
}

template <typename T>
std::vector<T> decode_elements(std::span<const uint8_t> bytes) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::vector<T> out;
  out.reserve(bytes.size() / sizeof(T));
  for (size_t i = 0; i + sizeof(T) <= bytes.size(); i += sizeof(T)) {
    out.push_back(load_le<T>(bytes.data() + i));
  }
  return out;
}

}  // namespace mntuple
