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

#include "mntuple/schema.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "mntuple/bytes.hpp"

namespace mntuple {

const char* to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::kRecord:
      return "record";
    case FieldKind::kCollection:
      return "collection";
    case FieldKind::kLeaf:
      return "leaf";
  }
  return "?";
}

const char* to_string(LeafType type) {
  switch (type) {
    case LeafType::kI32:
      return "i32";
    case LeafType::kI64:
      return "i64";
    case LeafType::kF32:
      return "f32";
    case LeafType::kF64:
      return "f64";
  }
  return "?";
}

namespace {

void append_spec(std::vector<Field>& fields, uint32_t parent, std::string name,
                 const TypeSpec& spec) {
  if (name.empty()) {
    throw SchemaError("field names must be non-empty");
  }
  Field f;
  f.id = static_cast<uint32_t>(fields.size());
  f.parent = parent;
  f.name = std::move(name);
  f.kind = spec.kind;
  const uint32_t self = f.id;
  switch (spec.kind) {
    case FieldKind::kLeaf:
      f.leaf_type = spec.leaf_type;
      fields.push_back(std::move(f));
      break;
    case FieldKind::kRecord: {
      if (spec.members.empty()) {
        throw SchemaError("record field '" + f.name + "' has no members");
      }
      fields.push_back(std::move(f));
      for (const auto& [child_name, child_spec] : spec.members) {
        append_spec(fields, self, child_name, child_spec);
      }
      break;
    }
    case FieldKind::kCollection: {
      if (spec.element.size() != 1) {
        throw SchemaError("collection field '" + f.name +
                          "' must have exactly one element type");
      }
      fields.push_back(std::move(f));
      append_spec(fields, self, "_0", spec.element[0]);
      break;
    }
  }
}

}  // namespace

FieldTree FieldTree::build(std::string root_name, const TypeSpec& spec) {
  FieldTree tree;
  append_spec(tree.fields_, kRootParent, std::move(root_name), spec);
  tree.index_and_validate();
  return tree;
}

void FieldTree::index_and_validate() {
  if (fields_.empty()) {
    throw SchemaError("empty field tree");
  }
  for (auto& f : fields_) {
    f.children.clear();
    f.column = kNoColumn;
  }
  for (uint32_t id = 0; id < fields_.size(); ++id) {
    Field& f = fields_[id];
    if (id == 0) {
      if (f.parent != kRootParent) {
        throw SchemaError("field 0 must be the root");
      }
    } else {
      if (f.parent >= id) {
        throw SchemaError("field " + std::to_string(id) +
                          " does not follow its parent");
      }
      fields_[f.parent].children.push_back(id);
    }
    if (f.name.empty()) {
      throw SchemaError("field names must be non-empty");
    }
  }
  for (const Field& f : fields_) {
    switch (f.kind) {
      case FieldKind::kRecord:
        if (f.children.empty()) {
          throw SchemaError("record field '" + f.name + "' has no members");
        }
        break;
      case FieldKind::kCollection:
        if (f.children.size() != 1) {
          throw SchemaError("collection field '" + f.name +
                            "' must have exactly one child");
        }
        break;
      case FieldKind::kLeaf:
        if (!f.children.empty()) {
          throw SchemaError("leaf field '" + f.name + "' has children");
        }
        break;
    }
    std::unordered_set<std::string_view> names;
    for (uint32_t child : f.children) {
      if (!names.insert(fields_[child].name).second) {
        throw SchemaError("duplicate sibling name '" + fields_[child].name +
                          "' under '" + f.name + "'");
      }
    }
  }
  columns_ = map_columns(*this);
  for (const ColumnDescriptor& c : columns_) {
    fields_[c.source_field].column = static_cast<int32_t>(c.id);
  }
}

std::vector<ColumnDescriptor> map_columns(const FieldTree& tree) {
  std::vector<ColumnDescriptor> columns;
  for (const Field& f : tree.fields()) {
    ColumnDescriptor c;
    c.source_field = f.id;
    switch (f.kind) {
      case FieldKind::kRecord:
        continue;
      case FieldKind::kCollection:
        c.role = ColumnRole::kOffset;
        c.element_width = 8;
        break;
      case FieldKind::kLeaf:
        c.role = ColumnRole::kValue;
        c.leaf_type = f.leaf_type;
        c.element_width = leaf_width(f.leaf_type);
        break;
    }
    c.id = static_cast<uint32_t>(columns.size());
    columns.push_back(c);
  }
  return columns;
}

std::vector<uint8_t> FieldTree::serialize() const {
  ByteWriter w;
  w.u32(n_fields());
  for (const Field& f : fields_) {
    w.u32(f.id);
    w.u32(f.parent);
    w.u8(static_cast<uint8_t>(f.kind));
    w.u8(f.kind == FieldKind::kLeaf ? static_cast<uint8_t>(f.leaf_type)
                                    : kNoLeafType);
    if (f.name.size() > 0xFFFF) {
      throw SchemaError("field name too long");
    }
    w.u16(static_cast<uint16_t>(f.name.size()));
    w.bytes(f.name.data(), f.name.size());
  }
  return w.take();
}

FieldTree FieldTree::deserialize(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  const uint32_t count = r.u32();
  if (count == 0) {
    throw SchemaError("empty field tree");
  }
  // Each field record is at least 12 bytes; rejects absurd counts early.
  if (static_cast<uint64_t>(count) * 12 > bytes.size()) {
    throw FormatError("schema field count exceeds payload size");
  }
  FieldTree tree;
  tree.fields_.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Field f;
    f.id = r.u32();
    f.parent = r.u32();
    const uint8_t kind = r.u8();
    const uint8_t leaf = r.u8();
    const uint16_t name_len = r.u16();
    f.name = r.str(name_len);
    if (f.id != i) {
      throw FormatError("schema field ids must be dense and in order");
    }
    if (kind > static_cast<uint8_t>(FieldKind::kLeaf)) {
      throw FormatError("unknown field kind " + std::to_string(kind));
    }
    f.kind = static_cast<FieldKind>(kind);
    if (f.kind == FieldKind::kLeaf) {
      if (leaf > static_cast<uint8_t>(LeafType::kF64)) {
        throw FormatError("unknown leaf type " + std::to_string(leaf));
      }
      f.leaf_type = static_cast<LeafType>(leaf);
    } else if (leaf != kNoLeafType) {
      throw FormatError("non-leaf field carries a leaf type");
    }
    tree.fields_.push_back(std::move(f));
  }
  if (!r.done()) {
    throw FormatError("trailing bytes after schema");
  }
  tree.index_and_validate();
  return tree;
}

uint32_t FieldTree::resolve_path(std::string_view dotted) const {
  uint32_t id = 0;  // empty path names the root
  size_t pos = 0;
  while (pos < dotted.size()) {
    size_t dot = dotted.find('.', pos);
    if (dot == std::string_view::npos) dot = dotted.size();
    const std::string_view seg = dotted.substr(pos, dot - pos);
    bool found = false;
    for (uint32_t child : fields_[id].children) {
      if (fields_[child].name == seg) {
        id = child;
        found = true;
        break;
      }
    }
    if (!found) {
      throw SchemaError("no field '" + std::string(seg) + "' under '" +
                        path_of(id) + "'");
    }
    pos = dot + 1;
  }
  return id;
}

std::string FieldTree::path_of(uint32_t field_id) const {
  if (field_id == 0) return fields_[0].name;
  std::vector<std::string_view> parts;
  for (uint32_t id = field_id; id != 0; id = fields_[id].parent) {
    parts.push_back(fields_[id].name);
  }
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (!out.empty()) out.push_back('.');
    out.append(*it);
  }
  return out;
}

namespace {

struct NullEmitter {
  void value_i32(uint32_t, int32_t) {}
  void value_i64(uint32_t, int64_t) {}
  void value_f32(uint32_t, float) {}
  void value_f64(uint32_t, double) {}
  void offset(uint32_t, uint64_t) {}
};

}  // namespace

void FieldTree::check_entry(const Value& entry) const {
  std::vector<uint64_t> counts(n_columns(), 0);
  NullEmitter sink;
  shred_entry(*this, entry, counts, sink);
}

FieldTree FieldTree::project(const std::vector<std::string>& paths,
                             Projection* out) const {
  std::set<uint32_t> keep;
  if (paths.empty()) {
    for (uint32_t id = 0; id < n_fields(); ++id) keep.insert(id);
  } else {
    // Named fields keep their whole subtree; ancestors come along as
    // structure.
    std::vector<uint32_t> named;
    named.reserve(paths.size());
    for (const auto& p : paths) named.push_back(resolve_path(p));
    for (uint32_t id : named) {
      for (uint32_t a = id;; a = fields_[a].parent) {
        keep.insert(a);
        if (a == 0) break;
      }
    }
    // Descendants: fields follow their parents, one forward pass suffices.
    std::set<uint32_t> named_set(named.begin(), named.end());
    std::vector<bool> under(n_fields(), false);
    for (uint32_t id = 0; id < n_fields(); ++id) {
      const Field& f = fields_[id];
      const bool parent_under =
          id != 0 && (under[f.parent] || named_set.count(f.parent));
      under[id] = parent_under || named_set.count(id);
      if (under[id]) keep.insert(id);
    }
  }

  FieldTree projected;
  std::vector<uint32_t> new_id(n_fields(), kRootParent);
  Projection proj;
  for (uint32_t id : keep) {
    const Field& f = fields_[id];
    Field copy;
    copy.id = static_cast<uint32_t>(projected.fields_.size());
    copy.parent = f.parent == kRootParent ? kRootParent : new_id[f.parent];
    copy.name = f.name;
    copy.kind = f.kind;
    copy.leaf_type = f.leaf_type;
    new_id[id] = copy.id;
    projected.fields_.push_back(std::move(copy));
    proj.source_field.push_back(id);
  }
  projected.index_and_validate();
  proj.source_column.resize(projected.n_columns());
  for (const ColumnDescriptor& c : projected.columns_) {
    const uint32_t src_field = proj.source_field[c.source_field];
    proj.source_column[c.id] =
        static_cast<uint32_t>(fields_[src_field].column);
  }
  if (out != nullptr) *out = std::move(proj);
  return projected;
}

namespace detail {

[[noreturn]] void throw_mismatch(const FieldTree& tree, uint32_t field_id,
                                 const char* expected) {
  throw SchemaError("value for field '" + tree.path_of(field_id) +
                    "' is not a " + expected);
}

}  // namespace detail

namespace {

struct BytesEmitter {
  std::vector<std::vector<uint8_t>>& out;
  void value_i32(uint32_t col, int32_t v) { append_le(out[col], v); }
  void value_i64(uint32_t col, int64_t v) { append_le(out[col], v); }
  void value_f32(uint32_t col, float v) { append_le(out[col], v); }
  void value_f64(uint32_t col, double v) { append_le(out[col], v); }
  void offset(uint32_t col, uint64_t v) { append_le(out[col], v); }
};

}  // namespace

std::vector<std::vector<uint8_t>> shred_entry_bytes(
    const FieldTree& tree, const Value& entry,
    std::span<uint64_t> collection_counts) {
  std::vector<std::vector<uint8_t>> out(tree.n_columns());
  BytesEmitter emit{out};
  shred_entry(tree, entry, collection_counts, emit);
  return out;
}

}  // namespace mntuple
