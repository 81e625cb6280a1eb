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
#include <initializer_list>
#include <string>
#include <variant>
#include <vector>

namespace mntuple {

class Value;

/// Positional members, one per child field of the record, in field order.
struct RecordValue {
  std::vector<Value> members;
};

/// Variable-length sequence of values of one element type.
struct ListValue {
  std::vector<Value> items;
};

/// A dynamically typed nested value: the in-memory form of one entry (or a
/// piece of one). Leaves are the four supported primitive types.
class Value {
 public:
  using Variant =
      std::variant<int32_t, int64_t, float, double, RecordValue, ListValue>;

  Value() : v_(int64_t{0}) {}
  Value(int32_t v) : v_(v) {}
  Value(int64_t v) : v_(v) {}
  Value(float v) : v_(v) {}
  Value(double v) : v_(v) {}
  Value(RecordValue v) : v_(std::move(v)) {}
  Value(ListValue v) : v_(std::move(v)) {}

  static Value record(std::vector<Value> members) {
    return Value(RecordValue{std::move(members)});
  }
  static Value list(std::vector<Value> items) {
    return Value(ListValue{std::move(items)});
  }

  bool is_record() const { return std::holds_alternative<RecordValue>(v_); }
  bool is_list() const { return std::holds_alternative<ListValue>(v_); }

  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(v_);
  }
  template <typename T>
  T as() const {
    return std::get<T>(v_);
  }

  RecordValue& as_record() { return std::get<RecordValue>(v_); }
  const RecordValue& as_record() const { return std::get<RecordValue>(v_); }
  ListValue& as_list() { return std::get<ListValue>(v_); }
  const ListValue& as_list() const { return std::get<ListValue>(v_); }

  const Variant& variant() const { return v_; }

  friend bool operator==(const Value& a, const Value& b);

 private:
  Variant v_;
};

bool operator==(const RecordValue& a, const RecordValue& b);
bool operator==(const ListValue& a, const ListValue& b);

/// Canonical byte encoding of a value, used by tests and tools for multiset
/// comparison and stable ordering. Not part of the file format.
std::string canonical_encoding(const Value& v);

/// Human-readable rendering for diagnostics.
std::string to_string(const Value& v);

}  // namespace mntuple
