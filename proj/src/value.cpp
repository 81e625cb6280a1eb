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

#include "mntuple/value.hpp"

#include <bit>
#include <sstream>

#include "mntuple/bytes.hpp"

namespace mntuple {

bool operator==(const RecordValue& a, const RecordValue& b) {
  return a.members == b.members;
}

bool operator==(const ListValue& a, const ListValue& b) {
  return a.items == b.items;
}

bool operator==(const Value& a, const Value& b) {
  // Floats compare by bit pattern: round-trip tests need NaN-safe equality
  // and must not conflate -0.0 with 0.0.
  if (a.v_.index() != b.v_.index()) return false;
  if (a.is<float>()) {
    return std::bit_cast<uint32_t>(a.as<float>()) ==
           std::bit_cast<uint32_t>(b.as<float>());
  }
  if (a.is<double>()) {
    return std::bit_cast<uint64_t>(a.as<double>()) ==
           std::bit_cast<uint64_t>(b.as<double>());
  }
  return a.v_ == b.v_;
}

namespace {

void encode(const Value& v, std::string& out) {
  struct Visitor {
    std::string& out;
    void operator()(int32_t x) {
      out.push_back('i');
      raw(std::bit_cast<uint32_t>(x));
    }
    void operator()(int64_t x) {
      out.push_back('I');
      raw64(std::bit_cast<uint64_t>(x));
    }
    void operator()(float x) {
      out.push_back('f');
      raw(std::bit_cast<uint32_t>(x));
    }
    void operator()(double x) {
      out.push_back('F');
      raw64(std::bit_cast<uint64_t>(x));
    }
    void operator()(const RecordValue& r) {
      out.push_back('R');
      raw(static_cast<uint32_t>(r.members.size()));
      for (const auto& m : r.members) encode(m, out);
    }
    void operator()(const ListValue& l) {
      out.push_back('L');
      raw(static_cast<uint32_t>(l.items.size()));
      for (const auto& i : l.items) encode(i, out);
    }
    void raw(uint32_t x) {
      uint8_t tmp[4];
      store_le32(tmp, x);
      out.append(reinterpret_cast<char*>(tmp), 4);
    }
    void raw64(uint64_t x) {
      uint8_t tmp[8];
      store_le64(tmp, x);
      out.append(reinterpret_cast<char*>(tmp), 8);
    }
  };
  std::visit(Visitor{out}, v.variant());
}

void print(const Value& v, std::ostringstream& os) {
  struct Visitor {
    std::ostringstream& os;
    void operator()(int32_t x) { os << x; }
    void operator()(int64_t x) { os << x; }
    void operator()(float x) { os << x << 'f'; }
    void operator()(double x) { os << x; }
    void operator()(const RecordValue& r) {
      os << '{';
      for (size_t i = 0; i < r.members.size(); ++i) {
        if (i) os << ", ";
        print(r.members[i], os);
      }
      os << '}';
    }
    void operator()(const ListValue& l) {
      os << '[';
      for (size_t i = 0; i < l.items.size(); ++i) {
        if (i) os << ", ";
        print(l.items[i], os);
      }
      os << ']';
    }
  };
  std::visit(Visitor{os}, v.variant());
}

}  // namespace

std::string canonical_encoding(const Value& v) {
  std::string out;
  encode(v, out);
  return out;
}

std::string to_string(const Value& v) {
  std::ostringstream os;
  print(v, os);
  return os.str();
}

}  // namespace mntuple
