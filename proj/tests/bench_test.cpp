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

#include "mntuple/bench.hpp"

#include <doctest.h>

#include "mntuple/reader.hpp"
#include "test_support.hpp"

using namespace mntuple;
using namespace mntuple::bench;

TEST_CASE("generated collection lengths average five") {
  EventGenerator gen(12345, 0, 1'000'000);
  Value entry = EventGenerator::make_entry();
  uint64_t items = 0;
  constexpr uint64_t kEntries = 1'000'000;
  for (uint64_t i = 0; i < kEntries; ++i) {
    gen.next(entry);
    items += entry.as_record().members[1].as_list().items.size();
  }
  const double mean = static_cast<double>(items) / kEntries;
  CHECK(mean >= 4.97);
  CHECK(mean <= 5.03);
}

TEST_CASE("generated values stay in range and ids are sequential") {
  EventGenerator gen(9, 3, 1000);
  Value entry = EventGenerator::make_entry();
  int64_t expected_id = 3 * 1000;
  for (int i = 0; i < 1000; ++i) {
    gen.next(entry);
    CHECK(entry.as_record().members[0].as<int64_t>() == expected_id);
    ++expected_id;
    for (const Value& v : entry.as_record().members[1].as_list().items) {
      CHECK(v.as<float>() >= 0.0f);
      CHECK(v.as<float>() < 100.0f);
    }
  }
}

TEST_CASE("the workload averages close to 36 bytes per entry") {
  EventGenerator gen(2026, 0, 1);
  Value entry = EventGenerator::make_entry();
  constexpr uint64_t kEntries = 1'000'000;
  for (uint64_t i = 0; i < kEntries; ++i) gen.next(entry);
  const double mean =
      static_cast<double>(gen.bytes_generated()) / kEntries;
  CHECK(mean >= 35.0);
  CHECK(mean <= 37.0);
}

TEST_CASE("benchmark runs validate their output files") {
  test::TempDir dir("bench");
  BenchConfig config;
  config.threads = 2;
  config.entries_per_thread = 5000;
  config.sink = dir.file("bench.mnt");
  config.repetitions = 2;
  config.cluster_bytes = 64 * 1024;
  config.verify = true;

  for (BenchMode mode :
       {BenchMode::kBuffered, BenchMode::kUnbuffered,
        BenchMode::kSeparateFiles}) {
    config.mode = mode;
    const BenchResult result = run_benchmark(config);
    REQUIRE(result.reps.size() == 2);
    CHECK(result.physical_bandwidth > 0);
    CHECK(result.logical_bandwidth > 0);
    for (const Repetition& rep : result.reps) {
      CHECK(rep.entries == 2 * 5000);
      CHECK(rep.physical_bytes > 0);
    }
    CHECK(!result.to_json().empty());
  }
}

TEST_CASE("a fixed seed fixes the byte volume regardless of scheduling") {
  BenchConfig config;
  config.threads = 2;
  config.entries_per_thread = 20000;
  config.sink = "null";
  config.repetitions = 3;
  config.codec = CodecId::kNone;

  const BenchResult result = run_benchmark(config);
  REQUIRE(result.reps.size() == 3);
  CHECK(result.reps[0].logical_bytes == result.reps[1].logical_bytes);
  CHECK(result.reps[1].logical_bytes == result.reps[2].logical_bytes);

  // The volume equals what the per-thread streams generate on their own.
  uint64_t expected = 0;
  for (unsigned t = 0; t < config.threads; ++t) {
    EventGenerator gen(config.seed, t, config.entries_per_thread);
    Value entry = EventGenerator::make_entry();
    for (uint64_t i = 0; i < config.entries_per_thread; ++i) gen.next(entry);
    expected += gen.bytes_generated();
  }
  CHECK(result.reps[0].logical_bytes == expected);
}

TEST_CASE("buffered lock budget is clusters plus one, per writer") {
  BenchConfig config;
  config.threads = 2;
  config.entries_per_thread = 3000;
  config.sink = "null";
  config.repetitions = 1;
  config.codec = CodecId::kNone;
  config.page_bytes = 4 * 1024;
  config.cluster_bytes = 16 * 1024;

  const BenchResult result = run_benchmark(config);
  const Repetition& rep = result.reps[0];
  CHECK(rep.lock_acquisitions == rep.clusters + 1);
}

TEST_CASE("statistics helpers behave") {
  CHECK(t_quantile_95(5) == doctest::Approx(2.776));
  CHECK(t_quantile_95(2) == doctest::Approx(12.706));
  CHECK(physical_cores() >= 1);
}
