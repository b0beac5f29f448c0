// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sensorspace/genesis.hpp"
#include "sensorspace/space.hpp"

using namespace sensorspace;
using genesis::CacheEntry;
using genesis::IterationPolicy;
using genesis::LatentCache;

namespace {

space::SensorSpace test_space(embedding::EmbeddingProvider& provider) {
  space::SensorSchema s;
  s.schema_id = "room";
  s.sensors = {{"temp", "C", -30, 40}, {"humidity", "%", 0, 100}};
  s.prompt_template = "A calm room at {temp} C and {humidity} % humidity";
  return space::build_space(s, {}, provider);
}

CacheEntry entry_at(double x, std::int64_t stamp) {
  CacheEntry e;
  e.point = {x};
  e.latent.values = {x};
  e.created_at = stamp;
  e.last_hit_at = stamp;
  return e;
}

double latent_distance(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double d2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d2);
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("nearest entry: miss, exact hit, linear scan") {
  LatentCache cache;
  CHECK_FALSE(genesis::nearest_entry(cache, {0.4}).has_value());

  cache.entries.push_back(entry_at(0.0, 0));
  const auto exact = genesis::nearest_entry(cache, {0.0});
  REQUIRE(exact.has_value());
  CHECK(exact->distance == 0.0);

  cache.entries.push_back(entry_at(1.0, 1));
  const auto near = genesis::nearest_entry(cache, {0.4});
  REQUIRE(near.has_value());
  CHECK(near->index == 0);
  CHECK(near->distance == Catch::Approx(0.4));

  CHECK_THROWS_AS(genesis::nearest_entry(cache, {0.4, 0.4}),
                  genesis::DimensionMismatch);
}

TEST_CASE("ties prefer the most recently hit entry") {
  LatentCache cache;
  cache.entries.push_back(entry_at(0.0, 0));
  cache.entries.push_back(entry_at(1.0, 5));
  const auto mid = genesis::nearest_entry(cache, {0.5});
  REQUIRE(mid.has_value());
  CHECK(mid->index == 1);
}

TEST_CASE("iteration budget ramps linearly and caps at the full run") {
  const IterationPolicy policy;
  CHECK(genesis::iteration_budget(0.0, policy) == 2);
  CHECK(genesis::iteration_budget(policy.hit_radius, policy) == 10);
  CHECK(genesis::iteration_budget(policy.hit_radius + 1e-9, policy) == 50);
  CHECK(genesis::iteration_budget(10.0, policy) == 50);
  int prev = 0;
  for (double d = 0.0; d <= 0.3; d += 0.003) {
    const int b = genesis::iteration_budget(d, policy);
    CHECK(b >= prev);
    prev = b;
  }
}

TEST_CASE("cold start runs the full budget, repeats hit the cache") {
  embedding::SyntheticProvider provider(42, 32);
  const auto sp = test_space(provider);
  genesis::MockGenerator generator(7, 16, 32);
  const IterationPolicy policy;
  LatentCache cache;

  const auto first = genesis::generate(sp, {{"temp", 20}, {"humidity", 60}},
                                       cache, generator, policy, 1);
  CHECK_FALSE(first.cache_hit);
  CHECK(first.iterations_used == 50);
  CHECK(cache.entries.size() == 1);

  const auto second = genesis::generate(sp, {{"temp", 20}, {"humidity", 60}},
                                        cache, generator, policy, 1);
  CHECK(second.cache_hit);
  CHECK(second.iterations_used == 2);

  // mock closed form: two more halving steps shrink the residual by 1/4
  const auto interp = space::interpolate(sp, {{"temp", 20}, {"humidity", 60}});
  const auto target = generator.target(interp.embedding);
  const double eps0 = latent_distance(first.latent.values, target.values);
  const double eps2 = latent_distance(second.latent.values, target.values);
  CHECK(eps2 <= 0.25 * eps0 + 1e-15);
}

TEST_CASE("warm/cold agreement follows the mock residual bound") {
  embedding::SyntheticProvider provider(42, 32);
  const auto sp = test_space(provider);
  genesis::MockGenerator generator(7, 16, 32);
  oracles::Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto interp = space::interpolate(
        sp, {{"temp", rng.uniform(-30, 40)}, {"humidity", rng.uniform(0, 100)}});
    const auto target = generator.target(interp.embedding);
    genesis::LatentState latent = generator.init(trial);
    const double initial = latent_distance(latent.values, target.values);
    const int budget = 2 + rng.below(9);
    latent = generator.run(latent, interp.embedding, budget);
    const double residual = latent_distance(latent.values, target.values);
    CHECK(residual <= std::pow(0.5, budget) * initial + 1e-12);
  }
}

TEST_CASE("drifting workload stays warm and saves iterations") {
  embedding::SyntheticProvider provider(42, 32);
  const auto sp = test_space(provider);
  genesis::MockGenerator generator(7, 16, 32);
  const IterationPolicy policy;

  // triangle-wave drift: 0.02 normalized units per step along the temp axis
  std::vector<std::map<std::string, double>> workload;
  double x = 0.0;
  int dir = 1;
  for (int i = 0; i < 100; ++i) {
    workload.push_back({{"temp", -30 + x * 70.0}, {"humidity", 50.0}});
    x += dir * 0.02;
    if (x > 1.0) {
      x = 2.0 - x;
      dir = -1;
    } else if (x < 0.0) {
      x = -x;
      dir = 1;
    }
  }
  const auto report = genesis::bench_cache(sp, generator, policy, workload);
  CHECK(report.speedup >= 5.0);
  CHECK(report.total_iterations_warm <= 10 * 100);
}

TEST_CASE("eviction keeps the most recently hit entries") {
  LatentCache cache;
  for (int i = 0; i < 5; ++i) cache.entries.push_back(entry_at(i * 0.1, i));
  genesis::evict(cache, 5);
  CHECK(cache.entries.size() == 5);

  // hit entry 1 (point 0.1), then shrink to capacity 1
  cache.entries[1].last_hit_at = 100;
  genesis::evict(cache, 1);
  REQUIRE(cache.entries.size() == 1);
  CHECK(cache.entries[0].point == geometry::Point{0.1});
}

TEST_CASE("eviction order matches a brute-force timestamp sort") {
  oracles::Rng rng(12);
  LatentCache cache;
  for (int i = 0; i < 30; ++i) {
    auto e = entry_at(i * 0.01, static_cast<std::int64_t>(rng.next_u64() % 1000));
    cache.entries.push_back(e);
  }
  auto sorted = cache.entries;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.last_hit_at > b.last_hit_at;
  });
  genesis::evict(cache, 10);
  REQUIRE(cache.entries.size() == 10);
  for (const auto& e : cache.entries) {
    const bool kept = std::any_of(sorted.begin(), sorted.begin() + 10,
                                  [&](const auto& s) {
                                    return s.last_hit_at == e.last_hit_at &&
                                           s.point == e.point;
                                  });
    CHECK(kept);
  }
}

TEST_CASE("cache file round-trips exactly") {
  TempFile file("sensorspace_cache_test.jsonl");
  LatentCache cache;
  for (int i = 0; i < 3; ++i) {
    auto e = entry_at(i * 0.25, i);
    e.embedding_digest = 0xdeadbeef00ULL + i;
    e.artifact_digest = genesis::hex_digest(1000 + i);
    e.hit_count = i;
    e.latent.values = {0.1 * i, -0.2 * i, 3.0};
    e.latent.step_count = 50;
    cache.entries.push_back(e);
  }
  genesis::save_cache(cache, file.path);
  const auto loaded = genesis::load_cache(file.path);
  CHECK(loaded.corrupt_lines == 0);
  CHECK(loaded.cache.entries == cache.entries);
}

TEST_CASE("empty cache file loads as an empty cache") {
  TempFile file("sensorspace_cache_empty.jsonl");
  std::ofstream(file.path).close();
  const auto loaded = genesis::load_cache(file.path);
  CHECK(loaded.cache.entries.empty());
  CHECK(loaded.corrupt_lines == 0);
}

TEST_CASE("malformed lines are skipped with a warning count") {
  TempFile file("sensorspace_cache_bad.jsonl");
  LatentCache cache;
  for (int i = 0; i < 10; ++i) cache.entries.push_back(entry_at(i * 0.1, i));
  genesis::save_cache(cache, file.path);
  {
    std::ifstream in(file.path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    lines[4] = "{ not json";
    in.close();
    std::ofstream out(file.path, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
  }
  const auto loaded = genesis::load_cache(file.path);
  CHECK(loaded.cache.entries.size() == 9);
  CHECK(loaded.corrupt_lines == 1);
}

TEST_CASE("density dropout keeps all, none, or a binomial share") {
  std::vector<int> points(10000);
  for (int i = 0; i < 10000; ++i) points[i] = i;

  CHECK(genesis::apply_density_dropout(points, 0.0, 1).size() == 10000);
  CHECK(genesis::apply_density_dropout(points, 1.0, 1).empty());
  CHECK_THROWS_AS(genesis::apply_density_dropout(points, 1.5, 1),
                  genesis::RateOutOfRange);

  const auto kept = genesis::apply_density_dropout(points, 0.3, 99);
  const double sigma = std::sqrt(10000 * 0.3 * 0.7);
  CHECK(std::abs(static_cast<double>(kept.size()) - 7000.0) <= 3 * sigma);

  // subset property and per-seed determinism
  for (size_t i = 1; i < kept.size(); ++i) CHECK(kept[i - 1] < kept[i]);
  CHECK(genesis::apply_density_dropout(points, 0.3, 99) == kept);
}

TEST_CASE("density rate is the inverted normalized axis value") {
  space::SensorSchema s;
  s.schema_id = "dust";
  s.sensors = {{"pm", "ug/m3", 0, 200}};
  s.prompt_template = "{pm}";
  CHECK(genesis::density_rate(s, {{"pm", 200}}, "pm") == 0.0);
  CHECK(genesis::density_rate(s, {{"pm", 0}}, "pm") == 1.0);
  CHECK(genesis::density_rate(s, {{"pm", 100}}, "pm") == Catch::Approx(0.5));
  CHECK_THROWS_AS(genesis::density_rate(s, {{"pm", 100}}, "nox"),
                  space::UnknownSensor);
}

TEST_CASE("bench: identical readings reach the closed-form speedup") {
  embedding::SyntheticProvider provider(42, 32);
  const auto sp = test_space(provider);
  genesis::MockGenerator generator(7, 16, 32);
  const IterationPolicy policy;
  std::vector<std::map<std::string, double>> workload(
      50, {{"temp", 20.0}, {"humidity", 60.0}});
  const auto report = genesis::bench_cache(sp, generator, policy, workload);
  CHECK(report.total_iterations_warm == 50 + 49 * 2);
  CHECK(report.total_iterations_cold == 50 * 50);
  CHECK(report.speedup >= 16.0);
  CHECK(report.hit_rate == Catch::Approx(49.0 / 50.0));
}

TEST_CASE("bench: all-distant readings give no speedup") {
  embedding::SyntheticProvider provider(42, 32);
  const auto sp = test_space(provider);
  genesis::MockGenerator generator(7, 16, 32);
  const IterationPolicy policy;
  std::vector<std::map<std::string, double>> workload = {
      {{"temp", -30.0}, {"humidity", 0.0}},
      {{"temp", 40.0}, {"humidity", 0.0}},
      {{"temp", -30.0}, {"humidity", 100.0}},
      {{"temp", 40.0}, {"humidity", 100.0}},
  };
  const auto report = genesis::bench_cache(sp, generator, policy, workload);
  CHECK(report.speedup == Catch::Approx(1.0));
  CHECK(report.hit_rate == 0.0);
}

TEST_CASE("replaying a saved cache reproduces identical digests") {
  TempFile file("sensorspace_cache_replay.jsonl");
  embedding::SyntheticProvider provider(42, 32);
  const auto sp = test_space(provider);
  genesis::MockGenerator generator(7, 16, 32);
  const IterationPolicy policy;

  oracles::Rng rng(21);
  std::vector<std::map<std::string, double>> workload;
  for (int i = 0; i < 20; ++i) {
    workload.push_back(
        {{"temp", rng.uniform(-30, 40)}, {"humidity", rng.uniform(0, 100)}});
  }

  LatentCache cache;
  std::vector<std::string> digests;
  for (const auto& r : workload) {
    digests.push_back(
        genesis::generate(sp, r, cache, generator, policy, 1).artifact_digest);
  }
  genesis::save_cache(cache, file.path);

  auto replay = genesis::load_cache(file.path).cache;
  // re-run the same workload against a fresh cache; digests must agree
  LatentCache cache2;
  for (size_t i = 0; i < workload.size(); ++i) {
    const auto r = genesis::generate(sp, workload[i], cache2, generator,
                                     policy, 1);
    CHECK(r.artifact_digest == digests[i]);
  }
  CHECK(replay.entries.size() == cache.entries.size());
}
