// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sensorspace/embedding.hpp"
#include "sensorspace/geometry.hpp"
#include "sensorspace/space.hpp"

namespace sensorspace::genesis {

using embedding::Embedding;

class GenesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public GenesisError {
 public:
  using GenesisError::GenesisError;
};

class RateOutOfRange : public GenesisError {
 public:
  using GenesisError::GenesisError;
};

class GeneratorFailure : public GenesisError {
 public:
  using GenesisError::GenesisError;
};

class IoError : public GenesisError {
 public:
  using GenesisError::GenesisError;
};

struct LatentState {
  std::vector<double> values;
  int step_count = 0;

  bool operator==(const LatentState&) const = default;
};

struct CacheEntry {
  geometry::Point point;  // normalized reading coordinates
  std::uint64_t embedding_digest = 0;
  LatentState latent;
  std::string artifact_digest;
  std::int64_t created_at = 0;
  std::int64_t last_hit_at = 0;
  std::uint64_t hit_count = 0;

  bool operator==(const CacheEntry&) const = default;
};

// Timestamps are a logical clock advanced per cache operation, which keeps
// replay byte-deterministic.
struct LatentCache {
  std::vector<CacheEntry> entries;
  std::int64_t clock = 0;

  std::int64_t tick() { return clock++; }
};

struct IterationPolicy {
  int i_min = 2;
  int i_max = 10;
  int i_full = 50;
  double hit_radius = 0.15;

  void validate() const {
    if (!(0 < i_min && i_min <= i_max && i_max < i_full)) {
      throw GenesisError("iteration policy must satisfy 0 < I_min <= I_max < I_full");
    }
    if (!(hit_radius > 0)) throw GenesisError("hit radius must be positive");
  }
};

struct NearestResult {
  size_t index = 0;
  double distance = 0.0;
};

inline std::optional<NearestResult> nearest_entry(const LatentCache& cache,
                                                  const geometry::Point& point) {
  std::optional<NearestResult> best;
  for (size_t i = 0; i < cache.entries.size(); ++i) {
    const auto& e = cache.entries[i];
    if (e.point.size() != point.size()) {
      throw DimensionMismatch("cache entry dimension differs from query");
    }
    double d2 = 0.0;
    for (size_t j = 0; j < point.size(); ++j) {
      const double dx = e.point[j] - point[j];
      d2 += dx * dx;
    }
    const double d = std::sqrt(d2);
    if (!best || d < best->distance ||
        (d == best->distance &&
         e.last_hit_at > cache.entries[best->index].last_hit_at)) {
      best = NearestResult{i, d};
    }
  }
  return best;
}

// Linear ramp from I_min at distance 0 to I_max at the hit radius; a full
// cold run beyond it.
inline int iteration_budget(double distance, const IterationPolicy& policy) {
  if (distance < 0) throw GenesisError("negative distance");
  if (distance > policy.hit_radius) return policy.i_full;
  const double t = distance / policy.hit_radius;
  return static_cast<int>(
      std::ceil(policy.i_min + (policy.i_max - policy.i_min) * t));
}

struct Artifact {
  std::vector<unsigned char> bytes;
  std::string digest;
};

class IterativeGenerator {
 public:
  virtual ~IterativeGenerator() = default;
  virtual LatentState init(std::uint64_t seed) = 0;
  virtual LatentState step(const LatentState& latent, const Embedding& e) = 0;
  virtual Artifact finalize(const LatentState& latent) = 0;
  virtual int latent_dim() const = 0;

  // Batched refinement; remote backends override this to send one request.
  virtual LatentState run(const LatentState& latent, const Embedding& e,
                          int steps) {
    LatentState cur = latent;
    for (int i = 0; i < steps; ++i) cur = step(cur, e);
    return cur;
  }
};

inline std::string hex_digest(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::uint64_t embedding_digest(const Embedding& e) {
  return embedding::fnv1a64(e.values.data(), e.values.size() * sizeof(double));
}

// Convergent stand-in for a diffusion backend. Each step moves the latent
// halfway toward a fixed target T(E) = normalize(M * E), so the residual
// after k steps is (1 - eta)^k times the initial residual.
class MockGenerator final : public IterativeGenerator {
 public:
  MockGenerator(std::uint64_t seed, int latent_dim, int embed_dim)
      : seed_(seed), latent_dim_(latent_dim), embed_dim_(embed_dim) {
    mixing_.resize(static_cast<size_t>(latent_dim) * embed_dim);
    std::uint64_t state = seed ^ 0xa5a5a5a5a5a5a5a5ULL;
    for (double& m : mixing_) {
      state += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      z ^= z >> 31;
      m = static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
    }
  }

  static constexpr double kEta = 0.5;

  Embedding target(const Embedding& e) const {
    if (static_cast<int>(e.values.size()) != embed_dim_) {
      throw DimensionMismatch("embedding dimension differs from generator");
    }
    Embedding t;
    t.values.assign(latent_dim_, 0.0);
    for (int r = 0; r < latent_dim_; ++r) {
      double s = 0.0;
      for (int c = 0; c < embed_dim_; ++c) {
        s += mixing_[static_cast<size_t>(r) * embed_dim_ + c] * e.values[c];
      }
      t.values[r] = s;
    }
    const double n = embedding::norm(t);
    if (n > 0) {
      for (double& v : t.values) v /= n;
    }
    return t;
  }

  LatentState init(std::uint64_t seed) override {
    LatentState l;
    l.values.resize(latent_dim_);
    std::uint64_t state = seed_ ^ seed;
    for (double& v : l.values) {
      state += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      z ^= z >> 31;
      v = static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
    }
    return l;
  }

  LatentState step(const LatentState& latent, const Embedding& e) override {
    if (static_cast<int>(latent.values.size()) != latent_dim_) {
      throw DimensionMismatch("latent dimension differs from generator");
    }
    const Embedding t = target(e);
    LatentState out;
    out.values.resize(latent_dim_);
    for (int i = 0; i < latent_dim_; ++i) {
      out.values[i] =
          latent.values[i] + kEta * (t.values[i] - latent.values[i]);
    }
    out.step_count = latent.step_count + 1;
    return out;
  }

  Artifact finalize(const LatentState& latent) override {
    Artifact a;
    a.bytes.reserve(latent.values.size() * 4);
    for (double v : latent.values) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      static_assert(sizeof(bits) == sizeof(f));
      std::memcpy(&bits, &f, sizeof(bits));
      a.bytes.push_back(static_cast<unsigned char>(bits & 0xff));
      a.bytes.push_back(static_cast<unsigned char>((bits >> 8) & 0xff));
      a.bytes.push_back(static_cast<unsigned char>((bits >> 16) & 0xff));
      a.bytes.push_back(static_cast<unsigned char>((bits >> 24) & 0xff));
    }
    a.digest = hex_digest(embedding::fnv1a64(a.bytes.data(), a.bytes.size()));
    return a;
  }

  int latent_dim() const override { return latent_dim_; }

 private:
  std::uint64_t seed_;
  int latent_dim_;
  int embed_dim_;
  std::vector<double> mixing_;
};

struct GenerationResult {
  std::string artifact_digest;
  LatentState latent;
  int iterations_used = 0;
  bool cache_hit = false;
};

inline GenerationResult generate(const space::SensorSpace& sp,
                                 const std::map<std::string, double>& reading,
                                 LatentCache& cache,
                                 IterativeGenerator& generator,
                                 const IterationPolicy& policy,
                                 std::uint64_t seed) {
  policy.validate();
  const auto interp = space::interpolate(sp, reading);
  const auto nr = space::normalize_reading(sp.schema, reading);

  GenerationResult res;
  LatentState latent;
  int budget = policy.i_full;
  const auto nearest = nearest_entry(cache, nr.point);
  if (nearest && nearest->distance <= policy.hit_radius) {
    res.cache_hit = true;
    budget = iteration_budget(nearest->distance, policy);
    latent = cache.entries[nearest->index].latent;
    auto& hit = cache.entries[nearest->index];
    hit.last_hit_at = cache.tick();
    ++hit.hit_count;
  } else {
    latent = generator.init(seed);
  }

  latent = generator.run(latent, interp.embedding, budget);
  const Artifact artifact = generator.finalize(latent);

  res.latent = latent;
  res.iterations_used = budget;
  res.artifact_digest = artifact.digest;

  CacheEntry entry;
  entry.point = nr.point;
  entry.embedding_digest = embedding_digest(interp.embedding);
  entry.latent = latent;
  entry.artifact_digest = artifact.digest;
  entry.created_at = cache.tick();
  entry.last_hit_at = entry.created_at;
  cache.entries.push_back(std::move(entry));
  return res;
}

inline void evict(LatentCache& cache, size_t capacity) {
  if (capacity < 1) throw GenesisError("capacity must be >= 1");
  while (cache.entries.size() > capacity) {
    size_t victim = 0;
    for (size_t i = 1; i < cache.entries.size(); ++i) {
      if (cache.entries[i].last_hit_at < cache.entries[victim].last_hit_at) {
        victim = i;
      }
    }
    cache.entries.erase(cache.entries.begin() + victim);
  }
}

inline void save_cache(const LatentCache& cache, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& e : cache.entries) {
    nlohmann::json j{{"point", e.point},
                     {"embedding_digest", hex_digest(e.embedding_digest)},
                     {"latent", e.latent.values},
                     {"step_count", e.latent.step_count},
                     {"artifact_digest", e.artifact_digest},
                     {"created_at", e.created_at},
                     {"last_hit_at", e.last_hit_at},
                     {"hit_count", e.hit_count}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

struct LoadResult {
  LatentCache cache;
  int corrupt_lines = 0;
};

inline LoadResult load_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  LoadResult res;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CacheEntry e;
      e.point = j.at("point").get<std::vector<double>>();
      e.embedding_digest =
          std::stoull(j.at("embedding_digest").get<std::string>(), nullptr, 16);
      e.latent.values = j.at("latent").get<std::vector<double>>();
      e.latent.step_count = j.value("step_count", 0);
      e.artifact_digest = j.at("artifact_digest").get<std::string>();
      e.created_at = j.at("created_at").get<std::int64_t>();
      e.last_hit_at = j.at("last_hit_at").get<std::int64_t>();
      e.hit_count = j.at("hit_count").get<std::uint64_t>();
      res.cache.entries.push_back(std::move(e));
    } catch (const std::exception&) {
      ++res.corrupt_lines;
    }
  }
  for (const auto& e : res.cache.entries) {
    res.cache.clock = std::max(res.cache.clock, e.last_hit_at + 1);
    res.cache.clock = std::max(res.cache.clock, e.created_at + 1);
  }
  return res;
}

// Independent retention draws from a splitmix64 stream; point records of
// any type (Gaussian splat points in the real pipeline).
template <typename Record>
std::vector<Record> apply_density_dropout(const std::vector<Record>& points,
                                          double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw RateOutOfRange("dropout rate must lie in [0,1]");
  }
  std::vector<Record> kept;
  kept.reserve(points.size());
  std::uint64_t state = seed;
  for (const auto& p : points) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
    if (u >= rate) kept.push_back(p);
  }
  return kept;
}

// Default density encoder: denser phenomena keep more points.
inline double density_rate(const space::SensorSchema& schema,
                           const std::map<std::string, double>& reading,
                           const std::string& axis_name) {
  const int idx = space::sensor_index(schema, axis_name);
  const auto nr = space::normalize_reading(schema, reading);
  return 1.0 - nr.point[idx];
}

struct BenchReport {
  long total_iterations_warm = 0;
  long total_iterations_cold = 0;
  double speedup = 1.0;
  double hit_rate = 0.0;
};

// Runs the workload with the cache enabled and disabled and compares
// iteration totals.
inline BenchReport bench_cache(
    const space::SensorSpace& sp, IterativeGenerator& generator,
    const IterationPolicy& policy,
    const std::vector<std::map<std::string, double>>& workload,
    std::uint64_t seed = 0) {
  BenchReport report;
  LatentCache warm_cache;
  long hits = 0;
  for (const auto& reading : workload) {
    const auto r = generate(sp, reading, warm_cache, generator, policy, seed);
    report.total_iterations_warm += r.iterations_used;
    if (r.cache_hit) ++hits;
  }
  report.total_iterations_cold =
      static_cast<long>(workload.size()) * policy.i_full;
  report.speedup =
      report.total_iterations_warm > 0
          ? static_cast<double>(report.total_iterations_cold) /
                static_cast<double>(report.total_iterations_warm)
          : 1.0;
  report.hit_rate =
      workload.empty() ? 0.0
                       : static_cast<double>(hits) /
                             static_cast<double>(workload.size());
  return report;
}

}  // namespace sensorspace::genesis
