// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace sensorspace::embedding {

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthMismatch : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};

class ZeroVector : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};

class WeightsNotNormalized : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};

class ProviderUnavailable : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};

struct Embedding {
  std::vector<double> values;

  bool operator==(const Embedding&) const = default;
};

inline double dot(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw LengthMismatch("embedding dimensions differ");
  }
  double s = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

inline double norm(const Embedding& a) { return std::sqrt(dot(a, a)); }

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw ZeroVector("zero-length embedding");
  return dot(a, b) / (na * nb);
}

// Componentwise sum of w_i * E_i; weights must already form an affine
// combination. Raw vectors are blended, no renormalization.
inline Embedding blend(const std::vector<Embedding>& embeddings,
                       const std::vector<double>& weights) {
  if (embeddings.empty() || embeddings.size() != weights.size()) {
    throw LengthMismatch("embeddings and weights differ in count");
  }
  const size_t dim = embeddings[0].values.size();
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (std::abs(wsum - 1.0) > 1e-6) {
    throw WeightsNotNormalized("weights sum to " + std::to_string(wsum));
  }
  Embedding out;
  out.values.assign(dim, 0.0);
  for (size_t k = 0; k < embeddings.size(); ++k) {
    if (embeddings[k].values.size() != dim) {
      throw LengthMismatch("embedding dimensions differ");
    }
    for (size_t i = 0; i < dim; ++i) {
      out.values[i] += weights[k] * embeddings[k].values[i];
    }
  }
  return out;
}

inline Embedding lerp(const Embedding& a, const Embedding& b, double t) {
  if (a.values.size() != b.values.size()) {
    throw LengthMismatch("embedding dimensions differ");
  }
  Embedding out;
  out.values.resize(a.values.size());
  for (size_t i = 0; i < a.values.size(); ++i) {
    out.values[i] = (1.0 - t) * a.values[i] + t * b.values[i];
  }
  return out;
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<Embedding> embed(
      const std::vector<std::string>& texts) = 0;
  virtual int dim() const = 0;
  virtual std::string id() const = 0;
};

inline std::uint64_t fnv1a64(const void* data, size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

// Deterministic stand-in for a text encoder: a unit vector whose
// components come from a splitmix64 stream keyed by (seed, hash(text)).
// Bit-stable across runs and platforms.
class SyntheticProvider final : public EmbeddingProvider {
 public:
  explicit SyntheticProvider(std::uint64_t seed, int dim = 64)
      : seed_(seed), dim_(dim) {
    if (dim < 2) throw EmbeddingError("embedding dimension must be >= 2");
  }

  std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
      std::uint64_t state = seed_ ^ fnv1a64(text);
      Embedding e;
      e.values.resize(dim_);
      double sq = 0.0;
      for (int i = 0; i < dim_; ++i) {
        const std::uint64_t r = next(state);
        // uniform in [-1, 1)
        const double v = static_cast<double>(r >> 11) * 0x1.0p-52 - 1.0;
        e.values[i] = v;
        sq += v * v;
      }
      const double inv = 1.0 / std::sqrt(sq);
      for (double& v : e.values) v *= inv;
      out.push_back(std::move(e));
    }
    return out;
  }

  int dim() const override { return dim_; }

  std::string id() const override {
    return "synthetic-" + std::to_string(seed_) + "-d" + std::to_string(dim_);
  }

 private:
  static std::uint64_t next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  int dim_;
};

}  // namespace sensorspace::embedding
