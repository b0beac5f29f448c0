// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sensorspace::geometry {

// Tolerances; fixed here, surfaced through service configuration.
inline constexpr double kContainmentEps = 1e-9;
inline constexpr double kDuplicateEps = 1e-12;
inline constexpr int kMaxDimension = 6;

using Point = std::vector<double>;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionTooLow : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class DuplicatePoints : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class DegenerateSimplex : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

struct Simplex {
  std::vector<int> vertex_ids;  // n+1 distinct point indices
};

// Neighbor entry kBoundary marks a convex-hull facet (or a facet whose
// twin was a flat sliver removed during degeneracy filtering).
inline constexpr int kBoundary = -1;

struct Tessellation {
  int dim = 0;
  std::vector<Point> points;
  std::vector<Simplex> simplices;
  // neighbors[s][i] = simplex across the facet opposite vertex i of s.
  std::vector<std::vector<int>> neighbors;
};

struct BarycentricCoords {
  std::vector<double> weights;  // length n+1, sums to 1
  int simplex_id = -1;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic jitter in [-0.5, 0.5) keyed by (point, axis).
inline double jitter(std::uint64_t seed, int point, int axis) {
  std::uint64_t s = seed ^ (static_cast<std::uint64_t>(point) << 32) ^
                    static_cast<std::uint64_t>(axis);
  std::uint64_t r = splitmix64(s);
  return static_cast<double>(r >> 11) * 0x1.0p-53 - 0.5;
}

// Gaussian elimination with partial pivoting; returns false when singular.
inline bool solve_linear(std::vector<std::vector<double>> a,
                         std::vector<double>& b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    double s = b[col];
    for (int c = col + 1; c < n; ++c) s -= a[col][c] * b[c];
    b[col] = s / a[col][col];
  }
  return true;
}

inline double determinant(std::vector<std::vector<double>> a) {
  const int n = static_cast<int>(a.size());
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-300) return 0.0;
    if (pivot != col) {
      std::swap(a[col], a[pivot]);
      det = -det;
    }
    det *= a[col][col];
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return det;
}

// Hyperplane through d points in R^d: normal via cofactor expansion of the
// edge matrix, offset so that the plane is {x : normal . x = offset}.
inline void hyperplane(const std::vector<std::vector<double>>& pts,
                       const std::vector<int>& ids, std::vector<double>& normal,
                       double& offset) {
  const int d = static_cast<int>(pts[0].size());
  std::vector<std::vector<double>> edges(d - 1, std::vector<double>(d));
  for (int i = 0; i < d - 1; ++i) {
    for (int j = 0; j < d; ++j) {
      edges[i][j] = pts[ids[i + 1]][j] - pts[ids[0]][j];
    }
  }
  normal.assign(d, 0.0);
  std::vector<std::vector<double>> minor(d - 1, std::vector<double>(d - 1));
  for (int j = 0; j < d; ++j) {
    for (int r = 0; r < d - 1; ++r) {
      int cc = 0;
      for (int c = 0; c < d; ++c) {
        if (c == j) continue;
        minor[r][cc++] = edges[r][c];
      }
    }
    const double m = determinant(minor);
    normal[j] = ((j % 2) == 0) ? m : -m;
  }
  offset = 0.0;
  for (int j = 0; j < d; ++j) offset += normal[j] * pts[ids[0]][j];
}

struct HullFacet {
  std::vector<int> vertices;  // d indices, sorted
  std::vector<double> normal;
  double offset = 0.0;
  bool alive = true;
};

// Incremental convex hull in R^d over points in general position.
// Every input point is assumed to be a hull vertex (true for lifted
// paraboloid points), so each insertion sees at least one visible facet.
class IncrementalHull {
 public:
  explicit IncrementalHull(const std::vector<std::vector<double>>& pts)
      : pts_(pts), dim_(static_cast<int>(pts[0].size())) {
    build();
  }

  const std::vector<HullFacet>& facets() const { return facets_; }

 private:
  void build() {
    const int d = dim_;
    std::vector<int> seed = initial_simplex();
    interior_.assign(d, 0.0);
    for (int id : seed) {
      for (int j = 0; j < d; ++j) interior_[j] += pts_[id][j];
    }
    for (int j = 0; j < d; ++j) interior_[j] /= (d + 1);

    for (int skip = 0; skip <= d; ++skip) {
      std::vector<int> face;
      for (int i = 0; i <= d; ++i) {
        if (i != skip) face.push_back(seed[i]);
      }
      add_facet(face);
    }
    std::vector<char> used(pts_.size(), 0);
    for (int id : seed) used[id] = 1;
    for (int i = 0; i < static_cast<int>(pts_.size()); ++i) {
      if (!used[i]) insert_point(i);
    }
  }

  // d+1 affinely independent points, chosen fat: each step takes the point
  // with the largest residual after projecting out the span so far. A
  // well-conditioned seed keeps the interior reference point away from the
  // facet planes even when most inputs are nearly coplanar.
  std::vector<int> initial_simplex() {
    const int d = dim_;
    const int n = static_cast<int>(pts_.size());
    std::vector<int> chosen = {0};
    std::vector<char> used(n, 0);
    used[0] = 1;
    std::vector<std::vector<double>> basis;  // orthonormalized edge vectors
    while (static_cast<int>(chosen.size()) <= d) {
      int best = -1;
      double best_norm = 0.0;
      std::vector<double> best_dir;
      for (int cand = 1; cand < n; ++cand) {
        if (used[cand]) continue;
        std::vector<double> v(d);
        for (int j = 0; j < d; ++j) v[j] = pts_[cand][j] - pts_[0][j];
        for (const auto& b : basis) {
          double dot = 0.0;
          for (int j = 0; j < d; ++j) dot += v[j] * b[j];
          for (int j = 0; j < d; ++j) v[j] -= dot * b[j];
        }
        double norm = 0.0;
        for (int j = 0; j < d; ++j) norm += v[j] * v[j];
        norm = std::sqrt(norm);
        if (norm > best_norm) {
          best_norm = norm;
          best = cand;
          best_dir = std::move(v);
        }
      }
      if (best < 0 || best_norm <= 1e-14) {
        throw DimensionTooLow("points are affinely dependent");
      }
      for (double& c : best_dir) c /= best_norm;
      basis.push_back(std::move(best_dir));
      chosen.push_back(best);
      used[best] = 1;
    }
    return chosen;
  }

  void add_facet(std::vector<int> face) {
    std::sort(face.begin(), face.end());
    HullFacet f;
    f.vertices = std::move(face);
    hyperplane(pts_, f.vertices, f.normal, f.offset);
    // orient outward: interior on the negative side
    double side = -f.offset;
    for (int j = 0; j < dim_; ++j) side += f.normal[j] * interior_[j];
    if (side > 0) {
      for (double& c : f.normal) c = -c;
      f.offset = -f.offset;
    }
    facets_.push_back(std::move(f));
  }

  void insert_point(int id) {
    std::vector<int> visible;
    for (int fi = 0; fi < static_cast<int>(facets_.size()); ++fi) {
      const HullFacet& f = facets_[fi];
      if (!f.alive) continue;
      double side = -f.offset;
      for (int j = 0; j < dim_; ++j) side += f.normal[j] * pts_[id][j];
      if (side > 0) visible.push_back(fi);
    }
    if (visible.empty()) return;  // numerically interior; keep hull as-is
    // Ridges seen exactly once among visible facets form the horizon.
    std::map<std::vector<int>, int> ridge_count;
    for (int fi : visible) {
      const auto& verts = facets_[fi].vertices;
      for (size_t skip = 0; skip < verts.size(); ++skip) {
        std::vector<int> ridge;
        for (size_t i = 0; i < verts.size(); ++i) {
          if (i != skip) ridge.push_back(verts[i]);
        }
        ++ridge_count[ridge];
      }
      facets_[fi].alive = false;
    }
    for (const auto& [ridge, count] : ridge_count) {
      if (count != 1) continue;
      std::vector<int> face = ridge;
      face.push_back(id);
      add_facet(std::move(face));
    }
  }

  const std::vector<std::vector<double>>& pts_;
  int dim_;
  std::vector<double> interior_;
  std::vector<HullFacet> facets_;
};

}  // namespace detail

// Unsigned n-volume of the simplex spanned by the given point ids.
inline double simplex_volume_of(const std::vector<Point>& points,
                                const std::vector<int>& ids) {
  const int n = static_cast<int>(points[0].size());
  std::vector<std::vector<double>> edges(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      edges[i][j] = points[ids[i + 1]][j] - points[ids[0]][j];
    }
  }
  double det = detail::determinant(edges);
  double fact = 1.0;
  for (int i = 2; i <= n; ++i) fact *= i;
  return std::abs(det) / fact;
}

// Delaunay tessellation by lifting onto the paraboloid in n+1 dimensions
// and extracting the lower convex hull. Cospherical degeneracies are
// broken by a deterministic jitter applied only to the hull computation;
// stored coordinates stay untouched. Flat simplices created by the jitter
// (zero volume on the true coordinates) are dropped afterwards.
inline Tessellation delaunay_tessellate(const std::vector<Point>& points) {
  if (points.empty()) throw DimensionTooLow("no points");
  const int n = static_cast<int>(points[0].size());
  if (n < 1) throw DimensionTooLow("zero-dimensional points");
  if (n > kMaxDimension) {
    throw GeometryError("dimension exceeds supported maximum of " +
                        std::to_string(kMaxDimension));
  }
  const int npts = static_cast<int>(points.size());
  if (npts < n + 1) throw DimensionTooLow("need at least n+1 points");
  for (const auto& p : points) {
    if (static_cast<int>(p.size()) != n) {
      throw GeometryError("inconsistent point dimensions");
    }
    for (double c : p) {
      if (!std::isfinite(c)) throw GeometryError("non-finite coordinate");
    }
  }

  // bounding box diagonal sets the perturbation and duplicate scales
  std::vector<double> lo(points[0]), hi(points[0]);
  for (const auto& p : points) {
    for (int j = 0; j < n; ++j) {
      lo[j] = std::min(lo[j], p[j]);
      hi[j] = std::max(hi[j], p[j]);
    }
  }
  double diag2 = 0.0;
  for (int j = 0; j < n; ++j) diag2 += (hi[j] - lo[j]) * (hi[j] - lo[j]);
  const double diag = std::sqrt(diag2);
  const double dup_eps = std::max(kDuplicateEps, kDuplicateEps * diag);

  for (int i = 0; i < npts; ++i) {
    for (int k = i + 1; k < npts; ++k) {
      double d2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double dx = points[i][j] - points[k][j];
        d2 += dx * dx;
      }
      if (std::sqrt(d2) < dup_eps) {
        throw DuplicatePoints("points " + std::to_string(i) + " and " +
                              std::to_string(k) + " coincide");
      }
    }
  }

  // affine rank check on the true coordinates
  {
    std::vector<std::vector<double>> basis;
    for (int i = 1; i < npts; ++i) {
      std::vector<double> v(n);
      for (int j = 0; j < n; ++j) v[j] = points[i][j] - points[0][j];
      for (const auto& b : basis) {
        double dot = 0.0, nb = 0.0;
        for (int j = 0; j < n; ++j) {
          dot += v[j] * b[j];
          nb += b[j] * b[j];
        }
        for (int j = 0; j < n; ++j) v[j] -= (dot / nb) * b[j];
      }
      double norm = 0.0;
      for (int j = 0; j < n; ++j) norm += v[j] * v[j];
      if (std::sqrt(norm) > 1e-9 * std::max(1.0, diag)) basis.push_back(v);
      if (static_cast<int>(basis.size()) == n) break;
    }
    if (static_cast<int>(basis.size()) < n) {
      throw DimensionTooLow("points span an affine subspace of dimension < n");
    }
  }

  // exactly n+1 points: the rank check above already proves they form a
  // single nondegenerate simplex, no hull computation needed
  if (npts == n + 1) {
    Tessellation tess;
    tess.dim = n;
    tess.points = points;
    Simplex s;
    for (int i = 0; i <= n; ++i) s.vertex_ids.push_back(i);
    tess.simplices.push_back(std::move(s));
    tess.neighbors.assign(1, std::vector<int>(n + 1, kBoundary));
    return tess;
  }

  constexpr std::uint64_t kPerturbSeed = 0x5eed5eed5eed5eedULL;
  const double eps = 1e-9 * diag;
  std::vector<std::vector<double>> lifted(npts, std::vector<double>(n + 1));
  for (int i = 0; i < npts; ++i) {
    double sq = 0.0;
    for (int j = 0; j < n; ++j) {
      const double c = points[i][j] + eps * detail::jitter(kPerturbSeed, i, j);
      lifted[i][j] = c;
      sq += c * c;
    }
    lifted[i][n] = sq;
  }

  detail::IncrementalHull hull(lifted);

  Tessellation tess;
  tess.dim = n;
  tess.points = points;
  const double vol_floor = 1e-8 * std::pow(std::max(diag, 1e-300), n);
  for (const auto& f : hull.facets()) {
    if (!f.alive) continue;
    if (f.normal[n] >= -1e-12) continue;  // keep lower-hull facets only
    if (simplex_volume_of(points, f.vertices) <= vol_floor) continue;
    Simplex s;
    s.vertex_ids = f.vertices;  // already sorted
    tess.simplices.push_back(std::move(s));
  }
  std::sort(tess.simplices.begin(), tess.simplices.end(),
            [](const Simplex& a, const Simplex& b) {
              return a.vertex_ids < b.vertex_ids;
            });

  // neighbor table via shared facets (n common vertices)
  const int ns = static_cast<int>(tess.simplices.size());
  tess.neighbors.assign(ns, std::vector<int>(n + 1, kBoundary));
  std::map<std::vector<int>, std::pair<int, int>> facet_owner;  // -> (simplex, opp vertex slot)
  for (int si = 0; si < ns; ++si) {
    const auto& verts = tess.simplices[si].vertex_ids;
    for (int skip = 0; skip <= n; ++skip) {
      std::vector<int> facet;
      for (int i = 0; i <= n; ++i) {
        if (i != skip) facet.push_back(verts[i]);
      }
      auto it = facet_owner.find(facet);
      if (it == facet_owner.end()) {
        facet_owner.emplace(std::move(facet), std::make_pair(si, skip));
      } else {
        tess.neighbors[si][skip] = it->second.first;
        tess.neighbors[it->second.first][it->second.second] = si;
      }
    }
  }
  return tess;
}

inline BarycentricCoords barycentric_coordinates(const Tessellation& tess,
                                                 int simplex_id,
                                                 const Point& p) {
  if (simplex_id < 0 || simplex_id >= static_cast<int>(tess.simplices.size())) {
    throw GeometryError("invalid simplex id");
  }
  const int n = tess.dim;
  const auto& ids = tess.simplices[simplex_id].vertex_ids;
  const Point& v0 = tess.points[ids[0]];
  std::vector<std::vector<double>> a(n, std::vector<double>(n));
  std::vector<double> rhs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a[i][j] = tess.points[ids[j + 1]][i] - v0[i];
    }
    rhs[i] = p[i] - v0[i];
  }
  if (!detail::solve_linear(std::move(a), rhs)) {
    throw DegenerateSimplex("simplex vertices are affinely dependent");
  }
  BarycentricCoords bc;
  bc.simplex_id = simplex_id;
  bc.weights.resize(n + 1);
  double rest = 0.0;
  for (int i = 0; i < n; ++i) {
    bc.weights[i + 1] = rhs[i];
    rest += rhs[i];
  }
  bc.weights[0] = 1.0 - rest;
  return bc;
}

// First simplex (lowest id) containing p up to the containment epsilon;
// nullopt when p is outside the hull.
inline std::optional<int> locate_simplex(const Tessellation& tess,
                                         const Point& p) {
  if (tess.simplices.empty()) throw GeometryError("empty tessellation");
  for (int si = 0; si < static_cast<int>(tess.simplices.size()); ++si) {
    const BarycentricCoords bc = barycentric_coordinates(tess, si, p);
    bool inside = true;
    for (double w : bc.weights) {
      if (w < -kContainmentEps) {
        inside = false;
        break;
      }
    }
    if (inside) return si;
  }
  return std::nullopt;
}

inline double simplex_volume(const Tessellation& tess, int simplex_id) {
  if (simplex_id < 0 || simplex_id >= static_cast<int>(tess.simplices.size())) {
    throw GeometryError("invalid simplex id");
  }
  return simplex_volume_of(tess.points, tess.simplices[simplex_id].vertex_ids);
}

}  // namespace sensorspace::geometry
