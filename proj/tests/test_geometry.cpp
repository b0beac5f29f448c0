// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sensorspace/geometry.hpp"

using namespace sensorspace::geometry;

namespace {

std::vector<Point> unit_cube_corners(int n) {
  std::vector<Point> pts;
  for (int mask = 0; mask < (1 << n); ++mask) {
    Point p(n);
    for (int j = 0; j < n; ++j) p[j] = (mask >> j) & 1;
    pts.push_back(std::move(p));
  }
  return pts;
}

std::vector<Point> random_points(int n, int count, std::uint64_t seed) {
  oracles::Rng rng(seed);
  std::vector<Point> pts = unit_cube_corners(n);  // keep the hull non-trivial
  while (static_cast<int>(pts.size()) < count) {
    Point p(n);
    for (int j = 0; j < n; ++j) p[j] = rng.uniform();
    pts.push_back(std::move(p));
  }
  return pts;
}

double total_volume(const Tessellation& t) {
  double v = 0.0;
  for (int s = 0; s < static_cast<int>(t.simplices.size()); ++s) {
    v += simplex_volume(t, s);
  }
  return v;
}

Point centroid_of(const Tessellation& t, int sid) {
  const int n = t.dim;
  Point c(n, 0.0);
  for (int id : t.simplices[sid].vertex_ids) {
    for (int j = 0; j < n; ++j) c[j] += t.points[id][j] / (n + 1);
  }
  return c;
}

}  // namespace

TEST_CASE("three non-collinear points make one triangle") {
  const auto t = delaunay_tessellate({{0, 0}, {1, 0}, {0, 1}});
  REQUIRE(t.simplices.size() == 1);
  CHECK(simplex_volume(t, 0) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("unit square splits into two triangles of total area one") {
  const auto t = delaunay_tessellate({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  REQUIRE(t.simplices.size() == 2);
  CHECK(std::abs(total_volume(t) - 1.0) < 1e-9);
  // the two triangles share one diagonal: exactly two common vertices
  std::vector<int> common;
  for (int id : t.simplices[0].vertex_ids) {
    for (int jd : t.simplices[1].vertex_ids) {
      if (id == jd) common.push_back(id);
    }
  }
  CHECK(common.size() == 2);
}

TEST_CASE("unit cube corners give five or six tetrahedra covering volume one") {
  const auto t = delaunay_tessellate(unit_cube_corners(3));
  // cospherical corners: the perturbation in use resolves to 6 tetrahedra
  CHECK((t.simplices.size() == 5 || t.simplices.size() == 6));
  CHECK(t.simplices.size() == 6);
  CHECK(std::abs(total_volume(t) - 1.0) < 1e-9);
}

TEST_CASE("duplicate points are rejected") {
  CHECK_THROWS_AS(delaunay_tessellate({{0, 0}, {1, 0}, {0, 1}, {1.0 + 1e-14, 0}}),
                  DuplicatePoints);
}

TEST_CASE("affinely dependent points are rejected") {
  CHECK_THROWS_AS(delaunay_tessellate({{0, 0}, {1, 1}, {2, 2}, {3, 3}}),
                  DimensionTooLow);
}

TEST_CASE("locate finds vertices, centroids, and rejects outside points") {
  const auto t = delaunay_tessellate({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  const auto at_vertex = locate_simplex(t, {0, 0});
  REQUIRE(at_vertex.has_value());
  bool contains = false;
  for (int id : t.simplices[*at_vertex].vertex_ids) {
    if (t.points[id] == Point{0, 0}) contains = true;
  }
  CHECK(contains);

  for (int s = 0; s < static_cast<int>(t.simplices.size()); ++s) {
    const auto found = locate_simplex(t, centroid_of(t, s));
    REQUIRE(found.has_value());
    CHECK(*found == s);
  }

  CHECK_FALSE(locate_simplex(t, {2, 2}).has_value());
}

TEST_CASE("barycentric identities at vertices and centroids") {
  const auto t = delaunay_tessellate(unit_cube_corners(3));
  for (int s = 0; s < static_cast<int>(t.simplices.size()); ++s) {
    const auto& ids = t.simplices[s].vertex_ids;
    for (size_t k = 0; k < ids.size(); ++k) {
      const auto bc = barycentric_coordinates(t, s, t.points[ids[k]]);
      for (size_t i = 0; i < bc.weights.size(); ++i) {
        CHECK(bc.weights[i] == Catch::Approx(i == k ? 1.0 : 0.0).margin(1e-9));
      }
    }
    const auto bc = barycentric_coordinates(t, s, centroid_of(t, s));
    for (double w : bc.weights) {
      CHECK(w == Catch::Approx(0.25).margin(1e-9));
    }
  }
}

TEST_CASE("barycentric coordinates of a hand-solved triangle point") {
  const auto t = delaunay_tessellate({{0, 0}, {1, 0}, {0, 1}});
  const auto bc = barycentric_coordinates(t, 0, {0.25, 0.25});
  // vertex order inside the simplex is by point id: (0,0),(1,0),(0,1)
  REQUIRE(t.simplices[0].vertex_ids == std::vector<int>{0, 1, 2});
  CHECK(bc.weights[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(bc.weights[1] == Catch::Approx(0.25).margin(1e-12));
  CHECK(bc.weights[2] == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("simplex volumes: right triangle, corner tetrahedron") {
  const auto tri = delaunay_tessellate({{0, 0}, {1, 0}, {0, 1}});
  CHECK(simplex_volume(tri, 0) == Catch::Approx(0.5).margin(1e-12));
  const auto tet = delaunay_tessellate({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  CHECK(simplex_volume(tet, 0) == Catch::Approx(1.0 / 6.0).margin(1e-12));
}

TEST_CASE("partition of unity and linear precision on random points") {
  for (int n = 1; n <= 4; ++n) {
    const auto pts = random_points(n, (1 << n) + 4 * n, 100 + n);
    const auto t = delaunay_tessellate(pts);
    oracles::Rng rng(200 + n);

    // random affine function f(x) = a . x + b
    std::vector<double> a(n);
    for (double& c : a) c = rng.uniform(-2, 2);
    const double b = rng.uniform(-1, 1);
    auto f = [&](const Point& p) {
      double s = b;
      for (int j = 0; j < n; ++j) s += a[j] * p[j];
      return s;
    };

    for (int trial = 0; trial < 1000; ++trial) {
      Point p(n);
      for (int j = 0; j < n; ++j) p[j] = rng.uniform();
      const auto sid = locate_simplex(t, p);
      REQUIRE(sid.has_value());
      const auto bc = barycentric_coordinates(t, *sid, p);
      double wsum = 0.0, fsum = 0.0;
      for (size_t k = 0; k < bc.weights.size(); ++k) {
        wsum += bc.weights[k];
        fsum += bc.weights[k] * f(t.points[t.simplices[*sid].vertex_ids[k]]);
      }
      CHECK(std::abs(wsum - 1.0) < 1e-9);
      CHECK(std::abs(fsum - f(p)) < 1e-6);
    }
  }
}

TEST_CASE("simplex volumes add up to the oracle hull volume") {
  for (int n = 2; n <= 4; ++n) {
    const int count = n == 4 ? 20 : 24;
    oracles::Rng rng(300 + n);
    std::vector<Point> pts;
    std::vector<std::vector<double>> raw;
    for (int i = 0; i < count; ++i) {
      Point p(n);
      for (int j = 0; j < n; ++j) p[j] = rng.uniform();
      raw.push_back(p);
      pts.push_back(std::move(p));
    }
    const auto t = delaunay_tessellate(pts);
    CHECK(std::abs(total_volume(t) - oracles::hull_volume(raw)) < 1e-9);
  }
}

TEST_CASE("unit cube tessellation volume matches the oracle") {
  const auto corners = unit_cube_corners(3);
  const auto t = delaunay_tessellate(corners);
  std::vector<std::vector<double>> raw(corners.begin(), corners.end());
  CHECK(std::abs(total_volume(t) - oracles::hull_volume(raw)) < 1e-9);
  CHECK(std::abs(oracles::hull_volume(raw) - 1.0) < 1e-9);
}

TEST_CASE("interior points lie strictly inside exactly one simplex") {
  for (int n = 2; n <= 3; ++n) {
    const auto pts = random_points(n, (1 << n) + 6, 400 + n);
    const auto t = delaunay_tessellate(pts);
    oracles::Rng rng(500 + n);
    for (int trial = 0; trial < 1000; ++trial) {
      Point p(n);
      for (int j = 0; j < n; ++j) p[j] = rng.uniform(0.01, 0.99);
      int strict = 0;
      for (int s = 0; s < static_cast<int>(t.simplices.size()); ++s) {
        const auto bc = barycentric_coordinates(t, s, p);
        if (std::all_of(bc.weights.begin(), bc.weights.end(),
                        [](double w) { return w > 1e-6; })) {
          ++strict;
        }
      }
      CHECK(strict <= 1);
    }
  }
}

TEST_CASE("facet agreement: shared facets get identical weights from both sides") {
  for (int n = 2; n <= 4; ++n) {
    const auto pts = random_points(n, (1 << n) + 3 * n, 600 + n);
    const auto t = delaunay_tessellate(pts);
    oracles::Rng rng(700 + n);
    for (int s = 0; s < static_cast<int>(t.simplices.size()); ++s) {
      for (int slot = 0; slot <= n; ++slot) {
        const int other = t.neighbors[s][slot];
        if (other == kBoundary || other < s) continue;
        // random point on the shared facet
        std::vector<int> facet;
        for (int i = 0; i <= n; ++i) {
          if (i != slot) facet.push_back(t.simplices[s].vertex_ids[i]);
        }
        std::vector<double> w(facet.size());
        double wsum = 0.0;
        for (double& x : w) {
          x = rng.uniform(0.05, 1.0);
          wsum += x;
        }
        Point p(n, 0.0);
        for (size_t k = 0; k < facet.size(); ++k) {
          for (int j = 0; j < n; ++j) {
            p[j] += (w[k] / wsum) * t.points[facet[k]][j];
          }
        }
        const auto bc_a = barycentric_coordinates(t, s, p);
        const auto bc_b = barycentric_coordinates(t, other, p);
        auto weight_of = [&](const BarycentricCoords& bc, int sid, int vid) {
          const auto& ids = t.simplices[sid].vertex_ids;
          for (size_t k = 0; k < ids.size(); ++k) {
            if (ids[k] == vid) return bc.weights[k];
          }
          return 0.0;  // opposite vertex: weight must vanish
        };
        for (int vid : facet) {
          CHECK(std::abs(weight_of(bc_a, s, vid) - weight_of(bc_b, other, vid)) <
                1e-9);
        }
        CHECK(std::abs(weight_of(bc_a, s, t.simplices[s].vertex_ids[slot])) <
              1e-9);
      }
    }
  }
}

TEST_CASE("neighbor relation is symmetric") {
  const auto t = delaunay_tessellate(random_points(3, 16, 800));
  for (int s = 0; s < static_cast<int>(t.simplices.size()); ++s) {
    for (int other : t.neighbors[s]) {
      if (other == kBoundary) continue;
      bool back = false;
      for (int x : t.neighbors[other]) back |= (x == s);
      CHECK(back);
    }
  }
}

TEST_CASE("tessellation is deterministic bit for bit") {
  const auto pts = random_points(3, 20, 900);
  const auto a = delaunay_tessellate(pts);
  const auto b = delaunay_tessellate(pts);
  REQUIRE(a.simplices.size() == b.simplices.size());
  for (size_t s = 0; s < a.simplices.size(); ++s) {
    CHECK(a.simplices[s].vertex_ids == b.simplices[s].vertex_ids);
    CHECK(a.neighbors[s] == b.neighbors[s]);
  }
}

TEST_CASE("one-dimensional tessellation is the sorted segment chain") {
  const auto t = delaunay_tessellate({{0.0}, {0.7}, {0.3}, {1.0}});
  REQUIRE(t.simplices.size() == 3);
  CHECK(std::abs(total_volume(t) - 1.0) < 1e-12);
}
