// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorspace/embedding.hpp"
#include "sensorspace/geometry.hpp"

namespace sensorspace::space {

using embedding::Embedding;
using embedding::EmbeddingProvider;

class SpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaInvalid : public SpaceError {
 public:
  using SpaceError::SpaceError;
};

class UnknownSensor : public SpaceError {
 public:
  using SpaceError::SpaceError;
};

class MissingSensor : public SpaceError {
 public:
  using SpaceError::SpaceError;
};

class TooManySensors : public SpaceError {
 public:
  using SpaceError::SpaceError;
};

class DuplicateAnchorReading : public SpaceError {
 public:
  using SpaceError::SpaceError;
};

struct SensorDef {
  std::string name;
  std::string unit;
  double min = 0.0;
  double max = 0.0;
};

struct SensorSchema {
  std::string schema_id;
  std::vector<SensorDef> sensors;  // axis order is the declaration order
  std::string context;
  std::string manifestation;  // optional free text, stored verbatim
  std::string prompt_template;
};

struct AnchorSpec {
  std::map<std::string, double> reading;       // native units
  std::optional<Embedding> explicit_embedding;  // absent => prompt-derived
};

struct Anchor {
  geometry::Point point;  // normalized coordinates
  Embedding embedding;
  AnchorSpec spec;
};

struct Reading {
  std::map<std::string, double> values;  // native units
  std::int64_t timestamp = 0;
};

struct SensorSpace {
  SensorSchema schema;
  std::vector<Anchor> anchors;
  geometry::Tessellation tessellation;  // n >= 2
  std::vector<int> sorted_anchor_ids;   // n == 1: anchors by coordinate
  std::vector<AnchorSpec> extra_anchors;  // user-supplied, kept for rebuilds
  std::string provider_id;
  std::int64_t build_timestamp = 0;

  int dim() const { return static_cast<int>(schema.sensors.size()); }
};

struct NormalizedReading {
  geometry::Point point;
  bool clamped = false;
};

struct InterpolationResult {
  Embedding embedding;
  std::vector<double> weights;   // one per anchor in anchor_ids
  std::vector<int> anchor_ids;   // anchor indices the weights refer to
  int simplex_id = -1;           // segment index when n == 1
  bool clamped = false;
};

inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

inline void validate_schema(const SensorSchema& schema) {
  if (schema.sensors.empty()) throw SchemaInvalid("schema declares no sensors");
  if (static_cast<int>(schema.sensors.size()) > geometry::kMaxDimension) {
    throw TooManySensors("at most " +
                         std::to_string(geometry::kMaxDimension) +
                         " sensors supported");
  }
  for (size_t i = 0; i < schema.sensors.size(); ++i) {
    const auto& s = schema.sensors[i];
    if (s.name.empty()) throw SchemaInvalid("sensor with empty name");
    if (!(s.min < s.max)) {
      throw SchemaInvalid("sensor '" + s.name + "' has min >= max");
    }
    for (size_t j = i + 1; j < schema.sensors.size(); ++j) {
      if (schema.sensors[j].name == s.name) {
        throw SchemaInvalid("duplicate sensor name '" + s.name + "'");
      }
    }
    const std::string placeholder = "{" + s.name + "}";
    size_t count = 0;
    for (size_t pos = schema.prompt_template.find(placeholder);
         pos != std::string::npos;
         pos = schema.prompt_template.find(placeholder, pos + 1)) {
      ++count;
    }
    if (count != 1) {
      throw SchemaInvalid("template must reference sensor '" + s.name +
                          "' exactly once");
    }
  }
}

inline int sensor_index(const SensorSchema& schema, const std::string& name) {
  for (size_t i = 0; i < schema.sensors.size(); ++i) {
    if (schema.sensors[i].name == name) return static_cast<int>(i);
  }
  throw UnknownSensor("sensor '" + name + "' not declared");
}

inline NormalizedReading normalize_reading(
    const SensorSchema& schema, const std::map<std::string, double>& values) {
  for (const auto& [name, _] : values) {
    sensor_index(schema, name);  // throws UnknownSensor
  }
  NormalizedReading out;
  out.point.resize(schema.sensors.size());
  for (size_t i = 0; i < schema.sensors.size(); ++i) {
    const auto& s = schema.sensors[i];
    auto it = values.find(s.name);
    if (it == values.end()) {
      throw MissingSensor("reading lacks sensor '" + s.name + "'");
    }
    double t = (it->second - s.min) / (s.max - s.min);
    if (t < 0.0 || t > 1.0) {
      out.clamped = true;
      t = std::clamp(t, 0.0, 1.0);
    }
    out.point[i] = t;
  }
  return out;
}

inline std::string render_prompt(const SensorSchema& schema,
                                 const std::map<std::string, double>& values) {
  std::string out = schema.prompt_template;
  for (const auto& s : schema.sensors) {
    auto it = values.find(s.name);
    if (it == values.end()) {
      throw MissingSensor("reading lacks sensor '" + s.name + "'");
    }
    const std::string placeholder = "{" + s.name + "}";
    const size_t pos = out.find(placeholder);
    if (pos != std::string::npos) {
      out.replace(pos, placeholder.size(), format_value(it->second));
    }
  }
  return out;
}

namespace detail {

inline bool same_point(const geometry::Point& a, const geometry::Point& b) {
  double d2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double dx = a[i] - b[i];
    d2 += dx * dx;
  }
  return std::sqrt(d2) < geometry::kDuplicateEps;
}

}  // namespace detail

// Builds the interpolation space: 2^n corner anchors synthesized from the
// range extremes (unless the caller supplied one at that corner), plus any
// extra anchors, all embedded in one provider batch, then tessellated.
inline SensorSpace build_space(const SensorSchema& schema,
                               const std::vector<AnchorSpec>& extra_anchors,
                               EmbeddingProvider& provider) {
  validate_schema(schema);
  const int n = static_cast<int>(schema.sensors.size());

  std::vector<AnchorSpec> specs;
  std::vector<geometry::Point> points;

  auto add_spec = [&](AnchorSpec spec) {
    NormalizedReading nr = normalize_reading(schema, spec.reading);
    for (const auto& p : points) {
      if (detail::same_point(p, nr.point)) {
        throw DuplicateAnchorReading("two anchors share a reading");
      }
    }
    points.push_back(std::move(nr.point));
    specs.push_back(std::move(spec));
  };

  std::vector<geometry::Point> extra_points;
  for (const auto& extra : extra_anchors) {
    for (const auto& [name, v] : extra.reading) {
      const auto& s = schema.sensors[sensor_index(schema, name)];
      if (v < s.min || v > s.max) {
        throw SpaceError("anchor value for '" + name + "' outside range");
      }
    }
    extra_points.push_back(normalize_reading(schema, extra.reading).point);
  }

  // corner anchors first (stable ids), skipping corners the caller supplied
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    AnchorSpec corner;
    for (int j = 0; j < n; ++j) {
      const auto& s = schema.sensors[j];
      corner.reading[s.name] = (mask & (1ULL << j)) ? s.max : s.min;
    }
    NormalizedReading nr = normalize_reading(schema, corner.reading);
    const bool supplied = std::any_of(
        extra_points.begin(), extra_points.end(),
        [&](const auto& p) { return detail::same_point(p, nr.point); });
    if (!supplied) add_spec(std::move(corner));
  }
  for (const auto& extra : extra_anchors) add_spec(extra);

  // one batched provider call, prompt order = anchor order
  std::vector<std::string> prompts;
  std::vector<size_t> prompt_slots;
  for (size_t i = 0; i < specs.size(); ++i) {
    if (!specs[i].explicit_embedding) {
      prompts.push_back(render_prompt(schema, specs[i].reading));
      prompt_slots.push_back(i);
    }
  }
  std::vector<Embedding> embedded;
  if (!prompts.empty()) embedded = provider.embed(prompts);

  SensorSpace sp;
  sp.schema = schema;
  sp.extra_anchors = extra_anchors;
  sp.provider_id = provider.id();
  sp.build_timestamp = static_cast<std::int64_t>(std::time(nullptr));
  sp.anchors.resize(specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    sp.anchors[i].point = points[i];
    sp.anchors[i].spec = specs[i];
    if (specs[i].explicit_embedding) {
      sp.anchors[i].embedding = *specs[i].explicit_embedding;
    }
  }
  for (size_t k = 0; k < prompt_slots.size(); ++k) {
    sp.anchors[prompt_slots[k]].embedding = embedded[k];
  }
  const size_t dim = sp.anchors[0].embedding.values.size();
  for (const auto& a : sp.anchors) {
    if (a.embedding.values.size() != dim) {
      throw SpaceError("anchor embeddings differ in dimension");
    }
  }

  if (n == 1) {
    sp.sorted_anchor_ids.resize(sp.anchors.size());
    for (size_t i = 0; i < sp.anchors.size(); ++i) {
      sp.sorted_anchor_ids[i] = static_cast<int>(i);
    }
    std::sort(sp.sorted_anchor_ids.begin(), sp.sorted_anchor_ids.end(),
              [&](int a, int b) {
                return sp.anchors[a].point[0] < sp.anchors[b].point[0];
              });
  } else {
    sp.tessellation = geometry::delaunay_tessellate(points);
  }
  return sp;
}

inline InterpolationResult interpolate(const SensorSpace& sp,
                                       const std::map<std::string, double>& values) {
  NormalizedReading nr = normalize_reading(sp.schema, values);
  InterpolationResult res;
  res.clamped = nr.clamped;
  const int n = sp.dim();

  // anchor hit: return the anchor embedding exactly
  for (size_t i = 0; i < sp.anchors.size(); ++i) {
    if (detail::same_point(sp.anchors[i].point, nr.point)) {
      res.embedding = sp.anchors[i].embedding;
      res.weights = {1.0};
      res.anchor_ids = {static_cast<int>(i)};
      res.simplex_id = -1;
      return res;
    }
  }

  if (n == 1) {
    const auto& order = sp.sorted_anchor_ids;
    const double x = nr.point[0];
    size_t seg = 0;
    while (seg + 2 < order.size() && sp.anchors[order[seg + 1]].point[0] < x) {
      ++seg;
    }
    const int a = order[seg];
    const int b = order[seg + 1];
    const double xa = sp.anchors[a].point[0];
    const double xb = sp.anchors[b].point[0];
    const double t = (x - xa) / (xb - xa);
    res.anchor_ids = {a, b};
    res.weights = {1.0 - t, t};
    res.simplex_id = static_cast<int>(seg);
    res.embedding = embedding::blend(
        {sp.anchors[a].embedding, sp.anchors[b].embedding}, res.weights);
    return res;
  }

  std::optional<int> sid = geometry::locate_simplex(sp.tessellation, nr.point);
  if (!sid) {
    // clamped readings always land in the corner-anchored hull; a miss here
    // is a numerical boundary case, so take the best-covering simplex
    double best = -1e300;
    int best_id = 0;
    for (int si = 0; si < static_cast<int>(sp.tessellation.simplices.size());
         ++si) {
      const auto bc =
          geometry::barycentric_coordinates(sp.tessellation, si, nr.point);
      const double mw = *std::min_element(bc.weights.begin(), bc.weights.end());
      if (mw > best) {
        best = mw;
        best_id = si;
      }
    }
    sid = best_id;
  }
  const auto bc =
      geometry::barycentric_coordinates(sp.tessellation, *sid, nr.point);
  res.simplex_id = *sid;
  res.anchor_ids = sp.tessellation.simplices[*sid].vertex_ids;
  res.weights = bc.weights;
  std::vector<Embedding> embs;
  embs.reserve(res.anchor_ids.size());
  for (int id : res.anchor_ids) embs.push_back(sp.anchors[id].embedding);
  res.embedding = embedding::blend(embs, res.weights);
  return res;
}

// Returns a new space with the anchor added; the input space is untouched.
inline SensorSpace add_anchor(const SensorSpace& sp, const AnchorSpec& anchor,
                              EmbeddingProvider& provider) {
  NormalizedReading nr = normalize_reading(sp.schema, anchor.reading);
  if (nr.clamped) throw SpaceError("anchor reading outside sensor ranges");
  for (const auto& a : sp.anchors) {
    if (detail::same_point(a.point, nr.point)) {
      throw DuplicateAnchorReading("anchor duplicates an existing reading");
    }
  }
  std::vector<AnchorSpec> extras = sp.extra_anchors;
  extras.push_back(anchor);
  return build_space(sp.schema, extras, provider);
}

}  // namespace sensorspace::space
