// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "sensorspace/embedding.hpp"
#include "sensorspace/space.hpp"

namespace sensorspace::eval {

using embedding::Embedding;

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TooShort : public EvalError {
 public:
  using EvalError::EvalError;
};

class EmptySelection : public EvalError {
 public:
  using EvalError::EvalError;
};

// Tau-a: ties count in neither P nor Q, so tied sequences pull |tau| below 1.
inline double kendalls_tau(const std::vector<double>& seq) {
  const int n = static_cast<int>(seq.size());
  if (n < 2) throw TooShort("need at least two values");
  long p = 0, q = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (seq[j] > seq[i]) ++p;
      else if (seq[j] < seq[i]) ++q;
    }
  }
  return 2.0 * static_cast<double>(p - q) /
         (static_cast<double>(n) * (n - 1));
}

struct Trace {
  std::vector<double> xs;
  std::vector<double> ys;
};

enum class Reference { Min, Max };

// Sweeps one axis across its range (other sensors fixed), interpolates an
// embedding per step and records cosine similarity against the embedding
// at the chosen extreme of the sweep.
inline Trace similarity_trace(const space::SensorSpace& sp,
                              const std::string& axis_name,
                              const std::map<std::string, double>& other_values,
                              int steps, Reference reference) {
  if (steps < 2) throw EvalError("need at least two sweep steps");
  const int axis = space::sensor_index(sp.schema, axis_name);
  const auto& sensor = sp.schema.sensors[axis];

  auto reading_at = [&](double v) {
    std::map<std::string, double> r = other_values;
    r[axis_name] = v;
    return r;
  };
  const double ref_value =
      reference == Reference::Min ? sensor.min : sensor.max;
  const Embedding ref =
      space::interpolate(sp, reading_at(ref_value)).embedding;

  Trace trace;
  for (int k = 0; k < steps; ++k) {
    const double v =
        sensor.min + (sensor.max - sensor.min) * k / (steps - 1);
    const Embedding e = space::interpolate(sp, reading_at(v)).embedding;
    trace.xs.push_back(v);
    trace.ys.push_back(embedding::cosine_similarity(e, ref));
  }
  return trace;
}

struct AxisMonotonicity {
  std::string axis;
  double tau_toward_min = 0.0;
  double tau_toward_max = 0.0;
  bool degenerate = false;  // constant similarity, trend undefined
};

inline std::vector<AxisMonotonicity> monotonicity_report(
    const space::SensorSpace& sp, int steps) {
  std::vector<AxisMonotonicity> report;
  for (const auto& sensor : sp.schema.sensors) {
    std::map<std::string, double> others;
    for (const auto& o : sp.schema.sensors) {
      if (o.name != sensor.name) others[o.name] = 0.5 * (o.min + o.max);
    }
    AxisMonotonicity row;
    row.axis = sensor.name;
    const Trace to_min =
        similarity_trace(sp, sensor.name, others, steps, Reference::Min);
    const Trace to_max =
        similarity_trace(sp, sensor.name, others, steps, Reference::Max);
    auto is_constant = [](const Trace& t) {
      return std::all_of(t.ys.begin(), t.ys.end(), [&](double y) {
        return std::abs(y - t.ys.front()) < 1e-12;
      });
    };
    row.degenerate = is_constant(to_min) && is_constant(to_max);
    row.tau_toward_min = kendalls_tau(to_min.ys);
    row.tau_toward_max = kendalls_tau(to_max.ys);
    report.push_back(std::move(row));
  }
  return report;
}

struct BiasScan {
  std::vector<std::pair<double, double>> pairs;  // (|v_i - v_j|, similarity)
  Trace binned_mean;
};

// Substitutes the first {placeholder} of the template with each value.
inline std::string substitute_template(const std::string& tmpl, double value) {
  const size_t open = tmpl.find('{');
  const size_t close = tmpl.find('}', open);
  if (open == std::string::npos || close == std::string::npos) {
    throw EvalError("template has no {placeholder}");
  }
  return tmpl.substr(0, open) + space::format_value(value) +
         tmpl.substr(close + 1);
}

inline BiasScan encoder_bias_scan(embedding::EmbeddingProvider& provider,
                                  const std::string& tmpl,
                                  const std::vector<double>& values,
                                  int bins = 20) {
  if (values.size() < 2) throw EvalError("need at least two values");
  std::vector<std::string> texts;
  texts.reserve(values.size());
  for (double v : values) texts.push_back(substitute_template(tmpl, v));
  const auto embedded = provider.embed(texts);

  BiasScan scan;
  double max_diff = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    for (size_t j = i + 1; j < values.size(); ++j) {
      const double diff = std::abs(values[i] - values[j]);
      const double sim =
          embedding::cosine_similarity(embedded[i], embedded[j]);
      scan.pairs.emplace_back(diff, sim);
      max_diff = std::max(max_diff, diff);
    }
  }
  if (max_diff == 0.0) max_diff = 1.0;
  std::vector<double> sums(bins, 0.0);
  std::vector<int> counts(bins, 0);
  for (const auto& [diff, sim] : scan.pairs) {
    int b = static_cast<int>(diff / max_diff * bins);
    b = std::min(b, bins - 1);
    sums[b] += sim;
    ++counts[b];
  }
  for (int b = 0; b < bins; ++b) {
    if (counts[b] == 0) continue;
    scan.binned_mean.xs.push_back((b + 0.5) * max_diff / bins);
    scan.binned_mean.ys.push_back(sums[b] / counts[b]);
  }
  return scan;
}

// ---- survey scoring ----

enum class Factor { Coherence, Faithfulness, Sensitivity };

inline std::string factor_name(Factor f) {
  switch (f) {
    case Factor::Coherence: return "Coherence";
    case Factor::Faithfulness: return "Faithfulness";
    case Factor::Sensitivity: return "Sensitivity";
  }
  return "?";
}

inline Factor parse_factor(const std::string& s) {
  if (s == "Coherence") return Factor::Coherence;
  if (s == "Faithfulness") return Factor::Faithfulness;
  if (s == "Sensitivity") return Factor::Sensitivity;
  throw EvalError("unknown factor '" + s + "'");
}

struct SurveyResponse {
  std::string participant_id;
  std::string question_id;
  Factor factor = Factor::Coherence;
  std::string model_id;
  double score = 0.0;  // 1..5 raw; min-subtracted after normalization
};

struct SurveyDataset {
  std::vector<SurveyResponse> responses;
  // participant -> chosen priority set over {Accuracy, Coherence, Aesthetics}
  std::map<std::string, std::set<std::string>> selections;
};

// Baseline normalization: subtract the minimum score within each
// (participant, question, factor) group.
inline SurveyDataset normalize_survey(const SurveyDataset& data) {
  SurveyDataset out = data;
  std::map<std::tuple<std::string, std::string, Factor>, double> group_min;
  for (const auto& r : out.responses) {
    const auto key = std::make_tuple(r.participant_id, r.question_id, r.factor);
    auto it = group_min.find(key);
    if (it == group_min.end() || r.score < it->second) group_min[key] = r.score;
  }
  for (auto& r : out.responses) {
    r.score -= group_min[{r.participant_id, r.question_id, r.factor}];
  }
  return out;
}

struct FactorWeights {
  double coherence = 0.0;
  double faithfulness = 0.0;
  double sensitivity = 0.0;
};

struct KeyWeights {
  double alone = 0.5;
  double with_one = 0.3;
  double with_both = 0.2;
};

// Selection-frequency weighting: each pick contributes the key weight for
// its selection-set size. Aesthetics is discarded before normalization and
// Accuracy's share is split equally between Faithfulness and Sensitivity.
inline FactorWeights factor_weights(
    const std::map<std::string, std::set<std::string>>& selections,
    const KeyWeights& key = {}) {
  static const std::set<std::string> kAllowed = {"Accuracy", "Coherence",
                                                 "Aesthetics"};
  double accuracy = 0.0, coherence = 0.0;
  for (const auto& [participant, chosen] : selections) {
    if (chosen.empty()) {
      throw EmptySelection("participant '" + participant +
                           "' selected nothing");
    }
    for (const auto& f : chosen) {
      if (!kAllowed.count(f)) {
        throw EvalError("unknown selection factor '" + f + "'");
      }
    }
    const double w = chosen.size() == 1   ? key.alone
                     : chosen.size() == 2 ? key.with_one
                                          : key.with_both;
    if (chosen.count("Accuracy")) accuracy += w;
    if (chosen.count("Coherence")) coherence += w;
  }
  const double total = accuracy + coherence;
  if (total <= 0) throw EvalError("no Accuracy or Coherence selections");
  FactorWeights out;
  out.coherence = coherence / total;
  out.faithfulness = 0.5 * accuracy / total;
  out.sensitivity = 0.5 * accuracy / total;
  return out;
}

struct MetricRow {
  double coherence = 0.0;
  double faithfulness = 0.0;
  double sensitivity = 0.0;
};

inline double overall_score(const MetricRow& m, const FactorWeights& w) {
  return w.faithfulness * m.faithfulness + w.sensitivity * m.sensitivity +
         w.coherence * m.coherence;
}

// Model-level metric rows from normalized raw responses: mean normalized
// score rescaled to [0,1] by the maximum span of a 1-5 scale.
inline std::map<std::string, MetricRow> survey_metrics(
    const SurveyDataset& normalized) {
  std::map<std::string, std::map<Factor, std::pair<double, int>>> acc;
  for (const auto& r : normalized.responses) {
    auto& slot = acc[r.model_id][r.factor];
    slot.first += r.score;
    ++slot.second;
  }
  std::map<std::string, MetricRow> rows;
  for (const auto& [model, by_factor] : acc) {
    MetricRow row;
    for (const auto& [factor, sum_count] : by_factor) {
      const double mean = sum_count.first / sum_count.second / 4.0;
      switch (factor) {
        case Factor::Coherence: row.coherence = mean; break;
        case Factor::Faithfulness: row.faithfulness = mean; break;
        case Factor::Sensitivity: row.sensitivity = mean; break;
      }
    }
    rows[model] = row;
  }
  return rows;
}

struct Improvement {
  double absolute = 0.0;
  double relative = 0.0;  // fraction of the second-best score
};

// Best-minus-second-best per metric column.
inline std::map<std::string, Improvement> improvement_row(
    const std::map<std::string, std::map<std::string, double>>& scores) {
  if (scores.size() < 2) throw EvalError("need at least two models");
  std::map<std::string, Improvement> out;
  std::set<std::string> metrics;
  for (const auto& [model, row] : scores) {
    for (const auto& [metric, _] : row) metrics.insert(metric);
  }
  for (const auto& metric : metrics) {
    std::vector<double> col;
    for (const auto& [model, row] : scores) {
      auto it = row.find(metric);
      if (it != row.end()) col.push_back(it->second);
    }
    if (col.size() < 2) continue;
    std::sort(col.begin(), col.end(), std::greater<>());
    Improvement imp;
    imp.absolute = col[0] - col[1];
    imp.relative = col[1] != 0.0 ? imp.absolute / col[1] : 0.0;
    out[metric] = imp;
  }
  return out;
}

// ---- CSV ingestion ----

inline std::vector<std::string> split_csv_line(const std::string& line,
                                               char sep = ',') {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline SurveyDataset load_survey_csv(const std::string& responses_path,
                                     const std::string& selections_path) {
  SurveyDataset data;
  std::ifstream resp(responses_path);
  if (!resp) throw EvalError("cannot open '" + responses_path + "'");
  std::string line;
  while (std::getline(resp, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f[0] == "participant_id") continue;  // header
    if (f.size() != 5) throw EvalError("malformed responses row: " + line);
    SurveyResponse r;
    r.participant_id = f[0];
    r.question_id = f[1];
    r.factor = parse_factor(f[2]);
    r.model_id = f[3];
    r.score = std::stod(f[4]);
    if (r.score < 1 || r.score > 5) {
      throw EvalError("score out of 1-5 range: " + line);
    }
    data.responses.push_back(std::move(r));
  }
  std::ifstream sel(selections_path);
  if (!sel) throw EvalError("cannot open '" + selections_path + "'");
  while (std::getline(sel, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f[0] == "participant_id") continue;
    if (f.size() != 2) throw EvalError("malformed selections row: " + line);
    std::set<std::string> chosen;
    for (const auto& name : split_csv_line(f[1], ';')) {
      if (!name.empty()) chosen.insert(name);
    }
    data.selections[f[0]] = std::move(chosen);
  }
  return data;
}

}  // namespace sensorspace::eval
