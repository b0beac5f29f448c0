// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: tessellation, interpolation, trace and bias-scan
// reports, cache benchmarks, survey scoring, and the HTTP service.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sensorspace/embedding.hpp"
#include "sensorspace/eval.hpp"
#include "sensorspace/genesis.hpp"
#include "sensorspace/geometry.hpp"
#include "sensorspace/service.hpp"
#include "sensorspace/space.hpp"
#include "sensorspace/svg.hpp"

namespace {

using nlohmann::json;
namespace ss = sensorspace;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUpstream = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  out << content;
}

ss::space::SensorSchema load_schema(const std::string& path) {
  return ss::service::schema_from_json(json::parse(read_file(path)));
}

std::vector<std::map<std::string, double>> load_workload(
    const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::map<std::string, double>> workload;
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    for (const auto& r : json::parse(text)) {
      workload.push_back(ss::service::reading_from_json(r));
    }
  } else {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      workload.push_back(ss::service::reading_from_json(json::parse(line)));
    }
  }
  return workload;
}

int run_tessellate(const std::string& points_path, int dim,
                   const std::string& out_path) {
  std::vector<ss::geometry::Point> points;
  std::istringstream in(read_file(points_path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ss::geometry::Point p;
    for (const auto& f : ss::eval::split_csv_line(line)) p.push_back(std::stod(f));
    if (static_cast<int>(p.size()) != dim) {
      throw std::invalid_argument("row dimension differs from --dim");
    }
    points.push_back(std::move(p));
  }
  const auto tess = ss::geometry::delaunay_tessellate(points);
  std::ostringstream out;
  out << "simplex_id";
  for (int i = 0; i <= dim; ++i) out << ",v" << i;
  out << ",volume\n";
  double total = 0.0;
  for (size_t s = 0; s < tess.simplices.size(); ++s) {
    const double v = ss::geometry::simplex_volume(tess, static_cast<int>(s));
    total += v;
    out << s;
    for (int id : tess.simplices[s].vertex_ids) out << ',' << id;
    out << ',' << v << '\n';
  }
  out << "total,,";
  for (int i = 1; i <= dim; ++i) out << ',';
  out << total << '\n';
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    write_file(out_path, out.str());
  }
  std::cout << "simplices: " << tess.simplices.size()
            << "  total volume: " << total << "\n";
  return kExitOk;
}

int run_interpolate(const std::string& schema_path,
                    const std::string& reading_json, std::uint64_t seed,
                    int dim) {
  const auto schema = load_schema(schema_path);
  ss::embedding::SyntheticProvider provider(seed, dim);
  const auto sp = ss::space::build_space(schema, {}, provider);
  const auto reading = ss::service::reading_from_json(json::parse(reading_json));
  const auto res = ss::space::interpolate(sp, reading);
  json out{{"embedding", res.embedding.values},
           {"weights", res.weights},
           {"anchor_ids", res.anchor_ids},
           {"simplex_id", res.simplex_id},
           {"clamped", res.clamped}};
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int run_trace(const std::string& schema_path, const std::string& axis,
              int steps, const std::string& out_dir, std::uint64_t seed,
              int dim) {
  const auto schema = load_schema(schema_path);
  ss::embedding::SyntheticProvider provider(seed, dim);
  const auto sp = ss::space::build_space(schema, {}, provider);
  std::map<std::string, double> others;
  for (const auto& s : schema.sensors) {
    if (s.name != axis) others[s.name] = 0.5 * (s.min + s.max);
  }
  const auto to_min = ss::eval::similarity_trace(sp, axis, others, steps,
                                                 ss::eval::Reference::Min);
  const auto to_max = ss::eval::similarity_trace(sp, axis, others, steps,
                                                 ss::eval::Reference::Max);
  const double tau_min = ss::eval::kendalls_tau(to_min.ys);
  const double tau_max = ss::eval::kendalls_tau(to_max.ys);

  std::ostringstream csv;
  csv << axis << ",sim_to_min,sim_to_max\n";
  for (size_t i = 0; i < to_min.xs.size(); ++i) {
    csv << to_min.xs[i] << ',' << to_min.ys[i] << ',' << to_max.ys[i] << '\n';
  }
  ss::svg::Plot plot;
  plot.add_line(to_min.xs, to_min.ys, "#0072b2");
  plot.add_line(to_max.xs, to_max.ys, "#e69f00");
  write_file(out_dir + "/trace_" + axis + ".csv", csv.str());
  write_file(out_dir + "/trace_" + axis + ".svg", plot.render());
  std::printf("axis %s: tau_toward_min %+.3f  tau_toward_max %+.3f\n",
              axis.c_str(), tau_min, tau_max);
  return kExitOk;
}

int run_bias_scan(const std::string& tmpl, const std::string& values_path,
                  const std::string& out_dir, std::uint64_t seed, int dim) {
  std::vector<double> values;
  std::istringstream in(read_file(values_path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) values.push_back(std::stod(line));
  }
  ss::embedding::SyntheticProvider provider(seed, dim);
  const auto scan = ss::eval::encoder_bias_scan(provider, tmpl, values);

  std::ostringstream csv;
  csv << "difference,similarity\n";
  std::vector<double> xs, ys;
  for (const auto& [d, s] : scan.pairs) {
    csv << d << ',' << s << '\n';
    xs.push_back(d);
    ys.push_back(s);
  }
  ss::svg::Plot plot;
  plot.add_scatter(xs, ys);
  plot.add_line(scan.binned_mean.xs, scan.binned_mean.ys);
  write_file(out_dir + "/bias_scan.csv", csv.str());
  write_file(out_dir + "/bias_scan.svg", plot.render());
  std::printf("pairs: %zu  bins: %zu\n", scan.pairs.size(),
              scan.binned_mean.xs.size());
  return kExitOk;
}

int run_bench_cache(const std::string& schema_path,
                    const std::string& workload_path, std::uint64_t seed,
                    int dim, int latent_dim) {
  const auto schema = load_schema(schema_path);
  ss::embedding::SyntheticProvider provider(seed, dim);
  const auto sp = ss::space::build_space(schema, {}, provider);
  const auto workload = load_workload(workload_path);
  ss::genesis::MockGenerator generator(seed, latent_dim, provider.dim());
  ss::genesis::IterationPolicy policy;
  const auto report = ss::genesis::bench_cache(sp, generator, policy, workload);
  std::printf("readings:               %zu\n", workload.size());
  std::printf("total_iterations_warm:  %ld\n", report.total_iterations_warm);
  std::printf("total_iterations_cold:  %ld\n", report.total_iterations_cold);
  std::printf("speedup:                %.2fx\n", report.speedup);
  std::printf("hit_rate:               %.2f\n", report.hit_rate);
  return kExitOk;
}

int run_score_survey(const std::string& responses_path,
                     const std::string& selections_path,
                     const std::string& metrics_path,
                     const std::string& weights_arg) {
  ss::eval::FactorWeights weights;
  std::map<std::string, ss::eval::MetricRow> rows;

  if (!metrics_path.empty()) {
    // fixture path: already-processed metric rows, CSV
    // model_id,coherence,faithfulness,sensitivity
    std::istringstream in(read_file(metrics_path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = ss::eval::split_csv_line(line);
      if (f[0] == "model_id") continue;
      if (f.size() != 4) throw std::invalid_argument("malformed metrics row");
      rows[f[0]] = {std::stod(f[1]), std::stod(f[2]), std::stod(f[3])};
    }
  } else {
    const auto data =
        ss::eval::load_survey_csv(responses_path, selections_path);
    rows = ss::eval::survey_metrics(ss::eval::normalize_survey(data));
  }

  if (!weights_arg.empty()) {
    const auto parts = ss::eval::split_csv_line(weights_arg);
    if (parts.size() != 3) {
      throw std::invalid_argument("--weights needs coherence,faithfulness,sensitivity");
    }
    weights.coherence = std::stod(parts[0]);
    weights.faithfulness = std::stod(parts[1]);
    weights.sensitivity = std::stod(parts[2]);
  } else if (!selections_path.empty()) {
    const auto data = ss::eval::load_survey_csv(
        responses_path.empty() ? selections_path : responses_path,
        selections_path);
    weights = ss::eval::factor_weights(data.selections);
  } else {
    throw std::invalid_argument("need --weights or --selections");
  }

  std::map<std::string, std::map<std::string, double>> table;
  std::printf("model,coherence,faithfulness,sensitivity,overall\n");
  for (const auto& [model, row] : rows) {
    const double overall = ss::eval::overall_score(row, weights);
    const double rounded = std::round(overall * 100.0) / 100.0;
    std::printf("%s,%.2f,%.2f,%.2f,%.2f\n", model.c_str(), row.coherence,
                row.faithfulness, row.sensitivity, rounded);
    table[model] = {{"coherence", row.coherence},
                    {"faithfulness", row.faithfulness},
                    {"sensitivity", row.sensitivity},
                    {"overall", rounded}};
  }
  const auto improvements = ss::eval::improvement_row(table);
  std::printf("improvement");
  for (const char* metric :
       {"coherence", "faithfulness", "sensitivity", "overall"}) {
    const auto& imp = improvements.at(metric);
    std::printf(",%.2f (%.1f%%)", imp.absolute, imp.relative * 100.0);
  }
  std::printf("\n");
  return kExitOk;
}

int run_serve(const std::string& config_path) {
  ss::service::Config config = ss::service::load_config(config_path);
  ss::service::Engine engine(config);
  httplib::Server server;
  ss::service::install_routes(server, engine);
  std::printf("listening on %s:%d\n", config.listen_host.c_str(),
              config.listen_port);
  if (!server.listen(config.listen_host, config.listen_port)) {
    throw std::ios_base::failure("cannot bind listen address");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sensor reading to visual-embedding interpolation engine"};
  app.require_subcommand(1);

  std::string points_path, schema_path, reading_json, axis, out_dir = ".",
              out_path, tmpl, values_path, workload_path, responses_path,
              selections_path, metrics_path, weights_arg, config_path;
  int dim = 2, steps = 11, embed_dim = 64, latent_dim = 32;
  std::uint64_t seed = 42;

  auto* tess = app.add_subcommand("tessellate", "Delaunay-tessellate a point set");
  tess->add_option("--points", points_path, "CSV of points, one per row")->required();
  tess->add_option("--dim", dim, "point dimension")->required();
  tess->add_option("--out", out_path, "output CSV (default: stdout)");

  auto* interp = app.add_subcommand("interpolate", "interpolate an embedding for a reading");
  interp->add_option("--schema", schema_path, "schema JSON file")->required();
  interp->add_option("--reading", reading_json, "reading as inline JSON")->required();
  interp->add_option("--seed", seed, "synthetic provider seed");
  interp->add_option("--embed-dim", embed_dim, "synthetic embedding dimension");

  auto* trace = app.add_subcommand("trace", "similarity trace along one axis");
  trace->add_option("--schema", schema_path)->required();
  trace->add_option("--axis", axis)->required();
  trace->add_option("--steps", steps);
  trace->add_option("--out-dir", out_dir);
  trace->add_option("--seed", seed);
  trace->add_option("--embed-dim", embed_dim);

  auto* bias = app.add_subcommand("bias-scan", "pairwise similarity vs numeric difference");
  bias->add_option("--template", tmpl, "prompt with one {placeholder}")->required();
  bias->add_option("--values", values_path, "file with one value per line")->required();
  bias->add_option("--out-dir", out_dir);
  bias->add_option("--seed", seed);
  bias->add_option("--embed-dim", embed_dim);

  auto* bench = app.add_subcommand("bench-cache", "latent-reuse iteration benchmark");
  bench->add_option("--schema", schema_path)->required();
  bench->add_option("--workload", workload_path, "JSON array or JSONL of readings")->required();
  bench->add_option("--seed", seed);
  bench->add_option("--embed-dim", embed_dim);
  bench->add_option("--latent-dim", latent_dim);

  auto* score = app.add_subcommand("score-survey", "weighted survey scoring report");
  score->add_option("--responses", responses_path);
  score->add_option("--selections", selections_path);
  score->add_option("--metrics", metrics_path, "already-processed metric rows CSV");
  score->add_option("--weights", weights_arg, "coherence,faithfulness,sensitivity");

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  serve->add_option("--config", config_path, "config JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (tess->parsed()) return run_tessellate(points_path, dim, out_path);
    if (interp->parsed()) return run_interpolate(schema_path, reading_json, seed, embed_dim);
    if (trace->parsed()) return run_trace(schema_path, axis, steps, out_dir, seed, embed_dim);
    if (bias->parsed()) return run_bias_scan(tmpl, values_path, out_dir, seed, embed_dim);
    if (bench->parsed()) return run_bench_cache(schema_path, workload_path, seed, embed_dim, latent_dim);
    if (score->parsed()) return run_score_survey(responses_path, selections_path, metrics_path, weights_arg);
    if (serve->parsed()) return run_serve(config_path);
  } catch (const ss::embedding::ProviderUnavailable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUpstream;
  } catch (const ss::genesis::GeneratorFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUpstream;
  } catch (const ss::genesis::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
