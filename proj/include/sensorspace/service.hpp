// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "sensorspace/embedding.hpp"
#include "sensorspace/genesis.hpp"
#include "sensorspace/remote.hpp"
#include "sensorspace/space.hpp"

namespace sensorspace::service {

using nlohmann::json;

struct Config {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;

  std::string provider_kind = "synthetic";  // synthetic | remote
  std::string provider_endpoint;
  std::uint64_t provider_seed = 42;
  int provider_dim = 64;

  std::string generator_kind = "mock";  // mock | remote
  std::string generator_endpoint;
  int latent_dim = 32;
  std::uint64_t generation_seed = 7;

  genesis::IterationPolicy policy;
  size_t cache_capacity = 1024;
  std::string data_dir = "data";
};

inline void apply_env_overrides(Config& c);

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  const json j = json::parse(in);
  Config c;
  if (j.contains("listen")) {
    const std::string listen = j["listen"].get<std::string>();
    const auto colon = listen.rfind(':');
    if (colon != std::string::npos) {
      c.listen_host = listen.substr(0, colon);
      c.listen_port = std::stoi(listen.substr(colon + 1));
    }
  }
  if (j.contains("provider")) {
    const auto& p = j["provider"];
    c.provider_kind = p.value("kind", c.provider_kind);
    c.provider_endpoint = p.value("endpoint", c.provider_endpoint);
    c.provider_seed = p.value("seed", c.provider_seed);
    c.provider_dim = p.value("dim", c.provider_dim);
  }
  if (j.contains("generator")) {
    const auto& g = j["generator"];
    c.generator_kind = g.value("kind", c.generator_kind);
    c.generator_endpoint = g.value("endpoint", c.generator_endpoint);
    c.latent_dim = g.value("latent_dim", c.latent_dim);
    c.generation_seed = g.value("seed", c.generation_seed);
  }
  if (j.contains("policy")) {
    const auto& p = j["policy"];
    c.policy.i_min = p.value("i_min", c.policy.i_min);
    c.policy.i_max = p.value("i_max", c.policy.i_max);
    c.policy.i_full = p.value("i_full", c.policy.i_full);
    c.policy.hit_radius = p.value("hit_radius", c.policy.hit_radius);
  }
  if (j.contains("cache")) {
    c.cache_capacity = j["cache"].value("capacity", c.cache_capacity);
  }
  c.data_dir = j.value("data_dir", c.data_dir);
  apply_env_overrides(c);
  return c;
}

inline void apply_env_overrides(Config& c) {
  if (const char* listen = std::getenv("SENSORSPACE_LISTEN")) {
    const std::string s = listen;
    const auto colon = s.rfind(':');
    if (colon != std::string::npos) {
      c.listen_host = s.substr(0, colon);
      c.listen_port = std::stoi(s.substr(colon + 1));
    }
  }
  if (const char* ep = std::getenv("SENSORSPACE_PROVIDER_ENDPOINT")) {
    c.provider_endpoint = ep;
    c.provider_kind = "remote";
  }
}

// ---- JSON codecs for the wire formats ----

inline space::SensorSchema schema_from_json(const json& j) {
  space::SensorSchema s;
  s.schema_id = j.value("schema_id", "");
  if (!j.contains("sensors") || !j["sensors"].is_array()) {
    throw space::SchemaInvalid("schema needs a 'sensors' array");
  }
  for (const auto& sj : j["sensors"]) {
    space::SensorDef d;
    d.name = sj.at("name").get<std::string>();
    d.unit = sj.value("unit", "");
    d.min = sj.at("min").get<double>();
    d.max = sj.at("max").get<double>();
    s.sensors.push_back(std::move(d));
  }
  s.context = j.value("context", "");
  s.manifestation = j.value("manifestation", "");
  s.prompt_template = j.value("prompt_template", "");
  space::validate_schema(s);
  if (s.schema_id.empty()) {
    // content-derived id makes registration idempotent
    json canon = j;
    canon.erase("schema_id");
    s.schema_id = genesis::hex_digest(embedding::fnv1a64(canon.dump()));
  }
  return s;
}

inline json schema_to_json(const space::SensorSchema& s) {
  json sensors = json::array();
  for (const auto& d : s.sensors) {
    sensors.push_back(
        {{"name", d.name}, {"unit", d.unit}, {"min", d.min}, {"max", d.max}});
  }
  return {{"schema_id", s.schema_id},
          {"sensors", sensors},
          {"context", s.context},
          {"manifestation", s.manifestation},
          {"prompt_template", s.prompt_template}};
}

inline space::AnchorSpec anchor_from_json(const json& j) {
  space::AnchorSpec a;
  if (!j.contains("reading") || !j["reading"].is_object()) {
    throw space::SpaceError("anchor needs a 'reading' object");
  }
  for (const auto& [name, v] : j["reading"].items()) {
    if (!v.is_number()) throw space::SpaceError("non-numeric anchor value");
    a.reading[name] = v.get<double>();
  }
  if (j.contains("embedding") && !j["embedding"].is_null()) {
    a.explicit_embedding =
        embedding::Embedding{j["embedding"].get<std::vector<double>>()};
  }
  return a;
}

inline json anchor_to_json(const space::AnchorSpec& a) {
  json out{{"reading", a.reading}};
  if (a.explicit_embedding) out["embedding"] = a.explicit_embedding->values;
  return out;
}

inline std::map<std::string, double> reading_from_json(const json& j) {
  const json& values = j.contains("values") ? j["values"] : j;
  if (!values.is_object()) {
    throw space::SpaceError("reading must be a JSON object of sensor values");
  }
  std::map<std::string, double> out;
  for (const auto& [name, v] : values.items()) {
    if (!v.is_number()) {
      throw space::SpaceError("non-numeric value for sensor '" + name + "'");
    }
    out[name] = v.get<double>();
  }
  return out;
}

// ---- per-schema state ----

struct SchemaStats {
  long requests = 0;
  long hits = 0;
  long actual_iterations = 0;
  long cold_equivalent_iterations = 0;
};

struct SchemaState {
  std::shared_ptr<const space::SensorSpace> snapshot;
  genesis::LatentCache cache;
  SchemaStats stats;
  std::mutex write_mutex;  // serializes anchor adds and cache mutations
};

class Engine {
 public:
  explicit Engine(Config config) : config_(std::move(config)) {
    config_.policy.validate();
    if (config_.provider_kind == "remote") {
      provider_ = std::make_unique<remote::RemoteProvider>(
          config_.provider_endpoint, config_.provider_dim);
    } else {
      provider_ = std::make_unique<embedding::SyntheticProvider>(
          config_.provider_seed, config_.provider_dim);
    }
    std::filesystem::create_directories(config_.data_dir);
    restore();
  }

  const Config& config() const { return config_; }
  embedding::EmbeddingProvider& provider() { return *provider_; }

  genesis::IterativeGenerator& generator_for(const space::SensorSpace& sp) {
    const int embed_dim =
        static_cast<int>(sp.anchors[0].embedding.values.size());
    std::lock_guard lock(generators_mutex_);
    auto& g = generators_[embed_dim];
    if (!g) {
      if (config_.generator_kind == "remote") {
        g = std::make_unique<remote::RemoteGenerator>(
            config_.generator_endpoint, config_.latent_dim);
      } else {
        g = std::make_unique<genesis::MockGenerator>(config_.generation_seed,
                                                     config_.latent_dim,
                                                     embed_dim);
      }
    }
    return *g;
  }

  std::shared_ptr<SchemaState> find(const std::string& id) {
    std::lock_guard lock(registry_mutex_);
    auto it = registry_.find(id);
    return it == registry_.end() ? nullptr : it->second;
  }

  // Builds (or idempotently returns) the space for a schema payload.
  std::string register_schema(const json& payload) {
    const space::SensorSchema schema = schema_from_json(payload);
    {
      std::lock_guard lock(registry_mutex_);
      auto it = registry_.find(schema.schema_id);
      if (it != registry_.end()) {
        const auto existing = schema_to_json(it->second->snapshot->schema);
        if (existing != schema_to_json(schema)) {
          throw space::SchemaInvalid("schema id '" + schema.schema_id +
                                     "' already registered with a different "
                                     "payload");
        }
        return schema.schema_id;
      }
    }
    auto built = std::make_shared<const space::SensorSpace>(
        space::build_space(schema, {}, *provider_));
    auto state = std::make_shared<SchemaState>();
    state->snapshot = built;
    {
      std::lock_guard lock(registry_mutex_);
      registry_[schema.schema_id] = state;
    }
    persist_schema(*built);
    return schema.schema_id;
  }

  // Atomic snapshot swap: readers holding the old shared_ptr stay valid.
  json add_anchor(const std::string& id, const json& payload) {
    auto state = find(id);
    if (!state) throw UnknownSchema(id);
    const space::AnchorSpec anchor = anchor_from_json(payload);
    std::lock_guard lock(state->write_mutex);
    auto next = std::make_shared<const space::SensorSpace>(
        space::add_anchor(*state->snapshot, anchor, *provider_));
    std::atomic_store(&state->snapshot, next);
    persist_schema(*next);
    return space_summary(*next);
  }

  json interpolate(const std::string& id, const json& payload) {
    auto state = find(id);
    if (!state) throw UnknownSchema(id);
    const auto snapshot = std::atomic_load(&state->snapshot);
    const auto reading = reading_from_json(payload);
    const auto res = space::interpolate(*snapshot, reading);
    return {{"embedding", res.embedding.values},
            {"weights", res.weights},
            {"anchor_ids", res.anchor_ids},
            {"simplex_id", res.simplex_id},
            {"clamped", res.clamped}};
  }

  json generate(const std::string& id, const json& payload) {
    auto state = find(id);
    if (!state) throw UnknownSchema(id);
    const auto reading = reading_from_json(payload);
    std::lock_guard lock(state->write_mutex);
    const auto snapshot = std::atomic_load(&state->snapshot);
    const auto res = genesis::generate(*snapshot, reading, state->cache,
                                       generator_for(*snapshot),
                                       config_.policy,
                                       config_.generation_seed);
    genesis::evict(state->cache, config_.cache_capacity);
    state->stats.requests += 1;
    state->stats.hits += res.cache_hit ? 1 : 0;
    state->stats.actual_iterations += res.iterations_used;
    state->stats.cold_equivalent_iterations += config_.policy.i_full;
    genesis::save_cache(state->cache, cache_path(id));
    return {{"artifact_digest", res.artifact_digest},
            {"iterations_used", res.iterations_used},
            {"cache_hit", res.cache_hit}};
  }

  json cache_stats(const std::string& id) {
    auto state = find(id);
    if (!state) throw UnknownSchema(id);
    std::lock_guard lock(state->write_mutex);
    const auto& s = state->stats;
    const double hit_rate =
        s.requests ? static_cast<double>(s.hits) / s.requests : 0.0;
    const double speedup =
        s.actual_iterations
            ? static_cast<double>(s.cold_equivalent_iterations) /
                  s.actual_iterations
            : 1.0;
    return {{"entries", state->cache.entries.size()},
            {"hit_rate", hit_rate},
            {"iterations_saved",
             s.cold_equivalent_iterations - s.actual_iterations},
            {"speedup_estimate", speedup}};
  }

  struct UnknownSchema : std::runtime_error {
    explicit UnknownSchema(const std::string& id)
        : std::runtime_error("unknown schema '" + id + "'") {}
  };

 private:
  static json space_summary(const space::SensorSpace& sp) {
    return {{"schema_id", sp.schema.schema_id},
            {"anchors", sp.anchors.size()},
            {"simplices", sp.dim() == 1
                              ? sp.anchors.size() - 1
                              : sp.tessellation.simplices.size()},
            {"provider_id", sp.provider_id}};
  }

  std::string schema_path(const std::string& id) const {
    return (std::filesystem::path(config_.data_dir) / (id + ".schema.json"))
        .string();
  }

  std::string cache_path(const std::string& id) const {
    return (std::filesystem::path(config_.data_dir) / (id + ".cache.jsonl"))
        .string();
  }

  void persist_schema(const space::SensorSpace& sp) {
    json doc = schema_to_json(sp.schema);
    json extras = json::array();
    for (const auto& a : sp.extra_anchors) extras.push_back(anchor_to_json(a));
    doc["extra_anchors"] = extras;
    std::ofstream out(schema_path(sp.schema.schema_id), std::ios::trunc);
    out << doc.dump(2) << '\n';
  }

  void restore() {
    namespace fs = std::filesystem;
    for (const auto& entry : fs::directory_iterator(config_.data_dir)) {
      const std::string name = entry.path().filename().string();
      const std::string suffix = ".schema.json";
      if (name.size() <= suffix.size() ||
          name.substr(name.size() - suffix.size()) != suffix) {
        continue;
      }
      std::ifstream in(entry.path());
      const json doc = json::parse(in);
      const space::SensorSchema schema = schema_from_json(doc);
      std::vector<space::AnchorSpec> extras;
      for (const auto& aj : doc.value("extra_anchors", json::array())) {
        extras.push_back(anchor_from_json(aj));
      }
      auto built = std::make_shared<const space::SensorSpace>(
          space::build_space(schema, extras, *provider_));
      auto state = std::make_shared<SchemaState>();
      state->snapshot = built;
      const std::string cp = cache_path(schema.schema_id);
      if (fs::exists(cp)) state->cache = genesis::load_cache(cp).cache;
      std::lock_guard lock(registry_mutex_);
      registry_[schema.schema_id] = state;
    }
  }

  Config config_;
  std::unique_ptr<embedding::EmbeddingProvider> provider_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<SchemaState>> registry_;
  std::mutex generators_mutex_;
  std::map<int, std::unique_ptr<genesis::IterativeGenerator>> generators_;
};

// ---- HTTP layer ----

inline void reply_ok(httplib::Response& res, const json& data,
                     int status = 200) {
  res.status = status;
  res.set_content(json{{"ok", true}, {"data", data}}.dump(),
                  "application/json");
}

inline void reply_error(httplib::Response& res, const std::string& code,
                        const std::string& message,
                        const std::string& detail = "") {
  static const std::map<std::string, int> kStatus = {
      {"BAD_SCHEMA", 400}, {"UNKNOWN_SCHEMA", 404}, {"PROVIDER_DOWN", 502},
      {"VALIDATION", 422}, {"INTERNAL", 500}};
  res.status = kStatus.at(code);
  res.set_content(json{{"ok", false},
                       {"error", {{"code", code},
                                  {"message", message},
                                  {"detail", detail}}}}
                      .dump(),
                  "application/json");
}

// Total mapping from engine errors to stable API codes.
template <typename Fn>
void guard(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Engine::UnknownSchema& e) {
    reply_error(res, "UNKNOWN_SCHEMA", e.what());
  } catch (const space::SchemaInvalid& e) {
    reply_error(res, "BAD_SCHEMA", e.what());
  } catch (const space::TooManySensors& e) {
    reply_error(res, "BAD_SCHEMA", e.what());
  } catch (const embedding::ProviderUnavailable& e) {
    reply_error(res, "PROVIDER_DOWN", e.what());
  } catch (const genesis::GeneratorFailure& e) {
    reply_error(res, "PROVIDER_DOWN", e.what());
  } catch (const space::SpaceError& e) {
    reply_error(res, "VALIDATION", e.what());
  } catch (const geometry::GeometryError& e) {
    reply_error(res, "VALIDATION", e.what());
  } catch (const genesis::GenesisError& e) {
    reply_error(res, "VALIDATION", e.what());
  } catch (const json::exception& e) {
    reply_error(res, "VALIDATION", e.what());
  } catch (const std::exception& e) {
    reply_error(res, "INTERNAL", e.what());
  }
}

inline void install_routes(httplib::Server& server, Engine& engine) {
  server.Post("/schemas", [&](const httplib::Request& req,
                              httplib::Response& res) {
    guard(res, [&] {
      const std::string id = engine.register_schema(json::parse(req.body));
      reply_ok(res, json{{"schema_id", id}}, 201);
    });
  });

  server.Post(R"(/schemas/([^/]+)/anchors)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guard(res, [&] {
                  reply_ok(res, engine.add_anchor(req.matches[1],
                                                  json::parse(req.body)));
                });
              });

  server.Post(R"(/schemas/([^/]+)/interpolate)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guard(res, [&] {
                  reply_ok(res, engine.interpolate(req.matches[1],
                                                   json::parse(req.body)));
                });
              });

  server.Post(R"(/schemas/([^/]+)/generate)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guard(res, [&] {
                  reply_ok(res, engine.generate(req.matches[1],
                                                json::parse(req.body)));
                });
              });

  server.Get(R"(/schemas/([^/]+)/cache/stats)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guard(res, [&] {
                 reply_ok(res, engine.cache_stats(req.matches[1]));
               });
             });
}

}  // namespace sensorspace::service
