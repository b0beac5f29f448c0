// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "sensorspace/embedding.hpp"
#include "sensorspace/genesis.hpp"

namespace sensorspace::remote {

// HTTP client for a real text encoder.
// Wire contract: POST /embed {"texts": [...]} ->
// {"dim": D, "embeddings": [[...], ...]}; any non-200 maps to
// ProviderUnavailable.
class RemoteProvider final : public embedding::EmbeddingProvider {
 public:
  explicit RemoteProvider(const std::string& endpoint, int dim = 768)
      : endpoint_(endpoint), dim_(dim) {}

  std::vector<embedding::Embedding> embed(
      const std::vector<std::string>& texts) override {
    httplib::Client client(endpoint_);
    nlohmann::json body{{"texts", texts}};
    auto res = client.Post("/embed", body.dump(), "application/json");
    if (!res || res->status != 200) {
      throw embedding::ProviderUnavailable(
          "embed endpoint at " + endpoint_ + " returned " +
          (res ? std::to_string(res->status) : std::string("no response")));
    }
    const auto j = nlohmann::json::parse(res->body);
    dim_ = j.at("dim").get<int>();
    std::vector<embedding::Embedding> out;
    for (const auto& row : j.at("embeddings")) {
      out.push_back({row.get<std::vector<double>>()});
    }
    return out;
  }

  int dim() const override { return dim_; }

  std::string id() const override { return "remote-" + endpoint_; }

 private:
  std::string endpoint_;
  int dim_;
};

// HTTP client for a real iterative generator.
// Wire contract: POST /generate {"embedding": [...],
// "init_latent": [...]|null, "steps": N, "seed": S} ->
// {"latent": [...], "artifact_b64": "..."}.
class RemoteGenerator final : public genesis::IterativeGenerator {
 public:
  RemoteGenerator(const std::string& endpoint, int latent_dim)
      : endpoint_(endpoint), latent_dim_(latent_dim) {}

  genesis::LatentState init(std::uint64_t seed) override {
    // remote backends initialize server-side; an empty latent marks a cold
    // start and is replaced by the first step() response
    genesis::LatentState l;
    l.values.clear();
    l.step_count = 0;
    pending_seed_ = seed;
    return l;
  }

  genesis::LatentState step(const genesis::LatentState& latent,
                            const embedding::Embedding& e) override {
    return run(latent, e, 1);
  }

  genesis::LatentState run(const genesis::LatentState& latent,
                           const embedding::Embedding& e, int steps) override {
    httplib::Client client(endpoint_);
    nlohmann::json body{{"embedding", e.values},
                        {"steps", steps},
                        {"seed", pending_seed_}};
    if (latent.values.empty()) {
      body["init_latent"] = nullptr;
    } else {
      body["init_latent"] = latent.values;
    }
    auto res = client.Post("/generate", body.dump(), "application/json");
    if (!res || res->status != 200) {
      throw genesis::GeneratorFailure(
          "generate endpoint at " + endpoint_ + " returned " +
          (res ? std::to_string(res->status) : std::string("no response")));
    }
    const auto j = nlohmann::json::parse(res->body);
    genesis::LatentState out;
    out.values = j.at("latent").get<std::vector<double>>();
    out.step_count = latent.step_count + steps;
    last_artifact_b64_ = j.value("artifact_b64", "");
    return out;
  }

  genesis::Artifact finalize(const genesis::LatentState& latent) override {
    genesis::Artifact a;
    a.bytes.assign(last_artifact_b64_.begin(), last_artifact_b64_.end());
    a.digest = genesis::hex_digest(
        embedding::fnv1a64(a.bytes.data(), a.bytes.size()));
    return a;
  }

  int latent_dim() const override { return latent_dim_; }

 private:
  std::string endpoint_;
  int latent_dim_;
  std::uint64_t pending_seed_ = 0;
  std::string last_artifact_b64_;
};

}  // namespace sensorspace::remote
