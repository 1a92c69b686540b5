#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "newscap/backends.hpp"

namespace newscap::backends {

struct RemoteOptions {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::size_t batch_size = 32;
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{100};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds timeout{30000};
  std::ptrdiff_t max_in_flight = 4;
};

struct RemoteStats {
  std::uint64_t requests = 0;  // HTTP round-trips attempted
  std::uint64_t retries = 0;
};

// JSON-over-HTTP client for the inference service:
//   POST /v1/embed/sentence     {"texts":[...]}  -> {"dim":n,"vectors":[[...]]}
//   POST /v1/embed/tokens       {"texts":[...]}  -> {"vectors":[[[...]]]}
//   POST /v1/embed/visual-text  {"texts":[...]}  -> {"dim":n,"vectors":[[...]]}
//   POST /v1/nli                {"pairs":[{"premise","hypothesis"}]} -> {"entailment":[...]}
//   POST /v1/ner                {"texts":[...]}  -> {"entities":[[{"surface","type"}]]}
//   GET  /v1/info               -> {"kinds":[...],"identity":str,"dim":{...}}
// Inputs are split into batches of at most batch_size; responses are
// checked for positional alignment. Connection failures, 408, 429 and 5xx
// are retried with exponential backoff; other 4xx and schema violations
// raise Error{kProtocolError}; exhausted retries raise
// Error{kBackendUnavailable} (or Error{kTimeout} when the last failure was
// a timeout).
class RemoteClient {
 public:
  explicit RemoteClient(RemoteOptions options);

  nlohmann::json info() const;

  std::vector<EmbeddingVector> embed_sentence(std::span<const std::string> texts) const;
  std::vector<std::vector<EmbeddingVector>> embed_tokens(std::span<const std::string> texts) const;
  std::vector<EmbeddingVector> embed_visual_text(std::span<const std::string> texts) const;
  std::vector<double> nli(std::span<const NliPair> pairs) const;
  std::vector<std::vector<RawEntity>> ner(std::span<const std::string> texts) const;

  RemoteStats stats() const { return {requests_.load(), retries_.load()}; }
  const RemoteOptions& options() const { return options_; }

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  nlohmann::json get(const std::string& path) const;
  template <typename Send>
  nlohmann::json round_trip(const std::string& path, Send send) const;

  std::vector<EmbeddingVector> embed_flat(const std::string& path,
                                          std::span<const std::string> texts) const;

  RemoteOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  mutable std::counting_semaphore<> in_flight_;
  mutable std::atomic<std::uint64_t> requests_{0};
  mutable std::atomic<std::uint64_t> retries_{0};
};

// Adapts one contract of a RemoteClient. The descriptor is taken from
// /v1/info at construction.
BackendSet remote_backends(std::shared_ptr<const RemoteClient> client,
                           const std::vector<BackendKind>& kinds);

}  // namespace newscap::backends
