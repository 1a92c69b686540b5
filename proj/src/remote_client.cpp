#include "newscap/remote_client.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>

#include "newscap/error.hpp"

namespace newscap::backends {

using nlohmann::json;

namespace {

[[noreturn]] void protocol_error(const std::string& message) {
  throw Error(ErrorKind::kProtocolError, message);
}

EmbeddingVector parse_vector(const json& j, std::size_t expected_dim) {
  if (!j.is_array()) protocol_error("vector is not an array");
  std::vector<double> values;
  values.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) protocol_error("vector entry is not a number");
    values.push_back(x.get<double>());
  }
  if (expected_dim != 0 && values.size() != expected_dim) {
    protocol_error("vector has dim " + std::to_string(values.size()) + ", expected " +
                   std::to_string(expected_dim));
  }
  try {
    return EmbeddingVector(std::move(values));
  } catch (const Error& e) {
    protocol_error(e.detail());
  }
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) protocol_error(std::string("response lacks '") + key + "'");
  return obj.at(key);
}

void expect_count(const json& arr, std::size_t n, const char* what) {
  if (!arr.is_array() || arr.size() != n) {
    protocol_error(std::string(what) + ": expected " + std::to_string(n) + " items");
  }
}

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

template <typename T, typename Fn>
auto in_batches(std::span<const T> items, std::size_t batch_size, Fn fn) {
  using Out = typename decltype(fn(items))::value_type;
  std::vector<Out> out;
  out.reserve(items.size());
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    auto chunk = items.subspan(start, std::min(batch_size, items.size() - start));
    auto part = fn(chunk);
    for (auto& p : part) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

RemoteClient::RemoteClient(RemoteOptions options)
    : options_(std::move(options)),
      in_flight_(std::max<std::ptrdiff_t>(options_.max_in_flight, 1)) {
  if (options_.batch_size == 0) throw Error(ErrorKind::kInvalidConfig, "batch size must be positive");
  if (options_.max_attempts < 1) throw Error(ErrorKind::kInvalidConfig, "max_attempts must be >= 1");
  const std::string& url = options_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kInvalidConfig, "remote URL needs a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    path_prefix_ = url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

template <typename Send>
json RemoteClient::round_trip(const std::string& path, Send send) const {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Client client(scheme_host_port_);
  auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  auto backoff = options_.initial_backoff;
  std::string last_failure;
  bool last_was_timeout = false;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      ++retries_;
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(std::llround(static_cast<double>(backoff.count()) *
                                              options_.backoff_multiplier)));
    }
    ++requests_;
    httplib::Result res = send(client, path_prefix_ + path);
    if (!res) {
      auto err = res.error();
      last_was_timeout = err == httplib::Error::Read || err == httplib::Error::Write ||
                         err == httplib::Error::ConnectionTimeout;
      last_failure = httplib::to_string(err);
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      json body = json::parse(res->body, nullptr, false);
      if (body.is_discarded()) protocol_error(path + ": response is not valid JSON");
      return body;
    }
    if (!transient_status(res->status)) {
      protocol_error(path + ": HTTP " + std::to_string(res->status));
    }
    last_was_timeout = res->status == 408;
    last_failure = "HTTP " + std::to_string(res->status);
  }
  throw Error(last_was_timeout ? ErrorKind::kTimeout : ErrorKind::kBackendUnavailable,
              path + ": " + last_failure + " after " + std::to_string(options_.max_attempts) +
                  " attempt(s)");
}

json RemoteClient::post(const std::string& path, const json& body) const {
  const std::string payload = body.dump();
  return round_trip(path, [&payload](httplib::Client& c, const std::string& full) {
    return c.Post(full, payload, "application/json");
  });
}

json RemoteClient::get(const std::string& path) const {
  return round_trip(path, [](httplib::Client& c, const std::string& full) { return c.Get(full); });
}

json RemoteClient::info() const {
  json body = get("/v1/info");
  if (!body.is_object() || !body.contains("identity") || !body["identity"].is_string()) {
    protocol_error("/v1/info lacks an identity string");
  }
  return body;
}

std::vector<EmbeddingVector> RemoteClient::embed_flat(const std::string& path,
                                                      std::span<const std::string> texts) const {
  return in_batches(texts, options_.batch_size, [&](std::span<const std::string> chunk) {
    json body = post(path, json{{"texts", std::vector<std::string>(chunk.begin(), chunk.end())}});
    const json& dim = field(body, "dim");
    if (!dim.is_number_unsigned() || dim.get<std::size_t>() == 0) protocol_error(path + ": bad dim");
    const json& vectors = field(body, "vectors");
    expect_count(vectors, chunk.size(), path.c_str());
    std::vector<EmbeddingVector> out;
    for (const auto& v : vectors) out.push_back(parse_vector(v, dim.get<std::size_t>()));
    return out;
  });
}

std::vector<EmbeddingVector> RemoteClient::embed_sentence(std::span<const std::string> texts) const {
  return embed_flat("/v1/embed/sentence", texts);
}

std::vector<EmbeddingVector> RemoteClient::embed_visual_text(
    std::span<const std::string> texts) const {
  return embed_flat("/v1/embed/visual-text", texts);
}

std::vector<std::vector<EmbeddingVector>> RemoteClient::embed_tokens(
    std::span<const std::string> texts) const {
  return in_batches(texts, options_.batch_size, [&](std::span<const std::string> chunk) {
    json body = post("/v1/embed/tokens",
                     json{{"texts", std::vector<std::string>(chunk.begin(), chunk.end())}});
    const json& vectors = field(body, "vectors");
    expect_count(vectors, chunk.size(), "/v1/embed/tokens");
    std::vector<std::vector<EmbeddingVector>> out;
    for (const auto& per_text : vectors) {
      if (!per_text.is_array()) protocol_error("/v1/embed/tokens: token list is not an array");
      std::vector<EmbeddingVector> row;
      std::size_t dim = 0;
      for (const auto& v : per_text) {
        row.push_back(parse_vector(v, dim));
        dim = row.back().dim();
      }
      out.push_back(std::move(row));
    }
    return out;
  });
}

std::vector<double> RemoteClient::nli(std::span<const NliPair> pairs) const {
  return in_batches(pairs, options_.batch_size, [&](std::span<const NliPair> chunk) {
    json req = json::array();
    for (const auto& p : chunk) req.push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
    json body = post("/v1/nli", json{{"pairs", req}});
    const json& scores = field(body, "entailment");
    expect_count(scores, chunk.size(), "/v1/nli");
    std::vector<double> out;
    for (const auto& s : scores) {
      if (!s.is_number()) protocol_error("/v1/nli: entailment is not a number");
      double v = s.get<double>();
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) protocol_error("/v1/nli: entailment outside [0,1]");
      out.push_back(v);
    }
    return out;
  });
}

std::vector<std::vector<RawEntity>> RemoteClient::ner(std::span<const std::string> texts) const {
  return in_batches(texts, options_.batch_size, [&](std::span<const std::string> chunk) {
    json body = post("/v1/ner", json{{"texts", std::vector<std::string>(chunk.begin(), chunk.end())}});
    const json& entities = field(body, "entities");
    expect_count(entities, chunk.size(), "/v1/ner");
    std::vector<std::vector<RawEntity>> out;
    for (const auto& per_text : entities) {
      if (!per_text.is_array()) protocol_error("/v1/ner: entity list is not an array");
      std::vector<RawEntity> row;
      for (const auto& e : per_text) {
        const json& surface = field(e, "surface");
        const json& type = field(e, "type");
        if (!surface.is_string() || !type.is_string()) protocol_error("/v1/ner: bad entity");
        row.push_back({surface.get<std::string>(), type.get<std::string>()});
      }
      out.push_back(std::move(row));
    }
    return out;
  });
}

namespace {

BackendDescriptor describe(const json& info, BackendKind kind) {
  BackendDescriptor d{kind, info.at("identity").get<std::string>(), 0};
  const std::string name(to_string(kind));
  if (info.contains("identities") && info["identities"].is_object() &&
      info["identities"].contains(name) && info["identities"][name].is_string()) {
    d.identity = info["identities"][name].get<std::string>();
  }
  if (info.contains("dim") && info["dim"].is_object()) {
    for (const char* key : {name.c_str(), kind == BackendKind::kSentenceEmbedder ? "sentence"
                                          : kind == BackendKind::kTokenEmbedder  ? "tokens"
                                          : kind == BackendKind::kVisualTextEmbedder ? "visual-text"
                                                                                     : ""}) {
      if (*key && info["dim"].contains(key) && info["dim"][key].is_number_unsigned()) {
        d.dim = info["dim"][key].get<std::size_t>();
      }
    }
  }
  d.identity = "http:" + d.identity;
  return d;
}

class RemoteSentence final : public SentenceEmbedder {
 public:
  RemoteSentence(std::shared_ptr<const RemoteClient> c, BackendDescriptor d)
      : c_(std::move(c)), d_(std::move(d)) {}
  BackendDescriptor descriptor() const override { return d_; }
  EmbeddingVector embed(std::string_view text) const override {
    std::string t(text);
    return c_->embed_sentence(std::span<const std::string>(&t, 1)).front();
  }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
    return c_->embed_sentence(texts);
  }

 private:
  std::shared_ptr<const RemoteClient> c_;
  BackendDescriptor d_;
};

class RemoteTokens final : public TokenEmbedder {
 public:
  RemoteTokens(std::shared_ptr<const RemoteClient> c, BackendDescriptor d)
      : c_(std::move(c)), d_(std::move(d)) {}
  BackendDescriptor descriptor() const override { return d_; }
  std::vector<EmbeddingVector> embed_tokens(std::string_view text) const override {
    std::string t(text);
    return c_->embed_tokens(std::span<const std::string>(&t, 1)).front();
  }
  std::vector<std::vector<EmbeddingVector>> embed_tokens_batch(
      std::span<const std::string> texts) const override {
    return c_->embed_tokens(texts);
  }

 private:
  std::shared_ptr<const RemoteClient> c_;
  BackendDescriptor d_;
};

class RemoteVisualText final : public VisualTextEmbedder {
 public:
  RemoteVisualText(std::shared_ptr<const RemoteClient> c, BackendDescriptor d)
      : c_(std::move(c)), d_(std::move(d)) {}
  BackendDescriptor descriptor() const override { return d_; }
  EmbeddingVector embed_text(std::string_view text) const override {
    std::string t(text);
    return c_->embed_visual_text(std::span<const std::string>(&t, 1)).front();
  }
  std::vector<EmbeddingVector> embed_text_batch(std::span<const std::string> texts) const override {
    return c_->embed_visual_text(texts);
  }

 private:
  std::shared_ptr<const RemoteClient> c_;
  BackendDescriptor d_;
};

class RemoteNli final : public NliScorer {
 public:
  RemoteNli(std::shared_ptr<const RemoteClient> c, BackendDescriptor d)
      : c_(std::move(c)), d_(std::move(d)) {}
  BackendDescriptor descriptor() const override { return d_; }
  double entailment(std::string_view premise, std::string_view hypothesis) const override {
    NliPair p{std::string(premise), std::string(hypothesis)};
    return c_->nli(std::span<const NliPair>(&p, 1)).front();
  }
  std::vector<double> entailment_batch(std::span<const NliPair> pairs) const override {
    return c_->nli(pairs);
  }

 private:
  std::shared_ptr<const RemoteClient> c_;
  BackendDescriptor d_;
};

class RemoteNer final : public EntityExtractor {
 public:
  RemoteNer(std::shared_ptr<const RemoteClient> c, BackendDescriptor d)
      : c_(std::move(c)), d_(std::move(d)) {}
  BackendDescriptor descriptor() const override { return d_; }
  std::vector<RawEntity> extract(std::string_view text) const override {
    std::string t(text);
    return c_->ner(std::span<const std::string>(&t, 1)).front();
  }
  std::vector<std::vector<RawEntity>> extract_batch(
      std::span<const std::string> texts) const override {
    return c_->ner(texts);
  }

 private:
  std::shared_ptr<const RemoteClient> c_;
  BackendDescriptor d_;
};

}  // namespace

BackendSet remote_backends(std::shared_ptr<const RemoteClient> client,
                           const std::vector<BackendKind>& kinds) {
  json info = client->info();
  BackendSet set;
  for (BackendKind kind : kinds) {
    BackendDescriptor d = describe(info, kind);
    switch (kind) {
      case BackendKind::kSentenceEmbedder:
        set.sentence = std::make_shared<RemoteSentence>(client, d);
        break;
      case BackendKind::kTokenEmbedder:
        set.tokens = std::make_shared<RemoteTokens>(client, d);
        break;
      case BackendKind::kVisualTextEmbedder:
        set.visual_text = std::make_shared<RemoteVisualText>(client, d);
        break;
      case BackendKind::kNliScorer:
        set.nli = std::make_shared<RemoteNli>(client, d);
        break;
      case BackendKind::kEntityExtractor:
        set.ner = std::make_shared<RemoteNer>(client, d);
        break;
    }
  }
  return set;
}

}  // namespace newscap::backends
