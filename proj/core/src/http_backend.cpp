#include "tabprompt/http_backend.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "tabprompt/error.hpp"
#include "tabprompt/response_parser.hpp"

namespace tabprompt {
namespace {

using nlohmann::json;

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw DataError("endpoint URL needs a scheme: '" + url + "'");
  if (url.compare(0, scheme, "http") != 0)
    throw DataError("only http:// endpoints are supported: '" + url + "'");
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig cfg;
  if (const char* v = std::getenv("TABPROMPT_ENDPOINT")) cfg.url = v;
  if (const char* v = std::getenv("TABPROMPT_API_KEY")) cfg.auth_token = v;
  if (const char* v = std::getenv("TABPROMPT_TIMEOUT")) cfg.timeout_seconds = std::atof(v);
  return cfg;
}

struct HttpBackend::Impl {
  explicit Impl(HttpBackendConfig c)
      : cfg(std::move(c)),
        endpoint(split_url(cfg.url)),
        slots(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, cfg.max_in_flight))) {}

  std::string body_for(const CompletionRequest& req) const {
    json body = {{"prompt", req.prompt}, {"max_tokens", req.max_tokens}};
    if (cfg.openai_compatible && !cfg.model.empty()) body["model"] = cfg.model;
    return body.dump(-1, ' ', false, json::error_handler_t::replace);
  }

  std::string text_of(const std::string& payload) const {
    json doc;
    try {
      doc = json::parse(payload);
    } catch (const json::parse_error& e) {
      throw BackendError(std::string("malformed response body: ") + e.what());
    }
    if (cfg.openai_compatible) {
      auto choices = doc.find("choices");
      if (choices == doc.end() || !choices->is_array() || choices->empty() ||
          !(*choices)[0].contains("text") || !(*choices)[0]["text"].is_string())
        throw BackendError("malformed response body: missing choices[0].text");
      return (*choices)[0]["text"].get<std::string>();
    }
    auto text = doc.find("text");
    if (text == doc.end() || !text->is_string())
      throw BackendError("malformed response body: missing string field 'text'");
    return text->get<std::string>();
  }

  std::string post(const CompletionRequest& req) {
    slots.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots};

    httplib::Client client(endpoint.base);
    const auto timeout = std::chrono::duration<double>(cfg.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    httplib::Headers headers;
    if (!cfg.auth_token.empty()) headers.emplace("Authorization", "Bearer " + cfg.auth_token);

    const auto body = body_for(req);
    auto backoff = cfg.initial_backoff;
    int last_status = 0;
    std::string last_error;
    const int max_attempts = std::max(1, cfg.max_attempts);
    int made = 0;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      ++attempts;
      ++made;
      auto res = client.Post(endpoint.path, headers, body, "application/json");
      if (res && res->status >= 200 && res->status < 300) return text_of(res->body);
      if (res) {
        last_status = res->status;
        last_error = "HTTP " + std::to_string(res->status);
        if (!retryable(res->status)) break;
      } else {
        last_status = 0;
        last_error = "transport error: " + httplib::to_string(res.error());
      }
      if (attempt < max_attempts) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
    }
    throw BackendError("completion request to " + cfg.url + " failed after " +
                           std::to_string(made) + " attempt(s) (" + last_error + ")",
                       last_status);
  }

  HttpBackendConfig cfg;
  Endpoint endpoint;
  std::counting_semaphore<> slots;
  std::atomic<std::size_t> attempts{0};
};

HttpBackend::HttpBackend(HttpBackendConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const CompletionRequest& request) { return impl_->post(request); }

std::vector<std::string> HttpBackend::rank(std::span<const std::string> items,
                                           std::string_view context) {
  CompletionRequest req;
  req.prompt = std::string(context);
  req.max_tokens = impl_->cfg.rank_max_tokens;
  return parse_ranked_list(complete(req), items);
}

std::size_t HttpBackend::attempts() const noexcept { return impl_->attempts.load(); }

}  // namespace tabprompt
