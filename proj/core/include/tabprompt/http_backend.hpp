#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "tabprompt/backend.hpp"

namespace tabprompt {

struct HttpBackendConfig {
  /// Full endpoint URL, e.g. "http://127.0.0.1:8000/v1/completions".
  std::string url;
  std::string auth_token;
  double timeout_seconds = 60.0;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::size_t max_in_flight = 8;
  /// Send/parse OpenAI completions bodies instead of {"prompt","max_tokens"} / {"text"}.
  bool openai_compatible = false;
  std::string model;
  /// Generation budget for rank() calls (row population's 512 by default).
  int rank_max_tokens = 512;

  /// Defaults overridden by TABPROMPT_ENDPOINT, TABPROMPT_API_KEY and
  /// TABPROMPT_TIMEOUT when set.
  static HttpBackendConfig from_env();
};

/// Remote model over HTTP. complete() POSTs {"prompt", "max_tokens"} and
/// returns the "text" field; 5xx, 429 and transport failures are retried
/// with exponential backoff up to max_attempts. rank() goes through
/// complete() and parse_ranked_list().
class HttpBackend final : public OracleBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  std::string complete(const CompletionRequest& request) override;
  std::vector<std::string> rank(std::span<const std::string> items,
                                std::string_view context) override;

  /// Total HTTP attempts made so far, retries included.
  std::size_t attempts() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tabprompt
