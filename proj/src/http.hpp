#pragma once

// Minimal JSON POST helper shared by the embedding and chat adapters.

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace humbr::detail {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;

/// Transport failures throw ProviderError(kProviderUnreachable, retryable).
/// Non-2xx responses are returned as-is; callers decide what they mean.
HttpResponse post_json(const std::string& url, const HeaderList& headers,
                       const std::string& body, std::chrono::milliseconds timeout);

/// Maps an HTTP status to a ProviderError: 408/429/5xx are retryable
/// (provider-unreachable), everything else is provider-rejected.
[[noreturn]] void throw_for_status(int status, const std::string& what);

/// Reads the credential from the named env var. Empty name -> empty string.
/// A named but unset variable throws provider-rejected.
std::string read_credential(const std::string& env_name);

}  // namespace humbr::detail
