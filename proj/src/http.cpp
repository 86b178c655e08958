#include "http.hpp"

#include <cstdlib>

#include "humbr/error.hpp"

#ifdef HUMBR_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

namespace humbr::detail {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint is not a URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse post_json(const std::string& url, const HeaderList& headers,
                       const std::string& body, std::chrono::milliseconds timeout) {
  const SplitUrl parts = split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  auto res = client.Post(parts.path, hdrs, body, "application/json");
  if (!res) {
    throw ProviderError(ErrorCode::kProviderUnreachable,
                        parts.origin + ": " + httplib::to_string(res.error()), 0, true);
  }
  return {res->status, res->body};
}

void throw_for_status(int status, const std::string& what) {
  const bool retryable = status == 408 || status == 429 || status >= 500;
  const std::string msg = what + ": HTTP " + std::to_string(status);
  if (retryable) throw ProviderError(ErrorCode::kProviderUnreachable, msg, status, true);
  throw ProviderError(ErrorCode::kProviderRejected, msg, status, false);
}

std::string read_credential(const std::string& env_name) {
  if (env_name.empty()) return {};
  const char* value = std::getenv(env_name.c_str());
  if (value == nullptr) {
    throw ProviderError(ErrorCode::kProviderRejected,
                        "credential variable " + env_name + " is not set", 0, false);
  }
  return value;
}

}  // namespace humbr::detail
