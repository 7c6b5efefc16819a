// SPDX-License-Identifier: Apache-2.0
#include "dmoa/http.hpp"

#include <charconv>
#include <cstdlib>

#include <httplib.h>

#include "dmoa/error.hpp"

namespace dmoa::http {

Url parse_url(const std::string& url) {
  Url out;
  const auto sep = url.find("://");
  if (sep == std::string::npos) throw ConfigError("endpoint '" + url + "' has no scheme");
  out.scheme = url.substr(0, sep);
  if (out.scheme != "http" && out.scheme != "https")
    throw ConfigError("endpoint '" + url + "' must use http or https");
  const auto rest = url.substr(sep + 3);
  const auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    const std::string port = authority.substr(colon + 1);
    const auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), out.port);
    if (ec != std::errc() || p != port.data() + port.size() || out.port < 1 || out.port > 65535)
      throw ConfigError("endpoint '" + url + "' has a malformed port");
    authority.resize(colon);
  } else {
    out.port = out.scheme == "https" ? 443 : 80;
  }
  if (authority.empty()) throw ConfigError("endpoint '" + url + "' has no host");
  out.host = authority;
  return out;
}

std::string post_json(const std::string& url, const std::string& body,
                      const std::string& bearer_token, int timeout_seconds) {
  const Url u = parse_url(url);
  httplib::Client client(u.scheme + "://" + u.host + ":" + std::to_string(u.port));
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
  auto res = client.Post(u.path, headers, body, "application/json");
  if (!res) throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("request to " + url + " returned HTTP " + std::to_string(res->status));
  return res->body;
}

std::string api_key_from_env() {
  const char* v = std::getenv("DMOA_API_KEY");
  return v ? std::string(v) : std::string();
}

}  // namespace dmoa::http
