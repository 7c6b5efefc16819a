// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace dmoa::http {

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path;    // begins with '/'
};

/// Splits "scheme://host[:port]/path". Throws ConfigError on other shapes.
Url parse_url(const std::string& url);

/// POSTs a JSON body and returns the response body. Non-2xx statuses and
/// connection failures raise TransportError.
std::string post_json(const std::string& url, const std::string& body,
                      const std::string& bearer_token, int timeout_seconds = 120);

/// Value of DMOA_API_KEY, or empty.
std::string api_key_from_env();

}  // namespace dmoa::http
