#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "fprig/error.hpp"
#include "fprig/session_model.hpp"

namespace httplib {
class Client;
}

namespace fprig {

struct Endpoint {
  std::string host;
  int port = 80;
  std::string base_path;  // without trailing slash, may be empty
};

// Accepts "http://host[:port][/base]" or "host:port". Error(validation).
Endpoint parse_endpoint(std::string_view url);

// Thin JSON-over-HTTP client. Connection failures raise Error(transport);
// non-2xx answers raise the error code mapped from the response status,
// carrying the server's message.
class JsonClient {
 public:
  explicit JsonClient(std::string_view url, int timeout_s = 10);
  ~JsonClient();
  JsonClient(JsonClient&&) noexcept;
  JsonClient& operator=(JsonClient&&) noexcept;

  Json post(const std::string& path, const Json& body);
  Json get(const std::string& path);
  std::string get_raw(const std::string& path);
  const Endpoint& endpoint() const { return endpoint_; }

 private:
  Endpoint endpoint_;
  std::unique_ptr<httplib::Client> client_;
};

int http_status_for(ErrorCode code);
ErrorCode error_code_for_status(int status);
Json error_body(ErrorCode code, const std::string& message, const std::string& field = {});

}  // namespace fprig
