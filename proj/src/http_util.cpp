#include "fprig/http_util.hpp"

#include <httplib.h>

#include "fprig/error.hpp"

namespace fprig {

Endpoint parse_endpoint(std::string_view url) {
  std::string_view rest = url;
  if (rest.rfind("http://", 0) == 0) {
    rest.remove_prefix(7);
  } else if (rest.find("://") != std::string_view::npos) {
    throw Error(ErrorCode::validation, "only http:// endpoints are supported: " + std::string(url), "endpoint");
  }
  Endpoint ep;
  auto slash = rest.find('/');
  std::string_view hostport = rest.substr(0, slash);
  if (slash != std::string_view::npos) {
    ep.base_path = std::string(rest.substr(slash));
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  auto colon = hostport.rfind(':');
  if (colon != std::string_view::npos) {
    ep.host = std::string(hostport.substr(0, colon));
    try {
      ep.port = std::stoi(std::string(hostport.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::validation, "bad port in endpoint: " + std::string(url), "endpoint");
    }
  } else {
    ep.host = std::string(hostport);
  }
  if (ep.host.empty()) throw Error(ErrorCode::validation, "endpoint has no host: " + std::string(url), "endpoint");
  return ep;
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::ordering: return 422;
    case ErrorCode::transport: return 502;
    case ErrorCode::io: return 500;
    case ErrorCode::provider: return 502;
    default: return 400;
  }
}

ErrorCode error_code_for_status(int status) {
  switch (status) {
    case 404: return ErrorCode::not_found;
    case 409: return ErrorCode::conflict;
    case 422: return ErrorCode::ordering;
    case 400: return ErrorCode::validation;
    default: return ErrorCode::transport;
  }
}

Json error_body(ErrorCode code, const std::string& message, const std::string& field) {
  Json j{{"error", to_string(code)}, {"message", message}};
  if (!field.empty()) j["field"] = field;
  return j;
}

JsonClient::JsonClient(std::string_view url, int timeout_s) : endpoint_(parse_endpoint(url)) {
  client_ = std::make_unique<httplib::Client>(endpoint_.host, endpoint_.port);
  client_->set_connection_timeout(timeout_s, 0);
  client_->set_read_timeout(timeout_s, 0);
  client_->set_write_timeout(timeout_s, 0);
  client_->set_keep_alive(true);
}

JsonClient::~JsonClient() = default;
JsonClient::JsonClient(JsonClient&&) noexcept = default;
JsonClient& JsonClient::operator=(JsonClient&&) noexcept = default;

namespace {

[[noreturn]] void raise_from(const httplib::Result& res, const std::string& what) {
  if (!res) {
    throw Error(ErrorCode::transport, what + ": " + httplib::to_string(res.error()));
  }
  std::string message = res->body;
  std::string field;
  ErrorCode code = error_code_for_status(res->status);
  try {
    auto j = Json::parse(res->body);
    if (j.contains("message")) message = j["message"].get<std::string>();
    if (j.contains("field")) field = j["field"].get<std::string>();
    if (j.contains("error")) {
      auto name = j["error"].get<std::string>();
      for (int c = 0; c <= static_cast<int>(ErrorCode::io); ++c) {
        if (to_string(static_cast<ErrorCode>(c)) == name) code = static_cast<ErrorCode>(c);
      }
    }
  } catch (const Json::exception&) {
  }
  throw Error(code, what + " -> HTTP " + std::to_string(res->status) + ": " + message, field);
}

}  // namespace

Json JsonClient::post(const std::string& path, const Json& body) {
  auto full = endpoint_.base_path + path;
  auto res = client_->Post(full, body.dump(), "application/json");
  if (!res || res->status / 100 != 2) raise_from(res, "POST " + full);
  return res->body.empty() ? Json() : Json::parse(res->body);
}

Json JsonClient::get(const std::string& path) { return Json::parse(get_raw(path)); }

std::string JsonClient::get_raw(const std::string& path) {
  auto full = endpoint_.base_path + path;
  auto res = client_->Get(full);
  if (!res || res->status / 100 != 2) raise_from(res, "GET " + full);
  return res->body;
}

}  // namespace fprig
