#include "fprig/http_server.hpp"

#include <sys/socket.h>

#include <charconv>
#include <limits>
#include <map>
#include <set>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "fprig/error.hpp"
#include "fprig/file_util.hpp"
#include "fprig/http_util.hpp"

namespace fprig {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

std::string percent_decode(std::string_view s, bool plus_is_space = false) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int v = 0;
      auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
      if (ec == std::errc{} && p == s.data() + i + 3) {
        out.push_back(static_cast<char>(v));
        i += 2;
        continue;
      }
    }
    out.push_back(plus_is_space && s[i] == '+' ? ' ' : s[i]);
  }
  return out;
}

struct Target {
  std::vector<std::string> parts;  // decoded path segments
  std::map<std::string, std::string> query;
};

Target parse_target(std::string_view target) {
  Target t;
  auto q = target.find('?');
  auto path = target.substr(0, q);
  std::size_t pos = 0;
  while (pos <= path.size()) {
    auto next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    if (next > pos) t.parts.push_back(percent_decode(path.substr(pos, next - pos)));
    pos = next + 1;
  }
  if (q != std::string_view::npos) {
    auto query = target.substr(q + 1);
    while (!query.empty()) {
      auto amp = query.find('&');
      auto kv = query.substr(0, amp);
      auto eq = kv.find('=');
      if (eq == std::string_view::npos) t.query[percent_decode(kv, true)] = "";
      else t.query[percent_decode(kv.substr(0, eq), true)] = percent_decode(kv.substr(eq + 1), true);
      if (amp == std::string_view::npos) break;
      query = query.substr(amp + 1);
    }
  }
  return t;
}

std::int64_t query_int(const Target& t, const std::string& key, std::int64_t fallback) {
  auto it = t.query.find(key);
  if (it == t.query.end() || it->second.empty()) return fallback;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc{} || p != it->second.data() + it->second.size()) {
    throw Error(ErrorCode::validation, key + ": expected an integer", key);
  }
  return v;
}

std::string_view content_type_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".ppm") return "image/x-portable-pixmap";
  if (ext == ".wav") return "audio/wav";
  return "application/octet-stream";
}

Json parse_body(const Request& req) {
  try {
    return Json::parse(req.body());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("request body: ") + e.what(), "body");
  }
}

}  // namespace

struct HttpServer::Impl {
  IngestService& ingest;
  AttestationStore* attestations;
  ServerOptions options;
  net::io_context ioc;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::thread accept_thread;
  std::atomic<bool> stopping{false};

  std::mutex mu;
  std::condition_variable cv;
  std::set<std::shared_ptr<tcp::socket>> sockets;

  Impl(IngestService& i, AttestationStore* a, ServerOptions o) : ingest(i), attestations(a), options(std::move(o)) {}

  Response make(const Request& req, http::status status, std::string body, std::string_view type) {
    Response res{status, req.version()};
    res.set(http::field::server, "fprig");
    res.set(http::field::content_type, std::string(type));
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  }

  Response json(const Request& req, const Json& body, http::status status = http::status::ok) {
    return make(req, status, body.dump(), "application/json");
  }

  Response error(const Request& req, ErrorCode code, const std::string& message, const std::string& field = {}) {
    return json(req, error_body(code, message, field), static_cast<http::status>(http_status_for(code)));
  }

  AttestationStore& require_attestations() {
    if (attestations == nullptr) throw Error(ErrorCode::not_found, "this server hosts no attestation service");
    return *attestations;
  }

  Response handle_session(const Request& req, const Target& t) {
    const auto method = req.method();
    const auto& sid = t.parts[1];
    const std::string action = t.parts.size() > 2 ? t.parts[2] : "";
    if (method == http::verb::post && action == "ingest" && t.parts.size() == 3) {
      auto body = parse_body(req);
      auto decode = [&](const Json& j) {
        auto e = envelope_from_json(j);
        if (e.session_id != sid) throw Error(ErrorCode::validation, "session_id: does not match the URL", "session_id");
        return e;
      };
      if (body.is_array()) {
        std::vector<IngestEnvelope> batch;
        batch.reserve(body.size());
        for (const auto& j : body) batch.push_back(decode(j));
        Json acks = Json::array();
        for (const auto& a : ingest.ingest_batch(batch)) acks.push_back(ack_to_json(a));
        return json(req, acks);
      }
      return json(req, ack_to_json(ingest.ingest(decode(body))));
    }
    if (method == http::verb::post && action == "stop" && t.parts.size() == 3) {
      return json(req, manifest_to_json(ingest.stop_session(sid)));
    }
    if (method == http::verb::post && action == "rotate" && t.parts.size() == 3) {
      auto seg = ingest.rotate_segment(sid);
      return json(req, {{"segment_index", seg.segment_index}, {"records", seg.records.size()}});
    }
    if (method == http::verb::get && action == "manifest" && t.parts.size() == 3) {
      return json(req, manifest_to_json(ingest.manifest(sid)));
    }
    if (method == http::verb::get && action == "records" && t.parts.size() == 3) {
      auto t0 = query_int(t, "t0", 0);
      auto t1 = query_int(t, "t1", std::numeric_limits<std::int64_t>::max());
      auto kinds_it = t.query.find("kinds");
      auto kinds = parse_kinds(kinds_it == t.query.end() ? "" : kinds_it->second);
      Json out = Json::array();
      for (const auto& r : ingest.playback(sid, t0, t1, kinds)) out.push_back(record_to_json(r));
      return json(req, out);
    }
    if (method == http::verb::get && action == "media" && t.parts.size() > 3) {
      // Accepts both the file name and the MediaRef path ("media/...").
      std::size_t first = t.parts.size() > 4 && t.parts[3] == "media" ? 4 : 3;
      std::string rel = "media";
      for (std::size_t i = first; i < t.parts.size(); ++i) rel += "/" + t.parts[i];
      auto bytes = ingest.media(sid, rel);
      return make(req, http::status::ok, std::move(bytes), content_type_for(rel));
    }
    throw Error(ErrorCode::not_found, "no route for " + std::string(req.target()));
  }

  Response handle(const Request& req) {
    try {
      const auto t = parse_target(std::string_view(req.target().data(), req.target().size()));
      const auto method = req.method();
      const auto& p = t.parts;
      if (method == http::verb::options) {
        auto res = make(req, http::status::no_content, "", "text/plain");
        res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
        return res;
      }
      if (p.empty() && method == http::verb::get) {
        auto res = make(req, http::status::found, "", "text/plain");
        res.set(http::field::location, "/console/");
        return res;
      }
      if (p.size() == 1 && p[0] == "healthz" && method == http::verb::get) return json(req, {{"status", "ok"}});
      if (p.size() == 1 && p[0] == "sessions") {
        if (method == http::verb::get) return json(req, ingest.sessions());
        if (method == http::verb::post) {
          return json(req, manifest_to_json(ingest.start_session(config_from_json(parse_body(req)))),
                      http::status::created);
        }
      }
      if (p.size() >= 2 && p[0] == "sessions") return handle_session(req, t);
      if (p.size() == 1 && p[0] == "attest" && method == http::verb::post) {
        auto body = parse_body(req);
        std::string sid, digest;
        std::int64_t index = 0;
        try {
          sid = body.at("session_id").get<std::string>();
          index = body.at("segment_index").get<std::int64_t>();
          digest = body.at("file_digest").get<std::string>();
        } catch (const Json::exception& e) {
          throw Error(ErrorCode::validation, std::string("attest request: ") + e.what());
        }
        return json(req, {{"response_digest", require_attestations().attest(sid, index, digest)}});
      }
      if (p.size() == 2 && p[0] == "attestations" && method == http::verb::get) {
        Json out = Json::array();
        for (const auto& a : require_attestations().list(p[1])) out.push_back(attestation_to_json(a, false));
        return json(req, out);
      }
      if (p.size() == 1 && p[0] == "verify" && method == http::verb::post) {
        auto body = parse_body(req);
        auto sid = body.value("session_id", std::string{});
        auto& store = require_attestations();
        if (!ingest.store().exists(sid)) throw Error(ErrorCode::not_found, "unknown session '" + sid + "'", "session_id");
        return json(req, chain_report_to_json(verify_chain(ingest.store(), sid, store)));
      }
      if (!p.empty() && p[0] == "console" && method == http::verb::get && !options.console_dir.empty()) {
        std::filesystem::path rel;
        for (std::size_t i = 1; i < p.size(); ++i) {
          if (p[i] == ".." || p[i] == ".") throw Error(ErrorCode::not_found, "bad path");
          rel /= p[i];
        }
        if (rel.empty()) rel = "index.html";
        auto full = options.console_dir / rel;
        return make(req, http::status::ok, read_file(full), content_type_for(full));
      }
      throw Error(ErrorCode::not_found, "no route for " + std::string(req.method_string()) + " " +
                                            std::string(req.target()));
    } catch (const Error& e) {
      return error(req, e.code(), e.what(), e.field());
    } catch (const Json::exception& e) {
      return error(req, ErrorCode::validation, e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", std::string(req.method_string()), std::string(req.target()), e.what());
      return error(req, ErrorCode::io, e.what());
    }
  }

  void live(tcp::socket& socket, const Request& req, const std::string& sid) {
    std::shared_ptr<LiveQueue> queue;
    try {
      queue = ingest.subscribe(sid);
    } catch (const Error& e) {
      http::write(socket, error(req, e.code(), e.what(), e.field()));
      return;
    }
    websocket::stream<tcp::socket&> ws{socket};
    try {
      ws.accept(req);
      ws.text(true);
      int idle = 0;
      while (!stopping) {
        auto ev = queue->pop(std::chrono::milliseconds(200));
        if (!ev) {
          if (queue->finished()) break;
          if (++idle >= 5) {  // keepalive; also notices vanished clients
            ws.ping({});
            idle = 0;
          }
          continue;
        }
        idle = 0;
        ws.write(net::buffer(ev->dump()));
        if (queue->finished()) break;
      }
      beast::error_code ec;
      ws.close(websocket::close_code::normal, ec);
    } catch (const std::exception&) {
      // client went away
    }
    ingest.unsubscribe(sid, queue);
  }

  void session(std::shared_ptr<tcp::socket> socket) {
    beast::flat_buffer buffer;
    try {
      for (;;) {
        http::request_parser<http::string_body> parser;
        parser.body_limit(options.body_limit);
        http::read(*socket, buffer, parser);
        auto req = parser.release();
        if (websocket::is_upgrade(req)) {
          auto t = parse_target(std::string_view(req.target().data(), req.target().size()));
          if (t.parts.size() == 3 && t.parts[0] == "sessions" && t.parts[2] == "live") {
            live(*socket, req, t.parts[1]);
          } else {
            http::write(*socket, error(req, ErrorCode::not_found, "no WebSocket route here"));
          }
          break;
        }
        auto res = handle(req);
        http::write(*socket, res);
        if (!res.keep_alive()) break;
      }
    } catch (const std::exception&) {
      // connection closed or malformed request
    }
    beast::error_code ec;
    socket->shutdown(tcp::socket::shutdown_send, ec);
    std::lock_guard lock(mu);
    sockets.erase(socket);
    cv.notify_all();
  }

  void accept_loop() {
    while (!stopping) {
      auto socket = std::make_shared<tcp::socket>(ioc);
      beast::error_code ec;
      acceptor->accept(*socket, ec);
      if (ec) {
        if (stopping) break;
        continue;
      }
      std::lock_guard lock(mu);
      if (stopping) break;
      sockets.insert(socket);
      std::thread([this, socket] { session(socket); }).detach();
    }
  }
};

HttpServer::HttpServer(IngestService& ingest, AttestationStore* attestations, ServerOptions options)
    : impl_(std::make_unique<Impl>(ingest, attestations, std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  auto& im = *impl_;
  try {
    auto address = net::ip::make_address(im.options.host);
    im.acceptor = std::make_unique<tcp::acceptor>(im.ioc);
    tcp::endpoint ep{address, static_cast<unsigned short>(im.options.port)};
    im.acceptor->open(ep.protocol());
    im.acceptor->set_option(net::socket_base::reuse_address(true));
    im.acceptor->bind(ep);
    im.acceptor->listen();
    port_ = im.acceptor->local_endpoint().port();
  } catch (const std::exception& e) {
    im.acceptor.reset();
    throw Error(ErrorCode::configuration,
                "cannot listen on " + im.options.host + ":" + std::to_string(im.options.port) + ": " + e.what(), "port");
  }
  im.accept_thread = std::thread([&im] { im.accept_loop(); });
}

void HttpServer::stop() {
  auto& im = *impl_;
  if (!im.acceptor || im.stopping.exchange(true)) return;
  ::shutdown(im.acceptor->native_handle(), SHUT_RDWR);
  if (im.accept_thread.joinable()) im.accept_thread.join();
  std::unique_lock lock(im.mu);
  for (const auto& s : im.sockets) ::shutdown(s->native_handle(), SHUT_RDWR);
  im.cv.wait(lock, [&] { return im.sockets.empty(); });
  beast::error_code ec;
  im.acceptor->close(ec);
}

std::string HttpServer::url() const { return "http://" + impl_->options.host + ":" + std::to_string(port_); }

}  // namespace fprig
