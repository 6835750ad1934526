#include "fprig/live_client.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "fprig/error.hpp"
#include "fprig/http_util.hpp"

namespace fprig {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct LiveClient::Impl {
  net::io_context ioc;
  websocket::stream<tcp::socket> ws{ioc};
  std::thread reader;
  mutable std::mutex mu;
  std::condition_variable cv;
  std::deque<Json> queue;
  bool done = false;

  void run() {
    try {
      for (;;) {
        beast::flat_buffer buf;
        ws.read(buf);
        auto text = beast::buffers_to_string(buf.data());
        std::lock_guard lock(mu);
        queue.push_back(Json::parse(text, nullptr, false));
        cv.notify_all();
      }
    } catch (...) {
      // closed by peer or by close()
    }
    std::lock_guard lock(mu);
    done = true;
    cv.notify_all();
  }
};

LiveClient::LiveClient(std::string_view endpoint, const std::string& session_id) : impl_(std::make_unique<Impl>()) {
  auto ep = parse_endpoint(endpoint);
  try {
    tcp::resolver resolver(impl_->ioc);
    auto results = resolver.resolve(ep.host, std::to_string(ep.port));
    net::connect(impl_->ws.next_layer(), results.begin(), results.end());
    impl_->ws.handshake(ep.host + ":" + std::to_string(ep.port), ep.base_path + "/sessions/" + session_id + "/live");
  } catch (const std::exception& e) {
    throw Error(ErrorCode::transport, std::string("live feed: ") + e.what());
  }
  impl_->reader = std::thread([impl = impl_.get()] { impl->run(); });
}

LiveClient::~LiveClient() { close(); }

std::optional<Json> LiveClient::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait_for(lock, timeout, [&] { return !impl_->queue.empty() || impl_->done; });
  if (impl_->queue.empty()) return std::nullopt;
  auto ev = std::move(impl_->queue.front());
  impl_->queue.pop_front();
  return ev;
}

bool LiveClient::closed() const {
  std::lock_guard lock(impl_->mu);
  return impl_->done && impl_->queue.empty();
}

void LiveClient::close() {
  if (!impl_) return;
  beast::error_code ec;
  impl_->ws.next_layer().shutdown(tcp::socket::shutdown_both, ec);
  impl_->ws.next_layer().close(ec);
  if (impl_->reader.joinable()) impl_->reader.join();
}

}  // namespace fprig
