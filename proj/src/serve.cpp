#include "lfd/serve.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <filesystem>
#include <iostream>

#include "lfd/errors.hpp"

namespace lfd::serve {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

std::string mime_type(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/vnd.microsoft.icon";
  if (ext == ".wasm") return "application/wasm";
  if (ext == ".txt") return "text/plain; charset=utf-8";
  return "application/octet-stream";
}

std::string resolve_static_path(const std::string& root, const std::string& target) {
  std::string path = target.substr(0, target.find_first_of("?#"));
  if (path.empty() || path.front() != '/') return {};
  if (path.find('\\') != std::string::npos || path.find('\0') != std::string::npos ||
      path.find('%') != std::string::npos)
    return {};
  std::size_t pos = 0;
  while (pos < path.size()) {
    const std::size_t next = path.find('/', pos + 1);
    const std::string seg = path.substr(pos + 1, next == std::string::npos ? std::string::npos : next - pos - 1);
    if (seg == "..") return {};
    if (next == std::string::npos) break;
    pos = next;
  }
  if (path.back() == '/') path += "index.html";
  return root + path;
}

namespace {

class WsConnection;

struct Shared {
  net::io_context& ioc;
  teleop::Session session;
  std::string web_root;
  std::weak_ptr<WsConnection> active;
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, Shared& shared) : ws_(std::move(socket)), shared_(shared) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void send(std::string frame) {
    if (closed_) return;
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) do_write();
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    ws_.text(true);
    if (auto other = shared_.active.lock(); other && other.get() != this) {
      close_after_flush_ = true;
      send(teleop::Session::error_frame("busy", "session occupied by another client"));
      return;
    }
    shared_.active = shared_from_this();
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      release();
      return;
    }
    std::string frame;
    if (ws_.got_text()) {
      frame = beast::buffers_to_string(buffer_.data());
      buffer_.consume(buffer_.size());
      for (auto& reply : shared_.session.handle(frame)) send(std::move(reply));
    } else {
      buffer_.consume(buffer_.size());
      send(teleop::Session::error_frame("malformed", "binary frames are not accepted"));
    }
    do_read();
  }

  void do_write() {
    ws_.async_write(net::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      release();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) {
      do_write();
    } else if (close_after_flush_) {
      closed_ = true;
      ws_.async_close(websocket::close_code::try_again_later,
                      [self = shared_from_this()](beast::error_code) {});
    }
  }

  void release() {
    closed_ = true;
    queue_.clear();
    if (shared_.active.lock().get() == this) shared_.active.reset();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Shared& shared_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool close_after_flush_ = false;
  bool closed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, Shared& shared) : stream_(std::move(socket)), shared_(shared) {}

  void start() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsConnection>(stream_.release_socket(), shared_)->start(std::move(req_));
        return;
      }
      respond(text_response(http::status::not_found, "websocket endpoint is /ws\n"));
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      respond(text_response(http::status::method_not_allowed, "method not allowed\n"));
      return;
    }
    const std::string path = resolve_static_path(shared_.web_root, std::string(req_.target()));
    if (path.empty()) {
      respond(text_response(http::status::bad_request, "bad path\n"));
      return;
    }
    http::file_body::value_type body;
    beast::error_code fec;
    body.open(path.c_str(), beast::file_mode::scan, fec);
    if (fec || std::filesystem::is_directory(path)) {
      respond(text_response(http::status::not_found, "not found\n"));
      return;
    }
    const auto size = body.size();
    if (req_.method() == http::verb::head) {
      http::response<http::empty_body> res{http::status::ok, req_.version()};
      res.set(http::field::content_type, mime_type(path));
      res.content_length(size);
      res.keep_alive(req_.keep_alive());
      respond(std::move(res));
      return;
    }
    http::response<http::file_body> res{std::piecewise_construct, std::make_tuple(std::move(body)),
                                        std::make_tuple(http::status::ok, req_.version())};
    res.set(http::field::content_type, mime_type(path));
    res.content_length(size);
    res.keep_alive(req_.keep_alive());
    respond(std::move(res));
  }

  http::response<http::string_body> text_response(http::status status, std::string text) {
    http::response<http::string_body> res{status, req_.version()};
    res.set(http::field::content_type, "text/plain; charset=utf-8");
    res.keep_alive(req_.keep_alive());
    res.body() = std::move(text);
    res.prepare_payload();
    return res;
  }

  template <class Body>
  void respond(http::response<Body>&& res) {
    auto sp = std::make_shared<http::response<Body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!sp->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  Shared& shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct Server::Impl {
  Impl(SceneConfig scene, ServerOptions opts)
      : options(std::move(opts)),
        acceptor(ioc),
        timer(ioc),
        shared{ioc, teleop::Session(std::move(scene), options.session), options.web_root, {}} {}

  void do_accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
      } else {
        std::make_shared<HttpConnection>(std::move(socket), shared)->start();
      }
      do_accept();
    });
  }

  void schedule_tick() {
    next_tick += period;
    timer.expires_at(next_tick);
    timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      if (auto frame = shared.session.tick()) {
        if (auto conn = shared.active.lock()) conn->send(std::move(*frame));
      }
      schedule_tick();
    });
  }

  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  net::steady_timer timer;
  Shared shared;
  std::chrono::steady_clock::duration period{};
  std::chrono::steady_clock::time_point next_tick{};
};

Server::Server(SceneConfig scene, ServerOptions options) {
  if (!(options.tick_hz > 0.0) || options.tick_hz > 1000.0)
    throw ConfigError("tick_hz", "must be in (0, 1000]");
  if (!std::filesystem::is_directory(options.web_root))
    throw IoError("web root " + options.web_root + " is not a directory");
  impl_ = std::make_unique<Impl>(std::move(scene), std::move(options));
  impl_->period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / impl_->options.tick_hz));
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.address, ec);
  if (ec) throw ConfigError("address", "invalid address " + impl_->options.address);
  const tcp::endpoint endpoint{address, impl_->options.port};
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw IoError("cannot listen on " + impl_->options.address + ":" + std::to_string(impl_->options.port) +
                        ": " + ec.message());
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  impl_->do_accept();
  impl_->next_tick = std::chrono::steady_clock::now();
  impl_->schedule_tick();
  impl_->ioc.run();
}

void Server::stop() { impl_->ioc.stop(); }

}  // namespace lfd::serve
