#pragma once

#include <memory>
#include <string>

#include "lfd/teleop.hpp"

namespace lfd::serve {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::string web_root = "web";
  double tick_hz = 20.0;
  teleop::SessionOptions session;
};

// Static file server plus one websocket channel at /ws speaking the teleop
// protocol. Single-threaded; run() blocks until stop().
class Server {
 public:
  Server(SceneConfig scene, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Bound port (useful with port 0). Valid after construction.
  unsigned short port() const;
  void run();
  // Safe to call from another thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Content type by file extension.
std::string mime_type(const std::string& path);
// Maps a request target to a file under `root`; empty when the target
// escapes the root or is malformed.
std::string resolve_static_path(const std::string& root, const std::string& target);

}  // namespace lfd::serve
