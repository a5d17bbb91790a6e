#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace minerscope::ws {

/// Blocking WebSocket client for text frames. All stream I/O runs on an
/// internal thread, so callers may send from one thread while another
/// waits in read_for(); incoming messages queue up in between reads.
class Client {
  public:
    Client(const std::string& host, std::uint16_t port, const std::string& target = "/");
    ~Client();
    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;

    void send_text(std::string payload);

    /// Next queued message; std::nullopt on timeout. Check closed() to
    /// tell a quiet peer from a vanished one.
    std::optional<std::string> read_for(std::chrono::milliseconds timeout);

    bool closed() const;
    void close();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One accepted server-side connection. Handlers own their connection
/// thread: reads and writes must stay on it.
class Connection {
  public:
    virtual ~Connection() = default;

    virtual void send_text(std::string_view payload) = 0;
    /// Blocks for the next text message; std::nullopt once the peer closes.
    virtual std::optional<std::string> read_text() = 0;
    /// Request path from the upgrade ("/" when none given).
    virtual const std::string& target() const = 0;
};

/// Minimal threaded WebSocket server: one thread per connection running
/// the supplied handler until it returns or the peer disconnects.
class Server {
  public:
    using Handler = std::function<void(Connection&)>;

    /// Binds 127.0.0.1; port 0 picks a free one (see port()).
    Server(std::uint16_t port, Handler handler);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const;
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace minerscope::ws
