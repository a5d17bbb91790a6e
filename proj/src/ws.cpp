#include "minerscope/ws.hpp"

#include <atomic>
#include <chrono>
#include <list>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/address.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace minerscope::ws {

namespace beast = boost::beast;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct Client::Impl {
    net::io_context ioc;
    beast::websocket::stream<tcp::socket> stream{ioc};
    std::thread io_thread;

    std::mutex mutex;
    std::condition_variable ready;
    std::deque<std::string> inbox;
    std::deque<std::string> outbox;
    bool writing = false;
    std::atomic<bool> closed{false};

    beast::flat_buffer buffer;

    void start_read() {
        stream.async_read(buffer, [this](beast::error_code ec, std::size_t) {
            if (ec) {
                mark_closed();
                return;
            }
            {
                std::lock_guard lock(mutex);
                inbox.push_back(beast::buffers_to_string(buffer.data()));
            }
            buffer.consume(buffer.size());
            ready.notify_all();
            start_read();
        });
    }

    void start_write() {
        writing = true;
        stream.async_write(net::buffer(outbox.front()), [this](beast::error_code ec, std::size_t) {
            outbox.pop_front();
            if (ec) {
                mark_closed();
                return;
            }
            if (!outbox.empty())
                start_write();
            else
                writing = false;
        });
    }

    void mark_closed() {
        closed = true;
        ready.notify_all();
    }
};

Client::Client(const std::string& host, std::uint16_t port, const std::string& target)
    : impl_(std::make_unique<Impl>()) {
    tcp::resolver resolver(impl_->ioc);
    auto endpoints = resolver.resolve(host, std::to_string(port));
    net::connect(impl_->stream.next_layer(), endpoints);
    impl_->stream.handshake(host + ":" + std::to_string(port), target);

    impl_->start_read();
    impl_->io_thread = std::thread([impl = impl_.get()] { impl->ioc.run(); });
}

Client::~Client() {
    close();
    impl_->ioc.stop();
    if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

void Client::send_text(std::string payload) {
    if (impl_->closed) throw std::runtime_error("websocket client: connection closed");
    net::post(impl_->ioc, [impl = impl_.get(), payload = std::move(payload)]() mutable {
        impl->outbox.push_back(std::move(payload));
        if (!impl->writing) impl->start_write();
    });
}

std::optional<std::string> Client::read_for(std::chrono::milliseconds timeout) {
    std::unique_lock lock(impl_->mutex);
    impl_->ready.wait_for(lock, timeout,
                          [this] { return !impl_->inbox.empty() || impl_->closed; });
    if (impl_->inbox.empty()) return std::nullopt;
    std::string message = std::move(impl_->inbox.front());
    impl_->inbox.pop_front();
    return message;
}

bool Client::closed() const { return impl_->closed; }

void Client::close() {
    if (impl_->closed.exchange(true)) return;
    net::post(impl_->ioc, [impl = impl_.get()] {
        beast::error_code ignored;
        impl->stream.close(beast::websocket::close_code::normal, ignored);
    });
    impl_->ready.notify_all();
}

namespace {

class ServerConnection : public Connection {
  public:
    explicit ServerConnection(tcp::socket socket) : stream_(std::move(socket)) {}

    /// Reads the HTTP upgrade and completes the WebSocket handshake.
    /// Returns false when the peer is not speaking WebSocket.
    bool upgrade() {
        beast::flat_buffer buffer;
        beast::http::request<beast::http::string_body> request;
        beast::error_code ec;
        beast::http::read(stream_.next_layer(), buffer, request, ec);
        if (ec || !beast::websocket::is_upgrade(request)) return false;
        target_ = std::string(request.target());
        stream_.accept(request, ec);
        return !ec;
    }

    void send_text(std::string_view payload) override {
        stream_.text(true);
        stream_.write(net::buffer(payload));
    }

    std::optional<std::string> read_text() override {
        beast::flat_buffer buffer;
        beast::error_code ec;
        stream_.read(buffer, ec);
        if (ec) return std::nullopt;
        return beast::buffers_to_string(buffer.data());
    }

    const std::string& target() const override { return target_; }

    void force_close() {
        beast::error_code ignored;
        stream_.next_layer().shutdown(tcp::socket::shutdown_both, ignored);
        stream_.next_layer().close(ignored);
    }

  private:
    beast::websocket::stream<tcp::socket> stream_;
    std::string target_ = "/";
};

}  // namespace

struct Server::Impl {
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    Handler handler;
    std::thread accept_thread;

    std::mutex mutex;
    std::list<std::shared_ptr<ServerConnection>> connections;
    std::vector<std::thread> workers;
    std::atomic<bool> stopping{false};

    void accept_loop() {
        // A thread parked in a blocking accept is not woken by closing the
        // acceptor from another thread, so poll a non-blocking one instead.
        acceptor.non_blocking(true);
        while (!stopping) {
            beast::error_code ec;
            tcp::socket socket(ioc);
            acceptor.accept(socket, ec);
            if (ec == net::error::would_block || ec == net::error::try_again) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
                continue;
            }
            if (ec) break;
            socket.non_blocking(false, ec);

            auto connection = std::make_shared<ServerConnection>(std::move(socket));
            std::lock_guard lock(mutex);
            if (stopping) {
                connection->force_close();
                break;
            }
            connections.push_back(connection);
            workers.emplace_back([this, connection] {
                try {
                    if (connection->upgrade()) handler(*connection);
                } catch (...) {
                    // A dropped peer mid-session is not the server's problem.
                }
                connection->force_close();
            });
        }
    }
};

Server::Server(std::uint16_t port, Handler handler) : impl_(std::make_unique<Impl>()) {
    impl_->handler = std::move(handler);
    tcp::endpoint endpoint(net::ip::make_address("127.0.0.1"), port);
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen();
    impl_->accept_thread = std::thread([impl = impl_.get()] { impl->accept_loop(); });
}

Server::~Server() { stop(); }

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::stop() {
    if (impl_->stopping.exchange(true)) return;
    if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
    beast::error_code ignored;
    impl_->acceptor.close(ignored);

    std::lock_guard lock(impl_->mutex);
    for (auto& connection : impl_->connections) connection->force_close();
    for (auto& worker : impl_->workers)
        if (worker.joinable()) worker.join();
    impl_->connections.clear();
    impl_->workers.clear();
}

}  // namespace minerscope::ws
