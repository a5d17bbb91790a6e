#include "minerscope/pool_server.hpp"

#include <atomic>
#include <mutex>
#include <optional>

#include <json.hpp>

#include "minerscope/pool.hpp"
#include "minerscope/util.hpp"
#include "minerscope/ws.hpp"

namespace minerscope::pool {

using nlohmann::json;

struct PoolServer::Impl {
    std::string target;
    std::uint64_t hashes_per_share = 0;

    mutable std::mutex ledger_mutex;  // single writer at a time
    std::map<std::string, std::uint64_t> ledger;
    std::atomic<std::uint64_t> next_job{1};

    std::unique_ptr<ws::Server> server;

    void credit(const std::string& identity) {
        std::lock_guard lock(ledger_mutex);
        ledger[identity] += hashes_per_share;
    }

    static void send_error(ws::Connection& connection, std::string_view message) {
        connection.send_text(
            json{{"type", "error"}, {"params", {{"message", message}}}}.dump());
    }

    /// The handshake either names a site-key outright or uses the proxy
    /// form where `login` holds a site-key or wallet address.
    static std::optional<std::string> identity_of(const json& message) {
        if (message.value("type", "") == "auth") {
            const auto params = message.find("params");
            if (params != message.end() && params->contains("site_key") &&
                (*params)["site_key"].is_string())
                return (*params)["site_key"].get<std::string>();
            return std::nullopt;
        }
        if (message.value("identifier", "") == "handshake" && message.contains("login") &&
            message["login"].is_string())
            return message["login"].get<std::string>();
        return std::nullopt;
    }

    void serve(ws::Connection& connection) {
        std::optional<std::string> identity;
        std::string active_job;

        while (auto raw = connection.read_text()) {
            json message = json::parse(*raw, nullptr, false);
            if (message.is_discarded() || !message.is_object()) {
                send_error(connection, "malformed message");
                continue;
            }

            if (auto handshake_identity = identity_of(message)) {
                if (handshake_identity->empty()) {
                    send_error(connection, "empty identity");
                    continue;
                }
                identity = handshake_identity;
                active_job = "job-" + std::to_string(next_job.fetch_add(1));
                Bytes blob(76);
                for (std::size_t i = 0; i < blob.size(); ++i)
                    blob[i] = static_cast<std::uint8_t>((i * 37 + 11) & 0xff);
                blob[0] = 0x06;
                connection.send_text(json{{"type", "job"},
                                          {"params",
                                           {{"job_id", active_job},
                                            {"blob", to_hex(blob)},
                                            {"target", target}}}}
                                         .dump());
                continue;
            }

            std::string type = message.value("type", "");
            if (type == "submit") {
                if (!identity) {
                    send_error(connection, "handshake required");
                    continue;
                }
                const auto params = message.find("params");
                if (params == message.end() || !params->is_object() ||
                    !params->contains("job_id") || !params->contains("nonce") ||
                    !params->contains("result")) {
                    send_error(connection, "malformed submission");
                    continue;
                }
                if ((*params)["job_id"] != active_job) {
                    send_error(connection, "unknown job_id");
                    continue;
                }
                credit(*identity);
                connection.send_text(json{{"type", "hash_accepted"},
                                          {"params",
                                           {{"hashes", hashes_per_share},
                                            {"total", credited_total(*identity)}}}}
                                         .dump());
                continue;
            }
            send_error(connection, "unsupported message type");
        }
    }

    std::uint64_t credited_total(const std::string& identity) const {
        std::lock_guard lock(ledger_mutex);
        auto it = ledger.find(identity);
        return it == ledger.end() ? 0 : it->second;
    }
};

PoolServer::PoolServer(std::uint16_t port, std::string target)
    : impl_(std::make_unique<Impl>()) {
    impl_->target = std::move(target);
    impl_->hashes_per_share = credited_hashes_hex(impl_->target);
    impl_->server = std::make_unique<ws::Server>(
        port, [impl = impl_.get()](ws::Connection& connection) { impl->serve(connection); });
}

PoolServer::~PoolServer() { stop(); }

std::uint16_t PoolServer::port() const { return impl_->server->port(); }

std::uint64_t PoolServer::credited(const std::string& identity) const {
    return impl_->credited_total(identity);
}

std::map<std::string, std::uint64_t> PoolServer::ledger() const {
    std::lock_guard lock(impl_->ledger_mutex);
    return impl_->ledger;
}

void PoolServer::stop() {
    if (impl_->server) impl_->server->stop();
}

}  // namespace minerscope::pool
