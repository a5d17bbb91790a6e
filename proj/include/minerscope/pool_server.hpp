#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

namespace minerscope::pool {

/// Mock CryptoNote-style pool: hands out jobs on handshake, acknowledges
/// share submissions, and credits hashes per identity according to the
/// job's difficulty target. No hashes are verified beyond format checks.
class PoolServer {
  public:
    /// Starts listening on 127.0.0.1 immediately; port 0 picks a free
    /// one. All jobs carry `target` (8 hex chars).
    explicit PoolServer(std::uint16_t port = 0, std::string target = "ffffff00");
    ~PoolServer();
    PoolServer(const PoolServer&) = delete;
    PoolServer& operator=(const PoolServer&) = delete;

    std::uint16_t port() const;

    /// Total hashes credited to a site-key or wallet login; 0 if unseen.
    std::uint64_t credited(const std::string& identity) const;
    std::map<std::string, std::uint64_t> ledger() const;

    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace minerscope::pool
