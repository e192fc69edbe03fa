// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/wire.hpp>

#include <memory>
#include <thread>

namespace dmpt
{
struct ShardUnavailable : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Carries one request payload to a shard and returns the response payload.
/// Throws ShardUnavailable when the shard cannot be reached.
class Endpoint
{
public:
    virtual ~Endpoint() = default;
    virtual Bytes call(BytesView request) = 0;
};

/// In-process endpoint. Requests still go through the wire encoding.
class LocalEndpoint final : public Endpoint
{
public:
    explicit LocalEndpoint(std::shared_ptr<Shard> shard) : shard_{std::move(shard)} {}

    Bytes call(BytesView request) override;

    void set_online(bool online) noexcept { online_ = online; }
    const std::shared_ptr<Shard>& shard() const noexcept { return shard_; }

private:
    std::shared_ptr<Shard> shard_;
    std::atomic<bool> online_{true};
};

/// Blocking TCP endpoint holding one connection, re-established on demand.
class TcpEndpoint final : public Endpoint
{
public:
    TcpEndpoint(std::string host, uint16_t port) : host_{std::move(host)}, port_{port} {}
    ~TcpEndpoint() override;

    Bytes call(BytesView request) override;

private:
    void connect_locked();
    void close_locked() noexcept;

    std::string host_;
    uint16_t port_;
    std::mutex mu_;
    int fd_ = -1;
};

/// Serves one shard over TCP, one thread per connection.
class TcpServer
{
public:
    /// Binds immediately; port 0 picks an ephemeral port.
    TcpServer(std::shared_ptr<Shard> shard, const std::string& host, uint16_t port);
    ~TcpServer();

    uint16_t port() const noexcept { return port_; }

    /// Accepts connections until stop() is called.
    void run();
    void start() { thread_ = std::thread{[this] { run(); }}; }
    void stop();

private:
    void serve(int fd);

    std::shared_ptr<Shard> shard_;
    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread thread_;
    std::mutex mu_;
    std::vector<int> conns_;
    std::vector<std::thread> workers_;
};

/// Typed client for the shard protocol. Counts every request it sends.
class ShardClient
{
public:
    explicit ShardClient(std::shared_ptr<Endpoint> ep) : ep_{std::move(ep)} {}

    ApplyResult apply_updates(const UpdateBatch& b);
    ReadResult read_accounts(const wire::ReadRequest& r);
    HeadInfo head();
    uint64_t collect_garbage(uint64_t keep);
    RebuildResult rebuild_from_log(std::span<const UpdateBatch> log);

    uint64_t messages() const noexcept { return messages_.load(); }
    uint64_t reads() const noexcept { return reads_.load(); }

private:
    Bytes round_trip(wire::MessageType t, BytesView body);

    std::shared_ptr<Endpoint> ep_;
    std::atomic<uint64_t> messages_{0};
    std::atomic<uint64_t> reads_{0};
};

}  // namespace dmpt
