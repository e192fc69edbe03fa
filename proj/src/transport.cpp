// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/transport.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace dmpt
{
namespace
{
bool write_all(int fd, BytesView b)
{
    while (!b.empty())
    {
        const auto n = ::send(fd, b.data(), b.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            return false;
        b = b.subspan(static_cast<size_t>(n));
    }
    return true;
}

bool read_all(int fd, uint8_t* out, size_t len)
{
    while (len > 0)
    {
        const auto n = ::recv(fd, out, len, 0);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            return false;
        out += n;
        len -= static_cast<size_t>(n);
    }
    return true;
}

std::optional<Bytes> read_frame(int fd)
{
    uint8_t hdr[4];
    if (!read_all(fd, hdr, 4))
        return std::nullopt;
    const size_t n = size_t{hdr[0]} << 24 | size_t{hdr[1]} << 16 | size_t{hdr[2]} << 8 | hdr[3];
    if (n > wire::max_frame)
        return std::nullopt;
    Bytes body(n);
    if (!read_all(fd, body.data(), n))
        return std::nullopt;
    return body;
}
}  // namespace

Bytes LocalEndpoint::call(BytesView request)
{
    if (!online_)
        throw ShardUnavailable{"shard " + std::to_string(shard_->id()) + " offline"};
    return wire::handle(*shard_, request);
}

TcpEndpoint::~TcpEndpoint()
{
    close_locked();
}

void TcpEndpoint::close_locked() noexcept
{
    if (fd_ >= 0)
        ::close(fd_);
    fd_ = -1;
}

void TcpEndpoint::connect_locked()
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &res) != 0)
        throw ShardUnavailable{"cannot resolve " + host_};
    for (auto* a = res; a; a = a->ai_next)
    {
        const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0)
            continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0)
        {
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0)
        throw ShardUnavailable{"cannot connect to " + host_ + ":" + std::to_string(port_)};
}

Bytes TcpEndpoint::call(BytesView request)
{
    std::lock_guard lock{mu_};
    const auto f = wire::frame(request);
    // A cached connection may have been closed by a restarted server, so a
    // failure on it earns one retry over a fresh connection.
    for (int attempt = 0; attempt < 2; ++attempt)
    {
        const bool fresh = fd_ < 0;
        if (fresh)
            connect_locked();
        if (write_all(fd_, f))
            if (auto resp = read_frame(fd_))
                return std::move(*resp);
        close_locked();
        if (fresh)
            break;
    }
    throw ShardUnavailable{"connection to " + host_ + ":" + std::to_string(port_) + " failed"};
}

TcpServer::TcpServer(std::shared_ptr<Shard> shard, const std::string& host, uint16_t port)
  : shard_{std::move(shard)}
{
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
        throw std::runtime_error{"socket: " + std::string{std::strerror(errno)}};
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw std::invalid_argument{"bind address must be an IPv4 literal: " + host};
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 64) != 0)
    {
        const std::string err = std::strerror(errno);
        ::close(listen_fd_);
        throw std::runtime_error{"bind " + host + ":" + std::to_string(port) + ": " + err};
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer()
{
    stop();
}

void TcpServer::run()
{
    while (!stopping_)
    {
        pollfd p{listen_fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0)
            continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0)
            continue;
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard lock{mu_};
        conns_.push_back(fd);
        workers_.emplace_back([this, fd] { serve(fd); });
    }
}

void TcpServer::serve(int fd)
{
    while (!stopping_)
    {
        const auto req = read_frame(fd);
        if (!req)
            break;
        const auto resp = wire::handle(*shard_, *req);
        if (!write_all(fd, wire::frame(resp)))
            break;
    }
    ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::stop()
{
    stopping_ = true;
    if (thread_.joinable())
        thread_.join();
    if (listen_fd_ >= 0)
        ::close(listen_fd_);
    listen_fd_ = -1;
    std::vector<std::thread> workers;
    {
        std::lock_guard lock{mu_};
        for (const int fd : conns_)
            ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers)
        t.join();
    std::lock_guard lock{mu_};
    for (const int fd : conns_)
        ::close(fd);
    conns_.clear();
}

Bytes ShardClient::round_trip(wire::MessageType t, BytesView body)
{
    ++messages_;
    const auto resp = ep_->call(wire::payload(static_cast<uint8_t>(t), body));
    const auto m = wire::parse(resp);
    if (m.type == static_cast<uint8_t>(wire::MessageType::Error))
        throw wire::decode_error(m.body);
    if (m.type != wire::response_of(t))
        throw wire::ProtocolError{"unexpected response type"};
    return Bytes(m.body.begin(), m.body.end());
}

ApplyResult ShardClient::apply_updates(const UpdateBatch& b)
{
    return wire::decode_apply_result(round_trip(wire::MessageType::ApplyUpdates, wire::encode(b)));
}

ReadResult ShardClient::read_accounts(const wire::ReadRequest& r)
{
    ++reads_;
    return wire::decode_read_result(round_trip(wire::MessageType::ReadAccounts, wire::encode(r)));
}

HeadInfo ShardClient::head()
{
    return wire::decode_head(round_trip(wire::MessageType::GetShardHead, {}));
}

uint64_t ShardClient::collect_garbage(uint64_t keep)
{
    return wire::decode_uint_body(round_trip(wire::MessageType::GCTrigger, wire::encode_uint_body(keep)));
}

RebuildResult ShardClient::rebuild_from_log(std::span<const UpdateBatch> log)
{
    return wire::decode_rebuild_result(round_trip(wire::MessageType::RebuildFromLog, wire::encode_log(log)));
}

}  // namespace dmpt
