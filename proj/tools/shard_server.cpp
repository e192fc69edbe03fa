// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/transport.hpp>

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace
{
struct Endpoint
{
    std::string host;
    uint16_t port = 0;
};

Endpoint parse_bind(const std::string& s)
{
    const auto colon = s.rfind(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError{"--bind", "expected HOST:PORT"};
    const auto port = std::stoul(s.substr(colon + 1));
    if (port > 65535)
        throw CLI::ValidationError{"--bind", "port out of range"};
    return {s.substr(0, colon), static_cast<uint16_t>(port)};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Storage node serving one shard over TCP"};
    app.set_config("--config", "", "Read flags from a TOML or INI file");

    std::string bind = "127.0.0.1:7600";
    unsigned shard_id = 0;
    size_t gc_keep = 8;
    app.add_option("--bind", bind, "Listen address HOST:PORT; port 0 picks a free port")->capture_default_str();
    app.add_option("--shard-id", shard_id, "Shard served (first key nibble)")
        ->check(CLI::Range(0, 15))
        ->capture_default_str();
    app.add_option("--gc-keep", gc_keep, "Versions kept per fork by garbage collection")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try
    {
        const auto ep = parse_bind(bind);

        sigset_t signals;
        sigemptyset(&signals);
        sigaddset(&signals, SIGINT);
        sigaddset(&signals, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &signals, nullptr);

        auto shard = std::make_shared<dmpt::Shard>(static_cast<uint8_t>(shard_id), gc_keep);
        dmpt::TcpServer server{shard, ep.host, ep.port};
        server.start();
        std::cout << "listening " << ep.host << ':' << server.port() << " shard " << shard_id << " gc-keep "
                  << gc_keep << std::endl;

        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
        std::cout << "stopped on signal " << sig << std::endl;
    }
    catch (const CLI::Error& e)
    {
        return app.exit(e);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
