// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/cache.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace
{
using namespace dmpt;

std::shared_ptr<Endpoint> connect(const std::string& s)
{
    const auto colon = s.rfind(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError{"--endpoint", "expected HOST:PORT, got " + s};
    return std::make_shared<TcpEndpoint>(s.substr(0, colon), static_cast<uint16_t>(std::stoul(s.substr(colon + 1))));
}

/// 32-byte tree key: the hex key itself with --raw, else keccak of the text.
Bytes tree_key(const std::string& k, bool raw)
{
    if (!raw)
    {
        const auto d = keccak256(k);
        return Bytes(d.bytes.begin(), d.bytes.end());
    }
    auto b = from_hex(k);
    check_key(b);
    return b;
}

uint64_t now_seconds()
{
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
            .count());
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Key-value client over a cache backed by sixteen shard servers"};
    app.set_config("--config", "", "Read flags from a TOML or INI file");
    app.require_subcommand(1);

    std::vector<std::string> endpoints;
    std::string wal_path;
    size_t retention = 4;
    std::string policy = "fetch";
    bool fsync = false;
    bool raw = false;
    app.add_option("--endpoint", endpoints, "Shard server HOST:PORT, one per shard in shard order")
        ->delimiter(',')
        ->expected(16)
        ->required();
    app.add_option("--wal", wal_path, "Write-ahead log file")->required();
    app.add_option("-r,--retention", retention, "Levels kept resident")->capture_default_str();
    app.add_option("--policy", policy, "On missing nodes: fetch or reject")
        ->check(CLI::IsMember({"fetch", "reject"}))
        ->capture_default_str();
    app.add_flag("--fsync", fsync, "Sync the log on every append");
    app.add_flag("--raw", raw, "Keys are 32-byte hex strings used verbatim");

    std::string key, value;
    bool witness = false;
    auto* cput = app.add_subcommand("put", "Store a value");
    cput->add_option("key", key)->required();
    cput->add_option("value", value)->required();
    auto* cget = app.add_subcommand("get", "Read a value");
    cget->add_option("key", key)->required();
    cget->add_flag("--witness", witness, "Also check the witness against the head digest");
    auto* cdel = app.add_subcommand("del", "Delete a key");
    cdel->add_option("key", key)->required();
    auto* chead = app.add_subcommand("head", "Print the head digest and last sealed block");
    auto* crebuild = app.add_subcommand("rebuild", "Replay the log into one shard");
    unsigned rebuild_shard = 0;
    crebuild->add_option("shard", rebuild_shard)->check(CLI::Range(0, 15))->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        CacheConfig cfg;
        cfg.retention = retention;
        for (const auto& e : endpoints)
            cfg.endpoints.push_back(connect(e));
        cfg.wal_path = wal_path;
        cfg.wal_fsync = fsync;
        cfg.policy = policy == "fetch" ? FetchPolicy::Fetch : FetchPolicy::Reject;
        cfg.auto_flush = false;
        Cache cache{cfg};

        auto commit = [&](Tx& tx) {
            const auto res = cache.end_tx(tx);
            if (!res.committed)
            {
                std::cerr << "aborted: " << res.reason << '\n';
                return 2;
            }
            const auto block = cache.flush(std::max(now_seconds(), cache.last_block().timestamp + 1));
            cache.drain();
            std::cout << "root " << res.root.hex() << " block " << block.number << '\n';
            return 0;
        };

        if (cput->parsed())
        {
            auto tx = cache.begin_tx();
            cache.put(tx, tree_key(key, raw), as_view(value));
            return commit(tx);
        }
        if (cdel->parsed())
        {
            auto tx = cache.begin_tx();
            cache.erase(tx, tree_key(key, raw));
            return commit(tx);
        }
        if (cget->parsed())
        {
            auto tx = cache.begin_tx();
            const auto k = tree_key(key, raw);
            const auto r = cache.get(tx, k, ReadOptions{.want_witness = witness});
            if (r.value)
                std::cout << std::string(r.value->begin(), r.value->end()) << '\n';
            else
                std::cout << "(absent)\n";
            if (witness && r.witness)
                std::cout << "witness " << to_string(Cache::verify(k, r.value, *r.witness, tx.base_root())) << '\n';
            cache.abort_tx(tx);
            return r.value ? 0 : 3;
        }
        if (chead->parsed())
        {
            const auto b = cache.last_block();
            std::cout << "head " << cache.head().root_digest.hex() << '\n'
                      << "block " << b.number << ' ' << b.id().hex() << '\n';
            return 0;
        }
        if (crebuild->parsed())
        {
            cache.rebuild_shard(static_cast<uint8_t>(rebuild_shard));
            std::cout << "shard " << rebuild_shard << " rebuilt\n";
            return 0;
        }
    }
    catch (const CacheError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
