// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/cache.hpp>
#include <dmpt/workload.hpp>

#include <variant>

namespace dmpt::sim
{
/// Seconds between simulated blocks in deterministic mode.
inline constexpr uint64_t block_interval = 12;
inline constexpr uint64_t genesis_time = 1'600'000'000;

using Reader = std::function<std::optional<Bytes>(const Bytes& key)>;

struct ExecResult
{
    bool ok = false;
    std::string reason;               ///< precondition, no-account
    std::vector<Bytes> reads;         ///< keys in read order
    std::map<Bytes, Bytes> writes;    ///< key -> new encoded value
};

/// Executes one transaction over `read` with the given block data. Pure
/// given the values `read` returns.
ExecResult execute(const SimTransaction& tx, uint64_t number, uint64_t timestamp, uint32_t slots,
    const Reader& read);

/// Sixteen in-process storage nodes.
class ShardCluster
{
public:
    explicit ShardCluster(uint64_t gc_keep = 8);

    const std::vector<std::shared_ptr<Endpoint>>& endpoints() const noexcept { return endpoints_; }
    Shard& shard(size_t i) { return *shards_[i]; }
    uint64_t foreign_key_requests() const;
    void collect_garbage();

private:
    std::vector<std::shared_ptr<Shard>> shards_;
    std::vector<std::shared_ptr<Endpoint>> endpoints_;
};

/// A transaction with the node bag its client assembled.
struct Submitted
{
    SimTransaction tx;
    NodeBag bag;
    uint64_t full_bytes = 0;  ///< sum of the individual full witnesses
};

struct ClientAbort
{
    SimTransaction tx;
    std::string reason;  ///< precondition, io, bad-shard-data
};

/// Speculative pre-execution against a block the client has seen.
class Client
{
public:
    explicit Client(const std::vector<std::shared_ptr<Endpoint>>& endpoints);

    /// Reads the transaction's keys at `visible`, verifies every witness
    /// against its state root and bags them compacted to `retention`.
    std::variant<Submitted, ClientAbort> pre_execute(SimTransaction tx, const BlockHeader& visible,
        uint64_t guess_timestamp, size_t retention, uint32_t slots);

    uint64_t messages() const;

private:
    std::vector<std::unique_ptr<ShardClient>> shards_;
};

enum class Outcome
{
    Accepted,
    Rejected,
};

struct MinerResult
{
    Outcome outcome = Outcome::Rejected;
    std::string reason;  ///< incomplete-bag, bad-bag, invalid, io, stale-base
    uint64_t fetched = 0;
    bool revised = false;
};

/// Verifies and executes submitted transactions through a cache.
class Miner
{
public:
    Miner(CacheConfig config, uint32_t slots);

    /// Loads the genesis state and seals block 1.
    BlockHeader genesis(std::span<const std::pair<Bytes, Bytes>> entries, uint64_t timestamp);

    MinerResult process(const Submitted& s, uint64_t number, uint64_t timestamp);

    /// Seals the pending block and prunes the cache.
    BlockHeader seal(uint64_t timestamp);

    Cache& cache() noexcept { return cache_; }

private:
    Cache cache_;
    uint32_t slots_;
};

struct SimConfig
{
    WorkloadConfig workload;
    size_t retention = 4;
    size_t block_size = 10;   ///< transactions per sealed block
    size_t lag = 1;           ///< blocks by which client state trails the miner's parent
    FetchPolicy policy = FetchPolicy::Fetch;
    size_t clients = 1;       ///< pre-execution threads
    size_t cached_paths = 0;  ///< witness paths the miner keeps across prunes
    size_t gc_interval = 16;  ///< blocks between shard garbage collections
    bool deterministic = true;
};

struct SimStats
{
    uint64_t total = 0;
    uint64_t verified = 0;
    uint64_t revised = 0;
    uint64_t fetched = 0;
    uint64_t rejected = 0;
    uint64_t client_aborted = 0;
    uint64_t bag_bytes = 0;
    uint64_t full_witness_bytes = 0;
    uint64_t hash_count = 0;
    uint64_t miner_messages = 0;
    uint64_t client_messages = 0;
    uint64_t foreign_requests = 0;
    uint64_t blocks = 0;
    double seconds = 0;
    std::map<std::string, uint64_t> reasons;

    double abort_rate() const { return total ? double(rejected + client_aborted) / double(total) : 0; }
    double mean_bag_bytes() const;
    double compaction_ratio() const;
    double throughput() const { return seconds > 0 ? double(total) / seconds : 0; }
};

struct SimBlock
{
    uint64_t number = 0;
    Digest id{};
    Digest parent{};
    uint64_t timestamp = 0;
    Digest state_root{};
    std::vector<SimTransaction> txs;  ///< accepted, in execution order
};

struct SimResult
{
    SimConfig config;
    SimStats stats;
    std::vector<std::pair<Bytes, Bytes>> genesis;
    Digest genesis_root{};
    Digest final_root{};
    std::vector<SimBlock> blocks;  ///< sealed after genesis
};

SimResult run_experiment(const SimConfig& config);

std::string csv_header();
std::string csv_row(const SimResult& r);

/// Replays every accepted transaction over the genesis entries and returns
/// the final key-value state.
std::map<Bytes, Bytes> replay(const SimResult& r);

/// Outcome of the two-transaction revision scenario.
struct RevisionOutcome
{
    MinerResult first;
    MinerResult second;
    bool bag_was_stale = false;  ///< the second bag predates the first commit
};

/// tx1 changes a node on tx2's path after tx2's client built its bag. With
/// `prune_between` the miner seals and prunes to r = 1 between the two.
RevisionOutcome revision_scenario(bool prune_between, FetchPolicy policy, uint64_t seed = 7);

}  // namespace dmpt::sim
