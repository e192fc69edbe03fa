// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/transport.hpp>
#include <dmpt/wal.hpp>

#include <condition_variable>
#include <deque>
#include <functional>
#include <list>
#include <unordered_map>

namespace dmpt
{
/// What to do when a read or write needs a node that neither the cache nor
/// the supplied bag holds.
enum class FetchPolicy
{
    Fetch,   ///< read the node from its shard
    Reject,  ///< fail with insufficient-witness
};

struct CacheConfig
{
    size_t retention = 4;  ///< levels kept resident after prune (root is level 0)
    /// One endpoint per shard, or none for a cache without storage nodes.
    std::vector<std::shared_ptr<Endpoint>> endpoints;
    std::string wal_path;  ///< empty keeps the log in memory
    bool wal_fsync = false;
    size_t max_cached_paths = 1024;  ///< witness paths kept resident across prunes
    bool auto_flush = true;          ///< seal a block after every commit
    bool async_push = false;         ///< push batches from a background thread
    FetchPolicy policy = FetchPolicy::Fetch;
};

/// Failure with a short code: shard-unavailable, bad-shard-data, tx-closed,
/// insufficient-witness, wal-failure, rebuild-divergence.
struct CacheError : std::runtime_error
{
    CacheError(std::string c, const std::string& what)
      : std::runtime_error{c + ": " + what}, code{std::move(c)}
    {}
    std::string code;
};

enum class TxState
{
    Open,
    Committed,
    Aborted,
};

/// A live transaction. All reads observe the base snapshot; writes are
/// buffered until end_tx.
class Tx
{
public:
    TxState state() const noexcept { return state_; }
    const Digest& base_root() const noexcept { return base_.root_digest; }
    const std::map<Bytes, std::optional<Bytes>>& writes() const noexcept { return writes_; }
    const std::map<Bytes, std::optional<Bytes>>& reads() const noexcept { return reads_; }

private:
    friend class Cache;
    Snapshot base_;
    ShardRoots fetch_roots_{};  ///< shard versions known to be stored at begin
    std::map<Bytes, std::optional<Bytes>> reads_;
    std::map<Bytes, std::optional<Bytes>> writes_;
    TxState state_ = TxState::Open;
};

enum class ReadSource
{
    WriteBuffer,
    Cache,
    Bag,
    Shard,
};

struct ReadOptions
{
    bool want_witness = false;
    const NodeBag* bag = nullptr;  ///< nodes supplied by the caller, e.g. a client
    std::optional<FetchPolicy> policy;  ///< overrides the configured policy
};

struct CacheRead
{
    std::optional<Bytes> value;
    std::optional<Witness> witness;
    ReadSource source = ReadSource::Cache;
    bool revised = false;  ///< served from a bag taken at an older root
};

struct CommitResult
{
    bool committed = false;
    Digest root = empty_trie_digest();
    std::string reason;  ///< insufficient-witness, stale-base, wal-failure
};

struct CacheCounters
{
    std::atomic<uint64_t> shard_reads{0};     ///< ReadAccounts requests sent
    std::atomic<uint64_t> bytes_received{0};  ///< bag bytes in read responses
    std::atomic<uint64_t> cache_hits{0};
    std::atomic<uint64_t> bag_reads{0};
    std::atomic<uint64_t> revised{0};
    std::atomic<uint64_t> push_failures{0};
};

/// Application-side cache and commit authority. Owns the global root, keeps
/// the top `retention` levels plus recently used witness paths resident,
/// logs commits ahead of publishing them and pushes per-shard batches.
class Cache
{
public:
    explicit Cache(CacheConfig config);
    ~Cache();

    Cache(const Cache&) = delete;
    Cache& operator=(const Cache&) = delete;

    Tx begin_tx() const;

    CacheRead get(Tx& tx, BytesView key, const ReadOptions& opts = {});
    void put(Tx& tx, BytesView key, BytesView value);
    void erase(Tx& tx, BytesView key);
    CommitResult end_tx(Tx& tx);
    void abort_tx(Tx& tx);

    /// Checks a witness without contacting any shard.
    static VerifyStatus verify(BytesView key, const std::optional<Bytes>& value, const Witness& w,
        const Digest& root)
    {
        return verify_witness(to_nibbles(key), value, w, root);
    }

    /// Seals a block over the current head, logs it and pushes one batch to
    /// every shard. Throws CacheError("wal-failure") if the seal cannot be
    /// logged.
    BlockHeader flush(uint64_t timestamp);

    /// Prunes the head to the retention level, keeping recently used witness
    /// paths and unflushed writes. Returns the resident node count.
    /// `retention` overrides the configured level for this call.
    size_t prune(std::optional<size_t> retention = std::nullopt);

    /// Replays the log into shard `i` and checks the resulting head.
    void rebuild_shard(uint8_t i);

    /// Waits for queued pushes.
    void drain();

    Snapshot head() const;
    BlockHeader last_block() const;
    /// Shard digests acknowledged by the shards.
    ShardRoots acked_roots() const;
    TreeStats resident() const;
    const CacheConfig& config() const noexcept { return config_; }
    const CacheCounters& counters() const noexcept { return counters_; }
    uint64_t shard_messages() const;
    Wal& wal() noexcept { return wal_; }

    /// Called after every flush with the new header and per-shard batches,
    /// for an external replicator.
    void set_flush_hook(std::function<void(const BlockHeader&, std::span<const UpdateBatch>)> hook);

private:
    struct Pending
    {
        bool existed = false;  ///< key present at the last flushed block
        std::optional<Bytes> value;
    };

    NodePtr fetch_into(const NodePtr& root, BytesView key, const ShardRoots& roots, bool siblings,
        ReadResult* out);
    void install(NibbleView path, const NodeLookup& lookup);
    void touch(const Nibbles& path);
    void push(size_t shard, UpdateBatch batch);
    void push_loop();

    CacheConfig config_;
    std::vector<std::unique_ptr<ShardClient>> clients_;
    Wal wal_;
    CacheCounters counters_;

    mutable std::shared_mutex head_mu_;
    Snapshot head_;
    ShardRoots acked_;
    std::list<Nibbles> lru_;
    std::map<Nibbles, std::list<Nibbles>::iterator> lru_index_;

    std::mutex commit_mu_;
    std::map<Bytes, Pending> pending_;
    BlockHeader last_block_;
    uint64_t next_tx_ = 1;
    std::function<void(const BlockHeader&, std::span<const UpdateBatch>)> hook_;

    std::mutex push_mu_;
    std::condition_variable push_cv_;
    std::deque<std::pair<size_t, UpdateBatch>> queue_;
    bool pushing_ = false;
    bool stop_ = false;
    std::thread pusher_;
};

}  // namespace dmpt
