// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/block.hpp>
#include <dmpt/witness.hpp>

#include <map>
#include <mutex>
#include <shared_mutex>

namespace dmpt
{
/// One write of a batch; nullopt deletes the key.
struct Write
{
    Bytes key;
    std::optional<Bytes> value;

    friend bool operator==(const Write&, const Write&) = default;
};

/// Per-block writes for one shard, tagged with the shard digests before and
/// after. `header` is the encoded BlockHeader whose digest is `block_id`.
struct UpdateBatch
{
    Digest block_id{};
    Bytes header;
    Digest parent_root = empty_trie_digest();
    Digest new_root = empty_trie_digest();
    std::vector<Write> writes;

    friend bool operator==(const UpdateBatch&, const UpdateBatch&) = default;
};

struct ApplyResult
{
    bool accepted = false;
    Digest root = empty_trie_digest();
    std::string reason;  ///< bad-header, unknown-parent, root-mismatch, wrong-shard, bad-batch
};

struct ReadResult
{
    std::vector<std::optional<Bytes>> values;
    NodeBag bag;  ///< rooted at the shard digest that was read
};

struct HeadInfo
{
    Digest root = empty_trie_digest();
    Digest block_id{};
    uint64_t height = 0;
    uint64_t versions = 0;
};

struct RebuildResult
{
    Digest head = empty_trie_digest();
    uint64_t applied = 0;
    bool complete = true;
    std::string reason;  ///< why replay stopped early
};

/// Request-level failure carrying a short machine-readable code.
struct ShardError : std::runtime_error
{
    ShardError(std::string c, const std::string& what)
      : std::runtime_error{c + ": " + what}, code{std::move(c)}
    {}
    std::string code;
};

/// One vertical shard held in memory. Keeps every version produced by an
/// accepted batch (forks included) until garbage collection drops it.
/// Batches are applied one at a time; reads run against immutable versions
/// and never wait for a batch being applied.
class Shard
{
public:
    explicit Shard(uint8_t id, size_t gc_keep = 8);

    uint8_t id() const noexcept { return id_; }

    ApplyResult apply_updates(const UpdateBatch& batch);

    /// Values and a bag of witnesses for `keys` at version `root`. Nodes at
    /// global depth <= r (local depth < r) are left out. With `siblings` the
    /// bag also carries the hash-referenced children of branches on each
    /// path, which a deleting caller needs to collapse a branch.
    ReadResult read_accounts(std::span<const Bytes> keys, const Digest& root, size_t r,
        bool siblings = false) const;

    HeadInfo head() const;

    /// Keeps the `keep` most recent versions on the chain of every fork head
    /// plus every fork point; drops the rest. Returns the number reclaimed.
    size_t collect_garbage(std::optional<size_t> keep = std::nullopt);

    /// Discards all state and replays `log` in order from an empty shard.
    /// Stops at the first batch that does not apply.
    RebuildResult rebuild_from_log(std::span<const UpdateBatch> log);

    std::optional<Snapshot> version(const Digest& root) const;
    std::vector<Digest> versions() const;

    /// Distinct hash-referenced nodes reachable from retained versions.
    size_t resident_node_count() const;

    /// Read requests that named a key owned by another shard.
    uint64_t foreign_key_requests() const noexcept { return foreign_.load(); }

private:
    struct Version
    {
        Snapshot snap;
        std::optional<Digest> parent;
        uint64_t height = 0;
    };

    ApplyResult apply_locked(const UpdateBatch& batch);
    void reset_locked();

    uint8_t id_;
    size_t gc_keep_;
    std::mutex writer_;
    mutable std::shared_mutex state_;
    std::map<Digest, Version> versions_;
    std::map<Digest, Digest> blocks_;  ///< block id -> shard digest
    Digest head_ = empty_trie_digest();
    Digest head_block_{};
    mutable std::atomic<uint64_t> foreign_{0};
};

}  // namespace dmpt
