// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/shard.hpp>

#include <cstdio>

namespace dmpt
{
enum class WalKind : uint8_t
{
    Writes = 1,  ///< a transaction's write set with its pre and post roots
    Commit = 2,  ///< marks the transaction with the same `tx` as committed
    Seal = 3,    ///< a block header plus every write flushed to the shards
};

struct WalRecord
{
    uint64_t seq = 0;
    WalKind kind = WalKind::Writes;
    uint64_t tx = 0;
    Digest pre = empty_trie_digest();
    Digest post = empty_trie_digest();
    std::vector<Write> writes;  ///< full 32-byte keys
    Bytes header;               ///< Seal only

    Bytes encode() const;
    static WalRecord decode(BytesView in);

    friend bool operator==(const WalRecord&, const WalRecord&) = default;
};

/// Append-only log of records. On disk each record is a 4-byte big-endian
/// length, a 4-byte big-endian CRC-32 of the payload, then the payload.
/// Opening a file keeps the prefix up to the last valid Commit or Seal
/// record and truncates anything after it. An empty path keeps the log in
/// memory.
class Wal
{
public:
    explicit Wal(std::string path = {}, bool fsync = false);
    ~Wal();

    Wal(const Wal&) = delete;
    Wal& operator=(const Wal&) = delete;

    /// Appends records in order, assigning sequence numbers. On failure
    /// nothing is appended and false is returned.
    bool append(std::vector<WalRecord>& records);

    /// All records currently in the log.
    std::vector<WalRecord> records() const;

    const std::string& path() const noexcept { return path_; }

    /// Bytes dropped from a torn tail when the log was opened.
    uint64_t truncated_bytes() const noexcept { return truncated_; }

private:
    std::string path_;
    bool fsync_;
    int fd_ = -1;
    uint64_t size_ = 0;
    uint64_t next_seq_ = 1;
    uint64_t truncated_ = 0;
    std::vector<Bytes> memory_;
    mutable std::mutex mu_;
};

/// Frames one encoded record with its length and checksum.
Bytes wal_frame(BytesView payload);

/// Replay batches for one shard: one per Seal record, carrying the writes
/// of that shard and the shard digests of consecutive headers.
std::vector<UpdateBatch> shard_log(std::span<const WalRecord> records, uint8_t shard);

}  // namespace dmpt
