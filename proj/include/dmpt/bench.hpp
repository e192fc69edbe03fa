// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/witness.hpp>

#include <random>

namespace dmpt::bench
{
/// 20-byte address used as a raw trie key.
Bytes bench_key(uint64_t seed, uint64_t i);
Bytes bench_value(uint64_t i, uint64_t generation, size_t size);

/// Trie over `keys` raw addresses with `value_size`-byte values.
Snapshot build_trie(uint64_t keys, uint64_t seed, size_t value_size);

struct PutGetRow
{
    uint64_t keys = 0;
    double build_seconds = 0;
    double puts_per_sec = 0;  ///< inserts with a single commit at the end
    double gets_per_sec = 0;
};

PutGetRow put_get(uint64_t keys, uint64_t seed, size_t value_size);

struct LazyRow
{
    uint64_t hash_every = 0;
    uint64_t writes = 0;
    double seconds = 0;
    double puts_per_sec = 0;
    uint64_t node_hashes = 0;
};

/// Overwrites `writes` random existing keys of `base`, computing the root
/// digest after every `hash_every` writes.
LazyRow lazy_hash(const Snapshot& base, uint64_t keys, uint64_t writes, uint64_t hash_every, uint64_t seed,
    size_t value_size);

struct MemoRow
{
    uint64_t writes = 0;
    uint64_t commit_hashes = 0;
    size_t max_depth = 0;
    uint64_t bound = 0;  ///< writes * max_depth
    uint64_t second_commit_hashes = 0;
};

MemoRow memoization(const Snapshot& base, uint64_t keys, uint64_t writes, uint64_t seed, size_t value_size);

/// Zipf-distributed ranks in [0, n).
class Zipf
{
public:
    Zipf(uint64_t n, double s);
    uint64_t operator()(std::mt19937_64& rng) { return dist_(rng); }

private:
    std::discrete_distribution<uint64_t> dist_;
};

struct WitnessRow
{
    size_t retention = 0;
    uint64_t reads = 0;
    uint64_t full_bytes = 0;          ///< individual full witnesses
    uint64_t compact_bytes = 0;       ///< individual compact witnesses
    uint64_t bag_bytes = 0;           ///< one bag of full witnesses per batch
    uint64_t bag_compact_bytes = 0;   ///< one bag of compact witnesses per batch
    double reduction() const { return full_bytes ? 1.0 - double(bag_compact_bytes) / double(full_bytes) : 0; }
};

/// Witness sizes for `batches` batches of `batch_size` zipf reads, for
/// every retention level 0..max_r.
std::vector<WitnessRow> witness_sweep(const Snapshot& trie, uint64_t keys, uint64_t seed, uint64_t batches,
    uint64_t batch_size, double zipf_s, size_t max_r);

}  // namespace dmpt::bench
