// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/bench.hpp>
#include <dmpt/rlp.hpp>

#include <chrono>
#include <cmath>

namespace dmpt::bench
{
namespace
{
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t)
{
    return std::chrono::duration<double>(Clock::now() - t).count();
}
}  // namespace

Bytes bench_key(uint64_t seed, uint64_t i)
{
    const auto d = keccak256(rlp::ListBuilder{}.string(as_view("bench")).uint(seed).uint(i).finish());
    return Bytes(d.bytes.begin() + 12, d.bytes.end());
}

Bytes bench_value(uint64_t i, uint64_t generation, size_t size)
{
    Bytes v(std::max<size_t>(size, 16), 0);
    for (size_t b = 0; b < 8; ++b)
    {
        v[b] = static_cast<uint8_t>(i >> (8 * b));
        v[8 + b] = static_cast<uint8_t>(generation >> (8 * b));
    }
    for (size_t b = 16; b < v.size(); ++b)
        v[b] = static_cast<uint8_t>(b * 31 + i);
    return v;
}

Snapshot build_trie(uint64_t keys, uint64_t seed, size_t value_size)
{
    WorkingTree t;
    for (uint64_t i = 0; i < keys; ++i)
        t.put(bench_key(seed, i), bench_value(i, 0, value_size));
    return t.commit();
}

PutGetRow put_get(uint64_t keys, uint64_t seed, size_t value_size)
{
    std::vector<Bytes> ks;
    ks.reserve(keys);
    for (uint64_t i = 0; i < keys; ++i)
        ks.push_back(bench_key(seed, i));
    const auto value = bench_value(1, 0, value_size);

    PutGetRow row;
    row.keys = keys;
    auto t0 = Clock::now();
    WorkingTree t;
    for (const auto& k : ks)
        t.put(k, value);
    const auto snap = t.commit();
    row.build_seconds = since(t0);
    row.puts_per_sec = double(keys) / row.build_seconds;

    std::mt19937_64 rng{seed};
    t0 = Clock::now();
    uint64_t found = 0;
    for (uint64_t i = 0; i < keys; ++i)
        found += snap.get(ks[rng() % keys]) ? 1 : 0;
    row.gets_per_sec = double(keys) / since(t0);
    if (found != keys)
        throw std::logic_error{"bench trie lost keys"};
    return row;
}

LazyRow lazy_hash(const Snapshot& base, uint64_t keys, uint64_t writes, uint64_t hash_every, uint64_t seed,
    size_t value_size)
{
    if (hash_every == 0 || keys == 0)
        throw std::invalid_argument{"hash_every and keys must be positive"};
    std::mt19937_64 rng{seed};
    std::vector<Bytes> ks;
    std::vector<Bytes> vs;
    for (uint64_t i = 0; i < writes; ++i)
    {
        const auto k = rng() % keys;
        ks.push_back(bench_key(seed, k));
        vs.push_back(bench_value(k, i + 1, value_size));
    }
    LazyRow row;
    row.hash_every = hash_every;
    row.writes = writes;
    WorkingTree t{base};
    const auto t0 = Clock::now();
    for (uint64_t i = 0; i < writes; ++i)
    {
        t.put(ks[i], vs[i]);
        if ((i + 1) % hash_every == 0)
            t.root_digest();
    }
    t.root_digest();
    row.seconds = since(t0);
    row.puts_per_sec = double(writes) / row.seconds;
    row.node_hashes = t.hash_count();
    return row;
}

MemoRow memoization(const Snapshot& base, uint64_t keys, uint64_t writes, uint64_t seed, size_t value_size)
{
    std::mt19937_64 rng{seed + 1};
    WorkingTree t{base};
    for (uint64_t i = 0; i < writes; ++i)
    {
        const auto k = rng() % keys;
        t.put(bench_key(seed, k), bench_value(k, i + 1, value_size));
    }
    MemoRow row;
    row.writes = writes;
    const auto before = t.hash_count();
    const auto snap = t.commit();
    row.commit_hashes = t.hash_count() - before;
    row.max_depth = tree_stats(snap.root).height;
    row.bound = writes * row.max_depth;
    const auto again = t.hash_count();
    t.commit();
    row.second_commit_hashes = t.hash_count() - again;
    return row;
}

Zipf::Zipf(uint64_t n, double s)
{
    std::vector<double> w(n);
    for (uint64_t i = 0; i < n; ++i)
        w[i] = 1.0 / std::pow(double(i + 1), s);
    dist_ = std::discrete_distribution<uint64_t>(w.begin(), w.end());
}

std::vector<WitnessRow> witness_sweep(const Snapshot& trie, uint64_t keys, uint64_t seed, uint64_t batches,
    uint64_t batch_size, double zipf_s, size_t max_r)
{
    std::mt19937_64 rng{seed + 2};
    Zipf zipf{keys, zipf_s};
    std::vector<WitnessRow> rows(max_r + 1);
    for (size_t r = 0; r <= max_r; ++r)
        rows[r].retention = r;
    for (uint64_t b = 0; b < batches; ++b)
    {
        std::vector<Witness> ws;
        for (uint64_t i = 0; i < batch_size; ++i)
            ws.push_back(create_witness(trie.root, to_nibbles(bench_key(seed, zipf(rng)))).witness);
        uint64_t full = 0;
        for (const auto& w : ws)
            full += w.byte_size();
        const auto full_bag = bag(ws).byte_size();
        for (size_t r = 0; r <= max_r; ++r)
        {
            std::vector<CompactWitness> cs;
            uint64_t compact_bytes = 0;
            for (const auto& w : ws)
            {
                cs.push_back(compact(w, r));
                compact_bytes += cs.back().byte_size();
            }
            auto& row = rows[r];
            row.reads += ws.size();
            row.full_bytes += full;
            row.compact_bytes += compact_bytes;
            row.bag_bytes += full_bag;
            row.bag_compact_bytes += bag(cs).byte_size();
        }
    }
    return rows;
}

}  // namespace dmpt::bench
