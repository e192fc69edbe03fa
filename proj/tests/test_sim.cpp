// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/sim.hpp>
#include <support/eager_trie.hpp>

#include <gtest/gtest.h>

using namespace dmpt;
using namespace dmpt::sim;

namespace
{
Digest oracle_root(const std::map<Bytes, Bytes>& kv)
{
    test::EagerTrie t;
    for (const auto& [k, v] : kv)
        t.put(k, v);
    return t.root();
}

SimConfig small(uint64_t n, size_t r, uint64_t txs = 600)
{
    SimConfig c;
    c.workload.accounts = n;
    c.workload.tx_count = txs;
    c.workload.seed = 21;
    c.retention = r;
    return c;
}

struct World
{
    WorkloadConfig wc;
    std::map<Bytes, Bytes> state;
    Reader reader()
    {
        return [this](const Bytes& k) -> std::optional<Bytes> {
            const auto it = state.find(k);
            if (it == state.end())
                return std::nullopt;
            return it->second;
        };
    }
};

World world(uint64_t n = 100)
{
    World w;
    w.wc.accounts = n;
    w.wc.seed = 4;
    for (auto& [k, v] : materialize_state(w.wc).entries)
        w.state[k] = v;
    for (auto& [k, v] : contract_storage(w.wc))
        w.state[k] = v;
    return w;
}
}  // namespace

TEST(Execute, Transfer)
{
    auto w = world();
    SimTransaction t;
    t.from = account_address(4, 1);
    t.to = account_address(4, 2);
    t.amount = 10;
    const auto r = execute(t, 5, 100, w.wc.slots, w.reader());
    ASSERT_TRUE(r.ok);
    EXPECT_EQ(r.reads, (std::vector<Bytes>{account_key(t.from), account_key(t.to)}));
    const auto from = Account::decode(r.writes.at(account_key(t.from)));
    const auto to = Account::decode(r.writes.at(account_key(t.to)));
    EXPECT_EQ(from.nonce, 1u);
    EXPECT_EQ(from.balance, initial_balance - 10);
    EXPECT_EQ(to.balance, initial_balance + 10);
    EXPECT_EQ(to.nonce, 0u);
    EXPECT_EQ(from.payload.size(), account_payload_size);

    t.amount = initial_balance + 1;
    const auto broke = execute(t, 5, 100, w.wc.slots, w.reader());
    EXPECT_FALSE(broke.ok);
    EXPECT_EQ(broke.reason, "precondition");
    t.from = account_address(99, 1);
    EXPECT_EQ(execute(t, 5, 100, w.wc.slots, w.reader()).reason, "no-account");
}

TEST(Execute, SelfTransferOnlyBumpsNonce)
{
    auto w = world();
    SimTransaction t;
    t.from = t.to = account_address(4, 3);
    t.amount = 500;
    const auto r = execute(t, 5, 100, w.wc.slots, w.reader());
    ASSERT_TRUE(r.ok);
    ASSERT_EQ(r.writes.size(), 1u);
    const auto a = Account::decode(r.writes.at(account_key(t.from)));
    EXPECT_EQ(a.balance, initial_balance);
    EXPECT_EQ(a.nonce, 1u);
}

TEST(Execute, Contracts)
{
    auto w = world();
    SimTransaction t;
    t.kind = TxKind::FixedContract;
    t.from = account_address(4, 3);
    t.to = contract_address(4, 2);
    t.slot = 9;
    const auto a = execute(t, 5, 100, w.wc.slots, w.reader());
    const auto b = execute(t, 6, 200, w.wc.slots, w.reader());
    ASSERT_TRUE(a.ok);
    EXPECT_EQ(a.reads, b.reads);
    EXPECT_EQ(a.writes, b.writes);
    EXPECT_TRUE(a.writes.contains(slot_key(t.to, 9)));

    // The variable contract's second key moves with the block data.
    t.kind = TxKind::VariableContract;
    std::set<Bytes> seen;
    for (uint64_t n = 1; n <= 20; ++n)
    {
        const auto r = execute(t, n, n * 12, w.wc.slots, w.reader());
        ASSERT_TRUE(r.ok);
        ASSERT_EQ(r.reads.size(), 3u);
        EXPECT_EQ(r.reads[1], slot_key(t.to, 9));
        seen.insert(r.reads[2]);
        EXPECT_TRUE(r.writes.contains(r.reads[2]));
    }
    EXPECT_GT(seen.size(), 5u);
}

TEST(Client, PreExecution)
{
    ShardCluster cl;
    CacheConfig cc;
    cc.retention = 2;
    cc.endpoints = cl.endpoints();
    auto w = world(500);
    Miner m{cc, w.wc.slots};
    std::vector<std::pair<Bytes, Bytes>> entries(w.state.begin(), w.state.end());
    const auto g = m.genesis(entries, 10);

    Client c{cl.endpoints()};
    SimTransaction t;
    t.from = account_address(4, 1);
    t.to = account_address(4, 2);
    t.amount = 10;
    auto ok = c.pre_execute(t, g, 22, 2, w.wc.slots);
    ASSERT_TRUE(std::holds_alternative<Submitted>(ok));
    const auto& s = std::get<Submitted>(ok);
    EXPECT_EQ(s.bag.root(), g.state_root);
    EXPECT_EQ(s.bag.covered(), (std::vector<Nibbles>{to_nibbles(account_key(t.from)), to_nibbles(account_key(t.to))}));
    EXPECT_EQ(s.tx.guess_number, g.number + 1);
    EXPECT_EQ(s.tx.guess_timestamp, 22u);
    EXPECT_LT(s.bag.byte_size(), s.full_bytes);
    // The bag plus the miner's cached top levels rebuild both witnesses.
    for (const auto& key : {account_key(t.from), account_key(t.to)})
    {
        const auto r = extract(s.bag, to_nibbles(key), m.cache().head().root);
        ASSERT_TRUE(r);
        EXPECT_EQ(verify_witness(to_nibbles(key), w.state.at(key), r->witness, g.state_root), VerifyStatus::Accepted);
    }
    EXPECT_EQ(c.messages(), 2u);

    t.amount = initial_balance * 2;
    auto broke = c.pre_execute(t, g, 22, 2, w.wc.slots);
    ASSERT_TRUE(std::holds_alternative<ClientAbort>(broke));
    EXPECT_EQ(std::get<ClientAbort>(broke).reason, "precondition");

    // A variable contract bags only its speculative keys; the miner reads
    // the key the real block selects from storage.
    SimTransaction v;
    v.kind = TxKind::VariableContract;
    v.from = account_address(4, 5);
    v.to = contract_address(4, 1);
    v.slot = 3;
    auto sv = c.pre_execute(v, g, 22, 2, w.wc.slots);
    ASSERT_TRUE(std::holds_alternative<Submitted>(sv));
    const auto& sub = std::get<Submitted>(sv);
    EXPECT_EQ(sub.bag.covered().size(), 3u);
    uint64_t number = g.number + 1;
    const auto real = execute(v, number, 1000, w.wc.slots, w.reader());
    ASSERT_NE(real.reads[2], sub.tx.read_set[2]) << "pick another timestamp";
    const auto res = m.process(sub, number, 1000);
    EXPECT_EQ(res.outcome, Outcome::Accepted);
    EXPECT_EQ(res.fetched, 1u);

    // Offline shards abort pre-execution.
    for (auto& ep : cl.endpoints())
        std::static_pointer_cast<LocalEndpoint>(ep)->set_online(false);
    auto io = c.pre_execute(t, g, 22, 2, w.wc.slots);
    ASSERT_TRUE(std::holds_alternative<ClientAbort>(io));
    EXPECT_EQ(std::get<ClientAbort>(io).reason, "io");
}

TEST(Revision, StaleBagRevisedWithoutFetch)
{
    const auto r = revision_scenario(false, FetchPolicy::Fetch);
    EXPECT_EQ(r.first.outcome, Outcome::Accepted);
    EXPECT_TRUE(r.bag_was_stale);
    EXPECT_EQ(r.second.outcome, Outcome::Accepted);
    EXPECT_TRUE(r.second.revised);
    EXPECT_EQ(r.first.fetched + r.second.fetched, 0u);
    // The reject policy changes nothing when revision suffices.
    const auto strict = revision_scenario(false, FetchPolicy::Reject);
    EXPECT_EQ(strict.second.outcome, Outcome::Accepted);
    EXPECT_EQ(strict.second.fetched, 0u);
}

TEST(Revision, PrunedCacheNeedsOneFetchOrRejection)
{
    const auto f = revision_scenario(true, FetchPolicy::Fetch);
    EXPECT_EQ(f.first.outcome, Outcome::Accepted);
    EXPECT_EQ(f.second.outcome, Outcome::Accepted);
    EXPECT_EQ(f.second.fetched, 1u);
    const auto r = revision_scenario(true, FetchPolicy::Reject);
    EXPECT_EQ(r.second.outcome, Outcome::Rejected);
    EXPECT_EQ(r.second.reason, "incomplete-bag");
    EXPECT_EQ(r.second.fetched, 0u);
}

TEST(Sim, EndStateMatchesOracle)
{
    auto c = small(400, 2);
    c.lag = 2;
    const auto r = run_experiment(c);
    EXPECT_EQ(r.stats.total, 600u);
    EXPECT_EQ(r.stats.verified + r.stats.rejected + r.stats.client_aborted, r.stats.total);
    EXPECT_GT(r.stats.verified, 0u);
    const auto state = replay(r);
    EXPECT_EQ(oracle_root(state), r.final_root);
    EXPECT_EQ(r.blocks.back().state_root, r.final_root);

    uint64_t before = 0, after = 0;
    for (const auto& [k, v] : r.genesis)
        if (v.size() > 32)
            before += Account::decode(v).balance;
    for (const auto& [k, v] : state)
        if (v.size() > 32)
            after += Account::decode(v).balance;
    EXPECT_EQ(before, after);
    EXPECT_EQ(r.stats.foreign_requests, 0u);
}

TEST(Sim, IndependentTransfersMatchSequentialOracle)
{
    auto c = small(2000, 3, 200);
    c.workload.contract_fraction = 0;
    c.block_size = 200;
    c.lag = 0;
    const auto r = run_experiment(c);
    EXPECT_EQ(r.stats.verified, 200u);
    EXPECT_EQ(oracle_root(replay(r)), r.final_root);
}

TEST(Sim, DeterministicCsv)
{
    const auto a = run_experiment(small(300, 1));
    const auto b = run_experiment(small(300, 1));
    EXPECT_EQ(csv_row(a), csv_row(b));
    auto threaded = small(300, 1);
    threaded.clients = 3;
    EXPECT_EQ(csv_row(run_experiment(threaded)).substr(0, csv_row(a).rfind(',')),
        csv_row(a).substr(0, csv_row(a).rfind(',')));
}

TEST(Sim, NoFetchesWithFullCacheAndCompleteBags)
{
    auto c = small(1000, 64);
    c.workload.contract_fraction = 0;
    c.lag = 2;
    const auto r = run_experiment(c);
    EXPECT_EQ(r.stats.fetched, 0u);
    EXPECT_EQ(r.stats.rejected, 0u);
    EXPECT_EQ(r.stats.foreign_requests, 0u);
}

TEST(Sim, RejectPolicyAbortsFallWithRetention)
{
    double prev = 2;
    for (size_t r : {0, 2, 4, 6})
    {
        auto c = small(1000, r, 1500);
        c.policy = FetchPolicy::Reject;
        const auto res = run_experiment(c);
        EXPECT_LE(res.stats.abort_rate(), prev + 0.01) << "r=" << r;
        prev = res.stats.abort_rate();
    }
}
