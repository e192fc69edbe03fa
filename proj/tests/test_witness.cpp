// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/witness.hpp>
#include <support/eager_trie.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <random>

using namespace dmpt;

namespace
{
Bytes hashed_key(uint64_t i)
{
    const auto d = keccak256(as_view("k" + std::to_string(i)));
    return Bytes(d.bytes.begin(), d.bytes.end());
}

Bytes account_value(uint64_t i)
{
    return to_bytes("account-payload-" + std::to_string(i) + std::string(80, 'x'));
}

struct Fixture
{
    std::vector<Bytes> keys;
    Snapshot snap;
    test::EagerTrie oracle;

    explicit Fixture(size_t n)
    {
        WorkingTree t;
        for (uint64_t i = 0; i < n; ++i)
        {
            keys.push_back(hashed_key(i));
            t.put(keys.back(), account_value(i));
            oracle.put(keys.back(), account_value(i));
        }
        snap = t.commit();
    }
};

// Two keys sharing exactly `shared` leading nibbles.
std::pair<Bytes, Bytes> keys_sharing(const std::vector<Bytes>& keys, size_t shared)
{
    for (size_t i = 0; i < keys.size(); ++i)
        for (size_t j = i + 1; j < keys.size(); ++j)
            if (common_prefix(to_nibbles(keys[i]), to_nibbles(keys[j])) == shared)
                return {keys[i], keys[j]};
    throw std::logic_error{"no such pair"};
}
}  // namespace

TEST(witness, single_key_tree_has_one_entry)
{
    WorkingTree t;
    t.put(hashed_key(1), account_value(1));
    const auto s = t.commit();
    const auto r = create_witness(s, hashed_key(1));
    ASSERT_EQ(r.witness.nodes.size(), 1u);
    EXPECT_EQ(r.value, account_value(1));
    EXPECT_EQ(verify_witness(to_nibbles(hashed_key(1)), r.value, r.witness, s.root_digest),
        VerifyStatus::Accepted);
}

TEST(witness, random_keys_verify_against_oracle_root)
{
    Fixture f{1000};
    ASSERT_EQ(f.snap.root_digest, f.oracle.root());
    std::mt19937 rng{4};
    for (int i = 0; i < 200; ++i)
    {
        const auto& k = f.keys[rng() % f.keys.size()];
        const auto r = create_witness(f.snap, k);
        ASSERT_TRUE(r.value);
        EXPECT_EQ(verify_witness(to_nibbles(k), r.value, r.witness, f.oracle.root()), VerifyStatus::Accepted);
    }
}

TEST(witness, absent_key_with_no_shared_prefix)
{
    WorkingTree t;
    t.put(from_hex("10aa"), account_value(1));
    t.put(from_hex("20bb"), account_value(2));
    t.put(from_hex("30cc"), account_value(3));
    const auto s = t.commit();
    const auto absent = from_hex("f0dd");
    const auto r = create_witness(s, absent);
    EXPECT_FALSE(r.value);
    ASSERT_EQ(r.witness.nodes.size(), 1u);
    EXPECT_EQ(verify_witness(to_nibbles(absent), std::nullopt, r.witness, s.root_digest), VerifyStatus::Accepted);
    EXPECT_EQ(verify_witness(to_nibbles(absent), to_bytes("x"), r.witness, s.root_digest),
        VerifyStatus::ValueMismatch);
}

TEST(witness, absent_keys_in_large_tree)
{
    Fixture f{2000};
    for (uint64_t i = 5000; i < 5100; ++i)
    {
        const auto k = hashed_key(i);
        const auto r = create_witness(f.snap, k);
        EXPECT_FALSE(r.value);
        EXPECT_EQ(verify_witness(to_nibbles(k), std::nullopt, r.witness, f.snap.root_digest), VerifyStatus::Accepted);
    }
    const auto present = create_witness(f.snap, f.keys[0]);
    EXPECT_EQ(verify_witness(to_nibbles(f.keys[0]), std::nullopt, present.witness, f.snap.root_digest),
        VerifyStatus::ValueMismatch);
}

TEST(witness, empty_tree)
{
    WorkingTree t;
    const auto s = t.commit();
    const auto r = create_witness(s, hashed_key(1));
    EXPECT_TRUE(r.witness.nodes.empty());
    EXPECT_EQ(verify_witness(to_nibbles(hashed_key(1)), std::nullopt, r.witness, s.root_digest),
        VerifyStatus::Accepted);
}

TEST(witness, tampered_value_byte_rejected)
{
    Fixture f{500};
    const auto k = f.keys[17];
    const auto r = create_witness(f.snap, k);
    auto w = r.witness;
    auto& leaf = w.nodes.back();
    leaf[leaf.size() - 3] ^= 0x01;
    const auto status = verify_witness(to_nibbles(k), r.value, w, f.snap.root_digest);
    EXPECT_TRUE(status == VerifyStatus::BrokenLink || status == VerifyStatus::RootMismatch);
}

TEST(witness, wrong_root_rejected)
{
    Fixture f{300};
    WorkingTree t{f.snap};
    t.put(f.keys[0], as_view("other"));
    const auto other = t.commit();
    const auto r = create_witness(f.snap, f.keys[5]);
    EXPECT_EQ(verify_witness(to_nibbles(f.keys[5]), r.value, r.witness, other.root_digest),
        VerifyStatus::RootMismatch);
}

TEST(witness, truncated_and_padded_witnesses_rejected)
{
    Fixture f{1000};
    const auto k = f.keys[3];
    const auto r = create_witness(f.snap, k);
    ASSERT_GT(r.witness.nodes.size(), 2u);
    auto shorter = r.witness;
    shorter.nodes.pop_back();
    EXPECT_EQ(verify_witness(to_nibbles(k), r.value, shorter, f.snap.root_digest), VerifyStatus::BrokenLink);
    auto longer = r.witness;
    longer.nodes.push_back(longer.nodes.back());
    EXPECT_EQ(verify_witness(to_nibbles(k), r.value, longer, f.snap.root_digest), VerifyStatus::Malformed);
}

TEST(witness, third_party_proofs_accepted)
{
    std::ifstream in{DMPT_VECTORS "/trie_vectors.json"};
    const auto v = nlohmann::json::parse(in);
    ASSERT_FALSE(v["proofs"].empty());
    for (const auto& p : v["proofs"])
    {
        Witness w;
        w.path = to_nibbles(from_hex(p["key"].get<std::string>()));
        for (const auto& n : p["nodes"])
            w.nodes.push_back(from_hex(n.get<std::string>()));
        const auto root = Digest::from_hex(p["root"].get<std::string>());
        EXPECT_EQ(verify_witness(w.path, from_hex(p["value"].get<std::string>()), w, root),
            VerifyStatus::Accepted)
            << p["key"];
    }
}

TEST(witness, eager_oracle_proofs_accepted)
{
    Fixture f{1500};
    for (size_t i = 0; i < f.keys.size(); i += 37)
    {
        Witness w{to_nibbles(f.keys[i]), f.oracle.proof(f.keys[i])};
        EXPECT_EQ(verify_witness(w.path, account_value(i), w, f.oracle.root()), VerifyStatus::Accepted);
        EXPECT_EQ(w.nodes, create_witness(f.snap, f.keys[i]).witness.nodes);
    }
}

TEST(witness, soundness_fuzz)
{
    Fixture f{1000};
    std::mt19937_64 rng{99};
    int accepted = 0;
    for (int trial = 0; trial < 4000; ++trial)
    {
        const auto& k = f.keys[rng() % f.keys.size()];
        auto r = create_witness(f.snap, k);
        auto& node = r.witness.nodes[rng() % r.witness.nodes.size()];
        node[rng() % node.size()] ^= static_cast<uint8_t>(1 + rng() % 255);
        if (verify_witness(to_nibbles(k), r.value, r.witness, f.snap.root_digest) == VerifyStatus::Accepted)
            ++accepted;
    }
    EXPECT_EQ(accepted, 0);
}

TEST(compact, boundaries_and_monotonicity)
{
    Fixture f{3000};
    const auto w = create_witness(f.snap, f.keys[11]).witness;
    ASSERT_GE(w.nodes.size(), 3u);

    const auto c0 = compact(w, 0);
    EXPECT_EQ(c0.nodes.size(), w.nodes.size() - 1);
    EXPECT_EQ(c0.anchor, keccak256(w.nodes[1]));

    const auto all = compact(w, w.nodes.size());
    EXPECT_TRUE(all.nodes.empty());
    EXPECT_EQ(all.anchor, keccak256(w.nodes.back()));

    size_t last = SIZE_MAX;
    for (size_t r = 0; r <= w.nodes.size() + 1; ++r)
    {
        const auto size = compact(w, r).byte_size();
        EXPECT_LE(size, last);
        last = size;
    }
}

TEST(compact, expand_with_cached_levels_verifies)
{
    Fixture f{3000};
    for (size_t i = 0; i < 40; ++i)
    {
        const auto& k = f.keys[i * 13];
        const auto r = create_witness(f.snap, k);
        for (size_t lvl = 0; lvl <= r.witness.nodes.size(); ++lvl)
        {
            const auto cached = prune(f.snap, lvl);
            const auto full = expand(compact(r.witness, lvl), cached.root);
            ASSERT_TRUE(full) << "r=" << lvl;
            EXPECT_EQ(verify_witness(to_nibbles(k), r.value, *full, f.snap.root_digest), VerifyStatus::Accepted);
        }
    }
}

TEST(bag, shared_prefix_deduplicates)
{
    Fixture f{2000};
    const auto [a, b] = keys_sharing(f.keys, 2);
    const std::vector<Witness> ws{create_witness(f.snap, a).witness, create_witness(f.snap, b).witness};
    const auto bg = bag(ws);
    EXPECT_LT(bg.size(), ws[0].nodes.size() + ws[1].nodes.size());
    EXPECT_LT(bg.byte_size(), ws[0].byte_size() + ws[1].byte_size());
}

TEST(bag, single_witness_is_identity)
{
    Fixture f{500};
    const std::vector<Witness> ws{create_witness(f.snap, f.keys[4]).witness};
    const auto bg = bag(ws);
    ASSERT_EQ(bg.size(), ws[0].nodes.size());
    for (const auto& n : ws[0].nodes)
        EXPECT_TRUE(bg.contains(keccak256(n)));
}

TEST(bag, mixed_roots_rejected)
{
    Fixture f{100};
    WorkingTree t{f.snap};
    t.put(f.keys[0], as_view("changed"));
    const auto other = t.commit();
    const std::vector<Witness> ws{create_witness(f.snap, f.keys[1]).witness, create_witness(other, f.keys[1]).witness};
    EXPECT_THROW(bag(ws), MixedRoots);
}

TEST(bag, reconstructs_every_covered_path)
{
    Fixture f{5000};
    std::vector<Witness> ws;
    std::vector<CompactWitness> cws;
    for (size_t i = 0; i < 100; ++i)
    {
        ws.push_back(create_witness(f.snap, f.keys[i * 31]).witness);
        cws.push_back(compact(ws.back(), 2));
    }
    const auto full = bag(ws);
    const auto compacted = bag(cws);
    const auto cached = prune(f.snap, 2);
    size_t individual = 0;
    for (const auto& w : ws)
        individual += w.byte_size();
    EXPECT_LT(full.byte_size(), individual);
    EXPECT_LT(compacted.byte_size(), full.byte_size());

    for (const auto& path : full.covered())
    {
        const auto r = extract(full, path);
        ASSERT_TRUE(r);
        EXPECT_EQ(verify_witness(path, r->value, r->witness, f.snap.root_digest), VerifyStatus::Accepted);
        const auto rc = extract(compacted, path, cached.root);
        ASSERT_TRUE(rc);
        EXPECT_EQ(verify_witness(path, rc->value, rc->witness, f.snap.root_digest), VerifyStatus::Accepted);
    }
}

namespace
{
// Miner-side setup shared by the revision scenarios: a cache that saw tx1
// modify k1, while tx2's bag for k2 was taken before tx1.
struct RevisionScenario
{
    Fixture f{6000};
    Bytes k1, k2;
    NodeBag tx2_bag;
    Snapshot after_tx1;

    RevisionScenario()
    {
        std::tie(k1, k2) = keys_sharing(f.keys, 2);
        const std::vector<Witness> w2{create_witness(f.snap, k2).witness};
        tx2_bag = bag(w2);

        // Miner cache: top level resident, k1's path fetched, tx1 applied.
        auto cache = prune(f.snap, 1).root;
        NodeBag k1_bag{f.snap.root_digest};
        for (const auto& n : create_witness(f.snap, k1).witness.nodes)
            k1_bag.add(n);
        cache = graft(cache, to_nibbles(k1), k1_bag.lookup()).root;
        WorkingTree t{cache};
        t.put(k1, as_view("tx1 wrote this value"));
        after_tx1 = t.commit();
    }
};
}  // namespace

TEST(revise, stale_bag_revised_through_fresh_cache_node)
{
    RevisionScenario s;
    // C (depth 2) is stale in the bag; C' is resident in the cache.
    const auto r = revise(s.tx2_bag, s.after_tx1.root, to_nibbles(s.k2));
    ASSERT_TRUE(std::holds_alternative<Revised>(r));
    const auto& rev = std::get<Revised>(r);
    EXPECT_EQ(rev.value, s.f.snap.get(s.k2));
    const auto w = create_witness(rev.root, to_nibbles(s.k2));
    EXPECT_EQ(verify_witness(to_nibbles(s.k2), rev.value, w.witness, s.after_tx1.root_digest),
        VerifyStatus::Accepted);
    // The bag alone cannot reach k2 under the new root.
    EXPECT_FALSE(extract(s.tx2_bag, to_nibbles(s.k2), Node::stub(s.after_tx1.root_digest)));
}

TEST(revise, pruned_cache_reports_missing_node)
{
    RevisionScenario s;
    const auto pruned = prune(s.after_tx1, 1);
    const auto r = revise(s.tx2_bag, pruned.root, to_nibbles(s.k2));
    ASSERT_TRUE(std::holds_alternative<Incomplete>(r));
    const auto nib = to_nibbles(s.k2);
    const auto c_prime = s.after_tx1.root->children[nib[0]]->children[nib[1]];
    EXPECT_EQ(std::get<Incomplete>(r).missing, c_prime->digest());
}

TEST(revise, exact_bag_matches_create_witness)
{
    Fixture f{1000};
    const auto k = f.keys[77];
    const auto w = create_witness(f.snap, k);
    const std::vector<Witness> ws{w.witness};
    const auto r = revise(bag(ws), Node::stub(f.snap.root_digest), to_nibbles(k));
    ASSERT_TRUE(std::holds_alternative<Revised>(r));
    EXPECT_EQ(create_witness(std::get<Revised>(r).root, to_nibbles(k)).witness.nodes, w.witness.nodes);
}

TEST(revise, monotone_in_bag_contents)
{
    RevisionScenario s;
    auto bigger = s.tx2_bag;
    for (size_t i = 0; i < 50; ++i)
        for (const auto& n : create_witness(s.f.snap, s.f.keys[i]).witness.nodes)
            bigger.add(n);
    EXPECT_TRUE(std::holds_alternative<Revised>(revise(s.tx2_bag, s.after_tx1.root, to_nibbles(s.k2))));
    EXPECT_TRUE(std::holds_alternative<Revised>(revise(bigger, s.after_tx1.root, to_nibbles(s.k2))));
}
