// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/trie.hpp>
#include <support/eager_trie.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <random>
#include <set>
#include <thread>

using namespace dmpt;
using dmpt::test::EagerTrie;

namespace
{
Bytes random_bytes(std::mt19937_64& rng, size_t n)
{
    Bytes b(n);
    for (auto& x : b)
        x = static_cast<uint8_t>(rng());
    return b;
}

Bytes hashed_key(uint64_t i)
{
    const auto d = keccak256(as_view(std::to_string(i)));
    return Bytes(d.bytes.begin(), d.bytes.end());
}

// Checks structural invariants of a resident tree.
void check_invariants(const NodePtr& n, bool is_root = true)
{
    if (!n || n->is_stub())
        return;
    EXPECT_FALSE(n->dirty);
    if (n->kind == NodeKind::Branch)
        EXPECT_GE(n->populated_slots(), 2u);
    if (n->kind == NodeKind::Extension)
    {
        EXPECT_FALSE(n->path.empty());
        EXPECT_TRUE(n->children[0]->is_stub() || n->children[0]->kind == NodeKind::Branch);
    }
    EXPECT_EQ(n->ref.digest(), keccak256(encode_node(*n)));
    for (const auto& c : n->children)
        check_invariants(c, false);
    (void)is_root;
}

Digest tree_checksum(const NodePtr& root)
{
    Bytes acc;
    std::function<void(const NodePtr&)> walk = [&](const NodePtr& n) {
        if (!n)
        {
            acc.push_back(0);
            return;
        }
        acc.push_back(static_cast<uint8_t>(n->kind) + 1);
        acc.push_back(n->dirty);
        append(acc, n->ref.view());
        append(acc, n->path);
        append(acc, n->value);
        for (const auto& c : n->children)
            walk(c);
    };
    walk(root);
    return keccak256(acc);
}
}  // namespace

TEST(trie, empty_tree)
{
    WorkingTree t;
    EXPECT_EQ(t.root_digest(), empty_trie_digest());
    EXPECT_FALSE(t.get(as_view("anything")));
    EXPECT_EQ(t.commit().root_digest, empty_trie_digest());
}

TEST(trie, third_party_roots)
{
    std::ifstream f{DMPT_VECTORS "/trie_vectors.json"};
    const auto v = nlohmann::json::parse(f);
    for (const auto& t : v["tries"])
    {
        WorkingTree tree;
        EagerTrie oracle;
        for (const auto& op : t["ops"])
        {
            const auto key = from_hex(op[1].get<std::string>());
            if (op[0] == "put")
            {
                const auto value = from_hex(op[2].get<std::string>());
                tree.put(key, value);
                oracle.put(key, value);
            }
            else
            {
                tree.erase(key);
                oracle.erase(key);
            }
        }
        const auto expected = t["root"].get<std::string>();
        EXPECT_EQ(tree.root_digest().hex(), expected) << t["name"];
        EXPECT_EQ(oracle.root().hex(), expected) << "oracle " << t["name"];
        check_invariants(tree.root());
    }
}

TEST(trie, put_then_get)
{
    WorkingTree t;
    const auto key = from_hex("646f");
    t.put(key, as_view("verb"));
    EXPECT_EQ(t.get(key), to_bytes("verb"));
}

TEST(trie, prefix_non_match_is_absent)
{
    WorkingTree t;
    const auto key = from_hex("abcdef01");
    t.put(key, as_view("v"));
    t.put(from_hex("1234"), as_view("w"));
    // Shares the first three nibbles only.
    EXPECT_FALSE(t.get(from_hex("abc0ef01")));
    EXPECT_FALSE(t.get(from_hex("abcd")));
    EXPECT_EQ(t.get(key), to_bytes("v"));
}

TEST(trie, idempotent_reinsert)
{
    WorkingTree t;
    t.put(from_hex("0102"), as_view("x"));
    t.put(from_hex("0103"), as_view("y"));
    const auto first = t.commit().root_digest;
    t.put(from_hex("0102"), as_view("x"));
    EXPECT_EQ(t.commit().root_digest, first);
}

TEST(trie, rejects_empty_and_oversized_values)
{
    WorkingTree t;
    EXPECT_THROW(t.put(as_view("k"), BytesView{}), std::invalid_argument);
    const Bytes big(max_value_size + 1, 1);
    EXPECT_THROW(t.put(as_view("k"), big), std::invalid_argument);
    const Bytes ok(max_value_size, 1);
    EXPECT_NO_THROW(t.put(as_view("k"), ok));
}

TEST(trie, random_puts_match_eager_oracle)
{
    std::mt19937_64 rng{1000};
    WorkingTree t;
    EagerTrie oracle;
    for (int i = 0; i < 1000; ++i)
    {
        const auto key = random_bytes(rng, 1 + rng() % 6);
        const auto value = random_bytes(rng, 1 + rng() % 40);
        t.put(key, value);
        oracle.put(key, value);
    }
    EXPECT_EQ(t.root_digest(), oracle.root());
    check_invariants(t.root());
}

TEST(trie, ten_thousand_hashed_keys_match_both_oracles)
{
    WorkingTree t;
    EagerTrie oracle;
    std::map<Nibbles, Bytes> kv;
    for (uint64_t i = 0; i < 10000; ++i)
    {
        const auto key = hashed_key(i);
        const auto value = to_bytes("account-" + std::to_string(i * 7919));
        t.put(key, value);
        oracle.put(key, value);
        kv[to_nibbles(key)] = value;
    }
    const auto d = t.root_digest();
    EXPECT_EQ(d, oracle.root());
    EXPECT_EQ(d, test::scratch_root(kv));
}

TEST(trie, insert_then_delete_restores_empty_root)
{
    WorkingTree t;
    t.put(as_view("key"), as_view("value"));
    t.erase(as_view("key"));
    EXPECT_EQ(t.root_digest(), empty_trie_digest());
    EXPECT_EQ(t.root(), nullptr);
}

TEST(trie, delete_collapses_branch)
{
    WorkingTree t;
    const auto k1 = from_hex("a1b2c3");
    const auto k2 = from_hex("a1b2d4");
    t.put(k1, as_view("one-value-long-enough-to-hash-0000"));
    t.put(k2, as_view("two"));
    t.commit();
    t.erase(k2);

    EagerTrie only_k1;
    only_k1.put(k1, as_view("one-value-long-enough-to-hash-0000"));
    EXPECT_EQ(t.root_digest(), only_k1.root());
    EXPECT_EQ(t.root()->kind, NodeKind::Leaf);
}

TEST(trie, delete_on_empty_and_absent_key)
{
    WorkingTree t;
    EXPECT_NO_THROW(t.erase(as_view("x")));
    EXPECT_EQ(t.root_digest(), empty_trie_digest());
    t.put(as_view("a"), as_view("1"));
    const auto root = t.root();
    t.erase(as_view("b"));
    EXPECT_EQ(t.root(), root);
}

TEST(trie, random_put_delete_matches_oracle)
{
    std::mt19937_64 rng{77};
    WorkingTree t;
    EagerTrie oracle;
    std::vector<Bytes> live;
    for (int i = 0; i < 5000; ++i)
    {
        if (!live.empty() && rng() % 3 == 0)
        {
            const auto idx = rng() % live.size();
            t.erase(live[idx]);
            oracle.erase(live[idx]);
            live.erase(live.begin() + static_cast<ptrdiff_t>(idx));
        }
        else
        {
            auto key = random_bytes(rng, 1 + rng() % 3);
            const auto value = random_bytes(rng, 1 + rng() % 50);
            t.put(key, value);
            oracle.put(key, value);
            live.push_back(std::move(key));
        }
        if (i % 500 == 0)
        {
            ASSERT_EQ(t.commit().root_digest, oracle.root()) << "step " << i;
            check_invariants(t.root());
        }
    }
    EXPECT_EQ(t.root_digest(), oracle.root());
}

TEST(trie, deletes_after_root_digest_rehash_ancestors)
{
    // root_digest() leaves nodes owned by the tree, so later writes mutate
    // them in place; every ancestor must still be re-hashed.
    std::mt19937_64 rng{78};
    WorkingTree t;
    EagerTrie oracle;
    for (int i = 0; i < 3000; ++i)
    {
        const auto key = hashed_key(rng() % 400);
        if (rng() % 3 == 0)
        {
            t.erase(key);
            oracle.erase(key);
        }
        else
        {
            const auto value = random_bytes(rng, 1 + rng() % 80);
            t.put(key, value);
            oracle.put(key, value);
        }
        ASSERT_EQ(t.root_digest(), oracle.root()) << "step " << i;
    }
}

TEST(trie, snapshot_isolation)
{
    WorkingTree t;
    t.put(as_view("a"), as_view("1"));
    t.put(as_view("b"), as_view("2"));
    const auto s1 = t.commit();
    t.put(as_view("a"), as_view("3"));
    const auto s2 = t.commit();
    EXPECT_EQ(s1.get(as_view("a")), to_bytes("1"));
    EXPECT_EQ(s2.get(as_view("a")), to_bytes("3"));
    EXPECT_GT(s2.version, s1.version);
}

TEST(trie, commit_without_writes_keeps_digest_new_version)
{
    WorkingTree t;
    t.put(as_view("a"), as_view("1"));
    const auto s1 = t.commit();
    const auto s2 = t.commit();
    EXPECT_EQ(s1.root_digest, s2.root_digest);
    EXPECT_GT(s2.version, s1.version);
}

TEST(trie, branches_from_one_snapshot)
{
    std::mt19937_64 rng{5};
    WorkingTree base;
    EagerTrie oracle_a, oracle_b;
    for (uint64_t i = 0; i < 200; ++i)
    {
        const auto k = hashed_key(i);
        const auto v = random_bytes(rng, 40);
        base.put(k, v);
        oracle_a.put(k, v);
        oracle_b.put(k, v);
    }
    const auto s0 = base.commit();
    WorkingTree a{s0}, b{s0};
    for (uint64_t i = 200; i < 260; ++i)
    {
        const auto v = random_bytes(rng, 40);
        if (i % 2)
        {
            a.put(hashed_key(i), v);
            oracle_a.put(hashed_key(i), v);
        }
        else
        {
            b.put(hashed_key(i), v);
            oracle_b.put(hashed_key(i), v);
        }
    }
    EXPECT_EQ(a.commit().root_digest, oracle_a.root());
    EXPECT_EQ(b.commit().root_digest, oracle_b.root());
    EXPECT_EQ(s0.get(hashed_key(201)), std::nullopt);
}

TEST(trie, structural_sharing)
{
    WorkingTree t;
    for (uint64_t i = 0; i < 500; ++i)
        t.put(hashed_key(i), as_view("value-that-is-long-enough-for-hashing"));
    const auto parent = t.commit();
    const auto key = hashed_key(3);
    t.put(key, as_view("changed"));
    const auto child = t.commit();

    ASSERT_EQ(parent.root->kind, NodeKind::Branch);
    const auto slot = to_nibbles(key)[0];
    for (size_t i = 0; i < 16; ++i)
    {
        if (i == slot)
            EXPECT_NE(parent.root->children[i], child.root->children[i]);
        else
            EXPECT_EQ(parent.root->children[i], child.root->children[i]);
    }
}

TEST(trie, writes_are_lazy)
{
    WorkingTree t;
    for (uint64_t i = 0; i < 2000; ++i)
        t.put(hashed_key(i), as_view("v0000000000000000000000000000000000"));
    t.commit();
    const auto before = node_hash_count();
    const auto tree_before = t.hash_count();
    for (uint64_t i = 0; i < 500; ++i)
        t.put(hashed_key(i), as_view("v1"));
    for (uint64_t i = 500; i < 600; ++i)
        t.erase(hashed_key(i));
    EXPECT_EQ(node_hash_count(), before);
    EXPECT_EQ(t.hash_count(), tree_before);
}

TEST(trie, memoization_rehashes_only_the_dirty_path)
{
    WorkingTree t;
    for (uint64_t i = 0; i < 5000; ++i)
        t.put(hashed_key(i), as_view("value-that-is-long-enough-for-hashing"));
    t.commit();
    const auto height = tree_stats(t.root()).height;
    const auto key = hashed_key(42);
    for (int k = 0; k < 10; ++k)
    {
        t.put(key, to_bytes("value-" + std::to_string(k)));
        const auto before = t.hash_count();
        t.root_digest();
        EXPECT_LE(t.hash_count() - before, height);
    }
    const auto before = t.hash_count();
    t.commit();
    EXPECT_EQ(t.hash_count(), before);
}

TEST(trie, get_through_stub_reports_digest)
{
    WorkingTree t;
    for (uint64_t i = 0; i < 100; ++i)
        t.put(hashed_key(i), as_view("value-that-is-long-enough-for-hashing"));
    const auto s = t.commit();
    const auto pruned = prune(s, 0);
    const auto key = hashed_key(7);
    const auto expected = s.root->children[to_nibbles(key)[0]]->digest();
    try
    {
        pruned.get(key);
        FAIL() << "expected NodeNotResident";
    }
    catch (const NodeNotResident& e)
    {
        EXPECT_EQ(e.digest, expected);
    }
    WorkingTree w{pruned};
    EXPECT_THROW(w.put(key, as_view("x")), NodeNotResident);
}

TEST(trie, prune_boundaries)
{
    WorkingTree t;
    for (uint64_t i = 0; i < 3000; ++i)
        t.put(hashed_key(i), as_view("value-that-is-long-enough-for-hashing"));
    const auto s = t.commit();
    const auto full = tree_stats(s.root);

    const auto same = prune(s, full.height);
    EXPECT_EQ(same.root, s.root);

    const auto top = prune(s, 0);
    const auto st = tree_stats(top.root);
    EXPECT_EQ(st.resident_nodes(), 1u);
    EXPECT_EQ(st.stubs, 16u);
    EXPECT_EQ(root_digest_of(top.root), s.root_digest);

    size_t last = 0;
    for (size_t r = 0; r <= full.height; ++r)
    {
        const auto p = prune(s, r);
        const auto n = tree_stats(p.root).resident_nodes();
        EXPECT_GE(n, last);
        last = n;
        EXPECT_EQ(root_digest_of(p.root), s.root_digest);
    }
    EXPECT_EQ(last, full.resident_nodes());
}

TEST(trie, prune_then_reexpand_from_oracle_store)
{
    WorkingTree t;
    EagerTrie oracle;
    std::vector<Bytes> keys;
    for (uint64_t i = 0; i < 800; ++i)
    {
        keys.push_back(hashed_key(i));
        const auto v = to_bytes("value-that-is-long-enough-for-hashing-" + std::to_string(i));
        t.put(keys.back(), v);
        oracle.put(keys.back(), v);
    }
    const auto s = t.commit();
    for (size_t r : {0u, 1u, 2u})
    {
        auto root = prune(s, r).root;
        const NodeLookup from_oracle = [&](const Digest& d) -> NodePtr {
            const auto enc = oracle.node(d);
            return enc ? decode_node(*enc) : nullptr;
        };
        for (const auto& k : keys)
        {
            auto g = graft(root, to_nibbles(k), from_oracle);
            ASSERT_FALSE(g.missing);
            root = g.root;
        }
        const auto st = tree_stats(root);
        EXPECT_EQ(st.stubs, 0u);
        EXPECT_EQ(st.resident_nodes(), tree_stats(s.root).resident_nodes());
        EXPECT_EQ(root_digest_of(root), s.root_digest);
        WorkingTree w{root};
        w.put(keys[0], as_view("x"));
        oracle.put(keys[0], as_view("x"));
        EXPECT_EQ(w.root_digest(), oracle.root());
        oracle.put(keys[0], to_bytes("value-that-is-long-enough-for-hashing-0"));
    }
}

TEST(trie, prune_keeps_requested_paths)
{
    WorkingTree t;
    for (uint64_t i = 0; i < 3000; ++i)
        t.put(hashed_key(i), as_view("value-that-is-long-enough-for-hashing"));
    const auto s = t.commit();
    const std::vector<Nibbles> keep{to_nibbles(hashed_key(5)), to_nibbles(hashed_key(9))};
    const auto p = prune(s, 1, keep);
    EXPECT_TRUE(p.get(hashed_key(5)));
    EXPECT_TRUE(p.get(hashed_key(9)));
    EXPECT_THROW(p.get(hashed_key(6)), NodeNotResident);
}

TEST(trie, erase_needing_stub_sibling_fails_cleanly)
{
    WorkingTree t;
    const auto k1 = from_hex("10aaaa");
    const auto k2 = from_hex("20bbbb");
    t.put(k1, as_view("value-that-is-long-enough-for-hashing-1"));
    t.put(k2, as_view("value-that-is-long-enough-for-hashing-2"));
    const auto s = t.commit();
    WorkingTree w{prune(s, 0)};
    // Root branch has two leaves; deleting one collapses onto the other,
    // which is only a stub after pruning.
    const auto root_before = w.root();
    EXPECT_THROW(w.erase(k1), NodeNotResident);
    EXPECT_EQ(w.root(), root_before);
    EXPECT_EQ(w.root_digest(), s.root_digest);
}

TEST(trie, snapshot_immutable_under_descendant_writes)
{
    std::mt19937_64 rng{9};
    WorkingTree t;
    for (uint64_t i = 0; i < 1000; ++i)
        t.put(hashed_key(i), random_bytes(rng, 50));
    const auto parent = t.commit();
    const auto sum = tree_checksum(parent.root);
    for (int round = 0; round < 5; ++round)
    {
        for (uint64_t i = 0; i < 300; ++i)
        {
            if (rng() % 4 == 0)
                t.erase(hashed_key(rng() % 1200));
            else
                t.put(hashed_key(rng() % 1200), random_bytes(rng, 50));
        }
        t.commit();
        WorkingTree other{parent};
        other.put(hashed_key(1), as_view("z"));
        other.root_digest();
    }
    EXPECT_EQ(tree_checksum(parent.root), sum);
}

TEST(trie, deterministic_across_instances)
{
    const auto run = [] {
        std::mt19937_64 rng{123};
        WorkingTree t;
        for (int i = 0; i < 3000; ++i)
        {
            const auto k = hashed_key(rng() % 1000);
            if (rng() % 5 == 0)
                t.erase(k);
            else
                t.put(k, random_bytes(rng, 1 + rng() % 120));
        }
        return t.root_digest();
    };
    EXPECT_EQ(run(), run());
}

TEST(node, encoding_roundtrip_property)
{
    std::mt19937_64 rng{21};
    const auto random_path = [&](size_t max) {
        Nibbles p(rng() % (max + 1));
        for (auto& x : p)
            x = static_cast<uint8_t>(rng() % 16);
        return p;
    };
    const auto random_child = [&]() -> NodePtr {
        if (rng() % 3 == 0)
        {
            // short leaf -> inline reference
            auto leaf = Node::leaf(random_path(2), random_bytes(rng, 1 + rng() % 3));
            leaf->ref = NodeRef::of_encoding(encode_node(*leaf));
            leaf->dirty = false;
            return leaf;
        }
        Digest d;
        for (auto& b : d.bytes)
            b = static_cast<uint8_t>(rng());
        return Node::stub(d);
    };
    for (int trial = 0; trial < 600; ++trial)
    {
        NodePtr n;
        switch (trial % 3)
        {
        case 0:
            n = Node::leaf(random_path(64), random_bytes(rng, 1 + rng() % 200));
            break;
        case 1:
        {
            auto b = Node::branch();
            b->children[rng() % 16] = random_child();
            b->children[rng() % 16] = random_child();
            b->children[rng() % 16] = random_child();
            if (rng() % 2)
                b->value = random_bytes(rng, 1 + rng() % 10);
            if (b->populated_slots() < 2)
                b->value = {1};
            n = b;
            break;
        }
        default:
        {
            auto p = random_path(40);
            if (p.empty())
                p.push_back(3);
            Digest d;
            d.bytes[0] = static_cast<uint8_t>(trial);
            n = Node::extension(p, Node::stub(d));
            break;
        }
        }
        const auto enc = encode_node(*n);
        const auto back = decode_node(enc);
        EXPECT_EQ(back->kind, n->kind);
        EXPECT_EQ(back->path, n->path);
        EXPECT_EQ(back->value, n->value);
        EXPECT_EQ(encode_node(*back), enc);
        EXPECT_FALSE(back->dirty);
    }
}

TEST(node, decode_rejects_malformed)
{
    EXPECT_THROW(decode_node(from_hex("c0")), MalformedNode);
    EXPECT_THROW(decode_node(from_hex("c3828080")), MalformedNode);
    // extension with empty path
    EXPECT_THROW(decode_node(rlp::ListBuilder{}.string(from_hex("00")).string(Bytes(32, 1)).finish()),
        MalformedNode);
    // leaf with empty value
    EXPECT_THROW(decode_node(rlp::ListBuilder{}.string(from_hex("20")).string(BytesView{}).finish()),
        MalformedNode);
    // child reference of the wrong size
    EXPECT_THROW(decode_node(rlp::ListBuilder{}.string(from_hex("00aa")).string(Bytes(31, 1)).finish()),
        MalformedNode);
}

TEST(trie, concurrent_readers_and_committers)
{
    WorkingTree t;
    for (uint64_t i = 0; i < 2000; ++i)
        t.put(hashed_key(i), to_bytes("v" + std::to_string(i)));
    const auto s = t.commit();

    std::vector<std::thread> threads;
    std::vector<std::vector<uint64_t>> versions(4);
    std::atomic<int> mismatches{0};
    for (int th = 0; th < 4; ++th)
    {
        threads.emplace_back([&, th] {
            WorkingTree mine{s};
            for (uint64_t i = 0; i < 200; ++i)
            {
                const auto k = (i * 7 + th) % 2000;
                if (s.get(hashed_key(k)) != to_bytes("v" + std::to_string(k)))
                    ++mismatches;
                mine.put(hashed_key(k), to_bytes("t" + std::to_string(th)));
                if (i % 20 == 0)
                    versions[th].push_back(mine.commit().version);
            }
        });
    }
    for (auto& th : threads)
        th.join();
    EXPECT_EQ(mismatches.load(), 0);
    std::set<uint64_t> all;
    size_t count = 0;
    for (const auto& v : versions)
    {
        all.insert(v.begin(), v.end());
        count += v.size();
    }
    EXPECT_EQ(all.size(), count);
}
