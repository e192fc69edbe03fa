// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/shard.hpp>

#include <set>
#include <unordered_set>

namespace dmpt
{
Shard::Shard(uint8_t id, size_t gc_keep) : id_{id}, gc_keep_{gc_keep}
{
    if (id >= shard_count)
        throw std::invalid_argument{"shard id out of range"};
    reset_locked();
}

void Shard::reset_locked()
{
    versions_.clear();
    blocks_.clear();
    versions_[empty_trie_digest()] = Version{Snapshot{}, std::nullopt, 0};
    blocks_[null_block_id()] = empty_trie_digest();
    head_ = empty_trie_digest();
    head_block_ = null_block_id();
}

ApplyResult Shard::apply_updates(const UpdateBatch& batch)
{
    std::lock_guard lock{writer_};
    return apply_locked(batch);
}

ApplyResult Shard::apply_locked(const UpdateBatch& batch)
{
    const auto reject = [](std::string reason) { return ApplyResult{false, empty_trie_digest(), std::move(reason)}; };

    BlockHeader header;
    try
    {
        header = BlockHeader::decode(batch.header);
    }
    catch (const std::exception&)
    {
        return reject("bad-header");
    }
    if (header.id() != batch.block_id || header.shard_roots[id_] != batch.new_root)
        return reject("bad-header");

    std::set<Bytes> seen;
    for (const auto& w : batch.writes)
    {
        if (w.key.size() != key_size)
            return reject("bad-batch");
        if (shard_of(w.key) != id_)
            return reject("wrong-shard");
        if (!seen.insert(w.key).second || (w.value && (w.value->empty() || w.value->size() > max_value_size)))
            return reject("bad-batch");
    }

    Version parent;
    {
        std::shared_lock lock{state_};
        const auto b = blocks_.find(header.parent);
        if (b == blocks_.end() || b->second != batch.parent_root)
            return reject("unknown-parent");
        const auto v = versions_.find(batch.parent_root);
        if (v == versions_.end())
            return reject("unknown-parent");
        parent = v->second;
        if (const auto known = blocks_.find(batch.block_id); known != blocks_.end())
        {
            if (known->second == batch.new_root)
                return ApplyResult{true, batch.new_root, {}};
            return reject("root-mismatch");
        }
    }

    WorkingTree tree{parent.snap};
    for (const auto& w : batch.writes)
    {
        const auto path = local_path(w.key);
        if (w.value)
            tree.put_path(path, *w.value);
        else
        {
            // A delete of an absent key changes nothing, so it could be
            // rewritten in transit without changing the digest.
            if (!tree.get_path(path))
                return reject("bad-batch");
            tree.erase_path(path);
        }
    }
    if (tree.root_digest() != batch.new_root)
        return reject("root-mismatch");
    auto snap = tree.commit();

    std::unique_lock lock{state_};
    if (!versions_.contains(snap.root_digest))
        versions_[snap.root_digest] = Version{std::move(snap), batch.parent_root, parent.height + 1};
    blocks_[batch.block_id] = batch.new_root;
    head_ = batch.new_root;
    head_block_ = batch.block_id;
    return ApplyResult{true, batch.new_root, {}};
}

ReadResult Shard::read_accounts(std::span<const Bytes> keys, const Digest& root, size_t r, bool siblings) const
{
    Snapshot snap;
    {
        std::shared_lock lock{state_};
        const auto v = versions_.find(root);
        if (v == versions_.end())
            throw ShardError{"unknown-version", root.hex()};
        snap = v->second.snap;
    }
    ReadResult out{{}, NodeBag{root}};
    for (const auto& key : keys)
    {
        if (key.size() != key_size)
            throw ShardError{"bad-request", "keys must be 32 bytes"};
        if (shard_of(key) != id_)
        {
            ++foreign_;
            throw ShardError{"wrong-shard", hex(key)};
        }
        const auto path = local_path(key);
        out.values.push_back(lookup(snap.root, path));
        out.bag.cover(path);

        const Node* n = snap.root.get();
        NibbleView rest = path;
        size_t depth = 0;  // hash-referenced nodes passed so far
        while (n)
        {
            const bool referenced = depth == 0 || n->ref.is_hash();
            if (referenced)
            {
                if (depth >= r)
                    out.bag.add(encode_node(*n));
                ++depth;
            }
            const Node* next = nullptr;
            if (n->kind == NodeKind::Extension && starts_with(rest, n->path))
            {
                rest = rest.subspan(n->path.size());
                next = n->children[0].get();
            }
            else if (n->kind == NodeKind::Branch && !rest.empty())
            {
                if (siblings && depth >= r)
                    for (size_t i = 0; i < 16; ++i)
                    {
                        const auto& c = n->children[i];
                        if (i != rest[0] && c && c->ref.is_hash())
                            out.bag.add(encode_node(*c));
                    }
                next = n->children[rest[0]].get();
                rest = rest.subspan(1);
            }
            n = next;
        }
    }
    return out;
}

HeadInfo Shard::head() const
{
    std::shared_lock lock{state_};
    const auto& v = versions_.at(head_);
    return HeadInfo{head_, head_block_, v.height, versions_.size()};
}

size_t Shard::collect_garbage(std::optional<size_t> keep)
{
    std::lock_guard writer{writer_};
    const size_t k = std::max<size_t>(1, keep.value_or(gc_keep_));
    std::unique_lock lock{state_};

    std::map<Digest, size_t> children;
    for (const auto& [d, v] : versions_)
        if (v.parent && versions_.contains(*v.parent))
            ++children[*v.parent];

    std::set<Digest> retained{head_};
    for (const auto& [d, v] : versions_)
    {
        if (children[d] >= 2)
            retained.insert(d);
        if (children[d] != 0)
            continue;
        // `d` is a fork head: keep it and its k - 1 nearest ancestors.
        auto cur = std::optional<Digest>{d};
        for (size_t i = 0; i < k && cur; ++i)
        {
            const auto it = versions_.find(*cur);
            if (it == versions_.end())
                break;
            retained.insert(*cur);
            cur = it->second.parent;
        }
    }

    size_t reclaimed = 0;
    for (auto it = versions_.begin(); it != versions_.end();)
    {
        if (retained.contains(it->first))
            ++it;
        else
        {
            it = versions_.erase(it);
            ++reclaimed;
        }
    }
    for (auto it = blocks_.begin(); it != blocks_.end();)
    {
        if (versions_.contains(it->second))
            ++it;
        else
            it = blocks_.erase(it);
    }
    return reclaimed;
}

RebuildResult Shard::rebuild_from_log(std::span<const UpdateBatch> log)
{
    std::lock_guard writer{writer_};
    {
        std::unique_lock lock{state_};
        reset_locked();
    }
    RebuildResult out;
    for (const auto& batch : log)
    {
        const auto r = apply_locked(batch);
        if (!r.accepted)
        {
            out.complete = false;
            out.reason = r.reason;
            break;
        }
        ++out.applied;
    }
    std::shared_lock lock{state_};
    out.head = head_;
    return out;
}

std::optional<Snapshot> Shard::version(const Digest& root) const
{
    std::shared_lock lock{state_};
    const auto v = versions_.find(root);
    if (v == versions_.end())
        return std::nullopt;
    return v->second.snap;
}

std::vector<Digest> Shard::versions() const
{
    std::shared_lock lock{state_};
    std::vector<Digest> out;
    for (const auto& [d, v] : versions_)
        out.push_back(d);
    return out;
}

namespace
{
void collect(const NodePtr& n, bool referenced, std::unordered_set<Digest, DigestHash>& seen)
{
    if (!n || n->is_stub())
        return;
    if (referenced && !seen.insert(n->digest()).second)
        return;
    for (const auto& c : n->children)
        if (c)
            collect(c, c->ref.is_hash(), seen);
}
}  // namespace

size_t Shard::resident_node_count() const
{
    std::shared_lock lock{state_};
    std::unordered_set<Digest, DigestHash> seen;
    for (const auto& [d, v] : versions_)
        collect(v.snap.root, true, seen);
    return seen.size();
}

}  // namespace dmpt
