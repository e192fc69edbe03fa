// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/layout.hpp>

namespace dmpt
{
namespace
{
NodePtr seal(NodePtr n)
{
    n->ref = NodeRef::of_encoding(encode_node(*n));
    n->dirty = false;
    return n;
}
}  // namespace

void check_key(BytesView key)
{
    if (key.size() != key_size)
        throw BadKey{"keys must be 32 bytes, got " + std::to_string(key.size())};
}

Nibbles local_path(BytesView key)
{
    check_key(key);
    auto p = to_nibbles(key);
    p.erase(p.begin());
    return p;
}

NodePtr shard_root(const NodePtr& global, uint8_t i)
{
    if (!global)
        return nullptr;
    switch (global->kind)
    {
    case NodeKind::HashStub:
        throw NodeNotResident{global->digest()};
    case NodeKind::Branch:
        return global->children[i];
    case NodeKind::Extension:
        if (global->path[0] != i)
            return nullptr;
        if (global->path.size() == 1)
            return global->children[0];
        return seal(Node::extension(Nibbles(global->path.begin() + 1, global->path.end()), global->children[0]));
    case NodeKind::Leaf:
        if (global->path.empty() || global->path[0] != i)
            return nullptr;
        return seal(Node::leaf(Nibbles(global->path.begin() + 1, global->path.end()), global->value));
    }
    return nullptr;
}

Digest shard_digest(const NodePtr& global, uint8_t i)
{
    const auto r = shard_root(global, i);
    return r ? r->digest() : empty_trie_digest();
}

ShardRoots shard_digests(const NodePtr& global)
{
    ShardRoots out;
    for (uint8_t i = 0; i < shard_count; ++i)
        out[i] = shard_digest(global, i);
    return out;
}

NodePtr join_shards(const std::array<NodePtr, shard_count>& roots)
{
    size_t populated = 0;
    uint8_t only = 0;
    for (uint8_t i = 0; i < shard_count; ++i)
        if (roots[i])
        {
            ++populated;
            only = i;
        }
    if (populated == 0)
        return nullptr;
    if (populated > 1)
    {
        auto b = Node::branch();
        for (size_t i = 0; i < shard_count; ++i)
            b->children[i] = roots[i];
        return seal(b);
    }
    const auto& r = roots[only];
    switch (r->kind)
    {
    case NodeKind::HashStub:
        throw NodeNotResident{r->digest()};
    case NodeKind::Branch:
        return seal(Node::extension(Nibbles{only}, r));
    case NodeKind::Extension:
        return seal(Node::extension(concat(Nibbles{only}, r->path), r->children[0]));
    case NodeKind::Leaf:
        return seal(Node::leaf(concat(Nibbles{only}, r->path), r->value));
    }
    return nullptr;
}

std::optional<NodePtr> join_digests(const ShardRoots& roots)
{
    std::array<NodePtr, shard_count> nodes;
    size_t populated = 0;
    for (size_t i = 0; i < shard_count; ++i)
        if (roots[i] != empty_trie_digest())
        {
            nodes[i] = Node::stub(roots[i]);
            ++populated;
        }
    if (populated == 1)
        return std::nullopt;
    return join_shards(nodes);
}

}  // namespace dmpt
