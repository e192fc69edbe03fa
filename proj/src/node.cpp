// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/node.hpp>
#include <dmpt/rlp.hpp>

namespace dmpt
{
namespace
{
std::atomic<uint64_t> g_hash_count{0};

void append_child_ref(Bytes& out, const NodePtr& child)
{
    if (!child)
    {
        out.push_back(0x80);
        return;
    }
    if (child->dirty)
        throw std::logic_error{"encoding a node with a dirty child"};
    if (child->ref.is_hash())
        rlp::append_string(out, child->ref.view());
    else
        append(out, child->ref.view());
}

NodePtr decode_child(const rlp::Item& item)
{
    if (item.is_list)
    {
        if (item.raw.size() >= 32)
            throw MalformedNode{"inline child of 32 bytes or more"};
        return decode_node(item.raw);
    }
    if (item.payload.empty())
        return nullptr;
    if (item.payload.size() != 32)
        throw MalformedNode{"child reference must be empty, inline or 32 bytes"};
    return Node::stub(Digest::from_view(item.payload));
}
}  // namespace

const char* to_string(NodeKind kind) noexcept
{
    switch (kind)
    {
    case NodeKind::Branch:
        return "branch";
    case NodeKind::Extension:
        return "extension";
    case NodeKind::Leaf:
        return "leaf";
    case NodeKind::HashStub:
        return "hash";
    }
    return "?";
}

NodeRef NodeRef::of_encoding(BytesView encoding)
{
    if (encoding.size() >= 32)
        return of_digest(keccak256(encoding));
    NodeRef r;
    std::copy(encoding.begin(), encoding.end(), r.data.begin());
    r.size = static_cast<uint8_t>(encoding.size());
    return r;
}

Digest NodeRef::digest() const noexcept
{
    if (is_hash())
        return Digest{data};
    return keccak256(view());
}

NodePtr Node::leaf(Nibbles path, Bytes value, uint64_t owner)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Leaf;
    n->path = std::move(path);
    n->value = std::move(value);
    n->owner = owner;
    return n;
}

NodePtr Node::extension(Nibbles path, NodePtr child, uint64_t owner)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Extension;
    n->path = std::move(path);
    n->children.push_back(std::move(child));
    n->owner = owner;
    return n;
}

NodePtr Node::branch(uint64_t owner)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Branch;
    n->children.resize(16);
    n->owner = owner;
    return n;
}

NodePtr Node::stub(const Digest& d)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::HashStub;
    n->ref = NodeRef::of_digest(d);
    n->dirty = false;
    return n;
}

size_t Node::populated_slots() const noexcept
{
    size_t n = value.empty() ? 0 : 1;
    for (const auto& c : children)
        n += c ? 1 : 0;
    return n;
}

Bytes encode_node(const Node& node)
{
    Bytes payload;
    switch (node.kind)
    {
    case NodeKind::Leaf:
        rlp::append_string(payload, hex_prefix_encode(node.path, true));
        rlp::append_string(payload, node.value);
        break;
    case NodeKind::Extension:
        rlp::append_string(payload, hex_prefix_encode(node.path, false));
        append_child_ref(payload, node.children[0]);
        break;
    case NodeKind::Branch:
        payload.reserve(16 * 33 + node.value.size() + 3);
        for (const auto& c : node.children)
            append_child_ref(payload, c);
        rlp::append_string(payload, node.value);
        break;
    case NodeKind::HashStub:
        throw NodeNotResident{node.digest()};
    }
    Bytes out;
    out.reserve(payload.size() + 9);
    rlp::append_list_header(out, payload.size());
    append(out, payload);
    return out;
}

NodePtr decode_node(BytesView encoding)
{
    std::vector<rlp::Item> items;
    try
    {
        items = rlp::members(rlp::decode(encoding));
    }
    catch (const rlp::DecodeError& e)
    {
        throw MalformedNode{e.what()};
    }

    auto node = std::make_shared<Node>();
    if (items.size() == 17)
    {
        node->kind = NodeKind::Branch;
        node->children.resize(16);
        for (size_t i = 0; i < 16; ++i)
            node->children[i] = decode_child(items[i]);
        if (items[16].is_list)
            throw MalformedNode{"branch value must be a string"};
        node->value.assign(items[16].payload.begin(), items[16].payload.end());
        if (node->populated_slots() < 2)
            throw MalformedNode{"branch with fewer than two populated slots"};
    }
    else if (items.size() == 2)
    {
        if (items[0].is_list)
            throw MalformedNode{"path must be a string"};
        NibblePath p;
        try
        {
            p = hex_prefix_decode(items[0].payload);
        }
        catch (const std::invalid_argument& e)
        {
            throw MalformedNode{e.what()};
        }
        node->path = std::move(p.nibbles);
        if (p.leaf)
        {
            node->kind = NodeKind::Leaf;
            if (items[1].is_list || items[1].payload.empty())
                throw MalformedNode{"leaf value must be a non-empty string"};
            node->value.assign(items[1].payload.begin(), items[1].payload.end());
        }
        else
        {
            node->kind = NodeKind::Extension;
            if (node->path.empty())
                throw MalformedNode{"empty extension path"};
            auto child = decode_child(items[1]);
            if (!child)
                throw MalformedNode{"extension without child"};
            if (!child->is_stub() && child->kind != NodeKind::Branch)
                throw MalformedNode{"extension child must be a branch"};
            node->children.push_back(std::move(child));
        }
    }
    else
    {
        throw MalformedNode{"node must have 2 or 17 items"};
    }

    node->ref = NodeRef::of_encoding(encoding);
    node->dirty = false;
    return node;
}

uint64_t node_hash_count() noexcept
{
    return g_hash_count.load(std::memory_order_relaxed);
}

void count_node_hash() noexcept
{
    g_hash_count.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace dmpt
