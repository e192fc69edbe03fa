// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/witness.hpp>

#include <algorithm>

namespace dmpt
{
namespace
{
struct Step
{
    const Node* next = nullptr;  // child to continue with, null when the walk ends
    NibbleView rest;
    std::optional<Bytes> value;  // set when the walk ends on a stored value
};

// Advances one node along `path`.
Step step(const Node& n, NibbleView path)
{
    Step s;
    switch (n.kind)
    {
    case NodeKind::Leaf:
        if (std::ranges::equal(n.path, path))
            s.value = n.value;
        return s;
    case NodeKind::Extension:
        if (starts_with(path, n.path))
        {
            s.next = n.children[0].get();
            s.rest = path.subspan(n.path.size());
        }
        return s;
    case NodeKind::Branch:
        if (path.empty())
        {
            if (!n.value.empty())
                s.value = n.value;
            return s;
        }
        s.next = n.children[path[0]].get();
        s.rest = path.subspan(1);
        return s;
    case NodeKind::HashStub:
        break;
    }
    throw NodeNotResident{n.digest()};
}
}  // namespace

size_t Witness::byte_size() const noexcept
{
    size_t n = 0;
    for (const auto& e : nodes)
        n += e.size();
    return n;
}

size_t CompactWitness::byte_size() const noexcept
{
    size_t n = 32;
    for (const auto& e : nodes)
        n += e.size();
    return n;
}

const char* to_string(VerifyStatus s) noexcept
{
    switch (s)
    {
    case VerifyStatus::Accepted:
        return "accepted";
    case VerifyStatus::Malformed:
        return "malformed";
    case VerifyStatus::BrokenLink:
        return "broken-link";
    case VerifyStatus::RootMismatch:
        return "root-mismatch";
    case VerifyStatus::ValueMismatch:
        return "value-mismatch";
    }
    return "?";
}

WitnessResult create_witness(const NodePtr& root, NibbleView path)
{
    WitnessResult out;
    out.witness.path.assign(path.begin(), path.end());
    const Node* n = root.get();
    if (!n)
        return out;
    if (n->is_stub())
        throw NodeNotResident{n->digest()};
    out.witness.nodes.push_back(encode_node(*n));
    while (n)
    {
        auto s = step(*n, path);
        if (!s.next)
        {
            out.value = std::move(s.value);
            break;
        }
        n = s.next;
        path = s.rest;
        if (n->is_stub())
            throw NodeNotResident{n->digest()};
        if (n->ref.is_hash())
            out.witness.nodes.push_back(encode_node(*n));
    }
    return out;
}

VerifyStatus verify_witness(NibbleView path, const std::optional<Bytes>& value,
    const Witness& witness, const Digest& root)
{
    const auto& entries = witness.nodes;
    if (entries.empty())
    {
        if (root != empty_trie_digest())
            return VerifyStatus::RootMismatch;
        return value ? VerifyStatus::ValueMismatch : VerifyStatus::Accepted;
    }
    if (keccak256(entries[0]) != root)
        return VerifyStatus::RootMismatch;

    size_t idx = 0;
    std::optional<Bytes> proven;
    try
    {
        NodePtr holder = decode_node(entries[0]);
        const Node* n = holder.get();
        while (true)
        {
            auto s = step(*n, path);
            if (!s.next)
            {
                proven = std::move(s.value);
                break;
            }
            path = s.rest;
            if (!s.next->is_stub())
            {
                n = s.next;
                continue;
            }
            if (++idx >= entries.size())
                return VerifyStatus::BrokenLink;
            // Hashed before decoding: a tampered entry never reaches the parser.
            if (keccak256(entries[idx]) != s.next->digest())
                return VerifyStatus::BrokenLink;
            holder = decode_node(entries[idx]);
            n = holder.get();
        }
    }
    catch (const MalformedNode&)
    {
        return VerifyStatus::Malformed;
    }
    if (idx + 1 != entries.size())
        return VerifyStatus::Malformed;
    if (proven != value)
        return VerifyStatus::ValueMismatch;
    return VerifyStatus::Accepted;
}

CompactWitness compact(const Witness& w, size_t r)
{
    CompactWitness cw;
    cw.path = w.path;
    cw.root = w.nodes.empty() ? empty_trie_digest() : keccak256(w.nodes.front());
    cw.anchor = cw.root;
    if (w.nodes.empty())
        return cw;
    const size_t first = r + 1;
    if (first >= w.nodes.size())
    {
        cw.anchor = keccak256(w.nodes.back());
        return cw;
    }
    cw.nodes.assign(w.nodes.begin() + static_cast<ptrdiff_t>(first), w.nodes.end());
    cw.anchor = keccak256(cw.nodes.front());
    return cw;
}

std::optional<Witness> expand(const CompactWitness& cw, const NodePtr& cached_root)
{
    if (root_digest_of(cached_root) != cw.root)
        return std::nullopt;
    NodeBag b{cw.root};
    for (const auto& e : cw.nodes)
        b.add(e);
    auto r = extract(b, cw.path, cached_root);
    if (!r)
        return std::nullopt;
    return std::move(r->witness);
}

bool NodeBag::add(BytesView encoding)
{
    return add(keccak256(encoding), Bytes(encoding.begin(), encoding.end()));
}

bool NodeBag::add(const Digest& d, Bytes encoding)
{
    const auto size = encoding.size();
    const auto [it, inserted] = nodes_.try_emplace(d, std::move(encoding));
    if (inserted)
        node_bytes_ += size;
    return inserted;
}

const Bytes* NodeBag::find(const Digest& d) const
{
    const auto it = nodes_.find(d);
    return it == nodes_.end() ? nullptr : &it->second;
}

void NodeBag::merge(const NodeBag& other)
{
    if (other.root_ != root_)
        throw MixedRoots{"bags over different roots"};
    for (const auto& [d, enc] : other.nodes_)
        add(d, enc);
    covered_.insert(covered_.end(), other.covered_.begin(), other.covered_.end());
}

NodeLookup NodeBag::lookup() const
{
    return [this](const Digest& d) -> NodePtr {
        const auto* enc = find(d);
        if (!enc)
            return nullptr;
        try
        {
            return decode_node(*enc);
        }
        catch (const MalformedNode&)
        {
            return nullptr;
        }
    };
}

NodeBag bag(std::span<const Witness> witnesses)
{
    NodeBag b{witnesses.empty() || witnesses[0].nodes.empty() ? empty_trie_digest()
                                                              : keccak256(witnesses[0].nodes[0])};
    for (const auto& w : witnesses)
    {
        const auto root = w.nodes.empty() ? empty_trie_digest() : keccak256(w.nodes[0]);
        if (root != b.root())
            throw MixedRoots{"witnesses anchored to different roots"};
        for (const auto& e : w.nodes)
            b.add(e);
        b.cover(w.path);
    }
    return b;
}

NodeBag bag(std::span<const CompactWitness> witnesses)
{
    NodeBag b{witnesses.empty() ? empty_trie_digest() : witnesses[0].root};
    for (const auto& w : witnesses)
    {
        if (w.root != b.root())
            throw MixedRoots{"witnesses anchored to different roots"};
        for (const auto& e : w.nodes)
            b.add(e);
        b.cover(w.path);
    }
    return b;
}

std::optional<WitnessResult> extract(const NodeBag& bag, NibbleView path, const NodePtr& top)
{
    if (!top)
    {
        if (bag.root() != empty_trie_digest())
            return std::nullopt;
        return create_witness(top, path);
    }
    auto g = graft(top, path, bag.lookup());
    if (g.missing)
        return std::nullopt;
    return create_witness(g.root, path);
}

std::variant<Revised, Incomplete> revise(const NodeBag& bag, const NodePtr& cache_root, NibbleView path)
{
    auto g = graft(cache_root, path, bag.lookup());
    if (g.missing)
        return Incomplete{*g.missing};
    Revised out;
    out.value = lookup(g.root, path);
    out.root = std::move(g.root);
    return out;
}

}  // namespace dmpt
