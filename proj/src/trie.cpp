// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/trie.hpp>

#include <algorithm>

namespace dmpt
{
namespace
{
std::atomic<uint64_t> g_version{0};
std::atomic<uint64_t> g_tree_id{0};

uint64_t next_tree_id() noexcept
{
    return g_tree_id.fetch_add(1, std::memory_order_relaxed) + 1;
}

Nibbles slice(NibbleView p, size_t from)
{
    return Nibbles(p.begin() + static_cast<ptrdiff_t>(from), p.end());
}

Nibbles slice(NibbleView p, size_t from, size_t to)
{
    return Nibbles(p.begin() + static_cast<ptrdiff_t>(from), p.begin() + static_cast<ptrdiff_t>(to));
}

enum class RemoveOutcome
{
    Unchanged,
    Removed,
    Changed,
};

// Dry run of WorkingTree::remove. Throws NodeNotResident if the removal
// would need to collapse a branch onto a child that is only a stub, so that
// the real removal never fails halfway through.
RemoveOutcome precheck_remove(const NodePtr& n, NibbleView path)
{
    if (!n)
        return RemoveOutcome::Unchanged;
    switch (n->kind)
    {
    case NodeKind::HashStub:
        throw NodeNotResident{n->digest()};
    case NodeKind::Leaf:
        return std::ranges::equal(n->path, path) ? RemoveOutcome::Removed : RemoveOutcome::Unchanged;
    case NodeKind::Extension:
        if (!starts_with(path, n->path))
            return RemoveOutcome::Unchanged;
        return precheck_remove(n->children[0], path.subspan(n->path.size()));
    case NodeKind::Branch:
    {
        RemoveOutcome out;
        std::optional<size_t> gone;
        if (path.empty())
        {
            if (n->value.empty())
                return RemoveOutcome::Unchanged;
            out = RemoveOutcome::Removed;
        }
        else
        {
            out = precheck_remove(n->children[path[0]], path.subspan(1));
            if (out != RemoveOutcome::Removed)
                return out;
            gone = path[0];
        }
        if (n->populated_slots() != 2)
            return RemoveOutcome::Changed;
        for (size_t i = 0; i < 16; ++i)
        {
            if (gone && *gone == i)
                continue;
            if (n->children[i] && n->children[i]->is_stub())
                throw NodeNotResident{n->children[i]->digest()};
        }
        return RemoveOutcome::Changed;
    }
    }
    return RemoveOutcome::Unchanged;
}

void collect_stats(const NodePtr& n, size_t depth, TreeStats& s)
{
    if (!n)
        return;
    if (n->is_stub())
    {
        ++s.stubs;
        return;
    }
    s.height = std::max(s.height, depth + 1);
    s.resident_bytes += sizeof(Node) + n->path.capacity() + n->value.capacity() +
                        n->children.capacity() * sizeof(NodePtr);
    switch (n->kind)
    {
    case NodeKind::Branch:
        ++s.branches;
        break;
    case NodeKind::Extension:
        ++s.extensions;
        break;
    default:
        ++s.leaves;
        break;
    }
    for (const auto& c : n->children)
        collect_stats(c, depth + 1, s);
}

void visit(const NodePtr& n, Nibbles& prefix,
    const std::function<void(const Nibbles&, const Bytes&)>& fn)
{
    if (!n)
        return;
    switch (n->kind)
    {
    case NodeKind::HashStub:
        throw NodeNotResident{n->digest()};
    case NodeKind::Leaf:
    {
        const auto full = concat(prefix, n->path);
        fn(full, n->value);
        return;
    }
    case NodeKind::Extension:
    {
        const auto size = prefix.size();
        prefix.insert(prefix.end(), n->path.begin(), n->path.end());
        visit(n->children[0], prefix, fn);
        prefix.resize(size);
        return;
    }
    case NodeKind::Branch:
        if (!n->value.empty())
            fn(prefix, n->value);
        for (uint8_t i = 0; i < 16; ++i)
        {
            prefix.push_back(i);
            visit(n->children[i], prefix, fn);
            prefix.pop_back();
        }
        return;
    }
}

// Sorted keep paths sharing a common prefix of length `offset`.
struct KeepRange
{
    std::span<const Nibbles> paths;
    size_t offset = 0;

    bool empty() const noexcept { return paths.empty(); }

    // Paths that continue with `segment` after the current offset.
    KeepRange follow(NibbleView segment) const
    {
        const auto begin = std::ranges::find_if(paths, [&](const Nibbles& p) {
            return p.size() >= offset + segment.size() &&
                   std::equal(segment.begin(), segment.end(), p.begin() + static_cast<ptrdiff_t>(offset));
        });
        auto end = begin;
        while (end != paths.end() && end->size() >= offset + segment.size() &&
               std::equal(segment.begin(), segment.end(), end->begin() + static_cast<ptrdiff_t>(offset)))
            ++end;
        return {std::span<const Nibbles>{begin, end}, offset + segment.size()};
    }
};

NodePtr prune_node(const NodePtr& n, size_t depth, size_t r, const KeepRange& keep)
{
    if (!n || n->is_stub())
        return n;
    if (n->dirty)
        throw std::logic_error{"prune requires resolved digests"};
    if (depth > r && keep.empty() && n->ref.is_hash())
        return Node::stub(n->digest());
    if (n->kind == NodeKind::Leaf)
        return n;

    NodePtr copy;
    const auto set_child = [&](size_t i, NodePtr c) {
        if (c == n->children[i])
            return;
        if (!copy)
            copy = std::make_shared<Node>(*n);
        copy->children[i] = std::move(c);
    };

    if (n->kind == NodeKind::Extension)
    {
        set_child(0, prune_node(n->children[0], depth + 1, r, keep.follow(n->path)));
    }
    else
    {
        for (uint8_t i = 0; i < 16; ++i)
        {
            if (!n->children[i])
                continue;
            const uint8_t seg[1] = {i};
            set_child(i, prune_node(n->children[i], depth + 1, r, keep.follow(seg)));
        }
    }
    return copy ? copy : n;
}

NodePtr graft_node(const NodePtr& n, NibbleView path, const NodeLookup& lookup,
    std::optional<Digest>& missing, bool siblings)
{
    if (!n)
        return n;
    NodePtr cur = n;
    if (n->is_stub())
    {
        const auto d = n->digest();
        auto resolved = lookup(d);
        if (!resolved || resolved->is_stub() || resolved->digest() != d)
        {
            missing = d;
            return n;
        }
        cur = std::move(resolved);
    }

    NodePtr child;
    size_t slot = 0;
    NibbleView rest;
    if (cur->kind == NodeKind::Extension && starts_with(path, cur->path))
    {
        rest = path.subspan(cur->path.size());
        slot = 0;
    }
    else if (cur->kind == NodeKind::Branch && !path.empty())
    {
        rest = path.subspan(1);
        slot = path[0];
    }
    else
    {
        return cur;
    }
    if (siblings && cur->kind == NodeKind::Branch)
    {
        for (size_t i = 0; i < 16; ++i)
        {
            const auto& c = cur->children[i];
            if (i == slot || !c || !c->is_stub())
                continue;
            auto resolved = lookup(c->digest());
            if (!resolved || resolved->is_stub() || resolved->digest() != c->digest())
                continue;
            if (cur == n)
                cur = std::make_shared<Node>(*n);
            cur->children[i] = std::move(resolved);
        }
    }
    if (!cur->children[slot])
        return cur;
    child = graft_node(cur->children[slot], rest, lookup, missing, siblings);
    if (child == cur->children[slot])
        return cur;
    if (cur == n)
        cur = std::make_shared<Node>(*n);
    cur->children[slot] = std::move(child);
    return cur;
}
}  // namespace

uint64_t next_version() noexcept
{
    return g_version.fetch_add(1, std::memory_order_acq_rel) + 1;
}

std::optional<Bytes> lookup(const NodePtr& root, NibbleView path)
{
    const Node* n = root.get();
    while (n)
    {
        switch (n->kind)
        {
        case NodeKind::HashStub:
            throw NodeNotResident{n->digest()};
        case NodeKind::Leaf:
            if (std::ranges::equal(n->path, path))
                return n->value;
            return std::nullopt;
        case NodeKind::Extension:
            if (!starts_with(path, n->path))
                return std::nullopt;
            path = path.subspan(n->path.size());
            n = n->children[0].get();
            break;
        case NodeKind::Branch:
            if (path.empty())
                return n->value.empty() ? std::nullopt : std::optional<Bytes>{n->value};
            n = n->children[path[0]].get();
            path = path.subspan(1);
            break;
        }
    }
    return std::nullopt;
}

Digest root_digest_of(const NodePtr& root) noexcept
{
    if (!root)
        return empty_trie_digest();
    return root->digest();
}

std::optional<Bytes> Snapshot::get(BytesView key) const
{
    return lookup(root, to_nibbles(key));
}

std::optional<Bytes> Snapshot::get_path(NibbleView path) const
{
    return lookup(root, path);
}

WorkingTree::WorkingTree() : id_{next_tree_id()}, cached_root_digest_{empty_trie_digest()} {}

WorkingTree::WorkingTree(const Snapshot& base)
  : root_{base.root}, id_{next_tree_id()}, cached_root_digest_{base.root_digest}
{}

WorkingTree::WorkingTree(NodePtr root) : root_{std::move(root)}, id_{next_tree_id()} {}

NodePtr WorkingTree::mut(const NodePtr& n)
{
    cached_root_digest_.reset();
    if (n->owner == id_)
    {
        n->dirty = true;
        return n;
    }
    auto c = std::make_shared<Node>(*n);
    c->owner = id_;
    c->dirty = true;
    return c;
}

void WorkingTree::put_path(NibbleView path, BytesView value)
{
    if (value.empty())
        throw std::invalid_argument{"empty value; use erase to delete"};
    if (value.size() > max_value_size)
        throw std::invalid_argument{"value exceeds 1 MiB"};
    root_ = insert(root_, path, value);
    cached_root_digest_.reset();
}

NodePtr WorkingTree::insert(const NodePtr& n, NibbleView path, BytesView value)
{
    if (!n)
        return Node::leaf(Nibbles(path.begin(), path.end()), Bytes(value.begin(), value.end()), id_);

    switch (n->kind)
    {
    case NodeKind::HashStub:
        throw NodeNotResident{n->digest()};

    case NodeKind::Leaf:
    {
        const auto cp = common_prefix(n->path, path);
        if (cp == n->path.size() && cp == path.size())
        {
            auto m = mut(n);
            m->value.assign(value.begin(), value.end());
            return m;
        }
        auto br = Node::branch(id_);
        if (cp == n->path.size())
            br->value = n->value;
        else
            br->children[n->path[cp]] = Node::leaf(slice(n->path, cp + 1), n->value, id_);
        if (cp == path.size())
            br->value.assign(value.begin(), value.end());
        else
            br->children[path[cp]] =
                Node::leaf(slice(path, cp + 1), Bytes(value.begin(), value.end()), id_);
        if (cp > 0)
            return Node::extension(slice(path, 0, cp), std::move(br), id_);
        return br;
    }

    case NodeKind::Extension:
    {
        const auto cp = common_prefix(n->path, path);
        if (cp == n->path.size())
        {
            auto child = insert(n->children[0], path.subspan(cp), value);
            auto m = mut(n);
            m->children[0] = std::move(child);
            return m;
        }
        auto br = Node::branch(id_);
        if (cp + 1 == n->path.size())
            br->children[n->path[cp]] = n->children[0];
        else
            br->children[n->path[cp]] = Node::extension(slice(n->path, cp + 1), n->children[0], id_);
        if (cp == path.size())
            br->value.assign(value.begin(), value.end());
        else
            br->children[path[cp]] =
                Node::leaf(slice(path, cp + 1), Bytes(value.begin(), value.end()), id_);
        if (cp > 0)
            return Node::extension(slice(path, 0, cp), std::move(br), id_);
        return br;
    }

    case NodeKind::Branch:
    {
        if (path.empty())
        {
            auto m = mut(n);
            m->value.assign(value.begin(), value.end());
            return m;
        }
        auto child = insert(n->children[path[0]], path.subspan(1), value);
        auto m = mut(n);
        m->children[path[0]] = std::move(child);
        return m;
    }
    }
    return n;
}

void WorkingTree::erase_path(NibbleView path)
{
    if (precheck_remove(root_, path) == RemoveOutcome::Unchanged)
        return;
    root_ = remove(root_, path);
    cached_root_digest_.reset();
}

NodePtr WorkingTree::remove(const NodePtr& n, NibbleView path)
{
    if (!n)
        return n;
    switch (n->kind)
    {
    case NodeKind::HashStub:
        throw NodeNotResident{n->digest()};
    case NodeKind::Leaf:
        return std::ranges::equal(n->path, path) ? nullptr : n;
    case NodeKind::Extension:
    {
        if (!starts_with(path, n->path))
            return n;
        // The key is present (checked by precheck_remove), so the child
        // changed even when it was mutated in place.
        return join(n, remove(n->children[0], path.subspan(n->path.size())));
    }
    case NodeKind::Branch:
    {
        if (path.empty())
        {
            if (n->value.empty())
                return n;
            auto m = mut(n);
            m->value.clear();
            return collapse(m);
        }
        const auto& old = n->children[path[0]];
        if (!old)
            return n;
        auto child = remove(old, path.subspan(1));
        auto m = mut(n);
        m->children[path[0]] = std::move(child);
        return collapse(m);
    }
    }
    return n;
}

NodePtr WorkingTree::join(const NodePtr& ext, NodePtr child)
{
    if (!child)
        return nullptr;
    switch (child->kind)
    {
    case NodeKind::Leaf:
        return Node::leaf(concat(ext->path, child->path), child->value, id_);
    case NodeKind::Extension:
        return Node::extension(concat(ext->path, child->path), child->children[0], id_);
    default:
    {
        auto m = mut(ext);
        m->children[0] = std::move(child);
        return m;
    }
    }
}

NodePtr WorkingTree::collapse(const NodePtr& br)
{
    const auto populated = br->populated_slots();
    if (populated >= 2)
        return br;
    if (populated == 0)
        return nullptr;
    if (!br->value.empty())
        return Node::leaf({}, br->value, id_);

    const auto it = std::ranges::find_if(br->children, [](const NodePtr& c) { return c != nullptr; });
    const auto slot = static_cast<uint8_t>(it - br->children.begin());
    const auto& c = *it;
    switch (c->kind)
    {
    case NodeKind::Leaf:
        return Node::leaf(concat(Nibbles{slot}, c->path), c->value, id_);
    case NodeKind::Extension:
        return Node::extension(concat(Nibbles{slot}, c->path), c->children[0], id_);
    case NodeKind::Branch:
        return Node::extension(Nibbles{slot}, c, id_);
    case NodeKind::HashStub:
        break;
    }
    throw NodeNotResident{c->digest()};
}

void WorkingTree::hash_node(Node& n)
{
    if (!n.dirty)
        return;
    for (const auto& c : n.children)
        if (c && c->dirty)
            hash_node(*c);
    const auto enc = encode_node(n);
    n.ref = NodeRef::of_encoding(enc);
    n.dirty = false;
    ++hashes_;
    count_node_hash();
}

Digest WorkingTree::root_digest()
{
    if (cached_root_digest_)
        return *cached_root_digest_;
    Digest d = empty_trie_digest();
    if (root_)
    {
        if (root_->is_stub())
            d = root_->digest();
        else
        {
            hash_node(*root_);
            d = root_->digest();
        }
    }
    cached_root_digest_ = d;
    return d;
}

Snapshot WorkingTree::commit()
{
    Snapshot s{root_, root_digest(), next_version()};
    id_ = next_tree_id();
    return s;
}

GraftResult graft(const NodePtr& root, NibbleView path, const NodeLookup& lookup, bool siblings)
{
    GraftResult out;
    out.root = graft_node(root, path, lookup, out.missing, siblings);
    return out;
}

NodePtr prune(const NodePtr& root, size_t r, std::span<const Nibbles> keep)
{
    std::vector<Nibbles> sorted(keep.begin(), keep.end());
    std::ranges::sort(sorted);
    return prune_node(root, 0, r, KeepRange{sorted, 0});
}

TreeStats tree_stats(const NodePtr& root)
{
    TreeStats s;
    collect_stats(root, 0, s);
    return s;
}

void for_each_leaf(const NodePtr& root,
    const std::function<void(const Nibbles&, const Bytes&)>& fn)
{
    Nibbles prefix;
    visit(root, prefix, fn);
}

}  // namespace dmpt
