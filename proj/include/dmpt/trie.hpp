// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/node.hpp>

#include <functional>
#include <optional>

namespace dmpt
{
/// Largest value accepted by put.
inline constexpr size_t max_value_size = 1 << 20;

/// Immutable committed tree version.
struct Snapshot
{
    NodePtr root;
    Digest root_digest = empty_trie_digest();
    uint64_t version = 0;

    std::optional<Bytes> get(BytesView key) const;
    std::optional<Bytes> get_path(NibbleView path) const;
};

/// Allocates the next snapshot version; safe under concurrent committers.
uint64_t next_version() noexcept;

/// Value stored under `path`, or nullopt. Throws NodeNotResident when a hash
/// stub lies on the path.
std::optional<Bytes> lookup(const NodePtr& root, NibbleView path);

/// Digest of a tree whose nodes are all clean.
Digest root_digest_of(const NodePtr& root) noexcept;

/// Private, uncommitted copy of a tree. Writes copy the path from the
/// modified leaf to the root and mark it dirty; no hashing happens until
/// root_digest() or commit(). Single-owner: not safe for concurrent use.
class WorkingTree
{
public:
    WorkingTree();
    explicit WorkingTree(const Snapshot& base);
    explicit WorkingTree(NodePtr root);

    WorkingTree(const WorkingTree&) = delete;
    WorkingTree& operator=(const WorkingTree&) = delete;
    WorkingTree(WorkingTree&&) noexcept = default;
    WorkingTree& operator=(WorkingTree&&) noexcept = default;

    void put(BytesView key, BytesView value) { put_path(to_nibbles(key), value); }
    void put_path(NibbleView path, BytesView value);

    void erase(BytesView key) { erase_path(to_nibbles(key)); }
    void erase_path(NibbleView path);

    std::optional<Bytes> get(BytesView key) const { return lookup(root_, to_nibbles(key)); }
    std::optional<Bytes> get_path(NibbleView path) const { return lookup(root_, path); }

    /// Re-hashes dirty nodes bottom-up, each once, and returns the root digest.
    Digest root_digest();

    /// Computes the root digest and publishes the current tree. The tree stays
    /// usable; later writes copy rather than mutate published nodes.
    Snapshot commit();

    const NodePtr& root() const noexcept { return root_; }

    /// Replaces the root with a digest-equivalent tree (for example one with
    /// more stubs resolved).
    void replace_root(NodePtr root) { root_ = std::move(root); }

    /// Dirty nodes re-serialized by this tree so far.
    uint64_t hash_count() const noexcept { return hashes_; }

private:
    NodePtr mut(const NodePtr& n);
    NodePtr insert(const NodePtr& n, NibbleView path, BytesView value);
    NodePtr remove(const NodePtr& n, NibbleView path);
    NodePtr collapse(const NodePtr& branch);
    NodePtr join(const NodePtr& ext, NodePtr child);
    void hash_node(Node& n);

    NodePtr root_;
    uint64_t id_;
    uint64_t hashes_ = 0;
    std::optional<Digest> cached_root_digest_;
};

/// Maps a digest to a resident node, or nullptr when unknown.
using NodeLookup = std::function<NodePtr(const Digest&)>;

struct GraftResult
{
    NodePtr root;
    std::optional<Digest> missing;  ///< first stub on the path lookup could not resolve
};

/// Replaces hash stubs along `path` with nodes from `lookup`, copying the
/// ancestors of every replaced stub. Nodes already resident take precedence.
/// With `siblings`, stub children of branches on the path are also resolved
/// when `lookup` knows them (deletes may collapse onto a sibling).
GraftResult graft(const NodePtr& root, NibbleView path, const NodeLookup& lookup, bool siblings = false);

/// Keeps nodes at depth <= r (root is depth 0) and nodes on any `keep` path;
/// every other hash-referenced node is replaced by a stub. Digest-preserving.
NodePtr prune(const NodePtr& root, size_t r, std::span<const Nibbles> keep = {});

inline Snapshot prune(const Snapshot& s, size_t r, std::span<const Nibbles> keep = {})
{
    return Snapshot{prune(s.root, r, keep), s.root_digest, s.version};
}

struct TreeStats
{
    size_t branches = 0;
    size_t extensions = 0;
    size_t leaves = 0;
    size_t stubs = 0;
    size_t height = 0;          ///< levels of resident nodes; 0 for an empty tree
    size_t resident_bytes = 0;  ///< approximate heap footprint of resident nodes

    size_t resident_nodes() const noexcept { return branches + extensions + leaves; }
};

TreeStats tree_stats(const NodePtr& root);

/// Calls `fn(path, value)` for every stored pair in key order. Throws
/// NodeNotResident on stubs.
void for_each_leaf(const NodePtr& root,
    const std::function<void(const Nibbles&, const Bytes&)>& fn);

}  // namespace dmpt
