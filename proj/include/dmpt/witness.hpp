// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/trie.hpp>

#include <unordered_map>
#include <variant>

namespace dmpt
{
/// Ordered proof path from the root to the node where the lookup for `path`
/// terminates. Each entry is the canonical encoding of a hash-referenced
/// node; inline children travel inside their parent's entry. For an absent
/// key the last entry is the node where the path diverges.
struct Witness
{
    Nibbles path;
    std::vector<Bytes> nodes;

    size_t byte_size() const noexcept;
};

/// Suffix of a witness starting at depth r + 1. `anchor` is the digest of the
/// first included node (the last node when nothing is included).
struct CompactWitness
{
    Nibbles path;
    Digest root;
    Digest anchor;
    std::vector<Bytes> nodes;

    size_t byte_size() const noexcept;
};

struct WitnessResult
{
    std::optional<Bytes> value;
    Witness witness;
};

/// Builds the proof for `path` from a resident tree with resolved digests.
/// Throws NodeNotResident if a stub lies on the path.
WitnessResult create_witness(const NodePtr& root, NibbleView path);

inline WitnessResult create_witness(const Snapshot& s, BytesView key)
{
    return create_witness(s.root, to_nibbles(key));
}

enum class VerifyStatus
{
    Accepted,
    Malformed,
    BrokenLink,
    RootMismatch,
    ValueMismatch,
};

const char* to_string(VerifyStatus s) noexcept;

/// Checks that `witness` proves `path` -> `value` (nullopt: absent) under
/// `root`. Pure; never touches any store.
VerifyStatus verify_witness(NibbleView path, const std::optional<Bytes>& value,
    const Witness& witness, const Digest& root);

/// Drops the entries at depth <= r.
CompactWitness compact(const Witness& w, size_t r);

/// Rebuilds a full witness from a compact one and a cache holding the top of
/// the same tree. Returns nullopt if the cache cannot bridge to the anchor.
std::optional<Witness> expand(const CompactWitness& cw, const NodePtr& cached_root);

/// Deduplicated set of node encodings keyed by digest, all hanging from one
/// root. Order is irrelevant; paths are recovered by traversal.
class NodeBag
{
public:
    NodeBag() = default;
    explicit NodeBag(const Digest& root) : root_{root} {}

    const Digest& root() const noexcept { return root_; }

    /// Adds an encoding; returns false if an identical node was present.
    bool add(BytesView encoding);
    bool add(const Digest& d, Bytes encoding);

    const Bytes* find(const Digest& d) const;
    bool contains(const Digest& d) const { return nodes_.contains(d); }

    size_t size() const noexcept { return nodes_.size(); }
    size_t node_bytes() const noexcept { return node_bytes_; }
    size_t byte_size() const noexcept { return node_bytes_ + 32; }

    /// Paths the bag was assembled for.
    const std::vector<Nibbles>& covered() const noexcept { return covered_; }
    void cover(Nibbles path) { covered_.push_back(std::move(path)); }

    /// Merges another bag over the same root.
    void merge(const NodeBag& other);

    const std::unordered_map<Digest, Bytes, DigestHash>& nodes() const noexcept { return nodes_; }

    /// Lookup decoding bag entries on demand.
    NodeLookup lookup() const;

private:
    Digest root_ = empty_trie_digest();
    std::unordered_map<Digest, Bytes, DigestHash> nodes_;
    std::vector<Nibbles> covered_;
    size_t node_bytes_ = 0;
};

struct MixedRoots : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

/// Unions the node sets of witnesses over one root. Throws MixedRoots.
NodeBag bag(std::span<const Witness> witnesses);
NodeBag bag(std::span<const CompactWitness> witnesses);

/// Rebuilds the witness for `path` from a bag, using `top` (a possibly
/// partial tree with the bag's root digest) for nodes the bag omits. Returns
/// nullopt when a node is missing.
std::optional<WitnessResult> extract(const NodeBag& bag, NibbleView path, const NodePtr& top);

inline std::optional<WitnessResult> extract(const NodeBag& bag, NibbleView path)
{
    return extract(bag, path, Node::stub(bag.root()));
}

struct Revised
{
    NodePtr root;  ///< cache tree with the bag nodes used grafted in
    std::optional<Bytes> value;
};

struct Incomplete
{
    Digest missing;
};

/// Walks from the cache's current root; resident nodes win over bag entries,
/// and stubs are resolved from the bag by digest.
std::variant<Revised, Incomplete> revise(const NodeBag& bag, const NodePtr& cache_root, NibbleView path);

}  // namespace dmpt
