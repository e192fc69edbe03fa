// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/keccak.hpp>
#include <dmpt/nibbles.hpp>

#include <atomic>
#include <memory>

namespace dmpt
{
enum class NodeKind : uint8_t
{
    Branch,
    Extension,
    Leaf,
    HashStub,
};

const char* to_string(NodeKind kind) noexcept;

/// What a parent stores for a child: the child's digest, or the child's full
/// encoding when that encoding is shorter than 32 bytes.
struct NodeRef
{
    std::array<uint8_t, 32> data{};
    uint8_t size = 0;

    static NodeRef of_encoding(BytesView encoding);
    static NodeRef of_digest(const Digest& d) noexcept
    {
        NodeRef r;
        r.data = d.bytes;
        r.size = 32;
        return r;
    }

    bool is_hash() const noexcept { return size == 32; }
    BytesView view() const noexcept { return {data.data(), size}; }

    /// Digest of the referenced node (hashes the inline encoding if needed).
    Digest digest() const noexcept;
};

class Node;
using NodePtr = std::shared_ptr<Node>;

/// Thrown when navigation reaches a hash stub whose node is not in memory.
struct NodeNotResident : std::runtime_error
{
    explicit NodeNotResident(const Digest& d)
      : std::runtime_error{"node not resident: " + d.hex()}, digest{d}
    {}
    Digest digest;
};

/// Node of the modified Merkle Patricia Tree. Children are direct pointers;
/// `ref` memoizes the node's reference and is valid only while `dirty` is
/// false. Nodes reachable from a published snapshot are never mutated.
class Node
{
public:
    NodeKind kind = NodeKind::Leaf;
    Nibbles path;                   ///< Extension and Leaf
    Bytes value;                    ///< Leaf; Branch (empty means none)
    std::vector<NodePtr> children;  ///< 16 slots for Branch, 1 for Extension
    NodeRef ref;
    bool dirty = true;
    uint64_t owner = 0;  ///< id of the working tree allowed to mutate in place

    static NodePtr leaf(Nibbles path, Bytes value, uint64_t owner = 0);
    static NodePtr extension(Nibbles path, NodePtr child, uint64_t owner = 0);
    static NodePtr branch(uint64_t owner = 0);
    static NodePtr stub(const Digest& d);

    bool is_stub() const noexcept { return kind == NodeKind::HashStub; }

    const NodePtr& child(size_t i) const noexcept { return children[i]; }

    size_t populated_slots() const noexcept;

    /// Digest of this node's canonical encoding. Requires a clean node.
    Digest digest() const noexcept { return ref.digest(); }
};

/// Canonical encoding of a node whose children are all clean.
Bytes encode_node(const Node& node);

struct MalformedNode : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Decodes a canonical encoding. Hash-referenced children become stubs and
/// inline children are decoded in place. The returned node is clean.
NodePtr decode_node(BytesView encoding);

/// Process-wide count of node serialize-and-hash operations.
uint64_t node_hash_count() noexcept;
void count_node_hash() noexcept;

}  // namespace dmpt
