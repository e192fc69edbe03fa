// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/trie.hpp>

namespace dmpt
{
/// Vertical sharding of a tree over 32-byte hashed keys. Shard i owns every
/// key whose first nibble is i and stores a shard-local tree over the
/// remaining 63 nibbles. That local tree is exactly the global root's child
/// for nibble i, so every hash-referenced node below the root is shared
/// byte-for-byte between a shard and the global tree.
inline constexpr size_t shard_count = 16;
inline constexpr size_t key_size = 32;

using ShardRoots = std::array<Digest, shard_count>;

struct BadKey : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

/// Throws BadKey unless the key is 32 bytes.
void check_key(BytesView key);

inline uint8_t shard_of(BytesView key)
{
    check_key(key);
    return key[0] >> 4;
}

/// Key path inside its shard (first nibble removed).
Nibbles local_path(BytesView key);

/// Shard-local root of shard `i` inside the global tree, or nullptr when the
/// shard is empty. The result is clean; it may be a stub. Throws
/// NodeNotResident if the global root itself is a stub.
NodePtr shard_root(const NodePtr& global, uint8_t i);

/// Digest of shard `i`'s local tree (the empty-trie digest when empty).
Digest shard_digest(const NodePtr& global, uint8_t i);

ShardRoots shard_digests(const NodePtr& global);

/// Global root built from shard-local roots (entries may be null or stubs).
/// With a single non-empty shard the global root absorbs that shard's root
/// node, which must then be resident. The result is clean.
NodePtr join_shards(const std::array<NodePtr, shard_count>& roots);

/// Global root recomputed from shard digests alone. Returns nullopt when
/// exactly one shard is non-empty, since the root then depends on the shard
/// root's content and not only its digest.
std::optional<NodePtr> join_digests(const ShardRoots& roots);

}  // namespace dmpt
