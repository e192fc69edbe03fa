// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/layout.hpp>

namespace dmpt
{
/// Block header as seen by the storage layer. The block id is the digest of
/// the canonical encoding. There is no proof of work; validity is structural
/// (well-formed encoding, parent linkage, consistent shard roots).
struct BlockHeader
{
    uint64_t number = 0;
    Digest parent{};  ///< all zeros for the first block
    uint64_t timestamp = 0;
    Digest state_root = empty_trie_digest();
    ShardRoots shard_roots = empty_shard_roots();

    static ShardRoots empty_shard_roots()
    {
        ShardRoots r;
        r.fill(empty_trie_digest());
        return r;
    }

    Bytes encode() const;
    /// Strict decode; throws rlp::DecodeError on any deviation.
    static BlockHeader decode(BytesView in);
    Digest id() const { return keccak256(encode()); }
};

/// Parent id of the first block.
inline Digest null_block_id() noexcept
{
    return Digest{};
}

}  // namespace dmpt
