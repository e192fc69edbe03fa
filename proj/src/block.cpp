// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/block.hpp>
#include <dmpt/rlp.hpp>

namespace dmpt
{
Bytes BlockHeader::encode() const
{
    rlp::ListBuilder roots;
    for (const auto& r : shard_roots)
        roots.string(r.view());
    return rlp::ListBuilder{}
        .uint(number)
        .string(parent.view())
        .uint(timestamp)
        .string(state_root.view())
        .list(roots)
        .finish();
}

BlockHeader BlockHeader::decode(BytesView in)
{
    const auto f = rlp::decode_list(in, 5);
    const auto digest = [](const rlp::Item& i) {
        if (i.is_list || i.payload.size() != 32)
            throw rlp::DecodeError{"expected 32-byte digest"};
        return Digest::from_view(i.payload);
    };
    BlockHeader h;
    h.number = rlp::to_uint(f[0]);
    h.parent = digest(f[1]);
    h.timestamp = rlp::to_uint(f[2]);
    h.state_root = digest(f[3]);
    const auto roots = rlp::decode_list(f[4].raw, shard_count);
    for (size_t i = 0; i < shard_count; ++i)
        h.shard_roots[i] = digest(roots[i]);
    return h;
}

}  // namespace dmpt
