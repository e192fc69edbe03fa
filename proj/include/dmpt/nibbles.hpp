// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/bytes.hpp>

namespace dmpt
{
/// Sequence of 4-bit values, one per element.
using Nibbles = std::vector<uint8_t>;
using NibbleView = std::span<const uint8_t>;

Nibbles to_nibbles(BytesView key);

/// Packs an even-length nibble sequence back into bytes.
Bytes from_nibbles(NibbleView nibbles);

size_t common_prefix(NibbleView a, NibbleView b) noexcept;

inline bool starts_with(NibbleView path, NibbleView prefix) noexcept
{
    return prefix.size() <= path.size() && common_prefix(path, prefix) == prefix.size();
}

inline Nibbles concat(NibbleView a, NibbleView b)
{
    Nibbles out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

/// Path segment of an extension or leaf node with its terminator flag.
struct NibblePath
{
    Nibbles nibbles;
    bool leaf = false;

    friend bool operator==(const NibblePath&, const NibblePath&) = default;
};

/// Compact hex-prefix packing: flag nibble (2 = leaf, 1 = odd length),
/// padded so that the result is a whole number of bytes.
Bytes hex_prefix_encode(NibbleView nibbles, bool leaf);

/// Strict inverse of hex_prefix_encode; throws std::invalid_argument on
/// unknown flags or non-zero padding.
NibblePath hex_prefix_decode(BytesView packed);

}  // namespace dmpt
