// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/bytes.hpp>

#include <algorithm>
#include <compare>
#include <cstring>
#include <functional>

namespace dmpt
{
/// 32-byte Keccak-256 value. Node identity and root commitment.
struct Digest
{
    std::array<uint8_t, 32> bytes{};

    static Digest from_view(BytesView b)
    {
        if (b.size() != 32)
            throw std::invalid_argument{"digest must be 32 bytes"};
        Digest d;
        std::copy(b.begin(), b.end(), d.bytes.begin());
        return d;
    }

    static Digest from_hex(std::string_view s) { return from_view(dmpt::from_hex(s)); }

    BytesView view() const noexcept { return bytes; }
    std::string hex() const { return dmpt::hex(bytes); }

    friend bool operator==(const Digest&, const Digest&) = default;
    friend auto operator<=>(const Digest&, const Digest&) = default;
};

struct DigestHash
{
    size_t operator()(const Digest& d) const noexcept
    {
        size_t h;
        std::memcpy(&h, d.bytes.data(), sizeof(h));
        return h;
    }
};

/// Keccak-f[1600] sponge with rate 136 bytes. `domain` selects the padding
/// suffix: 0x01 for the original Keccak used by Ethereum, 0x06 for FIPS-202
/// SHA3-256.
Digest keccak_sponge256(BytesView data, uint8_t domain) noexcept;

inline Digest keccak256(BytesView data) noexcept
{
    return keccak_sponge256(data, 0x01);
}

inline Digest keccak256(std::string_view s) noexcept
{
    return keccak256(as_view(s));
}

/// keccak256 of the RLP encoding of the empty string.
const Digest& empty_trie_digest() noexcept;

}  // namespace dmpt
