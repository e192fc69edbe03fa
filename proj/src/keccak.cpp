// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/keccak.hpp>

#include <bit>

namespace dmpt
{
namespace
{
constexpr uint64_t round_constants[24] = {
    0x0000000000000001, 0x0000000000008082, 0x800000000000808a, 0x8000000080008000,
    0x000000000000808b, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008a, 0x0000000000000088, 0x0000000080008009, 0x000000008000000a,
    0x000000008000808b, 0x800000000000008b, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800a, 0x800000008000000a,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
};

// Rotation offsets and lane permutation for the combined rho+pi step.
constexpr int rho[24] = {1, 3, 6, 10, 15, 21, 28, 36, 45, 55, 2, 14,
                         27, 41, 56, 8, 25, 43, 62, 18, 39, 61, 20, 44};
constexpr int pi[24] = {10, 7, 11, 17, 18, 3, 5, 16, 8, 21, 24, 4,
                        15, 23, 19, 13, 12, 2, 20, 14, 22, 9, 6, 1};

void keccakf(uint64_t st[25]) noexcept
{
    for (const auto rc : round_constants)
    {
        uint64_t bc[5];
        for (int i = 0; i < 5; ++i)
            bc[i] = st[i] ^ st[i + 5] ^ st[i + 10] ^ st[i + 15] ^ st[i + 20];
        for (int i = 0; i < 5; ++i)
        {
            const uint64_t t = bc[(i + 4) % 5] ^ std::rotl(bc[(i + 1) % 5], 1);
            for (int j = 0; j < 25; j += 5)
                st[j + i] ^= t;
        }

        uint64_t t = st[1];
        for (int i = 0; i < 24; ++i)
        {
            const int j = pi[i];
            const uint64_t tmp = st[j];
            st[j] = std::rotl(t, rho[i]);
            t = tmp;
        }

        for (int j = 0; j < 25; j += 5)
        {
            for (int i = 0; i < 5; ++i)
                bc[i] = st[j + i];
            for (int i = 0; i < 5; ++i)
                st[j + i] ^= (~bc[(i + 1) % 5]) & bc[(i + 2) % 5];
        }

        st[0] ^= rc;
    }
}

inline uint64_t load_le64(const uint8_t* p) noexcept
{
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i)
        v = (v << 8) | p[i];
    return v;
}
}  // namespace

Digest keccak_sponge256(BytesView data, uint8_t domain) noexcept
{
    constexpr size_t rate = 136;
    uint64_t st[25] = {};

    const uint8_t* p = data.data();
    size_t len = data.size();
    while (len >= rate)
    {
        for (size_t i = 0; i < rate / 8; ++i)
            st[i] ^= load_le64(p + 8 * i);
        keccakf(st);
        p += rate;
        len -= rate;
    }

    uint8_t block[rate] = {};
    std::memcpy(block, p, len);
    block[len] ^= domain;
    block[rate - 1] ^= 0x80;
    for (size_t i = 0; i < rate / 8; ++i)
        st[i] ^= load_le64(block + 8 * i);
    keccakf(st);

    Digest out;
    for (size_t i = 0; i < 32; ++i)
        out.bytes[i] = static_cast<uint8_t>(st[i / 8] >> (8 * (i % 8)));
    return out;
}

const Digest& empty_trie_digest() noexcept
{
    static const Digest d = [] {
        const uint8_t empty_string = 0x80;
        return keccak256(BytesView{&empty_string, 1});
    }();
    return d;
}

}  // namespace dmpt
