// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/nibbles.hpp>

namespace dmpt
{
Nibbles to_nibbles(BytesView key)
{
    Nibbles out(key.size() * 2);
    for (size_t i = 0; i < key.size(); ++i)
    {
        out[2 * i] = key[i] >> 4;
        out[2 * i + 1] = key[i] & 0x0f;
    }
    return out;
}

Bytes from_nibbles(NibbleView nibbles)
{
    if (nibbles.size() % 2 != 0)
        throw std::invalid_argument{"odd nibble count"};
    Bytes out(nibbles.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>(nibbles[2 * i] << 4 | nibbles[2 * i + 1]);
    return out;
}

size_t common_prefix(NibbleView a, NibbleView b) noexcept
{
    const size_t n = std::min(a.size(), b.size());
    size_t i = 0;
    while (i < n && a[i] == b[i])
        ++i;
    return i;
}

Bytes hex_prefix_encode(NibbleView nibbles, bool leaf)
{
    const bool odd = nibbles.size() % 2 != 0;
    Bytes out;
    out.reserve(nibbles.size() / 2 + 1);
    const uint8_t flag = static_cast<uint8_t>((leaf ? 2 : 0) + (odd ? 1 : 0));
    size_t i = 0;
    if (odd)
        out.push_back(static_cast<uint8_t>(flag << 4 | nibbles[i++]));
    else
        out.push_back(static_cast<uint8_t>(flag << 4));
    for (; i < nibbles.size(); i += 2)
        out.push_back(static_cast<uint8_t>(nibbles[i] << 4 | nibbles[i + 1]));
    return out;
}

NibblePath hex_prefix_decode(BytesView packed)
{
    if (packed.empty())
        throw std::invalid_argument{"empty hex-prefix encoding"};
    const uint8_t flag = packed[0] >> 4;
    if (flag > 3)
        throw std::invalid_argument{"invalid hex-prefix flag"};
    NibblePath out;
    out.leaf = (flag & 2) != 0;
    const bool odd = (flag & 1) != 0;
    out.nibbles.reserve(packed.size() * 2);
    if (odd)
        out.nibbles.push_back(packed[0] & 0x0f);
    else if ((packed[0] & 0x0f) != 0)
        throw std::invalid_argument{"non-zero hex-prefix padding"};
    for (size_t i = 1; i < packed.size(); ++i)
    {
        out.nibbles.push_back(packed[i] >> 4);
        out.nibbles.push_back(packed[i] & 0x0f);
    }
    return out;
}

}  // namespace dmpt
