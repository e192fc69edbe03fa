// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/rlp.hpp>

namespace dmpt::rlp
{
namespace
{
size_t byte_length(uint64_t v) noexcept
{
    size_t n = 0;
    for (; v != 0; v >>= 8)
        ++n;
    return n;
}

void append_be(Bytes& out, uint64_t v, size_t n)
{
    for (size_t i = n; i-- > 0;)
        out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_header(Bytes& out, uint8_t short_base, size_t len)
{
    if (len < 56)
    {
        out.push_back(static_cast<uint8_t>(short_base + len));
        return;
    }
    const auto n = byte_length(len);
    out.push_back(static_cast<uint8_t>(short_base + 55 + n));
    append_be(out, len, n);
}

uint64_t read_be(BytesView b)
{
    uint64_t v = 0;
    for (const auto c : b)
        v = (v << 8) | c;
    return v;
}
}  // namespace

void append_string(Bytes& out, BytesView s)
{
    if (s.size() == 1 && s[0] < 0x80)
    {
        out.push_back(s[0]);
        return;
    }
    append_header(out, 0x80, s.size());
    append(out, s);
}

void append_uint(Bytes& out, uint64_t v)
{
    uint8_t buf[8];
    const auto n = byte_length(v);
    for (size_t i = 0; i < n; ++i)
        buf[i] = static_cast<uint8_t>(v >> (8 * (n - 1 - i)));
    append_string(out, BytesView{buf, n});
}

void append_list_header(Bytes& out, size_t payload_len)
{
    append_header(out, 0xc0, payload_len);
}

Item next_item(BytesView& in)
{
    if (in.empty())
        throw DecodeError{"unexpected end of input"};

    const uint8_t prefix = in[0];
    Item item;
    size_t header = 1;
    size_t len = 0;

    if (prefix < 0x80)
    {
        item.raw = in.first(1);
        item.payload = in.first(1);
        in = in.subspan(1);
        return item;
    }

    const bool is_list = prefix >= 0xc0;
    const uint8_t base = is_list ? 0xc0 : 0x80;
    const uint8_t offset = static_cast<uint8_t>(prefix - base);
    if (offset < 56)
    {
        len = offset;
    }
    else
    {
        const size_t n = offset - 55;
        if (in.size() < 1 + n)
            throw DecodeError{"truncated length"};
        const auto len_bytes = in.subspan(1, n);
        if (len_bytes[0] == 0)
            throw DecodeError{"non-canonical length (leading zero)"};
        if (n > 8)
            throw DecodeError{"length overflow"};
        len = read_be(len_bytes);
        if (len < 56)
            throw DecodeError{"non-canonical length (long form for short item)"};
        header = 1 + n;
    }

    if (in.size() - header < len)
        throw DecodeError{"truncated payload"};

    item.is_list = is_list;
    item.payload = in.subspan(header, len);
    item.raw = in.first(header + len);
    if (!is_list && len == 1 && item.payload[0] < 0x80)
        throw DecodeError{"non-canonical single byte"};
    in = in.subspan(header + len);
    return item;
}

Item decode(BytesView in)
{
    auto item = next_item(in);
    if (!in.empty())
        throw DecodeError{"trailing bytes"};
    return item;
}

std::vector<Item> members(const Item& list)
{
    if (!list.is_list)
        throw DecodeError{"expected list"};
    std::vector<Item> out;
    auto rest = list.payload;
    while (!rest.empty())
        out.push_back(next_item(rest));
    return out;
}

std::vector<Item> decode_list(BytesView in, size_t n)
{
    auto out = members(decode(in));
    if (out.size() != n)
        throw DecodeError{"unexpected list arity"};
    return out;
}

uint64_t to_uint(const Item& item)
{
    if (item.is_list)
        throw DecodeError{"expected integer, got list"};
    if (item.payload.size() > 8)
        throw DecodeError{"integer overflow"};
    if (!item.payload.empty() && item.payload[0] == 0)
        throw DecodeError{"non-canonical integer (leading zero)"};
    return read_be(item.payload);
}

BytesView to_string(const Item& item)
{
    if (item.is_list)
        throw DecodeError{"expected string, got list"};
    return item.payload;
}

}  // namespace dmpt::rlp
