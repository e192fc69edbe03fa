// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/bytes.hpp>

#include <optional>

/// Recursive length prefix encoding. The decoder is strict: non-minimal
/// length prefixes, single bytes wrapped in a string header and trailing
/// input are all rejected, so every value has exactly one accepted encoding.
namespace dmpt::rlp
{
struct DecodeError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

void append_string(Bytes& out, BytesView s);
void append_uint(Bytes& out, uint64_t v);
void append_list_header(Bytes& out, size_t payload_len);

inline Bytes encode_string(BytesView s)
{
    Bytes out;
    append_string(out, s);
    return out;
}

inline Bytes encode_uint(uint64_t v)
{
    Bytes out;
    append_uint(out, v);
    return out;
}

/// Accumulates list members (each already a complete RLP item) and wraps
/// them with the list header.
class ListBuilder
{
public:
    ListBuilder& raw(BytesView item)
    {
        append(payload_, item);
        return *this;
    }
    ListBuilder& string(BytesView s)
    {
        append_string(payload_, s);
        return *this;
    }
    ListBuilder& uint(uint64_t v)
    {
        append_uint(payload_, v);
        return *this;
    }
    ListBuilder& list(const ListBuilder& nested)
    {
        const auto enc = nested.finish();
        append(payload_, enc);
        return *this;
    }

    Bytes finish() const
    {
        Bytes out;
        out.reserve(payload_.size() + 9);
        append_list_header(out, payload_.size());
        append(out, payload_);
        return out;
    }

private:
    Bytes payload_;
};

struct Item
{
    bool is_list = false;
    BytesView payload;  ///< content without the header
    BytesView raw;      ///< complete encoding including the header
};

/// Consumes one item from the front of `in`.
Item next_item(BytesView& in);

/// Decodes exactly one item spanning all of `in`.
Item decode(BytesView in);

/// Members of a list item.
std::vector<Item> members(const Item& list);

/// Decodes `in` as a list with exactly `n` members.
std::vector<Item> decode_list(BytesView in, size_t n);

uint64_t to_uint(const Item& item);
BytesView to_string(const Item& item);

}  // namespace dmpt::rlp
