// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/shard.hpp>

namespace dmpt::wire
{
/// Frames on the stream are a 4-byte big-endian payload length followed by
/// the payload. A payload is [protocol version][message type][RLP body].
inline constexpr uint8_t protocol_version = 1;
inline constexpr size_t max_frame = 256u << 20;

enum class MessageType : uint8_t
{
    ApplyUpdates = 1,
    ReadAccounts = 2,
    GetShardHead = 3,
    GCTrigger = 4,
    RebuildFromLog = 5,
    Error = 0x7f,
};

/// Response type for a request type.
inline uint8_t response_of(MessageType t) noexcept
{
    return static_cast<uint8_t>(t) | 0x80;
}

struct ProtocolError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct ReadRequest
{
    Digest root = empty_trie_digest();
    uint64_t retention = 0;
    bool siblings = false;
    std::vector<Bytes> keys;

    friend bool operator==(const ReadRequest&, const ReadRequest&) = default;
};

struct Message
{
    uint8_t type = 0;
    BytesView body;
};

Bytes frame(BytesView payload);

/// Builds a payload: version byte, type byte, body.
Bytes payload(uint8_t type, BytesView body);

/// Splits a payload; throws ProtocolError on a wrong version or short input.
Message parse(BytesView payload);

// Bodies. Every decoder is strict and throws ProtocolError.
Bytes encode(const UpdateBatch& b);
UpdateBatch decode_batch(BytesView body);

Bytes encode(const ApplyResult& r);
ApplyResult decode_apply_result(BytesView body);

Bytes encode(const ReadRequest& r);
ReadRequest decode_read_request(BytesView body);

/// The bag travels as [anchor digest, [node encodings]]; digests are
/// recomputed on receipt, never trusted.
Bytes encode(const ReadResult& r);
ReadResult decode_read_result(BytesView body);

Bytes encode(const NodeBag& b);
NodeBag decode_bag(BytesView body);

Bytes encode(const HeadInfo& h);
HeadInfo decode_head(BytesView body);

Bytes encode_log(std::span<const UpdateBatch> log);
std::vector<UpdateBatch> decode_log(BytesView body);

Bytes encode(const RebuildResult& r);
RebuildResult decode_rebuild_result(BytesView body);

Bytes encode_uint_body(uint64_t v);
uint64_t decode_uint_body(BytesView body);

Bytes encode_error(const std::string& code, const std::string& message);
ShardError decode_error(BytesView body);

/// Dispatches one request payload against a shard and returns the response
/// payload. Never throws; failures become Error responses.
Bytes handle(Shard& shard, BytesView request);

}  // namespace dmpt::wire
