// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/rlp.hpp>
#include <dmpt/wire.hpp>

namespace dmpt::wire
{
namespace
{
template <typename F>
auto strict(F&& f)
{
    try
    {
        return f();
    }
    catch (const ProtocolError&)
    {
        throw;
    }
    catch (const std::exception& e)
    {
        throw ProtocolError{std::string{"malformed body: "} + e.what()};
    }
}

Digest digest_of(const rlp::Item& i)
{
    if (i.is_list || i.payload.size() != 32)
        throw ProtocolError{"expected 32-byte digest"};
    return Digest::from_view(i.payload);
}

Bytes string_of(const rlp::Item& i)
{
    if (i.is_list)
        throw ProtocolError{"expected string"};
    return Bytes(i.payload.begin(), i.payload.end());
}

bool flag_of(const rlp::Item& i)
{
    const auto v = rlp::to_uint(i);
    if (v > 1)
        throw ProtocolError{"expected flag"};
    return v == 1;
}

rlp::ListBuilder batch_list(const UpdateBatch& b)
{
    rlp::ListBuilder writes;
    for (const auto& w : b.writes)
    {
        // An empty value encodes a delete; stored values are never empty.
        writes.list(rlp::ListBuilder{}.string(w.key).string(w.value ? BytesView{*w.value} : BytesView{}));
    }
    rlp::ListBuilder l;
    l.string(b.block_id.view()).string(b.header).string(b.parent_root.view()).string(b.new_root.view()).list(writes);
    return l;
}

UpdateBatch batch_of(const rlp::Item& item)
{
    if (!item.is_list)
        throw ProtocolError{"expected batch list"};
    const auto f = rlp::members(item);
    if (f.size() != 5 || !f[4].is_list)
        throw ProtocolError{"bad batch shape"};
    UpdateBatch b;
    b.block_id = digest_of(f[0]);
    b.header = string_of(f[1]);
    b.parent_root = digest_of(f[2]);
    b.new_root = digest_of(f[3]);
    for (const auto& w : rlp::members(f[4]))
    {
        if (!w.is_list)
            throw ProtocolError{"bad write"};
        const auto kv = rlp::members(w);
        if (kv.size() != 2)
            throw ProtocolError{"bad write"};
        Write out{string_of(kv[0]), std::nullopt};
        auto v = string_of(kv[1]);
        if (!v.empty())
            out.value = std::move(v);
        b.writes.push_back(std::move(out));
    }
    return b;
}

rlp::ListBuilder bag_list(const NodeBag& bag)
{
    // Sorted by digest so that equal bags encode identically.
    std::vector<std::pair<Digest, const Bytes*>> sorted;
    for (const auto& [d, e] : bag.nodes())
        sorted.emplace_back(d, &e);
    std::ranges::sort(sorted, {}, &std::pair<Digest, const Bytes*>::first);
    rlp::ListBuilder nodes;
    for (const auto& [d, e] : sorted)
        nodes.string(*e);
    rlp::ListBuilder l;
    l.string(bag.root().view()).list(nodes);
    return l;
}

NodeBag bag_of(const rlp::Item& item)
{
    if (!item.is_list)
        throw ProtocolError{"expected bag"};
    const auto f = rlp::members(item);
    if (f.size() != 2 || !f[1].is_list)
        throw ProtocolError{"bad bag shape"};
    NodeBag bag{digest_of(f[0])};
    for (const auto& n : rlp::members(f[1]))
        if (!bag.add(string_of(n)))
            throw ProtocolError{"duplicate node in bag"};
    return bag;
}
}  // namespace

Bytes frame(BytesView p)
{
    if (p.size() > max_frame)
        throw ProtocolError{"frame too large"};
    Bytes out(4);
    const auto n = static_cast<uint32_t>(p.size());
    out[0] = static_cast<uint8_t>(n >> 24);
    out[1] = static_cast<uint8_t>(n >> 16);
    out[2] = static_cast<uint8_t>(n >> 8);
    out[3] = static_cast<uint8_t>(n);
    append(out, p);
    return out;
}

Bytes payload(uint8_t type, BytesView body)
{
    Bytes out{protocol_version, type};
    append(out, body);
    return out;
}

Message parse(BytesView p)
{
    if (p.size() < 2)
        throw ProtocolError{"short payload"};
    if (p[0] != protocol_version)
        throw ProtocolError{"unsupported protocol version " + std::to_string(p[0])};
    return Message{p[1], p.subspan(2)};
}

Bytes encode(const UpdateBatch& b)
{
    return batch_list(b).finish();
}

UpdateBatch decode_batch(BytesView body)
{
    return strict([&] { return batch_of(rlp::decode(body)); });
}

Bytes encode(const ApplyResult& r)
{
    return rlp::ListBuilder{}.uint(r.accepted ? 1 : 0).string(r.root.view()).string(as_view(r.reason)).finish();
}

ApplyResult decode_apply_result(BytesView body)
{
    return strict([&] {
        const auto f = rlp::decode_list(body, 3);
        const auto reason = string_of(f[2]);
        return ApplyResult{flag_of(f[0]), digest_of(f[1]), std::string(reason.begin(), reason.end())};
    });
}

Bytes encode(const ReadRequest& r)
{
    rlp::ListBuilder keys;
    for (const auto& k : r.keys)
        keys.string(k);
    return rlp::ListBuilder{}.string(r.root.view()).uint(r.retention).uint(r.siblings ? 1 : 0).list(keys).finish();
}

ReadRequest decode_read_request(BytesView body)
{
    return strict([&] {
        const auto f = rlp::decode_list(body, 4);
        if (!f[3].is_list)
            throw ProtocolError{"bad key list"};
        ReadRequest r{digest_of(f[0]), rlp::to_uint(f[1]), flag_of(f[2]), {}};
        for (const auto& k : rlp::members(f[3]))
            r.keys.push_back(string_of(k));
        return r;
    });
}

Bytes encode(const ReadResult& r)
{
    rlp::ListBuilder values;
    for (const auto& v : r.values)
    {
        rlp::ListBuilder slot;
        if (v)
            slot.string(*v);
        values.list(slot);
    }
    rlp::ListBuilder covered;
    for (const auto& p : r.bag.covered())
        covered.string(p);
    return rlp::ListBuilder{}.list(values).list(bag_list(r.bag)).list(covered).finish();
}

ReadResult decode_read_result(BytesView body)
{
    return strict([&] {
        const auto f = rlp::decode_list(body, 3);
        if (!f[0].is_list || !f[2].is_list)
            throw ProtocolError{"bad read result"};
        ReadResult r{{}, bag_of(f[1])};
        for (const auto& slot : rlp::members(f[0]))
        {
            if (!slot.is_list)
                throw ProtocolError{"bad value slot"};
            const auto m = rlp::members(slot);
            if (m.size() > 1)
                throw ProtocolError{"bad value slot"};
            if (m.empty())
                r.values.emplace_back();
            else
                r.values.emplace_back(string_of(m[0]));
        }
        for (const auto& p : rlp::members(f[2]))
        {
            auto path = string_of(p);
            if (std::ranges::any_of(path, [](uint8_t n) { return n > 15; }))
                throw ProtocolError{"bad nibble"};
            r.bag.cover(std::move(path));
        }
        return r;
    });
}

Bytes encode(const NodeBag& b)
{
    return bag_list(b).finish();
}

NodeBag decode_bag(BytesView body)
{
    return strict([&] { return bag_of(rlp::decode(body)); });
}

Bytes encode(const HeadInfo& h)
{
    return rlp::ListBuilder{}.string(h.root.view()).string(h.block_id.view()).uint(h.height).uint(h.versions).finish();
}

HeadInfo decode_head(BytesView body)
{
    return strict([&] {
        const auto f = rlp::decode_list(body, 4);
        return HeadInfo{digest_of(f[0]), digest_of(f[1]), rlp::to_uint(f[2]), rlp::to_uint(f[3])};
    });
}

Bytes encode_log(std::span<const UpdateBatch> log)
{
    rlp::ListBuilder l;
    for (const auto& b : log)
        l.list(batch_list(b));
    return l.finish();
}

std::vector<UpdateBatch> decode_log(BytesView body)
{
    return strict([&] {
        const auto item = rlp::decode(body);
        if (!item.is_list)
            throw ProtocolError{"bad log"};
        std::vector<UpdateBatch> out;
        for (const auto& b : rlp::members(item))
            out.push_back(batch_of(b));
        return out;
    });
}

Bytes encode(const RebuildResult& r)
{
    return rlp::ListBuilder{}
        .string(r.head.view())
        .uint(r.applied)
        .uint(r.complete ? 1 : 0)
        .string(as_view(r.reason))
        .finish();
}

RebuildResult decode_rebuild_result(BytesView body)
{
    return strict([&] {
        const auto f = rlp::decode_list(body, 4);
        const auto reason = string_of(f[3]);
        return RebuildResult{digest_of(f[0]), rlp::to_uint(f[1]), flag_of(f[2]), std::string(reason.begin(), reason.end())};
    });
}

Bytes encode_uint_body(uint64_t v)
{
    return rlp::ListBuilder{}.uint(v).finish();
}

uint64_t decode_uint_body(BytesView body)
{
    return strict([&] { return rlp::to_uint(rlp::decode_list(body, 1)[0]); });
}

Bytes encode_error(const std::string& code, const std::string& message)
{
    return rlp::ListBuilder{}.string(as_view(code)).string(as_view(message)).finish();
}

ShardError decode_error(BytesView body)
{
    return strict([&] {
        const auto f = rlp::decode_list(body, 2);
        const auto code = string_of(f[0]);
        const auto msg = string_of(f[1]);
        return ShardError{std::string(code.begin(), code.end()), std::string(msg.begin(), msg.end())};
    });
}

Bytes handle(Shard& shard, BytesView request)
{
    const auto error = [](const std::string& code, const std::string& msg) {
        return payload(static_cast<uint8_t>(MessageType::Error), encode_error(code, msg));
    };
    try
    {
        const auto m = parse(request);
        const auto type = static_cast<MessageType>(m.type);
        switch (type)
        {
        case MessageType::ApplyUpdates:
            return payload(response_of(type), encode(shard.apply_updates(decode_batch(m.body))));
        case MessageType::ReadAccounts:
        {
            const auto r = decode_read_request(m.body);
            return payload(response_of(type), encode(shard.read_accounts(r.keys, r.root, r.retention, r.siblings)));
        }
        case MessageType::GetShardHead:
            if (!m.body.empty())
                throw ProtocolError{"unexpected body"};
            return payload(response_of(type), encode(shard.head()));
        case MessageType::GCTrigger:
        {
            const auto k = decode_uint_body(m.body);
            const auto n = shard.collect_garbage(k == 0 ? std::nullopt : std::optional<size_t>{k});
            return payload(response_of(type), encode_uint_body(n));
        }
        case MessageType::RebuildFromLog:
            return payload(response_of(type), encode(shard.rebuild_from_log(decode_log(m.body))));
        default:
            return error("bad-request", "unknown message type " + std::to_string(m.type));
        }
    }
    catch (const ShardError& e)
    {
        return error(e.code, e.what());
    }
    catch (const ProtocolError& e)
    {
        return error("bad-request", e.what());
    }
    catch (const std::exception& e)
    {
        return error("internal", e.what());
    }
}

}  // namespace dmpt::wire
