// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/rlp.hpp>
#include <dmpt/wal.hpp>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <cstring>

namespace dmpt
{
namespace
{
uint32_t crc32_of(BytesView b)
{
    return static_cast<uint32_t>(::crc32(0L, b.data(), static_cast<uInt>(b.size())));
}

void put_u32(Bytes& out, uint32_t v)
{
    for (int s = 24; s >= 0; s -= 8)
        out.push_back(static_cast<uint8_t>(v >> s));
}

uint32_t get_u32(const uint8_t* p)
{
    return uint32_t{p[0]} << 24 | uint32_t{p[1]} << 16 | uint32_t{p[2]} << 8 | p[3];
}

Digest digest_of(const rlp::Item& i)
{
    if (i.is_list || i.payload.size() != 32)
        throw rlp::DecodeError{"expected digest"};
    return Digest::from_view(i.payload);
}

Bytes bytes_of(const rlp::Item& i)
{
    if (i.is_list)
        throw rlp::DecodeError{"expected string"};
    return Bytes(i.payload.begin(), i.payload.end());
}

bool write_all(int fd, BytesView b)
{
    while (!b.empty())
    {
        const auto n = ::write(fd, b.data(), b.size());
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            return false;
        b = b.subspan(static_cast<size_t>(n));
    }
    return true;
}

// Scans framed records. Returns the payloads up to the last marker and the
// byte offset just past it.
std::pair<std::vector<Bytes>, size_t> scan(BytesView data)
{
    std::vector<Bytes> out;
    size_t keep_records = 0;
    size_t keep_bytes = 0;
    size_t off = 0;
    while (data.size() - off >= 8)
    {
        const auto len = get_u32(&data[off]);
        const auto crc = get_u32(&data[off + 4]);
        if (data.size() - off - 8 < len)
            break;
        const auto payload = data.subspan(off + 8, len);
        if (crc32_of(payload) != crc)
            break;
        WalRecord r;
        try
        {
            r = WalRecord::decode(payload);
        }
        catch (const std::exception&)
        {
            break;
        }
        out.emplace_back(payload.begin(), payload.end());
        off += 8 + len;
        if (r.kind != WalKind::Writes)
        {
            keep_records = out.size();
            keep_bytes = off;
        }
    }
    out.resize(keep_records);
    return {std::move(out), keep_bytes};
}
}  // namespace

Bytes WalRecord::encode() const
{
    rlp::ListBuilder ws;
    for (const auto& w : writes)
        ws.list(rlp::ListBuilder{}.string(w.key).string(w.value ? BytesView{*w.value} : BytesView{}));
    return rlp::ListBuilder{}
        .uint(seq)
        .uint(static_cast<uint8_t>(kind))
        .uint(tx)
        .string(pre.view())
        .string(post.view())
        .list(ws)
        .string(header)
        .finish();
}

WalRecord WalRecord::decode(BytesView in)
{
    const auto f = rlp::decode_list(in, 7);
    WalRecord r;
    r.seq = rlp::to_uint(f[0]);
    const auto kind = rlp::to_uint(f[1]);
    if (kind < 1 || kind > 3)
        throw rlp::DecodeError{"bad record kind"};
    r.kind = static_cast<WalKind>(kind);
    r.tx = rlp::to_uint(f[2]);
    r.pre = digest_of(f[3]);
    r.post = digest_of(f[4]);
    if (!f[5].is_list)
        throw rlp::DecodeError{"bad writes"};
    for (const auto& w : rlp::members(f[5]))
    {
        const auto kv = rlp::members(w);
        if (!w.is_list || kv.size() != 2)
            throw rlp::DecodeError{"bad write"};
        Write out{bytes_of(kv[0]), std::nullopt};
        auto v = bytes_of(kv[1]);
        if (!v.empty())
            out.value = std::move(v);
        r.writes.push_back(std::move(out));
    }
    r.header = bytes_of(f[6]);
    return r;
}

Bytes wal_frame(BytesView payload)
{
    Bytes out;
    out.reserve(payload.size() + 8);
    put_u32(out, static_cast<uint32_t>(payload.size()));
    put_u32(out, crc32_of(payload));
    append(out, payload);
    return out;
}

Wal::Wal(std::string path, bool fsync) : path_{std::move(path)}, fsync_{fsync}
{
    if (path_.empty())
        return;
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0)
        fd_ = ::open(path_.c_str(), O_WRONLY);
    if (fd_ < 0)
        throw std::runtime_error{"cannot open log " + path_ + ": " + std::strerror(errno)};
    struct stat st{};
    ::fstat(fd_, &st);
    if (!S_ISREG(st.st_mode))
        return;  // devices and pipes are write-only sinks

    Bytes data(static_cast<size_t>(st.st_size));
    size_t got = 0;
    while (got < data.size())
    {
        const auto n = ::pread(fd_, data.data() + got, data.size() - got, static_cast<off_t>(got));
        if (n <= 0)
            break;
        got += static_cast<size_t>(n);
    }
    data.resize(got);
    auto [payloads, keep] = scan(data);
    if (keep < data.size())
    {
        truncated_ = data.size() - keep;
        if (::ftruncate(fd_, static_cast<off_t>(keep)) != 0)
            throw std::runtime_error{"cannot truncate log " + path_};
    }
    size_ = keep;
    if (!payloads.empty())
        next_seq_ = WalRecord::decode(payloads.back()).seq + 1;
    ::lseek(fd_, static_cast<off_t>(size_), SEEK_SET);
}

Wal::~Wal()
{
    if (fd_ >= 0)
        ::close(fd_);
}

bool Wal::append(std::vector<WalRecord>& records)
{
    std::lock_guard lock{mu_};
    Bytes buf;
    std::vector<Bytes> payloads;
    auto seq = next_seq_;
    for (auto& r : records)
    {
        r.seq = seq++;
        payloads.push_back(r.encode());
        dmpt::append(buf, wal_frame(payloads.back()));
    }
    if (fd_ < 0)
    {
        for (auto& p : payloads)
            memory_.push_back(std::move(p));
        next_seq_ = seq;
        return true;
    }
    if (!write_all(fd_, buf) || (fsync_ && ::fdatasync(fd_) != 0))
    {
        // Leave no partial record behind.
        if (::ftruncate(fd_, static_cast<off_t>(size_)) == 0)
            ::lseek(fd_, static_cast<off_t>(size_), SEEK_SET);
        return false;
    }
    size_ += buf.size();
    next_seq_ = seq;
    return true;
}

std::vector<WalRecord> Wal::records() const
{
    std::lock_guard lock{mu_};
    std::vector<WalRecord> out;
    if (fd_ < 0)
    {
        for (const auto& p : memory_)
            out.push_back(WalRecord::decode(p));
        return out;
    }
    Bytes data(size_);
    size_t got = 0;
    while (got < data.size())
    {
        const auto n = ::pread(fd_, data.data() + got, data.size() - got, static_cast<off_t>(got));
        if (n <= 0)
            break;
        got += static_cast<size_t>(n);
    }
    data.resize(got);
    size_t off = 0;
    while (data.size() - off >= 8)
    {
        const auto len = get_u32(&data[off]);
        if (data.size() - off - 8 < len)
            break;
        out.push_back(WalRecord::decode(BytesView{data}.subspan(off + 8, len)));
        off += 8 + len;
    }
    return out;
}

std::vector<UpdateBatch> shard_log(std::span<const WalRecord> records, uint8_t shard)
{
    std::vector<UpdateBatch> out;
    Digest parent = empty_trie_digest();
    for (const auto& r : records)
    {
        if (r.kind != WalKind::Seal)
            continue;
        const auto h = BlockHeader::decode(r.header);
        UpdateBatch b{h.id(), r.header, parent, h.shard_roots[shard], {}};
        for (const auto& w : r.writes)
            if (shard_of(w.key) == shard)
                b.writes.push_back(w);
        parent = b.new_root;
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace dmpt
