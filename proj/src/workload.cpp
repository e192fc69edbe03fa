// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/rlp.hpp>
#include <dmpt/workload.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace dmpt
{
namespace
{
Digest tagged_hash(std::string_view tag, uint64_t a, uint64_t b)
{
    return keccak256(rlp::ListBuilder{}.string(as_view(tag)).uint(a).uint(b).finish());
}

Address address_from(const Digest& d)
{
    Address a;
    std::copy(d.bytes.begin() + 12, d.bytes.end(), a.begin());
    return a;
}

Address address_of(const rlp::Item& item)
{
    const auto s = rlp::to_string(item);
    if (s.size() != 20)
        throw rlp::DecodeError{"address must be 20 bytes"};
    Address a;
    std::copy(s.begin(), s.end(), a.begin());
    return a;
}

rlp::ListBuilder key_list(const std::vector<Bytes>& keys)
{
    rlp::ListBuilder l;
    for (const auto& k : keys)
        l.string(k);
    return l;
}

std::vector<Bytes> keys_of(const rlp::Item& item)
{
    if (!item.is_list)
        throw rlp::DecodeError{"key list expected"};
    std::vector<Bytes> out;
    for (const auto& m : rlp::members(item))
    {
        const auto s = rlp::to_string(m);
        out.emplace_back(s.begin(), s.end());
    }
    return out;
}
}  // namespace

Bytes Account::encode() const
{
    return rlp::ListBuilder{}.uint(nonce).uint(balance).string(payload).finish();
}

Account Account::decode(BytesView in)
{
    const auto f = rlp::decode_list(in, 3);
    const auto p = rlp::to_string(f[2]);
    return Account{rlp::to_uint(f[0]), rlp::to_uint(f[1]), Bytes(p.begin(), p.end())};
}

void WorkloadConfig::validate() const
{
    if (accounts < 2)
        throw std::invalid_argument{"accounts must be at least 2"};
    if (!(hot_fraction > 0 && hot_fraction <= 1))
        throw std::invalid_argument{"hot_fraction must be in (0, 1]"};
    if (!(hot_mass > 0 && hot_mass <= 1))
        throw std::invalid_argument{"hot_mass must be in (0, 1]"};
    if (!(contract_fraction >= 0 && contract_fraction <= 1))
        throw std::invalid_argument{"contract_fraction must be in [0, 1]"};
    if (!(variable_share >= 0 && variable_share <= 1))
        throw std::invalid_argument{"variable_share must be in [0, 1]"};
    if (contract_fraction > 0 && (contracts == 0 || slots == 0))
        throw std::invalid_argument{"contract calls need at least one contract slot"};
    if (max_amount == 0)
        throw std::invalid_argument{"max_amount must be positive"};
}

std::string WorkloadConfig::describe() const
{
    std::ostringstream s;
    s << "accounts=" << accounts << " hot_fraction=" << hot_fraction << " hot_mass=" << hot_mass
      << " contract_fraction=" << contract_fraction << " variable_share=" << variable_share
      << " contracts=" << contracts << " slots=" << slots << " max_amount=" << max_amount << " seed=" << seed
      << " txs=" << tx_count;
    return s.str();
}

const char* to_string(TxKind k) noexcept
{
    switch (k)
    {
    case TxKind::Transfer:
        return "transfer";
    case TxKind::FixedContract:
        return "fixed-contract";
    case TxKind::VariableContract:
        return "variable-contract";
    }
    return "?";
}

Bytes SimTransaction::encode() const
{
    return rlp::ListBuilder{}
        .uint(id)
        .uint(static_cast<uint8_t>(kind))
        .string(from)
        .string(to)
        .uint(amount)
        .uint(slot)
        .list(key_list(read_set))
        .list(key_list(write_set))
        .uint(guess_number)
        .uint(guess_timestamp)
        .finish();
}

SimTransaction SimTransaction::decode(BytesView in)
{
    const auto f = rlp::decode_list(in, 10);
    SimTransaction t;
    t.id = rlp::to_uint(f[0]);
    const auto kind = rlp::to_uint(f[1]);
    if (kind > 2)
        throw rlp::DecodeError{"unknown transaction kind"};
    t.kind = static_cast<TxKind>(kind);
    t.from = address_of(f[2]);
    t.to = address_of(f[3]);
    t.amount = rlp::to_uint(f[4]);
    const auto slot = rlp::to_uint(f[5]);
    if (slot > UINT32_MAX)
        throw rlp::DecodeError{"slot out of range"};
    t.slot = static_cast<uint32_t>(slot);
    t.read_set = keys_of(f[6]);
    t.write_set = keys_of(f[7]);
    t.guess_number = rlp::to_uint(f[8]);
    t.guess_timestamp = rlp::to_uint(f[9]);
    return t;
}

Address account_address(uint64_t seed, uint64_t index)
{
    return address_from(tagged_hash("account", seed, index));
}

Address contract_address(uint64_t seed, uint32_t contract)
{
    return address_from(tagged_hash("contract", seed, contract));
}

Bytes account_key(const Address& a)
{
    const auto d = keccak256(a);
    return Bytes(d.bytes.begin(), d.bytes.end());
}

Bytes slot_key(const Address& contract, uint32_t slot)
{
    Bytes in(contract.begin(), contract.end());
    for (int s = 24; s >= 0; s -= 8)
        in.push_back(static_cast<uint8_t>(slot >> s));
    const auto d = keccak256(in);
    return Bytes(d.bytes.begin(), d.bytes.end());
}

Bytes account_payload(uint64_t seed, uint64_t index)
{
    Bytes out;
    out.reserve(account_payload_size + 32);
    for (uint64_t block = 0; out.size() < account_payload_size; ++block)
    {
        const auto d = tagged_hash("payload", seed, index * 8 + block);
        out.insert(out.end(), d.bytes.begin(), d.bytes.end());
    }
    out.resize(account_payload_size);
    return out;
}

Bytes initial_slot_value(const Address& contract, uint32_t slot)
{
    const auto k = slot_key(contract, slot);
    const auto d = keccak256(k);
    return Bytes(d.bytes.begin(), d.bytes.end());
}

WorkloadGenerator::WorkloadGenerator(WorkloadConfig config) : config_{std::move(config)}, rng_{config_.seed}
{
    config_.validate();
    const auto h = static_cast<uint64_t>(std::ceil(config_.hot_fraction * static_cast<double>(config_.accounts)));
    hot_ = std::clamp<uint64_t>(h, 1, config_.accounts);
}

uint64_t WorkloadGenerator::pick_account()
{
    std::uniform_real_distribution<double> unit{0.0, 1.0};
    const bool hot = hot_ == config_.accounts || unit(rng_) < config_.hot_mass;
    if (hot)
        return std::uniform_int_distribution<uint64_t>{0, hot_ - 1}(rng_);
    return std::uniform_int_distribution<uint64_t>{hot_, config_.accounts - 1}(rng_);
}

SimTransaction WorkloadGenerator::next()
{
    std::uniform_real_distribution<double> unit{0.0, 1.0};
    SimTransaction t;
    t.id = next_id_++;
    const bool contract = unit(rng_) < config_.contract_fraction;
    if (!contract)
    {
        const auto from = pick_account();
        auto to = pick_account();
        while (to == from)
            to = pick_account();
        t.kind = TxKind::Transfer;
        t.from = account_address(config_.seed, from);
        t.to = account_address(config_.seed, to);
        t.amount = std::uniform_int_distribution<uint64_t>{1, config_.max_amount}(rng_);
        t.read_set = {account_key(t.from), account_key(t.to)};
        t.write_set = t.read_set;
        return t;
    }
    t.kind = unit(rng_) < config_.variable_share ? TxKind::VariableContract : TxKind::FixedContract;
    t.from = account_address(config_.seed, pick_account());
    t.to = contract_address(config_.seed, std::uniform_int_distribution<uint32_t>{0, config_.contracts - 1}(rng_));
    t.slot = std::uniform_int_distribution<uint32_t>{0, config_.slots - 1}(rng_);
    t.read_set = {account_key(t.from), slot_key(t.to, t.slot)};
    t.write_set = t.read_set;
    return t;
}

std::vector<SimTransaction> generate(const WorkloadConfig& config)
{
    WorkloadGenerator g{config};
    std::vector<SimTransaction> out;
    out.reserve(config.tx_count);
    for (uint64_t i = 0; i < config.tx_count; ++i)
        out.push_back(g.next());
    return out;
}

GenesisState materialize_state(const WorkloadConfig& config)
{
    if (config.accounts == 0)
        throw std::invalid_argument{"accounts must be positive"};
    GenesisState g;
    g.entries.reserve(config.accounts);
    WorkingTree tree;
    for (uint64_t i = 0; i < config.accounts; ++i)
    {
        auto key = account_key(account_address(config.seed, i));
        auto value = Account{0, initial_balance, account_payload(config.seed, i)}.encode();
        tree.put(key, value);
        g.entries.emplace_back(std::move(key), std::move(value));
    }
    g.snapshot = tree.commit();
    g.stats = tree_stats(g.snapshot.root);
    return g;
}

std::vector<std::pair<Bytes, Bytes>> contract_storage(const WorkloadConfig& config)
{
    std::vector<std::pair<Bytes, Bytes>> out;
    for (uint32_t c = 0; c < config.contracts; ++c)
    {
        const auto a = contract_address(config.seed, c);
        for (uint32_t s = 0; s < config.slots; ++s)
            out.emplace_back(slot_key(a, s), initial_slot_value(a, s));
    }
    return out;
}

WorkloadSummary summarize(const WorkloadConfig& config, std::span<const SimTransaction> txs)
{
    const auto hot = WorkloadGenerator{config}.hot_count();
    std::unordered_map<std::string, uint64_t> index;
    index.reserve(config.accounts);
    for (uint64_t i = 0; i < config.accounts; ++i)
    {
        const auto a = account_address(config.seed, i);
        index.emplace(std::string(a.begin(), a.end()), i);
    }
    WorkloadSummary s;
    const auto count = [&](const Address& a) {
        const auto it = index.find(std::string(a.begin(), a.end()));
        if (it == index.end())
            return;
        ++s.account_refs;
        if (it->second < hot)
            ++s.hot_refs;
    };
    for (const auto& t : txs)
    {
        ++s.txs;
        count(t.from);
        switch (t.kind)
        {
        case TxKind::Transfer:
            ++s.transfers;
            count(t.to);
            break;
        case TxKind::FixedContract:
            ++s.fixed_contracts;
            break;
        case TxKind::VariableContract:
            ++s.variable_contracts;
            break;
        }
    }
    return s;
}

void write_stream(std::ostream& out, const WorkloadConfig& config, std::span<const SimTransaction> txs)
{
    auto c = config;
    c.tx_count = txs.size();
    out << "#dmpt-stream v1 " << c.describe() << '\n';
    for (const auto& t : txs)
    {
        const auto enc = t.encode();
        out << enc.size() << ' ' << hex(enc) << '\n';
    }
}

Stream read_stream(std::istream& in)
{
    Stream s;
    if (!std::getline(in, s.header) || !s.header.starts_with("#dmpt-stream v1"))
        throw std::runtime_error{"missing stream header"};
    std::string line;
    for (size_t n = 2; std::getline(in, line); ++n)
    {
        if (line.empty())
            continue;
        const auto fail = [&](const std::string& why) {
            return std::runtime_error{"stream line " + std::to_string(n) + ": " + why};
        };
        const auto sp = line.find(' ');
        if (sp == std::string::npos)
            throw fail("expected '<length> <hex>'");
        size_t len = 0;
        try
        {
            size_t used = 0;
            len = std::stoull(line.substr(0, sp), &used);
            if (used != sp)
                throw fail("bad length");
        }
        catch (const std::logic_error&)
        {
            throw fail("bad length");
        }
        const auto body = std::string_view{line}.substr(sp + 1);
        if (body.size() != 2 * len)
            throw fail("length does not match record");
        try
        {
            s.txs.push_back(SimTransaction::decode(from_hex(body)));
        }
        catch (const std::exception& e)
        {
            throw fail(e.what());
        }
    }
    return s;
}

}  // namespace dmpt
