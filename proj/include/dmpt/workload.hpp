// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <dmpt/trie.hpp>

#include <iosfwd>
#include <random>

namespace dmpt
{
using Address = std::array<uint8_t, 20>;

inline constexpr size_t account_payload_size = 100;
inline constexpr uint64_t initial_balance = 1'000'000'000'000;

/// World-state record stored under keccak(address).
struct Account
{
    uint64_t nonce = 0;
    uint64_t balance = 0;
    Bytes payload;

    Bytes encode() const;
    static Account decode(BytesView in);

    friend bool operator==(const Account&, const Account&) = default;
};

struct WorkloadConfig
{
    uint64_t accounts = 1000;
    double hot_fraction = 0.10;  ///< share of accounts in the hot set
    double hot_mass = 0.90;      ///< probability a reference goes to the hot set
    double contract_fraction = 0.15;
    double variable_share = 0.5;  ///< share of contract calls with input-dependent reads
    uint32_t contracts = 16;
    uint32_t slots = 32;  ///< storage slots per contract
    uint64_t max_amount = 1000;
    uint64_t seed = 1;
    uint64_t tx_count = 1000;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    std::string describe() const;
};

enum class TxKind : uint8_t
{
    Transfer = 0,
    FixedContract = 1,     ///< reads and writes the slot named by its input
    VariableContract = 2,  ///< also touches a slot derived from block data
};

const char* to_string(TxKind k) noexcept;

struct SimTransaction
{
    uint64_t id = 0;
    TxKind kind = TxKind::Transfer;
    Address from{};
    Address to{};  ///< recipient, or the contract for contract calls
    uint64_t amount = 0;
    uint32_t slot = 0;
    std::vector<Bytes> read_set;   ///< declared keys
    std::vector<Bytes> write_set;  ///< declared keys
    uint64_t guess_number = 0;     ///< speculative block number
    uint64_t guess_timestamp = 0;  ///< speculative block timestamp

    Bytes encode() const;
    static SimTransaction decode(BytesView in);

    friend bool operator==(const SimTransaction&, const SimTransaction&) = default;
};

Address account_address(uint64_t seed, uint64_t index);
Address contract_address(uint64_t seed, uint32_t contract);
Bytes account_key(const Address& a);
Bytes slot_key(const Address& contract, uint32_t slot);
Bytes account_payload(uint64_t seed, uint64_t index);
Bytes initial_slot_value(const Address& contract, uint32_t slot);

/// Seeded transaction source. Accounts are drawn from a two-tier
/// distribution: the hot set is the first ceil(hot_fraction * N) accounts.
class WorkloadGenerator
{
public:
    explicit WorkloadGenerator(WorkloadConfig config);

    SimTransaction next();

    /// Draws one account index.
    uint64_t pick_account();

    uint64_t hot_count() const noexcept { return hot_; }
    const WorkloadConfig& config() const noexcept { return config_; }

private:
    WorkloadConfig config_;
    uint64_t hot_;
    std::mt19937_64 rng_;
    uint64_t next_id_ = 1;
};

std::vector<SimTransaction> generate(const WorkloadConfig& config);

struct GenesisState
{
    std::vector<std::pair<Bytes, Bytes>> entries;  ///< key, encoded value
    Snapshot snapshot;
    TreeStats stats;
};

/// N accounts with 20-byte addresses and 100-byte payloads.
GenesisState materialize_state(const WorkloadConfig& config);

/// Initial storage of every contract slot.
std::vector<std::pair<Bytes, Bytes>> contract_storage(const WorkloadConfig& config);

struct WorkloadSummary
{
    uint64_t txs = 0;
    uint64_t transfers = 0;
    uint64_t fixed_contracts = 0;
    uint64_t variable_contracts = 0;
    uint64_t account_refs = 0;
    uint64_t hot_refs = 0;

    double contract_fraction() const { return txs ? double(fixed_contracts + variable_contracts) / double(txs) : 0; }
    double hot_mass() const { return account_refs ? double(hot_refs) / double(account_refs) : 0; }
};

WorkloadSummary summarize(const WorkloadConfig& config, std::span<const SimTransaction> txs);

/// Stream file: a `#dmpt-stream v1` header echoing the config, then one
/// line per transaction holding the encoding's byte length and its hex.
void write_stream(std::ostream& out, const WorkloadConfig& config, std::span<const SimTransaction> txs);

struct Stream
{
    std::string header;
    std::vector<SimTransaction> txs;
};

/// Throws std::runtime_error on a malformed stream.
Stream read_stream(std::istream& in);

}  // namespace dmpt
