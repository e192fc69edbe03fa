// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/sim.hpp>

#include <chrono>
#include <iomanip>
#include <sstream>

namespace dmpt::sim
{
namespace
{
Bytes be(uint64_t v, int bytes)
{
    Bytes out;
    for (int s = (bytes - 1) * 8; s >= 0; s -= 8)
        out.push_back(static_cast<uint8_t>(v >> s));
    return out;
}

Bytes mix(BytesView a, BytesView b)
{
    Bytes in(a.begin(), a.end());
    append(in, b);
    const auto d = keccak256(in);
    return Bytes(d.bytes.begin(), d.bytes.end());
}

uint64_t block_time(uint64_t number)
{
    return genesis_time + number * block_interval;
}

uint64_t wall_seconds()
{
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count());
}

bool covers(const NodeBag& bag, const Nibbles& path)
{
    const auto& c = bag.covered();
    return std::find(c.begin(), c.end(), path) != c.end();
}
}  // namespace

ExecResult execute(const SimTransaction& tx, uint64_t number, uint64_t timestamp, uint32_t slots,
    const Reader& read)
{
    ExecResult r;
    const auto load = [&](const Bytes& key) {
        r.reads.push_back(key);
        return read(key);
    };
    const auto sender_key = account_key(tx.from);
    const auto sender_raw = load(sender_key);
    if (!sender_raw)
    {
        r.reason = "no-account";
        return r;
    }
    auto sender = Account::decode(*sender_raw);

    switch (tx.kind)
    {
    case TxKind::Transfer:
    {
        if (sender.balance < tx.amount)
        {
            r.reason = "precondition";
            return r;
        }
        const auto to_key = account_key(tx.to);
        sender.nonce += 1;
        if (to_key == sender_key)
        {
            r.writes[sender_key] = sender.encode();
            break;
        }
        const auto to_raw = load(to_key);
        auto to = to_raw ? Account::decode(*to_raw) : Account{};
        sender.balance -= tx.amount;
        to.balance += tx.amount;
        r.writes[sender_key] = sender.encode();
        r.writes[to_key] = to.encode();
        break;
    }
    case TxKind::FixedContract:
    case TxKind::VariableContract:
    {
        if (slots == 0)
            throw std::invalid_argument{"contract call without slots"};
        auto key = slot_key(tx.to, tx.slot);
        auto value = load(key).value_or(Bytes(32, 0));
        if (tx.kind == TxKind::VariableContract)
        {
            // The slot actually written depends on the block the call lands in.
            auto seed = value;
            append(seed, be(number, 8));
            append(seed, be(timestamp, 8));
            const auto d = keccak256(seed);
            const auto pick = (uint32_t{d.bytes[0]} << 24 | uint32_t{d.bytes[1]} << 16 | uint32_t{d.bytes[2]} << 8 |
                                  uint32_t{d.bytes[3]}) %
                              slots;
            key = slot_key(tx.to, pick);
            value = load(key).value_or(Bytes(32, 0));
        }
        sender.nonce += 1;
        r.writes[key] = mix(value, tx.from);
        r.writes[sender_key] = sender.encode();
        break;
    }
    }
    r.ok = true;
    return r;
}

ShardCluster::ShardCluster(uint64_t gc_keep)
{
    for (uint8_t i = 0; i < shard_count; ++i)
    {
        shards_.push_back(std::make_shared<Shard>(i, gc_keep));
        endpoints_.push_back(std::make_shared<LocalEndpoint>(shards_.back()));
    }
}

uint64_t ShardCluster::foreign_key_requests() const
{
    uint64_t n = 0;
    for (const auto& s : shards_)
        n += s->foreign_key_requests();
    return n;
}

void ShardCluster::collect_garbage()
{
    for (auto& s : shards_)
        s->collect_garbage();
}

Client::Client(const std::vector<std::shared_ptr<Endpoint>>& endpoints)
{
    if (endpoints.size() != shard_count)
        throw std::invalid_argument{"a client needs 16 shard endpoints"};
    for (const auto& ep : endpoints)
        shards_.push_back(std::make_unique<ShardClient>(ep));
}

uint64_t Client::messages() const
{
    uint64_t n = 0;
    for (const auto& s : shards_)
        n += s->messages();
    return n;
}

std::variant<Submitted, ClientAbort> Client::pre_execute(SimTransaction tx, const BlockHeader& visible,
    uint64_t guess_timestamp, size_t retention, uint32_t slots)
{
    tx.guess_number = visible.number + 1;
    tx.guess_timestamp = guess_timestamp;

    NodePtr top;
    if (auto joined = join_digests(visible.shard_roots))
        top = *joined;

    std::vector<CompactWitness> proofs;
    uint64_t full_bytes = 0;
    std::string failure;
    const Reader read = [&](const Bytes& key) -> std::optional<Bytes> {
        const auto i = shard_of(key);
        ReadResult res;
        for (int attempt = 0;; ++attempt)
        {
            try
            {
                res = shards_[i]->read_accounts(wire::ReadRequest{visible.shard_roots[i], 0, false, {key}});
                break;
            }
            catch (const ShardUnavailable&)
            {
                if (attempt == 1)
                {
                    failure = "io";
                    throw;
                }
            }
        }
        if (!top)
        {
            // A single non-empty shard: the global root absorbs its root node.
            const auto* enc = res.bag.find(visible.shard_roots[i]);
            if (!enc)
                throw ShardError{"bad-shard-data", "shard root missing"};
            std::array<NodePtr, shard_count> roots{};
            roots[i] = decode_node(*enc);
            top = join_shards(roots);
        }
        const auto path = to_nibbles(key);
        const auto g = graft(top, path, res.bag.lookup());
        if (g.missing || res.values.size() != 1 || lookup(g.root, path) != res.values[0])
            throw ShardError{"bad-shard-data", "shard response does not resolve the key"};
        top = g.root;
        auto w = create_witness(g.root, path);
        if (verify_witness(path, res.values[0], w.witness, visible.state_root) != VerifyStatus::Accepted)
            throw ShardError{"bad-shard-data", "witness does not verify against the block"};
        full_bytes += w.witness.byte_size();
        proofs.push_back(compact(w.witness, retention));
        return res.values[0];
    };

    ExecResult res;
    try
    {
        res = execute(tx, tx.guess_number, tx.guess_timestamp, slots, read);
    }
    catch (const ShardUnavailable&)
    {
        return ClientAbort{std::move(tx), "io"};
    }
    catch (const ShardError& e)
    {
        return ClientAbort{std::move(tx), e.code == "unknown-version" ? "io" : "bad-shard-data"};
    }
    catch (const std::exception&)
    {
        return ClientAbort{std::move(tx), "bad-shard-data"};
    }
    if (!res.ok)
        return ClientAbort{std::move(tx), res.reason};

    tx.read_set = res.reads;
    tx.write_set.clear();
    for (const auto& [k, v] : res.writes)
        tx.write_set.push_back(k);
    auto b = bag(proofs);
    return Submitted{std::move(tx), std::move(b), full_bytes};
}

Miner::Miner(CacheConfig config, uint32_t slots) : cache_{[&] {
        config.auto_flush = false;
        return std::move(config);
    }()},
    slots_{slots}
{}

BlockHeader Miner::genesis(std::span<const std::pair<Bytes, Bytes>> entries, uint64_t timestamp)
{
    auto tx = cache_.begin_tx();
    for (const auto& [k, v] : entries)
        cache_.put(tx, k, v);
    const auto r = cache_.end_tx(tx);
    if (!r.committed)
        throw std::runtime_error{"genesis commit failed: " + r.reason};
    return seal(timestamp);
}

MinerResult Miner::process(const Submitted& s, uint64_t number, uint64_t timestamp)
{
    MinerResult out;
    auto tx = cache_.begin_tx();
    const Reader read = [&](const Bytes& key) {
        ReadOptions o;
        o.bag = &s.bag;
        // Keys outside the submitted read set are read from storage.
        if (!covers(s.bag, to_nibbles(key)))
            o.policy = FetchPolicy::Fetch;
        const auto r = cache_.get(tx, key, o);
        if (r.source == ReadSource::Shard)
            ++out.fetched;
        out.revised = out.revised || r.revised;
        return r.value;
    };
    ExecResult res;
    try
    {
        res = execute(s.tx, number, timestamp, slots_, read);
    }
    catch (const CacheError& e)
    {
        cache_.abort_tx(tx);
        out.reason = e.code == "insufficient-witness" ? "incomplete-bag"
                     : e.code == "bad-shard-data"     ? "bad-bag"
                                                      : "io";
        return out;
    }
    if (!res.ok)
    {
        cache_.abort_tx(tx);
        out.reason = "invalid";
        return out;
    }
    for (const auto& [k, v] : res.writes)
        cache_.put(tx, k, v);
    const auto c = cache_.end_tx(tx);
    if (!c.committed)
    {
        out.reason = c.reason == "insufficient-witness" ? "incomplete-bag" : c.reason;
        return out;
    }
    out.outcome = Outcome::Accepted;
    return out;
}

BlockHeader Miner::seal(uint64_t timestamp)
{
    const auto h = cache_.flush(timestamp);
    cache_.prune();
    return h;
}

double SimStats::mean_bag_bytes() const
{
    const auto submitted = total - client_aborted;
    return submitted ? double(bag_bytes) / double(submitted) : 0;
}

double SimStats::compaction_ratio() const
{
    return full_witness_bytes ? double(bag_bytes) / double(full_witness_bytes) : 0;
}

SimResult run_experiment(const SimConfig& config)
{
    config.workload.validate();
    if (config.block_size == 0)
        throw std::invalid_argument{"block_size must be positive"};
    const auto started = std::chrono::steady_clock::now();
    const auto hashes_before = node_hash_count();

    SimResult out;
    out.config = config;
    ShardCluster cluster{std::max<uint64_t>(8, config.lag + 2)};
    CacheConfig cc;
    cc.retention = config.retention;
    cc.endpoints = cluster.endpoints();
    cc.max_cached_paths = config.cached_paths;
    cc.policy = config.policy;
    Miner miner{cc, config.workload.slots};

    auto genesis = materialize_state(config.workload);
    out.genesis = std::move(genesis.entries);
    if (config.workload.contract_fraction > 0)
        for (auto& e : contract_storage(config.workload))
            out.genesis.push_back(std::move(e));
    const auto stamp = [&](uint64_t number) { return config.deterministic ? block_time(number) : wall_seconds(); };
    std::vector<BlockHeader> headers{miner.genesis(out.genesis, stamp(1))};
    out.genesis_root = headers.back().state_root;

    const size_t workers = std::max<size_t>(1, config.clients);
    std::vector<std::unique_ptr<Client>> clients;
    for (size_t i = 0; i < workers; ++i)
        clients.push_back(std::make_unique<Client>(cluster.endpoints()));

    WorkloadGenerator gen{config.workload};
    auto& st = out.stats;
    while (st.total < config.workload.tx_count)
    {
        const auto n = std::min<uint64_t>(config.block_size, config.workload.tx_count - st.total);
        std::vector<SimTransaction> batch;
        for (uint64_t i = 0; i < n; ++i)
            batch.push_back(gen.next());

        const auto& parent = headers.back();
        const auto& visible = headers[headers.size() - 1 - std::min(config.lag, headers.size() - 1)];
        const auto guess_ts = stamp(visible.number + 1);
        std::vector<std::variant<Submitted, ClientAbort>> submitted(batch.size());
        const auto run = [&](size_t w) {
            for (size_t i = w; i < batch.size(); i += workers)
                submitted[i] =
                    clients[w]->pre_execute(batch[i], visible, guess_ts, config.retention, config.workload.slots);
        };
        if (workers == 1)
            run(0);
        else
        {
            std::vector<std::thread> pool;
            for (size_t w = 0; w < workers; ++w)
                pool.emplace_back(run, w);
            for (auto& t : pool)
                t.join();
        }

        SimBlock block;
        block.number = parent.number + 1;
        block.timestamp = stamp(block.number);
        for (auto& s : submitted)
        {
            ++st.total;
            if (auto* a = std::get_if<ClientAbort>(&s))
            {
                ++st.client_aborted;
                ++st.reasons["client:" + a->reason];
                continue;
            }
            auto& sub = std::get<Submitted>(s);
            st.bag_bytes += sub.bag.byte_size();
            st.full_witness_bytes += sub.full_bytes;
            const auto r = miner.process(sub, block.number, block.timestamp);
            st.fetched += r.fetched;
            if (r.outcome == Outcome::Accepted)
            {
                ++st.verified;
                st.revised += r.revised ? 1 : 0;
                block.txs.push_back(std::move(sub.tx));
            }
            else
            {
                ++st.rejected;
                ++st.reasons["miner:" + r.reason];
            }
        }
        const auto h = miner.seal(block.timestamp);
        block.id = h.id();
        block.parent = h.parent;
        block.state_root = h.state_root;
        headers.push_back(h);
        out.blocks.push_back(std::move(block));
        if (config.gc_interval && out.blocks.size() % config.gc_interval == 0)
            cluster.collect_garbage();
    }

    out.final_root = miner.cache().head().root_digest;
    st.blocks = out.blocks.size();
    st.hash_count = node_hash_count() - hashes_before;
    st.miner_messages = miner.cache().shard_messages();
    for (const auto& c : clients)
        st.client_messages += c->messages();
    st.foreign_requests = cluster.foreign_key_requests();
    st.seconds = config.deterministic
                     ? 0
                     : std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

std::string csv_header()
{
    return "accounts,retention,block_size,lag,policy,contract_fraction,seed,txs,verified,revised,fetched,rejected,"
           "client_aborted,abort_rate,mean_bag_bytes,compaction_ratio,hash_count,miner_messages,client_messages,"
           "foreign_requests,blocks,final_root,seconds,throughput";
}

std::string csv_row(const SimResult& r)
{
    const auto& c = r.config;
    const auto& s = r.stats;
    std::ostringstream o;
    o << c.workload.accounts << ',' << c.retention << ',' << c.block_size << ',' << c.lag << ','
      << (c.policy == FetchPolicy::Fetch ? "fetch" : "reject") << ',' << c.workload.contract_fraction << ','
      << c.workload.seed << ',' << s.total << ',' << s.verified << ',' << s.revised << ',' << s.fetched << ','
      << s.rejected << ',' << s.client_aborted << ',' << std::fixed << std::setprecision(6) << s.abort_rate() << ','
      << std::setprecision(1) << s.mean_bag_bytes() << ',' << std::setprecision(4) << s.compaction_ratio() << ','
      << s.hash_count << ',' << s.miner_messages << ',' << s.client_messages << ',' << s.foreign_requests << ','
      << s.blocks << ',' << r.final_root.hex() << ',' << std::setprecision(3) << s.seconds << ','
      << std::setprecision(1) << s.throughput();
    return o.str();
}

std::map<Bytes, Bytes> replay(const SimResult& r)
{
    std::map<Bytes, Bytes> state(r.genesis.begin(), r.genesis.end());
    for (const auto& b : r.blocks)
        for (const auto& tx : b.txs)
        {
            const auto res = execute(tx, b.number, b.timestamp, r.config.workload.slots,
                [&](const Bytes& k) -> std::optional<Bytes> {
                    const auto it = state.find(k);
                    if (it == state.end())
                        return std::nullopt;
                    return it->second;
                });
            if (!res.ok)
                throw std::runtime_error{"accepted transaction fails on replay: " + res.reason};
            for (const auto& [k, v] : res.writes)
                state[k] = v;
        }
    return state;
}

RevisionOutcome revision_scenario(bool prune_between, FetchPolicy policy, uint64_t seed)
{
    WorkloadConfig wc;
    wc.accounts = 2000;
    wc.contract_fraction = 0;
    wc.seed = seed;
    const auto genesis = materialize_state(wc);

    ShardCluster cluster;
    CacheConfig cc;
    cc.retention = 1;
    cc.endpoints = cluster.endpoints();
    cc.max_cached_paths = 0;
    cc.policy = policy;
    Miner miner{cc, 0};
    const auto g = miner.genesis(genesis.entries, block_time(1));

    // tx1 = a -> b and tx2 = c -> d, where c shares two leading nibbles with a
    // so that tx1 rewrites the depth-2 node on c's path, while b and d live
    // in shards nobody else touches.
    const auto nib = [&](uint64_t i) { return to_nibbles(account_key(account_address(seed, i))); };
    const uint64_t a = 0;
    const auto na = nib(a);
    uint64_t c = 1;
    while (!(nib(c)[0] == na[0] && nib(c)[1] == na[1]))
        ++c;
    const auto pick_other = [&](std::vector<uint8_t> used) {
        for (uint64_t i = 1;; ++i)
            if (std::find(used.begin(), used.end(), nib(i)[0]) == used.end())
                return i;
    };
    const auto b = pick_other({na[0]});
    const auto d = pick_other({na[0], nib(b)[0]});

    const auto transfer = [&](uint64_t id, uint64_t from, uint64_t to) {
        SimTransaction t;
        t.id = id;
        t.from = account_address(seed, from);
        t.to = account_address(seed, to);
        t.amount = 5;
        return t;
    };
    Client client{cluster.endpoints()};
    auto s1 = client.pre_execute(transfer(1, a, b), g, block_time(2), cc.retention, 0);
    auto s2 = client.pre_execute(transfer(2, c, d), g, block_time(2), cc.retention, 0);
    if (!std::holds_alternative<Submitted>(s1) || !std::holds_alternative<Submitted>(s2))
        throw std::runtime_error{"revision scenario: client pre-execution failed"};

    RevisionOutcome out;
    uint64_t number = g.number + 1;
    out.first = miner.process(std::get<Submitted>(s1), number, block_time(number));
    if (prune_between)
    {
        miner.seal(block_time(number));
        ++number;
    }
    out.bag_was_stale = std::get<Submitted>(s2).bag.root() != miner.cache().head().root_digest;
    out.second = miner.process(std::get<Submitted>(s2), number, block_time(number));
    miner.seal(block_time(number));
    return out;
}

}  // namespace dmpt::sim
