// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <dmpt/cache.hpp>

namespace dmpt
{
namespace
{
// Bound on stub resolutions for one write; each round trip resolves at
// least one level of the key's path.
constexpr int max_resolutions = 80;

struct Abort
{
    std::string reason;
};
}  // namespace

Cache::Cache(CacheConfig config) : config_{std::move(config)}, wal_{config_.wal_path, config_.wal_fsync}
{
    if (!config_.endpoints.empty() && config_.endpoints.size() != shard_count)
        throw std::invalid_argument{"a cache needs exactly 16 shard endpoints"};
    for (auto& ep : config_.endpoints)
        clients_.push_back(std::make_unique<ShardClient>(ep));
    acked_ = BlockHeader::empty_shard_roots();

    // Recover the committed state recorded by an existing log.
    WorkingTree tree;
    std::map<uint64_t, std::vector<Write>> staged;
    for (const auto& r : wal_.records())
    {
        next_tx_ = std::max(next_tx_, r.tx + 1);
        switch (r.kind)
        {
        case WalKind::Writes:
            staged[r.tx] = r.writes;
            break;
        case WalKind::Commit:
            for (const auto& w : staged[r.tx])
            {
                const auto path = to_nibbles(w.key);
                const auto prior = tree.get_path(path);
                if (!pending_.contains(w.key))
                    pending_[w.key] = Pending{prior.has_value(), std::nullopt};
                pending_[w.key].value = w.value;
                if (w.value)
                    tree.put_path(path, *w.value);
                else
                    tree.erase_path(path);
            }
            staged.erase(r.tx);
            break;
        case WalKind::Seal:
            last_block_ = BlockHeader::decode(r.header);
            pending_.clear();
            acked_ = last_block_.shard_roots;
            break;
        }
    }
    head_ = tree.commit();

    if (config_.async_push)
        pusher_ = std::thread{[this] { push_loop(); }};
}

Cache::~Cache()
{
    {
        std::lock_guard lock{push_mu_};
        stop_ = true;
    }
    push_cv_.notify_all();
    if (pusher_.joinable())
        pusher_.join();
}

Tx Cache::begin_tx() const
{
    std::shared_lock lock{head_mu_};
    Tx tx;
    tx.base_ = head_;
    tx.fetch_roots_ = acked_;
    return tx;
}

void Cache::touch(const Nibbles& path)
{
    if (config_.max_cached_paths == 0)
        return;
    if (const auto it = lru_index_.find(path); it != lru_index_.end())
        lru_.erase(it->second);
    lru_.push_front(path);
    lru_index_[path] = lru_.begin();
    while (lru_.size() > config_.max_cached_paths)
    {
        lru_index_.erase(lru_.back());
        lru_.pop_back();
    }
}

void Cache::install(NibbleView path, const NodeLookup& lookup)
{
    std::unique_lock lock{head_mu_};
    head_.root = graft(head_.root, path, lookup).root;
    touch(Nibbles(path.begin(), path.end()));
}

NodePtr Cache::fetch_into(const NodePtr& root, BytesView key, const ShardRoots& roots, bool siblings,
    ReadResult* out)
{
    if (clients_.empty())
        throw CacheError{"shard-unavailable", "no storage nodes configured"};
    const auto i = shard_of(key);
    ReadResult r;
    try
    {
        r = clients_[i]->read_accounts(wire::ReadRequest{roots[i], config_.retention, siblings, {Bytes(key.begin(), key.end())}});
    }
    catch (const ShardUnavailable& e)
    {
        throw CacheError{"shard-unavailable", e.what()};
    }
    catch (const ShardError& e)
    {
        throw CacheError{e.code == "unknown-version" ? "shard-unavailable" : "bad-shard-data", e.what()};
    }
    catch (const wire::ProtocolError& e)
    {
        throw CacheError{"bad-shard-data", e.what()};
    }
    ++counters_.shard_reads;
    counters_.bytes_received += r.bag.byte_size();
    if (r.values.size() != 1)
        throw CacheError{"bad-shard-data", "wrong number of values"};

    // Every node enters through graft, which accepts a node only under the
    // digest its parent already commits to.
    const auto path = to_nibbles(key);
    const auto g = graft(root, path, r.bag.lookup(), siblings);
    if (g.missing)
        throw CacheError{"bad-shard-data", "response does not reach " + g.missing->hex()};
    std::optional<Bytes> value;
    try
    {
        value = lookup(g.root, path);
    }
    catch (const NodeNotResident& e)
    {
        throw CacheError{"bad-shard-data", e.what()};
    }
    if (value != r.values[0])
        throw CacheError{"bad-shard-data", "value does not match the witness"};
    if (out)
        *out = std::move(r);
    return g.root;
}

CacheRead Cache::get(Tx& tx, BytesView key, const ReadOptions& opts)
{
    if (tx.state_ != TxState::Open)
        throw CacheError{"tx-closed", "transaction is not open"};
    const Bytes k(key.begin(), key.end());
    if (const auto w = tx.writes_.find(k); w != tx.writes_.end())
        return CacheRead{w->second, std::nullopt, ReadSource::WriteBuffer, false};

    const auto path = to_nibbles(key);
    CacheRead out;
    try
    {
        out.value = lookup(tx.base_.root, path);
        out.source = ReadSource::Cache;
        ++counters_.cache_hits;
        std::unique_lock lock{head_mu_};
        touch(path);
    }
    catch (const NodeNotResident&)
    {
        std::optional<Digest> missing;
        if (opts.bag)
        {
            const auto r = revise(*opts.bag, tx.base_.root, path);
            if (const auto* rev = std::get_if<Revised>(&r))
            {
                tx.base_.root = rev->root;
                out.value = rev->value;
                out.source = ReadSource::Bag;
                out.revised = opts.bag->root() != tx.base_.root_digest;
                ++counters_.bag_reads;
                if (out.revised)
                    ++counters_.revised;
                install(path, opts.bag->lookup());
            }
            else
                missing = std::get<Incomplete>(r).missing;
        }
        if (out.source != ReadSource::Bag)
        {
            if (opts.policy.value_or(config_.policy) == FetchPolicy::Reject)
                throw CacheError{"insufficient-witness",
                    "node " + (missing ? missing->hex() : std::string{"on path"}) + " not available"};
            ReadResult r;
            tx.base_.root = fetch_into(tx.base_.root, key, tx.fetch_roots_, false, &r);
            out.value = r.values[0];
            out.source = ReadSource::Shard;
            install(path, r.bag.lookup());
        }
    }

    if (opts.want_witness || out.source == ReadSource::Shard)
    {
        auto w = create_witness(tx.base_.root, path);
        if (verify_witness(path, out.value, w.witness, tx.base_.root_digest) != VerifyStatus::Accepted)
            throw CacheError{"bad-shard-data", "installed path does not verify"};
        if (opts.want_witness)
            out.witness = std::move(w.witness);
    }
    tx.reads_[k] = out.value;
    return out;
}

void Cache::put(Tx& tx, BytesView key, BytesView value)
{
    if (tx.state_ != TxState::Open)
        throw CacheError{"tx-closed", "transaction is not open"};
    check_key(key);
    if (value.empty() || value.size() > max_value_size)
        throw std::invalid_argument{"value must be non-empty and at most 1 MiB"};
    tx.writes_[Bytes(key.begin(), key.end())] = Bytes(value.begin(), value.end());
}

void Cache::erase(Tx& tx, BytesView key)
{
    if (tx.state_ != TxState::Open)
        throw CacheError{"tx-closed", "transaction is not open"};
    check_key(key);
    tx.writes_[Bytes(key.begin(), key.end())] = std::nullopt;
}

void Cache::abort_tx(Tx& tx)
{
    if (tx.state_ == TxState::Open)
        tx.state_ = TxState::Aborted;
}

CommitResult Cache::end_tx(Tx& tx)
{
    if (tx.state_ != TxState::Open)
        throw CacheError{"tx-closed", "transaction is not open"};
    if (tx.writes_.empty())
    {
        tx.state_ = TxState::Committed;
        return CommitResult{true, tx.base_.root_digest, {}};
    }

    std::unique_lock commit{commit_mu_};
    try
    {
        NodePtr base = tx.base_.root;
        Digest base_digest = tx.base_.root_digest;
        ShardRoots roots = tx.fetch_roots_;
        const auto current = head();
        if (current.root_digest != base_digest)
        {
            // First committer wins; a later one is rebased when nothing it
            // read has changed.
            base = current.root;
            base_digest = current.root_digest;
            roots = acked_roots();
            for (const auto& [k, v] : tx.reads_)
            {
                const auto path = to_nibbles(k);
                std::optional<Bytes> now;
                try
                {
                    now = lookup(base, path);
                }
                catch (const NodeNotResident&)
                {
                    try
                    {
                        base = fetch_into(base, k, roots, false, nullptr);
                        now = lookup(base, path);
                    }
                    catch (const std::exception&)
                    {
                        throw Abort{"stale-base"};
                    }
                }
                if (now != v)
                    throw Abort{"stale-base"};
            }
        }

        WorkingTree tree{base};
        std::vector<Write> effective;
        std::map<Bytes, bool> existed;
        for (const auto& [k, v] : tx.writes_)
        {
            const auto path = to_nibbles(k);
            for (int attempt = 0;; ++attempt)
            {
                try
                {
                    const auto prior = tree.get_path(path);
                    if (v)
                        tree.put_path(path, *v);
                    else if (prior)
                        tree.erase_path(path);
                    if (v || prior)
                    {
                        effective.push_back(Write{k, v});
                        existed[k] = prior.has_value();
                    }
                    break;
                }
                catch (const NodeNotResident&)
                {
                    if (config_.policy == FetchPolicy::Reject || attempt >= max_resolutions)
                        throw Abort{"insufficient-witness"};
                    NodePtr next;
                    try
                    {
                        next = fetch_into(tree.root(), k, roots, !v, nullptr);
                    }
                    catch (const CacheError&)
                    {
                        throw Abort{"insufficient-witness"};
                    }
                    if (next == tree.root())
                        throw Abort{"insufficient-witness"};
                    tree.replace_root(std::move(next));
                }
            }
        }

        auto snap = tree.commit();
        const auto id = next_tx_++;
        std::vector<WalRecord> records(2);
        records[0].kind = WalKind::Writes;
        records[0].tx = id;
        records[0].pre = base_digest;
        records[0].post = snap.root_digest;
        records[0].writes = effective;
        records[1].kind = WalKind::Commit;
        records[1].tx = id;
        if (!wal_.append(records))
            throw Abort{"wal-failure"};

        {
            std::unique_lock lock{head_mu_};
            head_ = snap;
        }
        for (const auto& w : effective)
        {
            auto [it, fresh] = pending_.try_emplace(w.key);
            if (fresh)
                it->second.existed = existed[w.key];
            it->second.value = w.value;
        }
        tx.state_ = TxState::Committed;
        commit.unlock();
        if (config_.auto_flush)
            flush(last_block().timestamp + 1);
        return CommitResult{true, snap.root_digest, {}};
    }
    catch (const Abort& a)
    {
        tx.state_ = TxState::Aborted;
        return CommitResult{false, tx.base_.root_digest, a.reason};
    }
}

BlockHeader Cache::flush(uint64_t timestamp)
{
    std::vector<UpdateBatch> batches;
    BlockHeader h;
    {
        std::lock_guard commit{commit_mu_};
        const auto current = head();
        h.number = last_block_.number + 1;
        h.parent = last_block_.number == 0 ? null_block_id() : last_block_.id();
        h.timestamp = timestamp;
        h.state_root = current.root_digest;
        h.shard_roots = shard_digests(current.root);

        WalRecord seal;
        seal.kind = WalKind::Seal;
        seal.pre = last_block_.state_root;
        seal.post = h.state_root;
        seal.header = h.encode();
        for (const auto& [k, p] : pending_)
            if (p.value || p.existed)
                seal.writes.push_back(Write{k, p.value});
        std::vector<WalRecord> records{seal};
        if (!wal_.append(records))
            throw CacheError{"wal-failure", "cannot log block seal"};

        const auto id = h.id();
        for (uint8_t i = 0; i < shard_count; ++i)
            batches.push_back(UpdateBatch{id, seal.header, last_block_.shard_roots[i], h.shard_roots[i], {}});
        for (const auto& w : records[0].writes)
            batches[shard_of(w.key)].writes.push_back(w);
        last_block_ = h;
        pending_.clear();
    }
    if (!clients_.empty())
        for (size_t i = 0; i < shard_count; ++i)
            push(i, batches[i]);
    if (hook_)
        hook_(h, batches);
    return h;
}

void Cache::push(size_t shard, UpdateBatch batch)
{
    if (config_.async_push)
    {
        {
            std::lock_guard lock{push_mu_};
            queue_.emplace_back(shard, std::move(batch));
        }
        push_cv_.notify_all();
        return;
    }
    try
    {
        const auto r = clients_[shard]->apply_updates(batch);
        if (r.accepted)
        {
            std::unique_lock lock{head_mu_};
            acked_[shard] = r.root;
            return;
        }
    }
    catch (const std::exception&)
    {
    }
    ++counters_.push_failures;
}

void Cache::push_loop()
{
    std::unique_lock lock{push_mu_};
    while (true)
    {
        push_cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
        if (queue_.empty())
            return;
        auto [shard, batch] = std::move(queue_.front());
        queue_.pop_front();
        pushing_ = true;
        lock.unlock();
        bool ok = false;
        try
        {
            const auto r = clients_[shard]->apply_updates(batch);
            if (r.accepted)
            {
                std::unique_lock head{head_mu_};
                acked_[shard] = r.root;
                ok = true;
            }
        }
        catch (const std::exception&)
        {
        }
        if (!ok)
            ++counters_.push_failures;
        lock.lock();
        pushing_ = false;
        push_cv_.notify_all();
    }
}

void Cache::drain()
{
    std::unique_lock lock{push_mu_};
    push_cv_.wait(lock, [this] { return queue_.empty() && !pushing_; });
}

size_t Cache::prune(std::optional<size_t> retention)
{
    std::lock_guard commit{commit_mu_};
    std::unique_lock lock{head_mu_};
    std::vector<Nibbles> keep(lru_.begin(), lru_.end());
    for (const auto& [k, p] : pending_)
        keep.push_back(to_nibbles(k));
    head_.root = dmpt::prune(head_.root, retention.value_or(config_.retention), keep);
    return tree_stats(head_.root).resident_nodes();
}

void Cache::rebuild_shard(uint8_t i)
{
    if (clients_.empty())
        throw CacheError{"shard-unavailable", "no storage nodes configured"};
    drain();
    std::lock_guard commit{commit_mu_};
    const auto log = shard_log(wal_.records(), i);
    RebuildResult r;
    try
    {
        r = clients_[i]->rebuild_from_log(log);
    }
    catch (const std::exception& e)
    {
        throw CacheError{"shard-unavailable", e.what()};
    }
    if (r.head != last_block_.shard_roots[i])
        throw CacheError{"rebuild-divergence", "shard " + std::to_string(i) + " rebuilt to " + r.head.hex() +
                                                   " after " + std::to_string(r.applied) + " blocks"};
    std::unique_lock lock{head_mu_};
    acked_[i] = r.head;
}

Snapshot Cache::head() const
{
    std::shared_lock lock{head_mu_};
    return head_;
}

BlockHeader Cache::last_block() const
{
    std::lock_guard commit{const_cast<std::mutex&>(commit_mu_)};
    return last_block_;
}

ShardRoots Cache::acked_roots() const
{
    std::shared_lock lock{head_mu_};
    return acked_;
}

TreeStats Cache::resident() const
{
    return tree_stats(head().root);
}

uint64_t Cache::shard_messages() const
{
    uint64_t n = 0;
    for (const auto& c : clients_)
        n += c->messages();
    return n;
}

void Cache::set_flush_hook(std::function<void(const BlockHeader&, std::span<const UpdateBatch>)> hook)
{
    hook_ = std::move(hook);
}

}  // namespace dmpt
