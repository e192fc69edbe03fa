// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plot.hpp"

#include <dmpt/bench.hpp>
#include <dmpt/sim.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <map>

namespace
{
using namespace dmpt;

/// CSV sink: a file when a path is given, stdout otherwise.
class Output
{
public:
    explicit Output(const std::string& path)
    {
        if (path.empty())
            return;
        file_.open(path, std::ios::trunc);
        if (!file_)
            throw std::runtime_error{"cannot open " + path};
    }

    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

    void line(const std::string& s)
    {
        stream() << s << '\n';
        stream().flush();
    }

private:
    std::ofstream file_;
};

void add_workload_flags(CLI::App* cmd, WorkloadConfig& w)
{
    cmd->add_option("--accounts", w.accounts, "Number of accounts")->capture_default_str();
    cmd->add_option("--hot-fraction", w.hot_fraction, "Share of accounts in the hot set")->capture_default_str();
    cmd->add_option("--hot-mass", w.hot_mass, "Share of references that go to the hot set")
        ->capture_default_str();
    cmd->add_option("--contract-fraction", w.contract_fraction, "Share of contract calls")->capture_default_str();
    cmd->add_option("--variable-share", w.variable_share, "Share of contract calls with block-dependent reads")
        ->capture_default_str();
    cmd->add_option("--contracts", w.contracts, "Number of contracts")->capture_default_str();
    cmd->add_option("--slots", w.slots, "Storage slots per contract")->capture_default_str();
    cmd->add_option("--max-amount", w.max_amount, "Largest transfer amount")->capture_default_str();
    cmd->add_option("--seed", w.seed, "Random seed")->capture_default_str();
    cmd->add_option("--txs", w.tx_count, "Transactions to generate")->capture_default_str();
}

std::string fixed(double v, int digits)
{
    std::ostringstream o;
    o << std::fixed << std::setprecision(digits) << v;
    return o.str();
}

// bench-trie

struct BenchTrieArgs
{
    uint64_t keys = 100'000;
    uint64_t writes = 20'000;
    std::vector<uint64_t> hash_every{1, 10, 100, 1000};
    size_t value_size = 100;
    uint64_t seed = 1;
    std::string out;
    std::string plot;
};

int bench_trie(const BenchTrieArgs& a)
{
    Output out{a.out};
    out.line("metric,keys,hash_every,ops,seconds,ops_per_sec,node_hashes");
    const auto pg = bench::put_get(a.keys, a.seed, a.value_size);
    out.line("put," + std::to_string(a.keys) + ",0," + std::to_string(a.keys) + "," + fixed(pg.build_seconds, 4) +
             "," + fixed(pg.puts_per_sec, 1) + ",");
    out.line("get," + std::to_string(a.keys) + ",0," + std::to_string(a.keys) + "," +
             fixed(double(a.keys) / pg.gets_per_sec, 4) + "," + fixed(pg.gets_per_sec, 1) + ",");

    const auto base = bench::build_trie(a.keys, a.seed, a.value_size);
    tools::Chart chart{"Put throughput vs hashing interval", "writes per root computation", "puts/s", true, {}};
    for (uint64_t n : a.hash_every)
    {
        const auto r = bench::lazy_hash(base, a.keys, a.writes, n, a.seed + 1, a.value_size);
        out.line("lazy," + std::to_string(a.keys) + "," + std::to_string(n) + "," + std::to_string(r.writes) + "," +
                 fixed(r.seconds, 4) + "," + fixed(r.puts_per_sec, 1) + "," + std::to_string(r.node_hashes));
        chart.series["lazy hashing"].emplace_back(double(n), r.puts_per_sec);
    }
    if (!a.plot.empty())
        tools::write_svg(a.plot, chart);
    return 0;
}

// bench-witness

struct BenchWitnessArgs
{
    uint64_t keys = 100'000;
    uint64_t batches = 50;
    uint64_t batch_size = 100;
    double zipf = 0.99;
    size_t max_r = 8;
    size_t value_size = 100;
    uint64_t seed = 1;
    std::string out;
    std::string plot;
};

int bench_witness(const BenchWitnessArgs& a)
{
    Output out{a.out};
    const auto trie = bench::build_trie(a.keys, a.seed, a.value_size);
    const auto rows = bench::witness_sweep(trie, a.keys, a.seed + 1, a.batches, a.batch_size, a.zipf, a.max_r);
    out.line("retention,reads,full_bytes,compact_bytes,bag_bytes,bag_compact_bytes,reduction");
    tools::Chart chart{"Witness bytes vs retention", "retention r", "bytes", false, {}};
    for (const auto& r : rows)
    {
        out.line(std::to_string(r.retention) + "," + std::to_string(r.reads) + "," + std::to_string(r.full_bytes) +
                 "," + std::to_string(r.compact_bytes) + "," + std::to_string(r.bag_bytes) + "," +
                 std::to_string(r.bag_compact_bytes) + "," + fixed(r.reduction(), 4));
        const double x = double(r.retention);
        chart.series["full"].emplace_back(x, double(r.full_bytes));
        chart.series["compact"].emplace_back(x, double(r.compact_bytes));
        chart.series["bag"].emplace_back(x, double(r.bag_bytes));
        chart.series["bag + compact"].emplace_back(x, double(r.bag_compact_bytes));
    }
    if (!a.plot.empty())
        tools::write_svg(a.plot, chart);
    return 0;
}

// sim

struct SimArgs
{
    sim::SimConfig base;
    std::vector<uint64_t> accounts;
    std::vector<size_t> retention;
    std::string policy = "fetch";
    bool wall_clock = false;
    std::string out;
    std::string plot;
};

int run_sim(SimArgs a)
{
    if (a.policy != "fetch" && a.policy != "reject")
        throw CLI::ValidationError{"--policy", "must be fetch or reject"};
    a.base.policy = a.policy == "fetch" ? FetchPolicy::Fetch : FetchPolicy::Reject;
    a.base.deterministic = !a.wall_clock;
    if (a.accounts.empty())
        a.accounts.push_back(a.base.workload.accounts);
    if (a.retention.empty())
        a.retention.push_back(a.base.retention);

    Output out{a.out};
    out.line(sim::csv_header());
    tools::Chart chart{"Abort rate vs retention", "retention r", "abort rate", false, {}};
    for (uint64_t n : a.accounts)
        for (size_t r : a.retention)
        {
            auto c = a.base;
            c.workload.accounts = n;
            c.retention = r;
            const auto res = sim::run_experiment(c);
            out.line(sim::csv_row(res));
            chart.series["N=" + std::to_string(n)].emplace_back(double(r), res.stats.abort_rate());
        }
    if (!a.plot.empty())
        tools::write_svg(a.plot, chart);
    return 0;
}

// gen-workload

struct GenArgs
{
    WorkloadConfig workload;
    std::string stream;
    bool materialize = false;
    std::string out;
    std::string plot;
};

int gen_workload(GenArgs a)
{
    a.workload.validate();
    const auto txs = generate(a.workload);
    {
        std::ofstream f{a.stream, std::ios::trunc};
        if (!f)
            throw std::runtime_error{"cannot open " + a.stream};
        write_stream(f, a.workload, txs);
        if (!f.flush())
            throw std::runtime_error{"cannot write " + a.stream};
    }

    const auto s = summarize(a.workload, txs);
    std::string header = "accounts,seed,txs,transfers,fixed_contracts,variable_contracts,contract_fraction,"
                         "hot_accounts,account_refs,hot_refs,hot_mass";
    std::string row = std::to_string(a.workload.accounts) + "," + std::to_string(a.workload.seed) + "," +
                      std::to_string(s.txs) + "," + std::to_string(s.transfers) + "," +
                      std::to_string(s.fixed_contracts) + "," + std::to_string(s.variable_contracts) + "," +
                      fixed(s.contract_fraction(), 4) + "," +
                      std::to_string(WorkloadGenerator{a.workload}.hot_count()) + "," +
                      std::to_string(s.account_refs) + "," + std::to_string(s.hot_refs) + "," +
                      fixed(s.hot_mass(), 4);
    if (a.materialize)
    {
        const auto g = materialize_state(a.workload);
        header += ",genesis_root,resident_nodes,tree_height,resident_bytes";
        row += "," + g.snapshot.root_digest.hex() + "," + std::to_string(g.stats.resident_nodes()) + "," +
               std::to_string(g.stats.height) + "," + std::to_string(g.stats.resident_bytes);
    }
    Output out{a.out};
    out.line(header);
    out.line(row);

    if (!a.plot.empty())
    {
        // Cumulative share of account references against the share of
        // accounts, most referenced first.
        std::map<Address, uint64_t> index;
        for (uint64_t i = 0; i < a.workload.accounts; ++i)
            index.emplace(account_address(a.workload.seed, i), i);
        std::vector<uint64_t> refs(a.workload.accounts, 0);
        uint64_t total = 0;
        for (const auto& t : txs)
            for (const auto* addr : {&t.from, &t.to})
                if (auto it = index.find(*addr); it != index.end())
                {
                    ++refs[it->second];
                    ++total;
                }
        std::sort(refs.rbegin(), refs.rend());
        tools::Chart chart{"Reference concentration", "share of accounts", "share of references", false, {}};
        auto& pts = chart.series["workload"];
        pts.emplace_back(0, 0);
        uint64_t acc = 0;
        const uint64_t n = refs.size();
        for (uint64_t i = 0, next = 0; i < n; ++i)
        {
            acc += refs[i];
            if (i + 1 >= next || i + 1 == n)
            {
                pts.emplace_back(double(i + 1) / double(n), total ? double(acc) / double(total) : 0);
                next = i + 1 + std::max<uint64_t>(1, n / 100);
            }
        }
        tools::write_svg(a.plot, chart);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sharded Merkle Patricia trie toolkit: benchmarks, workload generation and chain simulation"};
    app.set_config("--config", "", "Read flags from a TOML or INI file");
    app.require_subcommand(1);

    BenchTrieArgs bt;
    auto* cbt = app.add_subcommand("bench-trie", "Put/get throughput and the lazy hashing sweep");
    cbt->add_option("--keys", bt.keys, "Keys in the trie")->capture_default_str();
    cbt->add_option("--writes", bt.writes, "Overwrites per hashing interval run")->capture_default_str();
    cbt->add_option("--hash-every", bt.hash_every, "Writes between root computations")
        ->delimiter(',')
        ->capture_default_str();
    cbt->add_option("--value-size", bt.value_size, "Value bytes")->capture_default_str();
    cbt->add_option("--seed", bt.seed, "Random seed")->capture_default_str();
    cbt->add_option("-o,--out", bt.out, "CSV file (stdout when omitted)");
    cbt->add_option("--plot", bt.plot, "Also write an SVG chart to this path");

    BenchWitnessArgs bw;
    auto* cbw = app.add_subcommand("bench-witness", "Witness compaction and bagging sweep over retention");
    cbw->add_option("--keys", bw.keys, "Keys in the trie")->capture_default_str();
    cbw->add_option("--batches", bw.batches, "Read batches")->capture_default_str();
    cbw->add_option("--batch-size", bw.batch_size, "Reads per batch")->capture_default_str();
    cbw->add_option("--zipf", bw.zipf, "Zipf exponent of the read distribution")->capture_default_str();
    cbw->add_option("--max-r", bw.max_r, "Largest retention level")->capture_default_str();
    cbw->add_option("--value-size", bw.value_size, "Value bytes")->capture_default_str();
    cbw->add_option("--seed", bw.seed, "Random seed")->capture_default_str();
    cbw->add_option("-o,--out", bw.out, "CSV file (stdout when omitted)");
    cbw->add_option("--plot", bw.plot, "Also write an SVG chart to this path");

    SimArgs sa;
    auto* csim = app.add_subcommand("sim", "Run the chain simulation and print one CSV row per run");
    add_workload_flags(csim, sa.base.workload);
    csim->add_option("--sweep-accounts", sa.accounts, "Account counts to sweep (overrides --accounts)")
        ->delimiter(',');
    csim->add_option("-r,--retention", sa.base.retention, "Cache retention level")->capture_default_str();
    csim->add_option("--sweep-retention", sa.retention, "Retention levels to sweep")->delimiter(',');
    csim->add_option("--block-size", sa.base.block_size, "Transactions per block")->capture_default_str();
    csim->add_option("--lag", sa.base.lag, "Blocks by which clients trail the miner")->capture_default_str();
    csim->add_option("--policy", sa.policy, "Miner policy on incomplete bags: fetch or reject")
        ->capture_default_str();
    csim->add_option("--clients", sa.base.clients, "Pre-execution threads")->capture_default_str();
    csim->add_option("--cached-paths", sa.base.cached_paths, "Witness paths the miner keeps across prunes")
        ->capture_default_str();
    csim->add_option("--gc-interval", sa.base.gc_interval, "Blocks between shard garbage collections")
        ->capture_default_str();
    csim->add_flag("--wall-clock", sa.wall_clock, "Use wall-clock timestamps and timings");
    csim->add_option("-o,--out", sa.out, "CSV file (stdout when omitted)");
    csim->add_option("--plot", sa.plot, "Also write an SVG chart to this path");

    GenArgs ga;
    auto* cgen = app.add_subcommand("gen-workload", "Write a transaction stream file and print its summary");
    add_workload_flags(cgen, ga.workload);
    cgen->add_option("--stream", ga.stream, "Stream file to write")->required();
    cgen->add_flag("--materialize", ga.materialize, "Also build the genesis state and report its size");
    cgen->add_option("-o,--out", ga.out, "Summary CSV file (stdout when omitted)");
    cgen->add_option("--plot", ga.plot, "Also write an SVG reference-concentration chart");

    CLI11_PARSE(app, argc, argv);
    try
    {
        if (cbt->parsed())
            return bench_trie(bt);
        if (cbw->parsed())
            return bench_witness(bw);
        if (csim->parsed())
            return run_sim(sa);
        if (cgen->parsed())
            return gen_workload(ga);
    }
    catch (const CLI::Error& e)
    {
        return app.exit(e);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
