#include "meld/bench/experiment.hpp"
#include "meld/ledger/ledger.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

using namespace meld;
using nlohmann::json;

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, int reps,
            const std::string& out, bool same_seed, bool persist) {
    bench::WorkloadConfig cfg = bench::WorkloadConfig::load_file(config_path);
    if (seed)
        cfg.seed = *seed;
    if (persist)
        cfg.persist_ledgers = true;

    bench::RunOptions opts;
    if (!out.empty())
        opts.out_dir = out;

    auto suite = bench::run_suite(cfg, reps, !same_seed, opts);

    std::cout << "application     " << suite.averaged.application << "\n"
              << "repetitions     " << reps << "\n";
    for (int rep = 0; rep < reps; ++rep) {
        const auto& r = suite.runs[static_cast<std::size_t>(rep)];
        std::cout << "rep " << rep << ": committed=" << r.report.committed
                  << " failed=" << r.report.failed << " in_flight=" << r.report.in_flight
                  << " tps=" << r.report.throughput_tps
                  << " avg_ms=" << r.report.latency_avg_ms
                  << " p1_ms=" << r.report.latency_p1_ms
                  << " p99_ms=" << r.report.latency_p99_ms
                  << " converged=" << (r.converged ? "yes" : "no") << "\n";
    }
    std::cout << "avg: committed=" << suite.averaged.committed
              << " tps=" << suite.averaged.throughput_tps
              << " avg_ms=" << suite.averaged.latency_avg_ms
              << " p1_ms=" << suite.averaged.latency_p1_ms
              << " p99_ms=" << suite.averaged.latency_p99_ms << "\n";
    if (!out.empty())
        std::cout << "artifacts written to " << out << "\n";
    return 0;
}

int cmd_verify_ledger(const std::string& dir) {
    ledger::LedgerConfig cfg;
    cfg.dir = dir;
    ledger::Ledger led(cfg);
    bool ok = led.verify_chain();
    std::cout << "ledger " << dir << ": " << led.height() << " blocks, chain "
              << (ok ? "OK" : "BROKEN") << "\n";
    return ok ? 0 : 1;
}

std::vector<std::filesystem::path> find_digest_files(const std::filesystem::path& out) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(out / "digests.json")) {
        files.push_back(out / "digests.json");
        return files;
    }
    if (std::filesystem::exists(out)) {
        for (const auto& entry : std::filesystem::directory_iterator(out)) {
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "digests.json"))
                files.push_back(entry.path() / "digests.json");
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_convergence_check(const std::string& out) {
    auto files = find_digest_files(out);
    if (files.empty()) {
        std::cerr << "no digests.json under " << out << "\n";
        return 2;
    }
    bool all_ok = true;
    for (const auto& file : files) {
        std::ifstream in(file);
        json j;
        in >> j;
        std::vector<bench::OrgSnapshot> orgs;
        for (const auto& o : j.at("orgs")) {
            bench::OrgSnapshot snap;
            snap.org_id = o.at("org").get<std::string>();
            auto digest = from_hex(o.at("state_digest").get<std::string>());
            std::copy(digest.begin(), digest.end(), snap.state_digest.begin());
            for (const auto& id : o.at("committed_valid")) {
                auto bytes = from_hex(id.get<std::string>());
                crypto::Digest d{};
                std::copy(bytes.begin(), bytes.end(), d.begin());
                snap.committed_valid.push_back(d);
            }
            snap.chain_ok = o.at("chain_ok").get<bool>();
            orgs.push_back(std::move(snap));
        }
        bool converged = bench::snapshots_converged(orgs);
        bool chains = std::all_of(orgs.begin(), orgs.end(),
                                  [](const auto& s) { return s.chain_ok; });
        std::cout << file.string() << ": " << orgs.size() << " orgs, state "
                  << (converged ? "CONVERGED" : "DIVERGED") << ", chains "
                  << (chains ? "OK" : "BROKEN") << "\n";
        all_ok = all_ok && converged && chains;
    }
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coordination-free replicated ledger benchmark"};
    app.require_subcommand(1);

    std::string config_path, out_dir, ledger_dir;
    std::optional<std::uint64_t> seed;
    int reps = 1;
    bool same_seed = false, persist = false;

    auto* run = app.add_subcommand("run", "run a benchmark experiment");
    run->add_option("--config", config_path, "workload config (JSON)")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--reps", reps, "repetitions to average")->default_val(1);
    run->add_option("--out", out_dir, "output directory for reports and digests");
    run->add_flag("--same-seed", same_seed, "reuse one seed across repetitions");
    run->add_flag("--persist-ledgers", persist, "write each organization's ledger to disk");

    auto* verify = app.add_subcommand("verify-ledger", "recheck a ledger's hash chain");
    verify->add_option("--dir", ledger_dir, "ledger directory")->required();

    auto* conv = app.add_subcommand("convergence-check",
                                    "compare state digests across organizations");
    conv->add_option("--out", out_dir, "run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, seed, reps, out_dir, same_seed, persist);
        if (verify->parsed())
            return cmd_verify_ledger(ledger_dir);
        if (conv->parsed())
            return cmd_convergence_check(out_dir);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
