#include <doctest.h>

#include "meld/bench/experiment.hpp"
#include "meld/ledger/ledger.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <random>

using namespace meld;
using namespace meld::bench;

namespace {

// Small, fast desk-scale config.
WorkloadConfig small_config() {
    WorkloadConfig cfg;
    cfg.application = Application::Synthetic;
    cfg.arrival_rate = 40;
    cfg.duration = 5;
    cfg.num_orgs = 4;
    cfg.policy_q = 2;
    cfg.num_clients = 20;
    cfg.settle = 16;
    cfg.drain_gossip_rounds = 8;
    cfg.seed = 99;
    return cfg;
}

} // namespace

TEST_CASE("percentiles match a brute-force sort") {
    std::mt19937_64 rng(1);
    std::vector<double> sample;
    for (int i = 0; i < 1000; ++i)
        sample.push_back(static_cast<double>(rng() % 100000) / 10.0);

    auto sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    // Nearest-rank: value at ceil(p/100 * N).
    CHECK(percentile(sample, 1.0) == sorted[9]);
    CHECK(percentile(sample, 99.0) == sorted[989]);
    CHECK(percentile(sample, 100.0) == sorted.back());

    CHECK(percentile({42.0}, 1.0) == 42.0);
    CHECK(percentile({42.0}, 99.0) == 42.0);
    CHECK(percentile({}, 50.0) == 0.0);
}

TEST_CASE("config validation catches bad mixes and rates") {
    WorkloadConfig cfg = small_config();
    cfg.read_pct = 60; // 60 + 50 != 100
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.read_pct = 50;
    cfg.arrival_rate = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.arrival_rate = 10;
    cfg.policy_q = 5; // > num_orgs
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.policy_q = 2;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config json round-trip") {
    WorkloadConfig cfg = small_config();
    cfg.byzantine.push_back({"org-1", 2.0, 4.0, {"drop_proposals"}, 0.8});
    auto j = cfg.to_json();
    auto back = WorkloadConfig::from_json(j);
    CHECK(back.to_json() == j);
    CHECK(back.byzantine.size() == 1);
    CHECK(back.byzantine[0].activation == 0.8);
}

TEST_CASE("zero-duration run produces an empty report without dividing by zero") {
    WorkloadConfig cfg = small_config();
    cfg.duration = 0;
    auto result = run_experiment(cfg);
    CHECK(result.report.submitted == 0);
    CHECK(result.report.committed == 0);
    CHECK(result.report.throughput_tps == 0);
    CHECK(result.converged);
}

TEST_CASE("a clean run commits everything, converges, and conserves counts") {
    auto result = run_experiment(small_config());
    const auto& r = result.report;

    CHECK(r.submitted == 200);
    CHECK(r.failed == 0);
    CHECK(r.in_flight == 0);
    CHECK(r.committed == r.submitted);
    CHECK(r.submitted == r.committed + r.failed + r.in_flight);
    CHECK(r.committed_modify + r.committed_read == r.committed);
    CHECK(r.throughput_tps == doctest::Approx(40.0));

    CHECK(r.latency_p1_ms <= r.latency_avg_ms);
    CHECK(r.latency_avg_ms <= r.latency_p99_ms);
    // Two round-trips over a 100 ms link put latency near 400 ms.
    CHECK(r.latency_avg_ms > 200);
    CHECK(r.latency_p99_ms < 2000);

    CHECK(result.converged);
    for (const auto& org : result.orgs)
        CHECK(org.chain_ok);

    std::uint64_t series_total = 0;
    for (auto c : r.per_second_committed)
        series_total += c;
    CHECK(series_total <= r.committed);
    CHECK(series_total > 0);
}

TEST_CASE("identical seeds give bitwise-identical reports and traces") {
    auto cfg = small_config();
    RunOptions opts;
    opts.trace = true;
    auto a = run_experiment(cfg, opts);
    auto b = run_experiment(cfg, opts);
    CHECK(a.report.to_json() == b.report.to_json());
    CHECK(a.net_trace == b.net_trace);
    for (std::size_t i = 0; i < a.orgs.size(); ++i) {
        CHECK(a.orgs[i].state_digest == b.orgs[i].state_digest);
        CHECK(a.orgs[i].committed_valid == b.orgs[i].committed_valid);
    }

    cfg.seed += 1;
    auto c = run_experiment(cfg, opts);
    CHECK(a.net_trace != c.net_trace);
}

TEST_CASE("suite with same seeds has zero variance; varied seeds differ") {
    auto cfg = small_config();
    cfg.arrival_rate = 20;
    cfg.duration = 3;

    auto same = run_suite(cfg, 3, /*vary_seeds=*/false);
    REQUIRE(same.runs.size() == 3);
    for (const auto& run : same.runs) {
        CHECK(run.report.to_json() == same.runs.front().report.to_json());
        CHECK(run.report.throughput_tps == same.averaged.throughput_tps);
    }

    auto varied = run_suite(cfg, 2, /*vary_seeds=*/true);
    CHECK(varied.runs[0].report.latency_avg_ms != varied.runs[1].report.latency_avg_ms);
}

TEST_CASE("voting and auction workloads run clean end to end") {
    for (auto app : {Application::Voting, Application::Auction}) {
        WorkloadConfig cfg = small_config();
        cfg.application = app;
        cfg.arrival_rate = 30;
        cfg.duration = 4;
        auto result = run_experiment(cfg);
        CHECK(result.report.failed == 0);
        CHECK(result.report.committed == result.report.submitted);
        CHECK(result.converged);
    }
}

TEST_CASE("artifacts land in the output directory") {
    auto dir = std::filesystem::temp_directory_path() /
               ("meld-bench-test-" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(dir);

    WorkloadConfig cfg = small_config();
    cfg.arrival_rate = 10;
    cfg.duration = 2;
    cfg.persist_ledgers = true;
    RunOptions opts;
    opts.out_dir = dir;
    auto suite = run_suite(cfg, 2, true, opts);

    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "suite.csv"));
    for (int rep = 0; rep < 2; ++rep) {
        auto rep_dir = dir / ("rep-" + std::to_string(rep));
        CHECK(std::filesystem::exists(rep_dir / "report.json"));
        CHECK(std::filesystem::exists(rep_dir / "series.csv"));
        CHECK(std::filesystem::exists(rep_dir / "digests.json"));
        CHECK(std::filesystem::exists(rep_dir / "genesis.json"));
        CHECK(std::filesystem::exists(rep_dir / "ledgers" / "org-0" / "log.bin"));
    }

    // Persisted ledgers reload and verify.
    ledger::LedgerConfig lcfg;
    lcfg.dir = dir / "rep-0" / "ledgers" / "org-0";
    ledger::Ledger reloaded(lcfg);
    CHECK(reloaded.verify_chain());
    CHECK(reloaded.height() > 0);

    std::filesystem::remove_all(dir);
}

TEST_CASE("byzantine drop windows register failures without avoidance") {
    WorkloadConfig cfg = small_config();
    cfg.arrival_rate = 30;
    cfg.duration = 6;
    cfg.avoidance = false;
    cfg.endorse_timeout = 2.0;
    cfg.receipt_timeout = 2.0;
    cfg.settle = 10;
    // Two of four orgs go silent mid-run; with q=2 some attempts land on them.
    cfg.byzantine.push_back({"org-2", 2.0, 6.0, {"drop_proposals", "drop_commits"}, 1.0});
    cfg.byzantine.push_back({"org-3", 2.0, 6.0, {"drop_proposals", "drop_commits"}, 1.0});

    auto result = run_experiment(cfg);
    CHECK(result.report.failed > 0);
    CHECK(result.report.committed > 0);
    CHECK(result.report.failures_by_reason.contains("timeout"));
    CHECK(result.report.submitted ==
          result.report.committed + result.report.failed + result.report.in_flight);
}

TEST_CASE("throughput steps down with every byzantine onset when clients cannot avoid") {
    WorkloadConfig cfg = small_config();
    cfg.application = Application::Synthetic;
    cfg.arrival_rate = 60;
    cfg.duration = 45;
    cfg.read_pct = 0;
    cfg.modify_pct = 100;
    cfg.num_orgs = 8;
    cfg.policy_q = 4;
    cfg.num_clients = 60;
    cfg.avoidance = false;
    cfg.endorse_timeout = 2.0;
    cfg.receipt_timeout = 2.0;
    cfg.settle = 10;
    cfg.seed = 2718;
    const std::vector<std::string> behaviors = {"drop_proposals", "drop_commits"};
    cfg.byzantine.push_back({"org-5", 15.0, 45.0, behaviors, 0.5});
    cfg.byzantine.push_back({"org-6", 25.0, 45.0, behaviors, 0.5});
    cfg.byzantine.push_back({"org-7", 35.0, 45.0, behaviors, 0.5});

    auto result = run_experiment(cfg);
    const auto& series = result.report.per_second_committed;
    auto mean = [&](int from, int to) {
        double sum = 0;
        for (int s = from; s < to; ++s)
            sum += static_cast<double>(series[static_cast<std::size_t>(s)]);
        return sum / (to - from);
    };
    double f0 = mean(5, 15), f1 = mean(18, 25), f2 = mean(28, 35), f3 = mean(38, 45);
    CHECK(f0 > f1);
    CHECK(f1 > f2);
    CHECK(f2 > f3);
}

TEST_CASE("waiting on more endorsers never reduces latency") {
    auto run_with_q = [](std::uint32_t q) {
        WorkloadConfig cfg = small_config();
        cfg.application = Application::Synthetic;
        cfg.arrival_rate = 40;
        cfg.duration = 15;
        cfg.num_orgs = 16;
        cfg.policy_q = q;
        cfg.num_clients = 50;
        cfg.seed = 1234;
        cfg.settle = 16;
        return run_experiment(cfg).report.latency_avg_ms;
    };
    // The client waits for the slowest of q jittered responses twice per
    // transaction, so average latency grows with q.
    double q2 = run_with_q(2);
    double q16 = run_with_q(16);
    CHECK(q16 > q2);
}
