#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace meld::bench {

// Nearest-rank percentile over an unsorted sample.
double percentile(std::vector<double> sample, double pct);

struct MetricsReport {
    std::string application;
    double duration = 0;

    std::uint64_t submitted = 0;
    std::uint64_t committed = 0;
    std::uint64_t failed = 0;
    std::uint64_t in_flight = 0; // unresolved at cutoff

    std::uint64_t committed_modify = 0;
    std::uint64_t committed_read = 0;

    double throughput_tps = 0;
    double modify_tps = 0;
    double read_tps = 0;

    double latency_avg_ms = 0;
    double latency_p1_ms = 0;
    double latency_p99_ms = 0;

    std::vector<std::uint64_t> per_second_committed;
    std::map<std::string, std::uint64_t> failures_by_reason;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
};

// Finalizes rates and percentiles from the raw counters and latency sample.
void finalize_metrics(MetricsReport& report, std::vector<double> latencies_ms,
                      std::vector<double> modify_latencies_ms,
                      std::vector<double> read_latencies_ms);

MetricsReport average_reports(std::span<const MetricsReport> reports);

void write_series_csv(const std::filesystem::path& path, const MetricsReport& report);

} // namespace meld::bench
