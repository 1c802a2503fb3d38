#include "meld/bench/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace meld::bench {

using nlohmann::json;

double percentile(std::vector<double> sample, double pct) {
    if (sample.empty())
        return 0;
    std::sort(sample.begin(), sample.end());
    double rank = std::ceil(pct / 100.0 * static_cast<double>(sample.size()));
    std::size_t idx = rank < 1 ? 0 : static_cast<std::size_t>(rank) - 1;
    if (idx >= sample.size())
        idx = sample.size() - 1;
    return sample[idx];
}

void finalize_metrics(MetricsReport& report, std::vector<double> latencies_ms,
                      std::vector<double> modify_latencies_ms,
                      std::vector<double> read_latencies_ms) {
    report.committed_modify = modify_latencies_ms.size();
    report.committed_read = read_latencies_ms.size();
    if (report.duration > 0) {
        report.throughput_tps = static_cast<double>(report.committed) / report.duration;
        report.modify_tps = static_cast<double>(report.committed_modify) / report.duration;
        report.read_tps = static_cast<double>(report.committed_read) / report.duration;
    }
    if (!latencies_ms.empty()) {
        report.latency_avg_ms =
            std::accumulate(latencies_ms.begin(), latencies_ms.end(), 0.0) /
            static_cast<double>(latencies_ms.size());
        report.latency_p1_ms = percentile(latencies_ms, 1.0);
        report.latency_p99_ms = percentile(latencies_ms, 99.0);
    }
}

json MetricsReport::to_json() const {
    return json{{"application", application},
                {"duration", duration},
                {"submitted", submitted},
                {"committed", committed},
                {"failed", failed},
                {"in_flight", in_flight},
                {"committed_modify", committed_modify},
                {"committed_read", committed_read},
                {"throughput_tps", throughput_tps},
                {"modify_tps", modify_tps},
                {"read_tps", read_tps},
                {"latency_avg_ms", latency_avg_ms},
                {"latency_p1_ms", latency_p1_ms},
                {"latency_p99_ms", latency_p99_ms},
                {"per_second_committed", per_second_committed},
                {"failures_by_reason", failures_by_reason}};
}

MetricsReport MetricsReport::from_json(const json& j) {
    MetricsReport r;
    r.application = j.at("application").get<std::string>();
    r.duration = j.at("duration").get<double>();
    r.submitted = j.at("submitted").get<std::uint64_t>();
    r.committed = j.at("committed").get<std::uint64_t>();
    r.failed = j.at("failed").get<std::uint64_t>();
    r.in_flight = j.at("in_flight").get<std::uint64_t>();
    r.committed_modify = j.at("committed_modify").get<std::uint64_t>();
    r.committed_read = j.at("committed_read").get<std::uint64_t>();
    r.throughput_tps = j.at("throughput_tps").get<double>();
    r.modify_tps = j.at("modify_tps").get<double>();
    r.read_tps = j.at("read_tps").get<double>();
    r.latency_avg_ms = j.at("latency_avg_ms").get<double>();
    r.latency_p1_ms = j.at("latency_p1_ms").get<double>();
    r.latency_p99_ms = j.at("latency_p99_ms").get<double>();
    r.per_second_committed = j.at("per_second_committed").get<std::vector<std::uint64_t>>();
    r.failures_by_reason =
        j.at("failures_by_reason").get<std::map<std::string, std::uint64_t>>();
    return r;
}

MetricsReport average_reports(std::span<const MetricsReport> reports) {
    MetricsReport avg;
    if (reports.empty())
        return avg;
    avg.application = reports.front().application;
    avg.duration = reports.front().duration;
    double n = static_cast<double>(reports.size());

    std::size_t series_len = 0;
    for (const auto& r : reports) {
        avg.submitted += r.submitted;
        avg.committed += r.committed;
        avg.failed += r.failed;
        avg.in_flight += r.in_flight;
        avg.committed_modify += r.committed_modify;
        avg.committed_read += r.committed_read;
        avg.throughput_tps += r.throughput_tps / n;
        avg.modify_tps += r.modify_tps / n;
        avg.read_tps += r.read_tps / n;
        avg.latency_avg_ms += r.latency_avg_ms / n;
        avg.latency_p1_ms += r.latency_p1_ms / n;
        avg.latency_p99_ms += r.latency_p99_ms / n;
        series_len = std::max(series_len, r.per_second_committed.size());
        for (const auto& [reason, count] : r.failures_by_reason)
            avg.failures_by_reason[reason] += count;
    }
    avg.submitted /= reports.size();
    avg.committed /= reports.size();
    avg.failed /= reports.size();
    avg.in_flight /= reports.size();
    avg.committed_modify /= reports.size();
    avg.committed_read /= reports.size();

    avg.per_second_committed.assign(series_len, 0);
    for (std::size_t i = 0; i < series_len; ++i) {
        double sum = 0;
        for (const auto& r : reports)
            if (i < r.per_second_committed.size())
                sum += static_cast<double>(r.per_second_committed[i]);
        avg.per_second_committed[i] = static_cast<std::uint64_t>(std::llround(sum / n));
    }
    return avg;
}

void write_series_csv(const std::filesystem::path& path, const MetricsReport& report) {
    std::ofstream out(path);
    out << "second,committed\n";
    for (std::size_t i = 0; i < report.per_second_committed.size(); ++i)
        out << i << "," << report.per_second_committed[i] << "\n";
}

} // namespace meld::bench
