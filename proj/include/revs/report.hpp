#pragma once

// Plot-ready report output: long-format CSV tables per adoption level plus a
// machine-readable summary.json. Output is a pure function of the inputs so
// identical runs produce byte-identical directories.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revs/csv.hpp"
#include "revs/errors.hpp"
#include "revs/scenario.hpp"

namespace revs {

inline std::string adoption_dir_name(double fraction) {
    return "adoption_" + std::to_string(static_cast<int>(std::llround(fraction * 100.0)));
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

}  // namespace detail

// voltages.csv: one row per (mode, seed, node, interval).
inline void write_voltages_csv(const ComparisonReport& report, const DistributionNetwork& net,
                               const Horizon& hz, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "mode,seed,node,kind,t,hour,v_squared,v_pu\n";
    for (const auto& run : report.runs) {
        if (!run.error.empty()) continue;
        for (int node = 1; node < net.node_count(); ++node) {
            for (int t = 0; t < hz.intervals; ++t) {
                const double v = run.v_squared(node - 1, t);
                out << run.mode << ',' << run.seed << ',' << node << ',' << to_string(net.kind(node))
                    << ',' << t << ',' << hz.hour_of(t) << ',' << csv::fmt(v) << ','
                    << csv::fmt(std::sqrt(std::max(v, 0.0))) << "\n";
            }
        }
    }
}

inline void write_edge_flows_csv(const ComparisonReport& report, const DistributionNetwork& net,
                                 const Horizon& hz, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "mode,seed,parent,child,t,hour,flow_kw,capacity_kw,loading_pct\n";
    for (const auto& run : report.runs) {
        if (!run.error.empty()) continue;
        for (std::size_t e = 0; e < net.edges().size(); ++e) {
            const Edge& edge = net.edges()[e];
            for (int t = 0; t < hz.intervals; ++t) {
                out << run.mode << ',' << run.seed << ',' << edge.parent << ',' << edge.child << ','
                    << t << ',' << hz.hour_of(t) << ','
                    << csv::fmt(run.flow_kw(static_cast<Eigen::Index>(e), t)) << ','
                    << csv::fmt(edge.capacity_kw) << ','
                    << csv::fmt(run.loading_pct(static_cast<Eigen::Index>(e), t)) << "\n";
            }
        }
    }
}

// bands.csv: per-seed counts as columns plus mean/min/max across seeds.
inline void write_bands_csv(const ComparisonReport& report, const Horizon& hz,
                            const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "mode,t,hour,band";
    for (const auto seed : report.seeds) out << ",s" << seed;
    out << ",mean,min,max\n";
    for (const char* mode : {"individual", "distributed"}) {
        const auto agg = report.aggregates.find(mode);
        if (agg == report.aggregates.end()) continue;
        for (int t = 0; t < hz.intervals; ++t) {
            for (int b = 0; b < 3; ++b) {
                out << mode << ',' << t << ',' << hz.hour_of(t) << ','
                    << ViolationBands::labels()[static_cast<std::size_t>(b)];
                for (const auto seed : report.seeds) {
                    bool wrote = false;
                    for (const auto& run : report.runs) {
                        if (run.mode == mode && run.seed == seed && run.error.empty()) {
                            out << ',' << run.bands.counts(b, t);
                            wrote = true;
                            break;
                        }
                    }
                    if (!wrote) out << ',';
                }
                out << ',' << csv::fmt(agg->second.mean(b, t)) << ',' << agg->second.min(b, t) << ','
                    << agg->second.max(b, t) << "\n";
            }
        }
    }
}

inline void write_costs_csv(const ComparisonReport& report, const DistributionNetwork& net,
                            const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "mode,seed,node,adopter,cost_usd,ev_cost_usd\n";
    const auto& residences = net.residences();
    for (const auto& run : report.runs) {
        if (!run.error.empty()) continue;
        for (std::size_t i = 0; i < residences.size(); ++i) {
            const int node = residences[i];
            const bool adopter =
                std::binary_search(run.adopters.begin(), run.adopters.end(), node);
            out << run.mode << ',' << run.seed << ',' << node << ',' << (adopter ? 1 : 0) << ','
                << csv::fmt(run.cost_usd(static_cast<Eigen::Index>(i))) << ','
                << csv::fmt(run.ev_cost_usd(static_cast<Eigen::Index>(i))) << "\n";
        }
    }
}

inline void write_scenario_trace_csv(const ComparisonReport& report,
                                     const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "seed,iter,primal_residual,dual_residual,total_cost\n";
    for (const auto& run : report.runs) {
        if (run.mode != "distributed" || !run.error.empty()) continue;
        for (const auto& rec : run.trace.records)
            out << run.seed << ',' << rec.iter << ',' << csv::fmt(rec.primal_residual_kw) << ','
                << csv::fmt(rec.dual_residual_kw) << ',' << csv::fmt(rec.total_cost_usd) << "\n";
    }
}

inline nlohmann::json report_summary_json(const ComparisonReport& report) {
    nlohmann::json j;
    j["adoption_fraction"] = report.adoption_fraction;
    j["seeds"] = report.seeds;
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : report.runs) {
        nlohmann::json r;
        r["mode"] = run.mode;
        r["seed"] = run.seed;
        r["adopters"] = run.adopters;
        if (!run.error.empty()) {
            r["error"] = run.error;
            runs.push_back(std::move(r));
            continue;
        }
        r["converged"] = run.converged;
        r["feasible"] = run.feasible;
        r["iterations"] = run.iterations;
        r["total_cost_usd"] = run.cost_usd.sum();
        r["worst_voltage_pu"] = std::sqrt(std::max(run.v_squared.minCoeff(), 0.0));
        r["max_loading_pct"] = run.loading_pct.size() > 0 ? run.loading_pct.maxCoeff() : 0.0;
        nlohmann::json bands;
        for (int b = 0; b < 3; ++b) {
            int total = 0;
            for (int t = 0; t < run.bands.counts.cols(); ++t) total += run.bands.counts(b, t);
            bands[ViolationBands::labels()[static_cast<std::size_t>(b)]] = total;
        }
        r["band_totals"] = std::move(bands);
        runs.push_back(std::move(r));
    }
    j["runs"] = std::move(runs);
    return j;
}

// Writes the five tables for one adoption level into dir.
inline void write_report_tables(const ComparisonReport& report, const DistributionNetwork& net,
                                const Horizon& hz, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_voltages_csv(report, net, hz, dir / "voltages.csv");
    write_edge_flows_csv(report, net, hz, dir / "edge_flows.csv");
    write_bands_csv(report, hz, dir / "bands.csv");
    write_costs_csv(report, net, dir / "costs.csv");
    write_scenario_trace_csv(report, dir / "trace.csv");
}

// Full report tree: one subdirectory per adoption level plus summary.json.
inline void write_report_tree(const std::vector<std::pair<double, ComparisonReport>>& reports,
                              const DistributionNetwork& net, const Horizon& hz,
                              const nlohmann::json& config_echo,
                              const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json summary;
    summary["config"] = config_echo;
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& [fraction, report] : reports) {
        const std::string dir_name = adoption_dir_name(fraction);
        write_report_tables(report, net, hz, out_dir / dir_name);
        nlohmann::json level = report_summary_json(report);
        level["directory"] = dir_name;
        levels.push_back(std::move(level));
    }
    summary["adoption_levels"] = std::move(levels);
    auto out = detail::open_out(out_dir / "summary.json");
    out << summary.dump(2) << "\n";
}

}  // namespace revs
