#pragma once

// Experiment layer: synthetic feeder generation, adopter sampling,
// individual-vs-distributed comparison runs and the voltage-band metrics.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "revs/admm.hpp"
#include "revs/csv.hpp"
#include "revs/errors.hpp"
#include "revs/net_model.hpp"
#include "revs/residence_opt.hpp"
#include "revs/rng.hpp"
#include "revs/tariff_load.hpp"

namespace revs {

enum class RunMode { Individual, Distributed, Both };

inline const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::Individual: return "individual";
        case RunMode::Distributed: return "distributed";
        case RunMode::Both: return "both";
    }
    return "?";
}

inline RunMode parse_run_mode(const std::string& s) {
    if (s == "individual") return RunMode::Individual;
    if (s == "distributed") return RunMode::Distributed;
    if (s == "both") return RunMode::Both;
    throw DataError("unknown mode '" + s + "' (expected individual|distributed|both)");
}

// Uniform sample without replacement of round(fraction * |community|)
// residences; deterministic per seed.
inline std::vector<int> sample_adopters(const std::vector<int>& community, double fraction,
                                        std::uint64_t seed) {
    if (community.empty()) throw DataError("sample_adopters: empty community");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw DataError("sample_adopters: adoption fraction must be in (0,1]");
    std::vector<int> pool = community;
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    const auto k = std::min(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size()))),
        pool.size());
    rng::Engine g(seed);
    return rng::sample_without_replacement(g, std::move(pool), k);
}

// Residence counts per interval in the undervoltage bands (p.u. voltage,
// i.e. sqrt of the squared-voltage model output):
//   band 0: u < 0.92, band 1: 0.92 <= u < 0.95, band 2: 0.95 <= u < 0.98.
struct ViolationBands {
    Eigen::MatrixXi counts;     // 3 x intervals
    Eigen::VectorXi in_limits;  // u >= 0.98

    static const std::array<const char*, 3>& labels() {
        static const std::array<const char*, 3> names{"lt_0.92", "0.92_to_0.95", "0.95_to_0.98"};
        return names;
    }
};

inline ViolationBands band_voltages(const Eigen::MatrixXd& v_squared,
                                    const std::vector<int>& residence_nodes) {
    const int T = static_cast<int>(v_squared.cols());
    ViolationBands out;
    out.counts = Eigen::MatrixXi::Zero(3, T);
    out.in_limits = Eigen::VectorXi::Zero(T);
    for (int node : residence_nodes) {
        for (int t = 0; t < T; ++t) {
            const double v = v_squared(node - 1, t);
            if (v < 0.0)
                throw SolverError("voltage model blow-up: squared voltage " + csv::fmt(v) +
                                  " at node " + std::to_string(node));
            const double u = std::sqrt(v);
            if (u < 0.92) out.counts(0, t)++;
            else if (u < 0.95) out.counts(1, t)++;
            else if (u < 0.98) out.counts(2, t)++;
            else out.in_limits(t)++;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic feeder generation

struct GenParams {
    int feeders = 2;
    int homes_per_transformer = 5;
    int depth = 3;  // trunk segments per feeder, one transformer each
    double r_primary_min = 0.008, r_primary_max = 0.015;    // per-unit, trunk edges
    double r_secondary_min = 0.002, r_secondary_max = 0.005;  // per-unit, drops
    double capacity_headroom = 2.0;  // capacity = headroom * peak base subtree flow
    double load_scale = 1.0;
    int total_homes = 0;  // 0 = feeders * depth * homes_per_transformer
    std::uint64_t seed = 0;
    double base_power_kw = 100.0;

    void validate() const {
        if (feeders < 1 || homes_per_transformer < 1 || depth < 1)
            throw DataError("generator: feeders, homes and depth must be positive");
        if (total_homes < 0) throw DataError("generator: negative home count");
        if (!(r_primary_min >= 0 && r_primary_max >= r_primary_min && r_secondary_min >= 0 &&
              r_secondary_max >= r_secondary_min))
            throw DataError("generator: bad resistance ranges");
        if (!(capacity_headroom > 0.0)) throw DataError("generator: headroom must be positive");
        if (!(load_scale > 0.0)) throw DataError("generator: load scale must be positive");
    }
};

struct GeneratedBundle {
    std::vector<NodeKind> kinds;
    std::vector<Edge> edges;
    std::vector<BaseLoadProfile> profiles;            // hour-of-day
    std::vector<std::vector<int>> feeder_communities;  // residence ids per feeder
    double base_power_kw = 100.0;

    DistributionNetwork network() const { return {kinds, edges, base_power_kw}; }
    std::vector<int> all_residences() const {
        std::vector<int> out;
        for (const auto& c : feeder_communities) out.insert(out.end(), c.begin(), c.end());
        std::sort(out.begin(), out.end());
        return out;
    }
};

// Typical residential day, kW at scale 1.0: overnight valley, morning bump,
// evening peak.
inline const std::array<double, 24>& diurnal_template_kw() {
    static const std::array<double, 24> shape{
        0.45, 0.40, 0.38, 0.38, 0.42, 0.55,   // 00-05
        0.90, 1.25, 1.10, 0.80, 0.70, 0.65,   // 06-11
        0.65, 0.60, 0.65, 0.75, 1.10, 1.60,   // 12-17
        2.00, 2.10, 1.80, 1.40, 0.95, 0.60};  // 18-23
    return shape;
}

// Radial feeder(s): substation -> auxiliary trunk chain; each trunk node
// carries one transformer serving a cluster of homes. Line capacities are
// sized from the generated base-load peaks.
inline GeneratedBundle generate_network(const GenParams& params) {
    params.validate();
    rng::Engine g(params.seed);

    GeneratedBundle bundle;
    bundle.base_power_kw = params.base_power_kw;
    bundle.kinds.push_back(NodeKind::Substation);
    const int home_cap = params.total_homes > 0
                             ? params.total_homes
                             : params.feeders * params.depth * params.homes_per_transformer;
    int homes_made = 0;
    int next_id = 1;

    auto add_node = [&](NodeKind kind, int parent, double resistance) {
        const int id = next_id++;
        bundle.kinds.push_back(kind);
        bundle.edges.push_back({parent, id, resistance, 1.0});  // capacity sized later
        return id;
    };

    for (int f = 0; f < params.feeders && homes_made < home_cap; ++f) {
        bundle.feeder_communities.emplace_back();
        int trunk_parent = 0;
        for (int d = 0; d < params.depth && homes_made < home_cap; ++d) {
            const int trunk =
                add_node(NodeKind::Auxiliary, trunk_parent,
                         rng::uniform(g, params.r_primary_min, params.r_primary_max));
            trunk_parent = trunk;
            const int xfmr =
                add_node(NodeKind::Transformer, trunk,
                         rng::uniform(g, params.r_secondary_min, params.r_secondary_max));
            for (int h = 0; h < params.homes_per_transformer && homes_made < home_cap; ++h) {
                const int home =
                    add_node(NodeKind::Residence, xfmr,
                             rng::uniform(g, params.r_secondary_min, params.r_secondary_max));
                ++homes_made;
                bundle.feeder_communities.back().push_back(home);

                BaseLoadProfile profile;
                profile.node = home;
                profile.p0_kw.resize(24);
                const double scale = rng::uniform(g, 0.7, 1.5) * params.load_scale;
                for (int hour = 0; hour < 24; ++hour) {
                    const double noise = rng::uniform(g, 0.85, 1.15);
                    profile.p0_kw(hour) = std::max(
                        0.05, diurnal_template_kw()[static_cast<std::size_t>(hour)] * scale * noise);
                }
                bundle.profiles.push_back(std::move(profile));
            }
        }
    }
    if (homes_made == 0) throw DataError("generator: no residences produced");

    // Peak base-load flow through every edge (ids are created parent-first,
    // so a reverse id sweep accumulates child subtrees before parents).
    const int n = static_cast<int>(bundle.edges.size());
    Eigen::MatrixXd subtree = Eigen::MatrixXd::Zero(n + 1, 24);
    for (const auto& profile : bundle.profiles) subtree.row(profile.node) = profile.p0_kw.transpose();
    for (int child = n; child >= 1; --child)
        subtree.row(bundle.edges[static_cast<std::size_t>(child - 1)].parent) += subtree.row(child);
    for (auto& e : bundle.edges) {
        const double peak = subtree.row(e.child).maxCoeff();
        e.capacity_kw = std::max(params.capacity_headroom * peak, 0.5);
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Community files

inline std::vector<int> load_community(const std::string& path, const DistributionNetwork& net) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw DataError(path + ": empty community file");
    if (csv::split(lines[0]) != csv::split("node_id"))
        throw DataError(path + ": expected header 'node_id'");
    std::vector<int> out;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::string ctx = path + " row " + std::to_string(r + 1);
        const int node = static_cast<int>(csv::to_long(lines[r], ctx));
        if (node < 1 || node >= net.node_count())
            throw DataError(ctx + ": unknown node id " + std::to_string(node));
        if (net.kind(node) != NodeKind::Residence)
            throw DataError(ctx + ": node " + std::to_string(node) + " is not a residence");
        out.push_back(node);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline void save_community(const std::vector<int>& nodes, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "node_id\n";
    std::vector<int> sorted = nodes;
    std::sort(sorted.begin(), sorted.end());
    for (int n : sorted) out << n << "\n";
}

// ---------------------------------------------------------------------------
// Comparison runs

// A fully prepared experiment: loaded inputs plus run parameters.
struct Scenario {
    DistributionNetwork net;
    std::vector<BaseLoadProfile> profiles;  // hour-of-day, all residences
    Tariff tariff;
    Horizon horizon;
    std::vector<int> community;
    double adoption_fraction = 0.9;
    std::vector<std::uint64_t> seeds;
    RunMode mode = RunMode::Both;
    EvSpec ev_template;  // window indices already horizon-aligned
    VoltageLimits limits;
    AdmmConfig admm;

    void validate() const {
        if (seeds.empty()) throw DataError("scenario: at least one seed required");
        if (!(adoption_fraction > 0.0 && adoption_fraction <= 1.0))
            throw DataError("scenario: adoption fraction must be in (0,1]");
        for (int node : community)
            if (net.kind(node) != NodeKind::Residence)
                throw DataError("scenario: community node " + std::to_string(node) +
                                " is not a residence");
        ev_template.validate(horizon.intervals);
        limits.validate();
        admm.validate();
    }
};

struct ModeRun {
    std::string mode;
    std::uint64_t seed = 0;
    std::vector<int> adopters;
    Eigen::MatrixXd p_kw;        // residences x intervals (horizon order)
    Eigen::MatrixXd v_squared;   // nodes x intervals
    Eigen::MatrixXd flow_kw;     // edges x intervals
    Eigen::MatrixXd loading_pct;
    ViolationBands bands;
    Eigen::VectorXd cost_usd;     // per residence
    Eigen::VectorXd ev_cost_usd;  // per residence (zero for non-adopters)
    bool converged = true;
    bool feasible = true;
    int iterations = 0;
    AdmmTrace trace;
    std::string error;  // non-empty when the run failed
};

struct BandAggregate {
    Eigen::MatrixXd mean;  // 3 x intervals
    Eigen::MatrixXi min;
    Eigen::MatrixXi max;
};

struct ComparisonReport {
    double adoption_fraction = 0.0;
    std::vector<std::uint64_t> seeds;
    std::vector<ModeRun> runs;
    std::map<std::string, BandAggregate> aggregates;  // keyed by mode name
};

namespace detail {

inline ModeRun evaluate_mode_run(const Scenario& sc, const Eigen::MatrixXd& res_cols,
                                 const std::string& mode, std::uint64_t seed,
                                 const std::vector<int>& adopters,
                                 const Eigen::MatrixXd& base_horizon, const Eigen::VectorXd& rate,
                                 const Eigen::MatrixXd& p_kw) {
    const auto& residences = sc.net.residences();
    const int H = static_cast<int>(residences.size());
    const int T = sc.horizon.intervals;
    const double base = sc.net.base_power_kw();

    ModeRun run;
    run.mode = mode;
    run.seed = seed;
    run.adopters = adopters;
    run.p_kw = p_kw;
    run.v_squared =
        Eigen::MatrixXd::Ones(sc.net.branch_count(), T) - (2.0 / base) * (res_cols * p_kw);
    run.flow_kw.resize(sc.net.branch_count(), T);
    run.loading_pct.resize(sc.net.branch_count(), T);
    for (int t = 0; t < T; ++t) {
        Eigen::VectorXd p_nodes = Eigen::VectorXd::Zero(sc.net.branch_count());
        for (int i = 0; i < H; ++i) p_nodes(residences[static_cast<std::size_t>(i)] - 1) = p_kw(i, t) / base;
        const EdgeFlows flows = edge_flows(sc.net, p_nodes);
        run.flow_kw.col(t) = flows.flow_kw;
        run.loading_pct.col(t) = flows.loading_pct;
    }
    run.bands = band_voltages(run.v_squared, residences);
    run.cost_usd.resize(H);
    run.ev_cost_usd.resize(H);
    for (int i = 0; i < H; ++i) {
        run.cost_usd(i) = energy_cost_usd(rate, p_kw.row(i).transpose());
        run.ev_cost_usd(i) =
            run.cost_usd(i) - energy_cost_usd(rate, base_horizon.row(i).transpose());
    }
    return run;
}

}  // namespace detail

// Runs the configured modes for every seed and aggregates the band counts.
// Per-seed solver failures are recorded on the run and do not stop the batch.
inline ComparisonReport run_comparison(const Scenario& sc) {
    sc.validate();
    const auto& residences = sc.net.residences();
    const int H = static_cast<int>(residences.size());
    const int T = sc.horizon.intervals;

    const SensitivityMatrix sens = build_sensitivity(sc.net);
    const Eigen::MatrixXd res_cols = detail::residence_columns(sens, residences);
    const Eigen::VectorXd rate = rotate_to_horizon(sc.tariff.rates, sc.horizon);

    std::map<int, int> residence_row;
    for (int i = 0; i < H; ++i) residence_row[residences[static_cast<std::size_t>(i)]] = i;

    Eigen::MatrixXd base_horizon(H, T);
    for (const auto& profile : sc.profiles) {
        const auto it = residence_row.find(profile.node);
        if (it == residence_row.end())
            throw DataError("scenario: profile for unknown residence " + std::to_string(profile.node));
        base_horizon.row(it->second) = rotate_to_horizon(profile.p0_kw, sc.horizon).transpose();
    }
    if (static_cast<int>(sc.profiles.size()) != H)
        throw DataError("scenario: expected one profile per residence");

    ComparisonReport report;
    report.adoption_fraction = sc.adoption_fraction;
    report.seeds = sc.seeds;

    const bool run_individual = sc.mode != RunMode::Distributed;
    const bool run_distributed = sc.mode != RunMode::Individual;

    for (const std::uint64_t seed : sc.seeds) {
        const std::vector<int> adopters = sample_adopters(sc.community, sc.adoption_fraction, seed);
        std::vector<std::optional<EvSpec>> specs(static_cast<std::size_t>(H));
        for (int node : adopters) specs[static_cast<std::size_t>(residence_row.at(node))] = sc.ev_template;

        if (run_individual) {
            ModeRun run;
            try {
                Eigen::MatrixXd p = base_horizon;
                for (int node : adopters) {
                    const int i = residence_row.at(node);
                    const ResidenceSolution sol =
                        solve_individual(base_horizon.row(i).transpose(), sc.ev_template, rate);
                    p.row(i) = sol.p_kw.transpose();
                }
                run = detail::evaluate_mode_run(sc, res_cols, "individual", seed, adopters,
                                                base_horizon, rate, p);
            } catch (const std::exception& e) {
                run.mode = "individual";
                run.seed = seed;
                run.adopters = adopters;
                run.error = e.what();
            }
            report.runs.push_back(std::move(run));
        }
        if (run_distributed) {
            ModeRun run;
            try {
                const ConsensusResult res =
                    run_admm(sc.net, base_horizon, specs, rate, sc.limits, sc.admm);
                run = detail::evaluate_mode_run(sc, res_cols, "distributed", seed, adopters,
                                                base_horizon, rate, res.p_final);
                run.converged = res.converged;
                run.feasible = res.feasible;
                run.iterations = res.iterations;
                run.trace = res.trace;
            } catch (const std::exception& e) {
                run.mode = "distributed";
                run.seed = seed;
                run.adopters = adopters;
                run.error = e.what();
            }
            report.runs.push_back(std::move(run));
        }
    }

    // Error-bar material: mean and min-max band counts across seeds.
    for (const char* mode : {"individual", "distributed"}) {
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, T);
        Eigen::MatrixXi mn = Eigen::MatrixXi::Constant(3, T, std::numeric_limits<int>::max());
        Eigen::MatrixXi mx = Eigen::MatrixXi::Constant(3, T, std::numeric_limits<int>::min());
        int count = 0;
        for (const auto& run : report.runs) {
            if (run.mode != mode || !run.error.empty()) continue;
            ++count;
            sum += run.bands.counts.cast<double>();
            mn = mn.cwiseMin(run.bands.counts);
            mx = mx.cwiseMax(run.bands.counts);
        }
        if (count > 0)
            report.aggregates[mode] = {sum / count, std::move(mn), std::move(mx)};
    }
    return report;
}

}  // namespace revs
