// Command-line front end: generate synthetic feeders, validate input
// bundles, run individual-vs-distributed comparisons, dump consensus traces
// and compare against the exhaustive reference on desk-scale instances.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 solver
// non-convergence.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "revs/revs.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

struct ScenarioOpts {
    std::string network, profiles, tariff, community;
    std::string mode = "both";
    std::vector<double> adoption{0.3, 0.6, 0.9};
    std::uint64_t seed = 0;
    int seed_count = 1;
    std::vector<std::uint64_t> seed_list;

    double kappa = 1.0;
    int max_iters = 500;
    double tol_primal = 1e-3;
    double tol_dual = 1e-3;
    int jobs = 1;
    bool constrain_residences_only = false;

    double ev_capacity = 20.0;
    double ev_charger = 4.8;
    double soc_init = 0.2;
    double soc_final = 0.9;
    int window_start = 16;
    int window_end = 5;
    bool window_inclusive_end = false;

    double base_power = 100.0;
    double vmin_pu = 0.95;
    double vmax_pu = 1.05;
};

void add_data_options(CLI::App* cmd, ScenarioOpts& o) {
    cmd->add_option("--network", o.network, "Network edge-list CSV")->required();
    cmd->add_option("--profiles", o.profiles, "Base load profile CSV")->required();
    cmd->add_option("--tariff", o.tariff, "Hourly tariff CSV")->required();
    cmd->add_option("--community", o.community,
                    "Community node-id CSV (default: every residence)");
    cmd->add_option("--base-power", o.base_power, "Per-unit power base in kW")
        ->capture_default_str();
}

void add_ev_options(CLI::App* cmd, ScenarioOpts& o) {
    cmd->add_option("--ev-capacity", o.ev_capacity, "EV battery capacity, kWh")->capture_default_str();
    cmd->add_option("--ev-charger", o.ev_charger, "EV charger rating, kW")->capture_default_str();
    cmd->add_option("--ev-soc-init", o.soc_init, "Initial state of charge")->capture_default_str();
    cmd->add_option("--ev-soc-final", o.soc_final, "Required final state of charge")
        ->capture_default_str();
    cmd->add_option("--ev-window-start", o.window_start, "Charging window opening hour")
        ->capture_default_str();
    cmd->add_option("--ev-window-end", o.window_end, "Charging window closing hour")
        ->capture_default_str();
    cmd->add_flag("--ev-window-inclusive-end", o.window_inclusive_end,
                  "Also allow the interval starting at the closing hour");
}

void add_solver_options(CLI::App* cmd, ScenarioOpts& o) {
    cmd->add_option("--kappa", o.kappa, "Consensus penalty (per-unit power scale)")
        ->capture_default_str();
    cmd->add_option("--max-iters", o.max_iters, "Consensus iteration cap")->capture_default_str();
    cmd->add_option("--tol-primal", o.tol_primal, "Consensus gap tolerance, kW")
        ->capture_default_str();
    cmd->add_option("--tol-dual", o.tol_dual, "Iterate change tolerance, kW")->capture_default_str();
    cmd->add_option("--jobs", o.jobs, "Parallel solves per iteration")->capture_default_str();
    cmd->add_flag("--constrain-residences-only", o.constrain_residences_only,
                  "Band only residence nodes in the operator step");
    cmd->add_option("--vmin-pu", o.vmin_pu, "Lower voltage limit, p.u.")->capture_default_str();
    cmd->add_option("--vmax-pu", o.vmax_pu, "Upper voltage limit, p.u.")->capture_default_str();
}

void add_seed_options(CLI::App* cmd, ScenarioOpts& o, bool multi) {
    cmd->add_option("--seed", o.seed, "Base RNG seed (randomness is always explicit)");
    if (multi) {
        cmd->add_option("--seeds", o.seed_count, "Number of seeds, base..base+N-1")
            ->capture_default_str();
        cmd->add_option("--seed-list", o.seed_list, "Explicit seed list (overrides --seed/--seeds)");
    }
}

std::vector<std::uint64_t> resolve_seeds(const CLI::App* cmd, const ScenarioOpts& o, bool multi) {
    if (multi && !o.seed_list.empty()) return o.seed_list;
    if (cmd->count("--seed") == 0)
        throw CLI::ValidationError("--seed", "a seed is required; randomness must be explicit");
    std::vector<std::uint64_t> seeds;
    const int n = multi ? std::max(1, o.seed_count) : 1;
    for (int i = 0; i < n; ++i) seeds.push_back(o.seed + static_cast<std::uint64_t>(i));
    return seeds;
}

struct LoadedBundle {
    revs::DistributionNetwork net;
    std::vector<revs::BaseLoadProfile> profiles;
    revs::Tariff tariff;
    std::vector<int> community;
    revs::Horizon horizon;
    revs::EvSpec ev;
    revs::VoltageLimits limits;
};

LoadedBundle load_bundle(const ScenarioOpts& o) {
    LoadedBundle b{revs::load_network(o.network, o.base_power),
                   {},
                   {},
                   {},
                   revs::Horizon{o.window_start, 24},
                   {},
                   revs::VoltageLimits::from_pu(o.vmin_pu, o.vmax_pu)};
    b.profiles = revs::load_profiles(o.profiles, b.net);
    b.tariff = revs::load_tariff(o.tariff);
    b.community = o.community.empty() ? b.net.residences() : revs::load_community(o.community, b.net);
    const auto [first, last] =
        revs::ev_window_from_hours(o.window_start, o.window_end, b.horizon, o.window_inclusive_end);
    b.ev = revs::EvSpec{o.ev_capacity, o.ev_charger, first, last, o.soc_init, o.soc_final};
    b.ev.validate(b.horizon.intervals);
    b.limits.validate();
    return b;
}

revs::Scenario make_scenario(const ScenarioOpts& o, const LoadedBundle& b, double fraction,
                             std::vector<std::uint64_t> seeds) {
    revs::Scenario sc{b.net,       b.profiles, b.tariff, b.horizon, b.community,
                      fraction,    std::move(seeds), revs::parse_run_mode(o.mode),
                      b.ev,        b.limits,   {}};
    sc.admm.kappa = o.kappa;
    sc.admm.max_iters = o.max_iters;
    sc.admm.tol_primal_kw = o.tol_primal;
    sc.admm.tol_dual_kw = o.tol_dual;
    sc.admm.jobs = o.jobs;
    sc.admm.constrain_all_nodes = !o.constrain_residences_only;
    return sc;
}

nlohmann::json config_echo(const ScenarioOpts& o, const std::vector<std::uint64_t>& seeds) {
    nlohmann::json j;
    j["network"] = o.network;
    j["profiles"] = o.profiles;
    j["tariff"] = o.tariff;
    j["community"] = o.community;
    j["mode"] = o.mode;
    j["adoption"] = o.adoption;
    j["seeds"] = seeds;
    j["kappa"] = o.kappa;
    j["max_iters"] = o.max_iters;
    j["tol_primal_kw"] = o.tol_primal;
    j["tol_dual_kw"] = o.tol_dual;
    j["jobs"] = o.jobs;
    j["constrain_all_nodes"] = !o.constrain_residences_only;
    j["ev"] = {{"capacity_kwh", o.ev_capacity},
               {"charger_kw", o.ev_charger},
               {"soc_init", o.soc_init},
               {"soc_final", o.soc_final},
               {"window_start_hour", o.window_start},
               {"window_end_hour", o.window_end},
               {"window_inclusive_end", o.window_inclusive_end}};
    j["base_power_kw"] = o.base_power;
    j["vmin_pu"] = o.vmin_pu;
    j["vmax_pu"] = o.vmax_pu;
    return j;
}

// ---------------------------------------------------------------------------

struct GenerateOpts {
    std::string out;
    int feeders = 2;
    int homes = 0;  // total residences; 0 = feeders*depth*homes_per_transformer
    int homes_per_transformer = 5;
    int depth = 0;  // 0 = derive from --homes
    double headroom = 2.0;
    double r_primary_min = 0.008, r_primary_max = 0.015;
    double r_secondary_min = 0.002, r_secondary_max = 0.005;
    double load_scale = 1.0;
    double base_power = 100.0;
    std::uint64_t seed = 0;
};

int cmd_generate(const GenerateOpts& g) {
    revs::GenParams params;
    params.feeders = g.feeders;
    params.homes_per_transformer = g.homes_per_transformer;
    params.capacity_headroom = g.headroom;
    params.r_primary_min = g.r_primary_min;
    params.r_primary_max = g.r_primary_max;
    params.r_secondary_min = g.r_secondary_min;
    params.r_secondary_max = g.r_secondary_max;
    params.load_scale = g.load_scale;
    params.base_power_kw = g.base_power;
    params.seed = g.seed;
    if (g.depth > 0) {
        params.depth = g.depth;
        params.total_homes = g.homes;
    } else if (g.homes > 0) {
        const int per_feeder_cluster = g.feeders * g.homes_per_transformer;
        params.depth = (g.homes + per_feeder_cluster - 1) / per_feeder_cluster;
        params.total_homes = g.homes;
    }

    const revs::GeneratedBundle bundle = revs::generate_network(params);
    const revs::DistributionNetwork net = bundle.network();

    const std::filesystem::path out(g.out);
    std::filesystem::create_directories(out);
    revs::save_network(net, (out / "network.csv").string());
    revs::save_profiles(bundle.profiles, (out / "profiles.csv").string());
    revs::save_tariff(revs::default_tariff(), (out / "tariff.csv").string());
    revs::save_community(bundle.all_residences(), (out / "community_all.csv").string());
    for (std::size_t f = 0; f < bundle.feeder_communities.size(); ++f)
        revs::save_community(bundle.feeder_communities[f],
                             (out / ("community_f" + std::to_string(f + 1) + ".csv")).string());

    int transformers = 0;
    for (int i = 1; i < net.node_count(); ++i)
        if (net.kind(i) == revs::NodeKind::Transformer) ++transformers;
    std::cout << "generated network: " << net.node_count() << " nodes, " << net.branch_count()
              << " edges, " << net.residences().size() << " residences, " << transformers
              << " transformers, " << bundle.feeder_communities.size() << " feeder(s)\n"
              << "wrote " << (out / "network.csv").string() << ", profiles.csv, tariff.csv, "
              << "community_all.csv and per-feeder community files\n";
    return kExitOk;
}

int cmd_run(const CLI::App* cmd, const ScenarioOpts& o, const std::string& out_dir) {
    const auto seeds = resolve_seeds(cmd, o, true);
    const LoadedBundle bundle = load_bundle(o);

    std::vector<std::pair<double, revs::ComparisonReport>> reports;
    for (const double fraction : o.adoption) {
        const revs::Scenario sc = make_scenario(o, bundle, fraction, seeds);
        reports.emplace_back(fraction, revs::run_comparison(sc));
    }
    revs::write_report_tree(reports, bundle.net, bundle.horizon, config_echo(o, seeds), out_dir);
    std::cout << "report written to " << out_dir << "\n";

    int failures = 0;
    for (const auto& [fraction, report] : reports) {
        for (const auto& run : report.runs) {
            if (!run.error.empty()) {
                ++failures;
                std::cerr << "run failed (adoption " << fraction << ", mode " << run.mode
                          << ", seed " << run.seed << "): " << run.error << "\n";
            } else if (run.mode == "distributed" && !run.converged) {
                ++failures;
                std::cerr << "no consensus (adoption " << fraction << ", seed " << run.seed
                          << "): " << run.iterations << " iterations, "
                          << (run.feasible ? "best feasible iterate reported"
                                           : "no feasible iterate found")
                          << "\n";
            }
        }
    }
    return failures == 0 ? kExitOk : kExitSolver;
}

// Builds the per-residence spec slots for one adopter set.
std::vector<std::optional<revs::EvSpec>> specs_for(const LoadedBundle& b,
                                                   const std::vector<int>& adopters) {
    const auto& residences = b.net.residences();
    std::vector<std::optional<revs::EvSpec>> specs(residences.size());
    for (std::size_t i = 0; i < residences.size(); ++i)
        if (std::binary_search(adopters.begin(), adopters.end(), residences[i])) specs[i] = b.ev;
    return specs;
}

Eigen::MatrixXd base_matrix(const LoadedBundle& b) {
    const auto& residences = b.net.residences();
    Eigen::MatrixXd base(residences.size(), b.horizon.intervals);
    for (const auto& profile : b.profiles) {
        const auto it = std::lower_bound(residences.begin(), residences.end(), profile.node);
        base.row(it - residences.begin()) =
            revs::rotate_to_horizon(profile.p0_kw, b.horizon).transpose();
    }
    return base;
}

int cmd_trace(const CLI::App* cmd, const ScenarioOpts& o, double fraction,
              const std::string& out_path) {
    const auto seeds = resolve_seeds(cmd, o, false);
    const LoadedBundle bundle = load_bundle(o);
    const auto adopters = revs::sample_adopters(bundle.community, fraction, seeds[0]);
    const Eigen::VectorXd rate = revs::rotate_to_horizon(bundle.tariff.rates, bundle.horizon);

    revs::AdmmConfig cfg;
    cfg.kappa = o.kappa;
    cfg.max_iters = o.max_iters;
    cfg.tol_primal_kw = o.tol_primal;
    cfg.tol_dual_kw = o.tol_dual;
    cfg.jobs = o.jobs;
    cfg.constrain_all_nodes = !o.constrain_residences_only;

    const revs::ConsensusResult res = revs::run_admm(bundle.net, base_matrix(bundle),
                                                     specs_for(bundle, adopters), rate,
                                                     bundle.limits, cfg);
    if (out_path.empty() || out_path == "-") {
        revs::write_trace_csv(res.trace, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) throw revs::DataError("cannot write " + out_path);
        revs::write_trace_csv(res.trace, out);
        std::cout << "trace written to " << out_path << "\n";
    }
    std::cerr << (res.converged ? "consensus reached" : "no consensus") << " after "
              << res.iterations << " iteration(s); total cost $" << revs::csv::fmt(res.total_cost_usd)
              << (res.feasible ? "" : "; WARNING: final schedule violates the voltage band") << "\n";
    return res.converged ? kExitOk : kExitSolver;
}

int cmd_compare(const CLI::App* cmd, const ScenarioOpts& o, double fraction,
                double max_combinations, const std::string& out_path) {
    const auto seeds = resolve_seeds(cmd, o, false);
    const LoadedBundle bundle = load_bundle(o);
    const auto adopters = revs::sample_adopters(bundle.community, fraction, seeds[0]);
    const Eigen::VectorXd rate = revs::rotate_to_horizon(bundle.tariff.rates, bundle.horizon);
    const auto specs = specs_for(bundle, adopters);
    const Eigen::MatrixXd base = base_matrix(bundle);

    revs::AdmmConfig cfg;
    cfg.kappa = o.kappa;
    cfg.max_iters = o.max_iters;
    cfg.tol_primal_kw = o.tol_primal;
    cfg.tol_dual_kw = o.tol_dual;
    cfg.jobs = o.jobs;
    cfg.constrain_all_nodes = !o.constrain_residences_only;

    const revs::ConsensusResult admm =
        revs::run_admm(bundle.net, base, specs, rate, bundle.limits, cfg);
    const revs::CentralizedResult central =
        revs::centralized_oracle(bundle.net, base, specs, rate, bundle.limits, max_combinations);
    if (!central.feasible) {
        std::cerr << "exhaustive search found no voltage-feasible joint schedule\n";
        return kExitData;
    }

    const auto& residences = bundle.net.residences();
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw revs::DataError("cannot write " + out_path);
        file << "node,cost_consensus_usd,cost_exhaustive_usd,deviation_pct\n";
    }
    std::cout << "node  consensus($)  exhaustive($)  deviation(%)\n";
    int over5 = 0, over20 = 0;
    for (int node : adopters) {
        const auto it = std::lower_bound(residences.begin(), residences.end(), node);
        const auto i = static_cast<Eigen::Index>(it - residences.begin());
        const double ca = admm.residence_costs_usd(i);
        const double co = central.residence_costs_usd(i);
        const double dev = std::abs(ca - co) / co * 100.0;
        if (dev > 5.0) ++over5;
        if (dev > 20.0) ++over20;
        std::cout << node << "  " << revs::csv::fmt(ca) << "  " << revs::csv::fmt(co) << "  "
                  << revs::csv::fmt(dev) << "\n";
        if (file.is_open())
            file << node << ',' << revs::csv::fmt(ca) << ',' << revs::csv::fmt(co) << ','
                 << revs::csv::fmt(dev) << "\n";
    }
    std::cout << "totals: consensus $" << revs::csv::fmt(admm.total_cost_usd) << ", exhaustive $"
              << revs::csv::fmt(central.total_cost_usd) << " over "
              << revs::csv::fmt(central.combinations) << " joint schedules; " << over5
              << " adopter(s) above 5% deviation\n";
    if (over20 > 0) std::cout << "FLAG: " << over20 << " adopter(s) above 20% deviation\n";
    if (!admm.converged)
        std::cerr << "note: consensus loop did not converge; "
                  << (admm.feasible ? "best feasible iterate compared" : "no feasible iterate found")
                  << "\n";
    return admm.feasible ? kExitOk : kExitSolver;
}

int cmd_validate(const ScenarioOpts& o) {
    int failed = 0;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
        if (!ok) ++failed;
    };
    for (const auto& [label, path] : {std::pair<std::string, std::string>{"network", o.network},
                                      {"profiles", o.profiles},
                                      {"tariff", o.tariff}})
        if (!std::filesystem::exists(path))
            throw revs::DataError(label + " file does not exist: " + path);
    if (!o.community.empty() && !std::filesystem::exists(o.community))
        throw revs::DataError("community file does not exist: " + o.community);

    std::optional<revs::DistributionNetwork> net;
    try {
        net.emplace(revs::load_network(o.network, o.base_power));
        report("network-tree", true,
               std::to_string(net->node_count()) + " nodes, " + std::to_string(net->branch_count()) +
                   " edges, " + std::to_string(net->residences().size()) + " residences");
    } catch (const std::exception& e) {
        report("network-tree", false, e.what());
    }
    try {
        revs::load_tariff(o.tariff);
        report("tariff", true, "24 hourly rates, all positive");
    } catch (const std::exception& e) {
        report("tariff", false, e.what());
    }
    if (net) {
        try {
            const auto profiles = revs::load_profiles(o.profiles, *net);
            report("profile-coverage", true,
                   std::to_string(profiles.size()) + " residence profiles, all nonnegative");
        } catch (const std::exception& e) {
            report("profile-coverage", false, e.what());
        }
        if (!o.community.empty()) {
            try {
                const auto community = revs::load_community(o.community, *net);
                report("community", true, std::to_string(community.size()) + " residence nodes");
            } catch (const std::exception& e) {
                report("community", false, e.what());
            }
        }
    } else {
        std::cout << "[SKIP] profile-coverage: network unavailable\n";
        if (!o.community.empty()) std::cout << "[SKIP] community: network unavailable\n";
    }
    try {
        const revs::Horizon hz{o.window_start, 24};
        const auto [first, last] =
            revs::ev_window_from_hours(o.window_start, o.window_end, hz, o.window_inclusive_end);
        revs::EvSpec ev{o.ev_capacity, o.ev_charger, first, last, o.soc_init, o.soc_final};
        ev.validate(hz.intervals);
        report("ev-feasibility", true,
               std::to_string(ev.min_on_intervals()) + " required charging interval(s) within a " +
                   std::to_string(ev.window_length()) + "-interval window");
    } catch (const std::exception& e) {
        report("ev-feasibility", false, e.what());
    }
    std::cout << (failed == 0 ? "all checks passed\n"
                              : std::to_string(failed) + " check(s) failed\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed EV charge scheduling for radial distribution networks"};
    app.require_subcommand(1);

    GenerateOpts gen;
    CLI::App* generate = app.add_subcommand("generate", "Generate a synthetic feeder bundle");
    generate->add_option("--out", gen.out, "Output directory")->required();
    generate->add_option("--seed", gen.seed, "RNG seed")->required();
    generate->add_option("--feeders", gen.feeders, "Feeder count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    generate->add_option("--homes", gen.homes, "Total residence count")->check(CLI::PositiveNumber);
    generate->add_option("--homes-per-transformer", gen.homes_per_transformer,
                         "Residences per transformer")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    generate->add_option("--depth", gen.depth, "Trunk segments per feeder")->check(CLI::PositiveNumber);
    generate->add_option("--headroom", gen.headroom, "Capacity headroom over peak base flow")
        ->capture_default_str();
    generate->add_option("--r-primary-min", gen.r_primary_min, "Trunk resistance lower bound, p.u.")
        ->capture_default_str();
    generate->add_option("--r-primary-max", gen.r_primary_max, "Trunk resistance upper bound, p.u.")
        ->capture_default_str();
    generate->add_option("--r-secondary-min", gen.r_secondary_min, "Drop resistance lower bound, p.u.")
        ->capture_default_str();
    generate->add_option("--r-secondary-max", gen.r_secondary_max, "Drop resistance upper bound, p.u.")
        ->capture_default_str();
    generate->add_option("--load-scale", gen.load_scale, "Base load scaling factor")
        ->capture_default_str();
    generate->add_option("--base-power", gen.base_power, "Per-unit power base, kW")
        ->capture_default_str();

    ScenarioOpts run_opts;
    std::string run_out;
    CLI::App* run = app.add_subcommand("run", "Run an individual-vs-distributed comparison");
    run->set_config("--config", "", "Read options from a config file")->envname("REVS_CONFIG");
    add_data_options(run, run_opts);
    add_ev_options(run, run_opts);
    add_solver_options(run, run_opts);
    add_seed_options(run, run_opts, true);
    run->add_option("--out", run_out, "Report output directory")->required();
    run->add_option("--mode", run_opts.mode, "individual|distributed|both")->capture_default_str();
    run->add_option("--adoption", run_opts.adoption, "Adoption fractions in (0,1]")
        ->capture_default_str();

    ScenarioOpts trace_opts;
    double trace_adoption = 0.9;
    std::string trace_out;
    CLI::App* trace = app.add_subcommand("trace", "Dump the consensus iteration trace for one run");
    trace->set_config("--config", "", "Read options from a config file")->envname("REVS_CONFIG");
    add_data_options(trace, trace_opts);
    add_ev_options(trace, trace_opts);
    add_solver_options(trace, trace_opts);
    add_seed_options(trace, trace_opts, false);
    trace->add_option("--adoption", trace_adoption, "Adoption fraction")->capture_default_str();
    trace->add_option("--out", trace_out, "Trace CSV path ('-' for stdout)");

    ScenarioOpts cmp_opts;
    double cmp_adoption = 1.0;
    double cmp_max_combinations = 1e7;
    std::string cmp_out;
    CLI::App* compare =
        app.add_subcommand("compare", "Compare the consensus result against exhaustive search");
    compare->set_config("--config", "", "Read options from a config file")->envname("REVS_CONFIG");
    add_data_options(compare, cmp_opts);
    add_ev_options(compare, cmp_opts);
    add_solver_options(compare, cmp_opts);
    add_seed_options(compare, cmp_opts, false);
    compare->add_option("--adoption", cmp_adoption, "Adoption fraction")->capture_default_str();
    compare->add_option("--max-combinations", cmp_max_combinations,
                        "Joint-schedule enumeration limit")
        ->capture_default_str();
    compare->add_option("--out", cmp_out, "Deviation CSV path");

    ScenarioOpts val_opts;
    CLI::App* validate = app.add_subcommand("validate", "Check an input bundle");
    add_data_options(validate, val_opts);
    add_ev_options(validate, val_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (generate->parsed()) return cmd_generate(gen);
        if (run->parsed()) return cmd_run(run, run_opts, run_out);
        if (trace->parsed()) return cmd_trace(trace, trace_opts, trace_adoption, trace_out);
        if (compare->parsed())
            return cmd_compare(compare, cmp_opts, cmp_adoption, cmp_max_combinations, cmp_out);
        if (validate->parsed()) return cmd_validate(val_opts);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const revs::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const revs::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
