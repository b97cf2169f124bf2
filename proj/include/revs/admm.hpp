#pragma once

// Consensus coordinator. Each iteration runs the operator step and all
// residence steps simultaneously against iteration-l data (Jacobi style),
// then applies the dual update
//
//   gamma[l+1] = gamma[l] + kappa/2 (ptilde[l+1] - p[l+1]).
//
// With binary charging decisions the iterates may cycle instead of reaching
// exact consensus; non-convergence is a reported outcome, and the
// best voltage-feasible residence-side iterate (smallest consensus gap) is
// returned in that case. The authoritative schedule is always the
// residence-side, integer-feasible one, and voltages are recomputed from it.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revs/csv.hpp"
#include "revs/errors.hpp"
#include "revs/net_model.hpp"
#include "revs/operator_opt.hpp"
#include "revs/parallel.hpp"
#include "revs/residence_opt.hpp"
#include "revs/tariff_load.hpp"

namespace revs {

struct AdmmConfig {
    double kappa = 1.0;          // penalty, per-unit power scale
    int max_iters = 500;
    double tol_primal_kw = 1e-3;  // consensus gap |ptilde - p|_inf
    double tol_dual_kw = 1e-3;    // iterate change |p[l+1] - p[l]|_inf
    int jobs = 1;
    bool record_iterates = false;     // keep full trajectories in the trace
    bool constrain_all_nodes = true;  // operator bands every node, not just residences
    PgdOptions inner;

    void validate() const {
        if (!(kappa > 0.0)) throw DataError("admm: kappa must be positive");
        if (max_iters < 1) throw DataError("admm: max_iters must be >= 1");
        if (!(tol_primal_kw > 0.0 && tol_dual_kw > 0.0))
            throw DataError("admm: tolerances must be positive");
    }
};

// One direction of the per-iteration exchange. The payload carries node ids
// and power trajectories only; load parameters and topology never leave
// their owner.
struct TrajectoryMessage {
    int iter = 0;
    std::string direction;  // "operator_to_residences" | "residences_to_operator"
    std::vector<int> nodes;
    Eigen::MatrixXd p_kw;   // one row per node
};

inline nlohmann::json to_json(const TrajectoryMessage& msg) {
    nlohmann::json payload = nlohmann::json::array();
    for (std::size_t i = 0; i < msg.nodes.size(); ++i) {
        nlohmann::json row;
        row["node"] = msg.nodes[i];
        std::vector<double> traj(static_cast<std::size_t>(msg.p_kw.cols()));
        for (Eigen::Index t = 0; t < msg.p_kw.cols(); ++t)
            traj[static_cast<std::size_t>(t)] = msg.p_kw(static_cast<Eigen::Index>(i), t);
        row["p_kw"] = traj;
        payload.push_back(std::move(row));
    }
    return nlohmann::json{{"iter", msg.iter}, {"direction", msg.direction}, {"payload", std::move(payload)}};
}

struct AdmmIterationRecord {
    int iter = 0;
    double primal_residual_kw = 0.0;
    double dual_residual_kw = 0.0;
    double total_cost_usd = 0.0;
    std::size_t payload_bytes = 0;
};

struct AdmmTrace {
    std::vector<AdmmIterationRecord> records;
    std::vector<Eigen::VectorXd> residence_costs;  // per iteration, per residence
    // Populated only when AdmmConfig::record_iterates is set.
    std::vector<Eigen::MatrixXd> p_iterates;
    std::vector<Eigen::MatrixXd> p_tilde_iterates;
    std::vector<Eigen::MatrixXd> gamma_iterates;
};

inline void write_trace_csv(const AdmmTrace& trace, std::ostream& out) {
    out << "iter,primal_residual,dual_residual,total_cost\n";
    for (const auto& r : trace.records)
        out << r.iter << ',' << csv::fmt(r.primal_residual_kw) << ',' << csv::fmt(r.dual_residual_kw)
            << ',' << csv::fmt(r.total_cost_usd) << "\n";
}

struct ConsensusResult {
    Eigen::MatrixXd p_final;  // residences x intervals, kW, residence side
    std::vector<std::optional<ChargeSchedule>> schedules;  // empty for non-adopters
    bool converged = false;
    bool feasible = false;    // returned schedule satisfies the voltage band
    int iterations = 0;
    double total_cost_usd = 0.0;
    Eigen::VectorXd residence_costs_usd;
    Eigen::MatrixXd v_squared;  // all non-substation nodes x intervals
    AdmmTrace trace;
};

inline Eigen::MatrixXd dual_update(const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& p_tilde_next,
                                   const Eigen::MatrixXd& p_next, double kappa) {
    if (gamma.rows() != p_tilde_next.rows() || gamma.cols() != p_tilde_next.cols() ||
        gamma.rows() != p_next.rows() || gamma.cols() != p_next.cols())
        throw DataError("dual update: shape mismatch");
    return gamma + 0.5 * kappa * (p_tilde_next - p_next);
}

namespace detail {

// Sensitivity columns for the residence nodes, all network rows.
inline Eigen::MatrixXd residence_columns(const SensitivityMatrix& sens,
                                         const std::vector<int>& residences) {
    Eigen::MatrixXd cols(sens.R.rows(), static_cast<Eigen::Index>(residences.size()));
    for (std::size_t j = 0; j < residences.size(); ++j)
        cols.col(static_cast<Eigen::Index>(j)) = sens.R.col(residences[j] - 1);
    return cols;
}

inline bool within_band(const Eigen::MatrixXd& v_sq, const VoltageLimits& limits) {
    if (v_sq.size() == 0) return true;
    return v_sq.minCoeff() >= limits.alpha && v_sq.maxCoeff() <= limits.beta;
}

}  // namespace detail

// base_load_kw: residences x intervals, horizon-aligned, rows ordered like
// net.residences(). specs: one entry per residence; nullopt means the
// residence has no EV and its trajectory stays at the base load.
inline ConsensusResult run_admm(const DistributionNetwork& net, const Eigen::MatrixXd& base_load_kw,
                                const std::vector<std::optional<EvSpec>>& specs,
                                const Eigen::VectorXd& rate, const VoltageLimits& limits,
                                const AdmmConfig& cfg = {}) {
    cfg.validate();
    limits.validate();
    const auto& residences = net.residences();
    const int H = static_cast<int>(residences.size());
    const int T = static_cast<int>(rate.size());
    if (base_load_kw.rows() != H || base_load_kw.cols() != T)
        throw DataError("admm: base load matrix must be residences x intervals");
    if (static_cast<int>(specs.size()) != H)
        throw DataError("admm: one EV spec slot per residence required");
    for (int i = 0; i < H; ++i)
        if (specs[static_cast<std::size_t>(i)]) specs[static_cast<std::size_t>(i)]->validate(T);

    const double base = net.base_power_kw();
    const double kappa_kw = cfg.kappa / (base * base);  // penalty restated in kW units
    const SensitivityMatrix sens = build_sensitivity(net);
    const Eigen::MatrixXd res_cols = detail::residence_columns(sens, residences);

    auto voltages_of = [&](const Eigen::MatrixXd& p_kw) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Ones(net.branch_count(), T) - (2.0 / base) * (res_cols * p_kw);
    };

    ConsensusResult result;
    result.schedules.assign(static_cast<std::size_t>(H), std::nullopt);

    // Iteration 0: every residence starts from its own tariff-optimal
    // schedule, the operator copy starts in agreement and duals at zero.
    Eigen::MatrixXd p_prev(H, T);
    std::vector<std::optional<ChargeSchedule>> sched_prev(static_cast<std::size_t>(H));
    parallel_for(H, cfg.jobs, [&](int i) {
        const auto& spec = specs[static_cast<std::size_t>(i)];
        if (spec) {
            ResidenceSolution sol = solve_individual(base_load_kw.row(i).transpose(), *spec, rate);
            p_prev.row(i) = sol.p_kw.transpose();
            sched_prev[static_cast<std::size_t>(i)] = std::move(sol.schedule);
        } else {
            p_prev.row(i) = base_load_kw.row(i);
        }
    });
    Eigen::MatrixXd p_tilde = p_prev;
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(H, T);

    Eigen::MatrixXd constrained_rows;
    if (cfg.constrain_all_nodes) {
        constrained_rows = res_cols;  // every node's row against residence injections
    } else {
        constrained_rows.resize(H, H);
        for (int i = 0; i < H; ++i) constrained_rows.row(i) = res_cols.row(residences[static_cast<std::size_t>(i)] - 1);
    }
    OperatorStepSolver op_solver(constrained_rows, base, limits, cfg.inner);

    double best_primal = std::numeric_limits<double>::infinity();
    bool best_found = false;
    Eigen::MatrixXd best_p;
    std::vector<std::optional<ChargeSchedule>> best_sched;

    Eigen::MatrixXd p_next(H, T);
    std::vector<std::optional<ChargeSchedule>> sched_next(static_cast<std::size_t>(H));
    Eigen::VectorXd costs(H);
    int iter = 0;
    bool converged = false;

    if (H == 0) {
        converged = true;
    }

    while (iter < cfg.max_iters && H > 0) {
        ++iter;
        const Eigen::MatrixXd linear_terms = gamma - 0.5 * kappa_kw * (p_tilde + p_prev);

        // S1a and S1b run against the same iteration-l data.
        OperatorSolution op = op_solver.solve(kappa_kw, linear_terms, cfg.jobs);
        parallel_for(H, cfg.jobs, [&](int i) {
            const auto& spec = specs[static_cast<std::size_t>(i)];
            if (spec) {
                ResidenceAdmmState state{p_prev.row(i).transpose(), p_tilde.row(i).transpose(),
                                         gamma.row(i).transpose(), kappa_kw};
                ResidenceSolution sol =
                    solve_admm_step(base_load_kw.row(i).transpose(), *spec, rate, state);
                p_next.row(i) = sol.p_kw.transpose();
                sched_next[static_cast<std::size_t>(i)] = std::move(sol.schedule);
            } else {
                p_next.row(i) = base_load_kw.row(i);
                sched_next[static_cast<std::size_t>(i)] = std::nullopt;
            }
            costs(i) = energy_cost_usd(rate, p_next.row(i).transpose());
        });

        gamma = dual_update(gamma, op.p_tilde, p_next, kappa_kw);

        const double primal = (op.p_tilde - p_next).cwiseAbs().maxCoeff();
        const double dual = (p_next - p_prev).cwiseAbs().maxCoeff();

        TrajectoryMessage down{iter, "operator_to_residences", residences, op.p_tilde};
        TrajectoryMessage up{iter, "residences_to_operator", residences, p_next};
        const std::size_t payload = to_json(down).dump().size() + to_json(up).dump().size();

        AdmmIterationRecord rec;
        rec.iter = iter;
        rec.primal_residual_kw = primal;
        rec.dual_residual_kw = dual;
        rec.total_cost_usd = costs.sum();
        rec.payload_bytes = payload;
        result.trace.records.push_back(rec);
        result.trace.residence_costs.push_back(costs);
        if (cfg.record_iterates) {
            result.trace.p_iterates.push_back(p_next);
            result.trace.p_tilde_iterates.push_back(op.p_tilde);
            result.trace.gamma_iterates.push_back(gamma);
        }

        // Track the best voltage-feasible integer iterate as the fallback
        // answer when consensus is never reached.
        const Eigen::MatrixXd v_sq = voltages_of(p_next);
        if (detail::within_band(v_sq, limits) && primal < best_primal) {
            best_primal = primal;
            best_found = true;
            best_p = p_next;
            best_sched = sched_next;
        }

        p_tilde = op.p_tilde;
        std::swap(p_prev, p_next);
        std::swap(sched_prev, sched_next);

        if (primal <= cfg.tol_primal_kw && dual <= cfg.tol_dual_kw) {
            converged = true;
            break;
        }
    }

    result.converged = converged;
    result.iterations = iter;
    if (!converged && best_found) {
        result.p_final = std::move(best_p);
        result.schedules = std::move(best_sched);
    } else {
        result.p_final = p_prev;
        result.schedules = sched_prev;
    }
    if (H == 0) {
        result.p_final.resize(0, T);
        result.v_squared = voltages_of(result.p_final);
        result.feasible = detail::within_band(result.v_squared, limits);
        result.residence_costs_usd.resize(0);
        result.total_cost_usd = 0.0;
        result.iterations = std::max(result.iterations, 1);
        return result;
    }
    result.v_squared = voltages_of(result.p_final);
    result.feasible = detail::within_band(result.v_squared, limits);
    result.residence_costs_usd.resize(H);
    for (int i = 0; i < H; ++i)
        result.residence_costs_usd(i) = energy_cost_usd(rate, result.p_final.row(i).transpose());
    result.total_cost_usd = result.residence_costs_usd.sum();
    return result;
}

// Exhaustive minimum-cost joint schedule subject to the voltage band at
// every interval; desk-scale reference for the consensus pipeline. The
// enumeration is a depth-first product over per-adopter feasible schedules
// with monotone voltage pruning (loads only lower voltages).
struct CentralizedResult {
    bool feasible = false;
    double total_cost_usd = 0.0;
    Eigen::VectorXd residence_costs_usd;
    Eigen::MatrixXd p_kw;
    std::vector<std::optional<ChargeSchedule>> schedules;
    double combinations = 0.0;  // product of per-adopter candidate counts
};

inline CentralizedResult centralized_oracle(const DistributionNetwork& net,
                                            const Eigen::MatrixXd& base_load_kw,
                                            const std::vector<std::optional<EvSpec>>& specs,
                                            const Eigen::VectorXd& rate, const VoltageLimits& limits,
                                            double max_combinations = 1e7) {
    limits.validate();
    const auto& residences = net.residences();
    const int H = static_cast<int>(residences.size());
    const int T = static_cast<int>(rate.size());
    if (base_load_kw.rows() != H || base_load_kw.cols() != T)
        throw DataError("oracle: base load matrix must be residences x intervals");
    if (static_cast<int>(specs.size()) != H) throw DataError("oracle: one EV spec slot per residence");

    const double base = net.base_power_kw();
    const SensitivityMatrix sens = build_sensitivity(net);
    const Eigen::MatrixXd res_cols = detail::residence_columns(sens, residences);

    CentralizedResult out;
    out.schedules.assign(static_cast<std::size_t>(H), std::nullopt);

    // Baseline voltages with every EV off; consumption only lowers them.
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(net.branch_count(), T) -
                        (2.0 / base) * (res_cols * base_load_kw);
    if (v.size() > 0 && v.maxCoeff() > limits.beta) return out;  // infeasible even unloaded

    struct Candidate {
        std::uint32_t mask;
        double ev_cost;
        std::vector<int> on;  // horizon intervals
    };
    struct Adopter {
        int row;  // residence index
        std::vector<Candidate> candidates;
        Eigen::VectorXd v_drop;  // per-node voltage drop of one charging interval
        double min_cost;
    };

    std::vector<Adopter> adopters;
    double combos = 1.0;
    for (int i = 0; i < H; ++i) {
        const auto& spec = specs[static_cast<std::size_t>(i)];
        if (!spec) continue;
        spec->validate(T);
        const int w = spec->window_length();
        if (w > 25) throw DataError("oracle: window too large for enumeration");
        Adopter a;
        a.row = i;
        a.v_drop = (2.0 / base) * spec->charger_kw * res_cols.col(i);
        const double per_interval = spec->charger_kw * kIntervalHours / spec->capacity_kwh;
        for (std::uint32_t mask = 0; mask < (1u << w); ++mask) {
            double s = spec->soc_init;
            bool ok = true;
            for (int k = 0; k < w && ok; ++k)
                if (mask & (1u << k)) {
                    s += per_interval;
                    if (s > 1.0 + 1e-9) ok = false;
                }
            if (!ok || s < spec->soc_final - 1e-9) continue;
            Candidate c;
            c.mask = mask;
            c.ev_cost = 0.0;
            for (int k = 0; k < w; ++k)
                if (mask & (1u << k)) {
                    const int t = spec->window_first + k;
                    c.on.push_back(t);
                    c.ev_cost += rate(t) * spec->charger_kw * kIntervalHours;
                }
            a.candidates.push_back(std::move(c));
        }
        if (a.candidates.empty()) throw DataError("oracle: adopter has no feasible schedule");
        a.min_cost = std::numeric_limits<double>::infinity();
        for (const auto& c : a.candidates) a.min_cost = std::min(a.min_cost, c.ev_cost);
        combos *= static_cast<double>(a.candidates.size());
        adopters.push_back(std::move(a));
    }
    out.combinations = combos;
    if (combos > max_combinations)
        throw DataError("oracle: " + csv::fmt(combos) + " joint schedules exceed the limit of " +
                        csv::fmt(max_combinations));

    const int K = static_cast<int>(adopters.size());
    double fixed_cost = 0.0;
    for (int i = 0; i < H; ++i) fixed_cost += energy_cost_usd(rate, base_load_kw.row(i).transpose());

    std::vector<double> tail_min(static_cast<std::size_t>(K) + 1, 0.0);
    for (int k = K - 1; k >= 0; --k)
        tail_min[static_cast<std::size_t>(k)] =
            tail_min[static_cast<std::size_t>(k) + 1] + adopters[static_cast<std::size_t>(k)].min_cost;

    std::vector<int> choice(static_cast<std::size_t>(K), -1);
    std::vector<int> best_choice;
    double best_cost = std::numeric_limits<double>::infinity();
    bool found = false;

    auto feasible_cols = [&](const std::vector<int>& ts) {
        for (int t : ts)
            if (v.col(t).minCoeff() < limits.alpha) return false;
        return true;
    };

    // Depth-first product; prune on strict cost dominance and on voltage
    // violations (which no further load can repair).
    auto dfs = [&](auto&& self, int k, double ev_cost_so_far) -> void {
        if (k == K) {
            const double total = fixed_cost + ev_cost_so_far;
            if (total < best_cost) {
                best_cost = total;
                best_choice = choice;
                found = true;
            }
            return;
        }
        const Adopter& a = adopters[static_cast<std::size_t>(k)];
        for (std::size_t ci = 0; ci < a.candidates.size(); ++ci) {
            const Candidate& c = a.candidates[ci];
            if (found &&
                fixed_cost + ev_cost_so_far + c.ev_cost + tail_min[static_cast<std::size_t>(k) + 1] >
                    best_cost)
                continue;
            choice[static_cast<std::size_t>(k)] = static_cast<int>(ci);
            for (int t : c.on) v.col(t) -= a.v_drop;
            if (feasible_cols(c.on)) self(self, k + 1, ev_cost_so_far + c.ev_cost);
            for (int t : c.on) v.col(t) += a.v_drop;
        }
        choice[static_cast<std::size_t>(k)] = -1;
    };
    dfs(dfs, 0, 0.0);

    if (!found) return out;  // infeasible: every joint schedule violates the band

    out.feasible = true;
    out.p_kw = base_load_kw;
    for (int k = 0; k < K; ++k) {
        const Adopter& a = adopters[static_cast<std::size_t>(k)];
        const Candidate& c = a.candidates[static_cast<std::size_t>(best_choice[static_cast<std::size_t>(k)])];
        const EvSpec& spec = *specs[static_cast<std::size_t>(a.row)];
        std::vector<std::uint8_t> z(static_cast<std::size_t>(T), 0);
        for (int t : c.on) z[static_cast<std::size_t>(t)] = 1;
        out.schedules[static_cast<std::size_t>(a.row)] = soc_trajectory(spec, z, T);
        for (int t : c.on) out.p_kw(a.row, t) += spec.charger_kw;
    }
    out.residence_costs_usd.resize(H);
    for (int i = 0; i < H; ++i)
        out.residence_costs_usd(i) = energy_cost_usd(rate, out.p_kw.row(i).transpose());
    out.total_cost_usd = out.residence_costs_usd.sum();
    return out;
}

}  // namespace revs
