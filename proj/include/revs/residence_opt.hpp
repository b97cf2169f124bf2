#pragma once

// Residence-side subproblems. Both the plain cost-minimal schedule and the
// consensus step solve
//
//   min_z  sum_t [ c_t p_t + kappa/2 p_t^2 - p_t h_t ],   p_t = p0_t + z_t P,
//   h_t = gamma_t + kappa/2 (ptilde_t + plocal_t)
//
// subject to the charging-window and SOC constraints (kappa = 0, h = 0 for
// the plain problem). Because the objective is separable per interval once z
// is fixed and the SOC constraints on a single contiguous window reduce to
// bounds on the number of on-intervals, the exact optimum is a select-k over
// per-interval on/off deltas. A brute-force enumerator serves as the
// independent reference.
//
// Units: kW and $ throughout; per-unit conversion happens at the network
// operator boundary only.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "revs/errors.hpp"
#include "revs/tariff_load.hpp"

namespace revs {

// Iterate-l data a residence receives from the consensus exchange.
struct ResidenceAdmmState {
    Eigen::VectorXd p_local;     // own trajectory at iteration l, kW
    Eigen::VectorXd p_operator;  // operator copy at iteration l, kW
    Eigen::VectorXd gamma;       // duals
    double kappa = 1.0;

    void validate(Eigen::Index intervals) const {
        if (p_local.size() != intervals || p_operator.size() != intervals || gamma.size() != intervals)
            throw DataError("residence consensus state: vector length mismatch");
        if (!(kappa > 0.0)) throw DataError("residence consensus state: kappa must be positive");
    }
};

struct ResidenceSolution {
    ChargeSchedule schedule;
    Eigen::VectorXd p_kw;
    double objective = 0.0;
};

inline double energy_cost_usd(const Eigen::VectorXd& rate, const Eigen::VectorXd& p_kw) {
    return rate.dot(p_kw) * kIntervalHours;
}

namespace detail {

// Full objective for a candidate schedule, evaluated term by term. Shared by
// the select-k path and the enumerator so equal schedules score identically.
inline double residence_objective(const Eigen::VectorXd& p0, const EvSpec& spec,
                                  const Eigen::VectorXd& rate, const ResidenceAdmmState* state,
                                  const std::vector<std::uint8_t>& z) {
    double obj = 0.0;
    for (Eigen::Index t = 0; t < rate.size(); ++t) {
        const double p = p0(t) + (z[static_cast<std::size_t>(t)] ? spec.charger_kw : 0.0);
        obj += rate(t) * p;
        if (state) {
            const double h = state->gamma(t) +
                             0.5 * state->kappa * (state->p_operator(t) + state->p_local(t));
            obj += 0.5 * state->kappa * p * p - p * h;
        }
    }
    return obj;
}

inline ResidenceSolution finish_solution(const Eigen::VectorXd& p0, const EvSpec& spec,
                                         const Eigen::VectorXd& rate,
                                         const ResidenceAdmmState* state,
                                         std::vector<std::uint8_t> z) {
    ResidenceSolution sol;
    sol.schedule = soc_trajectory(spec, z, static_cast<int>(rate.size()));
    sol.p_kw = apply_schedule(p0, spec, z);
    sol.objective = residence_objective(p0, spec, rate, state, z);
    return sol;
}

inline ResidenceSolution select_k_solve(const Eigen::VectorXd& p0, const EvSpec& spec,
                                        const Eigen::VectorXd& rate,
                                        const ResidenceAdmmState* state) {
    const int T = static_cast<int>(rate.size());
    if (p0.size() != T) throw DataError("residence solve: profile/rate length mismatch");
    spec.validate(T);
    if (state) state->validate(T);

    const int n_min = spec.min_on_intervals();
    const int n_max = std::min(spec.max_on_intervals(), spec.window_length());

    // On/off objective difference per window interval.
    struct Delta {
        double value;
        int t;
    };
    std::vector<Delta> deltas;
    deltas.reserve(static_cast<std::size_t>(spec.window_length()));
    const double P = spec.charger_kw;
    for (int t = spec.window_first; t <= spec.window_last; ++t) {
        double d = rate(t) * P;
        if (state) {
            const double h = state->gamma(t) +
                             0.5 * state->kappa * (state->p_operator(t) + state->p_local(t));
            d += 0.5 * state->kappa * (2.0 * p0(t) * P + P * P) - P * h;
        }
        deltas.push_back({d, t});
    }
    std::sort(deltas.begin(), deltas.end(), [](const Delta& a, const Delta& b) {
        return a.value != b.value ? a.value < b.value : a.t < b.t;
    });

    // Best feasible on-count; growth must strictly improve, so ties keep the
    // smaller count.
    double running = 0.0;
    for (int k = 0; k < n_min; ++k) running += deltas[static_cast<std::size_t>(k)].value;
    double best = running;
    int best_n = n_min;
    for (int n = n_min + 1; n <= n_max; ++n) {
        running += deltas[static_cast<std::size_t>(n - 1)].value;
        if (running < best) {
            best = running;
            best_n = n;
        }
    }

    std::vector<std::uint8_t> z(static_cast<std::size_t>(T), 0);
    for (int k = 0; k < best_n; ++k) z[static_cast<std::size_t>(deltas[static_cast<std::size_t>(k)].t)] = 1;
    return finish_solution(p0, spec, rate, state, std::move(z));
}

}  // namespace detail

// Cost-minimal schedule against the tariff alone. rate and p0 are
// horizon-aligned; the objective is the plain energy cost.
inline ResidenceSolution solve_individual(const Eigen::VectorXd& p0_kw, const EvSpec& spec,
                                          const Eigen::VectorXd& rate) {
    return detail::select_k_solve(p0_kw, spec, rate, nullptr);
}

// Consensus step: exact minimizer of the tariff cost plus the quadratic
// consensus regularizer built from iterate-l data.
inline ResidenceSolution solve_admm_step(const Eigen::VectorXd& p0_kw, const EvSpec& spec,
                                         const Eigen::VectorXd& rate,
                                         const ResidenceAdmmState& state) {
    return detail::select_k_solve(p0_kw, spec, rate, &state);
}

// Exhaustive reference: enumerates every on/off pattern in the window,
// keeps SOC-feasible ones (simulated directly, not via count bounds) and
// returns the minimum-objective schedule. Ties prefer fewer on-intervals,
// then earliest intervals.
inline ResidenceSolution brute_force_oracle(const Eigen::VectorXd& p0_kw, const EvSpec& spec,
                                            const Eigen::VectorXd& rate,
                                            const ResidenceAdmmState* state = nullptr) {
    const int T = static_cast<int>(rate.size());
    if (p0_kw.size() != T) throw DataError("oracle: profile/rate length mismatch");
    spec.validate(T);
    if (state) state->validate(T);
    const int w = spec.window_length();
    if (w > 20) throw DataError("oracle: window of " + std::to_string(w) + " intervals is too large");

    const double per_interval = spec.charger_kw * kIntervalHours / spec.capacity_kwh;
    std::vector<std::uint8_t> z(static_cast<std::size_t>(T), 0);
    std::vector<std::uint8_t> best_z;
    double best_obj = std::numeric_limits<double>::infinity();
    int best_n = -1;

    for (std::uint32_t mask = 0; mask < (1u << w); ++mask) {
        double s = spec.soc_init;
        bool ok = true;
        for (int k = 0; k < w && ok; ++k) {
            if (mask & (1u << k)) {
                s += per_interval;
                if (s > 1.0 + 1e-9) ok = false;
            }
        }
        if (!ok || s < spec.soc_final - 1e-9) continue;

        std::fill(z.begin() + spec.window_first, z.begin() + spec.window_last + 1, std::uint8_t{0});
        for (int k = 0; k < w; ++k)
            if (mask & (1u << k)) z[static_cast<std::size_t>(spec.window_first + k)] = 1;
        const double obj = detail::residence_objective(p0_kw, spec, rate, state, z);
        const int n = static_cast<int>(std::popcount(mask));

        bool better = obj < best_obj;
        if (!better && obj == best_obj) {
            if (n != best_n) {
                better = n < best_n;
            } else {
                // earliest on-intervals win
                for (std::size_t t = 0; t < z.size(); ++t) {
                    if (z[t] != best_z[t]) {
                        better = z[t] > best_z[t];
                        break;
                    }
                }
            }
        }
        if (better) {
            best_obj = obj;
            best_z = z;
            best_n = n;
        }
    }
    if (best_n < 0) throw DataError("oracle: no feasible schedule exists for this EV spec");
    return detail::finish_solution(p0_kw, spec, rate, state, std::move(best_z));
}

}  // namespace revs
