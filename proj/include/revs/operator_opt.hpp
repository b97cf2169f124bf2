#pragma once

// Network-operator consensus step: for every interval t, minimize
//
//   sum_i [ kappa/2 ptilde_i^2 + ptilde_i q_i ],
//   q_i = gamma_i - kappa/2 ptilde_i[l] - kappa/2 p_i[l]
//
// subject to the squared-voltage band alpha <= 1 - (2/base) R ptilde <= beta
// at every constrained node. The intervals decouple, so each is a small
// strictly convex QP with two-sided linear constraints, solved by projected
// gradient ascent on the nonnegative duals (the primal minimizer is closed
// form given the duals).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "revs/csv.hpp"
#include "revs/errors.hpp"
#include "revs/net_model.hpp"
#include "revs/parallel.hpp"

namespace revs {

struct PgdOptions {
    double tol_primal = 1e-10;  // constraint violation, squared-voltage units
    double tol_dual = 1e-10;    // projected-gradient norm
    int max_iters = 50000;
};

// min kappa/2 |x|^2 + q.x  s.t.  lower <= A x <= upper
struct BandQp {
    Eigen::MatrixXd A;
    Eigen::VectorXd q;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    double kappa = 1.0;

    void validate() const {
        if (!(kappa > 0.0)) throw DataError("band QP: kappa must be positive");
        if (A.cols() != q.size() || A.rows() != lower.size() || A.rows() != upper.size())
            throw DataError("band QP: dimension mismatch");
        for (Eigen::Index m = 0; m < lower.size(); ++m)
            if (lower(m) > upper(m)) throw DataError("band QP: crossed bounds");
    }
};

struct BandQpSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd dual_upper;  // multipliers of A x <= upper
    Eigen::VectorXd dual_lower;  // multipliers of lower <= A x
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

inline double band_qp_objective(const BandQp& qp, const Eigen::VectorXd& x) {
    return 0.5 * qp.kappa * x.squaredNorm() + qp.q.dot(x);
}

// Largest eigenvalue of A^T A by power iteration (deterministic start).
inline double gram_spectral_norm(const Eigen::MatrixXd& A) {
    const Eigen::Index n = std::min(A.rows(), A.cols());
    if (n == 0) return 0.0;
    const bool use_cols = A.cols() <= A.rows();
    const Eigen::MatrixXd G = use_cols ? Eigen::MatrixXd(A.transpose() * A)
                                       : Eigen::MatrixXd(A * A.transpose());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(G.rows());
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXd w = G * v;
        const double nw = w.norm();
        if (nw <= 0.0) return 0.0;
        w /= nw;
        const double next = w.dot(G * w);
        const bool settled = std::abs(next - lambda) <= 1e-13 * std::max(1.0, std::abs(next));
        lambda = next;
        v = std::move(w);
        if (settled) break;
    }
    return lambda;
}

namespace detail {

// Treating the constraints flagged by positive duals as equalities turns the
// KKT conditions into a linear system; solving it removes the first-order
// dual error left by the gradient loop. The working set is refined a bounded
// number of times: rows with negative multipliers leave, violated rows
// enter. Keeps the iterative answer when no consistent set is found.
inline bool polish_active_set(const BandQp& qp, const PgdOptions& opt, BandQpSolution& sol) {
    const Eigen::Index m = qp.A.rows();
    std::vector<std::pair<Eigen::Index, int>> rows;  // (row, +1 upper / -1 lower)
    for (Eigen::Index i = 0; i < m; ++i) {
        if (sol.dual_upper(i) > 0.0) rows.emplace_back(i, +1);
        else if (sol.dual_lower(i) > 0.0) rows.emplace_back(i, -1);
    }
    if (rows.empty() || rows.size() > 300) return false;

    // nodes with no constrained load below them repeat their parent's row;
    // exact duplicates would make the Gram matrix singular
    auto dedupe = [&](std::vector<std::pair<Eigen::Index, int>>& set) {
        std::vector<std::pair<Eigen::Index, int>> kept;
        for (const auto& cand : set) {
            bool dup = false;
            for (const auto& have : kept)
                if (cand.second == have.second && qp.A.row(cand.first) == qp.A.row(have.first)) {
                    dup = true;
                    break;
                }
            if (!dup) kept.push_back(cand);
        }
        set = std::move(kept);
    };

    for (int round = 0; round < 25; ++round) {
        dedupe(rows);
        if (rows.empty()) return false;
        const Eigen::Index k = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd B(k, qp.A.cols());
        Eigen::VectorXd b(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            const auto& [i, s] = rows[static_cast<std::size_t>(r)];
            B.row(r) = static_cast<double>(s) * qp.A.row(i);
            b(r) = s > 0 ? qp.upper(i) : -qp.lower(i);
        }
        const Eigen::MatrixXd gram = B * B.transpose();
        const Eigen::VectorXd rhs = -(qp.kappa * b + B * qp.q);
        // info() flags near-semidefinite factorizations that still solve
        // fine; the residual check below is the authoritative gate
        const Eigen::VectorXd mu = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(rhs);
        if ((gram * mu - rhs).cwiseAbs().maxCoeff() >
            1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
            return false;

        if (mu.minCoeff() < -1e-12) {
            std::vector<std::pair<Eigen::Index, int>> reduced;
            for (Eigen::Index r = 0; r < k; ++r)
                if (mu(r) >= -1e-12) reduced.push_back(rows[static_cast<std::size_t>(r)]);
            if (reduced.size() == rows.size()) return false;
            rows = std::move(reduced);
            continue;
        }

        const Eigen::VectorXd x = -(qp.q + B.transpose() * mu.cwiseMax(0.0)) / qp.kappa;
        const Eigen::VectorXd d = qp.A * x;
        Eigen::Index worst = -1;
        int worst_side = 0;
        double viol = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (d(i) - qp.upper(i) > viol) {
                viol = d(i) - qp.upper(i);
                worst = i;
                worst_side = +1;
            }
            if (qp.lower(i) - d(i) > viol) {
                viol = qp.lower(i) - d(i);
                worst = i;
                worst_side = -1;
            }
        }
        if (viol > opt.tol_primal) {
            bool already = false;
            for (const auto& [i, s] : rows)
                if (i == worst && s == worst_side) already = true;
            if (already || worst < 0) return false;
            rows.emplace_back(worst, worst_side);
            continue;
        }

        sol.x = x;
        sol.dual_upper.setZero();
        sol.dual_lower.setZero();
        for (Eigen::Index r = 0; r < k; ++r) {
            const auto& [i, s] = rows[static_cast<std::size_t>(r)];
            if (s > 0) sol.dual_upper(i) = std::max(mu(r), 0.0);
            else sol.dual_lower(i) = std::max(mu(r), 0.0);
        }
        sol.primal_residual = viol;
        sol.dual_residual = 0.0;
        return true;
    }
    return false;
}

}  // namespace detail

// Projected gradient ascent on the nonnegative duals with Nesterov momentum
// and gradient-based adaptive restart, followed by an active-set polish.
// Step 1/L with L = 2*lambda_max(A A^T)/kappa, the Lipschitz constant of the
// dual gradient over both constraint blocks. Termination is checked on the
// momentum-free iterate: constraint violation of x(lambda) and the
// projected-gradient mapping at lambda. gram_norm, when given, caches
// lambda_max(A A^T) across calls with the same A.
inline BandQpSolution solve_band_qp(const BandQp& qp, const PgdOptions& opt = {},
                                    const BandQpSolution* warm = nullptr,
                                    double* gram_norm = nullptr) {
    qp.validate();
    const Eigen::Index m = qp.A.rows();

    BandQpSolution sol;
    sol.x = -qp.q / qp.kappa;
    sol.dual_upper = Eigen::VectorXd::Zero(m);
    sol.dual_lower = Eigen::VectorXd::Zero(m);
    if (m == 0) return sol;

    // Strict convexity means a feasible unconstrained minimizer is the answer.
    {
        const Eigen::VectorXd d = qp.A * sol.x;
        const double viol = std::max(0.0, std::max((d - qp.upper).maxCoeff(), (qp.lower - d).maxCoeff()));
        if (viol <= opt.tol_primal) {
            sol.primal_residual = viol;
            return sol;
        }
    }

    double lam_max = 0.0;
    if (gram_norm && *gram_norm > 0.0) {
        lam_max = *gram_norm;
    } else {
        lam_max = gram_spectral_norm(qp.A);
        if (gram_norm) *gram_norm = lam_max;
    }
    if (lam_max <= 0.0) throw SolverError("band QP: degenerate constraint matrix with violated bounds");
    const double step = qp.kappa / (2.0 * lam_max);

    Eigen::VectorXd lam_u = warm ? warm->dual_upper : Eigen::VectorXd::Zero(m);
    Eigen::VectorXd lam_l = warm ? warm->dual_lower : Eigen::VectorXd::Zero(m);
    if (lam_u.size() != m || lam_l.size() != m) {
        lam_u = Eigen::VectorXd::Zero(m);
        lam_l = Eigen::VectorXd::Zero(m);
    }
    Eigen::VectorXd prev_u = lam_u, prev_l = lam_l;
    double t_momentum = 1.0;

    auto gradient_at = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& l,
                           Eigen::VectorXd& gu, Eigen::VectorXd& gl) {
        const Eigen::VectorXd x = -(qp.q + qp.A.transpose() * (u - l)) / qp.kappa;
        const Eigen::VectorXd d = qp.A * x;
        gu = d - qp.upper;
        gl = qp.lower - d;
    };

    double primal = 0.0, dual = 0.0;
    Eigen::VectorXd gu(m), gl(m);
    int it = 0;
    bool done = false;
    for (it = 1; it <= opt.max_iters && !done; ++it) {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        const double omega = (t_momentum - 1.0) / t_next;
        const Eigen::VectorXd y_u = lam_u + omega * (lam_u - prev_u);
        const Eigen::VectorXd y_l = lam_l + omega * (lam_l - prev_l);
        gradient_at(y_u, y_l, gu, gl);
        const Eigen::VectorXd next_u = (y_u + step * gu).cwiseMax(0.0);
        const Eigen::VectorXd next_l = (y_l + step * gl).cwiseMax(0.0);

        // adaptive restart when the momentum fights the ascent direction
        const double cross = (y_u - next_u).dot(next_u - lam_u) + (y_l - next_l).dot(next_l - lam_l);
        t_momentum = cross > 0.0 ? 1.0 : t_next;

        dual = std::max((next_u - y_u).cwiseAbs().maxCoeff(), (next_l - y_l).cwiseAbs().maxCoeff()) / step;
        primal = std::max(0.0, std::max(gu.maxCoeff(), gl.maxCoeff()));
        prev_u = lam_u;
        prev_l = lam_l;
        lam_u = next_u;
        lam_l = next_l;

        if (primal <= opt.tol_primal && dual <= opt.tol_dual) {
            // surrogate passed; confirm on the momentum-free point
            gradient_at(lam_u, lam_l, gu, gl);
            const Eigen::VectorXd check_u = (lam_u + step * gu).cwiseMax(0.0);
            const Eigen::VectorXd check_l = (lam_l + step * gl).cwiseMax(0.0);
            dual = std::max((check_u - lam_u).cwiseAbs().maxCoeff(),
                            (check_l - lam_l).cwiseAbs().maxCoeff()) /
                   step;
            primal = std::max(0.0, std::max(gu.maxCoeff(), gl.maxCoeff()));
            done = primal <= opt.tol_primal && dual <= opt.tol_dual;
        }
    }
    if (!done)
        throw SolverError("band QP did not converge in " + std::to_string(opt.max_iters) +
                          " iterations (primal " + csv::fmt(primal) + ", dual " + csv::fmt(dual) + ")");

    sol.x = -(qp.q + qp.A.transpose() * (lam_u - lam_l)) / qp.kappa;
    const Eigen::VectorXd d = qp.A * sol.x;
    sol.dual_upper = std::move(lam_u);
    sol.dual_lower = std::move(lam_l);
    sol.iterations = it - 1;
    sol.primal_residual = std::max(0.0, std::max((d - qp.upper).maxCoeff(), (qp.lower - d).maxCoeff()));
    sol.dual_residual = dual;
    detail::polish_active_set(qp, opt, sol);
    return sol;
}

// Max KKT residual: stationarity, primal feasibility, dual feasibility and
// complementary slackness.
inline double verify_kkt(const BandQp& qp, const BandQpSolution& sol) {
    double r = (qp.kappa * sol.x + qp.q + qp.A.transpose() * (sol.dual_upper - sol.dual_lower))
                   .cwiseAbs()
                   .maxCoeff();
    const Eigen::VectorXd d = qp.A * sol.x;
    if (d.size() > 0) {
        r = std::max(r, std::max(0.0, std::max((d - qp.upper).maxCoeff(), (qp.lower - d).maxCoeff())));
        r = std::max(r, std::max(0.0, -sol.dual_upper.minCoeff()));
        r = std::max(r, std::max(0.0, -sol.dual_lower.minCoeff()));
        r = std::max(r, sol.dual_upper.cwiseProduct(d - qp.upper).cwiseAbs().maxCoeff());
        r = std::max(r, sol.dual_lower.cwiseProduct(qp.lower - d).cwiseAbs().maxCoeff());
    }
    return r;
}

// One operator step over the whole horizon. sens_rows holds the sensitivity
// rows of the constrained nodes restricted to residence columns;
// linear_terms is residences x intervals.
struct OperatorProblem {
    Eigen::MatrixXd sens_rows;
    double base_power_kw = 100.0;
    VoltageLimits limits;
    double kappa = 1.0;
    Eigen::MatrixXd linear_terms;

    void validate() const {
        limits.validate();
        if (!(kappa > 0.0)) throw DataError("operator problem: kappa must be positive");
        if (!(base_power_kw > 0.0)) throw DataError("operator problem: base power must be positive");
        if (sens_rows.cols() != linear_terms.rows())
            throw DataError("operator problem: sensitivity columns must match residence count");
        if (sens_rows.size() > 0 && sens_rows.minCoeff() < 0.0)
            throw DataError("operator problem: sensitivity entries must be nonnegative");
    }
};

struct OperatorSolution {
    Eigen::MatrixXd p_tilde;  // residences x intervals, kW
    std::vector<BandQpSolution> per_interval;
    long iterations = 0;      // summed inner iterations
    double kkt_residual = 0.0;
};

// Reusable solver: the constraint geometry is fixed across consensus
// iterations, so the spectral norm and the per-interval duals (warm starts)
// are kept between calls.
class OperatorStepSolver {
  public:
    OperatorStepSolver(Eigen::MatrixXd sens_rows, double base_power_kw, VoltageLimits limits,
                       PgdOptions opt = {})
        : opt_(opt), base_power_kw_(base_power_kw), limits_(limits) {
        limits_.validate();
        if (!(base_power_kw_ > 0.0)) throw DataError("operator solver: base power must be positive");
        A_ = (2.0 / base_power_kw_) * sens_rows;
        lower_ = Eigen::VectorXd::Constant(A_.rows(), 1.0 - limits_.beta);
        upper_ = Eigen::VectorXd::Constant(A_.rows(), 1.0 - limits_.alpha);
        if (A_.rows() > 0) gram_norm_ = gram_spectral_norm(A_);
    }

    BandQp qp_for(double kappa, const Eigen::VectorXd& linear_column) const {
        return BandQp{A_, linear_column, lower_, upper_, kappa};
    }

    OperatorSolution solve(double kappa, const Eigen::MatrixXd& linear_terms, int jobs = 1) {
        if (linear_terms.rows() != A_.cols())
            throw DataError("operator solve: linear term rows must match residence count");
        const int T = static_cast<int>(linear_terms.cols());
        OperatorSolution out;
        out.p_tilde.resize(linear_terms.rows(), T);
        out.per_interval.resize(static_cast<std::size_t>(T));
        if (warm_.size() != static_cast<std::size_t>(T)) warm_.assign(static_cast<std::size_t>(T), {});

        parallel_for(T, jobs, [&](int t) {
            const BandQp qp = qp_for(kappa, linear_terms.col(t));
            const BandQpSolution* warm =
                warm_[static_cast<std::size_t>(t)].x.size() > 0 ? &warm_[static_cast<std::size_t>(t)] : nullptr;
            out.per_interval[static_cast<std::size_t>(t)] = solve_band_qp(qp, opt_, warm, &gram_norm_);
        });

        for (int t = 0; t < T; ++t) {
            auto& sol = out.per_interval[static_cast<std::size_t>(t)];
            out.p_tilde.col(t) = sol.x;
            out.iterations += sol.iterations;
            out.kkt_residual =
                std::max(out.kkt_residual, verify_kkt(qp_for(kappa, linear_terms.col(t)), sol));
            warm_[static_cast<std::size_t>(t)] = sol;
        }
        return out;
    }

    const Eigen::MatrixXd& constraint_matrix() const { return A_; }

  private:
    PgdOptions opt_;
    double base_power_kw_;
    VoltageLimits limits_;
    Eigen::MatrixXd A_;
    Eigen::VectorXd lower_, upper_;
    std::vector<BandQpSolution> warm_;
    double gram_norm_ = 0.0;
};

inline OperatorSolution solve_operator_step(const OperatorProblem& problem,
                                            const PgdOptions& opt = {}, int jobs = 1) {
    problem.validate();
    OperatorStepSolver solver(problem.sens_rows, problem.base_power_kw, problem.limits, opt);
    return solver.solve(problem.kappa, problem.linear_terms, jobs);
}

inline double verify_kkt(const OperatorProblem& problem, const OperatorSolution& solution) {
    problem.validate();
    OperatorStepSolver solver(problem.sens_rows, problem.base_power_kw, problem.limits);
    double r = 0.0;
    for (int t = 0; t < static_cast<int>(problem.linear_terms.cols()); ++t)
        r = std::max(r, verify_kkt(solver.qp_for(problem.kappa, problem.linear_terms.col(t)),
                                   solution.per_interval.at(static_cast<std::size_t>(t))));
    return r;
}

}  // namespace revs
