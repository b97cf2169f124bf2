#pragma once

// Shared generators for the property-style tests. Kept independent of the
// library's synthetic-network generator so random-structure tests do not
// lean on the code they exercise.

#include <cstdint>
#include <optional>
#include <vector>

#include "revs/net_model.hpp"
#include "revs/rng.hpp"
#include "revs/tariff_load.hpp"

namespace testutil {

// Random rooted tree with n non-substation nodes; each node's parent is a
// uniformly chosen earlier node. Kinds alternate between residence and
// auxiliary unless all_residences is set.
inline revs::DistributionNetwork random_tree(revs::rng::Engine& g, int n,
                                             double r_min = 0.001, double r_max = 0.05,
                                             bool all_residences = false,
                                             double base_power_kw = 100.0) {
    std::vector<revs::NodeKind> kinds{revs::NodeKind::Substation};
    std::vector<revs::Edge> edges;
    for (int i = 1; i <= n; ++i) {
        const int parent = static_cast<int>(revs::rng::uniform_int(g, 0, i - 1));
        const bool residence = all_residences || revs::rng::uniform(g, 0.0, 1.0) < 0.6;
        kinds.push_back(residence ? revs::NodeKind::Residence : revs::NodeKind::Auxiliary);
        edges.push_back({parent, i, revs::rng::uniform(g, r_min, r_max),
                         revs::rng::uniform(g, 10.0, 200.0)});
    }
    return {std::move(kinds), std::move(edges), base_power_kw};
}

// Squared voltage of one node computed edge by edge along its root path,
// using subtree flows: v_i = 1 - 2 * sum_{e on path} r_e * f_e. Independent
// of the sensitivity-matrix route.
inline double recursive_voltage(const revs::DistributionNetwork& net, const Eigen::VectorXd& p_pu,
                                int node) {
    std::vector<double> subtree(static_cast<std::size_t>(net.node_count()), 0.0);
    const auto& order = net.topo_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (*it == 0) continue;
        subtree[static_cast<std::size_t>(*it)] += p_pu(*it - 1);
        subtree[static_cast<std::size_t>(net.parent_of(*it))] += subtree[static_cast<std::size_t>(*it)];
    }
    double drop = 0.0;
    for (int u = node; u != 0; u = net.parent_of(u))
        drop += net.edge_to(u).resistance_pu * subtree[static_cast<std::size_t>(u)];
    return 1.0 - 2.0 * drop;
}

inline Eigen::VectorXd random_vector(revs::rng::Engine& g, int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = revs::rng::uniform(g, lo, hi);
    return v;
}

// Random but feasible EV spec with a window inside [0, T).
inline revs::EvSpec random_ev_spec(revs::rng::Engine& g, int T, int max_window = 13) {
    for (;;) {
        revs::EvSpec spec;
        spec.capacity_kwh = revs::rng::uniform(g, 10.0, 30.0);
        spec.charger_kw = revs::rng::uniform(g, 2.0, 7.0);
        spec.soc_init = revs::rng::uniform(g, 0.0, 0.5);
        spec.soc_final = revs::rng::uniform(g, spec.soc_init, 1.0);
        const int len = static_cast<int>(revs::rng::uniform_int(g, 3, max_window));
        spec.window_first = static_cast<int>(revs::rng::uniform_int(g, 0, T - len));
        spec.window_last = spec.window_first + len - 1;
        if (spec.min_on_intervals() <= std::min(spec.max_on_intervals(), spec.window_length()))
            return spec;
    }
}

}  // namespace testutil
