#pragma once

// Radial distribution network model: tree topology, the linearized-DistFlow
// sensitivity matrix R, squared node voltages v = 1 - 2*R*p, subtree edge
// flows and voltage-band checks. All solver math is per-unit; base_power_kw
// converts between kW and per-unit at the boundary.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <string>
#include <vector>

#include "revs/csv.hpp"
#include "revs/errors.hpp"

namespace revs {

enum class NodeKind { Substation, Residence, Transformer, Auxiliary };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Substation: return "substation";
        case NodeKind::Residence: return "residence";
        case NodeKind::Transformer: return "transformer";
        case NodeKind::Auxiliary: return "auxiliary";
    }
    return "?";
}

inline NodeKind parse_node_kind(const std::string& s) {
    if (s == "residence") return NodeKind::Residence;
    if (s == "transformer") return NodeKind::Transformer;
    if (s == "auxiliary") return NodeKind::Auxiliary;
    throw DataError("unknown node kind '" + s + "' (expected residence|transformer|auxiliary)");
}

struct Edge {
    int parent = 0;
    int child = 0;
    double resistance_pu = 0.0;
    double capacity_kw = 0.0;
};

// Bounds on squared voltage magnitude. Defaults are the squares of the
// ANSI C84.1 Range A limits 0.95/1.05 p.u.
struct VoltageLimits {
    double alpha = 0.9025;
    double beta = 1.1025;

    static VoltageLimits from_pu(double vmin_pu, double vmax_pu) {
        return {vmin_pu * vmin_pu, vmax_pu * vmax_pu};
    }
    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0 && 1.0 < beta))
            throw DataError("voltage limits must satisfy 0 < alpha < 1 < beta");
    }
};

// Tree rooted at substation node 0; non-root nodes are 1..N. Immutable after
// construction, safe for concurrent reads.
class DistributionNetwork {
  public:
    DistributionNetwork(std::vector<NodeKind> kinds, std::vector<Edge> edges,
                        double base_power_kw = 100.0)
        : kinds_(std::move(kinds)), edges_(std::move(edges)), base_power_kw_(base_power_kw) {
        validate();
    }

    int node_count() const { return static_cast<int>(kinds_.size()); }
    int branch_count() const { return node_count() - 1; }
    NodeKind kind(int node) const { return kinds_.at(static_cast<std::size_t>(node)); }
    double base_power_kw() const { return base_power_kw_; }

    // Edges sorted by child id; edge i connects parent_of(i+1) -> i+1.
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge_to(int child) const { return edges_.at(static_cast<std::size_t>(child - 1)); }
    int parent_of(int child) const { return edge_to(child).parent; }
    const std::vector<int>& children_of(int node) const {
        return children_.at(static_cast<std::size_t>(node));
    }
    // Root-first order; every node appears after its parent.
    const std::vector<int>& topo_order() const { return topo_; }
    const std::vector<int>& residences() const { return residences_; }

  private:
    void validate() {
        if (kinds_.empty()) throw DataError("network has no nodes");
        if (base_power_kw_ <= 0.0) throw DataError("base power must be positive");
        const int n = static_cast<int>(edges_.size());
        if (static_cast<int>(kinds_.size()) != n + 1)
            throw DataError("node count must equal edge count + 1");
        if (kinds_[0] != NodeKind::Substation)
            throw DataError("node 0 must be the substation");
        for (int i = 1; i <= n; ++i)
            if (kinds_[static_cast<std::size_t>(i)] == NodeKind::Substation)
                throw DataError("only node 0 may be the substation");

        std::sort(edges_.begin(), edges_.end(),
                  [](const Edge& a, const Edge& b) { return a.child < b.child; });
        for (int i = 0; i < n; ++i) {
            const Edge& e = edges_[static_cast<std::size_t>(i)];
            if (e.child != i + 1)
                throw DataError("child node ids must be 1.." + std::to_string(n) +
                                ", each exactly once");
            if (e.parent < 0 || e.parent > n || e.parent == e.child)
                throw DataError("bad parent id " + std::to_string(e.parent) + " for node " +
                                std::to_string(e.child));
            if (e.resistance_pu < 0.0)
                throw DataError("negative resistance on edge to node " + std::to_string(e.child));
            if (e.capacity_kw <= 0.0)
                throw DataError("nonpositive capacity on edge to node " + std::to_string(e.child));
        }

        children_.assign(kinds_.size(), {});
        for (const Edge& e : edges_)
            children_[static_cast<std::size_t>(e.parent)].push_back(e.child);
        for (auto& c : children_) std::sort(c.begin(), c.end());

        // BFS from the root; anything unreachable means a cycle or a
        // disconnected component.
        topo_.clear();
        topo_.reserve(kinds_.size());
        std::deque<int> queue{0};
        std::vector<char> seen(kinds_.size(), 0);
        seen[0] = 1;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            topo_.push_back(u);
            for (int c : children_[static_cast<std::size_t>(u)]) {
                if (seen[static_cast<std::size_t>(c)])
                    throw DataError("network contains a cycle through node " + std::to_string(c));
                seen[static_cast<std::size_t>(c)] = 1;
                queue.push_back(c);
            }
        }
        if (topo_.size() != kinds_.size())
            throw DataError("network is disconnected or cyclic: " +
                            std::to_string(kinds_.size() - topo_.size()) +
                            " node(s) unreachable from the substation");

        residences_.clear();
        for (int i = 1; i <= n; ++i)
            if (kinds_[static_cast<std::size_t>(i)] == NodeKind::Residence) residences_.push_back(i);
    }

    std::vector<NodeKind> kinds_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> children_;
    std::vector<int> topo_;
    std::vector<int> residences_;
    double base_power_kw_ = 100.0;
};

inline const char* network_file_header() {
    return "parent_id,child_id,kind_of_child,resistance_pu,capacity_kw";
}

// One edge per row; node 0 is the implicit substation and never appears as a
// child.
inline DistributionNetwork load_network(const std::string& path, double base_power_kw = 100.0) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw DataError(path + ": empty network file");
    if (csv::split(lines[0]) != csv::split(network_file_header()))
        throw DataError(path + ": expected header '" + network_file_header() + "'");

    std::vector<Edge> edges;
    int max_id = 0;
    std::vector<std::pair<int, NodeKind>> kinds_by_child;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = csv::split(lines[r]);
        const std::string ctx = path + " row " + std::to_string(r + 1);
        if (f.size() != 5) throw DataError(ctx + ": expected 5 fields, got " + std::to_string(f.size()));
        Edge e;
        e.parent = static_cast<int>(csv::to_long(f[0], ctx));
        e.child = static_cast<int>(csv::to_long(f[1], ctx));
        if (e.child <= 0) throw DataError(ctx + ": child id must be positive (node 0 is the substation)");
        kinds_by_child.emplace_back(e.child, parse_node_kind(f[2]));
        e.resistance_pu = csv::to_double(f[3], ctx);
        e.capacity_kw = csv::to_double(f[4], ctx);
        max_id = std::max({max_id, e.parent, e.child});
        edges.push_back(e);
    }
    std::vector<NodeKind> kinds(static_cast<std::size_t>(max_id) + 1, NodeKind::Auxiliary);
    kinds[0] = NodeKind::Substation;
    for (const auto& [child, kind] : kinds_by_child) kinds[static_cast<std::size_t>(child)] = kind;
    return DistributionNetwork(std::move(kinds), std::move(edges), base_power_kw);
}

inline void save_network(const DistributionNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << network_file_header() << "\n";
    for (const Edge& e : net.edges()) {
        out << e.parent << ',' << e.child << ',' << to_string(net.kind(e.child)) << ','
            << csv::fmt(e.resistance_pu) << ',' << csv::fmt(e.capacity_kw) << "\n";
    }
}

// R is N x N; entry (i-1, j-1) is the summed resistance of the edges shared
// by the root paths of nodes i and j.
struct SensitivityMatrix {
    Eigen::MatrixXd R;
};

inline SensitivityMatrix build_sensitivity(const DistributionNetwork& net) {
    const int n = net.branch_count();
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    std::vector<char> on_path(static_cast<std::size_t>(n) + 1, 0);
    std::vector<double> acc(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
        std::fill(on_path.begin(), on_path.end(), 0);
        for (int u = i; u != 0; u = net.parent_of(u)) on_path[static_cast<std::size_t>(u)] = 1;
        // Descend root-first; the shared-path resistance accumulates only
        // while the walk stays on i's root path.
        acc[0] = 0.0;
        for (int u : net.topo_order()) {
            if (u == 0) continue;
            const Edge& e = net.edge_to(u);
            acc[static_cast<std::size_t>(u)] = acc[static_cast<std::size_t>(e.parent)] +
                                               (on_path[static_cast<std::size_t>(u)] ? e.resistance_pu : 0.0);
            R(i - 1, u - 1) = acc[static_cast<std::size_t>(u)];
        }
    }
    return {std::move(R)};
}

// Squared voltages for all non-substation nodes; p is per-unit consumption.
inline Eigen::VectorXd voltages(const SensitivityMatrix& sens, const Eigen::VectorXd& p_pu) {
    if (sens.R.rows() != p_pu.size())
        throw DataError("voltage computation: dimension mismatch (" + std::to_string(sens.R.rows()) +
                        " nodes vs " + std::to_string(p_pu.size()) + " injections)");
    return Eigen::VectorXd::Ones(p_pu.size()) - 2.0 * (sens.R * p_pu);
}

struct EdgeFlows {
    Eigen::VectorXd flow_kw;      // indexed like net.edges()
    Eigen::VectorXd loading_pct;  // 100 * flow / capacity
};

// Lossless aggregation: flow on an edge is the total consumption of the
// subtree below it.
inline EdgeFlows edge_flows(const DistributionNetwork& net, const Eigen::VectorXd& p_pu) {
    const int n = net.branch_count();
    if (p_pu.size() != n) throw DataError("edge flows: dimension mismatch");
    std::vector<double> subtree(static_cast<std::size_t>(n) + 1, 0.0);
    const auto& order = net.topo_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int u = *it;
        if (u == 0) continue;
        subtree[static_cast<std::size_t>(u)] += p_pu(u - 1);
        subtree[static_cast<std::size_t>(net.parent_of(u))] += subtree[static_cast<std::size_t>(u)];
    }
    EdgeFlows out;
    out.flow_kw.resize(n);
    out.loading_pct.resize(n);
    for (int i = 0; i < n; ++i) {
        const Edge& e = net.edges()[static_cast<std::size_t>(i)];
        out.flow_kw(i) = subtree[static_cast<std::size_t>(e.child)] * net.base_power_kw();
        out.loading_pct(i) = out.flow_kw(i) / e.capacity_kw * 100.0;
    }
    return out;
}

struct LimitCheck {
    std::vector<char> violated;   // per node, order matches the voltage vector
    double worst_violation = 0.0;
    bool any = false;
};

// Closed interval: values exactly at alpha or beta do not violate.
inline LimitCheck check_limits(const Eigen::VectorXd& v_squared, const VoltageLimits& limits) {
    LimitCheck out;
    out.violated.assign(static_cast<std::size_t>(v_squared.size()), 0);
    for (Eigen::Index i = 0; i < v_squared.size(); ++i) {
        const double under = limits.alpha - v_squared(i);
        const double over = v_squared(i) - limits.beta;
        const double mag = std::max({under, over, 0.0});
        if (mag > 0.0) {
            out.violated[static_cast<std::size_t>(i)] = 1;
            out.any = true;
            out.worst_violation = std::max(out.worst_violation, mag);
        }
    }
    return out;
}

}  // namespace revs
