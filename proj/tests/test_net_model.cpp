#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "revs/net_model.hpp"

using namespace revs;

namespace {

DistributionNetwork single_edge(double r = 0.05, double cap = 50.0, double base = 100.0) {
    return {{NodeKind::Substation, NodeKind::Residence}, {{0, 1, r, cap}}, base};
}

DistributionNetwork path2(double r = 0.01, double cap = 20.0, double base = 100.0) {
    return {{NodeKind::Substation, NodeKind::Residence, NodeKind::Residence},
            {{0, 1, r, cap}, {1, 2, r, cap}},
            base};
}

DistributionNetwork star2(double r = 0.01) {
    return {{NodeKind::Substation, NodeKind::Residence, NodeKind::Residence},
            {{0, 1, r, 20.0}, {0, 2, r, 20.0}},
            100.0};
}

}  // namespace

TEST_CASE("sensitivity matrix from tiny topologies") {
    CHECK(build_sensitivity(single_edge()).R(0, 0) == Catch::Approx(0.05).margin(0));

    const Eigen::MatrixXd Rp = build_sensitivity(path2()).R;
    CHECK(Rp(0, 0) == Catch::Approx(0.01).margin(1e-15));
    CHECK(Rp(0, 1) == Catch::Approx(0.01).margin(1e-15));
    CHECK(Rp(1, 0) == Catch::Approx(0.01).margin(1e-15));
    CHECK(Rp(1, 1) == Catch::Approx(0.02).margin(1e-15));

    const Eigen::MatrixXd Rs = build_sensitivity(star2()).R;
    CHECK(Rs(0, 0) == Catch::Approx(0.01).margin(1e-15));
    CHECK(Rs(0, 1) == 0.0);
    CHECK(Rs(1, 0) == 0.0);
    CHECK(Rs(1, 1) == Catch::Approx(0.01).margin(1e-15));
}

TEST_CASE("voltages follow v = 1 - 2 R p") {
    const auto net = path2();
    const auto sens = build_sensitivity(net);

    CHECK(voltages(sens, Eigen::VectorXd::Zero(2)).isApprox(Eigen::VectorXd::Ones(2)));

    const auto one = single_edge();
    Eigen::VectorXd p1(1);
    p1 << 1.0;
    CHECK(voltages(build_sensitivity(one), p1)(0) == Catch::Approx(0.9).margin(1e-15));

    Eigen::VectorXd p(2);
    p << 0.5, 0.5;
    const Eigen::VectorXd v = voltages(sens, p);
    CHECK(v(0) == Catch::Approx(0.98).margin(1e-15));
    CHECK(v(1) == Catch::Approx(0.97).margin(1e-15));

    CHECK_THROWS_AS(voltages(sens, p1), DataError);
}

TEST_CASE("edge flows are subtree sums") {
    const auto net = path2(0.01, 20.0, 10.0);

    const auto zero = edge_flows(net, Eigen::VectorXd::Zero(2));
    CHECK(zero.loading_pct.cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd p(2);
    p << 0.5, 0.5;
    const auto flows = edge_flows(net, p);
    CHECK(flows.flow_kw(0) == Catch::Approx(10.0));
    CHECK(flows.loading_pct(0) == Catch::Approx(50.0));
    CHECK(flows.flow_kw(1) == Catch::Approx(5.0));
    CHECK(flows.loading_pct(1) == Catch::Approx(25.0));

    Eigen::VectorXd lopsided(2);
    lopsided << 1.0, 0.0;
    CHECK(edge_flows(star2(), lopsided).flow_kw(1) == 0.0);
}

TEST_CASE("limit checks use a closed band") {
    const VoltageLimits limits{0.9025, 1.1025};
    Eigen::VectorXd v(1);

    v << 1.0;
    CHECK_FALSE(check_limits(v, limits).any);

    v << 0.90;
    const auto low = check_limits(v, limits);
    CHECK(low.any);
    CHECK(low.worst_violation == Catch::Approx(0.0025).margin(1e-12));

    v << 1.1025;
    CHECK_FALSE(check_limits(v, limits).any);
}

TEST_CASE("network construction rejects broken structure") {
    // cycle between 1 and 2, detached from the root
    CHECK_THROWS_AS(DistributionNetwork({NodeKind::Substation, NodeKind::Residence,
                                         NodeKind::Residence, NodeKind::Residence},
                                        {{2, 1, 0.01, 10}, {1, 2, 0.01, 10}, {0, 3, 0.01, 10}},
                                        100.0),
                    DataError);
    // duplicate child
    CHECK_THROWS_AS(DistributionNetwork({NodeKind::Substation, NodeKind::Residence},
                                        {{0, 1, 0.01, 10}, {0, 1, 0.01, 10}}, 100.0),
                    DataError);
    // gap in node ids
    CHECK_THROWS_AS(DistributionNetwork({NodeKind::Substation, NodeKind::Residence,
                                         NodeKind::Residence},
                                        {{0, 2, 0.01, 10}, {2, 3, 0.01, 10}}, 100.0),
                    DataError);
    CHECK_THROWS_AS(single_edge(-0.01), DataError);
    CHECK_THROWS_AS(single_edge(0.01, 0.0), DataError);
}

TEST_CASE("network file round trip and parse errors") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "revs_net_model_test";
    fs::create_directories(dir);
    const std::string path = (dir / "network.csv").string();

    const auto net = path2();
    save_network(net, path);
    const auto loaded = load_network(path, 100.0);
    CHECK(loaded.node_count() == 3);
    CHECK(loaded.kind(2) == NodeKind::Residence);
    CHECK(loaded.edge_to(2).resistance_pu == Catch::Approx(0.01));

    {
        std::ofstream bad(path);
        bad << "parent,child\n0,1\n";
    }
    CHECK_THROWS_AS(load_network(path, 100.0), DataError);
    {
        std::ofstream bad(path);
        bad << network_file_header() << "\n0,1,palace,0.01,10\n";
    }
    CHECK_THROWS_AS(load_network(path, 100.0), DataError);
    fs::remove_all(dir);
}

TEST_CASE("sensitivity matrix is exactly symmetric on random trees") {
    rng::Engine g(17);
    for (int rep = 0; rep < 25; ++rep) {
        const int n = static_cast<int>(rng::uniform_int(g, 2, 60));
        const auto net = testutil::random_tree(g, n);
        const Eigen::MatrixXd R = build_sensitivity(net).R;
        CHECK((R - R.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(R.minCoeff() >= 0.0);
        for (int i = 0; i < n; ++i) CHECK(R(i, i) >= R.row(i).maxCoeff() - 1e-15);
    }
}

TEST_CASE("more load can only lower voltages") {
    rng::Engine g(23);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = static_cast<int>(rng::uniform_int(g, 2, 40));
        const auto net = testutil::random_tree(g, n);
        const auto sens = build_sensitivity(net);
        const Eigen::VectorXd p = testutil::random_vector(g, n, 0.0, 1.0);
        Eigen::VectorXd bumped = p;
        bumped(rng::uniform_int(g, 0, n - 1)) += rng::uniform(g, 0.01, 0.5);
        const Eigen::VectorXd dv = voltages(sens, bumped) - voltages(sens, p);
        CHECK(dv.maxCoeff() <= 1e-15);
    }
}

TEST_CASE("matrix and per-edge voltage computations agree") {
    rng::Engine g(31);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = static_cast<int>(rng::uniform_int(g, 2, 50));
        const auto net = testutil::random_tree(g, n);
        const auto sens = build_sensitivity(net);
        const Eigen::VectorXd p = testutil::random_vector(g, n, 0.0, 1.0);
        const Eigen::VectorXd v = voltages(sens, p);
        for (int node = 1; node <= n; ++node)
            CHECK(v(node - 1) ==
                  Catch::Approx(testutil::recursive_voltage(net, p, node)).margin(1e-12));
    }
}

TEST_CASE("voltage decreases toward the feeder end on a chain") {
    rng::Engine g(41);
    std::vector<NodeKind> kinds{NodeKind::Substation};
    std::vector<Edge> edges;
    const int n = 12;
    for (int i = 1; i <= n; ++i) {
        kinds.push_back(NodeKind::Residence);
        edges.push_back({i - 1, i, rng::uniform(g, 0.001, 0.02), 100.0});
    }
    const DistributionNetwork chain(std::move(kinds), std::move(edges), 100.0);
    const Eigen::VectorXd p = testutil::random_vector(g, n, 0.0, 0.5);
    const Eigen::VectorXd v = voltages(build_sensitivity(chain), p);
    for (int i = 1; i < n; ++i) CHECK(v(i) <= v(i - 1) + 1e-15);
}
