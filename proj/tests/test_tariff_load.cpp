#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "revs/tariff_load.hpp"

using namespace revs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path dir;
    TempDir() : dir(fs::temp_directory_path() / "revs_tariff_test") { fs::create_directories(dir); }
    ~TempDir() { fs::remove_all(dir); }
    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = dir / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
};

EvSpec stock_ev() { return EvSpec{20.0, 4.8, 0, 12, 0.2, 0.9}; }

}  // namespace

TEST_CASE("stock tariff file reproduces the published TOU rates") {
    const Tariff t = load_tariff(std::string(REVS_DATA_DIR) + "/tariff_default.csv");
    CHECK(t.rates(0) == 0.07866);
    CHECK(t.rates(4) == 0.07866);
    CHECK(t.rates(5) == 0.09511);
    CHECK(t.rates(14) == 0.09511);
    CHECK(t.rates(15) == 0.21436);
    CHECK(t.rates(16) == 0.21436);
    CHECK(t.rates(17) == 0.21436);
    CHECK(t.rates(18) == 0.09511);
    CHECK(t.rates(20) == 0.09511);
    CHECK(t.rates(23) == 0.09511);
    CHECK(t.rates == default_tariff().rates);
}

TEST_CASE("hourly tariff files parse and validate") {
    TempDir tmp;
    std::string flat = "hour,rate_usd_per_kwh\n";
    for (int h = 0; h < 24; ++h) flat += std::to_string(h) + ",0.1\n";
    const Tariff t = load_tariff(tmp.file("flat.csv", flat));
    CHECK(t.rates.minCoeff() == 0.1);
    CHECK(t.rates.maxCoeff() == 0.1);

    std::string short_file = "hour,rate_usd_per_kwh\n";
    for (int h = 0; h < 23; ++h) short_file += std::to_string(h) + ",0.1\n";
    CHECK_THROWS_AS(load_tariff(tmp.file("short.csv", short_file)), DataError);

    std::string negative = "hour,rate_usd_per_kwh\n";
    for (int h = 0; h < 24; ++h) negative += std::to_string(h) + (h == 3 ? ",-0.1\n" : ",0.1\n");
    CHECK_THROWS_AS(load_tariff(tmp.file("neg.csv", negative)), DataError);
}

TEST_CASE("range tariff files wrap midnight and reject overlap") {
    TempDir tmp;
    const Tariff t = load_tariff(tmp.file("wrap.csv",
                                          "start_hour,end_hour,rate\n"
                                          "22,6,0.05\n"
                                          "6,22,0.2\n"));
    CHECK(t.rates(23) == 0.05);
    CHECK(t.rates(5) == 0.05);
    CHECK(t.rates(6) == 0.2);
    CHECK(t.rates(21) == 0.2);

    CHECK_THROWS_AS(load_tariff(tmp.file("overlap.csv",
                                         "start_hour,end_hour,rate\n"
                                         "0,12,0.1\n"
                                         "10,24,0.1\n")),
                    DataError);
    CHECK_THROWS_AS(load_tariff(tmp.file("gap.csv",
                                         "start_hour,end_hour,rate\n"
                                         "0,12,0.1\n")),
                    DataError);
}

TEST_CASE("horizon rotation maps hours to intervals and back") {
    const Horizon hz{16, 24};
    CHECK(hz.hour_of(0) == 16);
    CHECK(hz.hour_of(8) == 0);
    CHECK(hz.index_of(4) == 12);
    const Eigen::VectorXd rates = default_tariff().rates;
    const Eigen::VectorXd rotated = rotate_to_horizon(rates, hz);
    CHECK(rotated(0) == 0.21436);  // 16:00
    CHECK(rotated(8) == 0.07866);  // midnight
    CHECK(rotate_to_hours(rotated, hz) == rates);
}

TEST_CASE("charging window maps to one contiguous index range") {
    const Horizon hz{16, 24};
    const auto [first, last] = ev_window_from_hours(16, 5, hz);
    CHECK(first == 0);
    CHECK(last == 12);
    const auto [f2, l2] = ev_window_from_hours(16, 5, hz, true);
    CHECK(l2 - f2 + 1 == 14);
    // a window that straddles the horizon boundary cannot stay contiguous
    CHECK_THROWS_AS(ev_window_from_hours(10, 20, hz), DataError);
}

TEST_CASE("profile files must cover every residence exactly once") {
    TempDir tmp;
    const DistributionNetwork net{{NodeKind::Substation, NodeKind::Residence, NodeKind::Transformer,
                                   NodeKind::Residence},
                                  {{0, 1, 0.01, 10}, {0, 2, 0.01, 10}, {2, 3, 0.01, 10}},
                                  100.0};
    auto row = [](int node, double level) {
        std::string s = std::to_string(node);
        for (int h = 0; h < 24; ++h) s += "," + csv::fmt(level);
        return s + "\n";
    };
    const std::string header = std::string(profile_file_header()) + "\n";

    const auto profiles =
        load_profiles(tmp.file("ok.csv", header + row(1, 1.0) + row(3, 2.0)), net);
    REQUIRE(profiles.size() == 2);
    CHECK(profiles[0].node == 1);
    CHECK(profiles[1].p0_kw(5) == 2.0);

    CHECK_THROWS_AS(load_profiles(tmp.file("missing.csv", header + row(1, 1.0)), net), DataError);
    CHECK_THROWS_AS(
        load_profiles(tmp.file("xfmr.csv", header + row(1, 1.0) + row(2, 1.0) + row(3, 1.0)), net),
        DataError);
    CHECK_THROWS_AS(
        load_profiles(tmp.file("neg.csv", header + row(1, -1.0) + row(3, 1.0)), net), DataError);
    CHECK_THROWS_AS(load_profiles(tmp.file("shortrow.csv", header + "1,1,1\n" + row(3, 1.0)), net),
                    DataError);
}

TEST_CASE("schedules add the charger rating on top of the base load") {
    const EvSpec spec = stock_ev();
    const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(24, 1.0);

    std::vector<std::uint8_t> off(24, 0);
    CHECK(apply_schedule(p0, spec, off) == p0);

    std::vector<std::uint8_t> z(24, 0);
    z[1] = 1;
    const Eigen::VectorXd p = apply_schedule(p0, spec, z);
    CHECK(p(1) == Catch::Approx(5.8));
    CHECK(p(0) == 1.0);

    std::vector<std::uint8_t> outside(24, 0);
    outside[20] = 1;  // beyond window_last = 12
    CHECK_THROWS_AS(apply_schedule(p0, spec, outside), DataError);
}

TEST_CASE("schedule changes are linear in the on/off vector") {
    rng::Engine g(7);
    const EvSpec spec = stock_ev();
    const Eigen::VectorXd p0 = testutil::random_vector(g, 24, 0.0, 3.0);
    std::vector<std::uint8_t> a(24, 0), b(24, 0);
    a[3] = 1;
    b[3] = 1;
    b[7] = 1;
    const Eigen::VectorXd diff = apply_schedule(p0, spec, b) - apply_schedule(p0, spec, a);
    CHECK(diff(7) == Catch::Approx(spec.charger_kw));
    CHECK(diff.cwiseAbs().sum() == Catch::Approx(spec.charger_kw));
}

TEST_CASE("state of charge bookkeeping accepts and rejects the right schedules") {
    const EvSpec spec = stock_ev();

    std::vector<std::uint8_t> three(24, 0);
    three[2] = three[5] = three[9] = 1;
    const ChargeSchedule ok = soc_trajectory(spec, three);
    CHECK(ok.soc(0) == 0.2);
    CHECK(ok.soc(spec.window_first) == 0.2);
    CHECK(ok.soc(spec.window_last + 1) == Catch::Approx(0.92));
    CHECK(ok.soc(23) == Catch::Approx(0.92));

    std::vector<std::uint8_t> none(24, 0);
    CHECK_THROWS_AS(soc_trajectory(spec, none), DataError);

    std::vector<std::uint8_t> four(24, 0);
    four[1] = four[2] = four[3] = four[4] = 1;  // 0.2 + 4*0.24 = 1.16
    CHECK_THROWS_AS(soc_trajectory(spec, four), DataError);
}

TEST_CASE("on-count bounds bracket every feasible schedule") {
    const EvSpec spec = stock_ev();
    CHECK(spec.min_on_intervals() == 3);
    CHECK(spec.max_on_intervals() == 3);

    rng::Engine g(13);
    for (int rep = 0; rep < 50; ++rep) {
        const EvSpec s = testutil::random_ev_spec(g, 24);
        const int n_min = s.min_on_intervals();
        const int n_max = std::min(s.max_on_intervals(), s.window_length());
        // any count inside the bracket yields a valid trajectory
        const int n = static_cast<int>(rng::uniform_int(g, n_min, n_max));
        std::vector<std::uint8_t> z(24, 0);
        for (int k = 0; k < n; ++k) z[static_cast<std::size_t>(s.window_first + k)] = 1;
        CHECK_NOTHROW(soc_trajectory(s, z));
        // one below the bracket fails (when the bracket has a positive floor)
        if (n_min > 0) {
            std::vector<std::uint8_t> under(24, 0);
            for (int k = 0; k < n_min - 1; ++k) under[static_cast<std::size_t>(s.window_first + k)] = 1;
            CHECK_THROWS_AS(soc_trajectory(s, under), DataError);
        }
    }
}

TEST_CASE("EV specs validate their feasibility up front") {
    EvSpec spec = stock_ev();
    CHECK_NOTHROW(spec.validate(24));

    EvSpec tight = spec;
    tight.window_last = tight.window_first + 1;  // needs 3 intervals, has 2
    CHECK_THROWS_AS(tight.validate(24), DataError);

    EvSpec overfull = spec;
    overfull.soc_init = 0.9;
    overfull.soc_final = 1.0;
    overfull.capacity_kwh = 1.0;  // one interval overshoots the battery
    CHECK_THROWS_AS(overfull.validate(24), DataError);

    EvSpec bad_soc = spec;
    bad_soc.soc_final = 0.1;
    CHECK_THROWS_AS(bad_soc.validate(24), DataError);
}
