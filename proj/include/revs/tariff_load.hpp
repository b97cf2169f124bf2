#pragma once

// Tariffs, base load profiles and EV charging specifications.
//
// Files are indexed by wall-clock hour (0..23). The optimization horizon is
// re-indexed so that interval 0 starts at the EV charging window's opening
// hour (default 16:00); that keeps the charging window a single contiguous
// index range. Horizon describes the mapping.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "revs/csv.hpp"
#include "revs/errors.hpp"
#include "revs/net_model.hpp"

namespace revs {

constexpr double kIntervalHours = 1.0;  // hourly tariffs and profiles throughout

struct Horizon {
    int start_hour = 16;
    int intervals = 24;

    int hour_of(int t) const { return (start_hour + t) % 24; }
    int index_of(int hour) const { return ((hour - start_hour) % 24 + 24) % 24; }
};

// Rotates an hour-of-day vector into horizon order (out[t] = in[hour_of(t)]).
inline Eigen::VectorXd rotate_to_horizon(const Eigen::VectorXd& by_hour, const Horizon& hz) {
    if (by_hour.size() != hz.intervals) throw DataError("rotate_to_horizon: length mismatch");
    Eigen::VectorXd out(by_hour.size());
    for (int t = 0; t < hz.intervals; ++t) out(t) = by_hour(hz.hour_of(t));
    return out;
}

inline Eigen::VectorXd rotate_to_hours(const Eigen::VectorXd& by_horizon, const Horizon& hz) {
    if (by_horizon.size() != hz.intervals) throw DataError("rotate_to_hours: length mismatch");
    Eigen::VectorXd out(by_horizon.size());
    for (int t = 0; t < hz.intervals; ++t) out(hz.hour_of(t)) = by_horizon(t);
    return out;
}

// Hourly electricity rate, indexed by hour of day.
struct Tariff {
    Eigen::VectorXd rates;  // $/kWh

    void validate() const {
        if (rates.size() != 24)
            throw DataError("tariff must define exactly 24 hourly rates, got " +
                            std::to_string(rates.size()));
        for (Eigen::Index h = 0; h < rates.size(); ++h)
            if (!(rates(h) > 0.0))
                throw DataError("tariff rate for hour " + std::to_string(h) + " must be positive");
    }
};

// Off-peak TOU plan used as the stock experiment tariff.
inline Tariff default_tariff() {
    Tariff t;
    t.rates.resize(24);
    for (int h = 0; h < 24; ++h) {
        if (h < 5) t.rates(h) = 0.07866;
        else if (h < 15) t.rates(h) = 0.09511;
        else if (h < 18) t.rates(h) = 0.21436;
        else t.rates(h) = 0.09511;
    }
    return t;
}

// Accepts either per-hour rows `hour,rate_usd_per_kwh` (24 rows) or compact
// ranges `start_hour,end_hour,rate` covering [start,end) with midnight wrap
// when end <= start. Every hour must be covered exactly once.
inline Tariff load_tariff(const std::string& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw DataError(path + ": empty tariff file");
    const auto header = csv::split(lines[0]);

    Tariff tariff;
    tariff.rates = Eigen::VectorXd::Zero(24);
    std::vector<char> covered(24, 0);

    auto cover = [&](int hour, double rate, const std::string& ctx) {
        if (hour < 0 || hour > 23) throw DataError(ctx + ": hour out of range 0..23");
        if (covered[static_cast<std::size_t>(hour)])
            throw DataError(ctx + ": hour " + std::to_string(hour) + " covered twice");
        covered[static_cast<std::size_t>(hour)] = 1;
        tariff.rates(hour) = rate;
    };

    if (header == csv::split("hour,rate_usd_per_kwh")) {
        for (std::size_t r = 1; r < lines.size(); ++r) {
            const auto f = csv::split(lines[r]);
            const std::string ctx = path + " row " + std::to_string(r + 1);
            if (f.size() != 2) throw DataError(ctx + ": expected 2 fields");
            cover(static_cast<int>(csv::to_long(f[0], ctx)), csv::to_double(f[1], ctx), ctx);
        }
    } else if (header == csv::split("start_hour,end_hour,rate")) {
        for (std::size_t r = 1; r < lines.size(); ++r) {
            const auto f = csv::split(lines[r]);
            const std::string ctx = path + " row " + std::to_string(r + 1);
            if (f.size() != 3) throw DataError(ctx + ": expected 3 fields");
            const int start = static_cast<int>(csv::to_long(f[0], ctx));
            int end = static_cast<int>(csv::to_long(f[1], ctx));
            const double rate = csv::to_double(f[2], ctx);
            if (start < 0 || start > 23 || end < 1 || end > 24)
                throw DataError(ctx + ": range hours out of bounds");
            if (end % 24 == start) throw DataError(ctx + ": empty or full-circle range");
            if (end <= start) end += 24;  // wraps midnight
            for (int h = start; h < end; ++h) cover(h % 24, rate, ctx);
        }
    } else {
        throw DataError(path + ": expected header 'hour,rate_usd_per_kwh' or 'start_hour,end_hour,rate'");
    }

    for (int h = 0; h < 24; ++h)
        if (!covered[static_cast<std::size_t>(h)])
            throw DataError(path + ": tariff does not cover hour " + std::to_string(h) +
                            " (24 hourly rates required)");
    tariff.validate();
    return tariff;
}

inline void save_tariff(const Tariff& tariff, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "hour,rate_usd_per_kwh\n";
    for (int h = 0; h < 24; ++h) out << h << ',' << csv::fmt(tariff.rates(h)) << "\n";
}

// Uncontrollable base demand of one residence, indexed by hour of day.
struct BaseLoadProfile {
    int node = 0;
    Eigen::VectorXd p0_kw;
};

inline const char* profile_file_header() {
    return "node_id,h0,h1,h2,h3,h4,h5,h6,h7,h8,h9,h10,h11,h12,h13,h14,h15,h16,h17,h18,h19,h20,h21,h22,h23";
}

// One row per residence node; every residence in the network must be covered.
inline std::vector<BaseLoadProfile> load_profiles(const std::string& path,
                                                  const DistributionNetwork& net) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw DataError(path + ": empty profile file");
    if (csv::split(lines[0]) != csv::split(profile_file_header()))
        throw DataError(path + ": expected header '" + std::string(profile_file_header()) + "'");

    std::vector<BaseLoadProfile> profiles;
    std::vector<char> seen(static_cast<std::size_t>(net.node_count()), 0);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = csv::split(lines[r]);
        const std::string ctx = path + " row " + std::to_string(r + 1);
        if (f.size() != 25) throw DataError(ctx + ": expected 25 fields, got " + std::to_string(f.size()));
        BaseLoadProfile p;
        p.node = static_cast<int>(csv::to_long(f[0], ctx));
        if (p.node < 1 || p.node >= net.node_count())
            throw DataError(ctx + ": unknown node id " + std::to_string(p.node));
        if (net.kind(p.node) != NodeKind::Residence)
            throw DataError(ctx + ": node " + std::to_string(p.node) + " is a " +
                            to_string(net.kind(p.node)) + ", not a residence");
        if (seen[static_cast<std::size_t>(p.node)])
            throw DataError(ctx + ": duplicate profile for node " + std::to_string(p.node));
        seen[static_cast<std::size_t>(p.node)] = 1;
        p.p0_kw.resize(24);
        for (int h = 0; h < 24; ++h) {
            p.p0_kw(h) = csv::to_double(f[static_cast<std::size_t>(h) + 1], ctx);
            if (p.p0_kw(h) < 0.0) throw DataError(ctx + ": negative load at hour " + std::to_string(h));
        }
        profiles.push_back(std::move(p));
    }
    for (int node : net.residences())
        if (!seen[static_cast<std::size_t>(node)])
            throw DataError(path + ": missing profile for residence node " + std::to_string(node));
    std::sort(profiles.begin(), profiles.end(),
              [](const BaseLoadProfile& a, const BaseLoadProfile& b) { return a.node < b.node; });
    return profiles;
}

inline void save_profiles(const std::vector<BaseLoadProfile>& profiles, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << profile_file_header() << "\n";
    for (const auto& p : profiles) {
        out << p.node;
        for (int h = 0; h < 24; ++h) out << ',' << csv::fmt(p.p0_kw(h));
        out << "\n";
    }
}

// EV battery and charger ratings plus the charging window, expressed as a
// closed range [window_first, window_last] of horizon interval indices.
struct EvSpec {
    double capacity_kwh = 20.0;
    double charger_kw = 4.8;
    int window_first = 0;
    int window_last = 12;
    double soc_init = 0.2;
    double soc_final = 0.9;

    int window_length() const { return window_last - window_first + 1; }

    // Required on-intervals to reach soc_final; the epsilon guards exact
    // integer ratios against floating-point noise.
    int min_on_intervals() const {
        const double need = (soc_final - soc_init) * capacity_kwh / (charger_kw * kIntervalHours);
        return std::max(0, static_cast<int>(std::ceil(need - 1e-9)));
    }
    // On-intervals before the battery would exceed full charge.
    int max_on_intervals() const {
        const double room = (1.0 - soc_init) * capacity_kwh / (charger_kw * kIntervalHours);
        return std::max(0, static_cast<int>(std::floor(room + 1e-9)));
    }

    void validate(int intervals = 24) const {
        if (!(capacity_kwh > 0.0)) throw DataError("EV capacity must be positive");
        if (!(charger_kw > 0.0)) throw DataError("EV charger rating must be positive");
        if (!(0.0 <= soc_init && soc_init <= soc_final && soc_final <= 1.0))
            throw DataError("EV SOC bounds must satisfy 0 <= init <= final <= 1");
        if (window_first < 0 || window_last >= intervals || window_first > window_last)
            throw DataError("EV charging window out of bounds");
        if (min_on_intervals() > window_length())
            throw DataError("infeasible EV spec: needs " + std::to_string(min_on_intervals()) +
                            " charging intervals but the window has " +
                            std::to_string(window_length()));
        if (min_on_intervals() > max_on_intervals())
            throw DataError("infeasible EV spec: required charge exceeds battery headroom");
    }
};

// Maps a wall-clock availability window [start_hour, end_hour) onto horizon
// indices. include_end_hour additionally admits the interval beginning at
// end_hour.
inline std::pair<int, int> ev_window_from_hours(int start_hour, int end_hour,
                                                const Horizon& hz,
                                                bool include_end_hour = false) {
    if (start_hour < 0 || start_hour > 23 || end_hour < 0 || end_hour > 23)
        throw DataError("EV window hours must be in 0..23");
    int count = ((end_hour - start_hour) % 24 + 24) % 24;
    if (count == 0) count = 24;
    if (include_end_hour && count < 24) ++count;
    const int first = hz.index_of(start_hour);
    const int last = first + count - 1;
    if (last >= hz.intervals)
        throw DataError("EV window does not fit the horizon as a contiguous range; "
                        "align the horizon start with the window start");
    return {first, last};
}

// On/off pattern and the implied state of charge at instants 0..T.
struct ChargeSchedule {
    std::vector<std::uint8_t> z;
    Eigen::VectorXd soc;

    int on_count() const {
        return static_cast<int>(std::count(z.begin(), z.end(), std::uint8_t{1}));
    }
};

inline void check_schedule_window(const EvSpec& spec, const std::vector<std::uint8_t>& z) {
    for (std::size_t t = 0; t < z.size(); ++t) {
        if (z[t] > 1) throw DataError("schedule entries must be 0 or 1");
        if (z[t] == 1 && (static_cast<int>(t) < spec.window_first || static_cast<int>(t) > spec.window_last))
            throw DataError("schedule charges at interval " + std::to_string(t) +
                            " outside the availability window");
    }
}

// Total consumption p0 + z * charger rating; p0 is horizon-aligned.
inline Eigen::VectorXd apply_schedule(const Eigen::VectorXd& p0_kw, const EvSpec& spec,
                                      const std::vector<std::uint8_t>& z) {
    if (static_cast<Eigen::Index>(z.size()) != p0_kw.size())
        throw DataError("apply_schedule: length mismatch");
    check_schedule_window(spec, z);
    Eigen::VectorXd p = p0_kw;
    for (std::size_t t = 0; t < z.size(); ++t)
        if (z[t]) p(static_cast<Eigen::Index>(t)) += spec.charger_kw;
    return p;
}

// Builds the SOC trajectory for a given on/off pattern and validates it:
// SOC stays within [0,1] and reaches soc_final by the window end. The SOC
// equals soc_init at the instant the window opens.
inline ChargeSchedule soc_trajectory(const EvSpec& spec, const std::vector<std::uint8_t>& z,
                                     int intervals = 24) {
    spec.validate(intervals);
    if (static_cast<int>(z.size()) != intervals) throw DataError("soc_trajectory: schedule length mismatch");
    check_schedule_window(spec, z);

    ChargeSchedule out;
    out.z = z;
    out.soc.resize(intervals + 1);
    const double per_interval = spec.charger_kw * kIntervalHours / spec.capacity_kwh;
    double s = spec.soc_init;
    for (int k = 0; k <= spec.window_first; ++k) out.soc(k) = s;
    for (int t = spec.window_first; t < intervals; ++t) {
        if (z[static_cast<std::size_t>(t)]) s += per_interval;
        if (s > 1.0 + 1e-9)
            throw DataError("infeasible schedule: SOC " + csv::fmt(s) + " exceeds 1 at interval " +
                            std::to_string(t));
        out.soc(t + 1) = s;
    }
    if (out.soc(spec.window_last + 1) < spec.soc_final - 1e-9)
        throw DataError("infeasible schedule: final SOC " + csv::fmt(out.soc(spec.window_last + 1)) +
                        " is below the required " + csv::fmt(spec.soc_final));
    return out;
}

}  // namespace revs
