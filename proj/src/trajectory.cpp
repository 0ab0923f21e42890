#include "crfmm/trajectory.hpp"

#include "crfmm/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

namespace crfmm {

namespace {

// Days since 1970-01-01 of a proleptic Gregorian date (H. Hinnant).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

bool leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
    static constexpr unsigned table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && leap(y) ? 29 : table[m - 1];
}

std::vector<EdgeId> join_paths(std::vector<EdgeId> a, const std::vector<EdgeId>& b) {
    auto it = b.begin();
    if (!a.empty() && !b.empty() && a.back() == b.front()) ++it;
    a.insert(a.end(), it, b.end());
    return a;
}

} // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
    text = text::trim(text);
    // YYYY-MM-DD HH:MM:SS
    if (text.size() != 19 || text[4] != '-' || text[7] != '-' || text[10] != ' ' || text[13] != ':' ||
        text[16] != ':')
        return std::nullopt;
    const auto year = text::parse_number<int>(text.substr(0, 4));
    const auto month = text::parse_number<unsigned>(text.substr(5, 2));
    const auto day = text::parse_number<unsigned>(text.substr(8, 2));
    const auto hour = text::parse_number<unsigned>(text.substr(11, 2));
    const auto minute = text::parse_number<unsigned>(text.substr(14, 2));
    const auto second = text::parse_number<unsigned>(text.substr(17, 2));
    if (!year || !month || !day || !hour || !minute || !second) return std::nullopt;
    if (*month < 1 || *month > 12 || *day < 1 || *day > days_in_month(*year, *month) || *hour > 23 ||
        *minute > 59 || *second > 59)
        return std::nullopt;
    return days_from_civil(*year, *month, *day) * 86400 + *hour * 3600 + *minute * 60 + *second;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t secs = epoch_seconds % 86400;
    if (secs < 0) {
        secs += 86400;
        --days;
    }
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02lld:%02lld:%02lld", static_cast<long long>(y), m, d,
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

void GroundTruth::validate(std::size_t n_points) const {
    if (point_labels.size() != n_points) throw DataError("label count");
    if (n_points > 0 && gap_paths.size() != n_points - 1) throw DataError("label count");
    for (std::size_t t = 0; t < gap_paths.size(); ++t) {
        const auto& gap = gap_paths[t];
        if (gap.empty() || gap.front() != point_labels[t] || gap.back() != point_labels[t + 1])
            throw DataError("inconsistent gap " + std::to_string(t));
    }
}

GroundTruth GroundTruth::subsample(std::span<const std::size_t> kept) const {
    GroundTruth out;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        out.point_labels.push_back(point_labels.at(kept[i]));
        if (i == 0) continue;
        std::vector<EdgeId> joined{point_labels[kept[i - 1]]};
        for (std::size_t g = kept[i - 1]; g < kept[i]; ++g) joined = join_paths(std::move(joined), gap_paths.at(g));
        out.gap_paths.push_back(std::move(joined));
    }
    return out;
}

ParsedObservations parse_observations(std::istream& src) {
    ParsedObservations parsed;
    CleaningReport& report = parsed.report;
    std::string line;
    if (!std::getline(src, line)) throw DataError("observations: missing header");
    if (text::trim(line) != "car_id,longitude,latitude,speed,direction,occ,timestamp")
        throw DataError("observations: malformed header");

    std::map<CarId, std::vector<Observation>> by_car;
    auto drop = [&report](const char* reason) { ++report.dropped[reason]; };
    while (std::getline(src, line)) {
        if (text::trim(line).empty()) continue;
        ++report.rows_read;
        const auto f = text::split(text::trim(line), ',');
        if (f.size() != 7 || std::any_of(f.begin(), f.end(), [](auto s) { return text::trim(s).empty(); })) {
            drop("missing value");
            continue;
        }
        const auto car = text::parse_number<CarId>(f[0]);
        const auto lon = text::parse_number<double>(f[1]);
        const auto lat = text::parse_number<double>(f[2]);
        const auto speed = text::parse_number<double>(f[3]);
        const auto dir = text::parse_number<int>(f[4]);
        const auto occ = text::parse_number<int>(f[5]);
        const auto ts = parse_timestamp(f[6]);
        if (!car) {
            drop("invalid car id");
            continue;
        }
        if (!lon || !lat || !GeoPoint{*lon, *lat}.valid()) {
            drop("invalid coordinates");
            continue;
        }
        if (!speed || !std::isfinite(*speed) || *speed < 0.0) {
            drop("invalid speed");
            continue;
        }
        if (!dir || *dir < 0 || *dir > 359) {
            drop("invalid direction");
            continue;
        }
        if (!occ || (*occ != 0 && *occ != 1)) {
            drop("invalid occupancy");
            continue;
        }
        if (!ts) {
            drop("invalid timestamp");
            continue;
        }
        by_car[*car].push_back({*car, {*lon, *lat}, *speed, *dir, *occ == 1, *ts});
    }

    for (auto& [car, obs] : by_car) {
        std::stable_sort(obs.begin(), obs.end(),
                         [](const Observation& a, const Observation& b) { return a.timestamp < b.timestamp; });
        Trajectory traj{car, {}};
        for (const Observation& o : obs) {
            if (!traj.empty() && traj.observations.back().timestamp == o.timestamp) {
                drop("duplicate timestamp");
                continue;
            }
            traj.observations.push_back(o);
        }
        report.rows_kept += traj.size();
        parsed.trajectories.push_back(std::move(traj));
    }
    return parsed;
}

ParsedObservations parse_observations(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    return parse_observations(in);
}

void write_observations(std::ostream& out, std::span<const Trajectory> trajectories) {
    out << "car_id,longitude,latitude,speed,direction,occ,timestamp\n";
    for (const Trajectory& t : trajectories) {
        for (const Observation& o : t.observations) {
            out << o.car_id << ',' << text::fixed(o.pos.lon, 6) << ',' << text::fixed(o.pos.lat, 6) << ','
                << text::fixed(o.speed_kmh, 1) << ',' << o.direction << ',' << (o.occupied ? 1 : 0) << ','
                << format_timestamp(o.timestamp) << '\n';
        }
    }
}

double median_interval(const Trajectory& traj) {
    if (traj.size() < 2) return 0.0;
    std::vector<double> gaps;
    for (std::size_t i = 1; i < traj.size(); ++i)
        gaps.push_back(static_cast<double>(traj.observations[i].timestamp - traj.observations[i - 1].timestamp));
    std::sort(gaps.begin(), gaps.end());
    const std::size_t n = gaps.size();
    return n % 2 == 1 ? gaps[n / 2] : 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]);
}

std::vector<std::size_t> even_sample_indices(const Trajectory& traj, double target_interval_s) {
    if (traj.size() >= 2 && target_interval_s < median_interval(traj)) throw DataError("cannot upsample");
    std::vector<std::size_t> kept;
    if (traj.empty()) return kept;
    kept.push_back(0);
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const auto elapsed = traj.observations[i].timestamp - traj.observations[kept.back()].timestamp;
        if (static_cast<double>(elapsed) >= target_interval_s) kept.push_back(i);
    }
    return kept;
}

Trajectory downsample_even(const Trajectory& traj, double target_interval_s) {
    Trajectory out{traj.car_id, {}};
    for (std::size_t i : even_sample_indices(traj, target_interval_s)) out.observations.push_back(traj.observations[i]);
    return out;
}

TrainTestSplit split_train_test(std::size_t count, double ratio_train, std::uint64_t seed) {
    if (count < 2) throw DataError("split needs at least 2 trajectories");
    if (!(ratio_train > 0.0 && ratio_train < 1.0)) throw DataError("split ratio must be in (0, 1)");
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::lround(ratio_train * static_cast<double>(count)));
    TrainTestSplit split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return split;
}

std::map<CarId, GroundTruth> parse_ground_truth(std::istream& src) {
    std::map<CarId, GroundTruth> all;
    std::string line;
    std::size_t lineno = 0;
    auto next = [&](std::vector<std::string_view>& toks) {
        while (std::getline(src, line)) {
            ++lineno;
            const auto body = text::trim(line);
            if (body.empty() || body.front() == '#') continue;
            toks = text::tokens(body);
            return true;
        }
        return false;
    };
    std::vector<std::string_view> toks;
    while (next(toks)) {
        if (toks.size() != 3 || toks[0] != "traj") throw data_error_at(lineno, "expected `traj <car_id> <n_points>`");
        const auto car = text::parse_number<CarId>(toks[1]);
        const auto n = text::parse_number<std::size_t>(toks[2]);
        if (!car || !n) throw data_error_at(lineno, "malformed traj line");
        GroundTruth truth;
        for (std::size_t i = 0; i < *n; ++i) {
            if (!next(toks) || toks.size() != 3 || toks[0] != "point")
                throw data_error_at(lineno, "expected `point <index> <edge_id>`");
            const auto idx = text::parse_number<std::size_t>(toks[1]);
            const auto e = text::parse_number<EdgeId>(toks[2]);
            if (!idx || *idx != i || !e) throw data_error_at(lineno, "malformed point line");
            truth.point_labels.push_back(*e);
        }
        for (std::size_t i = 0; i + 1 < *n; ++i) {
            if (!next(toks) || toks.size() < 3 || toks[0] != "gap")
                throw data_error_at(lineno, "expected `gap <index> <edge_id>...`");
            const auto idx = text::parse_number<std::size_t>(toks[1]);
            if (!idx || *idx != i) throw data_error_at(lineno, "malformed gap line");
            std::vector<EdgeId> path;
            for (std::size_t k = 2; k < toks.size(); ++k) {
                const auto e = text::parse_number<EdgeId>(toks[k]);
                if (!e) throw data_error_at(lineno, "malformed gap edge");
                path.push_back(*e);
            }
            truth.gap_paths.push_back(std::move(path));
        }
        if (!all.emplace(*car, std::move(truth)).second)
            throw data_error_at(lineno, "duplicate trajectory " + std::to_string(*car));
    }
    return all;
}

std::map<CarId, GroundTruth> parse_ground_truth(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    return parse_ground_truth(in);
}

GroundTruth load_ground_truth(const std::map<CarId, GroundTruth>& all, const Trajectory& traj) {
    const auto it = all.find(traj.car_id);
    if (it == all.end()) throw DataError("no ground truth for car " + std::to_string(traj.car_id));
    it->second.validate(traj.size());
    return it->second;
}

void write_ground_truth(std::ostream& out, CarId car, const GroundTruth& truth) {
    out << "traj " << car << ' ' << truth.point_labels.size() << '\n';
    for (std::size_t i = 0; i < truth.point_labels.size(); ++i) out << "point " << i << ' ' << truth.point_labels[i] << '\n';
    for (std::size_t i = 0; i < truth.gap_paths.size(); ++i) {
        out << "gap " << i;
        for (EdgeId e : truth.gap_paths[i]) out << ' ' << e;
        out << '\n';
    }
}

} // namespace crfmm
