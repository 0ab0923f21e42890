#include "crfmm/model.hpp"

#include "crfmm/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace crfmm {

std::vector<double> CrfModel::weights() const {
    std::vector<double> w(omega);
    w.insert(w.end(), mu.begin(), mu.end());
    return w;
}

void CrfModel::set_weights(std::span<const double> w) {
    if (w.size() != catalog.dim()) throw Error("weight vector does not match catalog");
    omega.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(catalog.point_dim()));
    mu.assign(w.begin() + static_cast<std::ptrdiff_t>(catalog.point_dim()), w.end());
}

std::size_t CrfModel::nonzero_weights() const {
    const auto nz = [](double v) { return v != 0.0; };
    return static_cast<std::size_t>(std::count_if(omega.begin(), omega.end(), nz) +
                                    std::count_if(mu.begin(), mu.end(), nz));
}

nlohmann::json to_json(const LatticeConfig& cfg) {
    return {{"radius_m", cfg.radius_m},
            {"radius_max_m", cfg.radius_max_m},
            {"max_candidates_k", cfg.max_candidates_k},
            {"paths_per_pair_k", cfg.paths_per_pair_k},
            {"length_cap_factor", cfg.length_cap_factor},
            {"length_cap_floor_m", cfg.length_cap_floor_m},
            {"speed_cap_kmh", cfg.speed_cap_kmh}};
}

LatticeConfig lattice_config_from_json(const nlohmann::json& j) {
    LatticeConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "radius_m") cfg.radius_m = value.get<double>();
        else if (key == "radius_max_m") cfg.radius_max_m = value.get<double>();
        else if (key == "max_candidates_k") cfg.max_candidates_k = value.get<std::size_t>();
        else if (key == "paths_per_pair_k") cfg.paths_per_pair_k = value.get<std::size_t>();
        else if (key == "length_cap_factor") cfg.length_cap_factor = value.get<double>();
        else if (key == "length_cap_floor_m") cfg.length_cap_floor_m = value.get<double>();
        else if (key == "speed_cap_kmh") cfg.speed_cap_kmh = value.get<double>();
        else throw DataError("lattice config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

nlohmann::json CrfModel::to_json() const {
    nlohmann::json j;
    j["format"] = kModelFormat;
    j["point_features"] = catalog.point_names();
    j["path_features"] = catalog.path_names();
    j["omega"] = omega;
    j["mu"] = mu;
    j["scaler"] = {{"point_min", scaler.point_min},
                   {"point_max", scaler.point_max},
                   {"path_min", scaler.path_min},
                   {"path_max", scaler.path_max}};
    j["filter"] = {{"v_min_kmh", catalog.filter().v_min_kmh}, {"val_0", catalog.filter().val_0}};
    j["turns"] = {{"straight_max_deg", catalog.turns().straight_max_deg},
                  {"turn_max_deg", catalog.turns().turn_max_deg}};
    j["lattice"] = crfmm::to_json(lattice);
    return j;
}

CrfModel CrfModel::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat)
            throw DataError("model: unsupported format " + j.at("format").dump());
        FilterConfig filter{j.at("filter").at("v_min_kmh").get<double>(), j.at("filter").at("val_0").get<double>()};
        TurnConfig turns{j.at("turns").at("straight_max_deg").get<double>(),
                         j.at("turns").at("turn_max_deg").get<double>()};
        CrfModel m;
        m.catalog = FeatureCatalog(j.at("point_features").get<std::vector<std::string>>(),
                                   j.at("path_features").get<std::vector<std::string>>(), filter, turns);
        m.omega = j.at("omega").get<std::vector<double>>();
        m.mu = j.at("mu").get<std::vector<double>>();
        const auto& s = j.at("scaler");
        m.scaler.point_min = s.at("point_min").get<std::vector<double>>();
        m.scaler.point_max = s.at("point_max").get<std::vector<double>>();
        m.scaler.path_min = s.at("path_min").get<std::vector<double>>();
        m.scaler.path_max = s.at("path_max").get<std::vector<double>>();
        const std::size_t pd = m.catalog.point_dim();
        const std::size_t qd = m.catalog.path_dim();
        if (m.omega.size() != pd || m.mu.size() != qd)
            throw DataError("model: weight lengths do not match feature names");
        if (m.scaler.point_min.size() != pd || m.scaler.point_max.size() != pd || m.scaler.path_min.size() != qd ||
            m.scaler.path_max.size() != qd)
            throw DataError("model: scaler lengths do not match feature names");
        for (double w : m.weights())
            if (!std::isfinite(w)) throw DataError("model: non-finite weight");
        for (std::size_t k = 0; k < pd; ++k) {
            if (m.scaler.point_min[k] > m.scaler.point_max[k]) throw DataError("model: scaler min > max");
            m.scaler.point_exempt.push_back(m.catalog.point_is_bias(k));
        }
        for (std::size_t k = 0; k < qd; ++k) {
            if (m.scaler.path_min[k] > m.scaler.path_max[k]) throw DataError("model: scaler min > max");
            m.scaler.path_exempt.push_back(m.catalog.path_is_bias(k));
        }
        m.lattice = lattice_config_from_json(j.at("lattice"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    }
}

void CrfModel::save(const std::filesystem::path& file) const {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << to_json().dump(2) << '\n';
}

CrfModel CrfModel::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    }
    return from_json(j);
}

} // namespace crfmm
