#pragma once

#include "crfmm/features.hpp"
#include "crfmm/lattice.hpp"

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

namespace crfmm {

inline constexpr const char* kModelFormat = "crfmm-model/1";

/// Trained chain CRF: weights aligned with the catalog, the scaler fitted on
/// the training set, and the lattice settings used at training time.
struct CrfModel {
    FeatureCatalog catalog;
    Scaler scaler;
    std::vector<double> omega;  // point weights
    std::vector<double> mu;     // path weights
    LatticeConfig lattice;

    std::vector<double> weights() const;
    void set_weights(std::span<const double> w);
    std::size_t nonzero_weights() const;

    nlohmann::json to_json() const;
    /// Validates names against the registry and all array lengths.
    static CrfModel from_json(const nlohmann::json& j);

    void save(const std::filesystem::path& file) const;
    static CrfModel load(const std::filesystem::path& file);
};

nlohmann::json to_json(const LatticeConfig& cfg);
LatticeConfig lattice_config_from_json(const nlohmann::json& j);

} // namespace crfmm
