#pragma once

#include "crfmm/evaluation.hpp"
#include "crfmm/synthgen.hpp"
#include "crfmm/trainer.hpp"

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace crfmm {

/// Synthetic train/test experiment: generate, degrade by even sampling,
/// split by trajectory, train each method, report one row per method.
struct ProtocolConfig {
    GenConfig gen;
    std::size_t trajectories = 60;
    std::size_t route_len_edges = 40;
    double interval_s = 120.0;
    double train_ratio = 0.7;
    LatticeConfig lattice;
    FilterConfig filter;
    TrainConfig train;
    TaxonomyConfig taxonomy;
    int threads = 0;
};

struct Dataset {
    RoadNetwork net;
    std::vector<Trajectory> trajectories;  // downsampled
    std::vector<GroundTruth> truths;
    TrainTestSplit split;
    std::vector<LatticeBuild> builds;
};

Dataset make_dataset(const ProtocolConfig& cfg);

struct MethodSpec {
    std::string name;
    FeatureCatalog catalog;
    Regularizer regularizer = Regularizer::L2;
};

/// base_simple, base_complex, CRFs_L2, CRFs_L1.
std::vector<MethodSpec> standard_methods(const FilterConfig& filter, const TurnConfig& turns = {});
MethodSpec method_by_name(const std::string& name, const FilterConfig& filter, const TurnConfig& turns = {});

struct MethodOutcome {
    MethodSpec spec;
    CrfModel model;
    TrainReport report;
    EvalReport train_eval;
    EvalReport test_eval;
    std::vector<MatchResult> predictions;       // per dataset trajectory
    std::vector<PreparedTrajectory> prepared;   // scaled features
    MethodRow row;
};

MethodOutcome run_method(const Dataset& data, const MethodSpec& spec, const ProtocolConfig& cfg);

struct ProtocolResult {
    std::vector<MethodOutcome> methods;
    EvalReport nearest_train;
    EvalReport nearest_test;
    std::optional<ErrorTaxonomy> taxonomy;  // of the last l1 method, train and test errors
    std::vector<MethodRow> rows;

    const MethodOutcome& method(const std::string& name) const;
    nlohmann::json to_json() const;
};

ProtocolResult run_protocol(const Dataset& data, std::span<const MethodSpec> methods, const ProtocolConfig& cfg);

/// Errors of the nearest-candidate decoder over a subset of trajectories.
EvalReport nearest_baseline(const Dataset& data, std::span<const std::size_t> subset);

} // namespace crfmm
