#pragma once

#include "crfmm/protocol.hpp"

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

namespace crfmm {

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNotConverged = 3 };

struct FileConfig {
    std::string net_nodes, net_edges;
    std::string obs, truth;
    std::string model, pred;
    std::string out, report;
};

/// Everything a command can be configured with. Precedence: command-line
/// flags, then the --config document, then these defaults.
struct RunConfig {
    ProtocolConfig protocol;  // gen, lattice, filter, train, taxonomy, sampling
    TurnConfig turns;
    std::vector<std::string> point_features;
    std::vector<std::string> path_features;
    FileConfig files;
    std::uint64_t seed = 7;
    int jobs = 0;  // 0 = all available threads

    RunConfig();
    FeatureCatalog catalog() const;
    nlohmann::json to_json() const;
};

/// Overlays a config document on `base`; unknown keys throw DataError.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

/// Entry point of the `crfmm` executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace crfmm
