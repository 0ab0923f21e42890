#pragma once

#include "crfmm/matcher.hpp"

#include <array>
#include <json.hpp>
#include <string>
#include <vector>

namespace crfmm {

struct EvalReport {
    std::size_t points = 0;
    std::size_t paths = 0;
    std::size_t point_errors = 0;
    std::size_t path_errors = 0;
    std::size_t unmatched_points = 0;  // dropped observations, counted as errors
    std::size_t unpredicted_gaps = 0;  // gaps across piece boundaries, counted as errors

    double point_error_rate() const;
    double path_error_rate() const;
    void merge(const EvalReport& other);
    nlohmann::json to_json() const;
};

/// Point error: wrong or missing edge. Path error: edge sequence differs from
/// the truth or was not predicted. Throws DataError on misaligned inputs.
EvalReport error_rates(std::span<const MatchResult> predictions, std::span<const GroundTruth> truths);
EvalReport error_rates(const MatchResult& prediction, const GroundTruth& truth);

enum class ErrorCategory { MissingLabel, PositionOutlier, StartEndPoint, UTurn, ParallelRoads, Other };
inline constexpr std::size_t kErrorCategoryCount = 6;
std::string to_string(ErrorCategory c);

struct TaxonomyConfig {
    double outlier_radius_m = 50.0;
    double parallel_distance_m = 30.0;
    double parallel_bearing_deg = 20.0;
};

struct ErrorTaxonomy {
    std::array<std::size_t, kErrorCategoryCount> counts{};

    std::size_t total() const;
    double fraction(ErrorCategory c) const;
    void merge(const ErrorTaxonomy& other);
    nlohmann::json to_json() const;
};

/// Category of every point/path error instance of one trajectory, by
/// priority: missing label, position outlier, start/end point, u-turn,
/// parallel roads, other.
struct CategorizedError {
    bool is_path = false;
    std::size_t index = 0;
    ErrorCategory category = ErrorCategory::Other;
};

std::vector<CategorizedError> categorize_errors(const MatchResult& prediction, const GroundTruth& truth,
                                                const LatticeBuild& build, const RoadNetwork& net,
                                                const TaxonomyConfig& cfg = {});
ErrorTaxonomy summarize(std::span<const CategorizedError> errors);

/// One row of the method comparison report.
struct MethodRow {
    std::string method;
    std::size_t feature_count = 0;
    double train_point = 0.0;
    double train_path = 0.0;
    double test_point = 0.0;
    double test_path = 0.0;

    friend bool operator==(const MethodRow&, const MethodRow&) = default;
};

enum class ReportFormat { Csv, Json };
ReportFormat parse_report_format(const std::string& s);

/// Columns: method, feature_count, train_point, train_path, test_point, test_path.
/// Throws DataError on empty input.
std::string emit_report(std::span<const MethodRow> rows, ReportFormat format);
std::vector<MethodRow> parse_report_json(const std::string& doc);

} // namespace crfmm
