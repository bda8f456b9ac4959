#ifndef FAIRBENCH_BENCH_HPP
#define FAIRBENCH_BENCH_HPP

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbench/dataset.hpp"
#include "fairbench/inmethods.hpp"
#include "fairbench/metrics.hpp"
#include "fairbench/scorer.hpp"

namespace fairbench {

enum class MethodStage { naive, pre, in, post };

std::string to_string(MethodStage stage);

struct MethodSpec {
    std::string name;          // data_repairer, label_flipping, prevalence_sampling,
                               // fairret_norm, prejudice_remover, exponentiated_gradient,
                               // error_parity
    MethodStage stage = MethodStage::naive;
    std::vector<double> strengths;
    FairnessNotion notion = FairnessNotion::dem_par;  // the notion the method optimizes
    SensitiveFormat optimize_format = SensitiveFormat::intersectional;
};

/// Parsed run configuration; see the README for the JSON layout.
struct RunConfig {
    // dataset source: exactly one of the two
    std::optional<DualLabelConfig> synthetic;
    std::string csv_path;
    std::string schema_path;

    std::array<double, 3> split_fractions = {0.7, 0.15, 0.15};
    std::vector<std::size_t> layer_sizes;
    TrainConfig model;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::vector<SensitiveFormat> formats = {SensitiveFormat::binary,
                                            SensitiveFormat::intersectional,
                                            SensitiveFormat::parallel};
    std::vector<FairnessNotion> notions{kAllNotions.begin(), kAllNotions.end()};
    std::size_t binary_attr = 0;
    std::vector<MethodSpec> methods;
    std::string output_dir = ".";

    nlohmann::json raw;  // canonical form, hashed into the records file name
};

RunConfig parse_run_config(const nlohmann::json& doc);

/// Standard strength grid per method, used when a config omits strengths.
std::vector<double> standard_strengths(const std::string& method);

struct RunRecord {
    std::string method;
    std::string stage;
    double strength = 0.0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    std::vector<std::string> warnings;
    double wall_time_s = 0.0;
    EvaluationReport report;  // on the test split
};

nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& doc);

std::vector<RunRecord> read_records(const std::string& path);
std::uint64_t config_hash(const nlohmann::json& canonical);

/// Executes the sweep: for every (method, strength, seed) plus a naive
/// baseline per seed, split -> preprocess -> train -> postprocess -> evaluate
/// on the test split. Each finished record is handed to on_record before the
/// next run starts; per-run failures are recorded and the sweep continues.
/// Triples already present in done_keys ("method|strength|seed") are skipped.
std::vector<RunRecord> run_benchmark(
    const RunConfig& config, const std::function<void(const RunRecord&)>& on_record = {},
    const std::vector<std::string>& done_keys = {});

std::string record_key(const RunRecord& record);

/// Auto-inferred violation bounds [k'/4, k'/2, k'] from the naive violation.
std::array<double, 3> infer_k(double naive_violation);

struct TableSpec {
    FairnessNotion notion = FairnessNotion::dem_par;
    OutputType output = OutputType::soft;
    std::string target = "biased";  // or "unbiased"
    std::vector<std::pair<SensitiveFormat, std::vector<double>>> format_ks;
};

struct TableCell {
    bool filled = false;
    double mean_performance = 0.0;
    double standard_error = 0.0;
    double strength = 0.0;        // the winning strength
    double mean_violation = 0.0;  // at that strength
    std::size_t seed_count = 0;
};

struct PerformanceTable {
    TableSpec spec;
    std::vector<std::string> methods;                       // column order
    std::vector<std::pair<SensitiveFormat, double>> naive;  // per-format naive violation
    // rows follow spec.format_ks order: one row per (format, k)
    struct Row {
        SensitiveFormat format;
        double k;
        std::vector<TableCell> cells;  // parallel to methods
    };
    std::vector<Row> rows;
};

/// Cell (format, k, method): mean +- standard error of the performance at the
/// strength whose mean violation over seeds is <= k and whose mean performance
/// is maximal among those; unset when no strength qualifies.
PerformanceTable performance_table(const std::vector<RunRecord>& records, const TableSpec& spec);

std::string table_to_text(const PerformanceTable& table);
std::string table_to_csv(const PerformanceTable& table);

struct TradeoffPoint {
    std::string method;
    double strength = 0.0;
    std::size_t seed_count = 0;
    double mean_violation = 0.0;
    double mean_performance = 0.0;
    bool has_covariance = false;
    // covariance of the seed-level (violation, performance) pairs scaled to
    // the standard error of the mean, plus the derived ellipse geometry
    double cov_vv = 0.0, cov_vp = 0.0, cov_pp = 0.0;
    double ellipse_radius_major = 0.0;
    double ellipse_radius_minor = 0.0;
    double ellipse_angle_deg = 0.0;
    std::string warning;
};

std::vector<TradeoffPoint> tradeoff_export(const std::vector<RunRecord>& records,
                                           FairnessNotion notion, OutputType output,
                                           SensitiveFormat format,
                                           const std::string& target = "biased");

std::string tradeoff_to_csv(const std::vector<TradeoffPoint>& points);

}  // namespace fairbench

#endif  // FAIRBENCH_BENCH_HPP
