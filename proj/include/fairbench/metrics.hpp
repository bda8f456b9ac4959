#ifndef FAIRBENCH_METRICS_HPP
#define FAIRBENCH_METRICS_HPP

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbench/dataset.hpp"

namespace fairbench {

/// Group-parity notions. Each one names a per-group statistic gamma(q) whose
/// disparity across groups is the fairness violation.
enum class FairnessNotion { dem_par, eq_opp, pred_eq, pred_par, forp, acc_eq, f1_score_eq };

inline constexpr std::array<FairnessNotion, 7> kAllNotions = {
    FairnessNotion::dem_par,  FairnessNotion::eq_opp, FairnessNotion::pred_eq,
    FairnessNotion::pred_par, FairnessNotion::forp,   FairnessNotion::acc_eq,
    FairnessNotion::f1_score_eq};

std::string to_string(FairnessNotion notion);
FairnessNotion notion_from_string(const std::string& token);

/// Denominators at or below this guard mark a group statistic as undefined.
inline constexpr double kDenominatorGuard = 1e-12;

/// Per-sample linear coefficients of a statistic: with prediction s the sample
/// contributes n0 + n1*s to the group numerator and d0 + d1*s to the group
/// denominator. Every supported notion is affine in the predictions, which is
/// what makes exact penalty gradients and the reduction costs tractable.
struct StatCoeffs {
    double n0, n1, d0, d1;
};

StatCoeffs stat_coeffs(FairnessNotion notion, double label, double weight);

struct GroupStatistics {
    FairnessNotion notion;
    std::vector<double> gamma;        // gamma(q), meaningful where defined
    double gamma_mean = 0.0;          // same ratio over all samples
    std::vector<bool> defined;        // denominator above the guard
    std::vector<std::string> group_names;
};

/// Computes gamma(q) = N(q)/D(q) for each encoding group plus the mean
/// statistic over all samples. Throws UndefinedStatError when the global
/// denominator vanishes. Predictions may be soft scores or hard 0/1 values.
GroupStatistics statistic(FairnessNotion notion, std::span<const double> predictions,
                          std::span<const int> labels, std::span<const double> weights,
                          const SensitiveEncoding& encoding);

struct ViolationResult {
    double value = 0.0;
    int skipped_groups = 0;
};

/// Relative violation max_q |gamma(q)/gamma_mean - 1| over defined groups.
/// With a parallel encoding this single max realizes the maximal violation
/// across attributes because the mean statistic is global.
ViolationResult violation(const GroupStatistics& stats);

/// Threshold at 0.5: prediction 1 iff score >= 0.5.
std::vector<int> harden(std::span<const double> scores);

double accuracy(std::span<const int> hard, std::span<const int> labels,
                std::span<const double> weights);

/// Weighted Mann-Whitney statistic with tie correction:
/// P(score_pos > score_neg) + 0.5 P(tie) over weighted pairs.
double auroc(std::span<const double> scores, std::span<const int> labels,
             std::span<const double> weights);

enum class OutputType { hard, soft };

std::string to_string(OutputType output);
OutputType output_type_from_string(const std::string& token);

struct EvalCell {
    SensitiveFormat format;
    FairnessNotion notion;
    OutputType output_type;
    std::optional<double> violation;
    int skipped_groups = 0;
    std::string warning;  // set when the cell could not be computed
    GroupStatistics stats;
};

struct LabelEval {
    std::optional<double> accuracy;  // hard-output performance
    std::optional<double> auroc;     // soft-output performance
    std::string performance_warning;
    std::vector<EvalCell> cells;
};

struct EvaluationReport {
    LabelEval biased;
    std::optional<LabelEval> unbiased;
};

/// Full evaluation sweep: every (encoding, notion) x {hard, soft} violation
/// plus accuracy/AUROC, against the training labels and, when present, the
/// unbiased labels. Per-cell failures are recorded, not thrown.
EvaluationReport evaluate(std::span<const double> scores, const TabularDataset& dataset,
                          const std::vector<SensitiveEncoding>& encodings,
                          const std::vector<FairnessNotion>& notions);

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& doc);

}  // namespace fairbench

#endif  // FAIRBENCH_METRICS_HPP
