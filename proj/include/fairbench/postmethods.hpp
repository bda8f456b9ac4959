#ifndef FAIRBENCH_POSTMETHODS_HPP
#define FAIRBENCH_POSTMETHODS_HPP

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbench/dataset.hpp"
#include "fairbench/metrics.hpp"

namespace fairbench {

/// Group-specific decision thresholds fitted to equalize one statistic up to
/// a tolerance while maximizing accuracy on the fit set.
struct ThresholdPolicy {
    std::vector<double> thresholds;  // one per encoding group
    FairnessNotion notion = FairnessNotion::dem_par;
    double tolerance = 0.0;
    double achieved_violation = 0.0;  // on the fit set
    double fit_accuracy = 0.0;
    bool infeasible = false;  // no candidate met the tolerance
    std::vector<std::string> group_names;
};

/// Searches a shared grid of target rates (the union of every group's
/// achievable rates, 51 uniform points, and the uniform-0.5 policy); each
/// candidate maps to per-group thresholds realizing the nearest achievable
/// rate. Among candidates whose relative violation stays within the tolerance
/// the most accurate wins; if none qualifies the minimum-violation candidate
/// is returned flagged infeasible.
ThresholdPolicy fit_error_parity(std::span<const double> scores, std::span<const int> labels,
                                 std::span<const double> weights,
                                 const SensitiveEncoding& encoding, FairnessNotion notion,
                                 double tolerance);

/// Prediction 1 iff the sample's score is at or above its group's threshold.
std::vector<int> apply_thresholds(std::span<const double> scores,
                                  const SensitiveEncoding& encoding,
                                  const ThresholdPolicy& policy);

// Audit document for a fitted policy.
nlohmann::json policy_to_json(const ThresholdPolicy& policy);
ThresholdPolicy policy_from_json(const nlohmann::json& doc);

}  // namespace fairbench

#endif  // FAIRBENCH_POSTMETHODS_HPP
