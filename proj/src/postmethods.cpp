#include "fairbench/postmethods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairbench/errors.hpp"

namespace fairbench {

namespace {

/// Threshold value meaning "predict 0 for everyone"; scores never exceed 1.
constexpr double kNeverPredict = 2.0;

bool relevant_for(FairnessNotion notion, int label) {
    switch (notion) {
        case FairnessNotion::dem_par: return true;
        case FairnessNotion::eq_opp: return label == 1;
        case FairnessNotion::pred_eq: return label == 0;
        default: return false;
    }
}

/// One group's score profile: distinct score blocks in descending order with
/// cumulative statistic mass and accuracy mass, so both the achievable-rate
/// candidates and arbitrary literal thresholds evaluate in O(log n).
struct GroupTable {
    std::vector<double> block_scores;      // descending distinct scores
    std::vector<double> relevant_above;    // cumulative relevant weight, per block count
    std::vector<double> accuracy_above;    // weighted correct mass, per block count
    std::vector<std::size_t> cut_blocks;   // block counts that are rate candidates
    std::vector<double> cut_thresholds;    // threshold realizing each candidate cut
    std::vector<double> cut_rates;         // ascending achievable rates
    double relevant_weight = 0.0;          // constant statistic denominator

    // raw statistic numerator mass, so exact-parity candidates evaluate to a
    // violation of exactly zero
    double mass_at(double threshold) const {
        return relevant_above[blocks_admitted(threshold)];
    }
    double rate_at(double threshold) const { return mass_at(threshold) / relevant_weight; }
    double accuracy_at(double threshold) const {
        return accuracy_above[blocks_admitted(threshold)];
    }

    /// Number of leading blocks with score >= threshold.
    std::size_t blocks_admitted(double threshold) const {
        const auto at = std::lower_bound(block_scores.begin(), block_scores.end(), threshold,
                                         [](double score, double t) { return score >= t; });
        return static_cast<std::size_t>(at - block_scores.begin());
    }
};

GroupTable build_group_table(const std::vector<std::size_t>& rows,
                             std::span<const double> scores, std::span<const int> labels,
                             std::span<const double> weights, FairnessNotion notion) {
    GroupTable table;

    std::vector<std::size_t> order(rows);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double correct_if_all_zero = 0.0;
    for (std::size_t row : order) {
        if (labels[row] == 0) correct_if_all_zero += weights[row];
        if (relevant_for(notion, labels[row])) table.relevant_weight += weights[row];
    }

    table.relevant_above.push_back(0.0);
    table.accuracy_above.push_back(correct_if_all_zero);
    table.cut_blocks.push_back(0);
    table.cut_thresholds.push_back(kNeverPredict);
    table.cut_rates.push_back(0.0);

    double accuracy = correct_if_all_zero;
    double relevant = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double value = scores[order[i]];
        bool block_has_relevant = false;
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == value) {
            const std::size_t row = order[j];
            accuracy += labels[row] == 1 ? weights[row] : -weights[row];
            if (relevant_for(notion, labels[row])) {
                relevant += weights[row];
                block_has_relevant = true;
            }
            ++j;
        }
        table.block_scores.push_back(value);
        table.relevant_above.push_back(relevant);
        table.accuracy_above.push_back(accuracy);
        // only thresholds at relevant score values are quantile candidates
        if (block_has_relevant) {
            table.cut_blocks.push_back(table.block_scores.size());
            table.cut_thresholds.push_back(value);
            table.cut_rates.push_back(relevant / table.relevant_weight);
        }
        i = j;
    }
    return table;
}

/// Candidate threshold whose rate is closest to the target; equidistant ties
/// take the lower rate.
double nearest_rate_threshold(const GroupTable& table, double target) {
    const auto at = std::lower_bound(table.cut_rates.begin(), table.cut_rates.end(), target);
    std::size_t pick;
    if (at == table.cut_rates.begin()) {
        pick = 0;
    } else if (at == table.cut_rates.end()) {
        pick = table.cut_rates.size() - 1;
    } else {
        const std::size_t high = static_cast<std::size_t>(at - table.cut_rates.begin());
        const std::size_t low = high - 1;
        pick = target - table.cut_rates[low] <= table.cut_rates[high] - target ? low : high;
    }
    return table.cut_thresholds[pick];
}

}  // namespace

ThresholdPolicy fit_error_parity(std::span<const double> scores, std::span<const int> labels,
                                 std::span<const double> weights,
                                 const SensitiveEncoding& encoding, FairnessNotion notion,
                                 double tolerance) {
    if (notion != FairnessNotion::dem_par && notion != FairnessNotion::eq_opp &&
        notion != FairnessNotion::pred_eq)
        throw FitError("error parity supports notions ['dem_par', 'eq_opp', 'pred_eq'] only");
    if (encoding.format == SensitiveFormat::parallel)
        throw FormatError("error parity does not support the parallel encoding");
    if (tolerance < 0.0) throw FitError("tolerance must be nonnegative");
    const std::size_t n = scores.size();
    if (labels.size() != n || weights.size() != n || encoding.indicators.rows != n)
        throw ShapeError("fit inputs must share one row count");

    const std::size_t group_count = encoding.group_count();
    std::vector<std::vector<std::size_t>> members(group_count);
    for (std::size_t i = 0; i < n; ++i) members[encoding.partition_group(i)].push_back(i);

    std::vector<GroupTable> tables;
    tables.reserve(group_count);
    double total_weight = 0.0;
    for (double w : weights) total_weight += w;
    for (std::size_t q = 0; q < group_count; ++q) {
        if (members[q].empty())
            throw FitError("group '" + encoding.group_names[q] + "' has no samples");
        GroupTable table = build_group_table(members[q], scores, labels, weights, notion);
        if (table.relevant_weight <= kDenominatorGuard)
            throw FitError("group '" + encoding.group_names[q] +
                           "' has no samples relevant to '" + to_string(notion) + "'");
        tables.push_back(std::move(table));
    }

    // Candidate targets: every achievable per-group rate plus 51 uniform points.
    std::vector<double> grid;
    for (const auto& table : tables)
        grid.insert(grid.end(), table.cut_rates.begin(), table.cut_rates.end());
    for (int k = 0; k <= 50; ++k) grid.push_back(static_cast<double>(k) / 50.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    struct Candidate {
        std::vector<double> thresholds;
        double violation = 0.0;
        double accuracy = 0.0;
        bool valid = false;
    };

    auto evaluate = [&](std::vector<double> thresholds) {
        Candidate candidate;
        double numerator = 0.0;
        double denominator = 0.0;
        for (std::size_t q = 0; q < group_count; ++q) {
            numerator += tables[q].mass_at(thresholds[q]);
            denominator += tables[q].relevant_weight;
            candidate.accuracy += tables[q].accuracy_at(thresholds[q]);
        }
        candidate.accuracy /= total_weight;
        const double mean = numerator / denominator;
        candidate.thresholds = std::move(thresholds);
        if (std::abs(mean) <= kDenominatorGuard) return candidate;  // violation undefined
        for (std::size_t q = 0; q < group_count; ++q)
            candidate.violation = std::max(
                candidate.violation,
                std::abs(tables[q].rate_at(candidate.thresholds[q]) / mean - 1.0));
        candidate.valid = true;
        return candidate;
    };

    std::vector<Candidate> candidates;
    candidates.reserve(grid.size() + 1);
    for (double target : grid) {
        std::vector<double> thresholds(group_count);
        for (std::size_t q = 0; q < group_count; ++q)
            thresholds[q] = nearest_rate_threshold(tables[q], target);
        candidates.push_back(evaluate(std::move(thresholds)));
    }
    // The plain 0.5 threshold competes as an explicit extra candidate so the
    // policy never loses to naive thresholding when the tolerance allows it.
    candidates.push_back(evaluate(std::vector<double>(group_count, 0.5)));

    const Candidate* best_feasible = nullptr;
    const Candidate* least_violating = nullptr;
    for (const Candidate& candidate : candidates) {
        if (!candidate.valid) continue;
        if (candidate.violation <= tolerance) {
            if (!best_feasible || candidate.accuracy > best_feasible->accuracy ||
                (candidate.accuracy == best_feasible->accuracy &&
                 candidate.violation < best_feasible->violation))
                best_feasible = &candidate;
        }
        if (!least_violating || candidate.violation < least_violating->violation ||
            (candidate.violation == least_violating->violation &&
             candidate.accuracy > least_violating->accuracy))
            least_violating = &candidate;
    }
    if (!least_violating)
        throw FitError("no threshold combination yields a defined violation for '" +
                       to_string(notion) + "'");

    const Candidate& chosen = best_feasible ? *best_feasible : *least_violating;
    ThresholdPolicy policy;
    policy.notion = notion;
    policy.tolerance = tolerance;
    policy.infeasible = best_feasible == nullptr;
    policy.achieved_violation = chosen.violation;
    policy.fit_accuracy = chosen.accuracy;
    policy.group_names = encoding.group_names;
    policy.thresholds = chosen.thresholds;
    return policy;
}

nlohmann::json policy_to_json(const ThresholdPolicy& policy) {
    return {{"notion", to_string(policy.notion)},
            {"tolerance", policy.tolerance},
            {"thresholds", policy.thresholds},
            {"group_names", policy.group_names},
            {"achieved_violation", policy.achieved_violation},
            {"fit_accuracy", policy.fit_accuracy},
            {"infeasible", policy.infeasible}};
}

ThresholdPolicy policy_from_json(const nlohmann::json& doc) {
    ThresholdPolicy policy;
    policy.notion = notion_from_string(doc.at("notion").get<std::string>());
    policy.tolerance = doc.at("tolerance").get<double>();
    policy.thresholds = doc.at("thresholds").get<std::vector<double>>();
    policy.group_names = doc.at("group_names").get<std::vector<std::string>>();
    policy.achieved_violation = doc.value("achieved_violation", 0.0);
    policy.fit_accuracy = doc.value("fit_accuracy", 0.0);
    policy.infeasible = doc.value("infeasible", false);
    return policy;
}

std::vector<int> apply_thresholds(std::span<const double> scores,
                                  const SensitiveEncoding& encoding,
                                  const ThresholdPolicy& policy) {
    if (encoding.format == SensitiveFormat::parallel)
        throw FormatError("error parity does not support the parallel encoding");
    if (encoding.group_names != policy.group_names)
        throw FitError("encoding groups do not match the fitted policy groups");
    if (scores.size() != encoding.indicators.rows)
        throw ShapeError("score count differs from encoding row count");

    std::vector<int> hard(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const std::size_t q = encoding.partition_group(i);
        hard[i] = scores[i] >= policy.thresholds[q] ? 1 : 0;
    }
    return hard;
}

}  // namespace fairbench
