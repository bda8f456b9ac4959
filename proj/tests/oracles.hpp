#ifndef FAIRBENCH_TESTS_ORACLES_HPP
#define FAIRBENCH_TESTS_ORACLES_HPP

// Independent reference implementations used to check the library. Everything
// here is written as plain per-sample loops with the textbook formulas, on
// purpose: none of it shares code with the implementation under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "fairbench/dataset.hpp"
#include "fairbench/metrics.hpp"
#include "fairbench/rng.hpp"

namespace oracles {

struct GroupRatio {
    double value = 0.0;
    bool defined = false;
};

/// gamma(q) by direct per-notion formulas over the samples of one group.
inline GroupRatio naive_group_statistic(fairbench::FairnessNotion notion,
                                        const std::vector<double>& h,
                                        const std::vector<int>& y,
                                        const std::vector<double>& w,
                                        const std::vector<bool>& member) {
    using fairbench::FairnessNotion;
    double numerator = 0.0;
    double denominator = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!member[i]) continue;
        const double yi = y[i];
        const double hi = h[i];
        const double wi = w[i];
        switch (notion) {
            case FairnessNotion::dem_par:
                numerator += wi * hi;
                denominator += wi;
                break;
            case FairnessNotion::eq_opp:
                numerator += wi * hi * yi;
                denominator += wi * yi;
                break;
            case FairnessNotion::pred_eq:
                numerator += wi * hi * (1.0 - yi);
                denominator += wi * (1.0 - yi);
                break;
            case FairnessNotion::pred_par:
                numerator += wi * hi * yi;
                denominator += wi * hi;
                break;
            case FairnessNotion::forp:
                numerator += wi * yi * (1.0 - hi);
                denominator += wi * (1.0 - hi);
                break;
            case FairnessNotion::acc_eq:
                numerator += wi * (1.0 - yi + (2.0 * yi - 1.0) * hi);
                denominator += wi;
                break;
            case FairnessNotion::f1_score_eq:
                numerator += wi * 2.0 * hi * yi;
                denominator += wi * (yi + hi);
                break;
        }
    }
    GroupRatio ratio;
    if (denominator > 1e-12) {
        ratio.value = numerator / denominator;
        ratio.defined = true;
    }
    return ratio;
}

struct NaiveStats {
    std::vector<GroupRatio> gamma;
    GroupRatio gamma_mean;
};

inline NaiveStats naive_statistic(fairbench::FairnessNotion notion, const std::vector<double>& h,
                                  const std::vector<int>& y, const std::vector<double>& w,
                                  const fairbench::SensitiveEncoding& enc) {
    NaiveStats stats;
    for (std::size_t q = 0; q < enc.group_count(); ++q) {
        std::vector<bool> member(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) member[i] = enc.indicators(i, q) > 0.5;
        stats.gamma.push_back(naive_group_statistic(notion, h, y, w, member));
    }
    stats.gamma_mean =
        naive_group_statistic(notion, h, y, w, std::vector<bool>(h.size(), true));
    return stats;
}

inline std::optional<double> naive_violation(const NaiveStats& stats) {
    if (!stats.gamma_mean.defined || std::abs(stats.gamma_mean.value) <= 1e-12)
        return std::nullopt;
    double worst = -1.0;
    for (const GroupRatio& g : stats.gamma) {
        if (!g.defined) continue;
        worst = std::max(worst, std::abs(g.value / stats.gamma_mean.value - 1.0));
    }
    if (worst < 0.0) return std::nullopt;
    return worst;
}

/// Builds an encoding directly from group ids (partition), bypassing the
/// library's encode_sensitive.
inline fairbench::SensitiveEncoding partition_encoding(const std::vector<int>& groups,
                                                       int group_count) {
    fairbench::SensitiveEncoding enc;
    enc.format = fairbench::SensitiveFormat::intersectional;
    enc.indicators = fairbench::Matrix(groups.size(), group_count);
    for (std::size_t i = 0; i < groups.size(); ++i) enc.indicators(i, groups[i]) = 1.0;
    for (int g = 0; g < group_count; ++g) enc.group_names.push_back("g" + std::to_string(g));
    enc.axes = {{0, static_cast<std::size_t>(group_count)}};
    return enc;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ranks = [](const std::vector<double>& values) {
        const std::size_t n = values.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
        std::vector<double> rank(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j < n && values[order[j]] == values[order[i]]) ++j;
            const double mean_rank = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0;
            for (std::size_t k = i; k < j; ++k) rank[order[k]] = mean_rank;
            i = j;
        }
        return rank;
    };
    const std::vector<double> ra = ranks(a);
    const std::vector<double> rb = ranks(b);
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

/// Random metric instance: scores, labels, weights, and a partition of n
/// samples into group_count groups with every group nonempty and carrying at
/// least one positive and one negative label.
struct MetricInstance {
    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<double> weights;
    std::vector<int> groups;
    int group_count = 0;
};

inline MetricInstance random_metric_instance(fairbench::Rng& rng, std::size_t max_n,
                                             int max_groups, bool unit_weights = false) {
    MetricInstance instance;
    instance.group_count = 2 + static_cast<int>(rng.uniform_int(max_groups - 1));
    const std::size_t n =
        static_cast<std::size_t>(instance.group_count) * 4 +
        rng.uniform_int(max_n > static_cast<std::size_t>(instance.group_count) * 4
                            ? max_n - instance.group_count * 4
                            : 1);
    for (std::size_t i = 0; i < n; ++i) {
        instance.scores.push_back(0.05 + 0.9 * rng.uniform());
        instance.labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
        instance.weights.push_back(unit_weights ? 1.0 : 0.25 + rng.uniform());
        instance.groups.push_back(static_cast<int>(rng.uniform_int(instance.group_count)));
    }
    // guarantee every group holds all four (label, side-of-0.5) combinations
    // so every notion's denominators and mean stay positive, soft or hardened
    std::size_t cursor = 0;
    for (int g = 0; g < instance.group_count; ++g) {
        const int block_labels[4] = {1, 1, 0, 0};
        const bool block_high[4] = {true, false, true, false};
        for (int k = 0; k < 4; ++k) {
            instance.groups[cursor] = g;
            instance.labels[cursor] = block_labels[k];
            instance.scores[cursor] = block_high[k] ? 0.55 + 0.35 * rng.uniform()
                                                    : 0.1 + 0.35 * rng.uniform();
            ++cursor;
        }
    }
    return instance;
}

// --- error-parity oracles ---------------------------------------------------

/// Naive evaluation of a per-group threshold policy: rates and accuracy by
/// direct loops, violation per the relative-gap definition.
struct PolicyOutcome {
    double violation = 0.0;
    double accuracy = 0.0;
    bool defined = false;
};

inline bool policy_relevant(fairbench::FairnessNotion notion, int label) {
    return notion == fairbench::FairnessNotion::dem_par ||
           (notion == fairbench::FairnessNotion::eq_opp && label == 1) ||
           (notion == fairbench::FairnessNotion::pred_eq && label == 0);
}

inline PolicyOutcome evaluate_policy_naively(const std::vector<double>& thresholds,
                                             const std::vector<double>& scores,
                                             const std::vector<int>& labels,
                                             const std::vector<double>& weights,
                                             const std::vector<int>& groups, int group_count,
                                             fairbench::FairnessNotion notion) {
    PolicyOutcome outcome;
    std::vector<double> numerator(group_count, 0.0), denominator(group_count, 0.0);
    double correct = 0.0, total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int g = groups[i];
        const int hard = scores[i] >= thresholds[g] ? 1 : 0;
        total += weights[i];
        if (hard == labels[i]) correct += weights[i];
        if (policy_relevant(notion, labels[i])) {
            denominator[g] += weights[i];
            numerator[g] += weights[i] * hard;
        }
    }
    outcome.accuracy = correct / total;
    double pooled_numerator = 0.0, pooled_denominator = 0.0;
    for (int g = 0; g < group_count; ++g) {
        pooled_numerator += numerator[g];
        pooled_denominator += denominator[g];
    }
    const double mean = pooled_numerator / pooled_denominator;
    if (std::abs(mean) <= 1e-12) return outcome;
    for (int g = 0; g < group_count; ++g)
        outcome.violation =
            std::max(outcome.violation, std::abs(numerator[g] / denominator[g] / mean - 1.0));
    outcome.defined = true;
    return outcome;
}

struct RandomFitInstance {
    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<double> weights;
    std::vector<int> groups;
    int group_count = 0;
};

inline RandomFitInstance random_fit_instance(fairbench::Rng& rng) {
    RandomFitInstance instance;
    instance.group_count = 2 + static_cast<int>(rng.uniform_int(2));
    for (int g = 0; g < instance.group_count; ++g) {
        const std::size_t size = 4 + rng.uniform_int(9);  // <= 12 per group
        for (std::size_t i = 0; i < size; ++i) {
            instance.groups.push_back(g);
            // first samples pin both labels so every notion's preconditions hold
            const int label = i == 0 ? 1 : (i == 1 ? 0 : (rng.uniform() < 0.5 ? 1 : 0));
            instance.labels.push_back(label);
            instance.scores.push_back(0.05 + 0.9 * rng.uniform());
            instance.weights.push_back(1.0);
        }
    }
    return instance;
}

/// Independent re-implementation of the documented candidate search: shared
/// rate grid, nearest achievable rate per group (ties to the lower rate), the
/// literal uniform-0.5 policy as an extra candidate.
struct GridOracleResult {
    bool any_feasible = false;
    double best_accuracy = 0.0;
    double min_violation = 0.0;
};

inline GridOracleResult grid_oracle(const RandomFitInstance& instance,
                                    fairbench::FairnessNotion notion, double tolerance) {
    const int group_count = instance.group_count;

    // per group: distinct relevant scores descending + never-predict sentinel
    std::vector<std::vector<double>> candidate_thresholds(group_count);
    std::vector<std::vector<double>> candidate_rates(group_count);
    for (int g = 0; g < group_count; ++g) {
        std::vector<double> distinct;
        double relevant_total = 0.0;
        for (std::size_t i = 0; i < instance.scores.size(); ++i) {
            if (instance.groups[i] != g) continue;
            if (policy_relevant(notion, instance.labels[i])) {
                if (std::find(distinct.begin(), distinct.end(), instance.scores[i]) ==
                    distinct.end())
                    distinct.push_back(instance.scores[i]);
                relevant_total += 1.0;
            }
        }
        std::sort(distinct.begin(), distinct.end(), std::greater<double>());
        candidate_thresholds[g].push_back(2.0);
        candidate_rates[g].push_back(0.0);
        for (double threshold : distinct) {
            double admitted = 0.0;
            for (std::size_t i = 0; i < instance.scores.size(); ++i) {
                if (instance.groups[i] != g) continue;
                if (policy_relevant(notion, instance.labels[i]) &&
                    instance.scores[i] >= threshold)
                    admitted += 1.0;
            }
            candidate_thresholds[g].push_back(threshold);
            candidate_rates[g].push_back(admitted / relevant_total);
        }
    }

    std::vector<double> grid;
    for (int g = 0; g < group_count; ++g)
        grid.insert(grid.end(), candidate_rates[g].begin(), candidate_rates[g].end());
    for (int k = 0; k <= 50; ++k) grid.push_back(k / 50.0);

    std::vector<std::vector<double>> policies;
    for (double target : grid) {
        std::vector<double> thresholds(group_count);
        for (int g = 0; g < group_count; ++g) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < candidate_rates[g].size(); ++c) {
                const double diff = std::abs(candidate_rates[g][c] - target);
                const double best_diff = std::abs(candidate_rates[g][best] - target);
                if (diff < best_diff ||
                    (diff == best_diff && candidate_rates[g][c] < candidate_rates[g][best]))
                    best = c;
            }
            thresholds[g] = candidate_thresholds[g][best];
        }
        policies.push_back(std::move(thresholds));
    }
    policies.emplace_back(group_count, 0.5);

    GridOracleResult result;
    std::optional<double> min_violation;
    for (const auto& thresholds : policies) {
        const PolicyOutcome outcome =
            evaluate_policy_naively(thresholds, instance.scores, instance.labels,
                                    instance.weights, instance.groups, group_count, notion);
        if (!outcome.defined) continue;
        if (!min_violation || outcome.violation < *min_violation)
            min_violation = outcome.violation;
        if (outcome.violation <= tolerance) {
            if (!result.any_feasible || outcome.accuracy > result.best_accuracy)
                result.best_accuracy = outcome.accuracy;
            result.any_feasible = true;
        }
    }
    result.min_violation = min_violation.value_or(0.0);
    return result;
}

/// Exhaustive search over the cartesian product of all per-group cutpoints
/// (every distinct score plus the never-predict sentinel).
struct CartesianOracleResult {
    bool any_feasible = false;
    double best_accuracy = 0.0;
};

inline CartesianOracleResult cartesian_oracle(const RandomFitInstance& instance,
                                              fairbench::FairnessNotion notion,
                                              double tolerance) {
    const int group_count = instance.group_count;
    std::vector<std::vector<double>> cutpoints(group_count);
    for (int g = 0; g < group_count; ++g) {
        cutpoints[g].push_back(2.0);
        std::vector<double> distinct;
        for (std::size_t i = 0; i < instance.scores.size(); ++i)
            if (instance.groups[i] == g &&
                std::find(distinct.begin(), distinct.end(), instance.scores[i]) ==
                    distinct.end())
                distinct.push_back(instance.scores[i]);
        std::sort(distinct.begin(), distinct.end());
        cutpoints[g].insert(cutpoints[g].end(), distinct.begin(), distinct.end());
    }

    CartesianOracleResult result;
    std::vector<std::size_t> index(group_count, 0);
    while (true) {
        std::vector<double> thresholds(group_count);
        for (int g = 0; g < group_count; ++g) thresholds[g] = cutpoints[g][index[g]];
        const PolicyOutcome outcome =
            evaluate_policy_naively(thresholds, instance.scores, instance.labels,
                                    instance.weights, instance.groups, group_count, notion);
        if (outcome.defined && outcome.violation <= tolerance) {
            if (!result.any_feasible || outcome.accuracy > result.best_accuracy)
                result.best_accuracy = outcome.accuracy;
            result.any_feasible = true;
        }
        int g = 0;
        while (g < group_count &&
               ++index[g] == cutpoints[g].size()) {
            index[g] = 0;
            ++g;
        }
        if (g == group_count) break;
    }
    return result;
}

}  // namespace oracles

#endif  // FAIRBENCH_TESTS_ORACLES_HPP
