#ifndef FAIRBENCH_INMETHODS_HPP
#define FAIRBENCH_INMETHODS_HPP

#include <span>
#include <vector>

#include "fairbench/dataset.hpp"
#include "fairbench/metrics.hpp"
#include "fairbench/scorer.hpp"

namespace fairbench {

/// L1 norm of relative statistic gaps, sum_q |gamma(q)/gamma_mean - 1|, with
/// gamma computed from the soft batch scores. Exact gradient through the
/// quotient rule; groups whose batch denominator vanishes are skipped, and a
/// vanishing mean statistic skips the whole batch (value 0).
PenaltyResult fairret_norm_penalty(FairnessNotion notion, std::span<const double> scores,
                                   std::span<const double> labels,
                                   std::span<const double> weights,
                                   const SensitiveEncoding& encoding,
                                   std::span<const std::size_t> rows);

/// Plug-in mutual information between the soft prediction and the group
/// variable (partition encodings only). Terms with a group mean of exactly
/// 0 or 1 use the 0*log(0) = 0 convention.
PenaltyResult prejudice_remover_penalty(std::span<const double> scores,
                                        std::span<const double> weights,
                                        const SensitiveEncoding& encoding,
                                        std::span<const std::size_t> rows);

/// Penalty callbacks bound to a training dataset, for plugging into train().
PenaltyFn make_fairret_penalty(FairnessNotion notion, const TabularDataset& data,
                               const SensitiveEncoding& encoding);
PenaltyFn make_prejudice_remover_penalty(const TabularDataset& data,
                                         const SensitiveEncoding& encoding);

struct EGConfig {
    FairnessNotion notion = FairnessNotion::dem_par;  // dem_par, eq_opp, pred_eq, acc_eq
    double slack = 0.01;            // absolute statistic gap allowed per group
    std::size_t iterations = 20;    // T
    double multiplier_bound = 100.0;  // B, cap on the multiplier l1 norm
    double eg_rate = 5.0;           // eta
    double lambda_init = 0.2;
    std::vector<std::size_t> layer_sizes;  // inner scorer architecture
    TrainConfig inner;

    void validate() const;
};

/// Uniform vote of the iterates: soft score is the mean of the members' hard
/// predictions, hard prediction thresholds that mean at 0.5.
struct EnsembleScorer {
    std::vector<Scorer> members;
    std::vector<double> scores(const Matrix& features) const;
};

struct EGResult {
    EnsembleScorer scorer;
    std::vector<double> multipliers;  // final (q+, q-) pairs, flattened
    double final_train_gap = 0.0;     // ensemble max_q |gamma(q) - gamma_mean| on train
    bool met_slack = false;           // best effort; exhausting T is not an error
    std::size_t iterations_run = 0;
};

/// Reduction of constrained fair classification to a sequence of weighted
/// naive problems: multipliers over the per-group gap constraints are turned
/// into per-sample costs, realized as weights and possibly flipped effective
/// labels for the inner trainer, and updated multiplicatively from the hard
/// prediction gaps of each fresh iterate.
EGResult exponentiated_gradient(const TabularDataset& train, const SensitiveEncoding& encoding,
                                const EGConfig& config);

}  // namespace fairbench

#endif  // FAIRBENCH_INMETHODS_HPP
