#include "fairbench/inmethods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairbench/errors.hpp"
#include "fairbench/rng.hpp"

namespace fairbench {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double clamped_log(double x) { return std::log(std::max(x, 1e-12)); }

void require_partition(const SensitiveEncoding& encoding, const char* what) {
    if (encoding.format == SensitiveFormat::parallel)
        throw FormatError(std::string(what) + " does not support the parallel encoding");
}

}  // namespace

PenaltyResult fairret_norm_penalty(FairnessNotion notion, std::span<const double> scores,
                                   std::span<const double> labels,
                                   std::span<const double> weights,
                                   const SensitiveEncoding& encoding,
                                   std::span<const std::size_t> rows) {
    const std::size_t batch = scores.size();
    PenaltyResult result;
    result.grad.assign(batch, 0.0);
    if (batch == 0) return result;

    const std::size_t groups = encoding.group_count();
    std::vector<double> group_numerator(groups, 0.0);
    std::vector<double> group_denominator(groups, 0.0);
    double total_numerator = 0.0;
    double total_denominator = 0.0;
    std::vector<StatCoeffs> coeffs(batch);

    for (std::size_t b = 0; b < batch; ++b) {
        coeffs[b] = stat_coeffs(notion, labels[b], weights[b]);
        const double num = coeffs[b].n0 + coeffs[b].n1 * scores[b];
        const double den = coeffs[b].d0 + coeffs[b].d1 * scores[b];
        total_numerator += num;
        total_denominator += den;
        const double* indicator = encoding.indicators.row(rows[b]);
        for (std::size_t q = 0; q < groups; ++q) {
            if (indicator[q] > 0.5) {
                group_numerator[q] += num;
                group_denominator[q] += den;
            }
        }
    }

    // gamma_mean below the guard: skip the batch entirely.
    if (total_denominator <= kDenominatorGuard ||
        std::abs(total_numerator / total_denominator) <= kDenominatorGuard) {
        result.skipped_groups = static_cast<int>(groups);
        return result;
    }

    // value = sum_q |u_q / v_q - 1| with u_q = N_q * D_tot, v_q = D_q * N_tot.
    for (std::size_t q = 0; q < groups; ++q) {
        if (group_denominator[q] <= kDenominatorGuard) {
            ++result.skipped_groups;
            continue;
        }
        const double u = group_numerator[q] * total_denominator;
        const double v = group_denominator[q] * total_numerator;
        const double ratio = u / v;
        result.value += std::abs(ratio - 1.0);
        const double direction = sign(ratio - 1.0);
        if (direction == 0.0) continue;

        for (std::size_t b = 0; b < batch; ++b) {
            const bool member = encoding.indicators(rows[b], q) > 0.5;
            const double du = (member ? coeffs[b].n1 : 0.0) * total_denominator +
                              group_numerator[q] * coeffs[b].d1;
            const double dv = (member ? coeffs[b].d1 : 0.0) * total_numerator +
                              group_denominator[q] * coeffs[b].n1;
            result.grad[b] += direction * (du * v - u * dv) / (v * v);
        }
    }
    return result;
}

PenaltyResult prejudice_remover_penalty(std::span<const double> scores,
                                        std::span<const double> weights,
                                        const SensitiveEncoding& encoding,
                                        std::span<const std::size_t> rows) {
    require_partition(encoding, "prejudice remover");
    const std::size_t batch = scores.size();
    PenaltyResult result;
    result.grad.assign(batch, 0.0);
    if (batch == 0) return result;

    const std::size_t groups = encoding.group_count();
    std::vector<double> group_weight(groups, 0.0);
    std::vector<double> group_score(groups, 0.0);
    std::vector<std::size_t> group_of(batch);
    double total_weight = 0.0;
    double total_score = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t q = encoding.partition_group(rows[b]);
        group_of[b] = q;
        group_weight[q] += weights[b];
        group_score[q] += weights[b] * scores[b];
        total_weight += weights[b];
        total_score += weights[b] * scores[b];
    }

    const double mean = total_score / total_weight;
    std::vector<double> log_ratio(groups, 0.0);
    for (std::size_t q = 0; q < groups; ++q) {
        if (group_weight[q] <= 0.0) continue;
        const double fraction = group_weight[q] / total_weight;
        const double p = group_score[q] / group_weight[q];
        double term = 0.0;
        if (p > 0.0) term += p * std::log(std::max(p, 1e-300) / std::max(mean, 1e-300));
        if (p < 1.0)
            term += (1.0 - p) * std::log(std::max(1.0 - p, 1e-300) / std::max(1.0 - mean, 1e-300));
        result.value += fraction * term;
        // d value / d p_q, with the mean's own derivative cancelling exactly
        log_ratio[q] = clamped_log(p / std::max(mean, 1e-12)) -
                       clamped_log((1.0 - p) / std::max(1.0 - mean, 1e-12));
    }
    result.value = std::max(result.value, 0.0);

    for (std::size_t b = 0; b < batch; ++b)
        result.grad[b] = weights[b] / total_weight * log_ratio[group_of[b]];
    return result;
}

PenaltyFn make_fairret_penalty(FairnessNotion notion, const TabularDataset& data,
                               const SensitiveEncoding& encoding) {
    std::vector<double> labels(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) labels[i] = static_cast<double>(data.labels[i]);
    return [notion, labels = std::move(labels), weights = data.weights, encoding](
               std::span<const double> scores, std::span<const std::size_t> rows) {
        std::vector<double> batch_labels(rows.size());
        std::vector<double> batch_weights(rows.size());
        for (std::size_t b = 0; b < rows.size(); ++b) {
            batch_labels[b] = labels[rows[b]];
            batch_weights[b] = weights[rows[b]];
        }
        return fairret_norm_penalty(notion, scores, batch_labels, batch_weights, encoding, rows);
    };
}

PenaltyFn make_prejudice_remover_penalty(const TabularDataset& data,
                                         const SensitiveEncoding& encoding) {
    return [weights = data.weights, encoding](std::span<const double> scores,
                                              std::span<const std::size_t> rows) {
        std::vector<double> batch_weights(rows.size());
        for (std::size_t b = 0; b < rows.size(); ++b) batch_weights[b] = weights[rows[b]];
        return prejudice_remover_penalty(scores, batch_weights, encoding, rows);
    };
}

// --- exponentiated gradient -------------------------------------------------

void EGConfig::validate() const {
    if (notion != FairnessNotion::dem_par && notion != FairnessNotion::eq_opp &&
        notion != FairnessNotion::pred_eq && notion != FairnessNotion::acc_eq)
        throw ConfigError("exponentiated gradient supports notions "
                          "['dem_par', 'eq_opp', 'pred_eq', 'acc_eq'] only");
    if (slack < 0.0) throw ConfigError("slack must be nonnegative");
    if (iterations == 0) throw ConfigError("iteration count must be at least 1");
    if (!(multiplier_bound > 0.0)) throw ConfigError("multiplier bound must be positive");
    if (!(eg_rate > 0.0)) throw ConfigError("eg rate must be positive");
    inner.validate();
}

std::vector<double> EnsembleScorer::scores(const Matrix& features) const {
    std::vector<double> mean(features.rows, 0.0);
    for (const Scorer& member : members) {
        const std::vector<double> member_scores = forward(member, features);
        for (std::size_t i = 0; i < mean.size(); ++i)
            if (member_scores[i] >= 0.5) mean[i] += 1.0;
    }
    const double count = static_cast<double>(members.size());
    for (double& value : mean) value /= count;
    return mean;
}

EGResult exponentiated_gradient(const TabularDataset& train, const SensitiveEncoding& encoding,
                                const EGConfig& config) {
    config.validate();
    require_partition(encoding, "exponentiated gradient");
    const std::size_t n = train.n();
    const std::size_t groups = encoding.group_count();

    // The supported notions have prediction-free denominators, so the
    // statistic is affine in the hard predictions: gamma(q) =
    // (sum_{i in q} a_i h_i + c_q) / D_q.
    std::vector<double> numerator_coeff(n);
    std::vector<double> group_denominator(groups, 0.0);
    double total_denominator = 0.0;
    double total_weight = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const StatCoeffs c =
            stat_coeffs(config.notion, static_cast<double>(train.labels[i]), train.weights[i]);
        numerator_coeff[i] = c.n1;
        total_denominator += c.d0;
        group_denominator[encoding.partition_group(i)] += c.d0;
        total_weight += train.weights[i];
    }
    for (std::size_t q = 0; q < groups; ++q)
        if (group_denominator[q] <= kDenominatorGuard)
            throw UndefinedStatError("statistic '" + to_string(config.notion) +
                                     "' is undefined on group '" + encoding.group_names[q] + "'");

    // Multipliers for {gamma(q) - mean <= slack, mean - gamma(q) <= slack}.
    std::vector<double> lambda_high(groups, config.lambda_init);
    std::vector<double> lambda_low(groups, config.lambda_init);

    EGResult result;
    std::vector<double> effective_labels(n);
    std::vector<double> hard_scores(n);

    for (std::size_t t = 0; t < config.iterations; ++t) {
        // (a) per-sample cost of predicting 1 instead of 0
        TabularDataset weighted = train;
        double weight_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t q = encoding.partition_group(i);
            const double lambda = lambda_high[q] - lambda_low[q];
            double cost = train.weights[i] * (1.0 - 2.0 * train.labels[i]) / total_weight;
            cost += lambda * numerator_coeff[i] *
                    (1.0 / group_denominator[q] - 1.0 / total_denominator);
            effective_labels[i] = cost < 0.0 ? 1.0 : 0.0;
            weighted.weights[i] = std::abs(cost);
            weight_sum += weighted.weights[i];
        }
        if (weight_sum <= 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                weighted.weights[i] = 1.0;
                effective_labels[i] = static_cast<double>(train.labels[i]);
            }
        } else {
            const double scale = static_cast<double>(n) / weight_sum;
            for (double& w : weighted.weights) w *= scale;
        }
        for (std::size_t i = 0; i < n; ++i)
            weighted.labels[i] = effective_labels[i] > 0.5 ? 1 : 0;

        // (b) fresh naive problem
        TrainConfig inner = config.inner;
        inner.seed = mix_seed(config.inner.seed, fnv1a64("eg_iteration") ^ t);
        Scorer member = init_scorer(train.feature_dim(), config.layer_sizes, inner.seed);
        member = fairbench::train(member, weighted, inner);

        // (c) constraint gaps from the iterate's hard predictions
        const std::vector<double> member_scores = forward(member, train.features);
        for (std::size_t i = 0; i < n; ++i) hard_scores[i] = member_scores[i] >= 0.5 ? 1.0 : 0.0;
        const GroupStatistics stats =
            statistic(config.notion, hard_scores, train.labels, train.weights, encoding);

        // (d) multiplicative update, then rescale onto the l1 ball of radius B
        double lambda_sum = 0.0;
        for (std::size_t q = 0; q < groups; ++q) {
            const double gap = stats.gamma[q] - stats.gamma_mean;
            lambda_high[q] *= std::exp(config.eg_rate * (gap - config.slack));
            lambda_low[q] *= std::exp(config.eg_rate * (-gap - config.slack));
            lambda_sum += lambda_high[q] + lambda_low[q];
        }
        if (lambda_sum > config.multiplier_bound) {
            const double scale = config.multiplier_bound / lambda_sum;
            for (std::size_t q = 0; q < groups; ++q) {
                lambda_high[q] *= scale;
                lambda_low[q] *= scale;
            }
        }

        result.scorer.members.push_back(std::move(member));
        ++result.iterations_run;
    }

    const std::vector<double> ensemble = result.scorer.scores(train.features);
    for (std::size_t i = 0; i < n; ++i) hard_scores[i] = ensemble[i] >= 0.5 ? 1.0 : 0.0;
    const GroupStatistics stats =
        statistic(config.notion, hard_scores, train.labels, train.weights, encoding);
    for (std::size_t q = 0; q < groups; ++q)
        if (stats.defined[q])
            result.final_train_gap =
                std::max(result.final_train_gap, std::abs(stats.gamma[q] - stats.gamma_mean));
    result.met_slack = result.final_train_gap <= config.slack;

    result.multipliers.reserve(2 * groups);
    for (std::size_t q = 0; q < groups; ++q) {
        result.multipliers.push_back(lambda_high[q]);
        result.multipliers.push_back(lambda_low[q]);
    }
    return result;
}

}  // namespace fairbench
