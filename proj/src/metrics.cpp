#include "fairbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairbench/errors.hpp"

namespace fairbench {

std::string to_string(FairnessNotion notion) {
    switch (notion) {
        case FairnessNotion::dem_par: return "dem_par";
        case FairnessNotion::eq_opp: return "eq_opp";
        case FairnessNotion::pred_eq: return "pred_eq";
        case FairnessNotion::pred_par: return "pred_par";
        case FairnessNotion::forp: return "forp";
        case FairnessNotion::acc_eq: return "acc_eq";
        case FairnessNotion::f1_score_eq: return "f1_score_eq";
    }
    return "?";
}

FairnessNotion notion_from_string(const std::string& token) {
    for (FairnessNotion notion : kAllNotions)
        if (to_string(notion) == token) return notion;
    throw ConfigError("unknown fairness notion '" + token +
                      "'; options are ['dem_par', 'eq_opp', 'forp', 'pred_par', 'acc_eq', "
                      "'f1_score_eq', 'pred_eq']");
}

std::string to_string(OutputType output) {
    return output == OutputType::hard ? "hard" : "soft";
}

OutputType output_type_from_string(const std::string& token) {
    if (token == "hard") return OutputType::hard;
    if (token == "soft") return OutputType::soft;
    throw ConfigError("unknown output type '" + token + "'; options are ['hard', 'soft']");
}

StatCoeffs stat_coeffs(FairnessNotion notion, double y, double w) {
    switch (notion) {
        case FairnessNotion::dem_par:      // positive rate: E[s] / E[1]
            return {0.0, w, w, 0.0};
        case FairnessNotion::eq_opp:       // true positive rate: E[s y] / E[y]
            return {0.0, w * y, w * y, 0.0};
        case FairnessNotion::pred_eq:      // false positive rate: E[s (1-y)] / E[1-y]
            return {0.0, w * (1.0 - y), w * (1.0 - y), 0.0};
        case FairnessNotion::pred_par:     // precision: E[s y] / E[s]
            return {0.0, w * y, 0.0, w};
        case FairnessNotion::forp:         // false omission rate: E[y (1-s)] / E[1-s]
            return {w * y, -w * y, w, -w};
        case FairnessNotion::acc_eq:       // accuracy: E[1 - y + (2y-1) s] / E[1]
            return {w * (1.0 - y), w * (2.0 * y - 1.0), w, 0.0};
        case FairnessNotion::f1_score_eq:  // F1: E[2 s y] / E[y + s]
            return {0.0, 2.0 * w * y, w * y, w};
    }
    return {0.0, 0.0, 0.0, 0.0};
}

GroupStatistics statistic(FairnessNotion notion, std::span<const double> predictions,
                          std::span<const int> labels, std::span<const double> weights,
                          const SensitiveEncoding& encoding) {
    const std::size_t n = predictions.size();
    if (labels.size() != n || weights.size() != n || encoding.indicators.rows != n)
        throw ShapeError("statistic inputs must share one row count");

    const std::size_t groups = encoding.group_count();
    std::vector<double> numerator(groups, 0.0);
    std::vector<double> denominator(groups, 0.0);
    double total_numerator = 0.0;
    double total_denominator = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const StatCoeffs c = stat_coeffs(notion, static_cast<double>(labels[i]), weights[i]);
        const double num = c.n0 + c.n1 * predictions[i];
        const double den = c.d0 + c.d1 * predictions[i];
        total_numerator += num;
        total_denominator += den;
        const double* row = encoding.indicators.row(i);
        for (std::size_t q = 0; q < groups; ++q) {
            if (row[q] > 0.5) {
                numerator[q] += num;
                denominator[q] += den;
            }
        }
    }

    if (total_denominator <= kDenominatorGuard)
        throw UndefinedStatError("statistic '" + to_string(notion) +
                                 "' is undefined: global denominator vanished");

    GroupStatistics stats;
    stats.notion = notion;
    stats.group_names = encoding.group_names;
    stats.gamma.assign(groups, 0.0);
    stats.defined.assign(groups, false);
    stats.gamma_mean = total_numerator / total_denominator;
    for (std::size_t q = 0; q < groups; ++q) {
        if (denominator[q] > kDenominatorGuard) {
            stats.gamma[q] = numerator[q] / denominator[q];
            stats.defined[q] = true;
        }
    }
    return stats;
}

ViolationResult violation(const GroupStatistics& stats) {
    if (std::abs(stats.gamma_mean) <= kDenominatorGuard)
        throw UndefinedStatError("violation of '" + to_string(stats.notion) +
                                 "' is undefined: mean statistic vanished");
    ViolationResult result;
    bool any = false;
    for (std::size_t q = 0; q < stats.gamma.size(); ++q) {
        if (!stats.defined[q]) {
            ++result.skipped_groups;
            continue;
        }
        any = true;
        result.value = std::max(result.value, std::abs(stats.gamma[q] / stats.gamma_mean - 1.0));
    }
    if (!any)
        throw UndefinedStatError("violation of '" + to_string(stats.notion) +
                                 "' is undefined: every group denominator vanished");
    return result;
}

std::vector<int> harden(std::span<const double> scores) {
    std::vector<int> hard(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) hard[i] = scores[i] >= 0.5 ? 1 : 0;
    return hard;
}

double accuracy(std::span<const int> hard, std::span<const int> labels,
                std::span<const double> weights) {
    if (hard.empty()) throw EmptyDataError("accuracy of an empty prediction vector");
    if (hard.size() != labels.size() || hard.size() != weights.size())
        throw ShapeError("accuracy inputs must share one length");
    double matched = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < hard.size(); ++i) {
        total += weights[i];
        if (hard[i] == labels[i]) matched += weights[i];
    }
    return matched / total;
}

double auroc(std::span<const double> scores, std::span<const int> labels,
             std::span<const double> weights) {
    if (scores.size() != labels.size() || scores.size() != weights.size())
        throw ShapeError("auroc inputs must share one length");
    const std::size_t n = scores.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_total = 0.0;
    double negative_total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        (labels[i] == 1 ? positive_total : negative_total) += weights[i];
    if (positive_total <= 0.0 || negative_total <= 0.0)
        throw UndefinedStatError("auroc is undefined: labels contain a single class");

    // Walk tie blocks in ascending score order; every positive in a block
    // outranks all negatives strictly below and half-ties the block itself.
    double correct_pairs = 0.0;
    double negatives_below = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        double block_positive = 0.0;
        double block_negative = 0.0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? block_positive : block_negative) += weights[order[j]];
            ++j;
        }
        correct_pairs += block_positive * (negatives_below + 0.5 * block_negative);
        negatives_below += block_negative;
        i = j;
    }
    return correct_pairs / (positive_total * negative_total);
}

namespace {

LabelEval evaluate_against(std::span<const double> scores, std::span<const int> labels,
                           std::span<const double> weights,
                           const std::vector<SensitiveEncoding>& encodings,
                           const std::vector<FairnessNotion>& notions) {
    LabelEval eval;
    const std::vector<int> hard = harden(scores);
    std::vector<double> hard_scores(hard.begin(), hard.end());

    try {
        eval.accuracy = accuracy(hard, labels, weights);
    } catch (const std::exception& e) {
        eval.performance_warning = e.what();
    }
    try {
        eval.auroc = auroc(scores, labels, weights);
    } catch (const std::exception& e) {
        eval.performance_warning += eval.performance_warning.empty() ? e.what()
                                                                     : std::string("; ") + e.what();
    }

    for (const auto& encoding : encodings) {
        for (FairnessNotion notion : notions) {
            for (OutputType output : {OutputType::soft, OutputType::hard}) {
                EvalCell cell;
                cell.format = encoding.format;
                cell.notion = notion;
                cell.output_type = output;
                try {
                    const auto& predictions =
                        output == OutputType::soft
                            ? scores
                            : std::span<const double>(hard_scores);
                    cell.stats = statistic(notion, predictions, labels, weights, encoding);
                    const ViolationResult v = violation(cell.stats);
                    cell.violation = v.value;
                    cell.skipped_groups = v.skipped_groups;
                } catch (const std::exception& e) {
                    cell.warning = e.what();
                }
                eval.cells.push_back(std::move(cell));
            }
        }
    }
    return eval;
}

}  // namespace

EvaluationReport evaluate(std::span<const double> scores, const TabularDataset& dataset,
                          const std::vector<SensitiveEncoding>& encodings,
                          const std::vector<FairnessNotion>& notions) {
    if (scores.size() != dataset.n())
        throw ShapeError("score count differs from dataset row count");
    if (encodings.empty()) throw ConfigError("evaluate requires at least one encoding");

    EvaluationReport report;
    report.biased = evaluate_against(scores, dataset.labels, dataset.weights, encodings, notions);
    if (dataset.unbiased_labels)
        report.unbiased =
            evaluate_against(scores, *dataset.unbiased_labels, dataset.weights, encodings, notions);
    return report;
}

// --- serialization ---------------------------------------------------------

namespace {

nlohmann::json label_eval_to_json(const LabelEval& eval) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : eval.cells) {
        nlohmann::json performance;
        if (cell.output_type == OutputType::hard && eval.accuracy)
            performance = *eval.accuracy;
        else if (cell.output_type == OutputType::soft && eval.auroc)
            performance = *eval.auroc;
        nlohmann::json entry = {{"format", to_string(cell.format)},
                                {"notion", to_string(cell.notion)},
                                {"output_type", to_string(cell.output_type)},
                                {"violation", cell.violation ? nlohmann::json(*cell.violation)
                                                             : nlohmann::json()},
                                {"performance", performance},
                                {"skipped_groups", cell.skipped_groups},
                                {"gamma", cell.stats.gamma},
                                {"gamma_mean", cell.stats.gamma_mean},
                                {"group_names", cell.stats.group_names}};
        if (!cell.warning.empty()) entry["warning"] = cell.warning;
        cells.push_back(std::move(entry));
    }
    nlohmann::json doc = {{"accuracy", eval.accuracy ? nlohmann::json(*eval.accuracy)
                                                     : nlohmann::json()},
                          {"auroc", eval.auroc ? nlohmann::json(*eval.auroc) : nlohmann::json()},
                          {"cells", std::move(cells)}};
    if (!eval.performance_warning.empty()) doc["performance_warning"] = eval.performance_warning;
    return doc;
}

LabelEval label_eval_from_json(const nlohmann::json& doc) {
    LabelEval eval;
    if (doc.contains("accuracy") && !doc["accuracy"].is_null())
        eval.accuracy = doc["accuracy"].get<double>();
    if (doc.contains("auroc") && !doc["auroc"].is_null())
        eval.auroc = doc["auroc"].get<double>();
    if (doc.contains("performance_warning"))
        eval.performance_warning = doc["performance_warning"].get<std::string>();
    for (const auto& entry : doc["cells"]) {
        EvalCell cell;
        cell.format = format_from_string(entry["format"].get<std::string>());
        cell.notion = notion_from_string(entry["notion"].get<std::string>());
        cell.output_type = output_type_from_string(entry["output_type"].get<std::string>());
        if (!entry["violation"].is_null()) cell.violation = entry["violation"].get<double>();
        cell.skipped_groups = entry.value("skipped_groups", 0);
        if (entry.contains("warning")) cell.warning = entry["warning"].get<std::string>();
        cell.stats.notion = cell.notion;
        if (entry.contains("gamma")) cell.stats.gamma = entry["gamma"].get<std::vector<double>>();
        if (entry.contains("gamma_mean")) cell.stats.gamma_mean = entry["gamma_mean"].get<double>();
        if (entry.contains("group_names"))
            cell.stats.group_names = entry["group_names"].get<std::vector<std::string>>();
        cell.stats.defined.assign(cell.stats.gamma.size(), true);
        eval.cells.push_back(std::move(cell));
    }
    return eval;
}

}  // namespace

nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json doc = {{"biased", label_eval_to_json(report.biased)}};
    if (report.unbiased) doc["unbiased"] = label_eval_to_json(*report.unbiased);
    return doc;
}

EvaluationReport report_from_json(const nlohmann::json& doc) {
    EvaluationReport report;
    report.biased = label_eval_from_json(doc.at("biased"));
    if (doc.contains("unbiased") && !doc["unbiased"].is_null())
        report.unbiased = label_eval_from_json(doc["unbiased"]);
    return report;
}

}  // namespace fairbench
