#include "fairbench/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fairbench/errors.hpp"
#include "fairbench/postmethods.hpp"
#include "fairbench/premethods.hpp"
#include "fairbench/rng.hpp"

namespace fairbench {

namespace {

std::string fmt_full(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

std::string fmt_sig4(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.4g", value);
    return buffer;
}

double mean_of(const std::vector<double>& values) {
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

double sample_stddev(const std::vector<double>& values, double mean) {
    if (values.size() < 2) return 0.0;
    double total = 0.0;
    for (double v : values) total += (v - mean) * (v - mean);
    return std::sqrt(total / static_cast<double>(values.size() - 1));
}

}  // namespace

std::string to_string(MethodStage stage) {
    switch (stage) {
        case MethodStage::naive: return "naive";
        case MethodStage::pre: return "pre";
        case MethodStage::in: return "in";
        case MethodStage::post: return "post";
    }
    return "?";
}

std::vector<double> standard_strengths(const std::string& method) {
    if (method == "data_repairer" || method == "prevalence_sampling")
        return {0.1, 0.5, 0.8, 0.9, 1.0};
    if (method == "label_flipping") return {0.001, 0.01, 0.03, 0.1, 0.3};
    if (method == "fairret_norm") return {0.001, 0.01, 0.1, 1.0, 3.0};
    if (method == "prejudice_remover") return {0.001, 0.01, 0.1, 0.3, 1.0};
    if (method == "exponentiated_gradient") return {0.8, 0.9, 0.95, 0.99, 1.0};
    if (method == "error_parity") return {0.005, 0.01, 0.05, 0.1, 0.3};
    throw ConfigError("no standard strengths for method '" + method + "'");
}

namespace {

MethodStage stage_of(const std::string& name) {
    if (name == "data_repairer" || name == "label_flipping" || name == "prevalence_sampling")
        return MethodStage::pre;
    if (name == "fairret_norm" || name == "prejudice_remover" ||
        name == "exponentiated_gradient")
        return MethodStage::in;
    if (name == "error_parity") return MethodStage::post;
    if (name == "fairret_kl_proj" || name == "laftr" || name == "learning_fair_representations")
        throw ConfigError("method '" + name + "' is not implemented in this engine");
    throw ConfigError(
        "unknown method '" + name +
        "'; options are ['data_repairer', 'label_flipping', 'prevalence_sampling', "
        "'fairret_norm', 'prejudice_remover', 'exponentiated_gradient', 'error_parity']");
}

DualLabelConfig dual_label_from_json(const nlohmann::json& doc) {
    DualLabelConfig config;
    if (doc.contains("n_samples")) config.n_samples = doc["n_samples"].get<std::size_t>();
    if (doc.contains("d_features")) config.d_features = doc["d_features"].get<std::size_t>();
    if (doc.contains("group_fractions")) {
        const auto fractions = doc["group_fractions"].get<std::vector<double>>();
        if (fractions.size() != 2)
            throw ConfigError("group_fractions must list exactly two fractions");
        config.group_fractions = {fractions[0], fractions[1]};
    }
    if (doc.contains("flip_rate_disadvantaged"))
        config.flip_rate_disadvantaged = doc["flip_rate_disadvantaged"].get<double>();
    if (doc.contains("flip_rate_advantaged"))
        config.flip_rate_advantaged = doc["flip_rate_advantaged"].get<double>();
    if (doc.contains("signal_strength"))
        config.signal_strength = doc["signal_strength"].get<double>();
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("include_sensitive_in_features"))
        config.include_sensitive_in_features = doc["include_sensitive_in_features"].get<bool>();
    config.validate();
    return config;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
    RunConfig config;
    config.raw = doc;

    if (!doc.contains("dataset")) throw ConfigError("run config must contain 'dataset'");
    const auto& dataset = doc["dataset"];
    if (dataset.contains("synthetic")) {
        config.synthetic = dual_label_from_json(dataset["synthetic"]);
    } else if (dataset.contains("csv")) {
        config.csv_path = dataset["csv"].at("path").get<std::string>();
        config.schema_path = dataset["csv"].at("schema").get<std::string>();
    } else {
        throw ConfigError("dataset must specify either 'synthetic' or 'csv'");
    }

    if (doc.contains("split")) {
        const auto fractions = doc["split"].get<std::vector<double>>();
        if (fractions.size() != 3) throw ConfigError("'split' must list three fractions");
        config.split_fractions = {fractions[0], fractions[1], fractions[2]};
    }
    if (doc.contains("model")) {
        const auto& model = doc["model"];
        if (model.contains("layer_sizes"))
            config.layer_sizes = model["layer_sizes"].get<std::vector<std::size_t>>();
        if (model.contains("learning_rate"))
            config.model.learning_rate = model["learning_rate"].get<double>();
        if (model.contains("epochs")) config.model.epochs = model["epochs"].get<std::size_t>();
        if (model.contains("batch_size"))
            config.model.batch_size = model["batch_size"].get<std::size_t>();
        if (model.contains("optimizer")) {
            const std::string token = model["optimizer"].get<std::string>();
            if (token == "sgd")
                config.model.optimizer = Optimizer::sgd;
            else if (token == "adam")
                config.model.optimizer = Optimizer::adam;
            else
                throw ConfigError("optimizer must be 'sgd' or 'adam'");
        }
        config.model.validate();
    }
    if (doc.contains("seeds")) config.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    if (config.seeds.empty()) throw ConfigError("at least one seed is required");
    if (doc.contains("formats")) {
        config.formats.clear();
        for (const auto& token : doc["formats"])
            config.formats.push_back(format_from_string(token.get<std::string>()));
    }
    if (doc.contains("notions")) {
        config.notions.clear();
        for (const auto& token : doc["notions"])
            config.notions.push_back(notion_from_string(token.get<std::string>()));
    }
    if (config.formats.empty() || config.notions.empty())
        throw ConfigError("formats and notions must be nonempty");
    if (doc.contains("binary_attr")) config.binary_attr = doc["binary_attr"].get<std::size_t>();
    if (doc.contains("output_dir")) config.output_dir = doc["output_dir"].get<std::string>();

    if (doc.contains("methods")) {
        for (const auto& entry : doc["methods"]) {
            MethodSpec spec;
            spec.name = entry.at("name").get<std::string>();
            spec.stage = stage_of(spec.name);
            spec.strengths = entry.contains("strengths")
                                 ? entry["strengths"].get<std::vector<double>>()
                                 : standard_strengths(spec.name);
            if (spec.strengths.empty())
                throw ConfigError("method '" + spec.name + "' has an empty strength list");
            if (entry.contains("notion"))
                spec.notion = notion_from_string(entry["notion"].get<std::string>());
            if (entry.contains("format"))
                spec.optimize_format = format_from_string(entry["format"].get<std::string>());
            config.methods.push_back(std::move(spec));
        }
    }
    return config;
}

// --- records -----------------------------------------------------------

nlohmann::json record_to_json(const RunRecord& record) {
    nlohmann::json doc = {{"method", record.method}, {"stage", record.stage},
                          {"strength", record.strength}, {"seed", record.seed},
                          {"failed", record.failed}, {"wall_time_s", record.wall_time_s},
                          {"warnings", record.warnings}};
    if (record.failed)
        doc["error"] = record.error;
    else
        doc["report"] = report_to_json(record.report);
    return doc;
}

RunRecord record_from_json(const nlohmann::json& doc) {
    RunRecord record;
    record.method = doc.at("method").get<std::string>();
    record.stage = doc.at("stage").get<std::string>();
    record.strength = doc.at("strength").get<double>();
    record.seed = doc.at("seed").get<std::uint64_t>();
    record.failed = doc.value("failed", false);
    record.wall_time_s = doc.value("wall_time_s", 0.0);
    if (doc.contains("warnings"))
        record.warnings = doc["warnings"].get<std::vector<std::string>>();
    if (record.failed)
        record.error = doc.value("error", "");
    else
        record.report = report_from_json(doc.at("report"));
    return record;
}

std::vector<RunRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open records file '" + path + "'");
    std::vector<RunRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError("bad record at line " + std::to_string(line_no) + " of '" + path +
                             "': " + e.what());
        }
    }
    return records;
}

std::uint64_t config_hash(const nlohmann::json& canonical) {
    return fnv1a64(canonical.dump());
}

std::string record_key(const RunRecord& record) {
    return record.method + "|" + fmt_full(record.strength) + "|" + std::to_string(record.seed);
}

// --- the sweep ----------------------------------------------------------

namespace {

struct SeedContext {
    SplitResult parts;
    std::vector<SensitiveEncoding> test_encodings;
    std::vector<std::string> encoding_warnings;
    Scorer naive;
    bool naive_ready = false;
    std::string naive_error;
};

std::uint64_t method_seed(std::uint64_t seed, const std::string& method, double strength) {
    return mix_seed(seed, fnv1a64(method) ^ std::bit_cast<std::uint64_t>(strength));
}

/// Max absolute gap |gamma(q) - gamma_mean| of hard predictions on a dataset.
double absolute_gap(const Scorer& scorer, const TabularDataset& data,
                    const SensitiveEncoding& encoding, FairnessNotion notion) {
    const std::vector<double> scores = forward(scorer, data.features);
    std::vector<double> hard(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) hard[i] = scores[i] >= 0.5 ? 1.0 : 0.0;
    const GroupStatistics stats = statistic(notion, hard, data.labels, data.weights, encoding);
    double gap = 0.0;
    for (std::size_t q = 0; q < stats.gamma.size(); ++q)
        if (stats.defined[q]) gap = std::max(gap, std::abs(stats.gamma[q] - stats.gamma_mean));
    return gap;
}

RunRecord execute_run(const RunConfig& config, const MethodSpec& method, double strength,
                      std::uint64_t seed, SeedContext& context) {
    RunRecord record;
    record.method = method.name;
    record.stage = to_string(method.stage);
    record.strength = strength;
    record.seed = seed;
    record.warnings = context.encoding_warnings;

    const auto start = std::chrono::steady_clock::now();
    try {
        const TabularDataset& train_split = context.parts.train;
        const TabularDataset& test_split = context.parts.test;
        const std::uint64_t run_seed = method_seed(seed, method.name, strength);
        std::vector<double> test_scores;

        if (method.stage == MethodStage::naive) {
            if (!context.naive_ready) throw std::runtime_error(context.naive_error);
            test_scores = forward(context.naive, test_split.features);
        } else if (method.stage == MethodStage::pre) {
            const SensitiveEncoding enc =
                encode_sensitive(train_split, method.optimize_format, config.binary_attr);
            if (strength > 1.0)
                record.warnings.push_back("strength " + fmt_sig4(strength) + " clamped to 1");
            TabularDataset transformed;
            if (method.name == "data_repairer")
                transformed = data_repairer(train_split, enc, strength);
            else if (method.name == "label_flipping")
                transformed = label_flipping(train_split, enc, strength, run_seed);
            else
                transformed = prevalence_sampling(train_split, enc, strength, run_seed);
            TrainConfig train_config = config.model;
            train_config.seed = run_seed;
            Scorer scorer = init_scorer(train_split.feature_dim(), config.layer_sizes, run_seed);
            scorer = fairbench::train(scorer, transformed, train_config);
            test_scores = forward(scorer, test_split.features);
        } else if (method.stage == MethodStage::in) {
            const SensitiveEncoding enc =
                encode_sensitive(train_split, method.optimize_format, config.binary_attr);
            if (method.name == "exponentiated_gradient") {
                if (!context.naive_ready) throw std::runtime_error(context.naive_error);
                const double naive_gap = absolute_gap(context.naive, train_split, enc, method.notion);
                EGConfig eg;
                eg.notion = method.notion;
                eg.slack = std::max((1.0 - std::min(strength, 1.0)) * naive_gap, 1e-4);
                eg.layer_sizes = config.layer_sizes;
                eg.inner = config.model;
                eg.inner.seed = run_seed;
                const EGResult result = exponentiated_gradient(train_split, enc, eg);
                if (!result.met_slack)
                    record.warnings.push_back("eg slack " + fmt_sig4(eg.slack) +
                                              " not met; best train gap " +
                                              fmt_sig4(result.final_train_gap));
                test_scores = result.scorer.scores(test_split.features);
            } else {
                PenaltyFn penalty = method.name == "fairret_norm"
                                        ? make_fairret_penalty(method.notion, train_split, enc)
                                        : make_prejudice_remover_penalty(train_split, enc);
                TrainConfig train_config = config.model;
                train_config.seed = run_seed;
                train_config.penalty_weight = strength;
                Scorer scorer = init_scorer(train_split.feature_dim(), config.layer_sizes, run_seed);
                scorer = fairbench::train(scorer, train_split, train_config, penalty);
                test_scores = forward(scorer, test_split.features);
            }
        } else {  // post
            if (!context.naive_ready) throw std::runtime_error(context.naive_error);
            const SensitiveEncoding train_enc =
                encode_sensitive(train_split, method.optimize_format, config.binary_attr);
            const std::vector<double> train_scores =
                forward(context.naive, train_split.features);
            const ThresholdPolicy policy =
                fit_error_parity(train_scores, train_split.labels, train_split.weights,
                                 train_enc, method.notion, strength);
            if (policy.infeasible)
                record.warnings.push_back("error parity infeasible at tolerance " +
                                          fmt_sig4(strength) + "; best fit violation " +
                                          fmt_sig4(policy.achieved_violation));
            const SensitiveEncoding test_enc =
                encode_sensitive(test_split, method.optimize_format, config.binary_attr);
            const std::vector<int> hard = apply_thresholds(
                forward(context.naive, test_split.features), test_enc, policy);
            // postprocessed soft output is the hard decision cast to {0, 1}
            test_scores.assign(hard.begin(), hard.end());
        }

        record.report = evaluate(test_scores, context.parts.test, context.test_encodings,
                                 config.notions);
    } catch (const std::exception& e) {
        record.failed = true;
        record.error = e.what();
    }
    record.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return record;
}

}  // namespace

std::vector<RunRecord> run_benchmark(const RunConfig& config,
                                     const std::function<void(const RunRecord&)>& on_record,
                                     const std::vector<std::string>& done_keys) {
    TabularDataset dataset;
    if (config.synthetic) {
        dataset = generate_dual_label(*config.synthetic);
    } else {
        dataset = load_csv(config.csv_path, CsvSchema::from_json_file(config.schema_path));
    }

    const std::set<std::string> done(done_keys.begin(), done_keys.end());
    std::vector<RunRecord> records;
    auto emit = [&](RunRecord record) {
        if (on_record) on_record(record);
        records.push_back(std::move(record));
    };

    for (std::uint64_t seed : config.seeds) {
        SeedContext context;
        context.parts = split(dataset, config.split_fractions, seed);

        for (SensitiveFormat format : config.formats) {
            try {
                context.test_encodings.push_back(
                    encode_sensitive(context.parts.test, format, config.binary_attr));
            } catch (const FormatError& e) {
                context.encoding_warnings.push_back("format '" + to_string(format) +
                                                    "' skipped: " + e.what());
            }
        }

        try {
            const std::uint64_t naive_seed = method_seed(seed, "naive", 0.0);
            TrainConfig naive_config = config.model;
            naive_config.seed = naive_seed;
            context.naive = init_scorer(context.parts.train.feature_dim(), config.layer_sizes,
                                        naive_seed);
            context.naive = train(context.naive, context.parts.train, naive_config);
            context.naive_ready = true;
        } catch (const std::exception& e) {
            context.naive_error = std::string("naive baseline failed: ") + e.what();
        }

        MethodSpec naive;
        naive.name = "naive";
        naive.stage = MethodStage::naive;
        RunRecord naive_probe;
        naive_probe.method = "naive";
        naive_probe.strength = 0.0;
        naive_probe.seed = seed;
        if (!done.count(record_key(naive_probe)))
            emit(execute_run(config, naive, 0.0, seed, context));

        for (const MethodSpec& method : config.methods) {
            for (double strength : method.strengths) {
                RunRecord probe;
                probe.method = method.name;
                probe.strength = strength;
                probe.seed = seed;
                if (done.count(record_key(probe))) continue;
                emit(execute_run(config, method, strength, seed, context));
            }
        }
    }
    return records;
}

// --- aggregation ----------------------------------------------------------

std::array<double, 3> infer_k(double naive_violation) {
    if (!(naive_violation > 0.0) || !std::isfinite(naive_violation))
        throw TableError("cannot infer k bounds from a nonpositive naive violation");
    return {naive_violation / 4.0, naive_violation / 2.0, naive_violation};
}

namespace {

const LabelEval* target_eval(const RunRecord& record, const std::string& target) {
    if (target == "biased") return &record.report.biased;
    if (target == "unbiased")
        return record.report.unbiased ? &*record.report.unbiased : nullptr;
    throw ConfigError("label target must be 'biased' or 'unbiased'");
}

/// Violation and performance of one record for a given cell coordinate, when
/// both are present.
std::optional<std::pair<double, double>> cell_outcome(const RunRecord& record,
                                                      FairnessNotion notion, OutputType output,
                                                      SensitiveFormat format,
                                                      const std::string& target) {
    if (record.failed) return std::nullopt;
    const LabelEval* eval = target_eval(record, target);
    if (!eval) return std::nullopt;
    const std::optional<double> performance =
        output == OutputType::hard ? eval->accuracy : eval->auroc;
    if (!performance) return std::nullopt;
    for (const EvalCell& cell : eval->cells) {
        if (cell.notion == notion && cell.output_type == output && cell.format == format &&
            cell.violation)
            return std::make_pair(*cell.violation, *performance);
    }
    return std::nullopt;
}

struct StrengthSummary {
    double strength = 0.0;
    double mean_violation = 0.0;
    double mean_performance = 0.0;
    double performance_se = 0.0;
    std::size_t seed_count = 0;
};

std::vector<StrengthSummary> summarize_method(const std::vector<RunRecord>& records,
                                              const std::string& method, FairnessNotion notion,
                                              OutputType output, SensitiveFormat format,
                                              const std::string& target) {
    std::map<double, std::vector<std::pair<double, double>>> by_strength;
    for (const RunRecord& record : records) {
        if (record.method != method) continue;
        const auto outcome = cell_outcome(record, notion, output, format, target);
        if (outcome) by_strength[record.strength].push_back(*outcome);
    }
    std::vector<StrengthSummary> summaries;
    for (const auto& [strength, outcomes] : by_strength) {
        StrengthSummary summary;
        summary.strength = strength;
        summary.seed_count = outcomes.size();
        std::vector<double> violations, performances;
        for (const auto& [violation, performance] : outcomes) {
            violations.push_back(violation);
            performances.push_back(performance);
        }
        summary.mean_violation = mean_of(violations);
        summary.mean_performance = mean_of(performances);
        summary.performance_se = sample_stddev(performances, summary.mean_performance) /
                                 std::sqrt(static_cast<double>(performances.size()));
        summaries.push_back(summary);
    }
    return summaries;
}

}  // namespace

PerformanceTable performance_table(const std::vector<RunRecord>& records, const TableSpec& spec) {
    PerformanceTable table;
    table.spec = spec;

    std::vector<std::string> methods;
    for (const RunRecord& record : records) {
        if (record.method == "naive") continue;
        if (std::find(methods.begin(), methods.end(), record.method) == methods.end())
            methods.push_back(record.method);
    }
    table.methods = methods;

    std::vector<std::string> gaps;
    for (const auto& [format, ks] : spec.format_ks) {
        (void)ks;
        const auto naive =
            summarize_method(records, "naive", spec.notion, spec.output, format, spec.target);
        if (naive.empty()) {
            gaps.push_back("no naive record covers (" + to_string(format) + ", " +
                           to_string(spec.notion) + ", " + to_string(spec.output) + ", " +
                           spec.target + ")");
            continue;
        }
        table.naive.emplace_back(format, naive.front().mean_violation);
    }
    if (!gaps.empty()) {
        std::string message = "records do not cover the requested table:";
        for (const auto& gap : gaps) message += " " + gap + ";";
        throw TableError(message);
    }

    for (const auto& [format, ks] : spec.format_ks) {
        for (double k : ks) {
            PerformanceTable::Row row;
            row.format = format;
            row.k = k;
            for (const std::string& method : methods) {
                const auto summaries =
                    summarize_method(records, method, spec.notion, spec.output, format,
                                     spec.target);
                TableCell cell;
                for (const StrengthSummary& summary : summaries) {
                    if (summary.mean_violation > k) continue;
                    if (!cell.filled || summary.mean_performance > cell.mean_performance) {
                        cell.filled = true;
                        cell.mean_performance = summary.mean_performance;
                        cell.standard_error = summary.performance_se;
                        cell.strength = summary.strength;
                        cell.mean_violation = summary.mean_violation;
                        cell.seed_count = summary.seed_count;
                    }
                }
                row.cells.push_back(cell);
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::string table_to_text(const PerformanceTable& table) {
    std::ostringstream out;
    out << "notion=" << to_string(table.spec.notion)
        << " output=" << to_string(table.spec.output) << " target=" << table.spec.target << "\n";
    out << "naive violation:";
    for (const auto& [format, violation] : table.naive)
        out << " " << to_string(format) << "=" << fmt_sig4(violation);
    out << "\n";

    std::vector<std::string> header = {"format", "k"};
    header.insert(header.end(), table.methods.begin(), table.methods.end());
    std::vector<std::vector<std::string>> grid;
    grid.push_back(header);
    for (const auto& row : table.rows) {
        std::vector<std::string> line = {to_string(row.format), fmt_sig4(row.k)};
        for (const TableCell& cell : row.cells) {
            line.push_back(cell.filled ? fmt_sig4(cell.mean_performance) + "+-" +
                                             fmt_sig4(cell.standard_error)
                                       : "-");
        }
        grid.push_back(std::move(line));
    }

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& line : grid)
        for (std::size_t c = 0; c < line.size(); ++c)
            widths[c] = std::max(widths[c], line[c].size());
    for (const auto& line : grid) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            out << line[c] << std::string(widths[c] - line[c].size() + 2, ' ');
        }
        out << "\n";
    }
    return out.str();
}

std::string table_to_csv(const PerformanceTable& table) {
    std::ostringstream out;
    out << "format,k,method,mean_performance,standard_error,strength,mean_violation,seed_count\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.cells.size(); ++c) {
            const TableCell& cell = row.cells[c];
            out << to_string(row.format) << "," << fmt_full(row.k) << "," << table.methods[c]
                << ",";
            if (cell.filled) {
                out << fmt_full(cell.mean_performance) << "," << fmt_full(cell.standard_error)
                    << "," << fmt_full(cell.strength) << "," << fmt_full(cell.mean_violation)
                    << "," << cell.seed_count;
            } else {
                out << ",,,,0";
            }
            out << "\n";
        }
    }
    return out.str();
}

std::vector<TradeoffPoint> tradeoff_export(const std::vector<RunRecord>& records,
                                           FairnessNotion notion, OutputType output,
                                           SensitiveFormat format, const std::string& target) {
    std::map<std::pair<std::string, double>, std::vector<std::pair<double, double>>> grouped;
    std::vector<std::pair<std::string, double>> order;
    for (const RunRecord& record : records) {
        const auto outcome = cell_outcome(record, notion, output, format, target);
        if (!outcome) continue;
        const auto key = std::make_pair(record.method, record.strength);
        if (!grouped.count(key)) order.push_back(key);
        grouped[key].push_back(*outcome);
    }
    if (grouped.empty())
        throw TableError("records contain no outcomes for (" + to_string(format) + ", " +
                         to_string(notion) + ", " + to_string(output) + ", " + target + ")");

    std::vector<TradeoffPoint> points;
    for (const auto& key : order) {
        const auto& outcomes = grouped[key];
        TradeoffPoint point;
        point.method = key.first;
        point.strength = key.second;
        point.seed_count = outcomes.size();

        std::vector<double> violations, performances;
        for (const auto& [violation, performance] : outcomes) {
            violations.push_back(violation);
            performances.push_back(performance);
        }
        point.mean_violation = mean_of(violations);
        point.mean_performance = mean_of(performances);

        const std::size_t n = outcomes.size();
        if (n < 2) {
            point.warning = "single seed; covariance omitted";
            points.push_back(std::move(point));
            continue;
        }
        double vv = 0.0, vp = 0.0, pp = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = violations[i] - point.mean_violation;
            const double dp = performances[i] - point.mean_performance;
            vv += dv * dv;
            vp += dv * dp;
            pp += dp * dp;
        }
        const double denom = static_cast<double>(n - 1);
        // sample covariance scaled to the standard error of the mean
        point.cov_vv = vv / denom / static_cast<double>(n);
        point.cov_vp = vp / denom / static_cast<double>(n);
        point.cov_pp = pp / denom / static_cast<double>(n);
        point.has_covariance = true;

        const double a = point.cov_vv, b = point.cov_vp, c = point.cov_pp;
        const double half_trace = (a + c) / 2.0;
        const double root = std::sqrt(std::max((a - c) * (a - c) / 4.0 + b * b, 0.0));
        const double major = half_trace + root;
        const double minor = std::max(half_trace - root, 0.0);
        point.ellipse_radius_major = std::sqrt(std::max(major, 0.0));
        point.ellipse_radius_minor = std::sqrt(minor);
        if (b == 0.0) {
            point.ellipse_angle_deg = a >= c ? 0.0 : 90.0;
        } else {
            point.ellipse_angle_deg = std::atan2(major - a, b) * 180.0 / 3.14159265358979323846;
        }
        points.push_back(std::move(point));
    }
    return points;
}

std::string tradeoff_to_csv(const std::vector<TradeoffPoint>& points) {
    std::ostringstream out;
    out << "method,strength,seed_count,mean_violation,mean_performance,"
           "cov_vv,cov_vp,cov_pp,ellipse_radius_major,ellipse_radius_minor,ellipse_angle_deg,"
           "warning\n";
    for (const TradeoffPoint& point : points) {
        out << point.method << "," << fmt_full(point.strength) << "," << point.seed_count << ","
            << fmt_full(point.mean_violation) << "," << fmt_full(point.mean_performance) << ",";
        if (point.has_covariance) {
            out << fmt_full(point.cov_vv) << "," << fmt_full(point.cov_vp) << ","
                << fmt_full(point.cov_pp) << "," << fmt_full(point.ellipse_radius_major) << ","
                << fmt_full(point.ellipse_radius_minor) << ","
                << fmt_full(point.ellipse_angle_deg);
        } else {
            out << ",,,,,";
        }
        out << "," << point.warning << "\n";
    }
    return out.str();
}

}  // namespace fairbench
