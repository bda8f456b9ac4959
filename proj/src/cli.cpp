#include "fairbench/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairbench/bench.hpp"
#include "fairbench/errors.hpp"

namespace fairbench {

namespace {

std::vector<double> parse_k_list(const std::string& text) {
    std::vector<double> ks;
    std::stringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ',')) {
        try {
            ks.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse k value '" + token + "'");
        }
    }
    if (ks.empty()) throw ConfigError("--k must list at least one bound");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (!(ks[i] > 0.0)) throw ConfigError("k values must be positive");
        if (i > 0 && ks[i] <= ks[i - 1])
            throw ConfigError("k values must be sorted strictly ascending");
    }
    return ks;
}

void validate_target(const std::string& target) {
    if (target != "biased" && target != "unbiased")
        throw ConfigError("unknown target '" + target + "'; options are ['biased', 'unbiased']");
}

/// Formats present in the records for the requested cell coordinates, in
/// canonical order.
std::vector<SensitiveFormat> formats_in_records(const std::vector<RunRecord>& records,
                                                FairnessNotion notion, OutputType output,
                                                const std::string& target) {
    std::vector<SensitiveFormat> formats;
    for (SensitiveFormat format :
         {SensitiveFormat::binary, SensitiveFormat::intersectional, SensitiveFormat::parallel}) {
        for (const RunRecord& record : records) {
            if (record.failed) continue;
            const LabelEval* eval = target == "biased"
                                        ? &record.report.biased
                                        : (record.report.unbiased ? &*record.report.unbiased
                                                                  : nullptr);
            if (!eval) continue;
            bool found = false;
            for (const EvalCell& cell : eval->cells) {
                if (cell.format == format && cell.notion == notion &&
                    cell.output_type == output && cell.violation) {
                    found = true;
                    break;
                }
            }
            if (found) {
                formats.push_back(format);
                break;
            }
        }
    }
    return formats;
}

int command_run(const std::string& config_path, bool fresh, std::ostream& out,
                std::ostream& err) {
    std::ifstream in(config_path);
    if (!in) {
        err << "error: cannot open config file '" << config_path << "'\n";
        return 2;
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        err << "error: config is not valid JSON: " << e.what() << "\n";
        return 2;
    }
    const RunConfig config = parse_run_config(doc);

    std::filesystem::create_directories(config.output_dir);
    char name[64];
    std::snprintf(name, sizeof name, "records_%016" PRIx64 ".jsonl", config_hash(config.raw));
    const std::filesystem::path records_path =
        std::filesystem::path(config.output_dir) / name;

    std::vector<std::string> done;
    if (!fresh && std::filesystem::exists(records_path)) {
        for (const RunRecord& record : read_records(records_path.string()))
            done.push_back(record_key(record));
        out << "resuming: " << done.size() << " record(s) already in " << records_path.string()
            << "\n";
    }

    std::ofstream records_out(records_path,
                              fresh ? std::ios::trunc : std::ios::app);
    if (!records_out) {
        err << "error: cannot open '" << records_path.string() << "' for writing\n";
        return 2;
    }

    std::size_t completed = 0;
    std::size_t failed = 0;
    run_benchmark(config,
                  [&](const RunRecord& record) {
                      records_out << record_to_json(record).dump() << "\n";
                      records_out.flush();
                      ++completed;
                      if (record.failed) ++failed;
                      out << record.method << " strength=" << record.strength
                          << " seed=" << record.seed
                          << (record.failed ? " FAILED: " + record.error : " ok") << "\n";
                  },
                  done);
    out << "wrote " << completed << " record(s) to " << records_path.string();
    if (failed) out << " (" << failed << " failed)";
    out << "\n";
    return failed == 0 ? 0 : 3;
}

int command_table(const std::string& records_path, const std::string& notion_token,
                  const std::string& output_token, const std::string& k_text,
                  const std::string& target, const std::string& out_prefix, std::ostream& out) {
    validate_target(target);
    TableSpec spec;
    spec.notion = notion_from_string(notion_token);
    spec.output = output_type_from_string(output_token);
    spec.target = target;

    const std::vector<RunRecord> records = read_records(records_path);
    const std::vector<SensitiveFormat> formats =
        formats_in_records(records, spec.notion, spec.output, target);
    if (formats.empty())
        throw TableError("records contain no cells for notion '" + notion_token +
                         "', output '" + output_token + "', target '" + target + "'");

    std::optional<std::vector<double>> fixed_ks;
    if (!k_text.empty()) fixed_ks = parse_k_list(k_text);

    for (SensitiveFormat format : formats) {
        if (fixed_ks) {
            spec.format_ks.emplace_back(format, *fixed_ks);
            continue;
        }
        // auto-k from the naive baseline violation of this format
        TableSpec probe = spec;
        probe.format_ks = {{format, {}}};
        const PerformanceTable header_only = performance_table(records, probe);
        const auto bounds = infer_k(header_only.naive.front().second);
        spec.format_ks.emplace_back(format,
                                    std::vector<double>{bounds[0], bounds[1], bounds[2]});
    }

    const PerformanceTable table = performance_table(records, spec);
    const std::string text = table_to_text(table);
    const std::string csv = table_to_csv(table);
    out << text;
    if (!out_prefix.empty()) {
        std::ofstream(out_prefix + ".txt") << text;
        std::ofstream(out_prefix + ".csv") << csv;
        out << "wrote " << out_prefix << ".txt and " << out_prefix << ".csv\n";
    }
    return 0;
}

int command_tradeoff(const std::string& records_path, const std::string& notion_token,
                     const std::string& output_token, const std::string& format_token,
                     const std::string& target, const std::string& out_prefix,
                     std::ostream& out) {
    validate_target(target);
    const FairnessNotion notion = notion_from_string(notion_token);
    const OutputType output = output_type_from_string(output_token);
    const SensitiveFormat format = format_from_string(format_token);

    const std::vector<RunRecord> records = read_records(records_path);
    const std::vector<TradeoffPoint> points =
        tradeoff_export(records, notion, output, format, target);
    const std::string csv = tradeoff_to_csv(points);
    out << csv;
    if (!out_prefix.empty()) {
        std::ofstream(out_prefix + ".csv") << csv;
        out << "wrote " << out_prefix << ".csv\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"fairness benchmarking engine for binary classification"};
    app.require_subcommand(1);

    std::string config_path;
    bool fresh = false;
    CLI::App* run = app.add_subcommand("run", "execute a benchmark sweep from a config file");
    run->add_option("--config", config_path, "path to the run configuration JSON")->required();
    run->add_flag("--fresh", fresh, "ignore existing records instead of resuming");

    std::string records_path, notion_token, output_token, k_text, target = "biased", out_prefix;
    CLI::App* table = app.add_subcommand("table", "emit the max-performance-under-violation table");
    table->add_option("--records", records_path, "records JSONL file")->required();
    table->add_option("--notion", notion_token,
                      "fairness notion: ['dem_par', 'eq_opp', 'forp', 'pred_par', 'acc_eq', "
                      "'f1_score_eq', 'pred_eq']")
        ->required();
    table->add_option("--output_type", output_token, "output type: ['hard', 'soft']")->required();
    table->add_option("--k", k_text, "comma-separated violation bounds (default: auto-inferred)");
    table->add_option("--target", target, "label target: ['biased', 'unbiased']");
    table->add_option("--out", out_prefix, "write <prefix>.txt and <prefix>.csv");

    std::string format_token;
    CLI::App* tradeoff = app.add_subcommand("tradeoff", "emit trade-off curve data with ellipses");
    tradeoff->add_option("--records", records_path, "records JSONL file")->required();
    tradeoff->add_option("--notion", notion_token,
                         "fairness notion: ['dem_par', 'eq_opp', 'forp', 'pred_par', 'acc_eq', "
                         "'f1_score_eq', 'pred_eq']")
        ->required();
    tradeoff->add_option("--output_type", output_token, "output type: ['hard', 'soft']")
        ->required();
    tradeoff
        ->add_option("--sens_attr", format_token,
                     "sensitive attribute format: ['binary', 'intersectional', 'parallel']")
        ->required();
    tradeoff->add_option("--target", target, "label target: ['biased', 'unbiased']");
    tradeoff->add_option("--out", out_prefix, "write <prefix>.csv");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return 0;
        }
        err << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (app.got_subcommand(run)) return command_run(config_path, fresh, out, err);
        if (app.got_subcommand(table))
            return command_table(records_path, notion_token, output_token, k_text, target,
                                 out_prefix, out);
        return command_tradeoff(records_path, notion_token, output_token, format_token, target,
                                out_prefix, out);
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace fairbench
