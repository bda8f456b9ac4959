#include "fairbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fairbench/errors.hpp"
#include "fairbench/rng.hpp"

namespace fairbench {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream stream(line);
    while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    try {
        std::size_t used = 0;
        out = std::stod(text, &used);
        return used == text.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

/// Sorts category names numerically when every name parses as a number,
/// lexicographically otherwise. Keeps integer codes stable across a CSV
/// round trip.
void sort_categories(std::vector<std::string>& categories) {
    bool all_numeric = true;
    for (const auto& c : categories) {
        double v;
        if (!parse_double(c, v)) {
            all_numeric = false;
            break;
        }
    }
    if (all_numeric) {
        std::sort(categories.begin(), categories.end(), [](const auto& a, const auto& b) {
            return std::stod(a) < std::stod(b);
        });
    } else {
        std::sort(categories.begin(), categories.end());
    }
}

void standardize_column(Matrix& features, std::size_t col, double mean, double stddev) {
    for (std::size_t i = 0; i < features.rows; ++i) {
        features(i, col) = stddev > 1e-12 ? (features(i, col) - mean) / stddev : 0.0;
    }
}

/// Population mean/stddev of one feature column.
std::pair<double, double> column_moments(const Matrix& features, std::size_t col) {
    double mean = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) mean += features(i, col);
    mean /= static_cast<double>(features.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) {
        const double d = features(i, col) - mean;
        var += d * d;
    }
    var /= static_cast<double>(features.rows);
    return {mean, std::sqrt(var)};
}

TabularDataset take_rows(const TabularDataset& source, const std::vector<std::size_t>& rows) {
    TabularDataset out;
    out.features = Matrix(rows.size(), source.feature_dim());
    out.labels.resize(rows.size());
    if (source.unbiased_labels) out.unbiased_labels.emplace(rows.size());
    out.sensitive.resize(rows.size() * source.attribute_count);
    out.attribute_count = source.attribute_count;
    out.weights.resize(rows.size());
    out.feature_names = source.feature_names;
    out.attribute_names = source.attribute_names;
    out.attribute_domains = source.attribute_domains;
    out.standardized_columns = source.standardized_columns;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t src = rows[r];
        for (std::size_t j = 0; j < source.feature_dim(); ++j)
            out.features(r, j) = source.features(src, j);
        out.labels[r] = source.labels[src];
        if (source.unbiased_labels) (*out.unbiased_labels)[r] = (*source.unbiased_labels)[src];
        for (std::size_t k = 0; k < source.attribute_count; ++k)
            out.sensitive[r * source.attribute_count + k] = source.sensitive_code(src, k);
        out.weights[r] = source.weights[src];
    }
    return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void TabularDataset::validate() const {
    const std::size_t count = n();
    if (count == 0) throw EmptyDataError("dataset has no rows");
    if (labels.size() != count) throw ShapeError("label count differs from row count");
    if (unbiased_labels && unbiased_labels->size() != count)
        throw ShapeError("unbiased label count differs from row count");
    if (weights.size() != count) throw ShapeError("weight count differs from row count");
    if (sensitive.size() != count * attribute_count)
        throw ShapeError("sensitive code count differs from n x m");
    if (attribute_domains.size() != attribute_count || attribute_names.size() != attribute_count)
        throw ShapeError("attribute metadata size differs from attribute count");
    if (feature_names.size() != feature_dim() || standardized_columns.size() != feature_dim())
        throw ShapeError("feature metadata size differs from feature count");
    for (std::size_t i = 0; i < count; ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ParseError("label outside {0,1}");
        if (unbiased_labels) {
            const int u = (*unbiased_labels)[i];
            if (u != 0 && u != 1) throw ParseError("unbiased label outside {0,1}");
        }
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
            throw ParseError("weight must be positive and finite");
        for (std::size_t k = 0; k < attribute_count; ++k) {
            const int code = sensitive_code(i, k);
            if (code < 0 || static_cast<std::size_t>(code) >= attribute_domains[k].size())
                throw ParseError("sensitive code outside its attribute domain");
        }
    }
}

std::string to_string(SensitiveFormat format) {
    switch (format) {
        case SensitiveFormat::binary: return "binary";
        case SensitiveFormat::intersectional: return "intersectional";
        case SensitiveFormat::parallel: return "parallel";
    }
    return "?";
}

SensitiveFormat format_from_string(const std::string& token) {
    if (token == "binary") return SensitiveFormat::binary;
    if (token == "intersectional") return SensitiveFormat::intersectional;
    if (token == "parallel") return SensitiveFormat::parallel;
    throw ConfigError("unknown sensitive attribute format '" + token +
                      "'; options are ['binary', 'intersectional', 'parallel']");
}

std::size_t SensitiveEncoding::partition_group(std::size_t row) const {
    if (format == SensitiveFormat::parallel)
        throw FormatError("parallel encoding does not partition samples into single groups");
    for (std::size_t q = 0; q < group_count(); ++q) {
        if (indicators(row, q) > 0.5) return q;
    }
    throw FormatError("row has no group indicator set");
}

std::vector<int> bin_numeric_attribute(const std::vector<double>& values) {
    if (values.empty()) throw EmptyDataError("cannot bin an empty attribute");
    double mean = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw ParseError("non-finite value in numeric attribute");
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    std::vector<int> codes(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) codes[i] = values[i] > mean ? 1 : 0;
    return codes;
}

// --- schema -------------------------------------------------------------

namespace {

ColumnRole role_from_string(const std::string& token, const std::string& column) {
    if (token == "feature") return ColumnRole::feature;
    if (token == "sensitive") return ColumnRole::sensitive;
    if (token == "label") return ColumnRole::label;
    if (token == "unbiased_label") return ColumnRole::unbiased_label;
    if (token == "ignore") return ColumnRole::ignore;
    throw SchemaError("unknown role '" + token + "' for column '" + column +
                      "'; options are ['feature', 'sensitive', 'label', 'unbiased_label', 'ignore']");
}

}  // namespace

CsvSchema CsvSchema::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("schema is not valid JSON: ") + e.what());
    }
    CsvSchema schema;
    if (!doc.contains("columns") || !doc["columns"].is_object())
        throw SchemaError("schema must contain a 'columns' object");
    for (const auto& [column, role] : doc["columns"].items())
        schema.roles[column] = role_from_string(role.get<std::string>(), column);
    if (doc.contains("sensitive_types")) {
        for (const auto& [column, kind] : doc["sensitive_types"].items()) {
            const std::string token = kind.get<std::string>();
            if (token == "categorical")
                schema.sensitive_kinds[column] = SensitiveKind::categorical;
            else if (token == "numeric")
                schema.sensitive_kinds[column] = SensitiveKind::numeric;
            else
                throw SchemaError("sensitive type for '" + column +
                                  "' must be 'categorical' or 'numeric'");
        }
    }
    if (doc.contains("feature_types")) {
        for (const auto& [column, kind] : doc["feature_types"].items()) {
            const std::string token = kind.get<std::string>();
            if (token == "numeric")
                schema.feature_kinds[column] = FeatureKind::numeric;
            else if (token == "categorical")
                schema.feature_kinds[column] = FeatureKind::categorical;
            else if (token == "indicator")
                schema.feature_kinds[column] = FeatureKind::indicator;
            else
                throw SchemaError("feature type for '" + column +
                                  "' must be 'numeric', 'categorical', or 'indicator'");
        }
    }
    if (doc.contains("include_sensitive_in_features"))
        schema.include_sensitive_in_features = doc["include_sensitive_in_features"].get<bool>();

    std::size_t label_count = 0;
    std::size_t unbiased_count = 0;
    for (const auto& [column, role] : schema.roles) {
        if (role == ColumnRole::label) ++label_count;
        if (role == ColumnRole::unbiased_label) ++unbiased_count;
    }
    if (label_count != 1) throw SchemaError("schema must name exactly one label column");
    if (unbiased_count > 1) throw SchemaError("schema may name at most one unbiased_label column");
    return schema;
}

CsvSchema CsvSchema::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

// --- CSV ingestion --------------------------------------------------------

TabularDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open CSV file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw EmptyDataError("CSV file '" + path + "' is empty");
    const std::vector<std::string> header = split_line(line);

    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw ParseError("row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw EmptyDataError("CSV file '" + path + "' has no data rows");
    const std::size_t n = rows.size();

    // Map declared columns to header positions; every declared column must exist.
    std::map<std::string, std::size_t> position;
    for (std::size_t j = 0; j < header.size(); ++j) position[header[j]] = j;
    for (const auto& [column, role] : schema.roles) {
        (void)role;
        if (!position.count(column))
            throw SchemaError("schema column '" + column + "' not found in CSV header");
    }

    auto cell_as_double = [&](std::size_t row, std::size_t col) {
        double value;
        if (!parse_double(rows[row][col], value))
            throw ParseError("cannot parse cell '" + rows[row][col] + "' in column '" +
                             header[col] + "' at data row " + std::to_string(row + 1));
        return value;
    };

    TabularDataset dataset;

    // Labels.
    std::string label_column;
    std::string unbiased_column;
    for (const auto& [column, role] : schema.roles) {
        if (role == ColumnRole::label) label_column = column;
        if (role == ColumnRole::unbiased_label) unbiased_column = column;
    }
    auto read_labels = [&](const std::string& column) {
        std::vector<int> out(n);
        const std::size_t col = position.at(column);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = cell_as_double(i, col);
            if (v != 0.0 && v != 1.0)
                throw ParseError("label cell in column '" + column + "' at data row " +
                                 std::to_string(i + 1) + " is not 0 or 1");
            out[i] = static_cast<int>(v);
        }
        return out;
    };
    dataset.labels = read_labels(label_column);
    if (!unbiased_column.empty()) dataset.unbiased_labels = read_labels(unbiased_column);

    // Sensitive attributes, in header order for determinism.
    for (std::size_t col = 0; col < header.size(); ++col) {
        const auto it = schema.roles.find(header[col]);
        if (it == schema.roles.end() || it->second != ColumnRole::sensitive) continue;
        const std::string& name = header[col];
        SensitiveKind kind = SensitiveKind::categorical;
        if (auto k = schema.sensitive_kinds.find(name); k != schema.sensitive_kinds.end())
            kind = k->second;

        std::vector<int> codes(n);
        std::vector<std::string> domain;
        if (kind == SensitiveKind::numeric) {
            std::vector<double> values(n);
            for (std::size_t i = 0; i < n; ++i) values[i] = cell_as_double(i, col);
            codes = bin_numeric_attribute(values);
            domain = {"low", "high"};
        } else {
            std::vector<std::string> categories;
            for (std::size_t i = 0; i < n; ++i) {
                if (rows[i][col].empty())
                    throw ParseError("empty sensitive cell in column '" + name +
                                     "' at data row " + std::to_string(i + 1));
                if (std::find(categories.begin(), categories.end(), rows[i][col]) ==
                    categories.end())
                    categories.push_back(rows[i][col]);
            }
            sort_categories(categories);
            for (std::size_t i = 0; i < n; ++i) {
                const auto at = std::find(categories.begin(), categories.end(), rows[i][col]);
                codes[i] = static_cast<int>(at - categories.begin());
            }
            domain = categories;
        }
        dataset.attribute_names.push_back(name);
        dataset.attribute_domains.push_back(std::move(domain));
        const std::size_t attr = dataset.attribute_names.size() - 1;
        if (attr == 0) dataset.sensitive.resize(n);
        // codes are stored row-major, so widen the stride as attributes appear
        std::vector<int> widened(n * (attr + 1));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < attr; ++k)
                widened[i * (attr + 1) + k] = dataset.sensitive[i * attr + k];
            widened[i * (attr + 1) + attr] = codes[i];
        }
        dataset.sensitive = std::move(widened);
        dataset.attribute_count = attr + 1;
    }

    // Feature columns, in header order.
    std::vector<std::vector<double>> feature_columns;
    std::vector<std::string> feature_names;
    std::vector<bool> standardize;
    for (std::size_t col = 0; col < header.size(); ++col) {
        const auto it = schema.roles.find(header[col]);
        if (it == schema.roles.end() || it->second != ColumnRole::feature) continue;
        const std::string& name = header[col];
        FeatureKind kind = FeatureKind::numeric;
        if (auto k = schema.feature_kinds.find(name); k != schema.feature_kinds.end())
            kind = k->second;

        if (kind == FeatureKind::categorical) {
            std::vector<std::string> categories;
            for (std::size_t i = 0; i < n; ++i) {
                if (rows[i][col].empty())
                    throw ParseError("empty feature cell in column '" + name + "' at data row " +
                                     std::to_string(i + 1));
                if (std::find(categories.begin(), categories.end(), rows[i][col]) ==
                    categories.end())
                    categories.push_back(rows[i][col]);
            }
            sort_categories(categories);
            for (const auto& category : categories) {
                std::vector<double> column(n, 0.0);
                for (std::size_t i = 0; i < n; ++i)
                    if (rows[i][col] == category) column[i] = 1.0;
                feature_columns.push_back(std::move(column));
                feature_names.push_back(name + "=" + category);
                standardize.push_back(false);
            }
        } else {
            std::vector<double> column(n);
            for (std::size_t i = 0; i < n; ++i) column[i] = cell_as_double(i, col);
            feature_columns.push_back(std::move(column));
            feature_names.push_back(name);
            standardize.push_back(kind == FeatureKind::numeric);
        }
    }

    // Sensitive attributes appended to X as one-hot indicators when configured.
    if (schema.include_sensitive_in_features) {
        for (std::size_t attr = 0; attr < dataset.attribute_count; ++attr) {
            for (std::size_t cat = 0; cat < dataset.attribute_domains[attr].size(); ++cat) {
                std::vector<double> column(n, 0.0);
                for (std::size_t i = 0; i < n; ++i)
                    if (dataset.sensitive_code(i, attr) == static_cast<int>(cat)) column[i] = 1.0;
                feature_columns.push_back(std::move(column));
                feature_names.push_back(dataset.attribute_names[attr] + "=" +
                                        dataset.attribute_domains[attr][cat]);
                standardize.push_back(false);
            }
        }
    }

    dataset.features = Matrix(n, feature_columns.size());
    for (std::size_t j = 0; j < feature_columns.size(); ++j)
        for (std::size_t i = 0; i < n; ++i) dataset.features(i, j) = feature_columns[j][i];
    dataset.feature_names = std::move(feature_names);
    dataset.standardized_columns = std::move(standardize);

    for (std::size_t j = 0; j < dataset.feature_dim(); ++j) {
        if (!dataset.standardized_columns[j]) continue;
        const auto [mean, stddev] = column_moments(dataset.features, j);
        standardize_column(dataset.features, j, mean, stddev);
    }

    dataset.weights.assign(n, 1.0);
    dataset.validate();
    return dataset;
}

void write_csv(const TabularDataset& dataset, const std::string& csv_path,
               const std::string& schema_path) {
    std::ofstream out(csv_path);
    if (!out) throw ParseError("cannot open '" + csv_path + "' for writing");

    nlohmann::json columns = nlohmann::json::object();
    nlohmann::json feature_types = nlohmann::json::object();
    nlohmann::json sensitive_types = nlohmann::json::object();

    std::vector<std::string> header;
    for (std::size_t j = 0; j < dataset.feature_dim(); ++j) {
        header.push_back(dataset.feature_names[j]);
        columns[dataset.feature_names[j]] = "feature";
        feature_types[dataset.feature_names[j]] =
            dataset.standardized_columns[j] ? "numeric" : "indicator";
    }
    for (std::size_t k = 0; k < dataset.attribute_count; ++k) {
        header.push_back(dataset.attribute_names[k]);
        columns[dataset.attribute_names[k]] = "sensitive";
        sensitive_types[dataset.attribute_names[k]] = "categorical";
    }
    header.push_back("label");
    columns["label"] = "label";
    if (dataset.unbiased_labels) {
        header.push_back("unbiased_label");
        columns["unbiased_label"] = "unbiased_label";
    }

    for (std::size_t j = 0; j < header.size(); ++j)
        out << header[j] << (j + 1 < header.size() ? "," : "\n");

    char buffer[64];
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        for (std::size_t j = 0; j < dataset.feature_dim(); ++j) {
            std::snprintf(buffer, sizeof buffer, "%.17g", dataset.features(i, j));
            out << buffer << ",";
        }
        for (std::size_t k = 0; k < dataset.attribute_count; ++k)
            out << dataset.sensitive_code(i, k) << ",";
        out << dataset.labels[i];
        if (dataset.unbiased_labels) out << "," << (*dataset.unbiased_labels)[i];
        out << "\n";
    }

    nlohmann::json schema = {{"columns", columns},
                             {"feature_types", feature_types},
                             {"sensitive_types", sensitive_types},
                             {"include_sensitive_in_features", false}};
    std::ofstream schema_out(schema_path);
    if (!schema_out) throw ParseError("cannot open '" + schema_path + "' for writing");
    schema_out << schema.dump(2) << "\n";
}

// --- sensitive encodings ----------------------------------------------------

SensitiveEncoding encode_sensitive(const TabularDataset& dataset, SensitiveFormat format,
                                   std::size_t binary_attr) {
    if (dataset.attribute_count == 0)
        throw FormatError("dataset declares no sensitive attributes");
    const std::size_t n = dataset.n();

    // Observed categories per attribute; unobserved domain entries are dropped
    // so no indicator column is identically zero.
    std::vector<std::vector<int>> observed(dataset.attribute_count);
    for (std::size_t k = 0; k < dataset.attribute_count; ++k) {
        std::vector<bool> seen(dataset.attribute_domains[k].size(), false);
        for (std::size_t i = 0; i < n; ++i) seen[dataset.sensitive_code(i, k)] = true;
        for (std::size_t c = 0; c < seen.size(); ++c)
            if (seen[c]) observed[k].push_back(static_cast<int>(c));
    }

    SensitiveEncoding enc;
    enc.format = format;

    if (format == SensitiveFormat::binary) {
        if (binary_attr >= dataset.attribute_count)
            throw FormatError("binary attribute index out of range");
        if (observed[binary_attr].size() != 2)
            throw FormatError("binary format requires attribute '" +
                              dataset.attribute_names[binary_attr] +
                              "' to have exactly 2 observed categories, found " +
                              std::to_string(observed[binary_attr].size()));
        enc.indicators = Matrix(n, 2);
        for (std::size_t g = 0; g < 2; ++g) {
            const int code = observed[binary_attr][g];
            enc.group_names.push_back(dataset.attribute_names[binary_attr] + "=" +
                                      dataset.attribute_domains[binary_attr][code]);
            for (std::size_t i = 0; i < n; ++i)
                if (dataset.sensitive_code(i, binary_attr) == code) enc.indicators(i, g) = 1.0;
        }
        enc.axes = {{0, 2}};
        return enc;
    }

    if (format == SensitiveFormat::intersectional) {
        // Enumerate observed combinations only; empty intersections never get a column.
        std::map<std::vector<int>, std::size_t> cells;
        std::vector<std::vector<int>> cell_codes;
        std::vector<std::size_t> cell_of_row(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<int> key(dataset.attribute_count);
            for (std::size_t k = 0; k < dataset.attribute_count; ++k)
                key[k] = dataset.sensitive_code(i, k);
            auto it = cells.find(key);
            if (it == cells.end()) {
                it = cells.emplace(key, cells.size()).first;
            }
            cell_of_row[i] = it->second;
        }
        // Reindex by sorted key order for a deterministic, readable layout.
        std::vector<std::pair<std::vector<int>, std::size_t>> ordered(cells.begin(), cells.end());
        std::vector<std::size_t> remap(ordered.size());
        for (std::size_t g = 0; g < ordered.size(); ++g) remap[ordered[g].second] = g;

        enc.indicators = Matrix(n, ordered.size());
        for (std::size_t i = 0; i < n; ++i) enc.indicators(i, remap[cell_of_row[i]]) = 1.0;
        for (const auto& [key, old_index] : ordered) {
            (void)old_index;
            std::string name;
            for (std::size_t k = 0; k < key.size(); ++k) {
                if (k) name += "&";
                name += dataset.attribute_names[k] + "=" + dataset.attribute_domains[k][key[k]];
            }
            enc.group_names.push_back(name);
        }
        enc.axes = {{0, enc.group_count()}};
        return enc;
    }

    // parallel
    std::size_t total = 0;
    for (const auto& cats : observed) total += cats.size();
    enc.indicators = Matrix(n, total);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < dataset.attribute_count; ++k) {
        enc.axes.push_back({offset, offset + observed[k].size()});
        for (std::size_t c = 0; c < observed[k].size(); ++c) {
            const int code = observed[k][c];
            enc.group_names.push_back(dataset.attribute_names[k] + "=" +
                                      dataset.attribute_domains[k][code]);
            for (std::size_t i = 0; i < n; ++i)
                if (dataset.sensitive_code(i, k) == code) enc.indicators(i, offset + c) = 1.0;
        }
        offset += observed[k].size();
    }
    return enc;
}

// --- splitting ----------------------------------------------------------

SplitResult split(const TabularDataset& dataset, const std::array<double, 3>& fractions,
                  std::uint64_t seed) {
    double total = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw SplitError("split fractions must be nonnegative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw SplitError("split fractions must sum to 1");

    const std::size_t n = dataset.n();
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < 3; ++p) {
        const double exact = fractions[p] * static_cast<double>(n);
        counts[p] = static_cast<std::size_t>(std::floor(exact));
        remainders[p] = exact - std::floor(exact);
        assigned += counts[p];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t p = 1; p < 3; ++p)
            if (remainders[p] > remainders[best]) best = p;
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }
    for (std::size_t p = 0; p < 3; ++p)
        if (counts[p] == 0)
            throw SplitError("split part " + std::to_string(p) + " is empty after rounding");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, fnv1a64("split")));
    rng.shuffle(order);

    std::vector<std::size_t> train_rows(order.begin(), order.begin() + counts[0]);
    std::vector<std::size_t> val_rows(order.begin() + counts[0],
                                      order.begin() + counts[0] + counts[1]);
    std::vector<std::size_t> test_rows(order.begin() + counts[0] + counts[1], order.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(test_rows.begin(), test_rows.end());

    SplitResult result{take_rows(dataset, train_rows), take_rows(dataset, val_rows),
                       take_rows(dataset, test_rows)};

    // Standardization statistics come from the train part only.
    for (std::size_t j = 0; j < dataset.feature_dim(); ++j) {
        if (!dataset.standardized_columns[j]) continue;
        const auto [mean, stddev] = column_moments(result.train.features, j);
        standardize_column(result.train.features, j, mean, stddev);
        standardize_column(result.val.features, j, mean, stddev);
        standardize_column(result.test.features, j, mean, stddev);
    }
    return result;
}

// --- synthetic dual-label generator -------------------------------------

void DualLabelConfig::validate() const {
    if (n_samples < 10) throw ConfigError("dual-label generator requires n_samples >= 10");
    if (d_features < 1) throw ConfigError("dual-label generator requires d_features >= 1");
    const double total = group_fractions[0] + group_fractions[1];
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("group fractions must sum to 1");
    if (group_fractions[0] <= 0.0 || group_fractions[1] <= 0.0)
        throw ConfigError("group fractions must be positive");
    for (double rate : {flip_rate_disadvantaged, flip_rate_advantaged})
        if (rate < 0.0 || rate > 1.0) throw ConfigError("flip rates must lie in [0, 1]");
    if (!(signal_strength >= 0.0) || !std::isfinite(signal_strength))
        throw ConfigError("signal strength must be finite and nonnegative");
}

TabularDataset generate_dual_label(const DualLabelConfig& config) {
    config.validate();
    const std::size_t n = config.n_samples;
    const std::size_t d = config.d_features;
    Rng rng(mix_seed(config.seed, fnv1a64("dual_label")));

    // Ground-truth logistic weights, fixed before any sample is drawn.
    std::vector<double> truth(d);
    const double scale = config.signal_strength / std::sqrt(static_cast<double>(d));
    for (std::size_t j = 0; j < d; ++j) truth[j] = rng.normal() * scale;

    const std::size_t extra = config.include_sensitive_in_features ? 2 : 0;
    TabularDataset dataset;
    dataset.features = Matrix(n, d + extra);
    dataset.labels.resize(n);
    dataset.unbiased_labels.emplace(n);
    dataset.sensitive.resize(n);
    dataset.attribute_count = 1;
    dataset.weights.assign(n, 1.0);
    dataset.attribute_names = {"group"};
    dataset.attribute_domains = {{"adv", "dis"}};

    for (std::size_t j = 0; j < d; ++j) {
        dataset.feature_names.push_back("f" + std::to_string(j));
        dataset.standardized_columns.push_back(true);
    }
    if (config.include_sensitive_in_features) {
        dataset.feature_names.push_back("group=adv");
        dataset.feature_names.push_back("group=dis");
        dataset.standardized_columns.push_back(false);
        dataset.standardized_columns.push_back(false);
    }

    for (std::size_t i = 0; i < n; ++i) {
        double logit = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double x = rng.normal();
            dataset.features(i, j) = x;
            logit += truth[j] * x;
        }
        const int group = rng.uniform() < config.group_fractions[1] ? 1 : 0;
        dataset.sensitive[i] = group;
        if (config.include_sensitive_in_features) {
            dataset.features(i, d) = group == 0 ? 1.0 : 0.0;
            dataset.features(i, d + 1) = group == 1 ? 1.0 : 0.0;
        }
        const int truth_label = rng.uniform() < sigmoid(logit) ? 1 : 0;
        (*dataset.unbiased_labels)[i] = truth_label;

        int recorded = truth_label;
        const double flip_draw = rng.uniform();
        if (group == 1 && truth_label == 1 && flip_draw < config.flip_rate_disadvantaged)
            recorded = 0;
        else if (group == 0 && truth_label == 0 && flip_draw < config.flip_rate_advantaged)
            recorded = 1;
        dataset.labels[i] = recorded;
    }

    // empirical standardization, matching the CSV loader's postcondition
    for (std::size_t j = 0; j < d; ++j) {
        const auto [mean, stddev] = column_moments(dataset.features, j);
        standardize_column(dataset.features, j, mean, stddev);
    }

    dataset.validate();
    return dataset;
}

}  // namespace fairbench
