#ifndef FAIRBENCH_DATASET_HPP
#define FAIRBENCH_DATASET_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairbench/matrix.hpp"

namespace fairbench {

/// Tabular binary-classification dataset. Immutable by convention once built:
/// every transformation returns a fresh value.
struct TabularDataset {
    Matrix features;                    // n x d, standardized where marked
    std::vector<int> labels;            // training labels, {0,1}
    std::optional<std::vector<int>> unbiased_labels;
    std::vector<int> sensitive;         // n x m categorical codes, row-major
    std::size_t attribute_count = 0;    // m
    std::vector<double> weights;        // strictly positive

    std::vector<std::string> feature_names;
    std::vector<std::string> attribute_names;
    std::vector<std::vector<std::string>> attribute_domains;  // categories per attribute
    std::vector<bool> standardized_columns;  // feature columns carrying z-scores

    std::size_t n() const { return features.rows; }
    std::size_t feature_dim() const { return features.cols; }

    int sensitive_code(std::size_t row, std::size_t attr) const {
        return sensitive[row * attribute_count + attr];
    }

    /// Throws on any invariant breach (row-count mismatch, label outside {0,1},
    /// code outside its domain, nonpositive weight).
    void validate() const;
};

enum class SensitiveFormat { binary, intersectional, parallel };

std::string to_string(SensitiveFormat format);
SensitiveFormat format_from_string(const std::string& token);

/// Group-indicator view of the sensitive attributes in one of three formats:
///  - binary:          two groups from one designated attribute;
///  - intersectional:  one-hot over observed combinations of all attributes;
///  - parallel:        concatenated per-attribute one-hots, one axis block each.
struct SensitiveEncoding {
    SensitiveFormat format = SensitiveFormat::binary;
    Matrix indicators;  // n x G in {0,1}
    std::vector<std::string> group_names;
    std::vector<std::array<std::size_t, 2>> axes;  // [begin, end) column ranges

    std::size_t group_count() const { return indicators.cols; }

    /// Index of the sample's group for partition formats (binary or
    /// intersectional, where each row has exactly one indicator set).
    std::size_t partition_group(std::size_t row) const;
};

/// Column roles a schema can assign.
enum class ColumnRole { feature, sensitive, label, unbiased_label, ignore };

/// How a feature column is ingested: `numeric` cells are parsed and
/// standardized, `categorical` cells are one-hot expanded, `indicator`
/// cells are parsed but left unscaled (for 0/1 columns that must survive a
/// write/reload round trip bit-compatibly).
enum class FeatureKind { numeric, categorical, indicator };

enum class SensitiveKind { categorical, numeric };

struct CsvSchema {
    std::map<std::string, ColumnRole> roles;
    std::map<std::string, SensitiveKind> sensitive_kinds;  // default categorical
    std::map<std::string, FeatureKind> feature_kinds;      // default numeric
    bool include_sensitive_in_features = true;

    static CsvSchema from_json_file(const std::string& path);
    static CsvSchema from_json_text(const std::string& text);
};

/// Configuration for the synthetic dual-label generator. Ground-truth labels
/// follow a logistic model on the features; recorded labels corrupt them with
/// group-asymmetric flips (positives suppressed in the disadvantaged group,
/// negatives promoted in the advantaged group).
struct DualLabelConfig {
    std::size_t n_samples = 1000;
    std::size_t d_features = 4;
    std::array<double, 2> group_fractions = {0.5, 0.5};  // {advantaged, disadvantaged}
    double flip_rate_disadvantaged = 0.0;
    double flip_rate_advantaged = 0.0;
    double signal_strength = 2.0;
    std::uint64_t seed = 0;
    bool include_sensitive_in_features = true;

    void validate() const;
};

struct SplitResult {
    TabularDataset train;
    TabularDataset val;
    TabularDataset test;
};

// --- operations -------------------------------------------------------------

/// Binary-bins a numeric attribute at its arithmetic mean: code 1 iff the
/// value is strictly above the mean.
std::vector<int> bin_numeric_attribute(const std::vector<double>& values);

TabularDataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes the dataset as CSV plus a matching schema JSON so that reloading
/// reproduces features within float tolerance and labels/codes exactly.
void write_csv(const TabularDataset& dataset, const std::string& csv_path,
               const std::string& schema_path);

SensitiveEncoding encode_sensitive(const TabularDataset& dataset, SensitiveFormat format,
                                   std::size_t binary_attr = 0);

/// Deterministic shuffled partition. Standardization statistics are
/// recomputed on the train part and applied to val/test.
SplitResult split(const TabularDataset& dataset, const std::array<double, 3>& fractions,
                  std::uint64_t seed);

TabularDataset generate_dual_label(const DualLabelConfig& config);

}  // namespace fairbench

#endif  // FAIRBENCH_DATASET_HPP
