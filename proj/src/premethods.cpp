#include "fairbench/premethods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairbench/errors.hpp"
#include "fairbench/rng.hpp"
#include "fairbench/scorer.hpp"

namespace fairbench {

namespace {

void require_partition(const SensitiveEncoding& encoding) {
    if (encoding.format == SensitiveFormat::parallel)
        throw FormatError("preprocessing methods do not support the parallel encoding");
}

std::vector<std::size_t> group_assignment(const TabularDataset& data,
                                          const SensitiveEncoding& encoding) {
    if (encoding.indicators.rows != data.n())
        throw ShapeError("encoding row count differs from dataset row count");
    std::vector<std::size_t> groups(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) groups[i] = encoding.partition_group(i);
    return groups;
}

/// Empirical quantile function over a sorted sample with positions
/// (k)/(m-1), linearly interpolated. A single-element sample is constant.
double interpolate_quantile(const std::vector<double>& sorted, double rank) {
    const std::size_t m = sorted.size();
    if (m == 1) return sorted[0];
    const double position = rank * static_cast<double>(m - 1);
    const std::size_t lower = std::min(static_cast<std::size_t>(std::floor(position)), m - 2);
    const double fraction = position - static_cast<double>(lower);
    return sorted[lower] * (1.0 - fraction) + sorted[lower + 1] * fraction;
}

}  // namespace

TabularDataset data_repairer(const TabularDataset& train, const SensitiveEncoding& encoding,
                             double strength) {
    require_partition(encoding);
    const double t = std::min(strength, 1.0);
    const std::vector<std::size_t> groups = group_assignment(train, encoding);
    TabularDataset repaired = train;
    if (t <= 0.0) return repaired;

    const std::size_t n = train.n();
    std::vector<std::vector<std::size_t>> members(encoding.group_count());
    for (std::size_t i = 0; i < n; ++i) members[groups[i]].push_back(i);

    for (std::size_t j = 0; j < train.feature_dim(); ++j) {
        std::vector<double> pooled(n);
        for (std::size_t i = 0; i < n; ++i) pooled[i] = train.features(i, j);
        std::sort(pooled.begin(), pooled.end());

        for (const auto& rows : members) {
            if (rows.empty()) continue;
            const std::size_t m = rows.size();
            std::vector<std::size_t> order(rows);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return train.features(a, j) < train.features(b, j);
            });
            // Midranks: tied values share the mean of their sorted positions,
            // so the repaired value is a function of the value alone.
            std::size_t start = 0;
            while (start < m) {
                std::size_t end = start;
                while (end < m &&
                       train.features(order[end], j) == train.features(order[start], j))
                    ++end;
                double rank = 0.5;
                if (m > 1) {
                    const double mean_position =
                        (static_cast<double>(start) + static_cast<double>(end - 1)) / 2.0;
                    rank = mean_position / static_cast<double>(m - 1);
                }
                const double target = interpolate_quantile(pooled, rank);
                for (std::size_t k = start; k < end; ++k) {
                    const std::size_t row = order[k];
                    repaired.features(row, j) =
                        (1.0 - t) * train.features(row, j) + t * target;
                }
                start = end;
            }
        }
    }
    return repaired;
}

TabularDataset label_flipping(const TabularDataset& train, const SensitiveEncoding& encoding,
                              double strength, std::uint64_t seed) {
    require_partition(encoding);
    const double t = std::min(strength, 1.0);
    TabularDataset flipped = train;
    if (t <= 0.0) return flipped;

    const std::vector<std::size_t> groups = group_assignment(train, encoding);
    const std::size_t n = train.n();
    std::vector<std::vector<std::size_t>> members(encoding.group_count());
    std::size_t global_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
        members[groups[i]].push_back(i);
        global_positive += train.labels[i];
    }
    const double global_rate = static_cast<double>(global_positive) / static_cast<double>(n);

    // Margin scores from a deterministic naive logistic scorer.
    TrainConfig naive_config;
    naive_config.learning_rate = 0.05;
    naive_config.epochs = 30;
    naive_config.batch_size = 128;
    naive_config.optimizer = Optimizer::adam;
    naive_config.seed = mix_seed(seed, fnv1a64("label_flipping"));
    Scorer naive = init_scorer(train.feature_dim(), {}, naive_config.seed);
    naive = fairbench::train(naive, train, naive_config);
    const std::vector<double> scores = forward(naive, train.features);

    for (const auto& rows : members) {
        if (rows.empty()) continue;
        std::size_t positives = 0;
        for (std::size_t row : rows) positives += train.labels[row];
        const double rate = static_cast<double>(positives) / static_cast<double>(rows.size());
        const double needed = std::abs(rate - global_rate) * static_cast<double>(rows.size());
        std::size_t flips = static_cast<std::size_t>(std::llround(t * std::llround(needed)));
        if (flips == 0) continue;

        const int surplus_label = rate > global_rate ? 1 : 0;
        std::vector<std::size_t> candidates;
        for (std::size_t row : rows)
            if (train.labels[row] == surplus_label) candidates.push_back(row);
        flips = std::min(flips, candidates.size());

        std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
            const double ma = std::abs(scores[a] - 0.5);
            const double mb = std::abs(scores[b] - 0.5);
            if (ma != mb) return ma < mb;
            return a < b;
        });
        for (std::size_t k = 0; k < flips; ++k)
            flipped.labels[candidates[k]] = 1 - surplus_label;
    }
    return flipped;
}

TabularDataset prevalence_sampling(const TabularDataset& train, const SensitiveEncoding& encoding,
                                   double strength, std::uint64_t seed) {
    require_partition(encoding);
    const double t = std::min(strength, 1.0);
    if (t <= 0.0) return train;

    const std::vector<std::size_t> groups = group_assignment(train, encoding);
    const std::size_t n = train.n();
    const std::size_t group_count = encoding.group_count();

    std::vector<std::vector<std::size_t>> positives(group_count);
    std::vector<std::vector<std::size_t>> negatives(group_count);
    std::size_t global_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
        (train.labels[i] == 1 ? positives : negatives)[groups[i]].push_back(i);
        global_positive += train.labels[i];
    }
    const double prevalence = static_cast<double>(global_positive) / static_cast<double>(n);

    Rng rng(mix_seed(seed, fnv1a64("prevalence_sampling")));
    std::vector<std::size_t> selected;
    selected.reserve(n);

    auto resample_cell = [&](const std::vector<std::size_t>& cell, std::size_t target,
                             const std::string& name) {
        if (cell.size() == target) {
            selected.insert(selected.end(), cell.begin(), cell.end());
        } else if (cell.size() > target) {
            std::vector<std::size_t> keep(cell);
            rng.shuffle(keep);
            keep.resize(target);
            selected.insert(selected.end(), keep.begin(), keep.end());
        } else {
            if (cell.empty())
                throw SamplingError("cannot oversample empty cell " + name);
            selected.insert(selected.end(), cell.begin(), cell.end());
            for (std::size_t k = cell.size(); k < target; ++k)
                selected.push_back(cell[rng.uniform_int(cell.size())]);
        }
    };

    for (std::size_t q = 0; q < group_count; ++q) {
        const std::size_t size = positives[q].size() + negatives[q].size();
        if (size == 0) continue;
        const double current = static_cast<double>(positives[q].size());
        const double target_exact =
            current + t * (prevalence * static_cast<double>(size) - current);
        std::size_t positive_target = static_cast<std::size_t>(std::llround(target_exact));
        positive_target = std::min(positive_target, size);
        const std::size_t negative_target = size - positive_target;
        resample_cell(positives[q], positive_target,
                      "(" + encoding.group_names[q] + ", label=1)");
        resample_cell(negatives[q], negative_target,
                      "(" + encoding.group_names[q] + ", label=0)");
    }
    std::sort(selected.begin(), selected.end());

    TabularDataset out;
    out.features = Matrix(selected.size(), train.feature_dim());
    out.labels.resize(selected.size());
    if (train.unbiased_labels) out.unbiased_labels.emplace(selected.size());
    out.sensitive.resize(selected.size() * train.attribute_count);
    out.attribute_count = train.attribute_count;
    out.weights.resize(selected.size());
    out.feature_names = train.feature_names;
    out.attribute_names = train.attribute_names;
    out.attribute_domains = train.attribute_domains;
    out.standardized_columns = train.standardized_columns;
    for (std::size_t r = 0; r < selected.size(); ++r) {
        const std::size_t src = selected[r];
        for (std::size_t j = 0; j < train.feature_dim(); ++j)
            out.features(r, j) = train.features(src, j);
        out.labels[r] = train.labels[src];
        if (train.unbiased_labels) (*out.unbiased_labels)[r] = (*train.unbiased_labels)[src];
        for (std::size_t k = 0; k < train.attribute_count; ++k)
            out.sensitive[r * train.attribute_count + k] = train.sensitive_code(src, k);
        out.weights[r] = train.weights[src];
    }
    return out;
}

}  // namespace fairbench
