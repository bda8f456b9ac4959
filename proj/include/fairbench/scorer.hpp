#ifndef FAIRBENCH_SCORER_HPP
#define FAIRBENCH_SCORER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fairbench/dataset.hpp"
#include "fairbench/matrix.hpp"

namespace fairbench {

/// Fully connected scorer h: X -> (0,1). Hidden layers use rectifier
/// activations; the output unit is logistic. An empty layer list is plain
/// logistic regression.
struct Scorer {
    std::size_t input_dim = 0;
    std::vector<std::size_t> layer_sizes;  // hidden widths
    std::vector<Matrix> weights;           // per layer, fan_in x fan_out
    std::vector<std::vector<double>> biases;

    std::size_t parameter_count() const;
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    Optimizer optimizer = Optimizer::adam;
    double penalty_weight = 0.0;  // multiplier on the fairness penalty
    std::uint64_t seed = 0;

    void validate() const;
};

/// Value and gradient of a differentiable penalty over a batch of scores.
struct PenaltyResult {
    double value = 0.0;
    std::vector<double> grad;  // d penalty / d score, per batch sample
    int skipped_groups = 0;
};

/// Penalty callback: receives the batch scores and the dataset row index of
/// each batch sample (so the callback can look up labels, weights, and group
/// indicators).
using PenaltyFn =
    std::function<PenaltyResult(std::span<const double> scores, std::span<const std::size_t> rows)>;

/// Glorot-uniform weights, zero biases, deterministic in the seed.
Scorer init_scorer(std::size_t input_dim, std::vector<std::size_t> layer_sizes,
                   std::uint64_t seed);

std::vector<double> forward(const Scorer& scorer, const Matrix& features);

/// Minibatch gradient descent on mean weighted binary cross-entropy plus
/// penalty_weight times the penalty. Shuffling is a pure function of
/// (seed, epoch); the final-epoch parameters are returned.
Scorer train(Scorer scorer, const TabularDataset& data, const TrainConfig& config,
             const PenaltyFn& penalty = {});

// Flat parameter access, used by the trainer and by gradient tests.
std::vector<double> flatten_parameters(const Scorer& scorer);
void set_parameters(Scorer& scorer, std::span<const double> flat);

struct LossGradient {
    double loss = 0.0;
    std::vector<double> grad;  // flat, same layout as flatten_parameters
};

/// Mean weighted BCE over the given rows and its analytic parameter gradient.
LossGradient weighted_bce_gradient(const Scorer& scorer, const Matrix& features,
                                   std::span<const double> labels,
                                   std::span<const double> weights);

// Flat parameter document, for fixtures and audits.
nlohmann::json scorer_to_json(const Scorer& scorer);
Scorer scorer_from_json(const nlohmann::json& doc);

}  // namespace fairbench

#endif  // FAIRBENCH_SCORER_HPP
