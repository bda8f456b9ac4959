#include "fairbench/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairbench/errors.hpp"
#include "fairbench/rng.hpp"

namespace fairbench {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Stable BCE from the logit: max(z,0) - z*y + log(1 + exp(-|z|)).
double bce_from_logit(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

std::vector<std::size_t> layer_widths(const Scorer& scorer) {
    std::vector<std::size_t> widths;
    widths.push_back(scorer.input_dim);
    for (std::size_t h : scorer.layer_sizes) widths.push_back(h);
    widths.push_back(1);
    return widths;
}

/// Forward pass over selected rows, keeping post-activation values per layer
/// for backprop. activations[0] is the input slice.
struct ForwardTrace {
    std::vector<Matrix> activations;
    std::vector<double> logits;
    std::vector<double> scores;
};

ForwardTrace forward_trace(const Scorer& scorer, const Matrix& features,
                           std::span<const std::size_t> rows) {
    if (features.cols != scorer.input_dim)
        throw ShapeError("feature dimension " + std::to_string(features.cols) +
                         " does not match scorer input dimension " +
                         std::to_string(scorer.input_dim));
    const std::size_t batch = rows.size();
    const auto widths = layer_widths(scorer);

    ForwardTrace trace;
    trace.activations.reserve(widths.size());
    Matrix current(batch, scorer.input_dim);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < scorer.input_dim; ++j)
            current(b, j) = features(rows[b], j);
    trace.activations.push_back(current);

    for (std::size_t layer = 0; layer < scorer.weights.size(); ++layer) {
        const Matrix& w = scorer.weights[layer];
        const auto& bias = scorer.biases[layer];
        const bool last = layer + 1 == scorer.weights.size();
        Matrix next(batch, w.cols);
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t o = 0; o < w.cols; ++o) {
                double z = bias[o];
                for (std::size_t i = 0; i < w.rows; ++i) z += trace.activations.back()(b, i) * w(i, o);
                next(b, o) = last ? z : std::max(z, 0.0);
            }
        }
        trace.activations.push_back(std::move(next));
    }

    trace.logits.resize(batch);
    trace.scores.resize(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        trace.logits[b] = trace.activations.back()(b, 0);
        trace.scores[b] = sigmoid(trace.logits[b]);
    }
    return trace;
}

/// Backpropagates d loss / d logit into flat parameter gradients.
std::vector<double> backprop(const Scorer& scorer, const ForwardTrace& trace,
                             std::span<const double> logit_grad) {
    const std::size_t batch = logit_grad.size();
    std::vector<double> flat(scorer.parameter_count(), 0.0);

    Matrix delta(batch, 1);
    for (std::size_t b = 0; b < batch; ++b) delta(b, 0) = logit_grad[b];

    std::size_t offset = flat.size();
    for (std::size_t layer = scorer.weights.size(); layer-- > 0;) {
        const Matrix& w = scorer.weights[layer];
        const Matrix& input = trace.activations[layer];
        offset -= w.rows * w.cols + w.cols;
        double* weight_grad = flat.data() + offset;
        double* bias_grad = weight_grad + w.rows * w.cols;

        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t o = 0; o < w.cols; ++o) {
                const double d = delta(b, o);
                if (d == 0.0) continue;
                bias_grad[o] += d;
                for (std::size_t i = 0; i < w.rows; ++i) weight_grad[i * w.cols + o] += d * input(b, i);
            }
        }

        if (layer == 0) break;
        Matrix previous(batch, w.rows);
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t i = 0; i < w.rows; ++i) {
                double d = 0.0;
                for (std::size_t o = 0; o < w.cols; ++o) d += delta(b, o) * w(i, o);
                // rectifier derivative: zero where the unit was inactive
                previous(b, i) = trace.activations[layer](b, i) > 0.0 ? d : 0.0;
            }
        }
        delta = std::move(previous);
    }
    return flat;
}

}  // namespace

std::size_t Scorer::parameter_count() const {
    std::size_t count = 0;
    for (std::size_t layer = 0; layer < weights.size(); ++layer)
        count += weights[layer].rows * weights[layer].cols + biases[layer].size();
    return count;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (epochs == 0) throw ConfigError("epoch count must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (penalty_weight < 0.0) throw ConfigError("penalty weight must be nonnegative");
}

Scorer init_scorer(std::size_t input_dim, std::vector<std::size_t> layer_sizes,
                   std::uint64_t seed) {
    if (input_dim == 0) throw ShapeError("scorer input dimension must be at least 1");
    Scorer scorer;
    scorer.input_dim = input_dim;
    scorer.layer_sizes = std::move(layer_sizes);

    Rng rng(mix_seed(seed, fnv1a64("init_scorer")));
    const auto widths = layer_widths(scorer);
    for (std::size_t layer = 0; layer + 1 < widths.size(); ++layer) {
        const std::size_t fan_in = widths[layer];
        const std::size_t fan_out = widths[layer + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (double& value : w.data) value = rng.uniform(-limit, limit);
        scorer.weights.push_back(std::move(w));
        scorer.biases.emplace_back(fan_out, 0.0);
    }
    return scorer;
}

std::vector<double> forward(const Scorer& scorer, const Matrix& features) {
    std::vector<std::size_t> rows(features.rows);
    std::iota(rows.begin(), rows.end(), 0);
    return forward_trace(scorer, features, rows).scores;
}

std::vector<double> flatten_parameters(const Scorer& scorer) {
    std::vector<double> flat;
    flat.reserve(scorer.parameter_count());
    for (std::size_t layer = 0; layer < scorer.weights.size(); ++layer) {
        flat.insert(flat.end(), scorer.weights[layer].data.begin(),
                    scorer.weights[layer].data.end());
        flat.insert(flat.end(), scorer.biases[layer].begin(), scorer.biases[layer].end());
    }
    return flat;
}

void set_parameters(Scorer& scorer, std::span<const double> flat) {
    if (flat.size() != scorer.parameter_count())
        throw ShapeError("parameter vector size does not match scorer layout");
    std::size_t offset = 0;
    for (std::size_t layer = 0; layer < scorer.weights.size(); ++layer) {
        auto& w = scorer.weights[layer];
        std::copy(flat.begin() + offset, flat.begin() + offset + w.data.size(), w.data.begin());
        offset += w.data.size();
        auto& bias = scorer.biases[layer];
        std::copy(flat.begin() + offset, flat.begin() + offset + bias.size(), bias.begin());
        offset += bias.size();
    }
}

LossGradient weighted_bce_gradient(const Scorer& scorer, const Matrix& features,
                                   std::span<const double> labels,
                                   std::span<const double> weights) {
    std::vector<std::size_t> rows(features.rows);
    std::iota(rows.begin(), rows.end(), 0);
    const ForwardTrace trace = forward_trace(scorer, features, rows);
    const double batch = static_cast<double>(rows.size());

    LossGradient out;
    std::vector<double> logit_grad(rows.size());
    for (std::size_t b = 0; b < rows.size(); ++b) {
        out.loss += weights[b] * bce_from_logit(trace.logits[b], labels[b]);
        logit_grad[b] = weights[b] * (trace.scores[b] - labels[b]) / batch;
    }
    out.loss /= batch;
    out.grad = backprop(scorer, trace, logit_grad);
    return out;
}

nlohmann::json scorer_to_json(const Scorer& scorer) {
    return {{"input_dim", scorer.input_dim},
            {"layer_sizes", scorer.layer_sizes},
            {"parameters", flatten_parameters(scorer)}};
}

Scorer scorer_from_json(const nlohmann::json& doc) {
    Scorer scorer = init_scorer(doc.at("input_dim").get<std::size_t>(),
                                doc.at("layer_sizes").get<std::vector<std::size_t>>(), 0);
    set_parameters(scorer, doc.at("parameters").get<std::vector<double>>());
    return scorer;
}

namespace {

struct AdamState {
    std::vector<double> first;
    std::vector<double> second;
    std::size_t step = 0;
};

void apply_update(Scorer& scorer, std::vector<double>& params, const std::vector<double>& grad,
                  const TrainConfig& config, AdamState& adam) {
    if (config.optimizer == Optimizer::sgd) {
        for (std::size_t k = 0; k < params.size(); ++k)
            params[k] -= config.learning_rate * grad[k];
    } else {
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double epsilon = 1e-8;
        ++adam.step;
        const double correction1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
        const double correction2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
        for (std::size_t k = 0; k < params.size(); ++k) {
            adam.first[k] = beta1 * adam.first[k] + (1.0 - beta1) * grad[k];
            adam.second[k] = beta2 * adam.second[k] + (1.0 - beta2) * grad[k] * grad[k];
            const double m_hat = adam.first[k] / correction1;
            const double v_hat = adam.second[k] / correction2;
            params[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
        }
    }
    set_parameters(scorer, params);
}

}  // namespace

Scorer train(Scorer scorer, const TabularDataset& data, const TrainConfig& config,
             const PenaltyFn& penalty) {
    config.validate();
    const std::size_t n = data.n();
    if (n == 0) throw EmptyDataError("cannot train on an empty dataset");

    std::vector<double> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<double>(data.labels[i]);

    std::vector<double> params = flatten_parameters(scorer);
    AdamState adam;
    adam.first.assign(params.size(), 0.0);
    adam.second.assign(params.size(), 0.0);

    const bool use_penalty = penalty && config.penalty_weight > 0.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(config.seed, fnv1a64("epoch") ^ epoch));
        std::iota(order.begin(), order.end(), 0);
        shuffle_rng.shuffle(order);

        for (std::size_t start = 0, batch_index = 0; start < n;
             start += config.batch_size, ++batch_index) {
            const std::size_t end = std::min(start + config.batch_size, n);
            std::span<const std::size_t> rows(order.data() + start, end - start);
            const double batch = static_cast<double>(rows.size());

            const ForwardTrace trace = forward_trace(scorer, data.features, rows);
            double loss = 0.0;
            std::vector<double> logit_grad(rows.size());
            for (std::size_t b = 0; b < rows.size(); ++b) {
                const std::size_t row = rows[b];
                loss += data.weights[row] * bce_from_logit(trace.logits[b], labels[row]);
                logit_grad[b] = data.weights[row] * (trace.scores[b] - labels[row]) / batch;
            }
            loss /= batch;

            if (use_penalty) {
                const PenaltyResult p = penalty(trace.scores, rows);
                loss += config.penalty_weight * p.value;
                for (std::size_t b = 0; b < rows.size(); ++b) {
                    const double score = trace.scores[b];
                    logit_grad[b] += config.penalty_weight * p.grad[b] * score * (1.0 - score);
                }
            }

            if (!std::isfinite(loss))
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(batch_index));

            const std::vector<double> grad = backprop(scorer, trace, logit_grad);
            apply_update(scorer, params, grad, config, adam);
        }
    }
    return scorer;
}

}  // namespace fairbench
