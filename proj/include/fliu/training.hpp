#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fliu/error.hpp"
#include "fliu/model.hpp"
#include "fliu/rng.hpp"

namespace fliu {

// Adam optimizer state for one parameter vector. Moments persist across
// communication rounds unless the federation is configured to reset them.
struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    uint64_t step_count = 0;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState create(size_t dim, double learning_rate) {
        AdamState s;
        s.first_moment.assign(dim, 0.0);
        s.second_moment.assign(dim, 0.0);
        s.learning_rate = learning_rate;
        return s;
    }

    void reset_moments() {
        std::fill(first_moment.begin(), first_moment.end(), 0.0);
        std::fill(second_moment.begin(), second_moment.end(), 0.0);
        step_count = 0;
    }
};

// One bias-corrected Adam update, in place.
inline void adam_step(AdamState& state, ParamVector& params, const ParamVector& grad) {
    if (state.first_moment.size() != params.size() || grad.size() != params.size()) {
        throw DimensionError("adam_step: state/params/grad lengths disagree");
    }
    state.step_count++;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (size_t i = 0; i < params.size(); ++i) {
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * grad[i];
        v = state.beta2 * v + (1.0 - state.beta2) * grad[i] * grad[i];
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

// Multiplies the learning rate by `factor`; applied once per communication
// round.
inline void decay_learning_rate(AdamState& state, double factor) {
    if (!(factor > 0.0) || factor > 1.0) {
        throw InvalidArgumentError("decay_learning_rate: factor must be in (0, 1]");
    }
    state.learning_rate *= factor;
}

// E local epochs of mini-batch Adam over one client's samples. Every epoch
// reshuffles the index list with the client's stream and visits
// ceil(n_k / B) batches; a short final batch is kept so every sample trains.
inline void train_epochs(const ModelSpec& spec, ParamVector& params, AdamState& state,
                         const LabeledDataset& train, const std::vector<uint32_t>& client_indices,
                         size_t epochs, size_t batch_size, Rng& rng) {
    if (client_indices.empty()) throw InvalidArgumentError("train_epochs: empty client index set");
    if (epochs < 1) throw InvalidArgumentError("train_epochs: epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgumentError("train_epochs: batch size must be >= 1");

    std::vector<uint32_t> order = client_indices;
    for (size_t e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += batch_size) {
            const size_t count = std::min(batch_size, order.size() - start);
            const Batch batch = make_batch(train, order.data() + start, count);
            auto [loss, grad] = loss_and_grad(spec, params, batch);
            (void)loss;
            adam_step(state, params, grad);
        }
    }
    require_finite(params, "train_epochs");
}

} // namespace fliu
