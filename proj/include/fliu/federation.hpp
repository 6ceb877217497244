#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fliu/error.hpp"
#include "fliu/metrics.hpp"
#include "fliu/model.hpp"
#include "fliu/parallel.hpp"
#include "fliu/partition.hpp"
#include "fliu/rng.hpp"
#include "fliu/training.hpp"

namespace fliu {

enum class StrategyKind { CLT, FedAvg, FliuFixed, FliuAdaptive };
enum class AggregationMode { Uniform, SampleWeighted };

// One experiment arm: centrally local training, FedAvg, or FLIU with a
// fixed or adaptive personalization factor. FedAvg shares the FLIU code
// path with gamma pinned to 0 so the compared arms cannot diverge.
struct Strategy {
    StrategyKind kind = StrategyKind::FedAvg;
    double gamma = 0.0;  // FliuFixed only
    AggregationMode aggregation = AggregationMode::Uniform;

    std::string name() const {
        switch (kind) {
            case StrategyKind::CLT: return "clt";
            case StrategyKind::FedAvg: return "fedavg";
            case StrategyKind::FliuAdaptive: return "fliu_adaptive";
            case StrategyKind::FliuFixed: {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%g", gamma);
                return std::string("fliu_fixed_") + buf;
            }
        }
        return "?";
    }

    void validate() const {
        if (kind == StrategyKind::FliuFixed && (gamma < 0.0 || gamma > 1.0)) {
            throw ConfigError("strategy: fixed gamma must lie in [0, 1]");
        }
    }

    // Accepts "clt", "fedavg", "fliu_adaptive" and "fliu_fixed:<gamma>".
    static Strategy parse(const std::string& s) {
        Strategy st;
        if (s == "clt") {
            st.kind = StrategyKind::CLT;
        } else if (s == "fedavg") {
            st.kind = StrategyKind::FedAvg;
        } else if (s == "fliu_adaptive") {
            st.kind = StrategyKind::FliuAdaptive;
        } else if (s.rfind("fliu_fixed:", 0) == 0 || s.rfind("fliu_fixed_", 0) == 0) {
            st.kind = StrategyKind::FliuFixed;
            try {
                st.gamma = std::stod(s.substr(11));
            } catch (const std::exception&) {
                throw ConfigError("strategy: cannot parse gamma in '" + s + "'");
            }
            st.validate();
        } else {
            throw ConfigError("strategy: unknown strategy '" + s + "'");
        }
        return st;
    }
};

// Adaptive personalization factor: grows with the client's share of the
// overall data. Evaluated top-down with strict inequalities, in exact
// integer arithmetic so the branch boundaries cannot drift.
inline double gamma_adaptive(uint64_t n_k, uint64_t n, uint64_t num_clients) {
    if (n_k == 0 || n_k > n || num_clients == 0) {
        throw InvalidArgumentError("gamma_adaptive: need 0 < n_k <= n and K >= 1");
    }
    const uint64_t lhs = n_k * num_clients;  // compare n_k against multiples of n/K
    if (lhs > 10 * n) return 0.9;
    if (lhs > 5 * n) return 0.75;
    if (lhs > n) return 0.5;
    if (2 * lhs > n) return 0.25;
    return 0.1;
}

// theta_k <- gamma * theta_k + (1 - gamma) * global. The endpoints return
// exact copies, so gamma=0 is a FedAvg broadcast and gamma=1 is pure local
// training, bit for bit.
inline ParamVector individualized_update(const ParamVector& theta_k, const ParamVector& global_params,
                                         double gamma) {
    if (theta_k.size() != global_params.size()) {
        throw DimensionError("individualized_update: parameter lengths disagree");
    }
    if (gamma < 0.0 || gamma > 1.0) {
        throw InvalidArgumentError("individualized_update: gamma must lie in [0, 1]");
    }
    if (gamma == 0.0) return global_params;
    if (gamma == 1.0) return theta_k;
    ParamVector out(theta_k.size());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = gamma * theta_k[i] + (1.0 - gamma) * global_params[i];
    }
    return out;
}

// Elementwise arithmetic mean, summed in ascending client-id order for bit
// reproducibility.
inline ParamVector aggregate_uniform(const std::vector<ParamVector>& client_params) {
    if (client_params.empty()) throw InvalidArgumentError("aggregate_uniform: no client models");
    const size_t dim = client_params.front().size();
    ParamVector out(dim, 0.0);
    for (const auto& p : client_params) {
        if (p.size() != dim) throw DimensionError("aggregate_uniform: parameter lengths disagree");
        for (size_t i = 0; i < dim; ++i) out[i] += p[i];
    }
    const double inv = 1.0 / static_cast<double>(client_params.size());
    for (double& v : out) v *= inv;
    return out;
}

// Sample-weighted mean: sum of (n_k / n) * theta_k in ascending order.
inline ParamVector aggregate_weighted(const std::vector<ParamVector>& client_params,
                                      const std::vector<uint64_t>& sample_counts) {
    if (client_params.empty()) throw InvalidArgumentError("aggregate_weighted: no client models");
    if (sample_counts.size() != client_params.size()) {
        throw DimensionError("aggregate_weighted: weight count != client count");
    }
    uint64_t total = 0;
    for (uint64_t w : sample_counts) {
        if (w == 0) throw InvalidArgumentError("aggregate_weighted: weights must be positive");
        total += w;
    }
    const size_t dim = client_params.front().size();
    ParamVector out(dim, 0.0);
    for (size_t k = 0; k < client_params.size(); ++k) {
        if (client_params[k].size() != dim) {
            throw DimensionError("aggregate_weighted: parameter lengths disagree");
        }
        const double w = static_cast<double>(sample_counts[k]) / static_cast<double>(total);
        for (size_t i = 0; i < dim; ++i) out[i] += w * client_params[k][i];
    }
    return out;
}

// Per-client state: model, optimizer, data references and the static
// personalization factor.
struct ClientState {
    size_t id = 0;
    std::vector<uint32_t> train_indices;
    std::vector<uint32_t> test_indices;
    ParamVector params;
    AdamState optimizer;
    uint64_t n_k = 0;
    double gamma = 0.0;
    uint64_t seed_base = 0;
};

struct ServerState {
    ParamVector global_params;
    int64_t round = 0;
};

struct FederationState {
    ServerState server;
    std::vector<ClientState> clients;
};

// Per-round knobs shared by all strategies.
struct RoundHyper {
    size_t epochs = 5;
    size_t batch_size = 50;
    double lr_decay = 0.99;
    std::vector<double> epsilons = {0.85, 0.90, 0.95};
    bool reset_optimizer_on_update = false;
    bool clt_pseudo_global = false;
    unsigned threads = 1;
};

// Builds the round-0 federation: every client starts from the same initial
// parameters and owns an RNG stream independent of the strategy, so paired
// arms see identical batch orders.
inline FederationState setup_federation(const ModelSpec& spec, const Partition& partition,
                                        const Strategy& strategy, const ParamVector& initial_params,
                                        double learning_rate, uint64_t run_seed) {
    strategy.validate();
    if (initial_params.size() != spec.param_count()) {
        throw DimensionError("setup_federation: initial parameter length != spec count");
    }
    const size_t K = partition.num_clients();
    uint64_t n = 0;
    for (const auto& t : partition.train_assignment) n += t.size();

    FederationState state;
    state.server.global_params = initial_params;
    state.server.round = 0;
    state.clients.reserve(K);
    for (size_t k = 0; k < K; ++k) {
        ClientState c;
        c.id = k;
        c.train_indices = partition.train_assignment[k];
        c.test_indices = partition.test_assignment[k];
        c.params = initial_params;
        c.optimizer = AdamState::create(initial_params.size(), learning_rate);
        c.n_k = c.train_indices.size();
        c.seed_base = derive_seed(run_seed, "client", static_cast<uint64_t>(k));
        switch (strategy.kind) {
            case StrategyKind::CLT: c.gamma = 1.0; break;
            case StrategyKind::FedAvg: c.gamma = 0.0; break;
            case StrategyKind::FliuFixed: c.gamma = strategy.gamma; break;
            case StrategyKind::FliuAdaptive: c.gamma = gamma_adaptive(c.n_k, n, K); break;
        }
        state.clients.push_back(std::move(c));
    }
    return state;
}

namespace detail {

inline std::vector<ParamVector> collect_models(const FederationState& state) {
    std::vector<ParamVector> models;
    models.reserve(state.clients.size());
    for (const auto& c : state.clients) models.push_back(c.params);
    return models;
}

} // namespace detail

// One communication round, in the order: local training (L2 metrics),
// aggregation (G metrics), individualized update (L1 metrics), then one
// learning-rate decay. CLT skips aggregation and update; its L1 metrics
// equal its L2 metrics and it reports no G stage unless the pseudo-global
// mode is enabled.
inline RoundRecord run_round(FederationState& state, const Strategy& strategy,
                             const RoundHyper& hyper, const ModelSpec& spec,
                             const LabeledDataset& train, const LabeledDataset& test,
                             const Partition& partition) {
    const int64_t t = state.server.round + 1;

    parallel_for(state.clients.size(), hyper.threads, [&](size_t k) {
        ClientState& c = state.clients[k];
        Rng rng(derive_seed(c.seed_base, "round", static_cast<uint64_t>(t)));
        train_epochs(spec, c.params, c.optimizer, train, c.train_indices, hyper.epochs,
                     hyper.batch_size, rng);
    });

    RoundRecord rec;
    rec.round = t;
    auto models = detail::collect_models(state);
    rec.l2 = evaluate_stage(Stage::L2, spec, models, partition, test, hyper.epsilons, hyper.threads);

    if (strategy.kind == StrategyKind::CLT) {
        rec.l1 = rec.l2;
        rec.l1->stage = Stage::L1;
        if (hyper.clt_pseudo_global) {
            rec.g = evaluate_stage_global(spec, aggregate_uniform(models), test);
        }
    } else {
        ParamVector theta;
        if (strategy.aggregation == AggregationMode::Uniform) {
            theta = aggregate_uniform(models);
        } else {
            std::vector<uint64_t> weights;
            weights.reserve(state.clients.size());
            for (const auto& c : state.clients) weights.push_back(c.n_k);
            theta = aggregate_weighted(models, weights);
        }
        require_finite(theta, "run_round aggregate");
        state.server.global_params = theta;
        rec.g = evaluate_stage_global(spec, theta, test);

        for (auto& c : state.clients) {
            c.params = individualized_update(c.params, theta, c.gamma);
            if (hyper.reset_optimizer_on_update) c.optimizer.reset_moments();
        }
        models = detail::collect_models(state);
        rec.l1 = evaluate_stage(Stage::L1, spec, models, partition, test, hyper.epsilons,
                                hyper.threads);
    }

    for (auto& c : state.clients) decay_learning_rate(c.optimizer, hyper.lr_decay);
    state.server.round = t;
    return rec;
}

// T sequential rounds; returns the full per-round, per-stage metric history.
inline std::vector<RoundRecord> run_training(FederationState& state, const Strategy& strategy,
                                             const RoundHyper& hyper, const ModelSpec& spec,
                                             const LabeledDataset& train, const LabeledDataset& test,
                                             const Partition& partition, size_t rounds) {
    std::vector<RoundRecord> history;
    history.reserve(rounds);
    for (size_t i = 0; i < rounds; ++i) {
        history.push_back(run_round(state, strategy, hyper, spec, train, test, partition));
    }
    return history;
}

// ---------------------------------------------------------------------------
// Checkpoints: server and client parameter blobs plus optimizer state and
// the round index, enough to resume a run. Client data references are not
// stored; they are re-attached from the partition on load.
// ---------------------------------------------------------------------------
inline constexpr uint64_t kCheckpointMagic = 0x464c4955434b5031ULL;  // "FLIUCKP1"

inline void save_checkpoint(const std::string& path, const ModelSpec& spec,
                            const FederationState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SerializationError("save_checkpoint: cannot open '" + path + "'");
    detail::write_u64_le(out, kCheckpointMagic);
    detail::write_u64_le(out, spec.hash());
    detail::write_u64_le(out, static_cast<uint64_t>(state.server.round));
    detail::write_u64_le(out, state.clients.size());
    detail::write_u64_le(out, state.server.global_params.size());
    for (double v : state.server.global_params) detail::write_f64_le(out, v);
    for (const auto& c : state.clients) {
        detail::write_u64_le(out, c.id);
        detail::write_u64_le(out, c.n_k);
        detail::write_u64_le(out, c.seed_base);
        detail::write_u64_le(out, c.optimizer.step_count);
        detail::write_f64_le(out, c.gamma);
        detail::write_f64_le(out, c.optimizer.learning_rate);
        for (double v : c.params) detail::write_f64_le(out, v);
        for (double v : c.optimizer.first_moment) detail::write_f64_le(out, v);
        for (double v : c.optimizer.second_moment) detail::write_f64_le(out, v);
    }
}

inline FederationState load_checkpoint(const std::string& path, const ModelSpec& spec,
                                       const Partition& partition) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SerializationError("load_checkpoint: cannot open '" + path + "'");
    if (detail::read_u64_le(in) != kCheckpointMagic) {
        throw SerializationError("load_checkpoint: bad magic");
    }
    if (detail::read_u64_le(in) != spec.hash()) {
        throw SerializationError("load_checkpoint: spec hash mismatch");
    }
    FederationState state;
    state.server.round = static_cast<int64_t>(detail::read_u64_le(in));
    const uint64_t K = detail::read_u64_le(in);
    const uint64_t dim = detail::read_u64_le(in);
    if (dim != spec.param_count()) throw SerializationError("load_checkpoint: parameter length mismatch");
    if (K != partition.num_clients()) throw SerializationError("load_checkpoint: client count mismatch");
    state.server.global_params.resize(dim);
    for (auto& v : state.server.global_params) v = detail::read_f64_le(in);
    state.clients.resize(K);
    for (uint64_t k = 0; k < K; ++k) {
        ClientState& c = state.clients[k];
        c.id = detail::read_u64_le(in);
        if (c.id != k) throw SerializationError("load_checkpoint: client ids out of order");
        c.n_k = detail::read_u64_le(in);
        c.seed_base = detail::read_u64_le(in);
        const uint64_t steps = detail::read_u64_le(in);
        c.gamma = detail::read_f64_le(in);
        const double lr = detail::read_f64_le(in);
        c.params.resize(dim);
        for (auto& v : c.params) v = detail::read_f64_le(in);
        c.optimizer = AdamState::create(dim, lr);
        c.optimizer.step_count = steps;
        for (auto& v : c.optimizer.first_moment) v = detail::read_f64_le(in);
        for (auto& v : c.optimizer.second_moment) v = detail::read_f64_le(in);
        c.train_indices = partition.train_assignment[k];
        c.test_indices = partition.test_assignment[k];
        if (c.n_k != c.train_indices.size()) {
            throw SerializationError("load_checkpoint: sample count disagrees with partition");
        }
    }
    return state;
}

} // namespace fliu
