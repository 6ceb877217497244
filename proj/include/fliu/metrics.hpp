#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fliu/error.hpp"
#include "fliu/model.hpp"
#include "fliu/parallel.hpp"
#include "fliu/partition.hpp"

namespace fliu {

// Evaluation points within a communication round: the aggregated global
// model (G), the client models right after the individualized update (L1),
// and the client models after the round's local epochs (L2).
enum class Stage { G, L1, L2 };

inline std::string to_string(Stage s) {
    switch (s) {
        case Stage::G: return "G";
        case Stage::L1: return "L1";
        case Stage::L2: return "L2";
    }
    return "?";
}

// Per-stage metric snapshot. For L1/L2: per-client local accuracy (own test
// set), per-client generalization accuracy (union of all test sets), their
// unweighted means, the combined score and rho per threshold. For G: just
// the global model's accuracy on the union test set.
struct StageSnapshot {
    Stage stage = Stage::L2;
    std::vector<double> per_client_local;
    std::vector<double> per_client_global;
    std::optional<double> global_model_global;
    double acc_local_mean = 0.0;
    double acc_global_mean = 0.0;
    double acc_combined = 0.0;
    std::vector<int64_t> rho;  // one count per configured epsilon
};

// Per-round record across the evaluated stages.
struct RoundRecord {
    int64_t round = 0;
    std::optional<StageSnapshot> g;
    std::optional<StageSnapshot> l1;
    std::optional<StageSnapshot> l2;
};

// Number of clients whose local accuracy strictly exceeds epsilon.
inline int64_t rho(const std::vector<double>& per_client_local, double epsilon) {
    if (epsilon < 0.0 || epsilon > 1.0) {
        throw InvalidArgumentError("rho: epsilon must lie in [0, 1]");
    }
    int64_t count = 0;
    for (double acc : per_client_local) {
        if (acc > epsilon) ++count;
    }
    return count;
}

namespace detail {

// Extended-precision accumulation: the mean of K identical accuracies is
// then exactly that accuracy, which keeps the FedAvg-L1-vs-G identity exact.
inline double mean_of(const std::vector<double>& v) {
    long double sum = 0.0L;
    for (double x : v) sum += x;
    return static_cast<double>(sum / static_cast<long double>(v.size()));
}

inline void require_nonempty_test_sets(const Partition& partition) {
    for (size_t k = 0; k < partition.num_clients(); ++k) {
        if (partition.test_assignment[k].empty()) {
            throw InvalidArgumentError("metrics: client " + std::to_string(k) + " has an empty test set");
        }
    }
}

} // namespace detail

// Acc(L): client k's model on client k's own test indices, plus the
// unweighted mean over clients.
inline std::pair<std::vector<double>, double> local_accuracy(
    const ModelSpec& spec, const std::vector<ParamVector>& client_models,
    const Partition& partition, const LabeledDataset& test, unsigned threads = 1) {
    if (client_models.size() != partition.num_clients()) {
        throw DimensionError("local_accuracy: model count != client count");
    }
    detail::require_nonempty_test_sets(partition);
    std::vector<double> acc(client_models.size());
    parallel_for(client_models.size(), threads, [&](size_t k) {
        acc[k] = evaluate_accuracy(spec, client_models[k], test, partition.test_assignment[k]);
    });
    return {acc, detail::mean_of(acc)};
}

// Acc(G): client k's model on the union of all clients' test sets (the
// whole test dataset, since the partition covers it), mean unweighted.
inline std::pair<std::vector<double>, double> generalization_accuracy(
    const ModelSpec& spec, const std::vector<ParamVector>& client_models,
    const Partition& partition, const LabeledDataset& test, unsigned threads = 1) {
    if (client_models.size() != partition.num_clients()) {
        throw DimensionError("generalization_accuracy: model count != client count");
    }
    detail::require_nonempty_test_sets(partition);
    std::vector<double> acc(client_models.size());
    parallel_for(client_models.size(), threads, [&](size_t k) {
        acc[k] = evaluate_accuracy(spec, client_models[k], test);
    });
    return {acc, detail::mean_of(acc)};
}

// L1/L2 snapshot for a set of client models.
inline StageSnapshot evaluate_stage(Stage stage, const ModelSpec& spec,
                                    const std::vector<ParamVector>& client_models,
                                    const Partition& partition, const LabeledDataset& test,
                                    const std::vector<double>& epsilons, unsigned threads = 1) {
    if (stage == Stage::G) {
        throw InvalidArgumentError("evaluate_stage: stage G takes a single global model");
    }
    StageSnapshot snap;
    snap.stage = stage;
    auto [local, local_mean] = local_accuracy(spec, client_models, partition, test, threads);
    auto [global, global_mean] = generalization_accuracy(spec, client_models, partition, test, threads);
    snap.per_client_local = std::move(local);
    snap.per_client_global = std::move(global);
    snap.acc_local_mean = local_mean;
    snap.acc_global_mean = global_mean;
    snap.acc_combined = snap.acc_local_mean + snap.acc_global_mean;
    snap.rho.reserve(epsilons.size());
    for (double eps : epsilons) snap.rho.push_back(rho(snap.per_client_local, eps));
    return snap;
}

// G snapshot: the global model's accuracy on the union test set.
inline StageSnapshot evaluate_stage_global(const ModelSpec& spec, const ParamVector& global_params,
                                           const LabeledDataset& test) {
    StageSnapshot snap;
    snap.stage = Stage::G;
    snap.global_model_global = evaluate_accuracy(spec, global_params, test);
    snap.acc_global_mean = *snap.global_model_global;
    return snap;
}

} // namespace fliu
