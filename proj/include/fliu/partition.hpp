#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fliu/dataset.hpp"
#include "fliu/error.hpp"
#include "fliu/rng.hpp"
#include "fliu/sinkhorn.hpp"

namespace fliu {

// The five client data environments.
enum class Environment { IID, PATH, LS, QS, LSQS };

inline std::string to_string(Environment e) {
    switch (e) {
        case Environment::IID: return "iid";
        case Environment::PATH: return "path";
        case Environment::LS: return "ls";
        case Environment::QS: return "qs";
        case Environment::LSQS: return "lsqs";
    }
    return "?";
}

inline Environment environment_from_string(const std::string& s) {
    if (s == "iid") return Environment::IID;
    if (s == "path") return Environment::PATH;
    if (s == "ls") return Environment::LS;
    if (s == "qs") return Environment::QS;
    if (s == "lsqs") return Environment::LSQS;
    throw ConfigError("unknown environment '" + s + "' (expected iid|path|ls|qs|lsqs)");
}

// Assignment of train and test sample indices to K clients. Train sets are
// pairwise disjoint, cover the train dataset, and are each nonempty; the
// test sets partition the test dataset the same way.
struct Partition {
    std::vector<std::vector<uint32_t>> train_assignment;
    std::vector<std::vector<uint32_t>> test_assignment;
    Environment environment = Environment::IID;
    std::optional<double> alpha_label;
    std::optional<double> alpha_quantity;
    uint64_t seed = 0;

    size_t num_clients() const { return train_assignment.size(); }

    std::vector<size_t> train_sizes() const {
        std::vector<size_t> s;
        s.reserve(train_assignment.size());
        for (const auto& a : train_assignment) s.push_back(a.size());
        return s;
    }

    // Disjoint-cover and nonempty-train checks against the dataset sizes.
    void validate(size_t train_size, size_t test_size) const {
        if (train_assignment.size() != test_assignment.size() || train_assignment.empty()) {
            throw PartitionError("partition: train/test client counts disagree or are zero");
        }
        auto check_cover = [](const std::vector<std::vector<uint32_t>>& sets, size_t total,
                              const char* side) {
            std::vector<char> seen(total, 0);
            size_t covered = 0;
            for (const auto& s : sets) {
                for (uint32_t i : s) {
                    if (i >= total) throw PartitionError(std::string("partition: ") + side + " index out of range");
                    if (seen[i]) throw PartitionError(std::string("partition: ") + side + " index assigned twice");
                    seen[i] = 1;
                    ++covered;
                }
            }
            if (covered != total) throw PartitionError(std::string("partition: ") + side + " indices not fully covered");
        };
        check_cover(train_assignment, train_size, "train");
        check_cover(test_assignment, test_size, "test");
        for (const auto& s : train_assignment) {
            if (s.empty()) throw PartitionError("partition: a client has an empty train set");
        }
    }
};

// One draw from Dirichlet(alpha_1..alpha_s): strictly positive entries
// summing to 1 (within 1e-12).
inline std::vector<double> sample_dirichlet(const std::vector<double>& alpha, Rng& rng) {
    if (alpha.empty()) throw InvalidArgumentError("sample_dirichlet: empty alpha");
    std::vector<double> g(alpha.size());
    double sum = 0.0;
    for (size_t i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] > 0.0)) throw InvalidArgumentError("sample_dirichlet: alpha must be positive");
        g[i] = std::max(rng.gamma(alpha[i]), 1e-300);
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

namespace detail {

// Shuffled copy of a class's sample indices.
inline std::vector<uint32_t> shuffled(const std::vector<uint32_t>& idx, Rng& rng) {
    std::vector<uint32_t> out = idx;
    rng.shuffle(out);
    return out;
}

// Splits `count` items among |holders| parties with counts differing by at
// most 1; which holders receive the remainder is randomized.
inline std::vector<int64_t> balanced_split(int64_t count, size_t holders, Rng& rng) {
    std::vector<int64_t> out(holders, count / static_cast<int64_t>(holders));
    const size_t rem = static_cast<size_t>(count % static_cast<int64_t>(holders));
    if (rem > 0) {
        auto order = rng.permutation(holders);
        for (size_t i = 0; i < rem; ++i) out[order[i]]++;
    }
    return out;
}

// Deals shuffled per-class index pools to clients according to an integer
// count matrix, in ascending client-id order.
inline std::vector<std::vector<uint32_t>> deal_by_counts(
    const std::vector<std::vector<uint32_t>>& pools,
    const std::vector<std::vector<int64_t>>& counts) {
    const size_t K = counts.size();
    std::vector<std::vector<uint32_t>> out(K);
    std::vector<size_t> cursor(pools.size(), 0);
    for (size_t k = 0; k < K; ++k) {
        size_t total = 0;
        for (size_t j = 0; j < pools.size(); ++j) total += static_cast<size_t>(counts[k][j]);
        out[k].reserve(total);
        for (size_t j = 0; j < pools.size(); ++j) {
            for (int64_t c = 0; c < counts[k][j]; ++c) out[k].push_back(pools[j][cursor[j]++]);
        }
    }
    return out;
}

// Moves single test samples from the largest sets to empty ones so every
// client can be evaluated. No-op when all sets are already nonempty.
inline void ensure_nonempty_test(std::vector<std::vector<uint32_t>>& test_sets) {
    for (size_t k = 0; k < test_sets.size(); ++k) {
        if (!test_sets[k].empty()) continue;
        size_t donor = 0;
        for (size_t d = 1; d < test_sets.size(); ++d) {
            if (test_sets[d].size() > test_sets[donor].size()) donor = d;
        }
        if (test_sets[donor].size() < 2) {
            throw PartitionError("partition: test set too small to give every client a sample");
        }
        test_sets[k].push_back(test_sets[donor].back());
        test_sets[donor].pop_back();
    }
}

// Dirichlet label matrix with one row per client, entries floored so the
// marginal fit always has support.
inline Matrix dirichlet_label_matrix(size_t K, size_t L, double alpha, Rng& rng) {
    Matrix m(K, L);
    const std::vector<double> a(L, alpha);
    for (size_t k = 0; k < K; ++k) {
        const auto row = sample_dirichlet(a, rng);
        for (size_t j = 0; j < L; ++j) m.at(k, j) = std::max(row[j], 1e-9);
    }
    return m;
}

// Rescales each column of a fitted count matrix to sum 1, producing the
// column-stochastic form allocate_counts expects.
inline DistributionMatrix column_stochastic(const DistributionMatrix& fitted) {
    DistributionMatrix out = fitted;
    for (size_t j = 0; j < out.entries.cols; ++j) {
        const double s = out.entries.col_sum(j);
        for (size_t k = 0; k < out.entries.rows; ++k) out.entries.at(k, j) /= s;
    }
    out.col_targets.assign(out.entries.cols, 1.0);
    return out;
}

// Per-client totals of an integer count matrix.
inline std::vector<int64_t> row_totals(const std::vector<std::vector<int64_t>>& counts) {
    std::vector<int64_t> t(counts.size(), 0);
    for (size_t k = 0; k < counts.size(); ++k) {
        t[k] = std::accumulate(counts[k].begin(), counts[k].end(), int64_t{0});
    }
    return t;
}

// Column-preserving rebalance: moves single samples from the largest client
// to the smallest until the total spread is at most `max_spread`.
inline void rebalance_totals(std::vector<std::vector<int64_t>>& counts, int64_t max_spread) {
    auto totals = row_totals(counts);
    for (;;) {
        size_t lo = 0, hi = 0;
        for (size_t k = 1; k < totals.size(); ++k) {
            if (totals[k] < totals[lo]) lo = k;
            if (totals[k] > totals[hi]) hi = k;
        }
        if (totals[hi] - totals[lo] <= max_spread) return;
        // Donate in the class where the donor most exceeds the recipient.
        size_t best_j = 0;
        int64_t best_diff = INT64_MIN;
        for (size_t j = 0; j < counts[hi].size(); ++j) {
            const int64_t diff = counts[hi][j] - counts[lo][j];
            if (diff > best_diff && counts[hi][j] > 0) {
                best_diff = diff;
                best_j = j;
            }
        }
        counts[hi][best_j]--;
        counts[lo][best_j]++;
        totals[hi]--;
        totals[lo]++;
    }
}

// Integer client sizes from a quantity draw: largest-remainder to sum
// exactly `total`, then a minimum per client enforced by stealing from the
// currently largest client.
inline std::vector<int64_t> apportion_sizes(const std::vector<double>& q, int64_t total,
                                            int64_t min_per_client) {
    const auto K = static_cast<int64_t>(q.size());
    if (total < K * min_per_client) {
        throw PartitionError("partition: dataset too small for " + std::to_string(K) +
                             " clients at " + std::to_string(min_per_client) + " samples each");
    }
    auto sizes = largest_remainder(q, total);
    for (size_t k = 0; k < sizes.size(); ++k) {
        while (sizes[k] < min_per_client) {
            size_t donor = 0;
            for (size_t d = 1; d < sizes.size(); ++d) {
                if (sizes[d] > sizes[donor]) donor = d;
            }
            sizes[donor]--;
            sizes[k]++;
        }
    }
    return sizes;
}

// Evenly interleaved class sequence with exact multiplicities: class j
// appears class_counts[j] times, spread across the sequence so that any
// window is near-proportional. Used by the quantity-skew builders.
inline std::vector<size_t> interleaved_class_sequence(const std::vector<int64_t>& class_counts) {
    const size_t L = class_counts.size();
    std::vector<double> next_pos(L);
    std::vector<int64_t> emitted(L, 0);
    size_t total = 0;
    for (size_t j = 0; j < L; ++j) {
        next_pos[j] = class_counts[j] > 0 ? 0.5 / static_cast<double>(class_counts[j]) : 2.0;
        total += static_cast<size_t>(class_counts[j]);
    }
    std::vector<size_t> seq;
    seq.reserve(total);
    for (size_t i = 0; i < total; ++i) {
        size_t j = 0;
        for (size_t c = 1; c < L; ++c) {
            if (next_pos[c] < next_pos[j]) j = c;
        }
        seq.push_back(j);
        emitted[j]++;
        next_pos[j] = (emitted[j] >= class_counts[j])
                          ? 2.0
                          : (static_cast<double>(emitted[j]) + 0.5) / static_cast<double>(class_counts[j]);
    }
    return seq;
}

// Per-client per-class slot counts from consecutive windows of the
// interleaved sequence.
inline std::vector<std::vector<int64_t>> window_counts(const std::vector<size_t>& seq,
                                                       const std::vector<int64_t>& sizes, size_t L) {
    std::vector<std::vector<int64_t>> counts(sizes.size(), std::vector<int64_t>(L, 0));
    size_t pos = 0;
    for (size_t k = 0; k < sizes.size(); ++k) {
        for (int64_t i = 0; i < sizes[k]; ++i) counts[k][seq[pos++]]++;
    }
    return counts;
}

inline void require_classes_nonempty(const LabeledDataset& ds, const char* ctx) {
    const auto counts = ds.class_counts();
    for (size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] == 0) {
            throw PartitionError(std::string(ctx) + ": class " + std::to_string(j) +
                                 " has no samples in dataset '" + ds.name + "'");
        }
    }
}

inline std::vector<int64_t> class_counts_i64(const LabeledDataset& ds) {
    const auto c = ds.class_counts();
    return std::vector<int64_t>(c.begin(), c.end());
}

} // namespace detail

// IID environment: per client, per class, counts differ by at most 1 from
// class_count/K; assignment is a random permutation split. The test side is
// partitioned with the same structure.
inline Partition partition_iid(const LabeledDataset& train, const LabeledDataset& test,
                               size_t K, uint64_t seed) {
    if (K < 1) throw InvalidArgumentError("partition_iid: K must be >= 1");
    detail::require_classes_nonempty(train, "partition_iid");
    Rng rng(seed);

    const auto train_by_class = train.indices_by_class();
    const auto test_by_class = test.indices_by_class();
    for (size_t j = 0; j < train_by_class.size(); ++j) {
        if (train_by_class[j].size() < K) {
            throw PartitionError("partition_iid: class " + std::to_string(j) + " has " +
                                 std::to_string(train_by_class[j].size()) + " samples, fewer than K=" +
                                 std::to_string(K));
        }
    }

    Partition p;
    p.environment = Environment::IID;
    p.seed = seed;
    p.train_assignment.assign(K, {});
    p.test_assignment.assign(K, {});

    auto split_side = [&](const std::vector<std::vector<uint32_t>>& by_class,
                          std::vector<std::vector<uint32_t>>& out) {
        for (const auto& cls : by_class) {
            if (cls.empty()) continue;
            const auto pool = detail::shuffled(cls, rng);
            const auto counts = detail::balanced_split(static_cast<int64_t>(pool.size()), K, rng);
            size_t cursor = 0;
            for (size_t k = 0; k < K; ++k) {
                for (int64_t c = 0; c < counts[k]; ++c) out[k].push_back(pool[cursor++]);
            }
        }
    };
    split_side(train_by_class, p.train_assignment);
    split_side(test_by_class, p.test_assignment);
    detail::ensure_nonempty_test(p.test_assignment);
    p.validate(train.size(), test.size());
    return p;
}

inline constexpr size_t kPathRetryBudget = 1000;

// Pathological non-IID: every client holds samples from exactly two classes
// chosen uniformly without replacement; each class's samples are divided
// evenly among the clients that picked it. The class assignment is redrawn
// (up to kPathRetryBudget times) until every class is held by someone and
// every holder can receive at least one train and one test sample.
inline Partition partition_pathological(const LabeledDataset& train, const LabeledDataset& test,
                                        size_t K, uint64_t seed) {
    if (K < 1) throw InvalidArgumentError("partition_pathological: K must be >= 1");
    const size_t L = static_cast<size_t>(train.num_classes);
    if (L < 2) throw InvalidArgumentError("partition_pathological: need at least 2 classes");
    detail::require_classes_nonempty(train, "partition_pathological");
    Rng rng(seed);

    const auto train_by_class = train.indices_by_class();
    const auto test_by_class = test.indices_by_class();

    std::vector<std::vector<size_t>> holders;
    bool ok = false;
    for (size_t attempt = 0; attempt < kPathRetryBudget && !ok; ++attempt) {
        holders.assign(L, {});
        for (size_t k = 0; k < K; ++k) {
            const size_t a = static_cast<size_t>(rng.uniform_below(L));
            size_t b = static_cast<size_t>(rng.uniform_below(L - 1));
            if (b >= a) ++b;
            holders[a].push_back(k);
            holders[b].push_back(k);
        }
        ok = true;
        for (size_t j = 0; j < L; ++j) {
            if (holders[j].empty() || train_by_class[j].size() < holders[j].size() ||
                test_by_class[j].size() < holders[j].size()) {
                ok = false;
                break;
            }
        }
    }
    if (!ok) {
        throw PartitionError("partition_pathological: no covering class assignment within " +
                             std::to_string(kPathRetryBudget) + " redraws (K=" + std::to_string(K) +
                             ", L=" + std::to_string(L) + ")");
    }

    Partition p;
    p.environment = Environment::PATH;
    p.seed = seed;
    p.train_assignment.assign(K, {});
    p.test_assignment.assign(K, {});

    auto split_side = [&](const std::vector<std::vector<uint32_t>>& by_class,
                          std::vector<std::vector<uint32_t>>& out) {
        for (size_t j = 0; j < L; ++j) {
            const auto pool = detail::shuffled(by_class[j], rng);
            const auto counts =
                detail::balanced_split(static_cast<int64_t>(pool.size()), holders[j].size(), rng);
            size_t cursor = 0;
            for (size_t h = 0; h < holders[j].size(); ++h) {
                for (int64_t c = 0; c < counts[h]; ++c) out[holders[j][h]].push_back(pool[cursor++]);
            }
        }
    };
    split_side(train_by_class, p.train_assignment);
    split_side(test_by_class, p.test_assignment);
    p.validate(train.size(), test.size());
    return p;
}

// Label skew (LS): Dirichlet class distributions per client, fitted with the
// Sinkhorn-Knopp iteration so that every class is fully distributed and all
// clients end with the same sample count up to integer rounding
// (max n_k - min n_k <= L).
inline Partition partition_label_skew(const LabeledDataset& train, const LabeledDataset& test,
                                      size_t K, double alpha, uint64_t seed) {
    if (K < 2) throw InvalidArgumentError("partition_label_skew: K must be >= 2");
    if (!(alpha > 0.0)) throw InvalidArgumentError("partition_label_skew: alpha must be > 0");
    detail::require_classes_nonempty(train, "partition_label_skew");
    Rng rng(seed);

    const size_t L = static_cast<size_t>(train.num_classes);
    const auto train_counts = detail::class_counts_i64(train);
    const int64_t n = static_cast<int64_t>(train.size());

    Matrix raw = detail::dirichlet_label_matrix(K, L, alpha, rng);
    // Fit in count space: every client targets n/K samples, every class is
    // exhausted exactly. For equal class counts this is the column-sums-1 /
    // row-sums-L/K fit scaled by n/L.
    std::vector<double> row_targets(K, static_cast<double>(n) / static_cast<double>(K));
    std::vector<double> col_targets(train_counts.begin(), train_counts.end());
    const auto fitted = ipf_fit(std::move(raw), std::move(row_targets), std::move(col_targets));
    const auto stochastic = detail::column_stochastic(fitted);

    auto counts = allocate_counts(stochastic, train_counts);
    detail::rebalance_totals(counts, static_cast<int64_t>(L));

    Partition p;
    p.environment = Environment::LS;
    p.seed = seed;
    p.alpha_label = alpha;

    std::vector<std::vector<uint32_t>> train_pools;
    for (const auto& cls : train.indices_by_class()) train_pools.push_back(detail::shuffled(cls, rng));
    p.train_assignment = detail::deal_by_counts(train_pools, counts);

    const auto test_counts_alloc = allocate_counts(stochastic, detail::class_counts_i64(test));
    std::vector<std::vector<uint32_t>> test_pools;
    for (const auto& cls : test.indices_by_class()) test_pools.push_back(detail::shuffled(cls, rng));
    p.test_assignment = detail::deal_by_counts(test_pools, test_counts_alloc);
    detail::ensure_nonempty_test(p.test_assignment);

    p.validate(train.size(), test.size());
    return p;
}

// Quantity skew (QS): one Dirichlet draw fixes the client sizes (largest
// remainder, exact total, at least L samples each); within a client the
// class distribution stays balanced. The test side mirrors the same draw.
inline Partition partition_quantity_skew(const LabeledDataset& train, const LabeledDataset& test,
                                         size_t K, double alpha, uint64_t seed) {
    if (K < 2) throw InvalidArgumentError("partition_quantity_skew: K must be >= 2");
    if (!(alpha > 0.0)) throw InvalidArgumentError("partition_quantity_skew: alpha must be > 0");
    detail::require_classes_nonempty(train, "partition_quantity_skew");
    Rng rng(seed);

    const size_t L = static_cast<size_t>(train.num_classes);
    const std::vector<double> a(K, alpha);
    const auto q = sample_dirichlet(a, rng);

    const auto train_sizes = detail::apportion_sizes(q, static_cast<int64_t>(train.size()),
                                                     static_cast<int64_t>(L));
    const auto train_seq = detail::interleaved_class_sequence(detail::class_counts_i64(train));
    const auto train_counts = detail::window_counts(train_seq, train_sizes, L);

    Partition p;
    p.environment = Environment::QS;
    p.seed = seed;
    p.alpha_quantity = alpha;

    std::vector<std::vector<uint32_t>> train_pools;
    for (const auto& cls : train.indices_by_class()) train_pools.push_back(detail::shuffled(cls, rng));
    p.train_assignment = detail::deal_by_counts(train_pools, train_counts);

    const auto test_sizes = detail::apportion_sizes(q, static_cast<int64_t>(test.size()), 1);
    const auto test_seq = detail::interleaved_class_sequence(detail::class_counts_i64(test));
    const auto test_counts = detail::window_counts(test_seq, test_sizes, L);
    std::vector<std::vector<uint32_t>> test_pools;
    for (const auto& cls : test.indices_by_class()) test_pools.push_back(detail::shuffled(cls, rng));
    p.test_assignment = detail::deal_by_counts(test_pools, test_counts);
    detail::ensure_nonempty_test(p.test_assignment);

    p.validate(train.size(), test.size());
    return p;
}

// Combined label and quantity skew (LSQS): the quantity draw sets per-client
// row targets, the label matrix is fitted to them, so both skews are present
// and every per-client total matches its quantity target within L.
inline Partition partition_lsqs(const LabeledDataset& train, const LabeledDataset& test,
                                size_t K, double alpha_label, double alpha_quantity, uint64_t seed) {
    if (K < 2) throw InvalidArgumentError("partition_lsqs: K must be >= 2");
    if (!(alpha_label > 0.0) || !(alpha_quantity > 0.0)) {
        throw InvalidArgumentError("partition_lsqs: alphas must be > 0");
    }
    detail::require_classes_nonempty(train, "partition_lsqs");
    Rng rng(seed);

    const size_t L = static_cast<size_t>(train.num_classes);
    const std::vector<double> aq(K, alpha_quantity);
    const auto q = sample_dirichlet(aq, rng);
    const auto size_targets = detail::apportion_sizes(q, static_cast<int64_t>(train.size()),
                                                      static_cast<int64_t>(L));

    Matrix raw = detail::dirichlet_label_matrix(K, L, alpha_label, rng);
    std::vector<double> row_targets(size_targets.begin(), size_targets.end());
    const auto train_counts = detail::class_counts_i64(train);
    std::vector<double> col_targets(train_counts.begin(), train_counts.end());
    const auto fitted = ipf_fit(std::move(raw), std::move(row_targets), std::move(col_targets));
    const auto stochastic = detail::column_stochastic(fitted);

    const auto counts = allocate_counts(stochastic, train_counts);

    Partition p;
    p.environment = Environment::LSQS;
    p.seed = seed;
    p.alpha_label = alpha_label;
    p.alpha_quantity = alpha_quantity;

    std::vector<std::vector<uint32_t>> train_pools;
    for (const auto& cls : train.indices_by_class()) train_pools.push_back(detail::shuffled(cls, rng));
    p.train_assignment = detail::deal_by_counts(train_pools, counts);

    const auto test_counts_alloc = allocate_counts(stochastic, detail::class_counts_i64(test));
    std::vector<std::vector<uint32_t>> test_pools;
    for (const auto& cls : test.indices_by_class()) test_pools.push_back(detail::shuffled(cls, rng));
    p.test_assignment = detail::deal_by_counts(test_pools, test_counts_alloc);
    detail::ensure_nonempty_test(p.test_assignment);

    p.validate(train.size(), test.size());
    return p;
}

// Environment selector used by experiment configs and the CLI.
struct EnvironmentSpec {
    Environment type = Environment::IID;
    double alpha_label = 1.0;
    double alpha_quantity = 1.0;
};

inline Partition build_partition(const LabeledDataset& train, const LabeledDataset& test,
                                 const EnvironmentSpec& env, size_t K, uint64_t seed) {
    switch (env.type) {
        case Environment::IID: return partition_iid(train, test, K, seed);
        case Environment::PATH: return partition_pathological(train, test, K, seed);
        case Environment::LS: return partition_label_skew(train, test, K, env.alpha_label, seed);
        case Environment::QS: return partition_quantity_skew(train, test, K, env.alpha_quantity, seed);
        case Environment::LSQS:
            return partition_lsqs(train, test, K, env.alpha_label, env.alpha_quantity, seed);
    }
    throw InvalidArgumentError("build_partition: unknown environment");
}

// Per-client label histogram (train side), length num_classes.
inline std::vector<int64_t> client_label_histogram(const Partition& p, const LabeledDataset& ds,
                                                   size_t client) {
    std::vector<int64_t> hist(static_cast<size_t>(ds.num_classes), 0);
    for (uint32_t i : p.train_assignment[client]) hist[static_cast<size_t>(ds.labels[i])]++;
    return hist;
}

// ---------------------------------------------------------------------------
// Partition replay files (schema fliu.partition.v1): environment tag, alpha
// values, seed and the full index lists, so an experiment can be re-run on
// the exact same client assignment.
// ---------------------------------------------------------------------------
inline nlohmann::json partition_to_json(const Partition& p, const LabeledDataset& train,
                                        const LabeledDataset& test) {
    nlohmann::json j;
    j["schema"] = "fliu.partition.v1";
    j["environment"] = to_string(p.environment);
    j["alpha_label"] = p.alpha_label ? nlohmann::json(*p.alpha_label) : nlohmann::json(nullptr);
    j["alpha_quantity"] = p.alpha_quantity ? nlohmann::json(*p.alpha_quantity) : nlohmann::json(nullptr);
    j["seed"] = p.seed;
    j["num_clients"] = p.num_clients();
    j["train_size"] = train.size();
    j["test_size"] = test.size();
    j["num_classes"] = train.num_classes;
    auto& clients = j["clients"] = nlohmann::json::array();
    for (size_t k = 0; k < p.num_clients(); ++k) {
        nlohmann::json c;
        c["id"] = k;
        c["train_indices"] = p.train_assignment[k];
        c["test_indices"] = p.test_assignment[k];
        c["train_label_histogram"] = client_label_histogram(p, train, k);
        clients.push_back(std::move(c));
    }
    return j;
}

inline Partition partition_from_json(const nlohmann::json& j) {
    if (!j.contains("schema") || j.at("schema") != "fliu.partition.v1") {
        throw SerializationError("partition_from_json: missing or unknown schema tag");
    }
    Partition p;
    p.environment = environment_from_string(j.at("environment").get<std::string>());
    if (!j.at("alpha_label").is_null()) p.alpha_label = j.at("alpha_label").get<double>();
    if (!j.at("alpha_quantity").is_null()) p.alpha_quantity = j.at("alpha_quantity").get<double>();
    p.seed = j.at("seed").get<uint64_t>();
    const auto& clients = j.at("clients");
    p.train_assignment.resize(clients.size());
    p.test_assignment.resize(clients.size());
    for (const auto& c : clients) {
        const size_t id = c.at("id").get<size_t>();
        if (id >= clients.size()) throw SerializationError("partition_from_json: client id out of range");
        p.train_assignment[id] = c.at("train_indices").get<std::vector<uint32_t>>();
        p.test_assignment[id] = c.at("test_indices").get<std::vector<uint32_t>>();
    }
    p.validate(j.at("train_size").get<size_t>(), j.at("test_size").get<size_t>());
    return p;
}

inline void save_partition(const Partition& p, const LabeledDataset& train,
                           const LabeledDataset& test, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SerializationError("save_partition: cannot open '" + path + "'");
    out << partition_to_json(p, train, test).dump(1, '\t') << "\n";
}

inline Partition load_partition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SerializationError("load_partition: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return partition_from_json(j);
}

} // namespace fliu
