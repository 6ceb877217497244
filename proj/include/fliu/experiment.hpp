#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fliu/dataset.hpp"
#include "fliu/error.hpp"
#include "fliu/federation.hpp"
#include "fliu/metrics.hpp"
#include "fliu/partition.hpp"

namespace fliu {

// ---------------------------------------------------------------------------
// Experiment configuration. JSON file with two required sections (dataset,
// environment); every other key has a default matching the reference
// hyperparameters (K=100 clients, B=50, E=5, T=100 rounds, N=3 repetitions,
// eta=0.01 with 0.99 decay). Unknown keys are rejected.
// ---------------------------------------------------------------------------

struct DatasetConfig {
    enum class Kind { Synthetic, Mnist, Cifar10 };
    Kind kind = Kind::Synthetic;

    // synthetic
    int32_t classes = 10;
    size_t train_per_class = 6000;
    size_t test_per_class = 1000;
    size_t dim = 784;
    double separation = 4.0;
    uint64_t data_seed = 1234;

    // mnist
    std::string train_images, train_labels, test_images, test_labels;

    // cifar10
    std::vector<std::string> train_batches, test_batches;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    EnvironmentSpec environment;
    size_t clients = 100;
    std::vector<Strategy> strategies = {Strategy{StrategyKind::CLT}, Strategy{StrategyKind::FedAvg},
                                        Strategy{StrategyKind::FliuAdaptive}};
    Architecture architecture = Architecture::Mlp;
    std::vector<size_t> hidden = {64};
    size_t rounds = 100;
    size_t epochs = 5;
    size_t batch_size = 50;
    double learning_rate = 0.01;
    double lr_decay = 0.99;
    size_t repetitions = 3;
    uint64_t master_seed = 42;
    std::vector<double> epsilons = {0.85, 0.90, 0.95};
    AggregationMode aggregation = AggregationMode::Uniform;
    bool reset_optimizer_on_update = false;
    bool clt_pseudo_global = false;
    unsigned threads = 1;
    std::string output_dir = "results";

    void validate() const {
        if (clients < 1) throw ConfigError("config: clients must be >= 1");
        if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
        if (repetitions < 1) throw ConfigError("config: repetitions must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be > 0");
        if (!(lr_decay > 0.0) || lr_decay > 1.0) throw ConfigError("config: lr_decay must lie in (0, 1]");
        if (strategies.empty()) throw ConfigError("config: strategies must not be empty");
        for (const auto& s : strategies) s.validate();
        for (double e : epsilons) {
            if (e < 0.0 || e > 1.0) throw ConfigError("config: epsilons must lie in [0, 1]");
        }
        if (architecture == Architecture::Mlp && hidden.empty()) {
            throw ConfigError("config: mlp model needs at least one hidden layer size");
        }
    }

    RoundHyper round_hyper() const {
        RoundHyper h;
        h.epochs = epochs;
        h.batch_size = batch_size;
        h.lr_decay = lr_decay;
        h.epsilons = epsilons;
        h.reset_optimizer_on_update = reset_optimizer_on_update;
        h.clt_pseudo_global = clt_pseudo_global;
        h.threads = threads;
        return h;
    }

    nlohmann::json to_json() const;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                                const std::string& section) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError("config: unknown key '" + it.key() + "' in " + section);
        }
    }
}

template <typename T>
T get_or(const nlohmann::json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: key '" + key + "' has the wrong type");
    }
}

inline DatasetConfig parse_dataset(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: 'dataset' must be an object");
    DatasetConfig d;
    const std::string type = get_or<std::string>(j, "type", "");
    if (type == "synthetic") {
        d.kind = DatasetConfig::Kind::Synthetic;
        reject_unknown_keys(j, {"type", "classes", "train_per_class", "test_per_class", "dim",
                                "separation", "seed"}, "dataset");
        d.classes = get_or<int32_t>(j, "classes", d.classes);
        d.train_per_class = get_or<size_t>(j, "train_per_class", d.train_per_class);
        d.test_per_class = get_or<size_t>(j, "test_per_class", d.test_per_class);
        d.dim = get_or<size_t>(j, "dim", d.dim);
        d.separation = get_or<double>(j, "separation", d.separation);
        d.data_seed = get_or<uint64_t>(j, "seed", d.data_seed);
    } else if (type == "mnist") {
        d.kind = DatasetConfig::Kind::Mnist;
        reject_unknown_keys(j, {"type", "train_images", "train_labels", "test_images", "test_labels"},
                            "dataset");
        for (const char* key : {"train_images", "train_labels", "test_images", "test_labels"}) {
            if (!j.contains(key)) throw ConfigError(std::string("config: mnist dataset needs '") + key + "'");
        }
        d.train_images = j.at("train_images").get<std::string>();
        d.train_labels = j.at("train_labels").get<std::string>();
        d.test_images = j.at("test_images").get<std::string>();
        d.test_labels = j.at("test_labels").get<std::string>();
    } else if (type == "cifar10") {
        d.kind = DatasetConfig::Kind::Cifar10;
        reject_unknown_keys(j, {"type", "train_batches", "test_batches"}, "dataset");
        if (!j.contains("train_batches") || !j.contains("test_batches")) {
            throw ConfigError("config: cifar10 dataset needs 'train_batches' and 'test_batches'");
        }
        d.train_batches = j.at("train_batches").get<std::vector<std::string>>();
        d.test_batches = j.at("test_batches").get<std::vector<std::string>>();
    } else if (type.empty()) {
        throw ConfigError("config: dataset section is missing 'type'");
    } else {
        throw ConfigError("config: unknown dataset type '" + type + "'");
    }
    return d;
}

inline EnvironmentSpec parse_environment(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: 'environment' must be an object");
    reject_unknown_keys(j, {"type", "alpha_label", "alpha_quantity"}, "environment");
    if (!j.contains("type")) throw ConfigError("config: environment section is missing 'type'");
    EnvironmentSpec env;
    env.type = environment_from_string(j.at("type").get<std::string>());
    env.alpha_label = get_or<double>(j, "alpha_label", 1.0);
    env.alpha_quantity = get_or<double>(j, "alpha_quantity", 1.0);
    if (!(env.alpha_label > 0.0) || !(env.alpha_quantity > 0.0)) {
        throw ConfigError("config: environment alphas must be > 0");
    }
    return env;
}

inline Strategy parse_strategy_entry(const nlohmann::json& j) {
    if (j.is_string()) return Strategy::parse(j.get<std::string>());
    if (j.is_object() && j.size() == 1 && j.contains("fliu_fixed")) {
        Strategy s;
        s.kind = StrategyKind::FliuFixed;
        s.gamma = j.at("fliu_fixed").get<double>();
        s.validate();
        return s;
    }
    throw ConfigError("config: strategy entries must be strings or {\"fliu_fixed\": gamma}");
}

} // namespace detail

inline ExperimentConfig parse_config_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    detail::reject_unknown_keys(
        j,
        {"dataset", "environment", "clients", "strategies", "model", "rounds", "epochs",
         "batch_size", "learning_rate", "lr_decay", "repetitions", "master_seed", "epsilons",
         "aggregation", "reset_optimizer_on_update", "clt_pseudo_global", "threads", "output_dir"},
        "top level");
    if (!j.contains("dataset")) throw ConfigError("config: missing required section 'dataset'");
    if (!j.contains("environment")) throw ConfigError("config: missing required section 'environment'");

    ExperimentConfig cfg;
    cfg.dataset = detail::parse_dataset(j.at("dataset"));
    cfg.environment = detail::parse_environment(j.at("environment"));
    cfg.clients = detail::get_or<size_t>(j, "clients", cfg.clients);
    if (j.contains("strategies")) {
        cfg.strategies.clear();
        for (const auto& entry : j.at("strategies")) {
            cfg.strategies.push_back(detail::parse_strategy_entry(entry));
        }
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::reject_unknown_keys(m, {"architecture", "hidden"}, "model");
        const std::string arch = detail::get_or<std::string>(m, "architecture", "mlp");
        if (arch == "logistic") {
            cfg.architecture = Architecture::Logistic;
            cfg.hidden.clear();
        } else if (arch == "mlp") {
            cfg.architecture = Architecture::Mlp;
            cfg.hidden = detail::get_or<std::vector<size_t>>(m, "hidden", cfg.hidden);
        } else {
            throw ConfigError("config: unknown model architecture '" + arch + "'");
        }
    }
    cfg.rounds = detail::get_or<size_t>(j, "rounds", cfg.rounds);
    cfg.epochs = detail::get_or<size_t>(j, "epochs", cfg.epochs);
    cfg.batch_size = detail::get_or<size_t>(j, "batch_size", cfg.batch_size);
    cfg.learning_rate = detail::get_or<double>(j, "learning_rate", cfg.learning_rate);
    cfg.lr_decay = detail::get_or<double>(j, "lr_decay", cfg.lr_decay);
    cfg.repetitions = detail::get_or<size_t>(j, "repetitions", cfg.repetitions);
    cfg.master_seed = detail::get_or<uint64_t>(j, "master_seed", cfg.master_seed);
    cfg.epsilons = detail::get_or<std::vector<double>>(j, "epsilons", cfg.epsilons);
    if (j.contains("aggregation")) {
        const std::string agg = j.at("aggregation").get<std::string>();
        if (agg == "uniform") {
            cfg.aggregation = AggregationMode::Uniform;
        } else if (agg == "sample_weighted") {
            cfg.aggregation = AggregationMode::SampleWeighted;
        } else {
            throw ConfigError("config: unknown aggregation '" + agg + "'");
        }
    }
    cfg.reset_optimizer_on_update = detail::get_or<bool>(j, "reset_optimizer_on_update", false);
    cfg.clt_pseudo_global = detail::get_or<bool>(j, "clt_pseudo_global", false);
    cfg.threads = detail::get_or<unsigned>(j, "threads", cfg.threads);
    cfg.output_dir = detail::get_or<std::string>(j, "output_dir", cfg.output_dir);
    for (auto& s : cfg.strategies) s.aggregation = cfg.aggregation;
    cfg.validate();
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON in '") + path + "': " + e.what());
    }
    return parse_config_json(j);
}

inline nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    nlohmann::json d;
    switch (dataset.kind) {
        case DatasetConfig::Kind::Synthetic:
            d["type"] = "synthetic";
            d["classes"] = dataset.classes;
            d["train_per_class"] = dataset.train_per_class;
            d["test_per_class"] = dataset.test_per_class;
            d["dim"] = dataset.dim;
            d["separation"] = dataset.separation;
            d["seed"] = dataset.data_seed;
            break;
        case DatasetConfig::Kind::Mnist:
            d["type"] = "mnist";
            d["train_images"] = dataset.train_images;
            d["train_labels"] = dataset.train_labels;
            d["test_images"] = dataset.test_images;
            d["test_labels"] = dataset.test_labels;
            break;
        case DatasetConfig::Kind::Cifar10:
            d["type"] = "cifar10";
            d["train_batches"] = dataset.train_batches;
            d["test_batches"] = dataset.test_batches;
            break;
    }
    j["dataset"] = d;
    j["environment"] = {{"type", to_string(environment.type)},
                        {"alpha_label", environment.alpha_label},
                        {"alpha_quantity", environment.alpha_quantity}};
    j["clients"] = clients;
    auto& strat = j["strategies"] = nlohmann::json::array();
    for (const auto& s : strategies) {
        if (s.kind == StrategyKind::FliuFixed) {
            strat.push_back(nlohmann::json{{"fliu_fixed", s.gamma}});
        } else {
            strat.push_back(s.name());
        }
    }
    j["model"] = {{"architecture", architecture == Architecture::Logistic ? "logistic" : "mlp"},
                  {"hidden", hidden}};
    j["rounds"] = rounds;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["lr_decay"] = lr_decay;
    j["repetitions"] = repetitions;
    j["master_seed"] = master_seed;
    j["epsilons"] = epsilons;
    j["aggregation"] = aggregation == AggregationMode::Uniform ? "uniform" : "sample_weighted";
    j["reset_optimizer_on_update"] = reset_optimizer_on_update;
    j["clt_pseudo_global"] = clt_pseudo_global;
    j["threads"] = threads;
    j["output_dir"] = output_dir;
    return j;
}

// Loads (or generates) the train/test pair named by the config.
struct LoadedData {
    LabeledDataset train;
    LabeledDataset test;
};

inline LoadedData load_datasets(const DatasetConfig& cfg) {
    LoadedData data;
    switch (cfg.kind) {
        case DatasetConfig::Kind::Synthetic: {
            auto split = generate_synthetic_split(cfg.classes, cfg.train_per_class,
                                                  cfg.test_per_class, cfg.dim, cfg.separation,
                                                  cfg.data_seed);
            data.train = std::move(split.train);
            data.test = std::move(split.test);
            break;
        }
        case DatasetConfig::Kind::Mnist:
            data.train = load_idx(cfg.train_images, cfg.train_labels);
            data.test = load_idx(cfg.test_images, cfg.test_labels);
            break;
        case DatasetConfig::Kind::Cifar10:
            data.train = load_cifar10(cfg.train_batches);
            data.test = load_cifar10(cfg.test_batches);
            break;
    }
    return data;
}

inline ModelSpec model_spec_for(const ExperimentConfig& cfg, const LabeledDataset& train) {
    ModelSpec spec;
    spec.architecture = cfg.architecture;
    spec.input_dim = train.dim;
    spec.hidden_sizes = cfg.hidden;
    spec.num_classes = train.num_classes;
    spec.validate();
    return spec;
}

// Full per-repetition round histories for one strategy.
struct StrategyRun {
    Strategy strategy;
    std::vector<std::vector<RoundRecord>> repetitions;
};

struct ExperimentResult {
    ExperimentConfig config;
    LoadedData data;
    std::vector<Partition> partitions;  // one per repetition
    std::vector<StrategyRun> runs;      // config order
};

// Sample mean and standard deviation (divisor N-1; zero for N=1).
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) throw InvalidArgumentError("mean_std: empty sample");
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

// Called after each (repetition, strategy) run completes; lets the CLI log
// progress and flush partial results if a later run aborts.
using ProgressSink =
    std::function<void(size_t repetition, const Strategy& strategy, const std::vector<RoundRecord>&)>;

// Runs every strategy N times. Within a repetition all strategies share the
// same partition, the same initial parameters and the same client RNG
// streams, so arm comparisons are paired. When `fixed_partition` is given
// (replay), it is used for every repetition instead of a fresh build.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const ProgressSink& sink = nullptr,
                                       const Partition* fixed_partition = nullptr) {
    cfg.validate();
    ExperimentResult result;
    result.config = cfg;
    result.data = load_datasets(cfg.dataset);
    const ModelSpec spec = model_spec_for(cfg, result.data.train);
    const RoundHyper hyper = cfg.round_hyper();

    result.runs.resize(cfg.strategies.size());
    for (size_t s = 0; s < cfg.strategies.size(); ++s) {
        result.runs[s].strategy = cfg.strategies[s];
    }

    for (size_t rep = 0; rep < cfg.repetitions; ++rep) {
        const uint64_t partition_seed = derive_seed(cfg.master_seed, "rep", static_cast<uint64_t>(rep), "partition");
        const uint64_t init_seed = derive_seed(cfg.master_seed, "rep", static_cast<uint64_t>(rep), "init");
        const uint64_t run_seed = derive_seed(cfg.master_seed, "rep", static_cast<uint64_t>(rep), "training");

        const Partition partition =
            fixed_partition ? *fixed_partition
                            : build_partition(result.data.train, result.data.test, cfg.environment,
                                              cfg.clients, partition_seed);
        if (fixed_partition) {
            partition.validate(result.data.train.size(), result.data.test.size());
        }
        const ParamVector theta0 = init_params(spec, init_seed);

        for (size_t s = 0; s < cfg.strategies.size(); ++s) {
            FederationState state = setup_federation(spec, partition, cfg.strategies[s], theta0,
                                                     cfg.learning_rate, run_seed);
            auto history = run_training(state, cfg.strategies[s], hyper, spec, result.data.train,
                                        result.data.test, partition, cfg.rounds);
            if (sink) sink(rep, cfg.strategies[s], history);
            result.runs[s].repetitions.push_back(std::move(history));
        }
        result.partitions.push_back(partition);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Result files. Accuracies are fractions in rounds.csv and the curve files;
// summary.csv multiplies them by 100 to match percentage tables. rho values
// are client counts in every file. All numbers use '.' as decimal separator
// and 12 significant digits so re-parsing reproduces the in-memory values.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string epsilon_suffix(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", eps);
    return buf;
}

// (metric name, value) pairs of one stage snapshot, fixed order.
inline std::vector<std::pair<std::string, double>> stage_metrics(const StageSnapshot& snap,
                                                                 const std::vector<double>& epsilons) {
    std::vector<std::pair<std::string, double>> out;
    if (snap.stage == Stage::G) {
        out.emplace_back("acc_global", snap.global_model_global.value());
        return out;
    }
    out.emplace_back("acc_local", snap.acc_local_mean);
    out.emplace_back("acc_global", snap.acc_global_mean);
    out.emplace_back("acc", snap.acc_combined);
    for (size_t e = 0; e < epsilons.size(); ++e) {
        out.emplace_back("rho_" + epsilon_suffix(epsilons[e]), static_cast<double>(snap.rho[e]));
    }
    return out;
}

inline std::vector<const StageSnapshot*> present_stages(const RoundRecord& rec) {
    std::vector<const StageSnapshot*> stages;
    if (rec.g) stages.push_back(&*rec.g);
    if (rec.l1) stages.push_back(&*rec.l1);
    if (rec.l2) stages.push_back(&*rec.l2);
    return stages;
}

} // namespace detail

// Long-format per-round file: repetition,strategy,round,stage,metric,value.
inline void write_rounds_csv(const std::string& path, const std::vector<StrategyRun>& runs,
                             const std::vector<double>& epsilons) {
    std::ofstream out(path);
    if (!out) throw SerializationError("write_rounds_csv: cannot open '" + path + "'");
    out << "repetition,strategy,round,stage,metric,value\n";
    for (const auto& run : runs) {
        const std::string name = run.strategy.name();
        for (size_t rep = 0; rep < run.repetitions.size(); ++rep) {
            for (const auto& rec : run.repetitions[rep]) {
                for (const StageSnapshot* snap : detail::present_stages(rec)) {
                    for (const auto& [metric, value] : detail::stage_metrics(*snap, epsilons)) {
                        out << rep << ',' << name << ',' << rec.round << ',' << to_string(snap->stage)
                            << ',' << metric << ',' << detail::format_value(value) << '\n';
                    }
                }
            }
        }
    }
}

// Final-round table: strategy,stage,metric,mean,std across repetitions.
// Accuracy metrics are reported in percent.
inline void write_summary_csv(const std::string& path, const std::vector<StrategyRun>& runs,
                              const std::vector<double>& epsilons) {
    std::ofstream out(path);
    if (!out) throw SerializationError("write_summary_csv: cannot open '" + path + "'");
    out << "strategy,stage,metric,mean,std\n";
    for (const auto& run : runs) {
        if (run.repetitions.empty() || run.repetitions.front().empty()) continue;
        const std::string name = run.strategy.name();
        const auto stages = detail::present_stages(run.repetitions.front().back());
        for (const StageSnapshot* stage_tpl : stages) {
            const auto metric_names = detail::stage_metrics(*stage_tpl, epsilons);
            for (size_t m = 0; m < metric_names.size(); ++m) {
                std::vector<double> values;
                values.reserve(run.repetitions.size());
                for (const auto& history : run.repetitions) {
                    const auto reps_stages = detail::present_stages(history.back());
                    for (const StageSnapshot* snap : reps_stages) {
                        if (snap->stage == stage_tpl->stage) {
                            values.push_back(detail::stage_metrics(*snap, epsilons)[m].second);
                        }
                    }
                }
                auto [mean, sd] = mean_std(values);
                const bool is_accuracy = metric_names[m].first.rfind("acc", 0) == 0;
                if (is_accuracy) {
                    mean *= 100.0;
                    sd *= 100.0;
                }
                out << name << ',' << to_string(stage_tpl->stage) << ',' << metric_names[m].first
                    << ',' << detail::format_value(mean) << ',' << detail::format_value(sd) << '\n';
            }
        }
    }
}

// Round-indexed mean/std per (strategy, stage, metric), one file each, for
// plotting learning curves.
inline void write_curve_csvs(const std::string& dir, const std::vector<StrategyRun>& runs,
                             const std::vector<double>& epsilons) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& run : runs) {
        if (run.repetitions.empty() || run.repetitions.front().empty()) continue;
        const std::string name = run.strategy.name();
        const size_t rounds = run.repetitions.front().size();
        for (const StageSnapshot* stage_tpl : detail::present_stages(run.repetitions.front().front())) {
            const auto metric_names = detail::stage_metrics(*stage_tpl, epsilons);
            for (size_t m = 0; m < metric_names.size(); ++m) {
                const std::string path = dir + "/" + name + "_" + to_string(stage_tpl->stage) + "_" +
                                         metric_names[m].first + ".csv";
                std::ofstream out(path);
                if (!out) throw SerializationError("write_curve_csvs: cannot open '" + path + "'");
                out << "round,mean,std\n";
                for (size_t r = 0; r < rounds; ++r) {
                    std::vector<double> values;
                    for (const auto& history : run.repetitions) {
                        for (const StageSnapshot* snap : detail::present_stages(history[r])) {
                            if (snap->stage == stage_tpl->stage) {
                                values.push_back(detail::stage_metrics(*snap, epsilons)[m].second);
                            }
                        }
                    }
                    auto [mean, sd] = mean_std(values);
                    out << run.repetitions.front()[r].round << ',' << detail::format_value(mean)
                        << ',' << detail::format_value(sd) << '\n';
                }
            }
        }
    }
}

// Writes rounds.csv, summary.csv, curves/, the per-repetition partition
// replay files and a config.resolved echo into output_dir.
inline void emit_results(const ExperimentResult& result, const std::string& output_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(output_dir);
    const auto& eps = result.config.epsilons;
    write_rounds_csv(output_dir + "/rounds.csv", result.runs, eps);
    write_summary_csv(output_dir + "/summary.csv", result.runs, eps);
    write_curve_csvs(output_dir + "/curves", result.runs, eps);
    for (size_t rep = 0; rep < result.partitions.size(); ++rep) {
        save_partition(result.partitions[rep], result.data.train, result.data.test,
                       output_dir + "/partition_" + std::to_string(rep) + ".json");
    }
    std::ofstream cfg(output_dir + "/config.resolved");
    if (!cfg) throw SerializationError("emit_results: cannot open config.resolved");
    cfg << result.config.to_json().dump(1, '\t') << "\n";
}

} // namespace fliu
