// fliusim: deterministic federated-learning simulator.
//
//   fliusim run <config.json> [--seed S] [--out DIR] [--strategies LIST]
//   fliusim replay <partition.json> <config.json> [--seed S] [--out DIR] [--strategies LIST]
//   fliusim inspect <partition.json>
//
// `run` executes the configured experiment; `replay` re-runs it on a stored
// client partition (verifying first that the stored assignment is rebuilt
// bit-identically from its seed); `inspect` prints per-client sample counts
// and label histograms of a stored partition.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fliu/experiment.hpp"

namespace {

std::vector<fliu::Strategy> parse_strategy_list(const std::string& list) {
    std::vector<fliu::Strategy> out;
    size_t start = 0;
    while (start <= list.size()) {
        const size_t comma = list.find(',', start);
        const std::string item = list.substr(start, comma == std::string::npos ? std::string::npos
                                                                               : comma - start);
        if (!item.empty()) out.push_back(fliu::Strategy::parse(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw fliu::ConfigError("--strategies: empty strategy list");
    return out;
}

struct Overrides {
    std::string out_dir;
    std::string strategies;
    uint64_t seed = 0;
    bool seed_set = false;
};

void apply_overrides(fliu::ExperimentConfig& cfg, const Overrides& ov) {
    if (ov.seed_set) cfg.master_seed = ov.seed;
    if (!ov.out_dir.empty()) cfg.output_dir = ov.out_dir;
    if (!ov.strategies.empty()) {
        cfg.strategies = parse_strategy_list(ov.strategies);
        for (auto& s : cfg.strategies) s.aggregation = cfg.aggregation;
    }
    cfg.validate();
}

// Runs the experiment and writes results; on failure, flushes the rounds of
// every already-completed (repetition, strategy) run before exiting.
int run_and_emit(const fliu::ExperimentConfig& cfg, const fliu::Partition* fixed_partition) {
    std::vector<fliu::StrategyRun> completed(cfg.strategies.size());
    for (size_t s = 0; s < cfg.strategies.size(); ++s) completed[s].strategy = cfg.strategies[s];

    auto sink = [&](size_t rep, const fliu::Strategy& strategy,
                    const std::vector<fliu::RoundRecord>& history) {
        for (size_t s = 0; s < cfg.strategies.size(); ++s) {
            if (cfg.strategies[s].name() == strategy.name()) {
                completed[s].repetitions.push_back(history);
            }
        }
        std::string last;
        if (!history.empty() && history.back().l1) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "  L1 acc_local=%.4f acc_global=%.4f",
                          history.back().l1->acc_local_mean, history.back().l1->acc_global_mean);
            last = buf;
        }
        std::cerr << "[rep " << rep << "] " << strategy.name() << " finished" << last << "\n";
    };

    try {
        const fliu::ExperimentResult result = fliu::run_experiment(cfg, sink, fixed_partition);
        fliu::emit_results(result, cfg.output_dir);
        std::cerr << "results written to " << cfg.output_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        bool any = false;
        for (const auto& run : completed) any = any || !run.repetitions.empty();
        if (any) {
            std::filesystem::create_directories(cfg.output_dir);
            fliu::write_rounds_csv(cfg.output_dir + "/rounds.partial.csv", completed, cfg.epsilons);
            std::cerr << "partial results flushed to " << cfg.output_dir << "/rounds.partial.csv\n";
        }
        return 1;
    }
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
    fliu::ExperimentConfig cfg = fliu::parse_config(config_path);
    apply_overrides(cfg, ov);
    return run_and_emit(cfg, nullptr);
}

int cmd_replay(const std::string& partition_path, const std::string& config_path,
               const Overrides& ov) {
    fliu::ExperimentConfig cfg = fliu::parse_config(config_path);
    apply_overrides(cfg, ov);

    const fliu::Partition stored = fliu::load_partition(partition_path);
    if (stored.num_clients() != cfg.clients) {
        std::cerr << "note: config clients=" << cfg.clients << " overridden by partition K="
                  << stored.num_clients() << "\n";
        cfg.clients = stored.num_clients();
    }

    // Verify the stored assignment is exactly reproducible from its recorded
    // environment and seed before training on it.
    const fliu::LoadedData data = fliu::load_datasets(cfg.dataset);
    fliu::EnvironmentSpec env;
    env.type = stored.environment;
    if (stored.alpha_label) env.alpha_label = *stored.alpha_label;
    if (stored.alpha_quantity) env.alpha_quantity = *stored.alpha_quantity;
    const fliu::Partition rebuilt =
        fliu::build_partition(data.train, data.test, env, stored.num_clients(), stored.seed);
    if (rebuilt.train_assignment != stored.train_assignment ||
        rebuilt.test_assignment != stored.test_assignment) {
        std::cerr << "error: partition in '" << partition_path
                  << "' does not match the one rebuilt from its seed; "
                     "was it created from a different dataset?\n";
        return 1;
    }
    std::cerr << "partition verified: rebuilt assignment is identical\n";
    return run_and_emit(cfg, &stored);
}

int cmd_inspect(const std::string& partition_path) {
    std::ifstream in(partition_path);
    if (!in) {
        std::cerr << "error: cannot open '" << partition_path << "'\n";
        return 1;
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        std::cerr << "error: invalid JSON: " << e.what() << "\n";
        return 1;
    }

    std::cout << "environment:    " << j.value("environment", std::string("?")) << "\n";
    if (!j.at("alpha_label").is_null()) std::cout << "alpha_label:    " << j.at("alpha_label").get<double>() << "\n";
    if (!j.at("alpha_quantity").is_null()) std::cout << "alpha_quantity: " << j.at("alpha_quantity").get<double>() << "\n";
    std::cout << "seed:           " << j.at("seed").get<uint64_t>() << "\n";
    std::cout << "clients:        " << j.at("num_clients").get<size_t>() << "\n";
    std::cout << "train/test:     " << j.at("train_size").get<size_t>() << "/"
              << j.at("test_size").get<size_t>() << " samples\n\n";
    std::cout << "client  n_k     train label histogram\n";
    for (const auto& c : j.at("clients")) {
        const auto hist = c.at("train_label_histogram").get<std::vector<int64_t>>();
        int64_t n_k = 0;
        for (int64_t h : hist) n_k += h;
        std::printf("%-7zu %-7lld [", c.at("id").get<size_t>(), static_cast<long long>(n_k));
        for (size_t i = 0; i < hist.size(); ++i) {
            std::printf("%s%lld", i ? " " : "", static_cast<long long>(hist[i]));
        }
        std::printf("]\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fliusim: deterministic federated-learning simulator"};
    app.require_subcommand(1);

    Overrides ov;
    std::string config_path, partition_path;

    auto add_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--seed", ov.seed, "override the master seed")->each([&](const std::string&) {
            ov.seed_set = true;
        });
        cmd->add_option("--out", ov.out_dir, "override the output directory");
        cmd->add_option("--strategies", ov.strategies,
                        "comma-separated strategy list, e.g. fedavg,fliu_fixed:0.25");
    };

    CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    add_overrides(run);

    CLI::App* replay = app.add_subcommand("replay", "re-run an experiment on a stored partition");
    replay->add_option("partition", partition_path, "partition JSON written by a previous run")
        ->required();
    replay->add_option("config", config_path, "experiment config (JSON)")->required();
    add_overrides(replay);

    CLI::App* inspect = app.add_subcommand("inspect", "print per-client label histograms");
    inspect->add_option("partition", partition_path, "partition JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, ov);
        if (replay->parsed()) return cmd_replay(partition_path, config_path, ov);
        if (inspect->parsed()) return cmd_inspect(partition_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
