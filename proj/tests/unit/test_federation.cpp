#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "fliu/dataset.hpp"
#include "fliu/federation.hpp"

using namespace fliu;

namespace {

struct SmallWorld {
    LabeledDataset train = generate_synthetic(5, 40, 6, 4.0, 500);
    LabeledDataset test = generate_synthetic(5, 10, 6, 4.0, 501);
    Partition partition = partition_iid(train, test, 4, 77);
    ModelSpec spec{Architecture::Logistic, 6, {}, 5};
    ParamVector theta0 = init_params(spec, 3);
    RoundHyper hyper;

    SmallWorld() {
        hyper.epochs = 2;
        hyper.batch_size = 16;
    }

    FederationState make(const Strategy& s) const {
        return setup_federation(spec, partition, s, theta0, 0.01, 909);
    }
};

bool same_client_params(const FederationState& a, const FederationState& b) {
    if (a.clients.size() != b.clients.size()) return false;
    for (size_t k = 0; k < a.clients.size(); ++k) {
        if (a.clients[k].params != b.clients[k].params) return false;
    }
    return true;
}

} // namespace

TEST_CASE("gamma_adaptive reproduces all five branches with strict boundaries", "[federation]") {
    // n=60000, K=100: thresholds at 6000, 3000, 600, 300
    CHECK(gamma_adaptive(6001, 60000, 100) == 0.9);
    CHECK(gamma_adaptive(6000, 60000, 100) == 0.75);  // strict: not > 10n/K
    CHECK(gamma_adaptive(3001, 60000, 100) == 0.75);
    CHECK(gamma_adaptive(3000, 60000, 100) == 0.5);
    CHECK(gamma_adaptive(601, 60000, 100) == 0.5);
    CHECK(gamma_adaptive(600, 60000, 100) == 0.25);  // strict: not > n/K
    CHECK(gamma_adaptive(301, 60000, 100) == 0.25);
    CHECK(gamma_adaptive(300, 60000, 100) == 0.1);
    CHECK(gamma_adaptive(100, 60000, 100) == 0.1);

    CHECK_THROWS_AS(gamma_adaptive(0, 100, 10), InvalidArgumentError);
    CHECK_THROWS_AS(gamma_adaptive(101, 100, 10), InvalidArgumentError);
    CHECK_THROWS_AS(gamma_adaptive(10, 100, 0), InvalidArgumentError);
}

TEST_CASE("individualized_update endpoints are exact copies", "[federation]") {
    const ParamVector theta{2.0, -4.0};
    const ParamVector global{6.0, 0.0};

    CHECK(individualized_update(theta, global, 0.0) == global);
    CHECK(individualized_update(theta, global, 1.0) == theta);

    const auto mixed = individualized_update(theta, global, 0.25);
    CHECK(mixed[0] == 5.0);
    CHECK(mixed[1] == -1.0);

    CHECK_THROWS_AS(individualized_update(theta, ParamVector{1.0}, 0.5), DimensionError);
    CHECK_THROWS_AS(individualized_update(theta, global, -0.1), InvalidArgumentError);
    CHECK_THROWS_AS(individualized_update(theta, global, 1.1), InvalidArgumentError);
}

TEST_CASE("interpolated coordinates stay between the endpoints", "[federation]") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        ParamVector theta(16), global(16);
        for (size_t i = 0; i < 16; ++i) {
            theta[i] = rng.normal();
            global[i] = rng.normal();
        }
        const double gamma = rng.uniform();
        const auto mix = individualized_update(theta, global, gamma);
        for (size_t i = 0; i < 16; ++i) {
            CHECK(mix[i] >= std::min(theta[i], global[i]) - 1e-15);
            CHECK(mix[i] <= std::max(theta[i], global[i]) + 1e-15);
        }
    }
}

TEST_CASE("aggregation means client models in id order", "[federation]") {
    const std::vector<ParamVector> two{{1.0, 3.0}, {3.0, 5.0}};
    CHECK(aggregate_uniform(two) == ParamVector{2.0, 4.0});

    const std::vector<ParamVector> one{{7.0, -1.0}};
    CHECK(aggregate_uniform(one) == one[0]);

    const std::vector<ParamVector> same{{2.5}, {2.5}, {2.5}};
    CHECK(aggregate_uniform(same) == ParamVector{2.5});

    CHECK_THROWS_AS(aggregate_uniform({}), InvalidArgumentError);
    CHECK_THROWS_AS(aggregate_uniform({{1.0}, {1.0, 2.0}}), DimensionError);
}

TEST_CASE("weighted aggregation follows n_k / n", "[federation]") {
    const std::vector<ParamVector> params{{0.0}, {4.0}};
    CHECK(aggregate_weighted(params, {3, 1}) == ParamVector{1.0});
    CHECK(aggregate_weighted(params, {5, 5})[0] == Catch::Approx(2.0).margin(1e-12));

    const std::vector<ParamVector> lone{{9.0, 1.0}};
    CHECK(aggregate_weighted(lone, {123}) == lone[0]);

    Rng rng(11);
    std::vector<ParamVector> many(5, ParamVector(8));
    for (auto& p : many) {
        for (auto& v : p) v = rng.normal();
    }
    const auto uniform = aggregate_uniform(many);
    const auto weighted = aggregate_weighted(many, {7, 7, 7, 7, 7});
    for (size_t i = 0; i < 8; ++i) CHECK(weighted[i] == Catch::Approx(uniform[i]).margin(1e-12));

    CHECK_THROWS_AS(aggregate_weighted(params, {1}), DimensionError);
    CHECK_THROWS_AS(aggregate_weighted(params, {1, 0}), InvalidArgumentError);
}

TEST_CASE("strategy parsing and naming", "[federation]") {
    CHECK(Strategy::parse("clt").kind == StrategyKind::CLT);
    CHECK(Strategy::parse("fedavg").kind == StrategyKind::FedAvg);
    CHECK(Strategy::parse("fliu_adaptive").kind == StrategyKind::FliuAdaptive);
    const auto fixed = Strategy::parse("fliu_fixed:0.25");
    CHECK(fixed.kind == StrategyKind::FliuFixed);
    CHECK(fixed.gamma == 0.25);
    CHECK(fixed.name() == "fliu_fixed_0.25");
    CHECK_THROWS_AS(Strategy::parse("fliu_fixed:1.5"), ConfigError);
    CHECK_THROWS_AS(Strategy::parse("sgd"), ConfigError);
}

TEST_CASE("fliu gamma 0 runs bit-identically to fedavg", "[federation]") {
    SmallWorld w;
    auto fedavg = w.make(Strategy{StrategyKind::FedAvg});
    Strategy zero{StrategyKind::FliuFixed};
    zero.gamma = 0.0;
    auto fliu0 = w.make(zero);

    for (int round = 0; round < 3; ++round) {
        const auto ra = run_round(fedavg, Strategy{StrategyKind::FedAvg}, w.hyper, w.spec, w.train,
                                  w.test, w.partition);
        const auto rb = run_round(fliu0, zero, w.hyper, w.spec, w.train, w.test, w.partition);
        CHECK(same_client_params(fedavg, fliu0));
        CHECK(fedavg.server.global_params == fliu0.server.global_params);
        CHECK(ra.l1->per_client_local == rb.l1->per_client_local);
        CHECK(ra.l2->per_client_global == rb.l2->per_client_global);
        CHECK(ra.g->global_model_global == rb.g->global_model_global);
    }
}

TEST_CASE("fliu gamma 1 follows the CLT trajectory bit for bit", "[federation]") {
    SmallWorld w;
    auto clt = w.make(Strategy{StrategyKind::CLT});
    Strategy one{StrategyKind::FliuFixed};
    one.gamma = 1.0;
    auto fliu1 = w.make(one);

    for (int round = 0; round < 3; ++round) {
        const auto ra =
            run_round(clt, Strategy{StrategyKind::CLT}, w.hyper, w.spec, w.train, w.test, w.partition);
        const auto rb = run_round(fliu1, one, w.hyper, w.spec, w.train, w.test, w.partition);
        CHECK(same_client_params(clt, fliu1));
        CHECK(ra.l1->acc_local_mean == rb.l1->acc_local_mean);
        CHECK(ra.l2->acc_global_mean == rb.l2->acc_global_mean);
    }
}

TEST_CASE("CLT reports L1 equal to L2 and skips the global stage", "[federation]") {
    SmallWorld w;
    auto clt = w.make(Strategy{StrategyKind::CLT});
    const auto rec = run_round(clt, Strategy{StrategyKind::CLT}, w.hyper, w.spec, w.train, w.test,
                               w.partition);
    REQUIRE(rec.l1.has_value());
    REQUIRE(rec.l2.has_value());
    CHECK_FALSE(rec.g.has_value());
    CHECK(rec.l1->per_client_local == rec.l2->per_client_local);
    CHECK(rec.l1->per_client_global == rec.l2->per_client_global);
    CHECK(rec.l1->stage == Stage::L1);
    CHECK(rec.l2->stage == Stage::L2);

    // opt-in pseudo-global stage
    RoundHyper with_pseudo = w.hyper;
    with_pseudo.clt_pseudo_global = true;
    auto clt2 = w.make(Strategy{StrategyKind::CLT});
    run_round(clt2, Strategy{StrategyKind::CLT}, w.hyper, w.spec, w.train, w.test, w.partition);
    const auto rec2 = run_round(clt2, Strategy{StrategyKind::CLT}, with_pseudo, w.spec, w.train,
                                w.test, w.partition);
    CHECK(rec2.g.has_value());
}

TEST_CASE("a single client sees L1 equal to its L2 model", "[federation]") {
    LabeledDataset train = generate_synthetic(3, 30, 5, 4.0, 502);
    LabeledDataset test = generate_synthetic(3, 8, 5, 4.0, 503);
    Partition partition = partition_iid(train, test, 1, 5);
    ModelSpec spec{Architecture::Logistic, 5, {}, 3};
    RoundHyper hyper;
    hyper.epochs = 1;
    hyper.batch_size = 8;

    auto state = setup_federation(spec, partition, Strategy{StrategyKind::FedAvg},
                                  init_params(spec, 1), 0.01, 1);
    const auto rec = run_round(state, Strategy{StrategyKind::FedAvg}, hyper, spec, train, test,
                               partition);
    // mean of one model is that model, so stage L1 re-broadcasts it unchanged
    CHECK(rec.l1->per_client_local == rec.l2->per_client_local);
    CHECK(state.clients[0].params == state.server.global_params);
}

TEST_CASE("adam step counts and decay applications match closed form", "[federation]") {
    SmallWorld w;
    auto state = w.make(Strategy{StrategyKind::FedAvg});
    const size_t rounds = 3;
    run_training(state, Strategy{StrategyKind::FedAvg}, w.hyper, w.spec, w.train, w.test,
                 w.partition, rounds);
    for (const auto& c : state.clients) {
        const size_t batches = (c.n_k + w.hyper.batch_size - 1) / w.hyper.batch_size;
        CHECK(c.optimizer.step_count == rounds * w.hyper.epochs * batches);
        CHECK(c.optimizer.learning_rate ==
              Catch::Approx(0.01 * std::pow(w.hyper.lr_decay, static_cast<double>(rounds)))
                  .epsilon(1e-12));
    }
    CHECK(state.server.round == static_cast<int64_t>(rounds));
}

TEST_CASE("run_training with zero rounds is a no-op", "[federation]") {
    SmallWorld w;
    auto state = w.make(Strategy{StrategyKind::FedAvg});
    const auto before = state.clients[0].params;
    const auto history = run_training(state, Strategy{StrategyKind::FedAvg}, w.hyper, w.spec,
                                      w.train, w.test, w.partition, 0);
    CHECK(history.empty());
    CHECK(state.server.round == 0);
    CHECK(state.clients[0].params == before);
}

TEST_CASE("record count equals the round count and reruns are identical", "[federation]") {
    SmallWorld w;
    auto s1 = w.make(Strategy{StrategyKind::FliuAdaptive});
    auto s2 = w.make(Strategy{StrategyKind::FliuAdaptive});
    const auto h1 = run_training(s1, Strategy{StrategyKind::FliuAdaptive}, w.hyper, w.spec, w.train,
                                 w.test, w.partition, 4);
    const auto h2 = run_training(s2, Strategy{StrategyKind::FliuAdaptive}, w.hyper, w.spec, w.train,
                                 w.test, w.partition, 4);
    REQUIRE(h1.size() == 4);
    for (size_t r = 0; r < 4; ++r) {
        CHECK(h1[r].round == static_cast<int64_t>(r + 1));
        CHECK(h1[r].l1->per_client_local == h2[r].l1->per_client_local);
        CHECK(h1[r].g->global_model_global == h2[r].g->global_model_global);
    }
    CHECK(same_client_params(s1, s2));
}

TEST_CASE("training can run clients on several threads without drift", "[federation]") {
    SmallWorld w;
    RoundHyper parallel = w.hyper;
    parallel.threads = 4;
    auto serial = w.make(Strategy{StrategyKind::FedAvg});
    auto threaded = w.make(Strategy{StrategyKind::FedAvg});
    run_training(serial, Strategy{StrategyKind::FedAvg}, w.hyper, w.spec, w.train, w.test,
                 w.partition, 2);
    run_training(threaded, Strategy{StrategyKind::FedAvg}, parallel, w.spec, w.train, w.test,
                 w.partition, 2);
    CHECK(same_client_params(serial, threaded));
}

TEST_CASE("checkpoints restore a federation bit for bit", "[federation]") {
    SmallWorld w;
    const Strategy strat{StrategyKind::FliuAdaptive};
    auto full = w.make(strat);
    run_training(full, strat, w.hyper, w.spec, w.train, w.test, w.partition, 4);

    auto half = w.make(strat);
    run_training(half, strat, w.hyper, w.spec, w.train, w.test, w.partition, 2);

    const auto path = (std::filesystem::temp_directory_path() / "fliu_ckpt_test.bin").string();
    save_checkpoint(path, w.spec, half);
    auto resumed = load_checkpoint(path, w.spec, w.partition);
    CHECK(resumed.server.round == 2);
    CHECK(same_client_params(half, resumed));
    CHECK(resumed.clients[0].optimizer.first_moment == half.clients[0].optimizer.first_moment);

    run_training(resumed, strat, w.hyper, w.spec, w.train, w.test, w.partition, 2);
    CHECK(same_client_params(full, resumed));
    CHECK(resumed.server.global_params == full.server.global_params);

    ModelSpec other{Architecture::Mlp, 6, {4}, 5};
    CHECK_THROWS_AS(load_checkpoint(path, other, w.partition), SerializationError);
    std::filesystem::remove(path);
}
