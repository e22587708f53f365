#include <doctest.h>

#include "cal/config.hpp"
#include "cal/error.hpp"

using namespace cal;

TEST_CASE("defaults follow the standard protocol") {
    const LoopConfig c;
    CHECK(c.budget_fraction == 0.15);
    CHECK(c.init_fraction == 0.01);
    CHECK(c.acquisition_fraction == 0.02);
    CHECK(c.seeds.size() == 5);
    CHECK(c.acquisition.k == 10);
    CHECK(c.classifier.batch_size == 16);
    CHECK(c.classifier.evals_per_epoch == 5);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("budget arithmetic for a pool of 1000") {
    const auto plan = plan_budget(LoopConfig{}, 1000);
    CHECK(plan.initial == 10);
    CHECK(plan.batch == 20);
    CHECK(plan.budget == 150);
    CHECK(plan.iterations == 7);
    CHECK(plan.initial + plan.iterations * plan.batch == 150);
}

TEST_CASE("budget arithmetic edge cases") {
    LoopConfig c;
    CHECK_THROWS_AS(plan_budget(c, 20), ConfigError);  // b rounds to 0
    c.budget_fraction = 0.02;
    c.acquisition_fraction = 0.01;
    c.init_fraction = 0.01;
    CHECK(plan_budget(c, 1000).iterations == 1);
    // residual budget below b is not spent
    LoopConfig r;
    r.budget_fraction = 0.16;
    CHECK(plan_budget(r, 1000).iterations == 7);
}

TEST_CASE("validation of fractions and seeds") {
    LoopConfig c;
    c.init_fraction = 0.1;
    c.acquisition_fraction = 0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.budget_fraction = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.seeds.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.acquisition.encoding = "nonsense";
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("parse_config reads key = value lines") {
    const auto c = parse_config(
        "# comment\n"
        "dataset = data/d.jsonl\n"
        "features=/abs/f.fmat   # trailing comment\n"
        "space.surprisal = s.fmat\n"
        "classes = 4\n"
        "strategy = cal\n"
        "cal_direction = argmin\n"
        "cal_pooling = median\n"
        "seeds = 7, 8\n"
        "hidden_dim = 16\n"
        "learning_rate = 0.01\n"
        "kmeans_normalize = false\n"
        "repr_mode = literal\n",
        LoopConfig{}, "/base");
    CHECK(c.dataset == std::filesystem::path("/base/data/d.jsonl"));
    CHECK(c.features == std::filesystem::path("/abs/f.fmat"));
    CHECK(c.extra_spaces.at("surprisal") == std::filesystem::path("/base/s.fmat"));
    CHECK(c.classes == 4);
    CHECK(c.acquisition.cal_direction == CalDirection::argmin);
    CHECK(c.acquisition.cal_pooling == CalPooling::median);
    CHECK(c.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(c.classifier.hidden_dim == 16);
    CHECK(c.classifier.learning_rate == 0.01);
    CHECK_FALSE(c.acquisition.kmeans_normalize);
    CHECK(c.repr_mode == ReprMode::literal);
    CHECK(c.strategy_label() == "cal-opposite-median");
}

TEST_CASE("parse errors carry the line number") {
    try {
        parse_config("classes = 2\nbogus_key = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("k = ten\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("learning_rate = nan\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("kmeans_normalize = maybe\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("strategy = coreset\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);
}

TEST_CASE("config entries round-trip through apply_setting") {
    LoopConfig c;
    c.dataset = "/d.jsonl";
    c.classes = 3;
    c.acquisition.strategy = Strategy::badge;
    c.classifier.learning_rate = 0.1 + 0.2;  // not exactly representable in short decimal
    c.seeds = {11, 12};
    c.extra_spaces["x"] = "/x.fmat";
    c.label = "mine";
    LoopConfig back;
    for (const auto& [k, v] : config_entries(c)) apply_setting(back, k, v);
    CHECK(config_entries(back) == config_entries(c));
    CHECK(back.classifier.learning_rate == c.classifier.learning_rate);
    CHECK(back.strategy_label() == "mine");
}

TEST_CASE("strategy labels") {
    LoopConfig c;
    CHECK(c.strategy_label() == "cal");
    c.acquisition.cal_neighborhood = CalNeighborhood::per_labeled;
    c.acquisition.cal_scoring = CalScoring::cross_entropy;
    CHECK(c.strategy_label() == "cal-per_labeled-ce");
    c = {};
    c.acquisition.encoding = "external:tfidf";
    CHECK(c.strategy_label() == "cal-external:tfidf");
    c.acquisition.strategy = Strategy::entropy;
    CHECK(c.strategy_label() == "entropy");
}
