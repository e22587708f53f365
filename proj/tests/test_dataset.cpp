#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cal/error.hpp"
#include "cal/fmat.hpp"
#include "cal/rng.hpp"
#include "oracles.hpp"

using namespace cal;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

DatasetStore pool_store(const std::vector<int>& labels, int classes) {
    DatasetStore store(classes);
    const auto ids = oracle::make_ids(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) store.add_example({ids[i], labels[i], std::nullopt, Split::pool});
    return store;
}

}  // namespace

TEST_CASE("load_jsonl reads a small file") {
    oracle::TempDir dir("jsonl");
    write_text(dir / "d.jsonl",
               "{\"id\":\"a\",\"label\":0,\"split\":\"pool\",\"text\":\"Hello, World!\"}\n"
               "\n"
               "{\"id\":\"b\",\"label\":1,\"split\":\"validation\"}\n"
               "{\"id\":\"c\",\"label\":0,\"split\":\"test\",\"text\":\"x\"}\n");
    const auto store = load_jsonl(dir / "d.jsonl", 2);
    CHECK(store.size() == 3);
    CHECK(store.label_of("b") == 1);
    CHECK(store.example("a").tokens == std::vector<std::string>{"hello", "world"});
    CHECK_FALSE(store.example("b").tokens.has_value());
    CHECK(store.ids_in(Split::pool) == std::vector<std::string>{"a"});
    CHECK(store.count_in(Split::test) == 1);
}

TEST_CASE("load_jsonl rejects an out-of-range label and names the line") {
    oracle::TempDir dir("jsonl-bad");
    write_text(dir / "d.jsonl",
               "{\"id\":\"a\",\"label\":0,\"split\":\"pool\"}\n"
               "{\"id\":\"b\",\"label\":5,\"split\":\"pool\"}\n");
    try {
        load_jsonl(dir / "d.jsonl", 2);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("load_jsonl error paths") {
    oracle::TempDir dir("jsonl-err");
    SUBCASE("empty file gives an empty store") {
        write_text(dir / "e.jsonl", "");
        CHECK(load_jsonl(dir / "e.jsonl", 2).size() == 0);
    }
    SUBCASE("malformed json") {
        write_text(dir / "m.jsonl", "{\"id\": \n");
        CHECK_THROWS_AS(load_jsonl(dir / "m.jsonl", 2), ParseError);
    }
    SUBCASE("duplicate id") {
        write_text(dir / "d.jsonl",
                   "{\"id\":\"a\",\"label\":0,\"split\":\"pool\"}\n{\"id\":\"a\",\"label\":1,\"split\":\"pool\"}\n");
        CHECK_THROWS_AS(load_jsonl(dir / "d.jsonl", 2), ValidationError);
    }
    SUBCASE("unknown split") {
        write_text(dir / "s.jsonl", "{\"id\":\"a\",\"label\":0,\"split\":\"train\"}\n");
        CHECK_THROWS_AS(load_jsonl(dir / "s.jsonl", 2), Error);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_jsonl(dir / "nope.jsonl", 2), Error); }
    SUBCASE("class count below two") { CHECK_THROWS_AS(DatasetStore(1), ValidationError); }
}

TEST_CASE("write_jsonl round-trips through load_jsonl") {
    oracle::TempDir dir("jsonl-rt");
    DatasetStore store(3);
    store.add_example({"x1", 2, std::vector<std::string>{"a", "b"}, Split::labeled});
    store.add_example({"x0", 0, std::nullopt, Split::pool});
    write_jsonl(dir / "o.jsonl", store);
    const auto back = load_jsonl(dir / "o.jsonl", 3);
    CHECK(back.size() == 2);
    CHECK(back.example("x1").tokens == store.example("x1").tokens);
    CHECK(back.example("x1").split == Split::labeled);
    CHECK(back.label_of("x1") == 2);
}

TEST_CASE("FeatureMatrix validation") {
    CHECK_THROWS_AS(FeatureMatrix(DenseMatrix<float>(2, 2, 0.0f), {"a"}), ValidationError);
    CHECK_THROWS_AS(FeatureMatrix(DenseMatrix<float>(2, 1, 0.0f), {"a", "a"}), ValidationError);
    DenseMatrix<float> bad(1, 2, 0.0f);
    bad(0, 1) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(FeatureMatrix(bad, {"a"}), ValidationError);
    bad(0, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(FeatureMatrix(bad, {"a"}), ValidationError);

    const auto m = oracle::features({{1, 2}, {3, 4}, {5, 6}});
    CHECK(m.row_of("e000001") == 1);
    CHECK_THROWS_AS(m.row_of("zzz"), StateError);
    const std::vector<std::string> pick{"e000002", "e000000"};
    const auto s = m.select(pick);
    CHECK(s.rows() == 2);
    CHECK(s.row(0)[0] == 5.0f);
    CHECK(s.row_id(1) == "e000000");
}

TEST_CASE("feature spaces cover every example exactly once") {
    auto store = pool_store({0, 1, 0}, 2);
    const auto ok = oracle::features({{1}, {2}, {3}});
    store.add_feature_space("input", ok);
    CHECK(store.has_feature_space("input"));
    CHECK_THROWS_AS(store.feature_space("missing"), ConfigError);

    const auto short_m = oracle::features({{1}, {2}});
    CHECK_THROWS_AS(store.add_feature_space("short", short_m), ValidationError);
    const auto other = oracle::features({{1}, {2}, {3}}, "z");
    CHECK_THROWS_AS(store.add_feature_space("other", other), ValidationError);

    const auto& fm = store.feature_space("input");
    std::set<std::string> ids(fm.row_ids().begin(), fm.row_ids().end());
    CHECK(ids.size() == store.size());
    for (const auto& ex : store.examples()) CHECK(ids.contains(ex.id));
}

TEST_CASE("FMAT round-trip is bit-identical") {
    oracle::TempDir dir("fmat");
    std::mt19937_64 gen(7);
    const auto m = oracle::random_features(gen, 5, 3);
    write_feature_matrix(dir / "f.fmat", m);
    CHECK(std::filesystem::exists(dir / "f.index.jsonl"));
    const auto back = load_feature_matrix(dir / "f.fmat");
    CHECK(back == m);
    CHECK(std::memcmp(back.values().values().data(), m.values().values().data(), 15 * sizeof(float)) == 0);
}

TEST_CASE("FMAT payload layout") {
    std::ostringstream out;
    DenseMatrix<float> m(2, 3, std::vector<float>{1, 2, 3, 4, 5, 6});
    write_fmat_payload(out, m);
    const std::string bytes = out.str();
    REQUIRE(bytes.size() == 4 + 4 + 8 + 8 + 6 * 4);
    CHECK(bytes.substr(0, 4) == "FMAT");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[8]) == 2);
    CHECK(static_cast<unsigned char>(bytes[16]) == 3);
    // 1.0f little-endian
    CHECK(static_cast<unsigned char>(bytes[24]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[27]) == 0x3f);

    std::istringstream in(bytes);
    CHECK(read_fmat_payload(in) == m);
}

TEST_CASE("FMAT format errors") {
    std::ostringstream out;
    write_fmat_payload(out, DenseMatrix<float>(2, 3, 1.0f));
    const std::string good = out.str();

    SUBCASE("truncated payload") {
        std::istringstream in(good.substr(0, good.size() - 1));
        CHECK_THROWS_AS(read_fmat_payload(in), FormatError);
    }
    SUBCASE("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_fmat_payload(in), FormatError);
    }
    SUBCASE("bad version") {
        std::string bad = good;
        bad[4] = 9;
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_fmat_payload(in), FormatError);
    }
    SUBCASE("trailing bytes") {
        std::istringstream in(good + "x");
        CHECK_THROWS_AS(read_fmat_payload(in), FormatError);
    }
    SUBCASE("truncated header") {
        std::istringstream in(good.substr(0, 10));
        CHECK_THROWS_AS(read_fmat_payload(in), FormatError);
    }
}

TEST_CASE("FMAT index must exist and match the row count") {
    oracle::TempDir dir("fmat-index");
    const auto m = oracle::features({{1, 2}, {3, 4}});
    write_feature_matrix(dir / "f.fmat", m);
    write_text(dir / "f.index.jsonl", "{\"row\":0,\"id\":\"a\"}\n");
    CHECK_THROWS_AS(load_feature_matrix(dir / "f.fmat"), FormatError);
    std::filesystem::remove(dir / "f.index.jsonl");
    CHECK_THROWS_AS(load_feature_matrix(dir / "f.fmat"), FormatError);
    CHECK(index_path_for("/x/features.fmat") == std::filesystem::path("/x/features.index.jsonl"));
}

TEST_CASE("stratified quotas") {
    SUBCASE("50/50 pool of 100 at 10%") {
        const std::vector<std::size_t> counts{50, 50};
        CHECK(stratified_quotas(counts, 10) == std::vector<std::size_t>{5, 5});
    }
    SUBCASE("largest remainder on (7,3) at one half") {
        const std::vector<std::size_t> counts{7, 3};
        CHECK(stratified_quotas(counts, 5) == std::vector<std::size_t>{4, 1});
    }
    SUBCASE("every class gets at least one") {
        const std::vector<std::size_t> counts{98, 1, 1};
        const auto q = stratified_quotas(counts, 3);
        CHECK(q == std::vector<std::size_t>{1, 1, 1});
    }
    SUBCASE("sizing errors") {
        const std::vector<std::size_t> counts{5, 5};
        CHECK_THROWS_AS(stratified_quotas(counts, 1), SizingError);
        CHECK_THROWS_AS(stratified_quotas(counts, 11), SizingError);
    }
}

TEST_CASE("stratified_initial_sample") {
    SUBCASE("pool of 1000 over 4 balanced classes at 1%") {
        std::vector<int> labels(1000);
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 4);
        auto store = pool_store(labels, 4);
        Rng rng(3);
        const auto drawn = stratified_initial_sample(store, 0.01, rng);
        CHECK(drawn.size() == 10);
        CHECK(store.count_in(Split::labeled) == 10);
        CHECK(store.count_in(Split::pool) == 990);
        std::vector<int> per_class(4, 0);
        for (const auto& id : drawn) per_class[static_cast<std::size_t>(store.label_of(id))]++;
        for (int c : per_class) CHECK((c == 2 || c == 3));
    }
    SUBCASE("same seed reproduces the draw; fraction 1 takes the pool") {
        std::vector<int> labels{0, 1, 0, 1, 1, 0, 0, 1, 0, 0};
        auto a = pool_store(labels, 2);
        auto b = pool_store(labels, 2);
        Rng r1(11), r2(11);
        CHECK(stratified_initial_sample(a, 0.3, r1) == stratified_initial_sample(b, 0.3, r2));
        auto c = pool_store(labels, 2);
        Rng r3(1);
        CHECK(stratified_initial_sample(c, 1.0, r3).size() == labels.size());
        CHECK(c.count_in(Split::pool) == 0);
    }
    SUBCASE("missing class is rejected") {
        auto store = pool_store({0, 0, 0}, 2);
        Rng rng(1);
        CHECK_THROWS_AS(stratified_initial_sample(store, 0.5, rng), ValidationError);
    }
}

TEST_CASE("transfer_to_labeled") {
    std::vector<int> labels(1000, 0);
    for (std::size_t i = 500; i < 1000; ++i) labels[i] = 1;
    auto store = pool_store(labels, 2);
    const auto ids = oracle::make_ids(20);
    transfer_to_labeled(store, ids);
    CHECK(store.count_in(Split::pool) == 980);
    CHECK(store.count_in(Split::labeled) == 20);
    CHECK(store.count_in(Split::pool) + store.count_in(Split::labeled) == 1000);

    const std::vector<std::string> again{ids[0]};
    CHECK_THROWS_AS(transfer_to_labeled(store, again), StateError);
    const std::vector<std::string> unknown{"nope"};
    CHECK_THROWS_AS(transfer_to_labeled(store, unknown), StateError);
    transfer_to_labeled(store, std::vector<std::string>{});
    CHECK(store.count_in(Split::labeled) == 20);
}
