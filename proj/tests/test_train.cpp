#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "ferret/data.hpp"
#include "ferret/ferretnet.hpp"
#include "ferret/train.hpp"

namespace fs = std::filesystem;
using namespace ferret;

namespace {

struct CorpusFixture {
    fs::path root;
    CorpusFixture(int per_class, std::uint64_t seed) {
        root = fs::temp_directory_path() / ("ferret_train_test_" + std::to_string(seed));
        fs::remove_all(root);
        data::ToyCorpusConfig cfg;
        cfg.count_per_class = per_class;
        cfg.size = 256;
        cfg.seed = seed;
        data::gen_toy_corpus(root.string(), cfg);
    }
    ~CorpusFixture() { fs::remove_all(root); }
};

}  // namespace

TEST_CASE("training rejects single-class data") {
    CorpusFixture corpus(2, 31);
    fs::remove_all(corpus.root / "fake");
    fs::create_directories(corpus.root / "fake");
    CHECK_THROWS_WITH_AS(data::load_dataset(corpus.root.string()),
                         doctest::Contains("single-class"), std::runtime_error);
}

TEST_CASE("identically seeded runs produce bit-identical parameters") {
    CorpusFixture corpus(4, 32);
    auto ds = data::load_dataset(corpus.root.string());

    train::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.seed = 99;

    net::FerretNet m1(net::variant_from_string("s"), 3, 0.2, cfg.seed);
    net::FerretNet m2(net::variant_from_string("s"), 3, 0.2, cfg.seed);
    auto h1 = train::fit(m1, ds, cfg, true, {});
    auto h2 = train::fit(m2, ds, cfg, true, {});
    REQUIRE(h1.size() == 2);
    CHECK(h1[0].loss == h2[0].loss);
    CHECK(h1[1].loss == h2[1].loss);

    auto s1 = m1.state(), s2 = m2.state();
    REQUIRE(s1.size() == s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i) {
        REQUIRE(s1[i].first == s2[i].first);
        const auto& t1 = *s1[i].second;
        const auto& t2 = *s2[i].second;
        REQUIRE(t1.numel() == t2.numel());
        for (std::size_t j = 0; j < t1.numel(); ++j)
            CHECK(t1[j] == t2[j]);
    }
}

TEST_CASE("overfit sanity: one batch of 8 samples for 200 steps") {
    CorpusFixture corpus(4, 33);
    auto ds = data::load_dataset(corpus.root.string());
    REQUIRE(ds.size() == 8);

    train::TrainConfig cfg;
    cfg.epochs = 200;  // batch == dataset, so one step per epoch
    cfg.batch_size = 8;
    cfg.seed = 7;

    net::FerretNet model(net::variant_from_string("s"), 3, 0.2, cfg.seed);
    auto history = train::fit(model, ds, cfg, true, {});
    REQUIRE(history.size() == 200);
    CHECK(history.back().loss < 0.05);
    CHECK(history.back().loss < history.front().loss);
}

TEST_CASE("evaluate runs the perturbation pipeline end to end") {
    CorpusFixture corpus(3, 34);
    auto ds = data::load_dataset(corpus.root.string());
    net::FerretNet model(net::variant_from_string("s"), 3, 0.2, 5);

    auto plain = train::evaluate(model, ds, true, {}, std::nullopt, 1);
    CHECK(plain.count == 6);
    CHECK(plain.acc >= 0.0);
    CHECK(plain.acc <= 1.0);
    CHECK(plain.ap >= 0.0);
    CHECK(plain.ap <= 1.0);

    for (const char* p : {"jpeg:75", "resize:0.75", "rotate"}) {
        auto r = train::evaluate(model, ds, true, {}, data::parse_perturbation(p), 1);
        CHECK(r.count == 6);
        CHECK(std::isfinite(r.acc));
        CHECK(std::isfinite(r.ap));
    }

    // deterministic under a fixed seed
    auto r1 = train::evaluate(model, ds, true, {}, data::parse_perturbation("rotate"), 42);
    auto r2 = train::evaluate(model, ds, true, {}, data::parse_perturbation("rotate"), 42);
    CHECK(r1.acc == r2.acc);
    CHECK(r1.ap == r2.ap);
}
