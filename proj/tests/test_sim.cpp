#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "uq/errors.hpp"
#include "uq/inference_sim.hpp"
#include "uq/rng.hpp"

using namespace uq;
using namespace uq::sim;

namespace {

LogitVector lv(std::vector<double> logits) {
    LogitVector v;
    v.logits = std::move(logits);
    for (std::size_t i = 0; i < v.logits.size(); ++i) v.vocab.push_back("t" + std::to_string(i));
    return v;
}

}  // namespace

TEST_CASE("softmax of [2, 1, 0] matches the hand-derived values") {
    const auto d = softmax(lv({2.0, 1.0, 0.0}));
    CHECK(d.probs[0] == doctest::Approx(0.6652409557748219).epsilon(1e-12));
    CHECK(d.probs[1] == doctest::Approx(0.24472847105479764).epsilon(1e-12));
    CHECK(d.probs[2] == doctest::Approx(0.09003057317038046).epsilon(1e-12));
}

TEST_CASE("temperature 2 flattens [2, 1, 0] to the hand-derived values") {
    const auto d = softmax_with_temperature(lv({2.0, 1.0, 0.0}), 2.0);
    CHECK(d.probs[0] == doctest::Approx(0.506480391055654).epsilon(1e-12));
    CHECK(d.probs[1] == doctest::Approx(0.3071958857184984).epsilon(1e-12));
    CHECK(d.probs[2] == doctest::Approx(0.18632372322584756).epsilon(1e-12));
}

TEST_CASE("top-k 2 on softmax([2,1,0]) renormalizes to the hand-derived values") {
    // truncation zeroes the dropped tokens but keeps vocab positions stable
    const auto d = apply_top_k(softmax(lv({2.0, 1.0, 0.0})), 2);
    REQUIRE(d.probs.size() == 3);
    CHECK(d.probs[0] == doctest::Approx(0.7310585786300048).epsilon(1e-12));
    CHECK(d.probs[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
    CHECK(d.probs[2] == 0.0);
    CHECK(d.vocab == std::vector<std::string>{"t0", "t1", "t2"});
}

TEST_CASE("softmax sums to one for arbitrary finite logits") {
    Rng rng(5);
    for (int iter = 0; iter < 200; ++iter) {
        const auto n = 2 + rng.bounded(30);
        std::vector<double> logits;
        for (std::uint64_t i = 0; i < n; ++i) logits.push_back(2000.0 * rng.unit() - 1000.0);
        const auto d = softmax(lv(std::move(logits)));
        double sum = 0.0;
        for (double p : d.probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-9);
        CHECK_NOTHROW(d.validate());
    }
}

TEST_CASE("softmax is invariant under a constant logit shift") {
    const auto a = softmax(lv({1.0, 2.0, 3.0}));
    const auto b = softmax(lv({1001.0, 1002.0, 1003.0}));
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.probs[i] == doctest::Approx(b.probs[i]));
}

TEST_CASE("entropy strictly increases with temperature for non-constant logits") {
    Rng rng(6);
    const std::vector<double> grid = {0.1, 0.5, 1.0, 2.0, 5.0};
    for (int iter = 0; iter < 100; ++iter) {
        const auto n = 2 + rng.bounded(8);
        std::vector<double> logits;
        for (std::uint64_t i = 0; i < n; ++i) logits.push_back(6.0 * rng.unit() - 3.0);
        logits[0] += 0.5;  // guarantee at least two distinct values
        const auto v = lv(std::move(logits));
        double prev = -1.0;
        for (double t : grid) {
            const double h = shannon_entropy(softmax_with_temperature(v, t));
            CHECK(h > prev);
            prev = h;
        }
    }
}

TEST_CASE("temperature zero is a one-hot argmax with lowest-index tie-break") {
    const auto d = softmax_with_temperature(lv({1.0, 3.0, 3.0, 0.0}), 0.0);
    CHECK(d.probs[1] == doctest::Approx(1.0));
    for (std::size_t i : {std::size_t{0}, std::size_t{2}, std::size_t{3}})
        CHECK(d.probs[i] == doctest::Approx(0.0));
    CHECK(shannon_entropy(d) == doctest::Approx(0.0));
}

TEST_CASE("top-k truncation: applying a larger k afterwards is a no-op") {
    Rng rng(8);
    for (int iter = 0; iter < 50; ++iter) {
        const auto n = 3 + rng.bounded(10);
        std::vector<double> logits;
        for (std::uint64_t i = 0; i < n; ++i) logits.push_back(4.0 * rng.unit());
        const auto d = softmax(lv(std::move(logits)));
        const int k = 1 + static_cast<int>(rng.bounded(n - 1));
        const int k2 = std::min<int>(k + 3, static_cast<int>(n));
        const auto once = apply_top_k(d, k);
        const auto twice = apply_top_k(once, k2);
        REQUIRE(once.probs.size() == twice.probs.size());
        std::size_t support = 0;
        for (std::size_t i = 0; i < once.probs.size(); ++i) {
            CHECK(once.probs[i] == doctest::Approx(twice.probs[i]).epsilon(1e-12));
            CHECK(once.vocab[i] == twice.vocab[i]);
            if (once.probs[i] > 0.0) ++support;
        }
        CHECK(support == static_cast<std::size_t>(k));
    }
}

TEST_CASE("top-p keeps the inclusive boundary token and always at least one") {
    NextTokenDistribution d;
    d.probs = {0.5, 0.3, 0.2};
    d.vocab = {"a", "b", "c"};
    const auto exact = apply_top_p(d, 0.8);  // 0.5 + 0.3 == 0.8 inclusive
    CHECK(exact.probs[0] == doctest::Approx(0.625));
    CHECK(exact.probs[1] == doctest::Approx(0.375));
    CHECK(exact.probs[2] == 0.0);
    const auto tiny = apply_top_p(d, 1e-9);
    CHECK(tiny.probs[0] == doctest::Approx(1.0));
    CHECK(tiny.probs[1] == 0.0);
    CHECK(tiny.probs[2] == 0.0);
    const auto all = apply_top_p(d, 1.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(all.probs[i] == doctest::Approx(d.probs[i]));
}

TEST_CASE("seeded sampling from a fair two-token coin is unbiased and deterministic") {
    NextTokenDistribution d;
    d.probs = {0.5, 0.5};
    d.vocab = {"heads", "tails"};
    int heads = 0;
    for (std::uint64_t s = 0; s < 100000; ++s)
        if (sample_token(d, s).token_text == "heads") ++heads;
    const double frac = heads / 100000.0;
    CHECK(frac >= 0.49);
    CHECK(frac <= 0.51);
    // same seed, same draw
    for (std::uint64_t s : {7ULL, 99ULL, 123456ULL})
        CHECK(sample_token(d, s).token_text == sample_token(d, s).token_text);
    const auto t = sample_token(d, 7);
    CHECK(t.logprob == doctest::Approx(std::log(0.5)));
}

TEST_CASE("sampling never selects a zero-mass token") {
    NextTokenDistribution d;
    d.probs = {0.0, 1.0, 0.0};
    d.vocab = {"a", "b", "c"};
    for (std::uint64_t s = 0; s < 500; ++s) CHECK(sample_token(d, s).token_text == "b");
}

TEST_CASE("the pipeline composes temperature, top-k, top-p, then the draw") {
    const auto v = lv({2.0, 1.0, 0.0, -1.0});
    SamplingParams p;
    p.temperature = 2.0;
    p.top_k = 3;
    p.top_p = 0.7;
    const auto expected_dist =
        apply_top_p(apply_top_k(softmax_with_temperature(v, 2.0), 3), 0.7);
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto got = next_token(v, p, s);
        const auto want = sample_token(expected_dist, s);
        CHECK(got.token_text == want.token_text);
        CHECK(got.logprob == doctest::Approx(want.logprob));
    }
}

TEST_CASE("distribution validation rejects malformed inputs") {
    NextTokenDistribution d;
    d.probs = {0.6, 0.6};
    d.vocab = {"a", "b"};
    CHECK_THROWS_AS(d.validate(), InvalidInputError);
    LogitVector v;
    v.logits = {1.0};
    v.vocab = {"a", "b"};
    CHECK_THROWS_AS(v.validate(), InvalidInputError);
    CHECK_THROWS_AS(softmax_with_temperature(lv({1.0, 2.0}), -1.0), InvalidInputError);
    CHECK_THROWS_AS(apply_top_k(softmax(lv({1.0, 2.0})), 0), InvalidInputError);
    CHECK_THROWS_AS(apply_top_p(softmax(lv({1.0, 2.0})), 0.0), InvalidInputError);
}

TEST_CASE("the simulated model generates deterministic table-driven sequences") {
    std::map<std::string, LogitVector> table;
    table["Q"] = lv({5.0, 0.0});          // t0 almost surely
    table["Q t0"] = lv({0.0, 5.0});       // then t1
    table["Q t0 t1"] = lv({-5.0, 10.0});  // then t1 again; "Q t0 t1 t1" ends
    SimulatedModel model(table, 8);
    SamplingParams p;
    p.seed = 1;
    const auto a = model.chat_generate("Q", p, true);
    const auto b = model.chat_generate("Q", p, true);
    CHECK(a.text == b.text);
    REQUIRE(a.tokens.has_value());
    CHECK(a.tokens->size() == a.tokens->size());
    CHECK(a.text == "t0 t1 t1");
    for (std::size_t i = 0; i < a.tokens->size(); ++i)
        CHECK(a.tokens->at(i).position == static_cast<int>(i));
    // different seed may differ, but stays within the table-driven grammar
    SamplingParams q;
    q.seed = 2;
    CHECK_NOTHROW(model.chat_generate("Q", q, true));
}

TEST_CASE("the simulated model respects max_tokens") {
    std::map<std::string, LogitVector> table;
    LogitVector self = lv({1.0});
    // t0 forever: every extended context maps to the same distribution
    SimulatedModel model({{"L", self}, {"L t0", self}, {"L t0 t0", self}}, 2);
    SamplingParams p;
    p.seed = 0;
    const auto r = model.chat_generate("L", p, true);
    CHECK(r.tokens->size() == 2);
}

TEST_CASE("logit tables load from JSON and reject malformed files") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "uq_test_logit_table.json";
    {
        std::ofstream out(path);
        out << R"({"ctx": {"vocab": ["a", "b"], "logits": [1.0, 2.0]}})";
    }
    const auto table = load_logit_table(path.string());
    REQUIRE(table.count("ctx") == 1);
    CHECK(table.at("ctx").vocab[1] == "b");
    CHECK(table.at("ctx").logits[1] == doctest::Approx(2.0));
    {
        std::ofstream out(path);
        out << R"({"ctx": {"vocab": ["a"], "logits": [1.0, 2.0]}})";
    }
    CHECK_THROWS_AS(load_logit_table(path.string()), InvalidInputError);
    fs::remove(path);
}
