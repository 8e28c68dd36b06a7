#include <catch_amalgamated.hpp>

#include "equipact/smoothing.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace equipact;
using Catch::Approx;

namespace {

constexpr auto M = Activity::Major;
constexpr auto m = Activity::Minor;

LabelSequence seq(std::vector<Activity> labels) {
    LabelSequence s;
    s.labels = std::move(labels);
    return s;
}

LabelSequence with_probs(const std::vector<double>& probs) {
    LabelSequence s;
    s.probs = probs;
    for (const double p : probs) s.labels.push_back(p >= 0.5 ? M : m);
    return s;
}

TransitionModel model(double stay_major, double stay_minor, double pi_major) {
    TransitionModel tm;
    tm.transition = {{{stay_major, 1.0 - stay_major}, {1.0 - stay_minor, stay_minor}}};
    tm.initial = {pi_major, 1.0 - pi_major};
    return tm;
}

// Whole runs only, so the last run is as long as the others.
std::vector<Activity> long_runs(testing::Gen& g, std::size_t n_runs, std::size_t min_run, std::size_t max_run) {
    std::vector<Activity> out;
    auto state = g.activity();
    for (std::size_t r = 0; r < n_runs; ++r) {
        out.insert(out.end(), g.index(min_run, max_run), state);
        state = state == M ? m : M;
    }
    return out;
}

}  // namespace

TEST_CASE("window filter examples") {
    REQUIRE(window_filter(seq({M, M, m, M, M}), 2).labels == std::vector{M, M, M, M, M});
    // t=0 {m,M} tie, t=1 {M,M,m}, t=2 {M,m,m,M} tie, t=3 {m,M,M,m} tie, t=4 {M,m,m}, t=5 {m,M} tie
    REQUIRE(window_filter(seq({M, m, M, m, M, m}), 2).labels == std::vector{M, M, M, m, m, m});
    for (const std::size_t w : {1, 2, 6, 50}) {
        REQUIRE(window_filter(seq(std::vector(17, m)), w).labels == std::vector(17, m));
        REQUIRE(window_filter(seq(std::vector(9, M)), w).labels == std::vector(9, M));
    }
    REQUIRE(window_filter(seq({}), 2).labels.empty());
    REQUIRE(window_filter(seq({m}), 2).labels == std::vector{m});
    REQUIRE_THROWS_AS(window_filter(seq({M, m}), 0), InvalidArgument);
}

TEST_CASE("window filter passes scores and probabilities through") {
    LabelSequence s = seq({M, m, M, M, m});
    s.scores = {1.0, -2.0, 3.0, 4.0, -5.0};
    s.probs = {0.9, 0.1, 0.8, 0.7, 0.2};
    const auto out = window_filter(s, 1);
    REQUIRE(out.scores == s.scores);
    REQUIRE(out.probs == s.probs);
}

TEST_CASE("window filter matches the rule-by-rule reference", "[property]") {
    testing::Gen g(41);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto labels = g.labels(g.index(0, 200), g.uniform(0.1, 0.9));
        const std::size_t w = g.index(1, 8);
        REQUIRE(window_filter(seq(labels), w).labels == oracle::window_filter(labels, w));
    }
}

TEST_CASE("window filter only emits labels present in the window", "[property]") {
    testing::Gen g(42);
    for (int trial = 0; trial < 500; ++trial) {
        const auto labels = g.labels(g.index(1, 120), g.uniform(0.0, 1.0));
        const std::size_t w = g.index(1, 7);
        const auto out = window_filter(seq(labels), w).labels;
        REQUIRE(out.size() == labels.size());
        for (std::size_t t = 0; t < labels.size(); ++t) {
            const std::size_t lo = t >= w ? t - w : 0, hi = std::min(labels.size() - 1, t + w);
            bool seen = false;
            for (std::size_t k = lo; k <= hi; ++k) seen |= labels[k] == out[t];
            REQUIRE(seen);
        }
    }
}

TEST_CASE("sequences with runs longer than w are fixed points", "[property]") {
    testing::Gen g(43);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t w = g.index(1, 8);
        const auto labels = long_runs(g, g.index(1, 12), w + 1, 3 * w + 4);
        const auto once = window_filter(seq(labels), w);
        REQUIRE(once.labels == labels);
        REQUIRE(window_filter(once, w).labels == once.labels);
    }
}

TEST_CASE("transition estimation examples") {
    auto tm = estimate_transitions(seq({M, M, M, m}));
    REQUIRE(tm.transition[0][0] == Approx(0.6));
    REQUIRE(tm.transition[0][1] == Approx(0.4));
    REQUIRE(tm.transition[1][0] == 0.5);
    REQUIRE(tm.initial[0] == Approx(4.0 / 6.0));

    tm = estimate_transitions(seq(std::vector(11, M)));
    REQUIRE(tm.transition[0][0] == Approx(11.0 / 12.0));
    REQUIRE(tm.transition[1][0] == 0.5);
    REQUIRE(tm.transition[1][1] == 0.5);

    // Runs are independent: no transition is counted across the join.
    const std::vector<std::vector<Activity>> runs = {{M, M}, {m, m}};
    tm = estimate_transitions(runs);
    REQUIRE(tm.transition[0][0] == Approx(2.0 / 3.0));
    REQUIRE(tm.transition[1][1] == Approx(2.0 / 3.0));

    REQUIRE_THROWS_AS(estimate_transitions(seq({M})), InvalidArgument);
}

TEST_CASE("estimated transitions are stochastic and positive", "[property]") {
    testing::Gen g(44);
    for (int trial = 0; trial < 500; ++trial) {
        const auto tm = estimate_transitions(seq(g.labels(g.index(2, 300), g.uniform())));
        for (const auto& row : tm.transition) {
            REQUIRE(std::abs(row[0] + row[1] - 1.0) <= 1e-12);
            REQUIRE(row[0] > 0.0);
            REQUIRE(row[1] > 0.0);
        }
        REQUIRE(std::abs(tm.initial[0] + tm.initial[1] - 1.0) <= 1e-12);
    }
}

TEST_CASE("Markov-chain filter examples") {
    SECTION("uninformative emissions follow the initial distribution") {
        const auto in = with_probs(std::vector(20, 0.5));
        REQUIRE(mcf(in, model(0.99, 0.99, 0.7)).labels == std::vector(20, M));
        REQUIRE(mcf(in, model(0.99, 0.99, 0.3)).labels == std::vector(20, m));
    }
    SECTION("a single weak dip is absorbed") {
        REQUIRE(mcf(with_probs({0.9, 0.4, 0.9}), model(0.8, 0.8, 0.5)).labels == std::vector{M, M, M});
    }
    SECTION("uniform transitions threshold at one half") {
        testing::Gen g(45);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> probs(g.index(1, 60));
            for (auto& p : probs) p = g.coin() ? g.uniform(0.0, 0.49) : g.uniform(0.51, 1.0);
            const auto in = with_probs(probs);
            REQUIRE(mcf(in, model(0.5, 0.5, 0.5)).labels == in.labels);
        }
    }
    SECTION("exact ties keep the input label") {
        auto in = with_probs(std::vector(5, 0.5));
        in.labels = {M, m, M, m, m};
        REQUIRE(mcf(in, model(0.5, 0.5, 0.5)).labels == in.labels);
    }
    SECTION("errors and edge cases") {
        REQUIRE(mcf(with_probs({}), model(0.9, 0.9, 0.5)).labels.empty());
        REQUIRE_THROWS_AS(mcf(seq({M, m}), model(0.9, 0.9, 0.5)), InvalidArgument);
        auto bad = with_probs({0.2, 1.5});
        REQUIRE_THROWS_AS(mcf(bad, model(0.9, 0.9, 0.5)), InvalidArgument);
        const auto certain = with_probs({1.0, 0.0, 1.0});
        REQUIRE(mcf(certain, model(0.99, 0.99, 0.5)).labels == std::vector{M, m, M});
    }
}

TEST_CASE("Markov-chain filter equals exhaustive path search", "[property]") {
    testing::Gen g(46);
    for (std::size_t n = 1; n <= 12; ++n) {
        for (int trial = 0; trial < 60; ++trial) {
            std::vector<double> probs(n);
            for (auto& p : probs) p = g.coin(0.1) ? (g.coin() ? 0.0 : 1.0) : g.uniform();
            const auto tm = model(g.uniform(0.01, 0.99), g.uniform(0.01, 0.99), g.uniform(0.01, 0.99));
            const auto got = mcf(with_probs(probs), tm).labels;
            REQUIRE(got == oracle::exhaustive_map(probs, tm.transition, tm.initial, kEmissionFloor));
        }
    }
}

// Symmetric sticky chain with a flat start; an informative prior or uneven
// stay probabilities can make one early switch worthwhile.
TEST_CASE("flat emissions with sticky transitions give a constant path", "[property]") {
    testing::Gen g(47);
    for (int trial = 0; trial < 200; ++trial) {
        const double p = g.uniform(0.05, 0.95), stay = g.uniform(0.6, 0.99);
        const auto tm = model(stay, stay, 0.5);
        const auto out = mcf(with_probs(std::vector(g.index(1, 100), p)), tm).labels;
        REQUIRE(std::all_of(out.begin(), out.end(), [&](Activity a) { return a == out.front(); }));
    }
}

TEST_CASE("smoothing chain preserves length and order of stages", "[property]") {
    testing::Gen g(48);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> probs(g.index(0, 300));
        for (auto& p : probs) p = g.uniform();
        const auto raw = with_probs(probs);
        const auto tm = model(0.9, 0.85, 0.5);
        const auto s = smooth(raw, tm);
        REQUIRE(s.raw.labels == raw.labels);
        REQUIRE(s.swf.labels == window_filter(raw, kSmallWindow).labels);
        REQUIRE(s.bwf.labels == window_filter(s.swf, kBigWindow).labels);
        REQUIRE(s.mcf.labels == mcf(s.bwf, tm).labels);
        for (const auto* st : {&s.swf, &s.bwf, &s.mcf}) {
            REQUIRE(st->size() == raw.size());
            REQUIRE(st->probs == raw.probs);
        }
    }
}
