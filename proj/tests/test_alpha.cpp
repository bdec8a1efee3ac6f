#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vrw/alpha.hpp"

using namespace vrw;

TEST_CASE("integral classification separates the three phases", "[alpha]") {
    {
        WCache cache(parse_weight_spec("nlogn:1"));
        CHECK(estimate_I_alpha(cache, 0.5).status == SumStatus::Converged);
        CHECK(estimate_I_alpha(cache, 0.05).status == SumStatus::Converged);
    }
    {
        WCache cache(parse_weight_spec("linear:1,1"));
        CHECK(estimate_I_alpha(cache, 1.0).status == SumStatus::Diverged);
        CHECK(estimate_I_alpha(cache, 4.0).status == SumStatus::Diverged);
    }
    {
        // critical family, alpha_c = 1; deeper shifts than ~1.5 outrun the
        // invertible range of the cached W and come back Undecided
        WCache cache(parse_weight_spec("nloglog:1,3"));
        CHECK(estimate_I_alpha(cache, 0.5).status == SumStatus::Diverged);
        CHECK(estimate_I_alpha(cache, 1.5).status == SumStatus::Converged);
    }
    {
        // bounded mass: the integral is certified finite by running off W's range
        WCache cache(parse_weight_spec("poly:2,1"));
        CHECK(estimate_I_alpha(cache, 0.5).status == SumStatus::Converged);
    }
}

TEST_CASE("alpha_c verdicts match the known critical parameters", "[alpha]") {
    {
        WCache cache(parse_weight_spec("nlogn:1"));
        auto est = estimate_alpha_c(cache, 0.05);
        CHECK(est.status == AlphaCStatus::Zero);
        CHECK(est.upper <= 0.1);
    }
    {
        WCache cache(parse_weight_spec("linear:1,1"));
        CHECK(estimate_alpha_c(cache, 0.05).status == AlphaCStatus::Infinite);
    }
    {
        WCache cache(parse_weight_spec("const:1"));
        CHECK(estimate_alpha_c(cache, 0.05).status == AlphaCStatus::Infinite);
    }
}

TEST_CASE("alpha_c of the critical family brackets 1", "[alpha][slow]") {
    WCache cache(parse_weight_spec("nloglog:1,3"));
    auto est = estimate_alpha_c(cache, 0.05);
    REQUIRE(est.status == AlphaCStatus::Bracketed);
    CHECK(est.lower < 1.0);
    CHECK(est.upper > 1.0);
    CHECK(est.upper - est.lower <= 0.2);
}

TEST_CASE("scaling identity holds at matched truncation", "[alpha]") {
    // lambda * I_alpha(lambda w) = I_{lambda alpha}(w), term by term
    SeriesBudget budget;
    budget.max_terms = 1 << 16;
    budget.cap = 1.0e6;  // keep both sides summing the full budget
    const double lambda = 2.0, alpha = 0.7;
    WCache cw(parse_weight_spec("linear:1,1"));
    WCache cs(parse_weight_spec("linear:1,1").scaled(lambda));
    auto lhs = estimate_I_alpha(cs, alpha, budget);
    auto rhs = estimate_I_alpha(cw, lambda * alpha, budget);
    REQUIRE(lhs.terms_used == rhs.terms_used);
    CHECK(lambda * lhs.partial_sum ==
          Catch::Approx(rhs.partial_sum).epsilon(1e-6));
}

TEST_CASE("tail sums classify per their closed-form behavior", "[alpha]") {
    WCache cache(parse_weight_spec("nloglog:1,3"));
    CHECK(tail_sum_teclem(cache, 0.5).status == SumStatus::Diverged);
    CHECK(tail_sum_teclem(cache, 2.0).status == SumStatus::Converged);
    CHECK(tail_sum_lemaa(cache, 2.0, 0.0).status == SumStatus::Converged);
    CHECK(tail_sum_lemaa(cache, 2.0, 5.0).status == SumStatus::Converged);
    WCache one(parse_weight_spec("const:1"));
    CHECK(tail_sum_teclem(one, 1.0).status == SumStatus::Diverged);
    CHECK(tail_sum_lemaa(one, 1.0, 0.0).status == SumStatus::Diverged);
    CHECK_THROWS_AS(tail_sum_teclem(cache, -1.0), ConfigError);
    CHECK_THROWS_AS(tail_sum_lemaa(cache, 0.0, 0.0), ConfigError);
}

TEST_CASE("liminf ratio probe reads the factorial staircase limit", "[alpha]") {
    WeightFunction w = parse_weight_spec("factorial-step");
    // w(x)/x dips to 1 at every plateau right edge, in every late window
    for (double lo : {2.0, 1024.0, 1048576.0}) {
        auto r = liminf_ratio_probe(w, lo * 4096.0, lo);
        CHECK(r.min_ratio >= 1.0);
        CHECK(r.min_ratio <= 1.0 + 1e-9);
    }
    // by contrast a superlinear weight's windowed minimum grows without bound
    WeightFunction nl = parse_weight_spec("nlogn:1");
    double prev = 0.0;
    for (double lo : {16.0, 65536.0, 1073741824.0}) {
        auto r = liminf_ratio_probe(nl, lo * 16.0, lo);
        CHECK(r.min_ratio > prev);
        prev = r.min_ratio;
    }
    CHECK(prev > 20.0);
    CHECK_THROWS_AS(liminf_ratio_probe(nl, 1.0), ConfigError);
}
