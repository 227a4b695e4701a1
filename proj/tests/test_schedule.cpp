#include "doctest.h"

#include "ddlab/errors.hpp"
#include "ddlab/schedule.hpp"

#include <cmath>

using namespace ddlab;

TEST_CASE("build_schedule matches hand-evaluated values for T=4, c0=2, c1=1")
{
    const auto s = build_schedule(4, 2.0, 1.0);
    CHECK(s.beta(1) == 0.0625);
    // Frozen from an independent 40-digit evaluation (tests/oracles/derive_values.py).
    CHECK(s.beta(2) == doctest::Approx(0.029167927734970188).epsilon(1e-14));
    CHECK(s.beta(3) == doctest::Approx(0.039276761171105597).epsilon(1e-14));
    CHECK(s.beta(4) == doctest::Approx(0.052889049304744687).epsilon(1e-14));
    CHECK(s.alpha_bar(2) == doctest::Approx(0.91015506774846545).epsilon(1e-14));
    CHECK(s.alpha_bar(4) == doctest::Approx(0.82816056300247627).epsilon(1e-14));
    CHECK(s.alpha_bar(1) == s.alpha(1));
    CHECK(s.alpha_minus_alpha_bar(1) == 0.0);
}

TEST_CASE("schedule invariants hold across horizons")
{
    for (int T : {16, 64, 257, 1024, 4096}) {
        const auto s = build_schedule(T, 2.0, 4.0);
        CHECK(s.beta(1) == std::pow(static_cast<double>(T), -2.0));
        long double log_sum = 0.0L;
        for (int t = 1; t <= T; ++t) {
            CHECK(s.alpha(t) == 1.0 - s.beta(t));
            CHECK(s.alpha_bar(t) > 0.0);
            CHECK(s.alpha_bar(t) < 1.0);
            if (t > 1)
                CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
            log_sum += std::log1p(-static_cast<long double>(s.beta(t)));
            CHECK(std::abs(static_cast<long double>(s.alpha_bar(t)) / std::exp(log_sum) - 1.0L) < 1e-12L);
            CHECK(std::abs(s.one_minus_alpha_bar(t) - (1.0 - s.alpha_bar(t))) < 1e-15);
            if (t < T) {
                const double rate = 4.0 * std::log(static_cast<double>(T)) / T;
                const double expect = rate * std::min(s.beta(1) * std::pow(1.0 + rate, t), 1.0);
                CHECK(s.beta(t + 1) == doctest::Approx(expect).epsilon(1e-15));
            }
        }
    }
}

TEST_CASE("build_schedule is deterministic")
{
    const auto a = build_schedule(333, 2.0, 4.0);
    const auto b = build_schedule(333, 2.0, 4.0);
    CHECK(a.betas() == b.betas());
    CHECK(a.alpha_bars() == b.alpha_bars());
}

TEST_CASE("build_schedule rejects out-of-range parameters")
{
    CHECK_THROWS_AS(build_schedule(1, 2.0, 1.0), NumericError);
    CHECK_THROWS_AS(build_schedule(4, 0.0, 1.0), NumericError);
    CHECK_THROWS_AS(build_schedule(4, 2.0, -1.0), NumericError);
    // c1 ln T / T > 1 once the exponential phase saturates.
    CHECK_THROWS_AS(build_schedule(8, 2.0, 4.0), NumericError);
    CHECK_THROWS_WITH_AS(build_schedule(4, 2.0, 4.0), doctest::Contains("schedule out of range"), NumericError);
    CHECK_NOTHROW(build_schedule(16, 2.0, 4.0));
}

TEST_CASE("validate_step_ratio reports ratios and bound")
{
    const auto s = build_schedule(4, 2.0, 1.0);
    const auto report = validate_step_ratio(s);
    REQUIRE(report.steps.size() == 3);
    CHECK(report.steps[0].t == 2);
    CHECK(report.steps[0].ratio == doctest::Approx(0.46668684375952301).epsilon(1e-13));
    CHECK(report.steps[0].bound == doctest::Approx(1.3862943611198906).epsilon(1e-14));
    CHECK(report.steps[0].pass);

    SUBCASE("T = 2 reports one ratio")
    {
        const auto r = validate_step_ratio(build_schedule(2, 2.0, 0.5));
        CHECK(r.steps.size() == 1);
    }
    SUBCASE("failing steps are reported, not thrown")
    {
        const auto flat = NoiseSchedule::from_betas(std::vector<double>(10, 1e-6), 0.01);
        const auto r = validate_step_ratio(flat);
        REQUIRE(r.steps.size() == 9);
        // ratio ~ 1/(t-1): the first step is beta/beta = 1 > 4*0.01*ln10/10.
        CHECK(r.steps[0].ratio == doctest::Approx(1.0).epsilon(1e-5));
        CHECK_FALSE(r.steps[0].pass);
        CHECK_FALSE(r.all_pass);
    }
}

TEST_CASE("default constants pass the step-ratio property from T = 32")
{
    for (int T : {32, 64, 128, 512, 2048}) {
        const auto r = validate_step_ratio(build_schedule(T, 2.0, 4.0));
        CHECK_MESSAGE(r.all_pass, "T = " << T);
    }
}
