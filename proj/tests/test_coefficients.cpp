#include "doctest.h"

#include "ddlab/coefficients.hpp"
#include "ddlab/errors.hpp"

#include <cmath>
#include <vector>

using namespace ddlab;

namespace {

// Test-side closed forms, written independently of src/coefficients.cpp.
double ddim_eta_ref(double a, double ab) { return (1.0 - a) / (1.0 + std::sqrt((a - ab) / (1.0 - ab))); }

std::vector<NoiseSchedule> schedules()
{
    return {build_schedule(16, 2.0, 4.0), build_schedule(128, 2.0, 4.0), build_schedule(1024, 2.0, 4.0),
            build_schedule(64, 3.0, 2.0)};
}

double max_abs_residual(const CoefficientPlan& plan, const NoiseSchedule& s)
{
    double m = 0.0;
    for (int t = 1; t <= s.T(); ++t)
        m = std::max(m, std::abs(relation_residual(plan, s, t)));
    return m;
}

} // namespace

TEST_CASE("closed-form families at alpha = 0.9, abar = 0.5")
{
    const auto lv = StepLevels::from_pair(0.9, 0.5);
    CHECK(ddim_eta_ref(0.9, 0.5) == doctest::Approx(0.052786404500042061).epsilon(1e-14));
    // DDPM pair (0.1, sqrt(0.08)); both sides of the relation equal 0.32.
    const double sigma = std::sqrt(0.1 * 0.4 / 0.5);
    CHECK(sigma == doctest::Approx(0.28284271247461901).epsilon(1e-14));
    CHECK(std::abs(relation_residual(lv, 0.1, sigma)) < 1e-15);
    // eta = sigma = 0: 0.5 - 0.4.
    CHECK(relation_residual(lv, 0.0, 0.0) == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("plan_for_family reproduces the displayed coefficient formulas")
{
    for (const auto& s : schedules()) {
        const auto ddim = plan_for_family(s, family::DdimOriginal{});
        const auto half = plan_for_family(s, family::DdimHalfBeta{});
        const auto song = plan_for_family(s, family::DdimSongScore{});
        const auto ddpm = plan_for_family(s, family::DdpmOriginal{});
        const auto benton = plan_for_family(s, family::DdpmBenton{});
        const auto li = plan_for_family(s, family::DdpmLi{});
        CHECK(ddim.deterministic());
        CHECK(half.deterministic());
        CHECK(song.deterministic());
        CHECK_FALSE(ddpm.deterministic());

        CHECK(ddim.eta_at(1) == s.beta(1));
        CHECK(ddim.sigma_at(1) == 0.0);
        CHECK(ddpm.sigma_at(1) == 0.0);
        for (int t = 2; t <= s.T(); ++t) {
            const double a = s.alpha(t), ab = s.alpha_bar(t);
            CHECK(ddim.eta_at(t) == doctest::Approx(ddim_eta_ref(a, ab)).epsilon(1e-10));
            CHECK(half.eta_at(t) == doctest::Approx((1 - a) / 2));
            CHECK(song.eta_at(t) == doctest::Approx((-1 + 4 * std::sqrt(a) - 3 * a) / (2 * std::sqrt(a))));
            CHECK(ddpm.eta_at(t) == s.beta(t));
            CHECK(ddpm.sigma_at(t) == doctest::Approx(std::sqrt((1 - a) * (a - ab) / (1 - ab))).epsilon(1e-10));
            CHECK(benton.eta_at(t) == doctest::Approx(2 * (1 - std::sqrt(a))));
            CHECK(benton.sigma_at(t) == doctest::Approx(std::sqrt(1 - a)));
            CHECK(li.eta_at(t) == s.beta(t));
            CHECK(li.sigma_at(t) == doctest::Approx(std::sqrt(1 - a)));
        }
    }
}

TEST_CASE("relation residual vanishes for the relation-satisfying families")
{
    for (const auto& s : schedules()) {
        CHECK(max_abs_residual(plan_for_family(s, family::DdimOriginal{}), s) < 1e-12);
        CHECK(max_abs_residual(plan_for_family(s, family::DdpmOriginal{}), s) < 1e-12);
        for (double xi : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0})
            CHECK(max_abs_residual(plan_for_family(s, family::GeneralizedXi{xi, {}}), s) < 1e-12);
    }
}

TEST_CASE("families outside the relation are audited, not required to vanish")
{
    const auto s = build_schedule(128, 2.0, 4.0);
    const auto half = plan_for_family(s, family::DdimHalfBeta{});
    const auto li = plan_for_family(s, family::DdpmLi{});
    // Half-beta DDIM undershoots the shrinkage at interior steps.
    CHECK(max_abs_residual(half, s) > 1e-6);
    CHECK(max_abs_residual(li, s) > 1e-6);
}

TEST_CASE("eta_cap_check")
{
    const auto s = build_schedule(128, 2.0, 4.0);
    SUBCASE("original DDPM: only t = 1 flagged at C1 = 1")
    {
        const auto r = eta_cap_check(plan_for_family(s, family::DdpmOriginal{}), s, 1.0);
        CHECK(r.flagged[0]);
        for (int t = 2; t <= s.T(); ++t)
            CHECK_FALSE(r.flagged[static_cast<std::size_t>(t - 1)]);
        CHECK_FALSE(r.all_pass);
    }
    SUBCASE("original DDIM: t = 1 flagged (eta_1 = 1 - abar_1), all later steps pass")
    {
        const auto r = eta_cap_check(plan_for_family(s, family::DdimOriginal{}), s, 1.0);
        CHECK(r.flagged[0]);
        for (int t = 2; t <= s.T(); ++t)
            CHECK_FALSE(r.flagged[static_cast<std::size_t>(t - 1)]);
    }
    SUBCASE("zero eta passes everywhere")
    {
        const auto plan = plan_for_family(s, family::Custom{{0.0}, {0.0}});
        CHECK(eta_cap_check(plan, s, 1.0).all_pass);
    }
    SUBCASE("C1 below 1/2 is rejected")
    {
        CHECK_THROWS_AS(eta_cap_check(plan_for_family(s, family::DdimOriginal{}), s, 0.4), NumericError);
    }
}

TEST_CASE("xi segment coefficients")
{
    SUBCASE("xi = 0 reproduces original DDIM at every schedule step")
    {
        const auto s = build_schedule(128, 2.0, 4.0);
        const auto ddim = plan_for_family(s, family::DdimOriginal{});
        for (int t = 2; t <= s.T(); ++t) {
            const auto seg = xi_segment_coefficients(std::sqrt(s.alpha_bar(t)), std::sqrt(s.alpha_bar(t - 1)), 0.0);
            CHECK(seg.sigma == 0.0);
            CHECK(seg.alpha_step == doctest::Approx(s.alpha(t)).epsilon(1e-12));
        }
        const auto xi0 = xi_plan(s, family::GeneralizedXi{0.0, {}});
        for (int t = 1; t <= s.T(); ++t)
            CHECK(std::abs(xi0.eta_at(t) / ddim.eta_at(t) - 1.0) < 1e-12);
    }
    SUBCASE("gamma = (0.6, 0.8), xi = 1 satisfies the relation")
    {
        const auto seg = xi_segment_coefficients(0.6, 0.8, 1.0);
        CHECK(seg.alpha_step == doctest::Approx(0.5625));
        CHECK(std::abs(relation_residual(StepLevels::from_pair(0.5625, 0.36), seg.eta, seg.sigma)) < 1e-12);
    }
    SUBCASE("xi = 1 matches original DDPM")
    {
        for (const auto& s : schedules()) {
            const auto ddpm = plan_for_family(s, family::DdpmOriginal{});
            const auto xi1 = plan_for_family(s, family::GeneralizedXi{1.0, {}});
            for (int t = 1; t <= s.T(); ++t) {
                CHECK(std::abs(xi1.eta_at(t) - ddpm.eta_at(t)) < 1e-12);
                CHECK(std::abs(xi1.sigma_at(t) - ddpm.sigma_at(t)) < 1e-12);
            }
        }
    }
    SUBCASE("continuity in xi on [0, 4]")
    {
        for (double xi = 0.0; xi <= 4.0; xi += 0.125) {
            const auto a = xi_segment_coefficients(0.3, 0.35, xi);
            const auto b = xi_segment_coefficients(0.3, 0.35, xi + 1e-6);
            CHECK(std::abs(a.eta - b.eta) < 1e-5);
            CHECK(std::abs(a.sigma - b.sigma) < 1e-2); // sqrt(xi) behaviour near 0
            if (xi > 0.1)
                CHECK(std::abs(a.sigma - b.sigma) < 1e-5);
        }
    }
    SUBCASE("invalid segments")
    {
        CHECK_THROWS_AS(xi_segment_coefficients(0.8, 0.6, 1.0), NumericError);
        CHECK_THROWS_AS(xi_segment_coefficients(0.0, 0.6, 1.0), NumericError);
        CHECK_THROWS_AS(xi_segment_coefficients(0.5, 1.0, 1.0), NumericError);
        CHECK_THROWS_AS(xi_segment_coefficients(0.5, 0.6, -0.1), NumericError);
    }
    SUBCASE("per-step xi array")
    {
        const auto s = build_schedule(32, 2.0, 4.0);
        std::vector<double> xs(32);
        for (std::size_t i = 0; i < xs.size(); ++i)
            xs[i] = static_cast<double>(i % 3);
        const auto plan = plan_for_family(s, family::GeneralizedXi{0.0, xs});
        CHECK(max_abs_residual(plan, s) < 1e-12);
        const auto ddpm = plan_for_family(s, family::DdpmOriginal{});
        CHECK(plan.eta_at(2) == doctest::Approx(ddpm.eta_at(2)).epsilon(1e-12)); // xs[1] = 1
    }
}

TEST_CASE("varsigma_to_plan")
{
    const auto s = build_schedule(128, 2.0, 4.0);
    SUBCASE("zero varsigma is original DDIM")
    {
        const auto plan = varsigma_to_plan(s, std::vector<double>(128, 0.0));
        const auto ddim = plan_for_family(s, family::DdimOriginal{});
        for (int t = 1; t <= s.T(); ++t) {
            CHECK(plan.sigma_at(t) == 0.0);
            CHECK(std::abs(plan.eta_at(t) - ddim.eta_at(t)) < 1e-14);
        }
    }
    SUBCASE("DDPM varsigma gives the original DDPM pair")
    {
        std::vector<double> vs(128, 0.0);
        for (int t = 1; t <= s.T(); ++t)
            vs[static_cast<std::size_t>(t - 1)] =
                std::sqrt(s.beta(t) * s.one_minus_alpha_bar_prev(t) / s.one_minus_alpha_bar(t));
        const auto plan = varsigma_to_plan(s, vs);
        const auto ddpm = plan_for_family(s, family::DdpmOriginal{});
        for (int t = 1; t <= s.T(); ++t) {
            CHECK(std::abs(plan.eta_at(t) - ddpm.eta_at(t)) < 1e-14);
            CHECK(std::abs(plan.sigma_at(t) - ddpm.sigma_at(t)) < 1e-14);
        }
        CHECK(max_abs_residual(plan, s) < 1e-12);
    }
    SUBCASE("round trip from a relation-satisfying plan with sigma > 0")
    {
        for (double xi : {0.5, 1.0, 2.0}) {
            const auto plan = plan_for_family(s, family::GeneralizedXi{xi, {}});
            std::vector<double> vs(128);
            for (int t = 1; t <= s.T(); ++t)
                vs[static_cast<std::size_t>(t - 1)] = plan.sigma_at(t) / std::sqrt(s.alpha(t));
            const auto back = varsigma_to_plan(s, vs);
            for (int t = 1; t <= s.T(); ++t)
                CHECK(std::abs(back.eta_at(t) - plan.eta_at(t)) < 1e-10);
        }
    }
    SUBCASE("varsigma beyond admissibility is rejected")
    {
        const int t = 40;
        std::vector<double> vs(128, 0.0);
        const double limit = std::sqrt(s.alpha_minus_alpha_bar(t) / s.alpha(t));
        vs[t - 1] = limit * (1.0 + 1e-9);
        CHECK_THROWS_WITH_AS(varsigma_to_plan(s, vs), doctest::Contains("at step 40"), NumericError);
        vs[t - 1] = limit;
        CHECK_NOTHROW(varsigma_to_plan(s, vs));
        std::vector<double> at_one(128, 0.0);
        at_one[0] = 1e-3; // alpha_1 - abar_1 = 0 leaves no room
        CHECK_THROWS_AS(varsigma_to_plan(s, at_one), NumericError);
    }
}

TEST_CASE("family names round trip")
{
    for (const char* name : {"ddim_original", "ddim_half_beta", "ddim_song_score", "ddpm_original", "ddpm_benton", "ddpm_li",
                             "generalized_xi"})
        CHECK(family_name(family_from_name(name)) == name);
    CHECK_THROWS(family_from_name("nope"));
}
