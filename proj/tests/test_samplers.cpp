#include "doctest.h"

#include "ddlab/errors.hpp"
#include "ddlab/samplers.hpp"

#include <cmath>
#include <vector>

using namespace ddlab;

namespace {

const GaussianLaw& law_of(const ReverseRunResult& r) { return std::get<AnalyticState>(r.final_state).law; }
const Ensemble& ensemble_of(const ReverseRunResult& r) { return std::get<Ensemble>(r.final_state); }

ReverseRunConfig ensemble_config(std::size_t n, int threads = 1)
{
    ReverseRunConfig cfg;
    cfg.analytic = false;
    cfg.n_particles = n;
    cfg.threads = threads;
    return cfg;
}

} // namespace

TEST_CASE("initial states")
{
    const auto a = init_analytic(5);
    CHECK(a.law.cov_diag == std::vector<double>(5, 1.0));
    CHECK(a.law.mean == std::vector<double>(5, 0.0));

    const auto e = init_ensemble(1, 100000, RngPolicy(1));
    CHECK(e.particles.n == 100000);
    CHECK(std::abs(e.particles.column_variances()[0] - 1.0) < 0.05);
    CHECK_THROWS_WITH_AS(init_ensemble(1, 0, RngPolicy(1)), doctest::Contains("empty ensemble"), NumericError);
}

TEST_CASE("single analytic steps")
{
    const auto tgt = TargetSpec::low_rank_gaussian(2, 1);
    const auto s = NoiseSchedule::from_betas({1.0 - 5.0 / 9.0, 0.1}, 1.0); // abar_1 = 5/9, alpha_2 = 0.9, abar_2 = 0.5
    const ScoreOracle oracle(tgt, s);
    REQUIRE(s.alpha_bar(2) == doctest::Approx(0.5).epsilon(1e-15));

    SUBCASE("original DDIM carries the off-subspace variance from 1 - abar_t to 1 - abar_{t-1}")
    {
        const auto plan = plan_for_family(s, family::DdimOriginal{});
        CHECK(plan.eta_at(2) == doctest::Approx(0.052786404500042061).epsilon(1e-13));
        SamplerState st = AnalyticState{GaussianLaw::centered({1.0, s.one_minus_alpha_bar(2)})};
        reverse_step(st, 2, plan, oracle);
        CHECK(std::abs(std::get<AnalyticState>(st).law.cov_diag[1] - 4.0 / 9.0) < 1e-14);
    }
    SUBCASE("original DDPM on a pure-noise coordinate")
    {
        const auto t1 = TargetSpec::diag_gaussian({0.0});
        const ScoreOracle o1(t1, s);
        const auto plan = plan_for_family(s, family::DdpmOriginal{});
        SamplerState st = AnalyticState{GaussianLaw::centered({s.one_minus_alpha_bar(2)})};
        reverse_step(st, 2, plan, o1);
        CHECK(std::abs(std::get<AnalyticState>(st).law.cov_diag[0] - s.one_minus_alpha_bar(1)) < 1e-12);
    }
    SUBCASE("step bounds")
    {
        const auto plan = plan_for_family(s, family::DdimOriginal{});
        SamplerState st = init_analytic(2);
        CHECK_THROWS_AS(reverse_step(st, 1, plan, oracle), NumericError);
        CHECK_THROWS_AS(reverse_step(st, 3, plan, oracle), NumericError);
    }
    SUBCASE("analytic propagation needs an affine score")
    {
        const auto mix = TargetSpec::atom_mixture({{-1.0, 0.0}, {1.0, 0.0}}, {0.5, 0.5}, 1);
        const ScoreOracle mo(mix, s);
        SamplerState st = init_analytic(2);
        CHECK_THROWS_WITH_AS(reverse_step(st, 2, plan_for_family(s, family::DdimOriginal{}), mo),
                             doctest::Contains("analytic propagation unavailable"), NumericError);
    }
}

TEST_CASE("one step from the true marginal")
{
    const auto tgt = TargetSpec::low_rank_gaussian(2, 1);
    const auto lv = StepLevels::from_pair(0.9, 0.5);
    SUBCASE("no update")
    {
        const auto law = one_step_law(tgt, lv, 0.0, 0.0);
        CHECK(law.cov_diag[1] == doctest::Approx(0.5 / 0.9).epsilon(1e-15));
        CHECK(law.cov_diag[0] == doctest::Approx(1.0 / 0.9).epsilon(1e-15));
    }
    SUBCASE("original DDPM pair lands on 1 - abar_{t-1}")
    {
        const double sigma = std::sqrt(0.1 * 0.4 / 0.5);
        const auto law = one_step_law(tgt, lv, 0.1, sigma);
        CHECK(law.cov_diag[1] == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
        CHECK(law.cov_diag[0] == doctest::Approx(0.89 / 0.9).epsilon(1e-14));
    }
    SUBCASE("identity limit")
    {
        const auto near = StepLevels::from_pair(1.0, 0.5);
        const auto law = one_step_law(tgt, near, 0.0, 0.0);
        CHECK(law.cov_diag[0] == 1.0);
        CHECK(law.cov_diag[1] == 0.5);
    }
    SUBCASE("samples follow the exact law")
    {
        const std::size_t n = 100000;
        const auto r = one_step_from_truth(tgt, lv, 0.05, 0.2, n, RngPolicy(5), 0, 4);
        const auto v = r.samples.column_variances();
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(v[j] - r.law.cov_diag[j]) < 5.0 * r.law.cov_diag[j] * std::sqrt(2.0 / (n - 1)));
        const auto again = one_step_from_truth(tgt, lv, 0.05, 0.2, n, RngPolicy(5), 0, 1);
        CHECK(again.samples.values == r.samples.values);
    }
}

TEST_CASE("reverse runs")
{
    const auto tgt = TargetSpec::low_rank_gaussian(4, 2);

    SUBCASE("T = 2 takes exactly one step")
    {
        const auto s = NoiseSchedule::from_betas({0.01, 0.2}, 1.0);
        const ScoreOracle oracle(tgt, s);
        ReverseRunConfig cfg;
        cfg.record_trajectory = true;
        const auto r = run_reverse(plan_for_family(s, family::DdimOriginal{}), oracle, cfg, RngPolicy(0));
        CHECK(r.steps_taken == 1);
        CHECK(r.trajectory.size() == 2);
        CHECK(r.trajectory.back().t == 1);
    }
    SUBCASE("exact off-subspace tracking from 1 - abar_T")
    {
        const auto s = build_schedule(64, 2.0, 4.0);
        const ScoreOracle oracle(tgt, s);
        for (const CoefficientFamily& f : std::vector<CoefficientFamily>{
                 family::DdimOriginal{}, family::DdpmOriginal{}, family::GeneralizedXi{0.5, {}}}) {
            ReverseRunConfig cfg;
            cfg.record_trajectory = true;
            cfg.initial_law = GaussianLaw::centered({1.0, 1.0, s.one_minus_alpha_bar(64), s.one_minus_alpha_bar(64)});
            const auto r = run_reverse(plan_for_family(s, f), oracle, cfg, RngPolicy(0));
            for (const auto& p : r.trajectory)
                for (std::size_t j = 2; j < 4; ++j)
                    CHECK(std::abs(p.variance[j] - s.one_minus_alpha_bar(p.t)) < 1e-12);
            for (std::size_t j = 2; j < 4; ++j)
                CHECK(std::abs(law_of(r).cov_diag[j] - s.one_minus_alpha_bar(1)) < 1e-12);
        }
    }
    SUBCASE("deviation contracts from the N(0, I) start")
    {
        const auto s = build_schedule(64, 2.0, 4.0);
        const ScoreOracle oracle(tgt, s);
        for (const CoefficientFamily& f :
             std::vector<CoefficientFamily>{family::DdimOriginal{}, family::DdpmOriginal{}}) {
            ReverseRunConfig cfg;
            cfg.record_trajectory = true;
            const auto r = run_reverse(plan_for_family(s, f), oracle, cfg, RngPolicy(0));
            double prev = INFINITY;
            for (const auto& p : r.trajectory) {
                const double dev = std::abs(p.variance[3] - s.one_minus_alpha_bar(p.t));
                CHECK(dev <= prev);
                prev = dev;
            }
        }
    }
    SUBCASE("ensemble agrees with the analytic law")
    {
        const auto s = build_schedule(32, 2.0, 4.0);
        const ScoreOracle oracle(TargetSpec::diag_gaussian({2.0, 0.0, 0.5}), s);
        const std::size_t n = 100000;
        for (const CoefficientFamily& f :
             std::vector<CoefficientFamily>{family::DdimOriginal{}, family::DdpmOriginal{}, family::DdpmLi{}}) {
            const auto plan = plan_for_family(s, f);
            const auto exact = law_of(run_reverse(plan, oracle, ReverseRunConfig{}, RngPolicy(0)));
            const auto r = run_reverse(plan, oracle, ensemble_config(n, 4), RngPolicy(9));
            const auto v = ensemble_of(r).particles.column_variances();
            const auto m = ensemble_of(r).particles.column_means();
            for (std::size_t j = 0; j < 3; ++j) {
                INFO(family_name(f), " coord ", j);
                CHECK(std::abs(v[j] - exact.cov_diag[j]) < 5.0 * exact.cov_diag[j] * std::sqrt(2.0 / (n - 1)));
                CHECK(std::abs(m[j]) < 5.0 * std::sqrt(exact.cov_diag[j] / n));
            }
        }
    }
    SUBCASE("determinism and draw accounting")
    {
        const auto s = build_schedule(32, 2.0, 4.0);
        const ScoreOracle oracle(tgt, s);
        const std::size_t n = 257;
        const auto init_draws = 2ull * n * 4ull; // two raw draws per normal

        const auto ddim = plan_for_family(s, family::DdimOriginal{});
        const auto a = run_reverse(ddim, oracle, ensemble_config(n), RngPolicy(1));
        CHECK(ensemble_of(a).draws_consumed() == init_draws);

        // Same initial cloud, different noise streams: sigma = 0 cannot tell them apart.
        auto e1 = init_ensemble(4, n, RngPolicy(1));
        auto e2 = e1;
        for (std::size_t i = 0; i < n; ++i)
            e2.streams[i] = Stream(0xdeadbeefull + i);
        SamplerState s1 = e1, s2 = e2;
        for (int t = 32; t >= 2; --t) {
            reverse_step(s1, t, ddim, oracle);
            reverse_step(s2, t, ddim, oracle);
        }
        CHECK(std::get<Ensemble>(s1).particles.values == std::get<Ensemble>(s2).particles.values);
        CHECK(ensemble_of(a).particles.values == std::get<Ensemble>(s1).particles.values);

        const auto ddpm = plan_for_family(s, family::DdpmOriginal{});
        const auto b1 = run_reverse(ddpm, oracle, ensemble_config(n, 1), RngPolicy(2));
        const auto b3 = run_reverse(ddpm, oracle, ensemble_config(n, 3), RngPolicy(2));
        CHECK(ensemble_of(b1).particles.values == ensemble_of(b3).particles.values);
        CHECK(ensemble_of(b1).draws_consumed() == init_draws + 2ull * n * 4ull * 31ull);
    }
    SUBCASE("xi = 0 run matches the original DDIM run")
    {
        const auto s = build_schedule(128, 2.0, 4.0);
        const ScoreOracle oracle(tgt, s);
        const auto a = run_reverse(plan_for_family(s, family::DdimOriginal{}), oracle, ensemble_config(64), RngPolicy(3));
        const auto b = run_reverse(plan_for_family(s, family::GeneralizedXi{0.0, {}}), oracle, ensemble_config(64),
                                   RngPolicy(3));
        const auto& va = ensemble_of(a).particles.values;
        const auto& vb = ensemble_of(b).particles.values;
        for (std::size_t i = 0; i < va.size(); ++i)
            CHECK(std::abs(va[i] - vb[i]) <= 1e-12 * std::max(std::abs(va[i]), 1.0));
    }
}
