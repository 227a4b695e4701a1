#include "ddlab/experiments.hpp"

#include "ddlab/errors.hpp"
#include "ddlab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ddlab {

TargetSpec make_target(const RunConfig& cfg)
{
    const auto& tb = cfg.target;
    if (tb.kind == "low_rank_gaussian")
        return TargetSpec::low_rank_gaussian(tb.d, tb.k);
    if (tb.kind == "diag_gaussian")
        return TargetSpec::diag_gaussian(tb.variances);
    if (tb.kind == "atom_mixture") {
        auto atoms = read_points_file(tb.atoms_file);
        auto weights = tb.weights;
        if (weights.empty())
            weights.assign(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
        return TargetSpec::atom_mixture(std::move(atoms), std::move(weights), tb.k, tb.support_radius);
    }
    throw ConfigError("target.kind: unknown target '" + tb.kind + "'");
}

NoiseSchedule make_schedule(const RunConfig& cfg, int T)
{
    return NoiseSchedule::build(T, cfg.schedule.c0, cfg.schedule.c1);
}

CoefficientFamily make_family(const RunConfig& cfg, const std::string& name)
{
    const auto& sb = cfg.sampler;
    if (name == "generalized_xi") {
        family::GeneralizedXi g;
        if (sb.xi.size() == 1)
            g.xi = sb.xi.front();
        else
            g.per_step = sb.xi;
        return g;
    }
    if (name == "varsigma") {
        if (sb.varsigma_file.empty())
            throw ConfigError("sampler.varsigma_file: required for the varsigma family");
        return family::Varsigma{read_number_file(sb.varsigma_file)};
    }
    if (name == "custom") {
        if (sb.eta_file.empty() || sb.sigma_file.empty())
            throw ConfigError("sampler.eta_file/sampler.sigma_file: required for the custom family");
        return family::Custom{read_number_file(sb.eta_file), read_number_file(sb.sigma_file)};
    }
    return family_from_name(name);
}

std::optional<PerturbationSpec> make_perturbation(const RunConfig& cfg, const TargetSpec& target,
                                                  const NoiseSchedule& s, std::optional<double> epsilon)
{
    const auto& pb = cfg.perturbation;
    const double eps = epsilon.value_or(pb.magnitude);
    if (pb.kind == "none")
        return std::nullopt;
    if (pb.kind == "constant_shift") {
        std::vector<double> dir = pb.direction;
        if (dir.empty()) {
            dir.assign(target.dim(), 0.0);
            dir.front() = 1.0;
        }
        if (dir.size() != target.dim())
            throw ConfigError("score.perturbation.direction: dimension does not match the target");
        return PerturbationSpec::constant_shift(std::move(dir), {eps}, s.T());
    }
    if (pb.kind == "linear_field") {
        std::vector<double> shape = pb.direction.empty() ? std::vector<double>(target.dim(), 1.0) : pb.direction;
        if (shape.size() != target.dim())
            throw ConfigError("score.perturbation.direction: dimension does not match the target");
        const ScoreOracle unit(target, s, PerturbationSpec::linear_field({shape}, 0.0));
        const double unit_eps = unit.analytic_epsilon_score();
        const double scale = unit_eps > 0.0 ? eps / unit_eps : 0.0;
        for (auto& v : shape)
            v *= scale;
        return PerturbationSpec::linear_field({shape}, eps);
    }
    throw ConfigError("score.perturbation.kind: unknown perturbation '" + pb.kind + "'");
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] >= 1e-13) || !(x[i] > 0.0))
            continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    LogLogFit fit;
    fit.points = lx.size();
    if (lx.size() < 2) {
        fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

namespace {

GaussianLaw run_analytic(const CoefficientPlan& plan, const ScoreOracle& oracle)
{
    ReverseRunConfig rc;
    rc.analytic = true;
    const RngPolicy unused(0);
    auto res = run_reverse(plan, oracle, rc, unused);
    return std::get<AnalyticState>(res.final_state).law;
}

void require_gaussian(const TargetSpec& target, const char* experiment)
{
    if (!target.is_gaussian())
        throw ConfigError(std::string(experiment) + " requires analytic law: target must be Gaussian");
}

} // namespace

RateSweepResult exp_rate_sweep(const RunConfig& cfg, int threads)
{
    const TargetSpec base = make_target(cfg);
    require_gaussian(base, "rate sweep");
    std::vector<std::size_t> ks = cfg.sweep.k_grid;
    if (ks.empty() || cfg.target.kind != "low_rank_gaussian")
        ks = {base.k_intrinsic()};
    std::vector<std::string> families = cfg.sweep.families;
    if (families.empty())
        families = {cfg.sampler.family};

    RateSweepResult result;
    std::uint64_t replicate = 0;
    for (std::size_t k : ks) {
        const TargetSpec target = cfg.target.kind == "low_rank_gaussian" ? TargetSpec::low_rank_gaussian(cfg.target.d, k) : base;
        for (const auto& fam_name : families) {
            RateSweepGroup group;
            group.k = target.k_intrinsic();
            group.family = fam_name;
            std::vector<double> xs, ys;
            for (int T : cfg.sweep.T_grid) {
                const NoiseSchedule s = make_schedule(cfg, T);
                const auto fam = make_family(cfg, fam_name);
                if (!family_satisfies_relation(fam))
                    throw ConfigError("sampler.family: rate sweep needs a family satisfying the coefficient relation");
                const CoefficientPlan plan = plan_for_family(s, fam);
                const ScoreOracle oracle(target, s);
                const GaussianLaw sampler_law = run_analytic(plan, oracle);
                const GaussianLaw truth = forward_gaussian(target, s.alpha_bar(1));

                RateSweepRow row;
                row.T = T;
                row.d = target.dim();
                row.k = target.k_intrinsic();
                row.family = fam_name;
                row.proxy = gaussian_frob_proxy(truth, sampler_law);
                row.tv = tv_diag_gaussians(truth, sampler_law, cfg.mc.n_samples, RngPolicy(cfg.mc.master_seed), replicate++, threads);
                xs.push_back(T);
                ys.push_back(row.proxy.D);
                group.rows.push_back(std::move(row));
            }
            group.fit = fit_loglog(xs, ys);
            result.groups.push_back(std::move(group));
        }
    }
    return result;
}

CsvTable RateSweepResult::table() const
{
    CsvTable t;
    t.header = {"T", "d", "k", "family", "proxy_D", "tv_lower", "tv_upper", "tv_mc", "tv_ci", "fit_slope", "fit_intercept"};
    for (const auto& g : groups)
        for (const auto& r : g.rows)
            t.add_row({fmt_number(r.T), fmt_number(r.d), fmt_number(r.k), r.family, fmt_number(r.proxy.D),
                       fmt_number(r.proxy.tv_lower), fmt_number(r.proxy.tv_upper), fmt_number(r.tv.estimate),
                       fmt_number(r.tv.half_width), fmt_number(g.fit.slope), fmt_number(g.fit.intercept)});
    return t;
}

int pick_half_noise_step(const NoiseSchedule& s)
{
    int best = 2;
    for (int t = 2; t <= s.T(); ++t)
        if (std::abs(s.alpha_bar(t) - 0.5) < std::abs(s.alpha_bar(best) - 0.5))
            best = t;
    return best;
}

OneStepLbResult exp_onestep_lb(const RunConfig& cfg, int threads)
{
    const TargetSpec target = make_target(cfg);
    require_gaussian(target, "one-step lower bound");
    const NoiseSchedule s = make_schedule(cfg);
    OneStepLbResult result;
    result.t = cfg.lowerbound.t > 0 ? cfg.lowerbound.t : pick_half_noise_step(s);
    if (result.t < 2 || result.t > s.T())
        throw ConfigError("lowerbound.t: must satisfy 2 <= t <= T");
    result.levels = s.levels(result.t);
    const auto ddpm = plan_for_family(s, family::DdpmOriginal{});
    const double eta0 = ddpm.eta_at(result.t);
    const double sigma0 = ddpm.sigma_at(result.t);
    const GaussianLaw previous = forward_gaussian(target, s.alpha_bar(result.t - 1));
    const RngPolicy policy(cfg.mc.master_seed);

    struct Cell {
        double eta_scale, sigma_scale, eta, sigma;
    };
    std::vector<Cell> cells;
    if (cfg.lowerbound.eta || cfg.lowerbound.sigma) {
        const double eta = cfg.lowerbound.eta.value_or(eta0);
        const double sigma = cfg.lowerbound.sigma.value_or(sigma0);
        cells.push_back({eta0 > 0.0 ? eta / eta0 : 0.0, sigma0 > 0.0 ? sigma / sigma0 : 0.0, eta, sigma});
    } else {
        for (double es : cfg.lowerbound.scales)
            for (double ss : cfg.lowerbound.scales)
                cells.push_back({es, ss, es * eta0, ss * sigma0});
    }

    std::uint64_t index = 0;
    for (const Cell& c : cells) {
        OneStepRow row;
        row.eta_scale = c.eta_scale;
        row.sigma_scale = c.sigma_scale;
        row.eta = c.eta;
        row.sigma = c.sigma;
        row.lower_bound = one_step_lower_bound(result.levels, row.eta, row.sigma, target.dim());
        const auto one =
            one_step_from_truth(target, result.levels, row.eta, row.sigma, cfg.mc.n_samples, policy, index++, threads);
        row.tv = tv_from_samples(
            one.samples, [&](std::span<const double> x) { return log_density(one.law, x); },
            [&](std::span<const double> x) { return log_density(previous, x); });
        row.violation = row.tv.estimate < row.lower_bound - 3.0 * row.tv.half_width;
        result.rows.push_back(row);
    }
    return result;
}

CsvTable OneStepLbResult::table() const
{
    CsvTable tab;
    tab.header = {"eta_scale", "sigma_scale", "lower_bound", "tv_mc", "tv_ci", "violation"};
    for (const auto& r : rows)
        tab.add_row({fmt_number(r.eta_scale), fmt_number(r.sigma_scale), fmt_number(r.lower_bound),
                     fmt_number(r.tv.estimate), fmt_number(r.tv.half_width), fmt_bool(r.violation)});
    return tab;
}

ScoreErrorResult exp_score_error(const RunConfig& cfg, int /*threads*/)
{
    const TargetSpec target = make_target(cfg);
    require_gaussian(target, "score-error sweep");
    const NoiseSchedule s = make_schedule(cfg);
    const auto fam = make_family(cfg);
    const CoefficientPlan plan = plan_for_family(s, fam);
    const GaussianLaw truth = forward_gaussian(target, s.alpha_bar(1));

    ScoreErrorResult result;
    result.kind = cfg.perturbation.kind == "none" ? "constant_shift" : cfg.perturbation.kind;
    result.family = cfg.sampler.family;
    RunConfig local = cfg;
    local.perturbation.kind = result.kind;

    std::optional<double> baseline_D;
    std::vector<double> xs, ys;
    for (double eps : cfg.score_error.eps_grid) {
        if (!(eps >= 0.0))
            throw ConfigError("score_error.eps_grid: epsilon values must be nonnegative");
        auto pert = eps > 0.0 ? make_perturbation(local, target, s, eps) : std::nullopt;
        const ScoreOracle oracle(target, s, pert);
        const GaussianLaw law = run_analytic(plan, oracle);
        ScoreErrorRow row;
        row.epsilon = eps;
        row.declared_epsilon = pert ? pert->declared_epsilon : 0.0;
        row.proxy = gaussian_frob_proxy(truth, law);
        row.mean_shift = mahalanobis_shift(truth, law);
        if (eps == 0.0)
            baseline_D = row.proxy.D;
        result.rows.push_back(row);
    }
    for (const auto& r : result.rows) {
        if (r.epsilon <= 0.0)
            continue;
        xs.push_back(r.epsilon);
        if (result.kind == "constant_shift")
            ys.push_back(r.mean_shift);
        else
            ys.push_back(std::abs(r.proxy.D - baseline_D.value_or(0.0)));
    }
    result.fit = fit_loglog(xs, ys);
    return result;
}

CsvTable ScoreErrorResult::table() const
{
    CsvTable tab;
    tab.header = {"epsilon", "declared_epsilon", "kind", "family", "proxy_D", "mean_shift", "tv_lower", "tv_upper", "fit_slope"};
    for (const auto& r : rows)
        tab.add_row({fmt_number(r.epsilon), fmt_number(r.declared_epsilon), kind, family, fmt_number(r.proxy.D),
                     fmt_number(r.mean_shift), fmt_number(r.proxy.tv_lower), fmt_number(r.proxy.tv_upper),
                     fmt_number(fit.slope)});
    return tab;
}

CoeffAuditResult exp_coeff_audit(const RunConfig& cfg)
{
    CoeffAuditResult result;
    for (int T : cfg.audit.T_grid) {
        const NoiseSchedule s = make_schedule(cfg, T);
        std::vector<std::pair<CoefficientFamily, double>> fams{
            {family::DdimOriginal{}, 0.0}, {family::DdimHalfBeta{}, 0.0}, {family::DdimSongScore{}, 0.0},
            {family::DdpmOriginal{}, 0.0}, {family::DdpmBenton{}, 0.0},   {family::DdpmLi{}, 0.0},
        };
        for (double xi : cfg.audit.xi_grid)
            fams.emplace_back(family::GeneralizedXi{xi, {}}, xi);
        // Two varsigma parametrizations: zero noise, and the original-DDPM noise level.
        std::vector<double> zero(static_cast<std::size_t>(T), 0.0);
        std::vector<double> ddpm(static_cast<std::size_t>(T), 0.0);
        for (int t = 2; t <= T; ++t)
            ddpm[static_cast<std::size_t>(t - 1)] =
                std::sqrt(s.beta(t) * s.one_minus_alpha_bar(t - 1) / s.one_minus_alpha_bar(t));
        fams.emplace_back(family::Varsigma{zero}, 0.0);
        fams.emplace_back(family::Varsigma{ddpm}, 1.0);

        for (const auto& [fam, xi] : fams) {
            const auto plan = plan_for_family(s, fam);
            CoeffAuditRow row;
            row.T = T;
            row.family = family_name(fam);
            row.xi = xi;
            row.relation_expected = family_satisfies_relation(fam);
            row.min_residual = std::numeric_limits<double>::infinity();
            row.max_residual = -std::numeric_limits<double>::infinity();
            for (int t = 1; t <= T; ++t) {
                const double r = relation_residual(plan, s, t);
                row.max_abs_residual = std::max(row.max_abs_residual, std::abs(r));
                row.min_residual = std::min(row.min_residual, r);
                row.max_residual = std::max(row.max_residual, r);
            }
            const auto c23 = eta_cap_check(plan, s, cfg.sampler.C1);
            row.eta_cap_flags = static_cast<std::size_t>(std::count(c23.flagged.begin(), c23.flagged.end(), true));
            result.rows.push_back(row);
        }
    }
    return result;
}

CsvTable CoeffAuditResult::table() const
{
    CsvTable tab;
    tab.header = {"T", "family", "xi", "relation_expected", "max_abs_residual", "min_residual", "max_residual", "eta_cap_flags"};
    for (const auto& r : rows)
        tab.add_row({fmt_number(r.T), r.family, fmt_number(r.xi), fmt_bool(r.relation_expected),
                     fmt_number(r.max_abs_residual), fmt_number(r.min_residual), fmt_number(r.max_residual),
                     fmt_number(r.eta_cap_flags)});
    return tab;
}

double gaussian_posterior_trace(const TargetSpec& target, double abar)
{
    double tr = 0.0;
    for (double v : target.data_variances())
        tr += (1.0 - abar) * v / (abar * v + 1.0 - abar);
    return tr;
}

PosteriorTraceResult exp_posterior_trace(const RunConfig& cfg, int threads)
{
    const TargetSpec target = make_target(cfg);
    const NoiseSchedule s = make_schedule(cfg);
    PosteriorTraceResult result;
    result.curve = posterior_trace_curve(target, s, cfg.mc.n_samples, RngPolicy(cfg.mc.master_seed), threads);
    for (const auto& p : result.curve)
        result.exact.push_back(target.is_gaussian() ? std::optional<double>(gaussian_posterior_trace(target, p.alpha_bar))
                                                    : std::nullopt);
    return result;
}

CsvTable PosteriorTraceResult::table() const
{
    CsvTable tab;
    tab.header = {"t", "alpha_bar", "trace_mc", "trace_se", "trace_exact"};
    for (std::size_t i = 0; i < curve.size(); ++i)
        tab.add_row({fmt_number(curve[i].t), fmt_number(curve[i].alpha_bar), fmt_number(curve[i].mean),
                     fmt_number(curve[i].std_error), exact[i] ? fmt_number(*exact[i]) : std::string()});
    return tab;
}

CsvTable schedule_table(const NoiseSchedule& s)
{
    CsvTable tab;
    tab.header = {"t", "beta", "alpha", "alpha_bar", "one_minus_alpha_bar", "step_ratio", "ratio_bound", "ratio_pass"};
    const auto report = validate_step_ratio(s);
    for (int t = 1; t <= s.T(); ++t) {
        std::vector<std::string> row{fmt_number(t), fmt_number(s.beta(t)), fmt_number(s.alpha(t)),
                                     fmt_number(s.alpha_bar(t)), fmt_number(s.one_minus_alpha_bar(t))};
        if (t == 1) {
            row.insert(row.end(), {"", "", ""});
        } else {
            const auto& r = report.steps[static_cast<std::size_t>(t - 2)];
            row.insert(row.end(), {fmt_number(r.ratio), fmt_number(r.bound), fmt_bool(r.pass)});
        }
        tab.add_row(std::move(row));
    }
    return tab;
}

CsvTable coefficient_table(const NoiseSchedule& s, const CoefficientPlan& plan, double C1)
{
    CsvTable tab;
    tab.header = {"t", "eta", "sigma", "residual", "eta_cap"};
    const auto c23 = eta_cap_check(plan, s, C1);
    for (int t = 1; t <= s.T(); ++t)
        tab.add_row({fmt_number(t), fmt_number(plan.eta_at(t)), fmt_number(plan.sigma_at(t)),
                     fmt_number(relation_residual(plan, s, t)),
                     c23.flagged[static_cast<std::size_t>(t - 1)] ? "flagged" : "pass"});
    return tab;
}

SampleResult exp_sample(const RunConfig& cfg, bool record_trajectory, int threads)
{
    const TargetSpec target = make_target(cfg);
    const NoiseSchedule s = make_schedule(cfg);
    const CoefficientPlan plan = plan_for_family(s, make_family(cfg));
    const ScoreOracle oracle(target, s, make_perturbation(cfg, target, s));

    ReverseRunConfig rc;
    rc.analytic = cfg.sampler.analytic;
    rc.n_particles = cfg.mc.n_samples;
    rc.threads = threads;
    rc.record_trajectory = record_trajectory;
    const auto run = run_reverse(plan, oracle, rc, RngPolicy(cfg.mc.master_seed));

    SampleResult out;
    if (const auto* a = std::get_if<AnalyticState>(&run.final_state)) {
        out.mean = a->law.mean;
        out.variance = a->law.cov_diag;
    } else {
        const auto& e = std::get<Ensemble>(run.final_state);
        out.mean = e.particles.column_means();
        out.variance = e.particles.n > 1 ? e.particles.column_variances() : std::vector<double>(target.dim(), 0.0);
    }
    if (target.is_gaussian())
        out.target_variance = forward_gaussian(target, s.alpha_bar(1)).cov_diag;
    out.trajectory = run.trajectory;
    return out;
}

CsvTable SampleResult::table() const
{
    CsvTable tab;
    tab.header = {"coord", "mean", "variance", "target_variance"};
    for (std::size_t i = 0; i < mean.size(); ++i)
        tab.add_row({fmt_number(i), fmt_number(mean[i]), fmt_number(variance[i]),
                     target_variance.empty() ? "" : fmt_number(target_variance[i])});
    return tab;
}

CsvTable SampleResult::trajectory_table() const
{
    CsvTable tab;
    tab.header = {"t", "coord", "mean", "variance"};
    for (const auto& p : trajectory)
        for (std::size_t i = 0; i < p.variance.size(); ++i)
            tab.add_row({fmt_number(p.t), fmt_number(i), fmt_number(p.mean[i]), fmt_number(p.variance[i])});
    return tab;
}

} // namespace ddlab
