#include "ddlab/coefficients.hpp"

#include "ddlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ddlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string at_step(int t) { return " at step " + std::to_string(t); }

double ddim_original_eta(const StepLevels& lv)
{
    if (lv.alpha_minus_alpha_bar == 0.0)
        return lv.beta;
    return lv.beta / (1.0 + std::sqrt(lv.alpha_minus_alpha_bar / lv.one_minus_alpha_bar));
}

double step_value(const std::vector<double>& values, int t, const char* what)
{
    if (values.size() == 1)
        return values.front();
    if (static_cast<int>(values.size()) < t)
        throw NumericError(std::string(what) + " has fewer entries than the schedule horizon");
    return values[static_cast<std::size_t>(t - 1)];
}

} // namespace

std::string family_name(const CoefficientFamily& f)
{
    return std::visit(Overloaded{
                          [](const family::DdimOriginal&) -> std::string { return "ddim_original"; },
                          [](const family::DdimHalfBeta&) -> std::string { return "ddim_half_beta"; },
                          [](const family::DdimSongScore&) -> std::string { return "ddim_song_score"; },
                          [](const family::DdpmOriginal&) -> std::string { return "ddpm_original"; },
                          [](const family::DdpmBenton&) -> std::string { return "ddpm_benton"; },
                          [](const family::DdpmLi&) -> std::string { return "ddpm_li"; },
                          [](const family::GeneralizedXi&) -> std::string { return "generalized_xi"; },
                          [](const family::Varsigma&) -> std::string { return "varsigma"; },
                          [](const family::Custom&) -> std::string { return "custom"; },
                      },
                      f);
}

CoefficientFamily family_from_name(const std::string& name, double xi)
{
    if (name == "ddim_original") return family::DdimOriginal{};
    if (name == "ddim_half_beta") return family::DdimHalfBeta{};
    if (name == "ddim_song_score") return family::DdimSongScore{};
    if (name == "ddpm_original") return family::DdpmOriginal{};
    if (name == "ddpm_benton") return family::DdpmBenton{};
    if (name == "ddpm_li") return family::DdpmLi{};
    if (name == "generalized_xi") return family::GeneralizedXi{xi, {}};
    throw ConfigError("unknown coefficient family '" + name + "'");
}

bool family_satisfies_relation(const CoefficientFamily& f)
{
    return std::holds_alternative<family::DdimOriginal>(f) || std::holds_alternative<family::DdpmOriginal>(f) ||
           std::holds_alternative<family::GeneralizedXi>(f) || std::holds_alternative<family::Varsigma>(f);
}

bool CoefficientPlan::deterministic() const
{
    return std::all_of(sigma.begin(), sigma.end(), [](double s) { return s == 0.0; });
}

CoefficientPlan plan_for_family(const NoiseSchedule& s, const CoefficientFamily& f)
{
    if (const auto* g = std::get_if<family::GeneralizedXi>(&f))
        return xi_plan(s, *g);
    if (const auto* v = std::get_if<family::Varsigma>(&f))
        return varsigma_to_plan(s, v->varsigma);

    const int T = s.T();
    CoefficientPlan plan{f, std::vector<double>(static_cast<std::size_t>(T)), std::vector<double>(static_cast<std::size_t>(T), 0.0)};

    if (const auto* c = std::get_if<family::Custom>(&f)) {
        for (int t = 1; t <= T; ++t) {
            const double sigma = step_value(c->sigma, t, "custom sigma");
            if (!(sigma >= 0.0))
                throw NumericError("family inadmissible" + at_step(t) + ": negative sigma");
            plan.eta[static_cast<std::size_t>(t - 1)] = step_value(c->eta, t, "custom eta");
            plan.sigma[static_cast<std::size_t>(t - 1)] = sigma;
        }
        return plan;
    }

    for (int t = 1; t <= T; ++t) {
        const StepLevels lv = s.levels(t);
        const double a = lv.alpha;
        double eta = 0.0;
        double sigma = 0.0;
        std::visit(Overloaded{
                       [&](const family::DdimOriginal&) { eta = ddim_original_eta(lv); },
                       [&](const family::DdimHalfBeta&) { eta = lv.beta / 2.0; },
                       [&](const family::DdimSongScore&) {
                           eta = (-1.0 + 4.0 * std::sqrt(a) - 3.0 * a) / (2.0 * std::sqrt(a));
                       },
                       [&](const family::DdpmOriginal&) {
                           eta = lv.beta;
                           sigma = std::sqrt(lv.beta * lv.alpha_minus_alpha_bar / lv.one_minus_alpha_bar);
                       },
                       [&](const family::DdpmBenton&) {
                           eta = 2.0 * (1.0 - std::sqrt(a));
                           sigma = std::sqrt(lv.beta);
                       },
                       [&](const family::DdpmLi&) {
                           eta = lv.beta;
                           sigma = std::sqrt(lv.beta);
                       },
                       [](const auto&) {},
                   },
                   f);
        plan.eta[static_cast<std::size_t>(t - 1)] = eta;
        plan.sigma[static_cast<std::size_t>(t - 1)] = sigma;
    }
    return plan;
}

double relation_residual(const StepLevels& lv, double eta, double sigma)
{
    const double shrink = 1.0 - eta / lv.one_minus_alpha_bar;
    return lv.one_minus_alpha_bar * shrink * shrink - (lv.alpha_minus_alpha_bar - sigma * sigma);
}

double relation_residual(const CoefficientPlan& plan, const NoiseSchedule& s, int t)
{
    return relation_residual(s.levels(t), plan.eta_at(t), plan.sigma_at(t));
}

EtaCapReport eta_cap_check(const CoefficientPlan& plan, const NoiseSchedule& s, double C1)
{
    if (!(C1 >= 0.5))
        throw NumericError("constraint check requires C1 >= 1/2");
    EtaCapReport report;
    for (int t = 1; t <= s.T(); ++t) {
        const double cap = std::min(C1 * s.beta(t), s.one_minus_alpha_bar(t) / 2.0);
        const bool flag = plan.eta_at(t) > cap;
        report.flagged.push_back(flag);
        report.all_pass = report.all_pass && !flag;
    }
    return report;
}

SegmentCoefficients xi_segment_coefficients(double gamma_n, double one_minus_gamma_n_sq, double gamma_np1,
                                            double one_minus_gamma_np1_sq, double gamma_gap_sq, double xi)
{
    if (!(gamma_n > 0.0 && gamma_n < 1.0) || !(gamma_np1 > 0.0 && gamma_np1 < 1.0))
        throw NumericError("invalid segment: gamma values must lie in (0, 1)");
    if (!(gamma_n < gamma_np1) || !(gamma_gap_sq > 0.0))
        throw NumericError("invalid segment: gamma_n must be below gamma_{n+1}");
    if (!(xi >= 0.0))
        throw NumericError("invalid segment: xi must be nonnegative");

    // With f(g) = g^xi / (1-g^2)^((1+xi)/2), F(g) = g f(g) and H(g) = g^(2 xi) / (1-g^2)^xi:
    //   A_n = F(gamma_np1) - F(gamma_n),  B_n = H(gamma_np1) - H(gamma_n),
    //   eta = (1 - gamma_n^2) A_n / (gamma_np1 f(gamma_np1)),  sigma = (gamma_n / gamma_np1) sqrt(B_n) / f(gamma_np1).
    // F(gamma_n)/F(gamma_np1) = q^((1+xi)/2) and H(gamma_n)/H(gamma_np1) = q^xi with
    // q = gamma_n^2 (1-gamma_np1^2) / (gamma_np1^2 (1-gamma_n^2)), so both increments are
    // formed from 1 - q = (gamma_np1^2 - gamma_n^2) / (gamma_np1^2 (1 - gamma_n^2)).
    const double one_minus_q = gamma_gap_sq / (gamma_np1 * gamma_np1 * one_minus_gamma_n_sq);
    const double log_q = std::log1p(-one_minus_q);
    const double a_fraction = -std::expm1(0.5 * (1.0 + xi) * log_q);
    const double b_fraction = -std::expm1(xi * log_q);

    SegmentCoefficients out;
    const double ratio = gamma_n / gamma_np1;
    out.alpha_step = ratio * ratio;
    out.eta = one_minus_gamma_n_sq * a_fraction;
    out.sigma = ratio * std::sqrt(one_minus_gamma_np1_sq * std::max(b_fraction, 0.0));
    return out;
}

SegmentCoefficients xi_segment_coefficients(double gamma_n, double one_minus_gamma_n_sq, double gamma_np1,
                                            double one_minus_gamma_np1_sq, double xi)
{
    return xi_segment_coefficients(gamma_n, one_minus_gamma_n_sq, gamma_np1, one_minus_gamma_np1_sq,
                                   (gamma_np1 - gamma_n) * (gamma_np1 + gamma_n), xi);
}

SegmentCoefficients xi_segment_coefficients(double gamma_n, double gamma_np1, double xi)
{
    return xi_segment_coefficients(gamma_n, (1.0 - gamma_n) * (1.0 + gamma_n), gamma_np1,
                                   (1.0 - gamma_np1) * (1.0 + gamma_np1), xi);
}

CoefficientPlan xi_plan(const NoiseSchedule& s, const family::GeneralizedXi& f)
{
    const int T = s.T();
    CoefficientPlan plan{f, std::vector<double>(static_cast<std::size_t>(T)), std::vector<double>(static_cast<std::size_t>(T), 0.0)};
    for (int t = 1; t <= T; ++t) {
        const double xi = f.per_step.empty() ? f.xi : step_value(f.per_step, t, "xi schedule");
        if (!(xi >= 0.0))
            throw NumericError("family inadmissible" + at_step(t) + ": xi must be nonnegative");
        auto& eta = plan.eta[static_cast<std::size_t>(t - 1)];
        auto& sigma = plan.sigma[static_cast<std::size_t>(t - 1)];
        if (t == 1) {
            // gamma_{n+1} = 1: the segment reaches the data end, where A_n/f -> 1 and B_n/f^2 -> 0.
            eta = s.beta(1);
            sigma = 0.0;
            continue;
        }
        // gamma_np1^2 - gamma_n^2 = abar_{t-1} beta_t.
        const auto seg = xi_segment_coefficients(std::sqrt(s.alpha_bar(t)), s.one_minus_alpha_bar(t),
                                                 std::sqrt(s.alpha_bar(t - 1)), s.one_minus_alpha_bar(t - 1),
                                                 s.alpha_bar(t - 1) * s.beta(t), xi);
        eta = seg.eta;
        sigma = seg.sigma;
    }
    return plan;
}

CoefficientPlan varsigma_to_plan(const NoiseSchedule& s, const std::vector<double>& varsigma)
{
    const int T = s.T();
    CoefficientPlan plan{family::Varsigma{varsigma}, std::vector<double>(static_cast<std::size_t>(T)),
                         std::vector<double>(static_cast<std::size_t>(T), 0.0)};
    for (int t = 1; t <= T; ++t) {
        const StepLevels lv = s.levels(t);
        const double vs = step_value(varsigma, t, "varsigma");
        if (!(vs >= 0.0))
            throw NumericError("varsigma inadmissible" + at_step(t) + ": negative value");
        const double radicand = lv.alpha_minus_alpha_bar - lv.alpha * vs * vs;
        // Rounding slack only; anything beyond a few ulps of the terms is a genuine violation.
        const double slack = 8.0 * std::numeric_limits<double>::epsilon() * lv.alpha_minus_alpha_bar;
        if (radicand < -slack)
            throw NumericError("varsigma inadmissible" + at_step(t));
        plan.eta[static_cast<std::size_t>(t - 1)] =
            lv.one_minus_alpha_bar - std::sqrt(lv.one_minus_alpha_bar * std::max(radicand, 0.0));
        plan.sigma[static_cast<std::size_t>(t - 1)] = std::sqrt(lv.alpha) * vs;
    }
    return plan;
}

} // namespace ddlab
