#pragma once

#include "ddlab/schedule.hpp"

#include <string>
#include <variant>
#include <vector>

namespace ddlab {

namespace family {
// Deterministic (sigma = 0) choices.
struct DdimOriginal {};
struct DdimHalfBeta {};
struct DdimSongScore {};
// Stochastic choices.
struct DdpmOriginal {};
struct DdpmBenton {};
struct DdpmLi {};
/// Exponential-integrator discretization of the generalized reverse dynamics
/// with noise weight xi. `per_step`, when non-empty, overrides `xi` and holds
/// one value per step (index 0 is t = 1).
struct GeneralizedXi {
    double xi = 0.0;
    std::vector<double> per_step;
};
/// Parametrization by the DDIM noise scale varsigma_t (index 0 is t = 1).
struct Varsigma {
    std::vector<double> varsigma;
};
struct Custom {
    std::vector<double> eta;
    std::vector<double> sigma;
};
} // namespace family

using CoefficientFamily = std::variant<family::DdimOriginal, family::DdimHalfBeta, family::DdimSongScore,
                                       family::DdpmOriginal, family::DdpmBenton, family::DdpmLi,
                                       family::GeneralizedXi, family::Varsigma, family::Custom>;

std::string family_name(const CoefficientFamily& f);
/// Parses the parameter-free names plus "generalized_xi" (with `xi`).
CoefficientFamily family_from_name(const std::string& name, double xi = 0.0);
/// Whether the family is constructed to satisfy the coefficient relation
/// (1 - abar)(1 - eta/(1 - abar))^2 = alpha - abar - sigma^2 at every step.
bool family_satisfies_relation(const CoefficientFamily& f);

/// Per-step reverse coefficients. Index 0 holds step t = 1.
struct CoefficientPlan {
    CoefficientFamily family;
    std::vector<double> eta;
    std::vector<double> sigma;

    int T() const { return static_cast<int>(eta.size()); }
    double eta_at(int t) const { return eta.at(static_cast<std::size_t>(t - 1)); }
    double sigma_at(int t) const { return sigma.at(static_cast<std::size_t>(t - 1)); }
    bool deterministic() const;
};

CoefficientPlan plan_for_family(const NoiseSchedule& s, const CoefficientFamily& f);

/// (1 - abar_t)(1 - eta_t/(1 - abar_t))^2 - (alpha_t - abar_t - sigma_t^2), signed.
double relation_residual(const CoefficientPlan& plan, const NoiseSchedule& s, int t);
double relation_residual(const StepLevels& lv, double eta, double sigma);

struct EtaCapReport {
    std::vector<bool> flagged; // index 0 is t = 1; true where eta_t > min{C1(1-alpha_t), (1-abar_t)/2}
    bool all_pass = true;
};

/// Report only. Requires C1 >= 1/2.
EtaCapReport eta_cap_check(const CoefficientPlan& plan, const NoiseSchedule& s, double C1);

struct SegmentCoefficients {
    double alpha_step = 0.0;
    double eta = 0.0;
    double sigma = 0.0;
};

/// Exact solution of the generalized reverse dynamics over one segment,
/// written in DDPM form. gamma_n = sqrt(abar_t), gamma_np1 = sqrt(abar_{t-1}).
SegmentCoefficients xi_segment_coefficients(double gamma_n, double gamma_np1, double xi);

/// Same segment, with 1 - gamma^2 supplied by the caller so that values close
/// to one keep full relative precision.
SegmentCoefficients xi_segment_coefficients(double gamma_n, double one_minus_gamma_n_sq, double gamma_np1,
                                            double one_minus_gamma_np1_sq, double xi);

/// As above, with gamma_np1^2 - gamma_n^2 also supplied.
SegmentCoefficients xi_segment_coefficients(double gamma_n, double one_minus_gamma_n_sq, double gamma_np1,
                                            double one_minus_gamma_np1_sq, double gamma_gap_sq, double xi);

/// Maps xi_segment_coefficients over a schedule. Step t = 1 (where
/// abar_0 = 1) takes the segment's limit eta = 1 - alpha_1, sigma = 0.
CoefficientPlan xi_plan(const NoiseSchedule& s, const family::GeneralizedXi& f);

/// eta_t = (1 - abar_t) - sqrt((1 - abar_t)(alpha_t - abar_t - alpha_t varsigma_t^2)),
/// sigma_t = sqrt(alpha_t) varsigma_t.
CoefficientPlan varsigma_to_plan(const NoiseSchedule& s, const std::vector<double>& varsigma);

} // namespace ddlab
