#include "ddlab/config.hpp"
#include "ddlab/csv.hpp"
#include "ddlab/errors.hpp"
#include "ddlab/experiments.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

using namespace ddlab;

namespace {

// Flag values are kept as text and applied as config keys, so they go through
// the same parsing and key-path error messages as a config file.
struct FlagSet {
    std::map<std::string, std::string> values;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help)
    {
        app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }
};

struct Globals {
    std::string config_path;
    std::string out_path;
    std::string traj_out;
    int threads = 1;
};

RunConfig load(const Globals& g, const FlagSet& flags, const std::string& experiment)
{
    RawConfig raw = g.config_path.empty() ? RawConfig{} : read_config_file(g.config_path);
    for (const auto& [k, v] : flags.values)
        raw[k] = v;
    RunConfig cfg = apply_config(raw);
    cfg.experiment = experiment;
    if (!g.out_path.empty())
        cfg.output_path = g.out_path;
    if (g.threads < 1)
        throw ConfigError("--threads: must be >= 1");
    validate(cfg);
    return cfg;
}

void emit(const RunConfig& cfg, const CsvTable& table, const std::string& path)
{
    const std::string text = render_csv(table, {config_hash(cfg), cfg.mc.master_seed});
    if (path.empty() || path == "-")
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        write_file_atomic(path, text);
}

int run(int argc, char** argv)
{
    CLI::App app{"Diffusion sampler coefficient and convergence lab"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    FlagSet flags;
    app.add_option("--config", g.config_path, "Run config file (key = value, [section] headers)");
    flags.add(&app, "--seed", "mc.master_seed", "Master seed");
    app.add_option("--out", g.out_path, "Output CSV path (stdout when absent)");
    app.add_option("--threads", g.threads, "Worker threads; results do not depend on it");

    auto schedule_flags = [&](CLI::App* sub) {
        flags.add(sub, "--T", "schedule.T", "Number of steps");
        flags.add(sub, "--c0", "schedule.c0", "beta_1 = T^-c0");
        flags.add(sub, "--c1", "schedule.c1", "Growth constant");
    };
    auto target_flags = [&](CLI::App* sub) {
        flags.add(sub, "--target", "target.kind", "low_rank_gaussian | diag_gaussian | atom_mixture");
        flags.add(sub, "--d", "target.d", "Ambient dimension");
        flags.add(sub, "--k", "target.k", "Intrinsic dimension");
    };
    auto family_flags = [&](CLI::App* sub) {
        flags.add(sub, "--family", "sampler.family", "Coefficient family");
        flags.add(sub, "--xi", "sampler.xi", "xi for generalized_xi (one value or one per step)");
        flags.add(sub, "--varsigma-file", "sampler.varsigma_file", "varsigma values for the varsigma family");
    };

    auto* schedule = app.add_subcommand("schedule", "Print the noise schedule and step-ratio audit");
    schedule_flags(schedule);

    auto* coeffs = app.add_subcommand("coeffs", "Per-step coefficients, relation residual and constraint flags");
    schedule_flags(coeffs);
    family_flags(coeffs);
    flags.add(coeffs, "--C1", "sampler.C1", "Constant in the eta cap (>= 1/2)");

    auto* sample = app.add_subcommand("sample", "Run the reverse sampler and report the law of Y_1");
    schedule_flags(sample);
    target_flags(sample);
    family_flags(sample);
    flags.add(sample, "--n", "mc.n_samples", "Particles for ensemble runs");
    sample->add_flag_callback("--analytic", [&] { flags.values["sampler.analytic"] = "true"; },
                              "Propagate the Gaussian law exactly");
    sample->add_flag_callback("--ensemble", [&] { flags.values["sampler.analytic"] = "false"; }, "Simulate particles");
    sample->add_option("--traj-out", g.traj_out, "Per-step t,coord,mean,variance CSV");

    auto* sweep = app.add_subcommand("sweep", "Proxy and TV of Y_1 vs X_1 over a T grid, with log-log slope");
    schedule_flags(sweep);
    target_flags(sweep);
    family_flags(sweep);
    flags.add(sweep, "--n", "mc.n_samples", "Monte-Carlo samples per TV estimate");
    flags.add(sweep, "--T-grid", "sweep.T_grid", "Comma-separated T values");
    flags.add(sweep, "--k-grid", "sweep.k_grid", "Comma-separated k values (low-rank targets)");
    flags.add(sweep, "--families", "sweep.families", "Comma-separated families");

    auto* lowerbound = app.add_subcommand("lowerbound", "One-step lower bound vs Monte-Carlo TV");
    schedule_flags(lowerbound);
    target_flags(lowerbound);
    flags.add(lowerbound, "--t", "lowerbound.t", "Step (default: abar closest to 0.5)");
    flags.add(lowerbound, "--grid", "lowerbound.scales", "Scale factors applied to the DDPM (eta, sigma) pair");
    flags.add(lowerbound, "--eta", "lowerbound.eta", "Single eta instead of the grid");
    flags.add(lowerbound, "--sigma", "lowerbound.sigma", "Single sigma instead of the grid");
    flags.add(lowerbound, "--n", "mc.n_samples", "Monte-Carlo samples per cell");

    auto* score_error = app.add_subcommand("score-error", "Final-law degradation under injected score error");
    schedule_flags(score_error);
    target_flags(score_error);
    flags.add(score_error, "--family", "sampler.family", "Coefficient family");
    flags.add(score_error, "--perturbation", "score.perturbation.kind", "constant_shift | linear_field");
    flags.add(score_error, "--eps-grid", "score_error.eps_grid", "Comma-separated epsilon values");

    auto* trace = app.add_subcommand("trace", "Monte-Carlo E[tr Cov(X_0 | X_t)] for every t");
    schedule_flags(trace);
    target_flags(trace);
    flags.add(trace, "--n", "mc.n_samples", "Forward samples per step");

    auto* audit = app.add_subcommand("audit", "Relation residuals and constraint flags for all families");
    flags.add(audit, "--T-grid", "audit.T_grid", "Comma-separated T values");
    flags.add(audit, "--xi-grid", "audit.xi_grid", "Comma-separated xi values");
    flags.add(audit, "--C1", "sampler.C1", "Constant in the eta cap (>= 1/2)");
    schedule_flags(audit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    const RunConfig cfg = load(g, flags, name);
    const std::string& out = cfg.output_path;

    if (chosen == schedule) {
        emit(cfg, schedule_table(make_schedule(cfg)), out);
    } else if (chosen == coeffs) {
        const auto s = make_schedule(cfg);
        emit(cfg, coefficient_table(s, plan_for_family(s, make_family(cfg)), cfg.sampler.C1), out);
    } else if (chosen == sample) {
        const auto result = exp_sample(cfg, !g.traj_out.empty(), g.threads);
        if (!g.traj_out.empty())
            emit(cfg, result.trajectory_table(), g.traj_out);
        emit(cfg, result.table(), out);
    } else if (chosen == sweep) {
        emit(cfg, exp_rate_sweep(cfg, g.threads).table(), out);
    } else if (chosen == lowerbound) {
        emit(cfg, exp_onestep_lb(cfg, g.threads).table(), out);
    } else if (chosen == score_error) {
        emit(cfg, exp_score_error(cfg, g.threads).table(), out);
    } else if (chosen == trace) {
        emit(cfg, exp_posterior_trace(cfg, g.threads).table(), out);
    } else if (chosen == audit) {
        emit(cfg, exp_coeff_audit(cfg).table(), out);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
