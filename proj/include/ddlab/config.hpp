#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ddlab {

/// Flat key -> raw value view of a config file. `[section]` headers prefix the
/// keys that follow them ("section.key").
using RawConfig = std::map<std::string, std::string>;

RawConfig parse_config_text(const std::string& text);
RawConfig read_config_file(const std::string& path);

struct TargetBlock {
    std::string kind = "low_rank_gaussian";
    std::size_t d = 2;
    std::size_t k = 1;
    std::vector<double> variances;
    std::string atoms_file;
    std::vector<double> weights;
    double support_radius = -1.0;
};

struct ScheduleBlock {
    int T = 64;
    double c0 = 2.0;
    double c1 = 4.0;
};

struct SamplerBlock {
    std::string family = "ddim_original";
    std::vector<double> xi{0.0}; // one value, or one per step
    std::string varsigma_file;
    std::string eta_file;
    std::string sigma_file;
    bool analytic = true;
    double C1 = 1.0;
};

struct McBlock {
    std::size_t n_samples = 10000;
    std::uint64_t master_seed = 0;
};

struct PerturbationBlock {
    std::string kind = "none"; // none | constant_shift | linear_field
    double magnitude = 0.0;
    std::vector<double> direction;
};

struct SweepBlock {
    std::vector<int> T_grid{32, 64, 128, 256, 512, 1024, 2048};
    std::vector<std::size_t> k_grid;
    std::vector<std::string> families;
};

struct LowerBoundBlock {
    int t = 0; // 0 picks the step whose alpha_bar is closest to 0.5
    std::vector<double> scales{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 4.0 / 3.0, 5.0 / 3.0, 2.0};
    /// Either one set replaces the grid with the single pair; the other defaults to the DDPM value.
    std::optional<double> eta;
    std::optional<double> sigma;
};

struct ScoreErrorBlock {
    std::vector<double> eps_grid{0.0, 1e-3, 1e-2, 1e-1};
};

struct AuditBlock {
    std::vector<int> T_grid{16, 128, 1024};
    std::vector<double> xi_grid{0.0, 0.25, 0.5, 1.0, 2.0};
};

struct RunConfig {
    std::string experiment;
    TargetBlock target;
    ScheduleBlock schedule;
    SamplerBlock sampler;
    McBlock mc;
    PerturbationBlock perturbation;
    SweepBlock sweep;
    LowerBoundBlock lowerbound;
    ScoreErrorBlock score_error;
    AuditBlock audit;
    std::string output_path;
};

/// Applies every key of `raw` onto `base`. Unknown keys and malformed values
/// throw ConfigError naming the key path.
RunConfig apply_config(const RawConfig& raw, RunConfig base = {});
/// Checks the cross-field invariants (T >= 2, n >= 1, referenced files exist, ...).
void validate(const RunConfig& cfg);

/// Stable text rendering of every field that can influence results.
std::string canonical_string(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

/// Comma/whitespace/newline separated numbers; '#' starts a comment.
std::vector<double> read_number_file(const std::string& path);
/// One point per line, coordinates comma separated.
std::vector<std::vector<double>> read_points_file(const std::string& path);

std::vector<double> parse_number_list(const std::string& key, const std::string& value);

} // namespace ddlab
