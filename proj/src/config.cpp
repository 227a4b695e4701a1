#include "ddlab/config.hpp"

#include "ddlab/errors.hpp"
#include "ddlab/rng.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace ddlab {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line)
{
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

double parse_double(const std::string& key, const std::string& value)
{
    const std::string v = trim(value);
    char* end = nullptr;
    errno = 0;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(out))
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    return out;
}

long long parse_integer(const std::string& key, const std::string& value)
{
    const std::string v = trim(value);
    char* end = nullptr;
    errno = 0;
    const long long out = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    return out;
}

std::size_t parse_count(const std::string& key, const std::string& value)
{
    const long long v = parse_integer(key, value);
    if (v < 0)
        throw ConfigError(key + ": expected a nonnegative integer");
    return static_cast<std::size_t>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value)
{
    const std::string v = trim(value);
    char* end = nullptr;
    errno = 0;
    const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || v.front() == '-' || end != v.c_str() + v.size() || errno == ERANGE)
        throw ConfigError(key + ": expected an unsigned 64-bit integer, got '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    const std::string v = trim(value);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> items;
    std::string cur;
    for (char c : value) {
        if (c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            if (!cur.empty())
                items.push_back(cur);
            cur.clear();
        } else if (c != '[' && c != ']') {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        items.push_back(cur);
    return items;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F&& f)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            out += ",";
        out += f(v[i]);
    }
    return out;
}

} // namespace

std::vector<double> parse_number_list(const std::string& key, const std::string& value)
{
    std::vector<double> out;
    for (const auto& item : split_list(value))
        out.push_back(parse_double(key, item));
    return out;
}

RawConfig parse_config_text(const std::string& text)
{
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(strip_comment(line));
        if (body.empty())
            continue;
        if (body.front() == '[') {
            if (body.back() != ']' || body.size() < 3)
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(body.substr(1, body.size() - 2));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (raw.count(full))
            throw ConfigError(full + ": duplicate key");
        std::string value = trim(body.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        raw[full] = value;
    }
    return raw;
}

RawConfig read_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config file '" + path + "' cannot be read");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

RunConfig apply_config(const RawConfig& raw, RunConfig cfg)
{
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"experiment", [&](auto&, auto& v) { cfg.experiment = v; }},
        {"output.path", [&](auto&, auto& v) { cfg.output_path = v; }},
        {"target.kind", [&](auto&, auto& v) { cfg.target.kind = v; }},
        {"target.d", [&](auto& k, auto& v) { cfg.target.d = parse_count(k, v); }},
        {"target.k", [&](auto& k, auto& v) { cfg.target.k = parse_count(k, v); }},
        {"target.variances", [&](auto& k, auto& v) { cfg.target.variances = parse_number_list(k, v); }},
        {"target.atoms_file", [&](auto&, auto& v) { cfg.target.atoms_file = v; }},
        {"target.weights", [&](auto& k, auto& v) { cfg.target.weights = parse_number_list(k, v); }},
        {"target.support_radius", [&](auto& k, auto& v) { cfg.target.support_radius = parse_double(k, v); }},
        {"schedule.T", [&](auto& k, auto& v) { cfg.schedule.T = static_cast<int>(parse_integer(k, v)); }},
        {"schedule.c0", [&](auto& k, auto& v) { cfg.schedule.c0 = parse_double(k, v); }},
        {"schedule.c1", [&](auto& k, auto& v) { cfg.schedule.c1 = parse_double(k, v); }},
        {"sampler.family", [&](auto&, auto& v) { cfg.sampler.family = v; }},
        {"sampler.xi", [&](auto& k, auto& v) { cfg.sampler.xi = parse_number_list(k, v); }},
        {"sampler.varsigma_file", [&](auto&, auto& v) { cfg.sampler.varsigma_file = v; }},
        {"sampler.eta_file", [&](auto&, auto& v) { cfg.sampler.eta_file = v; }},
        {"sampler.sigma_file", [&](auto&, auto& v) { cfg.sampler.sigma_file = v; }},
        {"sampler.analytic", [&](auto& k, auto& v) { cfg.sampler.analytic = parse_bool(k, v); }},
        {"sampler.C1", [&](auto& k, auto& v) { cfg.sampler.C1 = parse_double(k, v); }},
        {"mc.n_samples", [&](auto& k, auto& v) { cfg.mc.n_samples = parse_count(k, v); }},
        {"mc.master_seed", [&](auto& k, auto& v) { cfg.mc.master_seed = parse_u64(k, v); }},
        {"score.perturbation.kind", [&](auto&, auto& v) { cfg.perturbation.kind = v; }},
        {"score.perturbation.magnitude", [&](auto& k, auto& v) { cfg.perturbation.magnitude = parse_double(k, v); }},
        {"score.perturbation.direction", [&](auto& k, auto& v) { cfg.perturbation.direction = parse_number_list(k, v); }},
        {"sweep.T_grid", [&](auto& k, auto& v) {
             cfg.sweep.T_grid.clear();
             for (const auto& item : split_list(v))
                 cfg.sweep.T_grid.push_back(static_cast<int>(parse_integer(k, item)));
         }},
        {"sweep.k_grid", [&](auto& k, auto& v) {
             cfg.sweep.k_grid.clear();
             for (const auto& item : split_list(v))
                 cfg.sweep.k_grid.push_back(parse_count(k, item));
         }},
        {"sweep.families", [&](auto&, auto& v) { cfg.sweep.families = split_list(v); }},
        {"lowerbound.t", [&](auto& k, auto& v) { cfg.lowerbound.t = static_cast<int>(parse_integer(k, v)); }},
        {"lowerbound.eta", [&](auto& k, auto& v) { cfg.lowerbound.eta = parse_double(k, v); }},
        {"lowerbound.sigma", [&](auto& k, auto& v) { cfg.lowerbound.sigma = parse_double(k, v); }},
        {"lowerbound.scales", [&](auto& k, auto& v) { cfg.lowerbound.scales = parse_number_list(k, v); }},
        {"score_error.eps_grid", [&](auto& k, auto& v) { cfg.score_error.eps_grid = parse_number_list(k, v); }},
        {"audit.T_grid", [&](auto& k, auto& v) {
             cfg.audit.T_grid.clear();
             for (const auto& item : split_list(v))
                 cfg.audit.T_grid.push_back(static_cast<int>(parse_integer(k, item)));
         }},
        {"audit.xi_grid", [&](auto& k, auto& v) { cfg.audit.xi_grid = parse_number_list(k, v); }},
    };
    for (const auto& [key, value] : raw) {
        const auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError(key + ": unknown key");
        it->second(key, value);
    }
    return cfg;
}

void validate(const RunConfig& cfg)
{
    if (cfg.schedule.T < 2)
        throw ConfigError("schedule.T: must be >= 2");
    if (!(cfg.schedule.c0 > 0.0) || !(cfg.schedule.c1 > 0.0))
        throw ConfigError("schedule.c0/schedule.c1: must be positive");
    if (cfg.mc.n_samples < 1)
        throw ConfigError("mc.n_samples: must be >= 1");
    const auto& kind = cfg.target.kind;
    if (kind != "low_rank_gaussian" && kind != "diag_gaussian" && kind != "atom_mixture")
        throw ConfigError("target.kind: unknown target '" + kind + "'");
    if (kind == "atom_mixture" && cfg.target.atoms_file.empty())
        throw ConfigError("target.atoms_file: required for atom_mixture");
    const auto& pk = cfg.perturbation.kind;
    if (pk != "none" && pk != "constant_shift" && pk != "linear_field")
        throw ConfigError("score.perturbation.kind: unknown perturbation '" + pk + "'");
    for (const auto* f : {&cfg.target.atoms_file, &cfg.sampler.varsigma_file, &cfg.sampler.eta_file, &cfg.sampler.sigma_file})
        if (!f->empty() && !std::filesystem::exists(*f))
            throw ConfigError("referenced file '" + *f + "' does not exist");
    for (int T : cfg.sweep.T_grid)
        if (T < 2)
            throw ConfigError("sweep.T_grid: every T must be >= 2");
    if (cfg.lowerbound.sigma && !(*cfg.lowerbound.sigma >= 0.0))
        throw ConfigError("lowerbound.sigma: must be nonnegative");
    for (int T : cfg.audit.T_grid)
        if (T < 2)
            throw ConfigError("audit.T_grid: every T must be >= 2");
}

std::string canonical_string(const RunConfig& cfg)
{
    auto num = [](double v) { return fmt(v); };
    auto integer = [](auto v) { return std::to_string(v); };
    auto str = [](const std::string& s) { return s; };
    std::ostringstream out;
    out << "experiment=" << cfg.experiment << "\n"
        << "target.kind=" << cfg.target.kind << "\n"
        << "target.d=" << cfg.target.d << "\n"
        << "target.k=" << cfg.target.k << "\n"
        << "target.variances=" << join(cfg.target.variances, num) << "\n"
        << "target.atoms_file=" << cfg.target.atoms_file << "\n"
        << "target.weights=" << join(cfg.target.weights, num) << "\n"
        << "target.support_radius=" << fmt(cfg.target.support_radius) << "\n"
        << "schedule.T=" << cfg.schedule.T << "\n"
        << "schedule.c0=" << fmt(cfg.schedule.c0) << "\n"
        << "schedule.c1=" << fmt(cfg.schedule.c1) << "\n"
        << "sampler.family=" << cfg.sampler.family << "\n"
        << "sampler.xi=" << join(cfg.sampler.xi, num) << "\n"
        << "sampler.varsigma_file=" << cfg.sampler.varsigma_file << "\n"
        << "sampler.eta_file=" << cfg.sampler.eta_file << "\n"
        << "sampler.sigma_file=" << cfg.sampler.sigma_file << "\n"
        << "sampler.analytic=" << (cfg.sampler.analytic ? "true" : "false") << "\n"
        << "sampler.C1=" << fmt(cfg.sampler.C1) << "\n"
        << "mc.n_samples=" << cfg.mc.n_samples << "\n"
        << "mc.master_seed=" << cfg.mc.master_seed << "\n"
        << "score.perturbation.kind=" << cfg.perturbation.kind << "\n"
        << "score.perturbation.magnitude=" << fmt(cfg.perturbation.magnitude) << "\n"
        << "score.perturbation.direction=" << join(cfg.perturbation.direction, num) << "\n"
        << "sweep.T_grid=" << join(cfg.sweep.T_grid, integer) << "\n"
        << "sweep.k_grid=" << join(cfg.sweep.k_grid, integer) << "\n"
        << "sweep.families=" << join(cfg.sweep.families, str) << "\n"
        << "lowerbound.t=" << cfg.lowerbound.t << "\n"
        << "lowerbound.scales=" << join(cfg.lowerbound.scales, num) << "\n"
        << "lowerbound.eta=" << (cfg.lowerbound.eta ? fmt(*cfg.lowerbound.eta) : "") << "\n"
        << "lowerbound.sigma=" << (cfg.lowerbound.sigma ? fmt(*cfg.lowerbound.sigma) : "") << "\n"
        << "score_error.eps_grid=" << join(cfg.score_error.eps_grid, num) << "\n"
        << "audit.T_grid=" << join(cfg.audit.T_grid, integer) << "\n"
        << "audit.xi_grid=" << join(cfg.audit.xi_grid, num) << "\n";
    return out.str();
}

std::uint64_t config_hash(const RunConfig& cfg)
{
    return fnv1a64(canonical_string(cfg));
}

std::vector<double> read_number_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("file '" + path + "' cannot be read");
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto values = parse_number_list(path, strip_comment(line));
        out.insert(out.end(), values.begin(), values.end());
    }
    return out;
}

std::vector<std::vector<double>> read_points_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("file '" + path + "' cannot be read");
    std::vector<std::vector<double>> out;
    std::string line;
    while (std::getline(in, line)) {
        auto values = parse_number_list(path, strip_comment(line));
        if (!values.empty())
            out.push_back(std::move(values));
    }
    return out;
}

} // namespace ddlab
