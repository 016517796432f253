#pragma once

// Run configuration: flat `section.key = value` lines, '#' comment lines.
// Serialization is canonical (fixed key order, 17 significant digits), so
// load -> serialize is idempotent.

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dm4nls/diagnostics.hpp"
#include "dm4nls/dispersion.hpp"
#include "dm4nls/error.hpp"
#include "dm4nls/integrator.hpp"
#include "dm4nls/spectral_grid.hpp"

namespace dm4nls {

enum class ScheduleVariant { constant, piecewise, sampled };
enum class InitialKind { gaussian_bump, plane_wave, band_limited_random, checkpoint };

struct ScheduleConfig {
    ScheduleVariant variant = ScheduleVariant::piecewise;
    double alpha = 1.0;  // constant variant
    double beta = -1.0;
    PiecewisePeriodicDispersion piecewise{1.0, 0.5, 0.5, 1.0, 1.0, 0.5, 0.5, 1.0};
    std::string table_path;
    std::optional<double> period;
    bool beta_nonvanishing = false;
    double epsilon = 1.0;
};

struct InitialConfig {
    InitialKind kind = InitialKind::gaussian_bump;
    double amplitude = 1.0;
    double width = 2.0;   // gaussian: exp(-|x - center|^2 / (2 width^2))
    double center = 0.0;
    long k = 1;           // plane wave mode index along the first axis
    std::uint64_t seed = 1;
    int max_mode = 32;
    std::string path;
};

struct RunConfig {
    GridSpec grid{};
    ScheduleConfig schedule{};
    SolverConfig solver{};
    double horizon_C = 1.0;
    InitialConfig initial{};
    double t0 = 0.0;
    double T = 1.0;
    std::size_t cadence = 10;
    std::string output_dir = "out";
    std::vector<double> eps_list{0.1, 0.05, 0.025};
    double average_s = 2.0;
    double average_T = 0.5;
    std::size_t check_ensemble = 100;
    std::uint64_t check_seed = 1;
    std::map<std::string, double> tolerances;  // check.tol.<name>
    std::string base_dir = ".";                // directory relative paths resolve against; not serialized

    std::string resolve(const std::string& p) const {
        if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
        return (std::filesystem::path(base_dir) / p).lexically_normal().string();
    }

    double tolerance(const std::string& name, double fallback) const {
        auto it = tolerances.find(name);
        return it == tolerances.end() ? fallback : it->second;
    }

    DispersionSchedule base_schedule() const {
        switch (schedule.variant) {
            case ScheduleVariant::constant:
                return DispersionSchedule::constant(schedule.alpha, schedule.beta);
            case ScheduleVariant::piecewise:
                return DispersionSchedule::piecewise(schedule.piecewise);
            case ScheduleVariant::sampled:
                return DispersionSchedule::sampled_from_file(resolve(schedule.table_path), schedule.beta_nonvanishing,
                                                             schedule.period);
        }
        throw ValidationError("schedule.variant: unknown variant");
    }

    // The base schedule with schedule.epsilon applied.
    DispersionSchedule make_schedule() const {
        auto base = base_schedule();
        if (schedule.epsilon == 1.0) return base;
        return DispersionSchedule::scaled(base, schedule.epsilon);
    }

    Field make_initial() const {
        const auto g = SpectralGrid::get(grid);
        const auto& ic = initial;
        switch (ic.kind) {
            case InitialKind::gaussian_bump: {
                const double inv = 1.0 / (2.0 * ic.width * ic.width);
                return Field::sample(g, [&](std::span<const double> x) {
                    double r2 = 0.0;
                    for (double xi : x) r2 += (xi - ic.center) * (xi - ic.center);
                    return complex{ic.amplitude * std::exp(-r2 * inv), 0.0};
                });
            }
            case InitialKind::plane_wave: {
                const double kx = kPi * static_cast<double>(ic.k) / grid.L;
                return Field::sample(g, [&](std::span<const double> x) { return std::polar(ic.amplitude, kx * x[0]); });
            }
            case InitialKind::band_limited_random:
                return random_band_limited(grid, ic.max_mode, ic.seed).scaled(ic.amplitude);
            case InitialKind::checkpoint: {
                auto ck = read_checkpoint(resolve(ic.path));
                detail::require(ck.state.spec() == grid, "initial.path: checkpoint grid does not match grid.*");
                return ck.state;
            }
        }
        throw ValidationError("initial.kind: unknown kind");
    }

    // Module preconditions, checked eagerly so a bad config fails before any work.
    void validate() const {
        grid.validate();
        solver.validate();
        if (solver.nonlinearity == NonlinearityKind::hartree)
            detail::require(solver.lambda > 0.0 && solver.lambda < grid.n, "solver.lambda must satisfy 0 < lambda < grid.n");
        detail::require(horizon_C > 0.0, "solver.horizon_C must be > 0");
        detail::require(std::isfinite(schedule.epsilon) && schedule.epsilon > 0.0, "schedule.epsilon must be > 0");
        if (schedule.variant == ScheduleVariant::sampled) {
            detail::require(!schedule.table_path.empty(), "schedule.table_path is required for the sampled variant");
            detail::require(std::filesystem::exists(resolve(schedule.table_path)),
                            "schedule.table_path: file '" + resolve(schedule.table_path) + "' does not exist");
        }
        (void)base_schedule();
        detail::require(std::isfinite(t0), "run.t0 must be finite");
        detail::require(std::isfinite(T) && T != 0.0, "run.T must be finite and nonzero");
        switch (initial.kind) {
            case InitialKind::gaussian_bump:
                detail::require(initial.width > 0.0, "initial.width must be > 0");
                break;
            case InitialKind::band_limited_random:
                detail::require(initial.max_mode > 0 && static_cast<std::size_t>(initial.max_mode) < grid.N / 2,
                                "initial.max_mode must satisfy 0 < max_mode < grid.N/2");
                break;
            case InitialKind::checkpoint:
                detail::require(!initial.path.empty(), "initial.path is required for the checkpoint kind");
                detail::require(std::filesystem::exists(resolve(initial.path)),
                                "initial.path: file '" + resolve(initial.path) + "' does not exist");
                break;
            case InitialKind::plane_wave:
                break;
        }
        detail::require(std::isfinite(initial.amplitude), "initial.amplitude must be finite");
        for (std::size_t i = 0; i < eps_list.size(); ++i) {
            detail::require(eps_list[i] > 0.0, "average.eps_list: values must be > 0");
            if (i > 0) detail::require(eps_list[i] < eps_list[i - 1], "average.eps_list: values must be strictly decreasing");
        }
        detail::require(std::isfinite(average_s), "average.s must be finite");
        detail::require(average_T > 0.0, "average.T must be > 0");
        detail::require(check_ensemble >= 1, "check.ensemble must be >= 1");
        for (const auto& [k, v] : tolerances) detail::require(std::isfinite(v), "check.tol." + k + " must be finite");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x))
        throw ValidationError(key + ": expected a finite real number, got '" + v + "'");
    return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        throw ValidationError(key + ": expected an integer, got '" + v + "'");
    return x;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
    const long long x = parse_integer(key, v);
    if (x < 0) throw ValidationError(key + ": must be >= 0");
    return static_cast<std::size_t>(x);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
    if (out.empty()) throw ValidationError(key + ": expected a comma-separated list");
    return out;
}

template <typename E>
E parse_enum(const std::string& key, const std::string& v, const std::vector<std::pair<const char*, E>>& names) {
    std::string allowed;
    for (const auto& [n, e] : names) {
        if (v == n) return e;
        allowed += allowed.empty() ? n : std::string("|") + n;
    }
    throw ValidationError(key + ": expected one of " + allowed + ", got '" + v + "'");
}

inline const std::vector<std::pair<const char*, ScheduleVariant>> kVariantNames{
    {"constant", ScheduleVariant::constant}, {"piecewise", ScheduleVariant::piecewise}, {"sampled", ScheduleVariant::sampled}};
inline const std::vector<std::pair<const char*, InitialKind>> kInitialNames{
    {"gaussian_bump", InitialKind::gaussian_bump},
    {"plane_wave", InitialKind::plane_wave},
    {"band_limited_random", InitialKind::band_limited_random},
    {"checkpoint", InitialKind::checkpoint}};
inline const std::vector<std::pair<const char*, StepMethod>> kMethodNames{{"strang", StepMethod::strang},
                                                                          {"picard", StepMethod::picard}};
inline const std::vector<std::pair<const char*, NonlinearityKind>> kNonlinearityNames{
    {"hartree", NonlinearityKind::hartree}, {"cubic", NonlinearityKind::cubic}};

template <typename E>
const char* enum_name(E e, const std::vector<std::pair<const char*, E>>& names) {
    for (const auto& [n, v] : names)
        if (v == e) return n;
    return "?";
}

inline void apply_key(RunConfig& c, const std::string& key, const std::string& v) {
    auto& pw = c.schedule.piecewise;
    if (key == "grid.n") c.grid.n = static_cast<int>(parse_integer(key, v));
    else if (key == "grid.N") c.grid.N = parse_count(key, v);
    else if (key == "grid.L") c.grid.L = parse_real(key, v);
    else if (key == "schedule.variant") c.schedule.variant = parse_enum(key, v, kVariantNames);
    else if (key == "schedule.alpha") c.schedule.alpha = parse_real(key, v);
    else if (key == "schedule.beta") c.schedule.beta = parse_real(key, v);
    else if (key == "schedule.alpha_plus") pw.alpha_plus = parse_real(key, v);
    else if (key == "schedule.alpha_minus") pw.alpha_minus = parse_real(key, v);
    else if (key == "schedule.t_plus") pw.t_plus = parse_real(key, v);
    else if (key == "schedule.T1") pw.T1 = parse_real(key, v);
    else if (key == "schedule.beta_plus") pw.beta_plus = parse_real(key, v);
    else if (key == "schedule.beta_minus") pw.beta_minus = parse_real(key, v);
    else if (key == "schedule.tau_plus") pw.tau_plus = parse_real(key, v);
    else if (key == "schedule.T2") pw.T2 = parse_real(key, v);
    else if (key == "schedule.epsilon") c.schedule.epsilon = parse_real(key, v);
    else if (key == "schedule.table_path") c.schedule.table_path = v;
    else if (key == "schedule.period") c.schedule.period = parse_real(key, v);
    else if (key == "schedule.beta_nonvanishing") c.schedule.beta_nonvanishing = parse_bool(key, v);
    else if (key == "solver.dt") c.solver.dt = parse_real(key, v);
    else if (key == "solver.method") c.solver.method = parse_enum(key, v, kMethodNames);
    else if (key == "solver.picard_max_iter") c.solver.picard_max_iter = static_cast<int>(parse_integer(key, v));
    else if (key == "solver.picard_tol") c.solver.picard_tol = parse_real(key, v);
    else if (key == "solver.nonlinearity") c.solver.nonlinearity = parse_enum(key, v, kNonlinearityNames);
    else if (key == "solver.lambda") c.solver.lambda = parse_real(key, v);
    else if (key == "solver.theta") c.solver.theta = parse_real(key, v);
    else if (key == "solver.dealias") c.solver.dealias = parse_bool(key, v);
    else if (key == "solver.horizon_C") c.horizon_C = parse_real(key, v);
    else if (key == "initial.kind") c.initial.kind = parse_enum(key, v, kInitialNames);
    else if (key == "initial.amplitude") c.initial.amplitude = parse_real(key, v);
    else if (key == "initial.width") c.initial.width = parse_real(key, v);
    else if (key == "initial.center") c.initial.center = parse_real(key, v);
    else if (key == "initial.k") c.initial.k = static_cast<long>(parse_integer(key, v));
    else if (key == "initial.seed") c.initial.seed = static_cast<std::uint64_t>(parse_count(key, v));
    else if (key == "initial.max_mode") c.initial.max_mode = static_cast<int>(parse_integer(key, v));
    else if (key == "initial.path") c.initial.path = v;
    else if (key == "run.t0") c.t0 = parse_real(key, v);
    else if (key == "run.T") c.T = parse_real(key, v);
    else if (key == "diagnostics.cadence") c.cadence = parse_count(key, v);
    else if (key == "output.dir") c.output_dir = v;
    else if (key == "average.eps_list") c.eps_list = parse_real_list(key, v);
    else if (key == "average.s") c.average_s = parse_real(key, v);
    else if (key == "average.T") c.average_T = parse_real(key, v);
    else if (key == "check.ensemble") c.check_ensemble = parse_count(key, v);
    else if (key == "check.seed") c.check_seed = static_cast<std::uint64_t>(parse_count(key, v));
    else if (key.rfind("check.tol.", 0) == 0 && key.size() > 10) c.tolerances[key.substr(10)] = parse_real(key, v);
    else throw ValidationError("unknown config key '" + key + "'");
}

}  // namespace detail

// Parse config text. Every key is optional; unknown or repeated keys are rejected.
inline RunConfig parse_config(const std::string& text, const std::string& base_dir = ".", bool validate = true) {
    RunConfig c;
    c.base_dir = base_dir;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (!seen.insert(key).second) throw ValidationError("config key '" + key + "' given twice");
        detail::apply_key(c, key, value);
    }
    if (validate) c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path, bool validate = true) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), dir.empty() ? "." : dir.string(), validate);
}

inline std::string serialize_config(const RunConfig& c) {
    using detail::format_real;
    std::ostringstream o;
    auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
    auto real = [&](const std::string& k, double v) { kv(k, format_real(v)); };
    const auto& s = c.schedule;
    kv("grid.n", std::to_string(c.grid.n));
    kv("grid.N", std::to_string(c.grid.N));
    real("grid.L", c.grid.L);
    kv("schedule.variant", detail::enum_name(s.variant, detail::kVariantNames));
    switch (s.variant) {
        case ScheduleVariant::constant:
            real("schedule.alpha", s.alpha);
            real("schedule.beta", s.beta);
            break;
        case ScheduleVariant::piecewise:
            real("schedule.alpha_plus", s.piecewise.alpha_plus);
            real("schedule.alpha_minus", s.piecewise.alpha_minus);
            real("schedule.t_plus", s.piecewise.t_plus);
            real("schedule.T1", s.piecewise.T1);
            real("schedule.beta_plus", s.piecewise.beta_plus);
            real("schedule.beta_minus", s.piecewise.beta_minus);
            real("schedule.tau_plus", s.piecewise.tau_plus);
            real("schedule.T2", s.piecewise.T2);
            break;
        case ScheduleVariant::sampled:
            kv("schedule.table_path", s.table_path);
            if (s.period) real("schedule.period", *s.period);
            kv("schedule.beta_nonvanishing", s.beta_nonvanishing ? "true" : "false");
            break;
    }
    real("schedule.epsilon", s.epsilon);
    real("solver.dt", c.solver.dt);
    kv("solver.method", detail::enum_name(c.solver.method, detail::kMethodNames));
    kv("solver.picard_max_iter", std::to_string(c.solver.picard_max_iter));
    real("solver.picard_tol", c.solver.picard_tol);
    kv("solver.nonlinearity", detail::enum_name(c.solver.nonlinearity, detail::kNonlinearityNames));
    real("solver.lambda", c.solver.lambda);
    real("solver.theta", c.solver.theta);
    kv("solver.dealias", c.solver.dealias ? "true" : "false");
    real("solver.horizon_C", c.horizon_C);
    const auto& ic = c.initial;
    kv("initial.kind", detail::enum_name(ic.kind, detail::kInitialNames));
    switch (ic.kind) {
        case InitialKind::gaussian_bump:
            real("initial.amplitude", ic.amplitude);
            real("initial.width", ic.width);
            real("initial.center", ic.center);
            break;
        case InitialKind::plane_wave:
            real("initial.amplitude", ic.amplitude);
            kv("initial.k", std::to_string(ic.k));
            break;
        case InitialKind::band_limited_random:
            real("initial.amplitude", ic.amplitude);
            kv("initial.seed", std::to_string(ic.seed));
            kv("initial.max_mode", std::to_string(ic.max_mode));
            break;
        case InitialKind::checkpoint:
            kv("initial.path", ic.path);
            break;
    }
    real("run.t0", c.t0);
    real("run.T", c.T);
    kv("diagnostics.cadence", std::to_string(c.cadence));
    kv("output.dir", c.output_dir);
    std::string eps;
    for (double e : c.eps_list) eps += (eps.empty() ? "" : ", ") + format_real(e);
    kv("average.eps_list", eps);
    real("average.s", c.average_s);
    real("average.T", c.average_T);
    kv("check.ensemble", std::to_string(c.check_ensemble));
    kv("check.seed", std::to_string(c.check_seed));
    for (const auto& [k, v] : c.tolerances) real("check.tol." + k, v);
    return o.str();
}

}  // namespace dm4nls
