#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "estimator.hpp"
#include "oracles.hpp"
#include "problems.hpp"
#include "ref_solver.hpp"

#ifndef SHGB_VERSION
#define SHGB_VERSION "unknown"
#endif

namespace shgb {

/// Thrown for unusable configuration; the message names the key.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& run_modes()
{
    static const std::vector<std::string> modes{"estimate", "refsolve", "converge", "oracle", "traj-dump"};
    return modes;
}

struct RunConfig {
    std::string mode = "estimate";

    // [problem]
    std::string problem;
    ProblemParams params;

    // [run]
    double T = 0.0;
    double dt = 0.0;
    std::size_t n_traj = 10000;
    std::optional<std::uint64_t> seed;
    double cutoff = kDefaultCutoff;
    std::size_t blocks = 16;

    // [grid]
    std::vector<Axis> axes;

    // [refsolve]
    double cfl = 0.8;
    std::string scheme = "upwind3";
    int refine = 1;

    // [converge]
    std::vector<std::size_t> n_list{100, 200, 400, 800, 1600, 3200, 6400};
    std::size_t repeats = 20;
    std::string reference;

    // [traj]
    std::size_t traj_count = 1;
    std::size_t traj_first = 0;

    // [oracle]
    OracleSuiteOptions oracle;

    // command line only
    unsigned workers = 1;
    std::string out_dir = "out";
    bool force = false;
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& raw)
{
    const std::string v = trim(raw);
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a number");
    return out;
}

/// A decimal number or a quotient "a/b" of two.
inline double parse_real(const std::string& key, const std::string& raw)
{
    const auto slash = raw.find('/');
    const double v = slash == std::string::npos
                         ? parse_number<double>(key, raw)
                         : parse_number<double>(key, raw.substr(0, slash)) / parse_number<double>(key, raw.substr(slash + 1));
    if (!std::isfinite(v))
        throw ConfigError("config key '" + key + "': value must be finite");
    return v;
}

inline Axis parse_axis(const std::string& key, const std::string& raw)
{
    std::istringstream is(raw);
    std::string a, b, c, extra;
    if (!(is >> a >> b >> c) || (is >> extra))
        throw ConfigError("config key '" + key + "': expected 'min max count'");
    Axis ax{parse_real(key, a), parse_real(key, b), parse_number<int>(key, c)};
    if (ax.count < 2)
        throw ConfigError("config key '" + key + "': count must be >= 2");
    if (!(ax.max > ax.min))
        throw ConfigError("config key '" + key + "': max must exceed min");
    return ax;
}

inline std::vector<std::size_t> parse_list(const std::string& key, const std::string& raw)
{
    std::vector<std::size_t> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_number<std::size_t>(key, item));
    if (out.empty())
        throw ConfigError("config key '" + key + "': empty list");
    return out;
}

inline std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Parses the INI-style configuration (sections [problem], [run], [grid],
/// [refsolve], [converge], [traj], [oracle]; [meta] is ignored) and resolves
/// problem-dependent defaults.  Unknown sections or keys are rejected.
inline RunConfig parse_config(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }

    static const std::map<std::string, std::set<std::string>> allowed{
        {"problem", {"id", "epsilon", "delta", "r0", "p0"}},
        {"run", {"T", "dt", "n_traj", "seed", "cutoff", "blocks"}},
        {"grid", {"axis0", "axis1", "axis2", "axis3"}},
        {"refsolve", {"cfl", "scheme", "refine"}},
        {"converge", {"n_list", "repeats", "reference"}},
        {"traj", {"count", "first"}},
        {"oracle", {"systems", "max_n", "t", "norm_t_max", "n_traj"}},
    };

    RunConfig c;
    std::map<std::string, std::string> kv;
    for (const auto& [section, body] : tree) {
        if (section == "meta")
            continue;
        const auto it = allowed.find(section);
        if (it == allowed.end()) {
            if (body.empty())
                throw ConfigError("config key '" + section + "': keys must live in a section");
            throw ConfigError("config section '[" + section + "]' is not recognized");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key))
                throw ConfigError("config key '" + section + "." + key + "' is not recognized");
            kv[section + "." + key] = value.data();
        }
    }
    auto has = [&](const std::string& k) { return kv.count(k) > 0; };
    auto real = [&](const std::string& k) { return detail::parse_real(k, kv.at(k)); };
    auto positive = [&](const std::string& k) {
        const double v = real(k);
        if (!(v > 0.0))
            throw ConfigError("config key '" + k + "': must be positive");
        return v;
    };
    auto count = [&](const std::string& k, std::size_t min) {
        const auto v = detail::parse_number<std::size_t>(k, kv.at(k));
        if (v < min)
            throw ConfigError("config key '" + k + "': must be >= " + std::to_string(min));
        return v;
    };

    if (!has("problem.id"))
        throw ConfigError("config key 'problem.id' is required");
    c.problem = detail::trim(kv.at("problem.id"));
    if (std::find(builtin_problem_ids().begin(), builtin_problem_ids().end(), c.problem) ==
        builtin_problem_ids().end())
        throw ConfigError("config key 'problem.id': unknown problem '" + c.problem + "'");
    if (has("problem.epsilon"))
        c.params.epsilon = positive("problem.epsilon");
    if (has("problem.delta"))
        c.params.delta = real("problem.delta");
    if (has("problem.r0"))
        c.params.r0 = real("problem.r0");
    if (has("problem.p0"))
        c.params.p0 = real("problem.p0");

    Problem pr;
    try {
        pr = make_problem(c.problem, c.params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config key 'problem.epsilon': ") + e.what());
    }
    c.params = pr.params;

    c.T = has("run.T") ? positive("run.T") : pr.default_T;
    c.dt = has("run.dt") ? positive("run.dt") : pr.default_dt;
    if (has("run.n_traj"))
        c.n_traj = count("run.n_traj", 1);
    if (has("run.seed"))
        c.seed = detail::parse_number<std::uint64_t>("run.seed", kv.at("run.seed"));
    if (has("run.cutoff"))
        c.cutoff = positive("run.cutoff");
    if (has("run.blocks"))
        c.blocks = count("run.blocks", 1);

    c.axes = pr.default_axes;
    for (int d = 0; d < 4; ++d) {
        const std::string k = "grid.axis" + std::to_string(d);
        if (!has(k))
            continue;
        if (d >= pr.system.m)
            throw ConfigError("config key '" + k + "': problem has only " + std::to_string(pr.system.m) + " axes");
        c.axes[static_cast<std::size_t>(d)] = detail::parse_axis(k, kv.at(k));
    }

    if (has("refsolve.cfl")) {
        c.cfl = positive("refsolve.cfl");
        if (c.cfl > 1.0)
            throw ConfigError("config key 'refsolve.cfl': must not exceed 1");
    }
    if (has("refsolve.scheme")) {
        c.scheme = detail::trim(kv.at("refsolve.scheme"));
        if (c.scheme != "upwind3" && c.scheme != "weno3")
            throw ConfigError("config key 'refsolve.scheme': expected upwind3 or weno3");
    }
    if (has("refsolve.refine"))
        c.refine = static_cast<int>(count("refsolve.refine", 1));

    if (has("converge.n_list")) {
        c.n_list = detail::parse_list("converge.n_list", kv.at("converge.n_list"));
        for (std::size_t i = 1; i < c.n_list.size(); ++i)
            if (c.n_list[i] <= c.n_list[i - 1])
                throw ConfigError("config key 'converge.n_list': must be strictly increasing");
        if (c.n_list.size() < 2 || c.n_list.front() < 1)
            throw ConfigError("config key 'converge.n_list': need >= 2 positive entries");
    }
    if (has("converge.repeats"))
        c.repeats = count("converge.repeats", 2);
    if (has("converge.reference"))
        c.reference = detail::trim(kv.at("converge.reference"));

    if (has("traj.count"))
        c.traj_count = count("traj.count", 1);
    if (has("traj.first"))
        c.traj_first = count("traj.first", 0);

    if (has("oracle.systems"))
        c.oracle.systems = static_cast<int>(count("oracle.systems", 1));
    if (has("oracle.max_n"))
        c.oracle.max_n = static_cast<int>(count("oracle.max_n", 2));
    if (has("oracle.t"))
        c.oracle.t = positive("oracle.t");
    if (has("oracle.norm_t_max"))
        c.oracle.norm_t_max = positive("oracle.norm_t_max");
    if (has("oracle.n_traj"))
        c.oracle.n_traj = count("oracle.n_traj", 1);
    return c;
}

inline RunConfig parse_config_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

/// The resolved configuration as INI text (parseable by parse_config).
inline std::string to_ini(const RunConfig& c)
{
    using detail::fmt;
    std::ostringstream os;
    os << "[problem]\nid = " << c.problem << "\nepsilon = " << fmt(c.params.epsilon) << "\n";
    if (!std::isnan(c.params.delta))
        os << "delta = " << fmt(c.params.delta) << "\n";
    if (!std::isnan(c.params.r0))
        os << "r0 = " << fmt(c.params.r0) << "\n";
    if (!std::isnan(c.params.p0))
        os << "p0 = " << fmt(c.params.p0) << "\n";
    os << "\n[run]\nT = " << fmt(c.T) << "\ndt = " << fmt(c.dt) << "\nn_traj = " << c.n_traj << "\n";
    if (c.seed)
        os << "seed = " << *c.seed << "\n";
    os << "cutoff = " << fmt(c.cutoff) << "\nblocks = " << c.blocks << "\n";
    os << "\n[grid]\n";
    for (std::size_t d = 0; d < c.axes.size(); ++d)
        os << "axis" << d << " = " << fmt(c.axes[d].min) << " " << fmt(c.axes[d].max) << " " << c.axes[d].count << "\n";
    os << "\n[refsolve]\ncfl = " << fmt(c.cfl) << "\nscheme = " << c.scheme << "\nrefine = " << c.refine << "\n";
    os << "\n[converge]\nn_list = ";
    for (std::size_t i = 0; i < c.n_list.size(); ++i)
        os << (i ? "," : "") << c.n_list[i];
    os << "\nrepeats = " << c.repeats << "\n";
    if (!c.reference.empty())
        os << "reference = " << c.reference << "\n";
    os << "\n[traj]\ncount = " << c.traj_count << "\nfirst = " << c.traj_first << "\n";
    os << "\n[oracle]\nsystems = " << c.oracle.systems << "\nmax_n = " << c.oracle.max_n << "\nt = " << fmt(c.oracle.t)
       << "\nnorm_t_max = " << fmt(c.oracle.norm_t_max) << "\nn_traj = " << c.oracle.n_traj << "\n";
    return os.str();
}

// ---- run --------------------------------------------------------------------

namespace detail {

inline void prepare_output_dir(const std::string& dir, bool force)
{
    namespace fs = std::filesystem;
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir))
            throw std::runtime_error("output path '" + dir + "' exists and is not a directory");
        if (!fs::is_empty(dir) && !force)
            throw std::runtime_error("output directory '" + dir + "' is not empty (use --force to overwrite)");
    } else {
        fs::create_directories(dir);
    }
}

inline std::ofstream open_out(const std::string& dir, const std::string& name)
{
    std::ofstream os(std::filesystem::path(dir) / name);
    if (!os)
        throw std::runtime_error("cannot write '" + name + "' in '" + dir + "'");
    return os;
}

inline std::vector<Axis> refined_axes(const std::vector<Axis>& axes, int refine)
{
    std::vector<Axis> out = axes;
    for (auto& a : out)
        a.count = (a.count - 1) * refine + 1;
    return out;
}

inline RefSolveResult solve_reference(const Problem& pr, const RunConfig& c)
{
    const FieldGrid init = initial_field(pr, refined_axes(c.axes, c.refine));
    RefSolveOptions o;
    o.cfl = c.cfl;
    RefSolveResult r = c.scheme == "weno3" ? reference_solve<Weno3>(pr.system, init, c.T, o)
                                           : reference_solve<LinearUpwind3>(pr.system, init, c.T, o);
    if (c.refine > 1)
        r.field = subsample(r.field, c.refine);
    return r;
}

inline EstimatorConfig estimator_config(const RunConfig& c)
{
    EstimatorConfig e;
    e.n_traj = c.n_traj;
    e.T = c.T;
    e.dt = c.dt;
    e.axes = c.axes;
    e.master_seed = *c.seed;
    e.cutoff = c.cutoff;
    e.workers = c.workers;
    e.blocks = c.blocks;
    return e;
}

inline void write_trajectory_header(std::ostream& os, int m)
{
    os << "t,surface,conj";
    for (int d = 0; d < m; ++d)
        os << ",X" << d;
    for (int d = 0; d < m; ++d)
        os << ",P" << d;
    os << ",Re_omega,Im_omega\n";
}

inline void write_trajectory_row(std::ostream& os, ExtendedIndex s, const DynamicState& st)
{
    os << fmt(st.t) << "," << s.surface << "," << (s.conjugated ? 1 : 0);
    for (Eigen::Index d = 0; d < st.beam.X.size(); ++d)
        os << "," << fmt(st.beam.X[d]);
    for (Eigen::Index d = 0; d < st.beam.P.size(); ++d)
        os << "," << fmt(st.beam.P[d]);
    os << "," << fmt(st.omega.real()) << "," << fmt(st.omega.imag()) << "\n";
}

} // namespace detail

struct RunSummary {
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    int status = 0;
};

/// Executes cfg.mode, writing CSV artifacts and manifest.txt into cfg.out_dir.
/// Returns 0 on success (1 from `oracle` when a check fails).
inline RunSummary run(RunConfig cfg)
{
    const auto start = std::chrono::steady_clock::now();
    if (std::find(run_modes().begin(), run_modes().end(), cfg.mode) == run_modes().end())
        throw ConfigError("unknown mode '" + cfg.mode + "'");
    if (!cfg.seed) {
        std::random_device rd;
        cfg.seed = (std::uint64_t{rd()} << 32) | rd();
    }
    detail::prepare_output_dir(cfg.out_dir, cfg.force);
    const Problem pr = make_problem(cfg.problem, cfg.params);
    RunSummary sum;

    if (cfg.mode == "estimate") {
        const FieldGrid g = estimate(pr.system, pr.sampler, detail::estimator_config(cfg));
        auto os = detail::open_out(cfg.out_dir, "field.csv");
        write_csv(os, g);
        sum.outputs.push_back("field.csv");
    } else if (cfg.mode == "refsolve") {
        RefSolveResult r = detail::solve_reference(pr, cfg);
        sum.warnings = r.warnings;
        auto os = detail::open_out(cfg.out_dir, "reference.csv");
        write_csv(os, r.field);
        sum.outputs.push_back("reference.csv");
    } else if (cfg.mode == "converge") {
        FieldGrid ref;
        if (!cfg.reference.empty()) {
            ref = read_csv(cfg.reference);
            if (ref.axes() != cfg.axes || ref.n_surfaces() != pr.system.n)
                throw ConfigError("config key 'converge.reference': grid differs from [grid]");
        } else {
            RefSolveResult r = detail::solve_reference(pr, cfg);
            sum.warnings = r.warnings;
            ref = std::move(r.field);
            auto os = detail::open_out(cfg.out_dir, "reference.csv");
            write_csv(os, ref);
            sum.outputs.push_back("reference.csv");
        }
        const ErrorReport rep =
            convergence_study(pr.system, pr.sampler, detail::estimator_config(cfg), ref, cfg.n_list, cfg.repeats);
        auto os = detail::open_out(cfg.out_dir, "errors.csv");
        write_csv(os, rep);
        sum.outputs.push_back("errors.csv");
    } else if (cfg.mode == "oracle") {
        OracleSuiteOptions o = cfg.oracle;
        o.seed = *cfg.seed;
        const auto checks = run_oracle_suite(o);
        auto os = detail::open_out(cfg.out_dir, "oracle.csv");
        os << "check,value,threshold,pass\n";
        for (const auto& ch : checks) {
            os << ch.name << "," << detail::fmt(ch.value) << "," << detail::fmt(ch.threshold) << ","
               << (ch.pass ? 1 : 0) << "\n";
            if (!ch.pass)
                sum.status = 1;
        }
        sum.outputs.push_back("oracle.csv");
    } else { // traj-dump
        auto os = detail::open_out(cfg.out_dir, "trajectories.csv");
        detail::write_trajectory_header(os, pr.system.m);
        const TrajectoryOptions opt{cfg.T, cfg.dt, *cfg.seed};
        const int n = pr.system.n;
        for (std::size_t k = cfg.traj_first; k < cfg.traj_first + cfg.traj_count; ++k) {
            os << "# trajectory " << k << "\n";
            bool first = true;
            TrajectoryObserver o;
            o.on_step = [&](ExtendedIndex s, const DynamicState& before, const DynamicState& after) {
                if (first) {
                    detail::write_trajectory_row(os, s, before);
                    first = false;
                }
                detail::write_trajectory_row(os, s, after);
            };
            o.on_hop = [&](const HopEvent& ev, const DynamicState& after) {
                os << "HOP," << detail::fmt(ev.t) << "," << ev.from.flat(n) << "," << ev.to.flat(n) << ","
                   << detail::fmt(ev.phase) << "\n";
                detail::write_trajectory_row(os, ev.to, after);
            };
            run_trajectory(pr.system, pr.sampler, opt, k, &o);
        }
        sum.outputs.push_back("trajectories.csv");
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto man = detail::open_out(cfg.out_dir, "manifest.txt");
    man << "; shgb run manifest; re-run with: shgb " << cfg.mode << " --config manifest.txt\n";
    man << to_ini(cfg);
    man << "\n[meta]\nmode = " << cfg.mode << "\nversion = " << SHGB_VERSION << "\nseed = " << *cfg.seed
        << "\nworkers = " << cfg.workers << "\nwall_time_s = " << detail::fmt(wall) << "\noutputs = ";
    for (std::size_t i = 0; i < sum.outputs.size(); ++i)
        man << (i ? "," : "") << sum.outputs[i];
    man << "\n";
    for (std::size_t i = 0; i < sum.warnings.size(); ++i)
        man << "warning" << i << " = " << sum.warnings[i] << "\n";
    return sum;
}

} // namespace shgb
