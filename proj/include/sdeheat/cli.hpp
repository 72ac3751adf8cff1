#pragma once

// Command-line front end. Every subcommand reads one JSON config, writes its
// artifacts under --out-dir, and always writes run_manifest.json.
//
// Exit codes: 0 success, 1 validation/usage failure, 2 numerical failure or
// failed check, 3 I/O failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdeheat/assembly.hpp"
#include "sdeheat/closedloop.hpp"
#include "sdeheat/convergence.hpp"
#include "sdeheat/csv.hpp"
#include "sdeheat/model.hpp"
#include "sdeheat/montecarlo.hpp"
#include "sdeheat/riccati.hpp"
#include "sdeheat/spectral.hpp"
#include "sdeheat/validation.hpp"

namespace sdeheat {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kNumericalFailure = 2, kIoFailure = 3 };

struct CommandOutcome {
    int exit_code = kOk;
    std::vector<std::string> artifacts;
};

struct CliOptions {
    std::string subcommand;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<long> paths;
    std::optional<int> modes;
    std::string out_dir = ".";
    unsigned threads = 1;
    bool dump_operators = false;
    bool field = false;
    std::vector<int> sweep_Ns{2, 4, 8, 16};
    int sweep_ref = 32;
};

namespace cli_detail {

namespace fs = std::filesystem;

struct Context {
    CliOptions opt;
    ProblemSpec spec;
    fs::path out;
    CommandOutcome outcome;
    std::ostream& log;

    fs::path artifact(const std::string& name) {
        const fs::path p = out / name;
        outcome.artifacts.push_back(p.string());
        return p;
    }
};

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw IoError("cannot write " + p.string());
    f << text;
    if (!f) throw IoError("failed writing " + p.string());
}

inline void write_manifest(Context& ctx) {
    nlohmann::json m;
    m["tool"] = "sdeheat";
    m["version"] = kVersion;
    m["subcommand"] = ctx.opt.subcommand;
    m["seed"] = ctx.spec.disc.seed;
    m["config"] = spec_to_json(ctx.spec);
    if (ctx.opt.subcommand == "converge") {
        m["sweep_Ns"] = ctx.opt.sweep_Ns;
        m["sweep_ref"] = ctx.opt.sweep_ref;
    }
    write_text(ctx.artifact("run_manifest.json"), m.dump(2) + "\n");
}

inline std::vector<std::string> state_header(const AugmentedOperators& ops) {
    std::vector<std::string> h{"t"};
    for (Eigen::Index i = 0; i < ops.d; ++i) h.push_back("X_" + std::to_string(i));
    h.push_back("U");
    h.push_back("V");
    for (int n = 0; n <= ops.N; ++n) h.push_back("z_" + std::to_string(n));
    return h;
}

struct Solved {
    SpectralBasis basis;
    AugmentedOperators ops;
    GainSchedule sched;
    double u0;
    Vector Z0;
};

inline Solved solve_spec(const ProblemSpec& spec) {
    SpectralBasis basis(spec.disc.N);
    AugmentedOperators ops = assemble(spec, basis);
    GainSchedule sched = solve_riccati(
        ops, spec.cost.T, stable_riccati_steps(ops, spec.cost.T, spec.disc.riccati_steps));
    const double u0 = resolve_u0(spec, sched, ops);
    Vector Z0 = initial_state(ops, u0);
    return {std::move(basis), std::move(ops), std::move(sched), u0, std::move(Z0)};
}

inline int cmd_solve(Context& ctx) {
    const auto s = solve_spec(ctx.spec);
    std::vector<std::string> header{"t"};
    for (Eigen::Index i = 0; i < s.ops.dim; ++i) header.push_back("K_" + std::to_string(i));
    CsvWriter gains(ctx.artifact("gains.csv"), header);
    for (std::size_t i = 0; i < s.sched.nodes(); ++i) {
        std::vector<double> row{s.sched.times[i]};
        for (Eigen::Index k = 0; k < s.ops.dim; ++k) row.push_back(s.sched.K[i](k));
        gains.row(row);
    }
    gains.close();

    const double v = value(s.sched, s.Z0);
    write_text(ctx.artifact("value.txt"),
               "value " + format_double(v) + "\nu0 " + format_double(s.u0) + "\n");
    ctx.log << "value " << format_double(v) << "\nu0 " << format_double(s.u0) << "\n";

    if (ctx.opt.dump_operators) {
        write_matrix_csv(ctx.artifact("Atot.csv"), s.ops.Atot);
        write_matrix_csv(ctx.artifact("Ctot.csv"), s.ops.Ctot);
        write_matrix_csv(ctx.artifact("Bvec.csv"), s.ops.Bvec);
        write_matrix_csv(ctx.artifact("Qmat.csv"), s.ops.Qmat);
        write_matrix_csv(ctx.artifact("Gmat.csv"), s.ops.Gmat);
        write_matrix_csv(ctx.artifact("Lrho.csv"), s.ops.Lrho);
        write_matrix_csv(ctx.artifact("M0.csv"), s.ops.M0);
        write_matrix_csv(ctx.artifact("Pi0.csv"), s.sched.Pi.front());
    }
    return kOk;
}

inline int cmd_simulate(Context& ctx) {
    const auto s = solve_spec(ctx.spec);
    GaussianIncrements noise(ctx.spec.disc.seed, 0);
    const auto path = simulate_spectral(s.ops, s.sched, s.Z0, ctx.spec.disc.sim_dt, noise, true);

    CsvWriter traj(ctx.artifact("trajectory.csv"), state_header(s.ops));
    for (std::size_t k = 0; k < path.Z.size(); ++k) {
        const Vector& Z = path.Z[k];
        std::vector<double> row{path.times[k]};
        for (Eigen::Index i = 0; i < s.ops.d; ++i) row.push_back(Z(i));
        row.push_back(Z(s.ops.y_index()));
        row.push_back(path.V[k]);
        for (Eigen::Index n = 0; n < s.ops.z_size(); ++n) row.push_back(Z(s.ops.z_offset() + n));
        traj.row(row);
    }
    traj.close();

    if (ctx.opt.field) {
        const auto xs = uniform_grid(65);
        const auto fields =
            reconstruct_u(s.basis, path, s.ops, ctx.spec.pde.c, ctx.spec.control.mu, xs);
        CsvWriter f(ctx.artifact("u_field.csv"), {"t", "x", "u"});
        const std::size_t every = std::max<std::size_t>(1, fields.size() / 100);
        for (std::size_t k = 0; k < fields.size(); k += every)
            for (std::size_t i = 0; i < xs.size(); ++i)
                f.row({path.times[k], xs[i], fields[k].values[i]});
        f.close();
    }
    ctx.log << "running_cost " << format_double(path.running_cost) << "\nterminal_cost "
            << format_double(path.terminal_cost) << "\n";
    return kOk;
}

inline int cmd_montecarlo(Context& ctx) {
    const auto s = solve_spec(ctx.spec);
    const OracleReport rep = compare_oracles(ctx.spec, s.ops, s.sched, ctx.spec.disc.mc_paths,
                                             ctx.spec.disc.seed, ctx.opt.threads);
    CsvWriter csv(ctx.artifact("compare.csv"),
                  {"mean", "std_err", "paths", "seed", "riccati_value", "moment_ode_value", "u0",
                   "riccati_moment_ok", "mc_moment_ok"});
    csv.write_row_strings({format_double(rep.monte_carlo.mean),
                           format_double(rep.monte_carlo.std_err),
                           std::to_string(rep.monte_carlo.paths), std::to_string(rep.monte_carlo.seed),
                           format_double(rep.riccati_value), format_double(rep.moment_value),
                           format_double(rep.u0), rep.riccati_moment_ok ? "1" : "0",
                           rep.mc_moment_ok ? "1" : "0"});
    csv.close();
    ctx.log << "mean " << format_double(rep.monte_carlo.mean) << "\nstd_err "
            << format_double(rep.monte_carlo.std_err) << "\nriccati_value "
            << format_double(rep.riccati_value) << "\nmoment_ode_value "
            << format_double(rep.moment_value) << "\n";
    for (const auto& f : rep.failures) ctx.log << "FAIL " << f << "\n";
    return rep.passed() ? kOk : kNumericalFailure;
}

inline int cmd_full_sim(Context& ctx) {
    const auto s = solve_spec(ctx.spec);
    GaussianIncrements noise(ctx.spec.disc.seed, 0);
    FullPlantOptions fopt;
    fopt.record = true;
    const int steps = step_count(ctx.spec.cost.T, ctx.spec.disc.sim_dt);
    fopt.snapshot_every = std::max(1, steps / 100);
    const auto r = simulate_full(ctx.spec, s.ops, s.sched, s.basis, noise, fopt);

    CsvWriter traj(ctx.artifact("full_trajectory.csv"), state_header(s.ops));
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        std::vector<double> row{r.times[k]};
        for (Eigen::Index i = 0; i < s.ops.d; ++i) row.push_back(r.X[k](i));
        row.push_back(r.U[k]);
        row.push_back(r.V[k]);
        for (Eigen::Index n = 0; n < s.ops.z_size(); ++n)
            row.push_back(r.Zhat[k](s.ops.z_offset() + n));
        traj.row(row);
    }
    traj.close();

    CsvWriter field(ctx.artifact("u_field.csv"), {"t", "x", "u"});
    for (std::size_t k = 0; k < r.u_snapshots.size(); ++k)
        for (std::size_t i = 0; i < r.u_snapshots[k].xs.size(); ++i)
            field.row({r.snapshot_times[k], r.u_snapshots[k].xs[i], r.u_snapshots[k].values[i]});
    field.close();
    ctx.log << "cost " << format_double(r.total_cost()) << "\n";

    if (!ctx.opt.paths) return kOk;
    // Model-mismatch comparison of E|X_T|^2 over matched noise streams.
    const long paths = *ctx.opt.paths;
    const auto spectral = summarize(terminal_square_norms(spectral_paths(
        s.ops, sample_gains(s.sched, ctx.spec.disc.sim_dt), s.Z0, paths, ctx.spec.disc.seed,
        ctx.opt.threads)));
    const auto full = summarize(terminal_square_norms(full_plant_paths(
        ctx.spec, s.ops, s.sched, s.basis, paths, ctx.spec.disc.seed, ctx.opt.threads)));
    const double rel = std::abs(full.mean - spectral.mean) / std::abs(spectral.mean);
    const bool ok = rel <= 0.15;
    CsvWriter csv(ctx.artifact("mismatch.csv"),
                  {"paths", "spectral_mean", "spectral_std_err", "full_mean", "full_std_err",
                   "relative_difference", "pass"});
    csv.write_row_strings({std::to_string(paths), format_double(spectral.mean),
                           format_double(spectral.std_err), format_double(full.mean),
                           format_double(full.std_err), format_double(rel), ok ? "1" : "0"});
    csv.close();
    ctx.log << "E|X_T|^2 spectral " << format_double(spectral.mean) << " full "
            << format_double(full.mean) << " relative difference " << format_double(rel) << "\n";
    return ok ? kOk : kNumericalFailure;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

inline int cmd_converge(Context& ctx) {
    const auto rep = sweep_N(ctx.spec, ctx.opt.sweep_Ns, ctx.opt.sweep_ref, ctx.opt.threads);
    CsvWriter csv(ctx.artifact("convergence.csv"),
                  {"N", "value", "u0_opt", "gain_dist", "semigroup_err"});
    std::vector<double> value_gaps;
    for (std::size_t i = 0; i < rep.Ns.size(); ++i) {
        csv.row({static_cast<double>(rep.Ns[i]), rep.values[i], rep.u0s[i], rep.gain_dists[i],
                 rep.semigroup_errs[i]});
        value_gaps.push_back(std::abs(rep.values[i] - rep.value_ref));
    }
    csv.row({static_cast<double>(rep.N_ref), rep.value_ref, rep.u0_ref, 0.0, 0.0});
    csv.close();
    const bool ok = strictly_decreasing(value_gaps) && strictly_decreasing(rep.semigroup_errs);
    ctx.log << (ok ? "value gaps and semigroup tails decrease\n"
                   : "FAIL convergence is not monotone\n");
    return ok ? kOk : kNumericalFailure;
}

inline int cmd_validate(Context& ctx) {
    const auto checks = run_validation(ctx.spec, ctx.opt.threads);
    CsvWriter csv(ctx.artifact("validate.csv"), {"check", "measured", "lower", "upper", "pass"});
    bool all = true;
    for (const auto& c : checks) {
        csv.write_row_strings({c.name, format_double(c.measured), format_double(c.lower),
                               format_double(c.upper), c.passed() ? "1" : "0"});
        ctx.log << (c.passed() ? "PASS " : "FAIL ") << c.name << " = "
                << format_double(c.measured) << "\n";
        all = all && c.passed();
    }
    csv.close();
    return all ? kOk : kNumericalFailure;
}

inline std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

}  // namespace cli_detail

/// Parses argv, runs the subcommand and maps errors onto exit codes.
inline CommandOutcome run(int argc, const char* const* argv, std::ostream& log = std::cout,
                          std::ostream& err = std::cerr) {
    using namespace cli_detail;
    CliOptions opt;
    std::string ns_list;

    CLI::App app{"Stochastic LQ control of an SDE actuated through a heat equation boundary",
                 "sdeheat"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    const std::vector<std::pair<const char*, const char*>> commands{
        {"solve", "Solve the Riccati equation; write gains.csv and value.txt"},
        {"simulate", "Simulate one spectral closed-loop path; write trajectory.csv"},
        {"montecarlo", "Monte Carlo cost vs Riccati value vs moment ODE; write compare.csv"},
        {"full-sim", "Simulate the finite-difference plant under the spectral feedback"},
        {"converge", "Sweep the mode count; write convergence.csv"},
        {"validate", "Run the oracle suite; write validate.csv"},
    };
    std::uint64_t seed = 0;
    long paths = 0;
    int modes = 0;
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "JSON configuration file")->required();
        sub->add_option("--seed", seed, "Override discretization.seed");
        sub->add_option("--paths", paths, "Override the Monte Carlo path count")
            ->check(CLI::PositiveNumber);
        sub->add_option("--modes", modes, "Override discretization.N")->check(CLI::PositiveNumber);
        sub->add_option("--out-dir", opt.out_dir, "Output directory");
        sub->add_option("--threads", opt.threads, "Worker threads (0 = all cores)");
        if (std::string(name) == "solve")
            sub->add_flag("--dump-operators", opt.dump_operators, "Write each operator block as CSV");
        if (std::string(name) == "simulate")
            sub->add_flag("--field", opt.field, "Also write the reconstructed u_field.csv");
        if (std::string(name) == "converge") {
            sub->add_option("--ns", ns_list, "Comma-separated mode counts (default 2,4,8,16)");
            sub->add_option("--n-ref", opt.sweep_ref, "Reference mode count (default 32)");
        }
        sub->callback([&opt, sub] { opt.subcommand = sub->get_name(); });
    }

    CommandOutcome outcome;
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        app.exit(e, log, err);
        return outcome;
    } catch (const CLI::ParseError& e) {
        app.exit(e, log, err);
        outcome.exit_code = kValidationFailure;
        return outcome;
    }

    for (const auto* sub : app.get_subcommands()) {
        if (sub->count("--seed")) opt.seed = seed;
        if (sub->count("--paths")) opt.paths = paths;
        if (sub->count("--modes")) opt.modes = modes;
    }

    try {
        if (!ns_list.empty()) opt.sweep_Ns = parse_int_list(ns_list);
        Context ctx{opt, load_spec(opt.config), opt.out_dir, {}, log};
        if (opt.seed) ctx.spec.disc.seed = *opt.seed;
        if (opt.paths) ctx.spec.disc.mc_paths = static_cast<int>(*opt.paths);
        if (opt.modes) ctx.spec.disc.N = *opt.modes;
        validate(ctx.spec);
        std::error_code ec;
        fs::create_directories(ctx.out, ec);
        if (ec) throw IoError("cannot create output directory " + ctx.out.string());
        write_manifest(ctx);

        int code = kOk;
        if (opt.subcommand == "solve") code = cmd_solve(ctx);
        else if (opt.subcommand == "simulate") code = cmd_simulate(ctx);
        else if (opt.subcommand == "montecarlo") code = cmd_montecarlo(ctx);
        else if (opt.subcommand == "full-sim") code = cmd_full_sim(ctx);
        else if (opt.subcommand == "converge") code = cmd_converge(ctx);
        else if (opt.subcommand == "validate") code = cmd_validate(ctx);
        ctx.outcome.exit_code = code;
        return ctx.outcome;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        outcome.exit_code = kValidationFailure;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        outcome.exit_code = kValidationFailure;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        outcome.exit_code = kIoFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        outcome.exit_code = kNumericalFailure;
    } catch (const std::invalid_argument& e) {
        err << "error: bad argument: " << e.what() << "\n";
        outcome.exit_code = kValidationFailure;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << "\n";
        outcome.exit_code = kNumericalFailure;
    }
    return outcome;
}

}  // namespace sdeheat
