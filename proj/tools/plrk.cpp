// Command line front end: verification suites, convergence studies, string
// enumeration, word tables and plain trajectory runs.

#include "plrk/convergence.hpp"
#include "plrk/dae.hpp"
#include "plrk/problems.hpp"
#include "plrk/rstrings.hpp"
#include "plrk/symbols.hpp"
#include "plrk/tableau.hpp"
#include "plrk/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

/// Flat `key = value` configuration file ('#' starts a comment). Values feed
/// any option the command line leaves unset; flags always win.
std::map<std::string, std::string> load_config(const std::string& path) {
    std::map<std::string, std::string> kv;
    if (path.empty()) return kv;
    std::ifstream in(path);
    if (!in) throw plrk::io_error("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw plrk::io_error("config line " + std::to_string(lineno) +
                                 ": expected key = value");
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

struct ConfigMerge {
    const std::map<std::string, std::string>& kv;
    const CLI::App* cmd;
    template <typename T>
    void operator()(const std::string& flag, const std::string& key, T& value) const {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        if (opt && opt->count() > 0) return;  // explicit flag wins
        const auto it = kv.find(key);
        if (it == kv.end()) return;
        std::istringstream is(it->second);
        is >> std::boolalpha >> value;
        if (is.fail()) throw plrk::io_error("config key '" + key + "': bad value");
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw plrk::io_error("cannot open output file " + path);
    return out;
}

void print_verify_table(const std::vector<plrk::VerifyRow>& rows) {
    std::printf("%-4s %-42s %-14s %-10s %s\n", "s", "condition", "max residual", "tolerance",
                "verdict");
    for (const auto& r : rows)
        std::printf("%-4d %-42s %-14.4e %-10.1e %s\n", r.s, r.report.name.c_str(),
                    r.report.max_residual, r.report.tolerance, r.report.pass ? "pass" : "FAIL");
}

int cmd_verify(const std::vector<int>& s_values, double tol, const std::string& csv,
               const std::string& tableau_dir) {
    plrk::VerifyOptions opt;
    opt.s_values = s_values;
    opt.tol = tol;
    const auto rows = plrk::run_verify(opt);
    print_verify_table(rows);
    if (!csv.empty()) {
        auto out = open_out(csv);
        plrk::write_verify_csv(out, rows);
    }
    if (!tableau_dir.empty()) {
        for (int s : s_values) {
            const plrk::PartitionedTableau pt = plrk::lobatto_pair(s);
            auto a = open_out(tableau_dir + "/lobatto_iiia_s" + std::to_string(s) + ".txt");
            plrk::write_tableau(a, "lobatto_iiia", pt.first);
            auto b = open_out(tableau_dir + "/lobatto_iiib_s" + std::to_string(s) + ".txt");
            plrk::write_tableau(b, "lobatto_iiib", pt.second);
        }
    }
    const bool ok = plrk::all_pass(rows);
    std::printf("verify: %zu checks, %s\n", rows.size(), ok ? "all pass" : "FAILURES present");
    return ok ? 0 : 1;
}

int cmd_converge(const plrk::DAEProblem& prob, int s, const plrk::StudyConfig& cfg,
                 const std::string& csv) {
    const plrk::ConvergenceReport rep = plrk::run_convergence(prob, plrk::lobatto_pair(s), cfg);
    std::printf("convergence: problem=%s s=%d T=%g\n", rep.problem.c_str(), rep.s, rep.T);
    std::printf("%-8s %-10s %-10s %-9s %s\n", "var", "slope", "R^2", "expected", "verdict");
    for (const auto& v : rep.variables)
        std::printf("%-8s %-10.4f %-10.6f %-9d %s\n", v.variable.c_str(), v.slope, v.r2,
                    v.expected, v.pass ? "pass" : "FAIL");
    std::printf("max constraint residual over all runs: %.3e\n", rep.max_constraint_residual);
    if (!csv.empty()) {
        auto out = open_out(csv);
        plrk::write_convergence_csv(out, rep);
    }
    return rep.pass ? 0 : 1;
}

int cmd_rstrings(int order, int max_dim) {
    const auto elems = plrk::enumerate_elementary(order);
    std::printf("# %zu elementary strings of order %d\n", elems.size(), order);
    for (const auto& g : elems) std::printf("%s\n", g.str().c_str());
    std::printf("\n# class derivation edges up to dimension %d\n", max_dim);
    std::vector<plrk::DerivationEdge> edges;
    for (const auto& g : elems) {
        const auto cls = plrk::class_derivation(g, max_dim);
        edges.insert(edges.end(), cls.begin(), cls.end());
    }
    std::ostringstream os;
    plrk::write_derivation_edges(os, edges);
    std::fputs(os.str().c_str(), stdout);
    return 0;
}

int cmd_words(int s, int kmax, const std::string& csv) {
    const plrk::VanishingReport rep = plrk::verify_vanishing(plrk::lobatto_pair(s), kmax);
    std::printf("words: s=%d k<=%d (%s the vanishing bound), %zu words, max |value| = %.3e\n", s, kmax,
                rep.within_vanishing_bound ? "within" : "BEYOND", rep.words.size(), rep.max_abs);
    if (!rep.within_vanishing_bound)
        std::printf("note: k exceeds s-3; values beyond the vanishing bound need not vanish\n");
    if (!csv.empty()) {
        auto out = open_out(csv);
        plrk::write_words_csv(out, rep);
    } else {
        plrk::write_words_csv(std::cout, rep);
    }
    return rep.within_vanishing_bound && rep.max_abs > 1e-10 ? 1 : 0;
}

int cmd_integrate(const plrk::DAEProblem& prob, int s, double h, int steps,
                  const plrk::SolverConfig& solver, const std::string& csv) {
    const plrk::SystemState s0{prob.initial.t, prob.initial.q, prob.initial.p, prob.initial.lam};
    const plrk::Trajectory traj =
        plrk::integrate(prob, plrk::lobatto_pair(s), s0, h, steps, solver);
    double max_phi = 0.0;
    long total_newton = 0;
    for (const auto& pt : traj.points) {
        max_phi = std::max(max_phi, pt.phi_residual);
        total_newton += pt.newton_iterations;
    }
    const auto& last = traj.points.back().state;
    std::printf("integrate: problem=%s s=%d h=%s steps=%d\n", prob.name.c_str(), s,
                plrk::g17(h).c_str(), steps);
    std::printf("endpoint t=%s q(0)=%s max|phi|=%.3e newton iterations=%ld\n",
                plrk::g17(last.t).c_str(), plrk::g17(last.q(0)).c_str(), max_phi, total_newton);
    if (prob.exact) {
        const auto [qe, pe, le] = (*prob.exact)(last.t);
        std::printf("endpoint errors: |q|=%.3e |p|=%.3e |lambda|=%.3e\n",
                    plrk::inf_norm(last.q - qe), plrk::inf_norm(last.p - pe),
                    plrk::inf_norm(last.lam - le));
    }
    if (!csv.empty()) {
        auto out = open_out(csv);
        plrk::write_trajectory_csv(out, prob, traj);
    } else {
        plrk::write_trajectory_csv(std::cout, prob, traj);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"partitioned Lobatto-type Runge-Kutta methods for index-2 constrained systems"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "flat key = value configuration file");

    // verify
    auto* verify = app.add_subcommand("verify", "check tableau and word identities");
    std::vector<int> s_values{2, 3, 4, 5};
    double tol = 1e-12;
    std::string verify_csv, tableau_dir;
    verify->add_option("--s", s_values, "stage counts to check")->delimiter(',');
    verify->add_option("--tol", tol, "residual tolerance");
    verify->add_option("--csv", verify_csv, "write the report as CSV");
    verify->add_option("--export-tableaus", tableau_dir, "write coefficient files here");

    // shared problem/solver options
    std::string problem = "particle", run_csv;
    double omega = 2.5;
    plrk::StudyConfig study;
    int stages = 3;

    auto add_solver_options = [&](CLI::App* cmd, plrk::SolverConfig& solver) {
        cmd->add_option("--newton-tol", solver.newton_tol, "stage Newton tolerance");
        cmd->add_option("--max-iterations", solver.max_iterations, "stage Newton budget");
        cmd->add_flag("--full-newton", solver.full_newton, "refactor the Jacobian every sweep");
        cmd->add_flag_callback(
            "--fd-jacobian",
            [&solver]() { solver.jacobian = plrk::SolverConfig::JacobianMode::finite_difference; },
            "use a finite-difference Jacobian");
    };

    auto* converge = app.add_subcommand("converge", "measure global convergence orders");
    converge->add_option("--problem", problem, "particle|manufactured|knife-edge");
    converge->add_option("--s", stages, "stage count");
    converge->add_option("--omega", omega, "manufactured problem frequency");
    converge->add_option("--h0", study.h0, "coarsest step");
    converge->add_option("--ratio", study.ratio, "step refinement ratio");
    converge->add_option("--count", study.count, "number of steps in the grid");
    converge->add_option("--T", study.T, "integration horizon");
    converge->add_option("--slope-tol", study.slope_tol, "allowed |slope - expected|");
    converge->add_option("--r2-min", study.r2_min, "required fit quality");
    converge->add_option("--csv", run_csv, "write (h, error) table as CSV");
    add_solver_options(converge, study.solver);

    auto* rstrings = app.add_subcommand("rstrings", "elementary strings and class derivations");
    int order = 3, max_dim = 8;
    rstrings->add_option("--order", order, "string order |gamma|");
    rstrings->add_option("--max-dim", max_dim, "dimension bound for class closure");

    auto* words = app.add_subcommand("words", "evaluate symbol words against the vanishing bound");
    int words_s = 4, kmax = -1;
    std::string words_csv;
    words->add_option("--s", words_s, "stage count");
    words->add_option("--kmax", kmax, "letter budget (default s-3)");
    words->add_option("--csv", words_csv, "write word values as CSV");

    auto* integ = app.add_subcommand("integrate", "run one fixed-step trajectory");
    double h = 0.01;
    int steps = 100;
    plrk::SolverConfig integ_solver;
    integ->add_option("--problem", problem, "particle|manufactured|knife-edge");
    integ->add_option("--s", stages, "stage count");
    integ->add_option("--dt", h, "step size");
    integ->add_option("--steps", steps, "number of steps");
    integ->add_option("--omega", omega, "manufactured problem frequency");
    integ->add_option("--csv", run_csv, "write the trajectory as CSV");
    add_solver_options(integ, integ_solver);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto kv = load_config(config_path);
        if (verify->parsed()) {
            ConfigMerge merge{kv, verify};
            merge("--tol", "tol", tol);
            merge("--csv", "csv", verify_csv);
            merge("--export-tableaus", "export_tableaus", tableau_dir);
            return cmd_verify(s_values, tol, verify_csv, tableau_dir);
        }
        if (converge->parsed()) {
            ConfigMerge merge{kv, converge};
            merge("--problem", "problem", problem);
            merge("--s", "s", stages);
            merge("--omega", "omega", omega);
            merge("--h0", "h0", study.h0);
            merge("--ratio", "ratio", study.ratio);
            merge("--count", "count", study.count);
            merge("--T", "T", study.T);
            merge("--slope-tol", "slope_tol", study.slope_tol);
            merge("--r2-min", "r2_min", study.r2_min);
            merge("--newton-tol", "newton_tol", study.solver.newton_tol);
            merge("--max-iterations", "max_iterations", study.solver.max_iterations);
            merge("--csv", "csv", run_csv);
            return cmd_converge(plrk::make_problem(problem, omega), stages, study, run_csv);
        }
        if (rstrings->parsed()) {
            ConfigMerge merge{kv, rstrings};
            merge("--order", "order", order);
            merge("--max-dim", "max_dim", max_dim);
            return cmd_rstrings(order, max_dim);
        }
        if (words->parsed()) {
            ConfigMerge merge{kv, words};
            merge("--s", "s", words_s);
            merge("--kmax", "kmax", kmax);
            merge("--csv", "csv", words_csv);
            return cmd_words(words_s, kmax < 0 ? words_s - 3 : kmax, words_csv);
        }
        if (integ->parsed()) {
            ConfigMerge merge{kv, integ};
            merge("--problem", "problem", problem);
            merge("--s", "s", stages);
            merge("--dt", "dt", h);
            merge("--steps", "steps", steps);
            merge("--omega", "omega", omega);
            merge("--newton-tol", "newton_tol", integ_solver.newton_tol);
            merge("--max-iterations", "max_iterations", integ_solver.max_iterations);
            merge("--csv", "csv", run_csv);
            return cmd_integrate(plrk::make_problem(problem, omega), stages, h, steps,
                                 integ_solver, run_csv);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
