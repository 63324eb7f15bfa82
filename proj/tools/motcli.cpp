// Batch front door for the robust pricing toolkit: path discretisation,
// primal/dual price bounds, superhedge verification, put-curve inversion and
// penalty/eta sweeps. Exit codes: 0 optimal, 2 input error, 3 infeasible
// (with a certificate dump), 4 path budget exceeded.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mot/json_io.hpp"
#include "mot/parallel.hpp"

namespace fs = std::filesystem;
using namespace mot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitBudget = 4;

struct CommonFlags {
    std::string out_dir = ".";
    unsigned threads = 0;
    double tolerance = 1e-6;  // gap/slack classification threshold in reports
    unsigned seed = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--threads", flags.threads, "worker threads (default: machine parallelism)");
    cmd->add_option("--tolerance", flags.tolerance, "numerical tolerance for reports");
    cmd->add_option("--seed", flags.seed, "seed recorded for reproducibility");
}

void apply_common(const CommonFlags& flags) {
    if (flags.threads > 0) set_worker_threads(flags.threads);
    fs::create_directories(flags.out_dir);
}

std::ofstream open_out(const CommonFlags& flags, const std::string& name) {
    fs::path p = fs::path(flags.out_dir) / name;
    std::ofstream os(p);
    if (!os) throw io::ParseError("cannot open output file " + p.string());
    return os;
}

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

int run_discretise(const std::string& input, int N, const CommonFlags& flags) {
    std::ifstream is(input);
    if (!is) {
        std::cerr << "cannot open " << input << "\n";
        return kExitInput;
    }
    GridPath path = io::read_grid_path_csv(is);
    InfoSpace info(static_cast<int>(path.dim()), {path.horizon()});
    auto stages = staged_dyadic_discretise(path, info, N);

    auto js = io::to_json(stages.result);
    auto os = open_out(flags, "discretised.json");
    os << js.dump(2) << "\n";

    auto rep = open_out(flags, "discretise_report.csv");
    rep << "quantity,value\n";
    rep << "steps," << stages.partition.step_count() << "\n";
    rep << "error_naive," << io::fmt(step_sup_distance(stages.naive, path)) << "\n";
    rep << "error_staged," << io::fmt(step_sup_distance(stages.staged, path)) << "\n";
    double err = step_sup_distance(stages.result.to_step_fn(), path);
    rep << "error_final," << io::fmt(err) << "\n";
    rep << "error_bound," << io::fmt(std::ldexp(1.0, -N + 3)) << "\n";
    std::cout << "discretised " << input << " at mesh 2^-" << N << ": " << stages.partition.step_count()
              << " steps, sup error " << io::fmt(err) << "\n";
    return kExitOk;
}

void dump_certificate(const std::vector<double>& farkas, const CommonFlags& flags) {
    auto os = open_out(flags, "certificate.csv");
    os << "row,multiplier\n";
    for (std::size_t i = 0; i < farkas.size(); ++i) os << i << "," << io::fmt(farkas[i]) << "\n";
}

int run_bounds(const io::ProblemSpec& spec, const CommonFlags& flags) {
    const LatticePaths& lat = *spec.lattice;
    std::vector<double> etas = spec.eta_schedule.empty() ? std::vector<double>{spec.eta}
                                                         : spec.eta_schedule;
    auto rows = duality_gap(lat, spec.payoff, spec.options, spec.set, etas);

    auto os = open_out(flags, "results.csv");
    os << "quantity,value,status\n";
    if (spec.penalty_N > 0.0) {
        auto dp = dual_solve(lat, spec.payoff, spec.options, spec.set,
                             DualMode::penalised(spec.penalty_N));
        os << "dual_penalty_N=" << io::fmt(spec.penalty_N) << "," << io::fmt(dp.value) << ","
           << status_name(dp.status) << "\n";
    }
    bool any_optimal = false;
    for (const auto& row : rows) {
        std::string tag = "eta=" + io::fmt(row.eta);
        os << "primal_" << tag << "," << io::fmt(row.primal) << "," << status_name(row.primal_status)
           << "\n";
        os << "dual_" << tag << "," << io::fmt(row.dual) << "," << status_name(row.dual_status) << "\n";
        os << "gap_" << tag << "," << io::fmt(row.gap) << ","
           << (row.comparable ? (std::abs(row.gap) <= flags.tolerance ? "tight" : "loose")
                              : "reported")
           << "\n";
        any_optimal = any_optimal || row.primal_status == SolveStatus::Optimal;
    }
    if (!any_optimal) {
        auto p = primal_solve(lat, spec.payoff, spec.options, spec.set, etas.front());
        dump_certificate(p.certificate, flags);
        std::cout << "infeasible at every eta in the schedule; certificate written\n";
        return kExitInfeasible;
    }
    // dump the optimal measure and the dual strategy at the first optimal eta
    for (const auto& row : rows) {
        if (row.primal_status != SolveStatus::Optimal) continue;
        auto p = primal_solve(lat, spec.payoff, spec.options, spec.set, row.eta);
        if (spec.dump_measure) {
            auto om = open_out(flags, "measure.csv");
            om << "path_id,prob\n";
            for (std::size_t w = 0; w < p.weights.size(); ++w)
                if (p.weights[w] > 1e-12) om << w << "," << io::fmt(p.weights[w]) << "\n";
        }
        DualMode mode = row.eta == 0.0 ? DualMode::hard(0.0) : DualMode::penalised(1.0 / row.eta);
        auto d = dual_solve(lat, spec.payoff, spec.options, spec.set, mode);
        if (d.status == SolveStatus::Optimal) {
            auto ostrat = open_out(flags, "strategy.csv");
            io::write_strategy_csv(lat, d, ostrat);
        }
        std::cout << "primal " << io::fmt(p.value) << ", dual " << io::fmt(d.value) << " at eta "
                  << io::fmt(row.eta) << "\n";
        break;
    }
    return kExitOk;
}

int run_verify(const io::ProblemSpec& spec, const std::string& strategy_path,
               const CommonFlags& flags) {
    const LatticePaths& lat = *spec.lattice;
    std::ifstream is(strategy_path);
    if (!is) {
        std::cerr << "cannot open " << strategy_path << "\n";
        return kExitInput;
    }
    auto dump = io::read_strategy_csv(is, lat, spec.options.size());

    InfoSpace info = lat.model().info();
    auto os = open_out(flags, "slack.csv");
    os << "path_id,slack\n";
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_id = 0;
    for (std::size_t w = 0; w < lat.n_paths(); ++w) {
        GridPath p = lat.grid_path(w);
        if (!in_fattened_set(spec.set, info, p, spec.eta)) continue;
        double lhs = dump.cash;
        for (std::size_t j = 0; j < spec.options.size(); ++j)
            lhs += dump.option_coeffs[j] * spec.options[j].payoff(p);
        for (std::size_t t = 0; t < lat.model().steps(); ++t)
            for (int i = 0; i < lat.model().d; ++i)
                lhs += dump.positions[w][t][static_cast<std::size_t>(i)] *
                       (lat.value(w, t + 1)[static_cast<std::size_t>(i)] -
                        lat.value(w, t)[static_cast<std::size_t>(i)]);
        double slack = lhs - spec.payoff(p);
        os << w << "," << io::fmt(slack) << "\n";
        if (slack < worst) {
            worst = slack;
            worst_id = w;
        }
    }
    std::cout << "worst slack " << io::fmt(worst) << " at path " << worst_id
              << (worst >= -flags.tolerance ? " (superhedge holds)" : " (VIOLATION)") << "\n";
    return kExitOk;
}

int run_marginals(const std::string& puts_path, const CommonFlags& flags) {
    std::ifstream is(puts_path);
    if (!is) {
        std::cerr << "cannot open " << puts_path << "\n";
        return kExitInput;
    }
    PutPriceCurve curve = io::read_put_curve_csv(is);
    DiscreteMarginal mu = marginal_from_puts(curve);
    auto os = open_out(flags, "marginal.json");
    os << io::to_json(mu).dump(2) << "\n";
    std::cout << "inverted " << curve.strikes.size() << " quotes into " << mu.support.size()
              << " atoms (mean " << io::fmt(mu.mean()) << ")\n";
    return kExitOk;
}

int run_sweep(const io::ProblemSpec& spec, const CommonFlags& flags) {
    const LatticePaths& lat = *spec.lattice;
    auto os = open_out(flags, "sweep.csv");
    os << "quantity,value,status\n";
    if (!spec.penalty_N_list.empty()) {
        auto sweep = penalty_sweep(lat, spec.payoff, spec.options, spec.set, spec.penalty_N_list);
        for (std::size_t k = 0; k < sweep.penalties.size(); ++k)
            os << "dual_penalty_N=" << io::fmt(sweep.penalties[k]) << ","
               << io::fmt(sweep.values[k]) << ",optimal\n";
        os << "dual_hard," << io::fmt(sweep.hard_value) << ",optimal\n";
    }
    for (double eta : spec.eta_schedule) {
        auto p = primal_solve(lat, spec.payoff, spec.options, spec.set, eta);
        os << "primal_eta=" << io::fmt(eta) << "," << io::fmt(p.value) << ","
           << status_name(p.status) << "\n";
    }
    for (int mesh : spec.mesh_N_list) {
        DualMode mode = DualMode::hard(0.0);
        mode.rebalance_mesh = mesh;
        auto d = dual_solve(lat, spec.payoff, spec.options, spec.set, mode);
        os << "dual_mesh_N=" << mesh << "," << io::fmt(d.value) << "," << status_name(d.status)
           << "\n";
    }
    std::cout << "sweep written\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust price bounds and superhedging on finite path lattices"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string spec_path, input_path, strategy_path, puts_path;
    int mesh_N = 5;

    auto* cmd_disc = app.add_subcommand("discretise", "discretise a path CSV at mesh 2^-N");
    cmd_disc->add_option("--input", input_path, "path CSV (t,s1,...)")->required();
    cmd_disc->add_option("--N", mesh_N, "mesh exponent (>= 4)")->required();
    add_common(cmd_disc, flags);

    auto* cmd_bounds = app.add_subcommand("bounds", "primal/dual price bounds for a problem spec");
    cmd_bounds->add_option("--spec", spec_path, "problem spec JSON")->required();
    add_common(cmd_bounds, flags);

    auto* cmd_verify = app.add_subcommand("verify", "replay a strategy dump against the spec");
    cmd_verify->add_option("--spec", spec_path, "problem spec JSON")->required();
    cmd_verify->add_option("--strategy", strategy_path, "strategy CSV")->required();
    add_common(cmd_verify, flags);

    auto* cmd_marg = app.add_subcommand("marginals", "invert a put-price curve into a marginal");
    cmd_marg->add_option("--puts", puts_path, "put quotes CSV (strike,price)")->required();
    add_common(cmd_marg, flags);

    auto* cmd_sweep = app.add_subcommand("sweep", "penalty/eta/mesh schedules for a problem spec");
    cmd_sweep->add_option("--spec", spec_path, "problem spec JSON")->required();
    add_common(cmd_sweep, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        apply_common(flags);
        if (cmd_disc->parsed()) return run_discretise(input_path, mesh_N, flags);
        if (cmd_marg->parsed()) return run_marginals(puts_path, flags);
        io::ProblemSpec spec = io::load_problem_spec(spec_path);
        if (cmd_bounds->parsed()) return run_bounds(spec, flags);
        if (cmd_verify->parsed()) return run_verify(spec, strategy_path, flags);
        if (cmd_sweep->parsed()) return run_sweep(spec, flags);
    } catch (const io::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
