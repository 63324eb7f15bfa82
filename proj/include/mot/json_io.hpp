#pragma once

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mot/discretise.hpp"
#include "mot/hedging.hpp"
#include "mot/lattice.hpp"
#include "mot/marginals.hpp"
#include "mot/mot_lp.hpp"
#include "mot/paths.hpp"

namespace mot::io {

using nlohmann::json;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

// --- grid path CSV: header t,s1,...,s{d+K}, one row per grid time ---

inline void write_grid_path_csv(const GridPath& p, std::ostream& os) {
    os << "t";
    for (std::size_t i = 1; i <= p.dim(); ++i) os << ",s" << i;
    os << "\n";
    for (std::size_t k = 0; k < p.times.size(); ++k) {
        os << fmt(p.times[k]);
        for (double v : p.values[k]) os << "," << fmt(v);
        os << "\n";
    }
}

inline GridPath read_grid_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("path csv: empty file");
    std::vector<double> times;
    std::vector<std::vector<double>> values;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError("path csv: bad number in row " + std::to_string(lineno));
            }
        }
        if (row.size() < 2) throw ParseError("path csv: too few columns in row " + std::to_string(lineno));
        times.push_back(row.front());
        values.emplace_back(row.begin() + 1, row.end());
    }
    try {
        return GridPath(std::move(times), std::move(values));
    } catch (const std::exception& e) {
        throw ParseError(std::string("path csv: ") + e.what());
    }
}

// --- piecewise-constant path JSON ---

inline json to_json(const PiecewiseConstantPath& f) {
    json j;
    j["N"] = f.N;
    j["horizon"] = f.horizon;
    json jumps = json::array();
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        json entry;
        entry["t"] = k == 0 ? std::string("0/1") : to_string(f.jump_times[k - 1]);
        json vals = json::array();
        for (const auto& v : f.values[k]) vals.push_back(v.to_double());
        entry["v"] = vals;
        jumps.push_back(entry);
    }
    j["jumps"] = jumps;
    json term = json::array();
    for (const auto& v : f.terminal) term.push_back(v.to_double());
    j["terminal"] = term;
    return j;
}

// --- marginals ---

inline json to_json(const DiscreteMarginal& mu) {
    json j;
    j["support"] = mu.support;
    j["probs"] = mu.probs;
    return j;
}

inline DiscreteMarginal marginal_from_json(const json& j) {
    return DiscreteMarginal(j.at("support").get<std::vector<double>>(),
                            j.at("probs").get<std::vector<double>>());
}

inline PutPriceCurve read_put_curve_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("put csv: empty file");
    std::vector<double> strikes, prices;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw ParseError("put csv: bad row " + std::to_string(lineno));
        try {
            strikes.push_back(std::stod(a));
            prices.push_back(std::stod(b));
        } catch (const std::exception&) {
            throw ParseError("put csv: bad number in row " + std::to_string(lineno));
        }
    }
    try {
        return PutPriceCurve(std::move(strikes), std::move(prices));
    } catch (const std::exception& e) {
        throw ParseError(std::string("put csv: ") + e.what());
    }
}

// --- problem specification ---

struct ProblemSpec {
    LatticeModel model;
    std::vector<QuotedOption> options;
    Payoff payoff;
    PredictionSet set;
    double eta = 0.0;
    double penalty_N = 0.0;
    std::vector<double> eta_schedule;
    std::vector<double> penalty_N_list;
    std::vector<int> mesh_N_list;
    unsigned seed = 0;
    bool dump_measure = false;
    std::shared_ptr<const LatticePaths> lattice;  // built during parsing
};

inline Payoff payoff_from_json(const json& j, const LatticeModel& model,
                               std::shared_ptr<const LatticePaths> lattice) {
    InfoSpace info = model.info();
    const std::string kind = j.at("kind").get<std::string>();
    auto asset = [&] { return j.value("asset", 0); };
    if (kind == "call")
        return Payoff::call(asset(), j.at("strike").get<double>(), j.value("maturity_index", 1), info);
    if (kind == "put")
        return Payoff::put(asset(), j.at("strike").get<double>(), j.value("maturity_index", 1), info);
    if (kind == "terminal") return Payoff::terminal_value(asset(), info);
    if (kind == "lookback_max") return Payoff::lookback_max(asset());
    if (kind == "asian")
        return Payoff::asian_average(asset(), j.at("times").get<std::vector<double>>());
    if (kind == "basket")
        return Payoff::basket(j.at("weights").get<std::vector<double>>(),
                              j.value("maturity_index", 1), info);
    if (kind == "constant") return Payoff::constant(j.at("value").get<double>());
    if (kind == "table")
        return table_grid_payoff(std::move(lattice), j.at("values").get<std::vector<double>>());
    throw ParseError("payoff: unknown kind '" + kind + "'");
}

// optional regularity metadata: kappa, a Lipschitz modulus constant, a growth
// envelope {L, p} and a time-continuity constant
inline Payoff payoff_with_metadata(Payoff g, const json& j) {
    if (j.contains("kappa")) g.with_bound(j["kappa"].get<double>());
    if (j.contains("modulus")) {
        double lip = j["modulus"].get<double>();
        g.with_modulus([lip](double x) { return lip * x; });
    }
    if (j.contains("growth"))
        g.with_growth(j["growth"].at("L").get<double>(), j["growth"].at("p").get<double>());
    if (j.contains("time_continuity_L"))
        g.with_time_continuity(j["time_continuity_L"].get<double>(),
                               j.contains("growth") ? j["growth"].at("p").get<double>() : 1.0);
    return g;
}

inline ProblemSpec read_problem_spec(const json& j) {
    ProblemSpec spec;
    try {
        spec.model.d = j.at("assets").get<int>();
        spec.model.times = j.at("times").get<std::vector<double>>();
        if (j.contains("maturity_indices")) {
            spec.model.maturity_indices = j["maturity_indices"].get<std::vector<std::size_t>>();
        } else if (j.contains("maturities")) {
            // maturities given as times: locate them on the grid
            for (double T : j["maturities"].get<std::vector<double>>()) {
                std::size_t idx = spec.model.times.size();
                for (std::size_t t = 0; t < spec.model.times.size(); ++t)
                    if (std::abs(spec.model.times[t] - T) <= 1e-12) idx = t;
                if (idx == spec.model.times.size())
                    throw ParseError("spec: maturity " + fmt(T) + " is not a grid time");
                spec.model.maturity_indices.push_back(idx);
            }
        } else {
            throw ParseError("spec: need maturity_indices or maturities");
        }
        spec.model.grids = j.at("grids").get<std::vector<std::vector<std::vector<double>>>>();
        if (j.contains("path_budget")) spec.model.path_budget = j["path_budget"].get<std::size_t>();
        spec.model.validate();
    } catch (const json::exception& e) {
        throw ParseError(std::string("spec: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("spec: ") + e.what());
    }
    spec.lattice = std::make_shared<const LatticePaths>(spec.model);
    InfoSpace info = spec.model.info();
    if (j.contains("options")) {
        for (const auto& jo : j["options"]) {
            const std::string type = jo.at("type").get<std::string>();
            double price = jo.at("price").get<double>();
            if (type == "put") {
                spec.options.push_back(
                    QuotedOption{Payoff::put(jo.value("asset", 0), jo.at("strike").get<double>(),
                                             jo.value("maturity_index", 1), info),
                                 price});
            } else if (type == "call") {
                spec.options.push_back(
                    QuotedOption{Payoff::call(jo.value("asset", 0), jo.at("strike").get<double>(),
                                              jo.value("maturity_index", 1), info),
                                 price});
            } else if (type == "custom") {
                spec.options.push_back(
                    QuotedOption{payoff_from_json(jo.at("payoff"), spec.model, spec.lattice), price});
            } else {
                throw ParseError("spec: unknown option type '" + type + "'");
            }
        }
    }
    spec.payoff = payoff_with_metadata(payoff_from_json(j.at("payoff"), spec.model, spec.lattice),
                                       j.at("payoff"));
    if (j.contains("prediction_set")) {
        const auto& js = j["prediction_set"];
        const std::string kind = js.at("kind").get<std::string>();
        if (kind == "all") {
            spec.set = PredictionSet::all();
        } else if (kind == "sup_norm_ball") {
            spec.set = PredictionSet::sup_norm_ball(js.at("bound").get<double>());
        } else {
            throw ParseError("spec: unknown prediction set kind '" + kind + "'");
        }
    }
    spec.eta = j.value("eta", 0.0);
    spec.penalty_N = j.value("penalty_N", 0.0);
    if (j.contains("eta_schedule")) spec.eta_schedule = j["eta_schedule"].get<std::vector<double>>();
    if (j.contains("penalty_N_list"))
        spec.penalty_N_list = j["penalty_N_list"].get<std::vector<double>>();
    if (j.contains("mesh_N_list")) spec.mesh_N_list = j["mesh_N_list"].get<std::vector<int>>();
    spec.seed = j.value("seed", 0u);
    spec.dump_measure = j.value("dump_measure", false);
    return spec;
}

inline ProblemSpec load_problem_spec(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("spec: cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("spec: invalid json: ") + e.what());
    }
    return read_problem_spec(j);
}

// --- strategy and report CSVs ---

inline void write_strategy_csv(const LatticePaths& lat, const SuperhedgeLPSolution& dual,
                               std::ostream& os) {
    os << "path_id,rebalance_time,asset,position\n";
    // static leg encoded with path_id = -1: asset -1 is cash, asset j >= 0 the
    // j-th quoted option's coefficient
    os << "-1,0,-1," << fmt(dual.cash) << "\n";
    for (std::size_t jopt = 0; jopt < dual.option_coeffs.size(); ++jopt)
        os << "-1,0," << jopt << "," << fmt(dual.option_coeffs[jopt]) << "\n";
    for (std::size_t w = 0; w < lat.n_paths(); ++w) {
        for (std::size_t t = 0; t < dual.positions.size(); ++t) {
            const auto& pos = dual.positions[t][lat.prefix_class(w, t)];
            for (std::size_t i = 0; i < pos.size(); ++i)
                os << w << "," << fmt(lat.model().times[t]) << "," << i << "," << fmt(pos[i])
                   << "\n";
        }
    }
}

struct StrategyDump {
    double cash = 0.0;
    std::vector<double> option_coeffs;
    // positions[path][time index][asset]
    std::vector<std::vector<std::vector<double>>> positions;
};

inline StrategyDump read_strategy_csv(std::istream& is, const LatticePaths& lat,
                                      std::size_t n_options) {
    StrategyDump dump;
    dump.option_coeffs.assign(n_options, 0.0);
    const std::size_t m = lat.model().steps();
    dump.positions.assign(lat.n_paths(),
                          std::vector<std::vector<double>>(
                              m, std::vector<double>(static_cast<std::size_t>(lat.model().d), 0.0)));
    std::string line;
    if (!std::getline(is, line)) throw ParseError("strategy csv: empty file");
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string c0, c1, c2, c3;
        if (!std::getline(ss, c0, ',') || !std::getline(ss, c1, ',') ||
            !std::getline(ss, c2, ',') || !std::getline(ss, c3, ','))
            throw ParseError("strategy csv: bad row " + std::to_string(lineno));
        try {
            long pid = std::stol(c0);
            double t = std::stod(c1);
            long asset = std::stol(c2);
            double value = std::stod(c3);
            if (pid < 0) {
                if (asset < 0)
                    dump.cash = value;
                else if (static_cast<std::size_t>(asset) < n_options)
                    dump.option_coeffs[static_cast<std::size_t>(asset)] = value;
                else
                    throw ParseError("strategy csv: option index out of range, row " +
                                     std::to_string(lineno));
                continue;
            }
            if (static_cast<std::size_t>(pid) >= lat.n_paths())
                throw ParseError("strategy csv: path id out of range, row " + std::to_string(lineno));
            std::size_t tidx = m;
            for (std::size_t k = 0; k < m; ++k)
                if (std::abs(lat.model().times[k] - t) <= 1e-9) tidx = k;
            if (tidx == m)
                throw ParseError("strategy csv: unknown rebalance time, row " + std::to_string(lineno));
            if (asset < 0 || asset >= lat.model().d)
                throw ParseError("strategy csv: asset out of range, row " + std::to_string(lineno));
            dump.positions[static_cast<std::size_t>(pid)][tidx][static_cast<std::size_t>(asset)] =
                value;
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("strategy csv: bad number in row " + std::to_string(lineno));
        }
    }
    return dump;
}

}  // namespace mot::io
