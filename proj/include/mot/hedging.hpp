#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mot/discretise.hpp"
#include "mot/lattice.hpp"
#include "mot/mot_lp.hpp"
#include "mot/paths.hpp"
#include "mot/payoffs.hpp"

namespace mot {

// Realised trading plan on one path: positions[k] is held on (times[k], times[k+1]]
// (the last position until the horizon). times[0] == 0.
struct TradeSchedule {
    std::vector<double> times;
    std::vector<std::vector<double>> positions;

    const std::vector<double>& position_at(double t) const {
        if (positions.empty()) throw std::logic_error("TradeSchedule: empty");
        // t in (times[k], times[k+1]] -> positions[k]; t == 0 -> positions[0]
        std::size_t k = 0;
        while (k + 1 < times.size() && t > times[k + 1]) ++k;
        if (t > times[k] || t == 0.0) return positions[k];
        return positions[k == 0 ? 0 : k - 1];
    }
};

// An adapted dynamic rule: positions must depend only on the path up to the
// evaluation time. The contract is behavioural and enforced by prefix tests.
using DynamicRule = std::function<TradeSchedule(const GridPath&)>;

inline DynamicRule no_trading() {
    return [](const GridPath& p) {
        return TradeSchedule{{0.0}, {std::vector<double>(p.dim(), 0.0)}};
    };
}

inline DynamicRule buy_and_hold(std::vector<double> position) {
    return [position = std::move(position)](const GridPath&) {
        return TradeSchedule{{0.0}, {position}};
    };
}

// Gains integral of a piecewise-constant integrand: the telescoping sum and
// the integration-by-parts form are both evaluated and must agree.
inline double pathwise_integral(const TradeSchedule& sched, const GridPath& p, double t,
                                double agreement_tol = 1e-12) {
    if (sched.times.empty() || sched.times.front() != 0.0)
        throw std::invalid_argument("pathwise_integral: schedule must start at 0");
    if (t < 0.0 || t > p.horizon() + 1e-12)
        throw std::domain_error("pathwise_integral: time outside horizon");
    const std::size_t dim = p.dim();
    for (const auto& pos : sched.positions)
        if (pos.size() != dim) throw std::invalid_argument("pathwise_integral: position dimension");

    double telescoped = 0.0;
    for (std::size_t k = 0; k < sched.positions.size(); ++k) {
        double a = std::min(sched.times[k], t);
        double b = std::min(k + 1 < sched.times.size() ? sched.times[k + 1] : p.horizon(), t);
        if (b <= a) continue;
        auto va = p.at(a);
        auto vb = p.at(b);
        for (std::size_t i = 0; i < dim; ++i)
            telescoped += sched.positions[k][i] * (vb[i] - va[i]);
    }

    // integration by parts: gamma_t . S_t - gamma_0 . S_0 - sum_{u_k < t} S_{u_k} . (jump)
    const auto& gamma_t = sched.position_at(t);
    const auto& gamma_0 = sched.positions.front();
    auto S_t = p.at(t);
    auto S_0 = p.at(0.0);
    double parts = 0.0;
    for (std::size_t i = 0; i < dim; ++i) parts += gamma_t[i] * S_t[i] - gamma_0[i] * S_0[i];
    for (std::size_t k = 1; k < sched.positions.size(); ++k) {
        if (!(sched.times[k] < t)) break;
        auto S_u = p.at(sched.times[k]);
        for (std::size_t i = 0; i < dim; ++i)
            parts -= S_u[i] * (sched.positions[k][i] - sched.positions[k - 1][i]);
    }
    double scale = 1.0;
    for (const auto& pos : sched.positions)
        for (double c : pos) scale = std::max(scale, std::abs(c));
    if (std::abs(telescoped - parts) > agreement_tol * scale * 100.0)
        throw std::logic_error("pathwise_integral: telescoping and parts evaluations disagree");
    return telescoped;
}

inline double pathwise_integral(const DynamicRule& rule, const GridPath& p, double t) {
    return pathwise_integral(rule(p), p, t);
}

// Semi-static strategy: cash, coefficients on quoted options, and an adapted
// dynamic rule with its admissibility envelope (p = 0 is the flat floor -M).
struct SemiStaticStrategy {
    double cash = 0.0;
    std::vector<QuotedOption> options;
    std::vector<double> coefficients;
    DynamicRule dynamic = no_trading();
    double floor_M = 0.0;
    double growth_p = 0.0;

    double cost() const {
        double c = cash;
        for (std::size_t j = 0; j < options.size(); ++j) c += coefficients[j] * options[j].price;
        return c;
    }
    double static_payoff(const GridPath& path) const {
        double v = cash;
        for (std::size_t j = 0; j < options.size(); ++j)
            v += coefficients[j] * options[j].payoff(path);
        return v;
    }
};

struct AdmissibilityReport {
    bool admissible = true;
    double worst_slack = std::numeric_limits<double>::infinity();
    std::size_t worst_path = 0;
    double worst_time = 0.0;
};

// Checks the running-gains floor on every path of a finite family: gains at
// every rebalance and grid time must stay above -M (p = 0) or
// -M (1 + sup_{s<=t} |S_s|^p) (p > 0).
inline AdmissibilityReport check_admissible(const DynamicRule& rule,
                                            const std::vector<GridPath>& paths, double M,
                                            double growth_p) {
    AdmissibilityReport rep;
    for (std::size_t w = 0; w < paths.size(); ++w) {
        const auto& p = paths[w];
        TradeSchedule sched = rule(p);
        std::vector<double> checks(sched.times);
        checks.insert(checks.end(), p.times.begin(), p.times.end());
        std::sort(checks.begin(), checks.end());
        checks.erase(std::unique(checks.begin(), checks.end()), checks.end());
        double running_sup = 0.0;
        std::size_t grid_idx = 0;
        for (double t : checks) {
            if (t > p.horizon()) break;
            while (grid_idx < p.times.size() && p.times[grid_idx] <= t) {
                for (double x : p.values[grid_idx]) running_sup = std::max(running_sup, std::abs(x));
                ++grid_idx;
            }
            double sup_to_t = running_sup;
            for (double x : p.at(t)) sup_to_t = std::max(sup_to_t, std::abs(x));
            double floor = growth_p > 0.0 ? -M * (1.0 + std::pow(sup_to_t, growth_p)) : -M;
            double gains = pathwise_integral(sched, p, t);
            double slack = gains - floor;
            if (slack < rep.worst_slack) {
                rep.worst_slack = slack;
                rep.worst_path = w;
                rep.worst_time = t;
            }
        }
    }
    rep.admissible = rep.worst_slack >= -1e-9;
    return rep;
}

inline AdmissibilityReport check_admissible(const SemiStaticStrategy& s,
                                            const std::vector<GridPath>& paths);

struct SuperhedgeSlack {
    std::size_t path = 0;
    double slack = 0.0;
    bool in_scope = true;
};

struct SuperhedgeReport {
    bool ok = true;
    double worst_slack = std::numeric_limits<double>::infinity();
    std::size_t worst_path = 0;
    std::vector<SuperhedgeSlack> rows;
};

// Verifies the superhedging inequality static + gains >= G on every family
// path inside the eps-fattened prediction set.
inline SuperhedgeReport verify_superhedge(const SemiStaticStrategy& strategy, const Payoff& G,
                                          const std::vector<GridPath>& paths,
                                          const PredictionSet& set, const InfoSpace& info,
                                          double eps, double tol = 1e-8) {
    SuperhedgeReport rep;
    for (std::size_t w = 0; w < paths.size(); ++w) {
        SuperhedgeSlack row;
        row.path = w;
        row.in_scope = in_fattened_set(set, info, paths[w], eps);
        if (row.in_scope) {
            double lhs = strategy.static_payoff(paths[w]) +
                         pathwise_integral(strategy.dynamic, paths[w], paths[w].horizon());
            row.slack = lhs - G(paths[w]);
            if (row.slack < rep.worst_slack) {
                rep.worst_slack = row.slack;
                rep.worst_path = w;
            }
        }
        rep.rows.push_back(row);
    }
    if (rep.rows.empty() || rep.worst_slack == std::numeric_limits<double>::infinity())
        rep.worst_slack = 0.0;
    rep.ok = rep.worst_slack >= -tol;
    return rep;
}

// Positions on discretised paths: the value held from the k-th shifted jump
// time onward, as a function of the first k segments and of the evaluation
// time itself (the prefix passed in is truncated, so looking ahead at the
// k-th jump's landing value is impossible by construction).
using DiscreteRule = std::function<std::vector<double>(
    const PiecewiseConstantPath& prefix, std::size_t k, const BigRational& eval_time)>;

namespace detail {
inline PiecewiseConstantPath truncate_prefix(const PiecewiseConstantPath& f, std::size_t k) {
    PiecewiseConstantPath out;
    out.N = f.N;
    out.horizon = f.horizon;
    std::size_t segs = std::min(k == 0 ? 1 : k, f.values.size());
    out.values.assign(f.values.begin(), f.values.begin() + static_cast<std::ptrdiff_t>(segs));
    out.jump_times.assign(f.jump_times.begin(),
                          f.jump_times.begin() + static_cast<std::ptrdiff_t>(segs - 1));
    out.terminal = out.values.back();
    return out;
}
}  // namespace detail

// Lift of a discrete rule to continuous paths: the position on the Lebesgue
// interval (tau_k, tau_{k+1}] is the rule's value at the k-th shifted jump of
// the path's discretisation. Positions are bounded by the mesh index N.
inline DynamicRule lift_strategy(const DiscreteRule& rule, int N, const InfoSpace& info) {
    return [rule, N, info](const GridPath& S) {
        auto stages = staged_dyadic_discretise(S, info, N);
        const auto& hat = stages.result;
        const std::size_t m = hat.segments();
        TradeSchedule sched;
        for (std::size_t k = 0; k < m; ++k) {
            sched.times.push_back(stages.partition.taus[k]);
            BigRational eval_time = k == 0 ? BigRational(0) : hat.jump_times[k - 1];
            auto pos = rule(detail::truncate_prefix(hat, k), k, eval_time);
            for (double c : pos)
                if (std::abs(c) > static_cast<double>(N) + 1e-12)
                    throw std::logic_error("lift_strategy: rule exceeds its bound N");
            sched.positions.push_back(std::move(pos));
        }
        return sched;
    };
}

struct MimicError {
    double max_interior = 0.0;  // over partition indices k < m
    double max_total = 0.0;     // including the final interval
};

// Difference between the lifted gains along the path and the discrete gains
// along its discretisation, maximised over partition prefixes. Bounded by
// 5 (d+K) N / 2^N before the final interval and 6 (d+K) N / 2^N including it.
inline MimicError integral_mimic_error(const DiscreteRule& rule, const GridPath& S, int N,
                                       const InfoSpace& info) {
    auto stages = staged_dyadic_discretise(S, info, N);
    const auto& hat = stages.result;
    const auto& part = stages.partition;
    const std::size_t m = hat.segments();
    const std::size_t dim = S.dim();

    std::vector<std::vector<double>> pos(m);
    for (std::size_t k = 0; k < m; ++k) {
        BigRational eval_time = k == 0 ? BigRational(0) : hat.jump_times[k - 1];
        pos[k] = rule(detail::truncate_prefix(hat, k), k, eval_time);
    }

    std::vector<std::vector<double>> hat_vals;
    for (const auto& v : hat.values) {
        std::vector<double> row(dim);
        for (std::size_t i = 0; i < dim; ++i) row[i] = v[i].to_double();
        hat_vals.push_back(std::move(row));
    }

    MimicError err;
    double cont = 0.0, disc = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        for (std::size_t i = 0; i < dim; ++i)
            cont += pos[k - 1][i] * (part.values_at_taus[k][i] - part.values_at_taus[k - 1][i]);
        if (k <= m - 1) {
            for (std::size_t i = 0; i < dim; ++i)
                disc += pos[k][i] * (hat_vals[k][i] - hat_vals[k - 1][i]);
        }
        double e = std::abs(cont - disc);
        if (k < m) err.max_interior = std::max(err.max_interior, e);
        err.max_total = std::max(err.max_total, e);
    }
    return err;
}

inline AdmissibilityReport check_admissible(const SemiStaticStrategy& s,
                                            const std::vector<GridPath>& paths) {
    return check_admissible(s.dynamic, paths, s.floor_M, s.growth_p);
}

// Dual LP solution replayed as a semi-static strategy on the lattice.
inline SemiStaticStrategy strategy_from_dual(const LatticePaths& lat,
                                             const std::vector<QuotedOption>& options,
                                             const SuperhedgeLPSolution& dual) {
    SemiStaticStrategy s;
    s.cash = dual.cash;
    s.options = options;
    s.coefficients = dual.option_coeffs;
    auto positions = dual.positions;
    const LatticePaths* latp = &lat;
    s.dynamic = [latp, positions](const GridPath& p) {
        auto id = latp->match(p);
        if (!id) throw std::domain_error("strategy_from_dual: path not on the lattice");
        TradeSchedule sched;
        for (std::size_t t = 0; t < positions.size(); ++t) {
            sched.times.push_back(latp->model().times[t]);
            sched.positions.push_back(positions[t][latp->prefix_class(*id, t)]);
        }
        return sched;
    };
    return s;
}

}  // namespace mot
