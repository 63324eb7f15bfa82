#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mot/discretise.hpp"
#include "mot/lattice.hpp"
#include "mot/lp.hpp"
#include "mot/marginals.hpp"
#include "mot/parallel.hpp"
#include "mot/paths.hpp"
#include "mot/payoffs.hpp"

namespace mot {

struct QuotedOption {
    Payoff payoff;
    double price = 0.0;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

// Calibrated martingale measure on the lattice, as a probability per path.
struct MartingaleLPSolution {
    SolveStatus status = SolveStatus::Optimal;
    double value = 0.0;
    std::vector<double> weights;      // per path id (optimal status)
    std::vector<double> certificate;  // Farkas row multipliers when infeasible
    double martingale_residual = 0.0;
    double calibration_residual = 0.0;
};

// Semi-static superhedge: cash + static option coefficients + an adapted
// dynamic position per (time, history class).
struct SuperhedgeLPSolution {
    SolveStatus status = SolveStatus::Optimal;
    double value = 0.0;  // a_0 + sum a_X P(X)
    double cash = 0.0;
    std::vector<double> option_coeffs;
    std::vector<std::vector<std::vector<double>>> positions;  // [t][prefix class][asset]
    double worst_slack = 0.0;
};

struct DualMode {
    bool penalty = false;  // penalty form: G - N * capped distance, on all paths
    double penalty_N = 0.0;
    double eps = 0.0;      // hard form: superhedge on the eps-fattened set only
    // restrict rebalancing to the lattice mesh-crossing times at exponents <= mesh
    std::optional<int> rebalance_mesh;

    static DualMode hard(double eps_ = 0.0) {
        DualMode m;
        m.eps = eps_;
        return m;
    }
    static DualMode penalised(double N) {
        DualMode m;
        m.penalty = true;
        m.penalty_N = N;
        return m;
    }
};

namespace detail {

struct PathCache {
    std::vector<GridPath> paths;
    std::vector<double> objective;        // G per path
    std::vector<std::vector<double>> option_values;  // [option][path]
    std::vector<double> dist_lower, dist_upper;      // uncapped distance to the set
};

inline PathCache build_cache(const LatticePaths& lat, const Payoff& G,
                             const std::vector<QuotedOption>& options, const PredictionSet& set) {
    PathCache cache;
    const std::size_t P = lat.n_paths();
    const InfoSpace info = lat.model().info();
    cache.paths.resize(P);
    cache.objective.resize(P);
    cache.option_values.assign(options.size(), std::vector<double>(P, 0.0));
    cache.dist_lower.resize(P, 0.0);
    cache.dist_upper.resize(P, 0.0);
    const bool with_set = set.kind != PredictionSet::Kind::All;
    parallel_for(P, [&](std::size_t w) {
        cache.paths[w] = lat.grid_path(w);
        cache.objective[w] = G(cache.paths[w]);
        for (std::size_t j = 0; j < options.size(); ++j)
            cache.option_values[j][w] = options[j].payoff(cache.paths[w]);
        if (with_set) {
            DistanceBounds b = set_distance(set, info, cache.paths[w]);
            cache.dist_lower[w] = b.lower;
            cache.dist_upper[w] = b.upper;
        }
    });
    return cache;
}

// Rebalance-time classes: position variables for time step t are shared along
// histories whose last admissible rebalance is the same node. Admissible
// rebalance times at mesh exponent L are time 0 plus every time at which the
// path has moved by 2^-k (any k <= L) since that threshold's last rebalance;
// taking the union over k <= L makes refinement monotone in L.
struct RebalanceKeys {
    // key[t][class] -> variable block id
    std::vector<std::vector<std::size_t>> key;
    std::size_t n_blocks = 0;
};

inline RebalanceKeys build_rebalance_keys(const LatticePaths& lat, std::optional<int> mesh) {
    const std::size_t m = lat.model().steps();
    RebalanceKeys out;
    out.key.resize(m);
    if (!mesh) {
        std::size_t next = 0;
        for (std::size_t t = 0; t < m; ++t) {
            out.key[t].resize(lat.n_prefix_classes(t));
            for (std::size_t c = 0; c < out.key[t].size(); ++c) out.key[t][c] = next++;
        }
        out.n_blocks = next;
        return out;
    }
    const int L = *mesh;
    // map (t, class at t) -> (t*, class at t*) with t* the last rebalance <= t
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> ids;
    for (std::size_t t = 0; t < m; ++t) out.key[t].resize(lat.n_prefix_classes(t));
    const std::size_t P = lat.n_paths();
    const std::size_t dd = static_cast<std::size_t>(lat.model().d);
    std::vector<char> done;
    for (std::size_t t = 0; t < m; ++t) {
        done.assign(lat.n_prefix_classes(t), 0);
        for (std::size_t w = 0; w < P; ++w) {
            std::size_t cls = lat.prefix_class(w, t);
            if (done[cls]) continue;
            done[cls] = 1;
            // walk the prefix, tracking one anchor per threshold
            std::vector<std::vector<double>> anchors(static_cast<std::size_t>(L),
                                                     std::vector<double>(dd, 1.0));
            std::size_t last_rebalance = 0;
            for (std::size_t s = 1; s <= t; ++s) {
                const auto& v = lat.value(w, s);
                bool crossed = false;
                for (int k = 1; k <= L; ++k) {
                    auto& anchor = anchors[static_cast<std::size_t>(k - 1)];
                    double dev = 0.0;
                    for (std::size_t i = 0; i < dd; ++i)
                        dev = std::max(dev, std::abs(v[i] - anchor[i]));
                    if (dev >= std::ldexp(1.0, -k) - 1e-12) {
                        anchor = v;
                        crossed = true;
                    }
                }
                if (crossed) last_rebalance = s;
            }
            auto node = std::pair{last_rebalance, lat.prefix_class(w, last_rebalance)};
            auto [it, inserted] = ids.try_emplace(node, ids.size());
            out.key[t][cls] = it->second;
        }
    }
    out.n_blocks = ids.size();
    return out;
}

}  // namespace detail

// sup over calibrated lattice martingale measures of E[G], with eta-relaxed
// option calibration and prediction-set mass (Sigma q over paths farther than
// eta from the set is at most eta; omitted for the trivial set).
inline MartingaleLPSolution primal_solve(const LatticePaths& lat, const Payoff& G,
                                         const std::vector<QuotedOption>& options,
                                         const PredictionSet& set, double eta,
                                         const SimplexOptions& lp_opts = {}) {
    if (eta < 0) throw std::invalid_argument("primal_solve: eta must be >= 0");
    const auto cache = detail::build_cache(lat, G, options, set);
    const std::size_t P = lat.n_paths();
    const std::size_t m = lat.model().steps();
    const std::size_t dd = static_cast<std::size_t>(lat.model().d);

    LpProblem lp(P);
    lp.c = cache.objective;
    lp.add_row(std::vector<double>(P, 1.0), '=', 1.0);
    for (std::size_t t = 0; t < m; ++t) {
        const std::size_t n_cls = lat.n_prefix_classes(t);
        const std::size_t block = lat.block_size(t);
        for (std::size_t c = 0; c < n_cls; ++c) {
            for (std::size_t i = 0; i < dd; ++i) {
                std::vector<double> row(P, 0.0);
                bool nonzero = false;
                for (std::size_t w = c * block; w < (c + 1) * block; ++w) {
                    double inc = lat.value(w, t + 1)[i] - lat.value(w, t)[i];
                    row[w] = inc;
                    nonzero = nonzero || inc != 0.0;
                }
                if (nonzero) lp.add_row(std::move(row), '=', 0.0);
            }
        }
    }
    for (std::size_t j = 0; j < options.size(); ++j) {
        if (eta == 0.0) {
            lp.add_row(cache.option_values[j], '=', options[j].price);
        } else {
            lp.add_row(cache.option_values[j], '<', options[j].price + eta);
            lp.add_row(cache.option_values[j], '>', options[j].price - eta);
        }
    }
    if (set.kind != PredictionSet::Kind::All) {
        std::vector<double> row(P, 0.0);
        for (std::size_t w = 0; w < P; ++w)
            if (cache.dist_lower[w] > eta + 1e-12) row[w] = 1.0;
        lp.add_row(std::move(row), '<', eta);
    }

    auto sol = solve_lp(lp, lp_opts);
    MartingaleLPSolution out;
    if (sol.status == LpStatus::Infeasible) {
        out.status = SolveStatus::Infeasible;
        out.certificate = sol.farkas;
        return out;
    }
    if (sol.status != LpStatus::Optimal) throw std::runtime_error("primal_solve: LP did not converge");
    out.value = sol.objective;
    out.weights = sol.x;
    // residual diagnostics
    for (std::size_t t = 0; t < m; ++t) {
        const std::size_t block = lat.block_size(t);
        for (std::size_t c = 0; c < lat.n_prefix_classes(t); ++c)
            for (std::size_t i = 0; i < dd; ++i) {
                double r = 0.0;
                for (std::size_t w = c * block; w < (c + 1) * block; ++w)
                    r += sol.x[w] * (lat.value(w, t + 1)[i] - lat.value(w, t)[i]);
                out.martingale_residual = std::max(out.martingale_residual, std::abs(r));
            }
    }
    for (std::size_t j = 0; j < options.size(); ++j) {
        double v = 0.0;
        for (std::size_t w = 0; w < P; ++w) v += sol.x[w] * cache.option_values[j][w];
        out.calibration_residual =
            std::max(out.calibration_residual, std::abs(v - options[j].price) - eta);
    }
    return out;
}

// Minimal superhedging cost over semi-static strategies on the lattice, in
// penalty form (dominate G - N * capped set distance everywhere) or hard form
// (dominate G on the eps-fattened set only).
inline SuperhedgeLPSolution dual_solve(const LatticePaths& lat, const Payoff& G,
                                       const std::vector<QuotedOption>& options,
                                       const PredictionSet& set, const DualMode& mode,
                                       const SimplexOptions& lp_opts = {}) {
    const auto cache = detail::build_cache(lat, G, options, set);
    const std::size_t P = lat.n_paths();
    const std::size_t m = lat.model().steps();
    const std::size_t dd = static_cast<std::size_t>(lat.model().d);
    const auto keys = detail::build_rebalance_keys(lat, mode.rebalance_mesh);

    // variable layout (each free variable split into +/-):
    // a0 | option coefficients | positions per (rebalance block, asset)
    const std::size_t n_free = 1 + options.size() + keys.n_blocks * dd;
    LpProblem lp(2 * n_free);
    auto plus = [](std::size_t f) { return 2 * f; };
    auto minus = [](std::size_t f) { return 2 * f + 1; };
    auto set_c = [&](std::size_t f, double v) {
        lp.c[plus(f)] = -v;  // minimisation via max of the negative
        lp.c[minus(f)] = v;
    };
    set_c(0, 1.0);
    for (std::size_t j = 0; j < options.size(); ++j) set_c(1 + j, options[j].price);
    const std::size_t pos_base = 1 + options.size();
    auto pos_var = [&](std::size_t block, std::size_t asset) {
        return pos_base + block * dd + asset;
    };

    std::vector<char> in_scope(P, 1);
    std::vector<double> rhs(cache.objective);
    if (mode.penalty) {
        for (std::size_t w = 0; w < P; ++w)
            rhs[w] -= mode.penalty_N * std::min(1.0, std::max(0.0, cache.dist_upper[w]));
    } else if (set.kind != PredictionSet::Kind::All) {
        for (std::size_t w = 0; w < P; ++w)
            in_scope[w] = cache.dist_lower[w] <= mode.eps + 1e-12 ? 1 : 0;
    }

    std::size_t scoped = 0;
    for (std::size_t w = 0; w < P; ++w) {
        if (!in_scope[w]) continue;
        ++scoped;
        std::vector<double> row(lp.n, 0.0);
        row[plus(0)] = 1.0;
        row[minus(0)] = -1.0;
        for (std::size_t j = 0; j < options.size(); ++j) {
            double x = cache.option_values[j][w];
            row[plus(1 + j)] = x;
            row[minus(1 + j)] = -x;
        }
        for (std::size_t t = 0; t < m; ++t) {
            std::size_t block = keys.key[t][lat.prefix_class(w, t)];
            for (std::size_t i = 0; i < dd; ++i) {
                double inc = lat.value(w, t + 1)[i] - lat.value(w, t)[i];
                if (inc == 0.0) continue;
                std::size_t f = pos_var(block, i);
                row[plus(f)] += inc;
                row[minus(f)] -= inc;
            }
        }
        lp.add_row(std::move(row), '>', rhs[w]);
    }
    if (scoped == 0) throw std::invalid_argument("dual_solve: no paths in scope");

    auto sol = solve_lp(lp, lp_opts);
    SuperhedgeLPSolution out;
    if (sol.status == LpStatus::Unbounded) {
        // cost can be pushed to -inf only if no calibrated measure exists
        out.status = SolveStatus::Unbounded;
        return out;
    }
    if (sol.status != LpStatus::Optimal) throw std::runtime_error("dual_solve: LP did not converge");
    out.value = -sol.objective;
    auto var = [&](std::size_t f) { return sol.x[plus(f)] - sol.x[minus(f)]; };
    out.cash = var(0);
    for (std::size_t j = 0; j < options.size(); ++j) out.option_coeffs.push_back(var(1 + j));
    out.positions.resize(m);
    for (std::size_t t = 0; t < m; ++t) {
        out.positions[t].resize(lat.n_prefix_classes(t));
        for (std::size_t c = 0; c < lat.n_prefix_classes(t); ++c) {
            out.positions[t][c].resize(dd);
            for (std::size_t i = 0; i < dd; ++i)
                out.positions[t][c][i] = var(pos_var(keys.key[t][c], i));
        }
    }
    // worst slack over in-scope paths
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < P; ++w) {
        if (!in_scope[w]) continue;
        double lhs = out.cash;
        for (std::size_t j = 0; j < options.size(); ++j)
            lhs += out.option_coeffs[j] * cache.option_values[j][w];
        for (std::size_t t = 0; t < m; ++t) {
            const auto& pos = out.positions[t][lat.prefix_class(w, t)];
            for (std::size_t i = 0; i < dd; ++i)
                lhs += pos[i] * (lat.value(w, t + 1)[i] - lat.value(w, t)[i]);
        }
        worst = std::min(worst, lhs - rhs[w]);
    }
    out.worst_slack = worst;
    return out;
}

struct DualityGapRow {
    double eta = 0.0;
    double primal = 0.0;
    SolveStatus primal_status = SolveStatus::Optimal;
    double dual = 0.0;
    SolveStatus dual_status = SolveStatus::Optimal;
    double gap = 0.0;
    bool comparable = false;  // hard dual vs exact primal on identical scopes
};

// Primal and dual values along an eta schedule. At eta = 0 both sides are the
// same LP seen from its two ends, so the gap there is the solver's duality
// error and is asserted against gap_tol; for eta > 0 the dual is reported in
// penalty form at N = 1/eta.
inline std::vector<DualityGapRow> duality_gap(const LatticePaths& lat, const Payoff& G,
                                              const std::vector<QuotedOption>& options,
                                              const PredictionSet& set,
                                              const std::vector<double>& eta_schedule,
                                              double gap_tol = 1e-6) {
    std::vector<DualityGapRow> rows;
    for (double eta : eta_schedule) {
        DualityGapRow row;
        row.eta = eta;
        auto p = primal_solve(lat, G, options, set, eta);
        row.primal_status = p.status;
        row.primal = p.value;
        DualMode mode = eta == 0.0 ? DualMode::hard(0.0) : DualMode::penalised(1.0 / eta);
        auto d = dual_solve(lat, G, options, set, mode);
        row.dual_status = d.status;
        row.dual = d.value;
        if (p.status == SolveStatus::Optimal && d.status == SolveStatus::Optimal) {
            row.gap = d.value - p.value;
            row.comparable = eta == 0.0;
            if (row.comparable && std::abs(row.gap) > gap_tol)
                throw std::logic_error("duality_gap: primal and dual disagree on identical scopes: " +
                                       std::to_string(row.gap));
        }
        rows.push_back(row);
    }
    return rows;
}

struct PenaltySweep {
    std::vector<double> penalties;
    std::vector<double> values;       // dual value per penalty multiplier
    double hard_value = 0.0;          // hard-constrained dual at eps = 0
};

// Penalty-form dual along an increasing multiplier list; the values are
// nonincreasing and reach the hard-constrained value once the multiplier
// dominates the payoff range over the lattice's distance granularity.
inline PenaltySweep penalty_sweep(const LatticePaths& lat, const Payoff& G,
                                  const std::vector<QuotedOption>& options,
                                  const PredictionSet& set, const std::vector<double>& N_list) {
    PenaltySweep out;
    out.penalties = N_list;
    for (double N : N_list) out.values.push_back(dual_solve(lat, G, options, set, DualMode::penalised(N)).value);
    out.hard_value = dual_solve(lat, G, options, set, DualMode::hard(0.0)).value;
    return out;
}

struct EtaMembership {
    bool member = false;
    double radius = 0.0;  // minimal eta at which membership holds
    double option_radius = 0.0;
    double mass_radius = 0.0;
};

// Checks the eta-market-model conditions for a measure on the lattice: every
// option mispriced by at most eta and mass at least 1 - eta within eta of the
// prediction set. Also reports the minimal eta (the miscalibration radius).
inline EtaMembership eta_membership(const LatticePaths& lat, const std::vector<double>& q,
                                    const std::vector<QuotedOption>& options,
                                    const PredictionSet& set, double eta) {
    const std::size_t P = lat.n_paths();
    if (q.size() != P) throw std::invalid_argument("eta_membership: weight vector size mismatch");
    EtaMembership out;
    const InfoSpace info = lat.model().info();
    for (const auto& opt : options) {
        double v = 0.0;
        for (std::size_t w = 0; w < P; ++w) v += q[w] * opt.payoff(lat.grid_path(w));
        out.option_radius = std::max(out.option_radius, std::abs(v - opt.price));
    }
    std::vector<std::pair<double, double>> dist_mass;  // (distance, prob)
    for (std::size_t w = 0; w < P; ++w) {
        if (q[w] == 0.0) continue;
        double dist = set.kind == PredictionSet::Kind::All
                          ? 0.0
                          : set_distance(set, info, lat.grid_path(w)).lower;
        dist_mass.emplace_back(dist, q[w]);
    }
    std::sort(dist_mass.begin(), dist_mass.end());
    // minimal eta with mass({distance > eta}) <= eta: scan the flat levels
    double total = 0.0;
    for (auto& dm : dist_mass) total += dm.second;
    double mass_radius = std::numeric_limits<double>::infinity();
    double below = 0.0;
    std::size_t idx = 0;
    std::vector<double> levels{0.0};
    for (auto& dm : dist_mass) levels.push_back(dm.first);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (std::size_t lv = 0; lv < levels.size(); ++lv) {
        double v = levels[lv];
        while (idx < dist_mass.size() && dist_mass[idx].first <= v + 1e-15) {
            below += dist_mass[idx].second;
            ++idx;
        }
        double outside = total - below;  // mass strictly farther than v
        double candidate = std::max(v, outside);
        double next = lv + 1 < levels.size() ? levels[lv + 1] : std::numeric_limits<double>::infinity();
        if (candidate < next) mass_radius = std::min(mass_radius, candidate);
    }
    out.mass_radius = mass_radius;
    out.radius = std::max(out.option_radius, out.mass_radius);
    out.member = out.radius <= eta + 1e-12;
    return out;
}

struct MarginalEtaMembership {
    bool member = false;
    double terminal_mismatch = 0.0;        // worst atom-mass gap at the horizon
    double intermediate_distance = 0.0;    // worst bounded-Lipschitz distance
    double mass_radius = 0.0;
};

// Marginal-based eta-market-model test: terminal marginals matched exactly
// (within solver tolerance), intermediate marginals within eta in bounded-
// Lipschitz distance, and the fattened-set mass condition.
inline MarginalEtaMembership marginal_eta_membership(
    const LatticePaths& lat, const std::vector<double>& q,
    const std::vector<std::vector<DiscreteMarginal>>& mus, const PredictionSet& set, double eta,
    double solver_tol = 1e-8) {
    const std::size_t P = lat.n_paths();
    if (q.size() != P) throw std::invalid_argument("marginal_eta_membership: weights size mismatch");
    const auto& model = lat.model();
    if (mus.size() != static_cast<std::size_t>(model.d))
        throw std::invalid_argument("marginal_eta_membership: one marginal family per asset");
    MarginalEtaMembership out;
    const std::size_t n_mats = model.maturity_indices.size();
    for (std::size_t i = 0; i < mus.size(); ++i) {
        if (mus[i].size() != n_mats)
            throw std::invalid_argument("marginal_eta_membership: one marginal per maturity");
        for (std::size_t j = 0; j < n_mats; ++j) {
            const std::size_t t = model.maturity_indices[j];
            std::map<double, double> law;
            for (std::size_t w = 0; w < P; ++w)
                if (q[w] > 0.0) law[lat.value(w, t)[i]] += q[w];
            std::vector<double> xs, ps;
            for (auto& [x, p] : law) {
                xs.push_back(x);
                ps.push_back(p);
            }
            double tot = std::accumulate(ps.begin(), ps.end(), 0.0);
            for (double& p : ps) p /= tot;
            DiscreteMarginal emp(xs, ps);
            if (j + 1 == n_mats) {
                // exact match clause at the last maturity
                double worst = 0.0;
                for (std::size_t k = 0; k < mus[i][j].support.size(); ++k) {
                    double mass = 0.0;
                    for (std::size_t l = 0; l < xs.size(); ++l)
                        if (std::abs(xs[l] - mus[i][j].support[k]) <= 1e-9) mass += ps[l];
                    worst = std::max(worst, std::abs(mass - mus[i][j].probs[k]));
                }
                for (std::size_t l = 0; l < xs.size(); ++l) {
                    bool on_support = false;
                    for (double s : mus[i][j].support)
                        if (std::abs(xs[l] - s) <= 1e-9) on_support = true;
                    if (!on_support) worst = std::max(worst, ps[l]);
                }
                out.terminal_mismatch = std::max(out.terminal_mismatch, worst);
            } else {
                out.intermediate_distance =
                    std::max(out.intermediate_distance, bl_distance(emp, mus[i][j]));
            }
        }
    }
    auto mass = eta_membership(lat, q, {}, set, eta);
    out.mass_radius = mass.mass_radius;
    out.member = out.terminal_mismatch <= solver_tol && out.intermediate_distance <= eta + 1e-12 &&
                 out.mass_radius <= eta + 1e-12;
    return out;
}

// ---------------------------------------------------------------------------
// Superhedging over a finite set of piecewise-constant paths under a
// full-support prior, and its drift-penalised dual.
// ---------------------------------------------------------------------------

struct FullSupportPrior {
    std::vector<PiecewiseConstantPath> support;
    std::vector<double> probs;  // strictly positive, sum 1
};

namespace detail {

// Tree over the union of jump times: per observation time, the partition of
// support paths by their value history. Increment k of path w is the move
// over (r_{k-1}, r_k].
struct SupportTree {
    std::vector<BigRational> obs_times;                 // r_1 < ... < r_J (< horizon)
    std::vector<std::vector<double>> value_at;          // [path][obs step 0..J] flattened dim-major
    std::size_t dim = 0;
    // node ids: per step j (0..J-1), class of paths sharing values at r_1..r_j
    std::vector<std::vector<std::size_t>> node_of;      // [step j][path] -> node id
    std::size_t n_nodes = 0;

    double value(std::size_t path, std::size_t step, std::size_t coord) const {
        return value_at[path][step * dim + coord];
    }
};

inline SupportTree build_support_tree(const std::vector<PiecewiseConstantPath>& support) {
    SupportTree tree;
    tree.dim = support.front().dim();
    std::vector<BigRational> all;
    for (const auto& f : support)
        all.insert(all.end(), f.jump_times.begin(), f.jump_times.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    tree.obs_times = std::move(all);
    const std::size_t J = tree.obs_times.size();
    const std::size_t n = support.size();

    tree.value_at.assign(n, std::vector<double>((J + 1) * tree.dim, 0.0));
    for (std::size_t w = 0; w < n; ++w) {
        const auto& f = support[w];
        for (std::size_t j = 0; j <= J; ++j) {
            // value at r_j (r_0 = 0): last segment with jump time <= r_j
            std::size_t seg = 0;
            if (j > 0) {
                for (std::size_t k = 0; k < f.jump_times.size(); ++k)
                    if (f.jump_times[k] <= tree.obs_times[j - 1]) seg = k + 1;
            }
            for (std::size_t i = 0; i < tree.dim; ++i)
                tree.value_at[w][j * tree.dim + i] = f.values[seg][i].to_double();
        }
    }

    tree.node_of.resize(J);
    std::vector<std::size_t> cls(n, 0);
    std::size_t next_id = 0;
    for (std::size_t j = 0; j < J; ++j) {
        // refine previous classes by the value at r_j (classes at step j key
        // the increment over (r_j, r_{j+1}]) -- here node_of[j] groups paths
        // by values at r_1..r_j, used for increment j+1
        std::map<std::pair<std::size_t, std::vector<double>>, std::size_t> refine;
        std::vector<std::size_t> nxt(n);
        for (std::size_t w = 0; w < n; ++w) {
            std::vector<double> key(tree.value_at[w].begin() + static_cast<std::ptrdiff_t>(j * tree.dim),
                                    tree.value_at[w].begin() + static_cast<std::ptrdiff_t>((j + 1) * tree.dim));
            auto [it, ins] = refine.try_emplace({cls[w], key}, next_id);
            if (ins) ++next_id;
            nxt[w] = it->second;
        }
        cls = std::move(nxt);
        tree.node_of[j] = cls;
    }
    tree.n_nodes = next_id;
    return tree;
}

}  // namespace detail

struct DriftPenaltyResult {
    double superhedge_cost = 0.0;   // inf x: bounded strategy dominates G on every support path
    double penalised_value = 0.0;   // sup over measures of E[G] - N * expected total drift
};

// Two routes to the same value: superhedging with positions bounded by
// bound_N on one side, and on the other the supremum over measures on the
// support of E[G] minus bound_N times the total conditional-drift magnitude
// (linearised with auxiliary variables). The two LPs are exact duals; their
// agreement is asserted.
inline DriftPenaltyResult discrete_superhedge_penalised(
    const std::vector<PiecewiseConstantPath>& support, const std::vector<double>& prior,
    const std::vector<double>& G_hat, double bound_N, double tol = 1e-6) {
    if (support.empty()) throw std::domain_error("discrete_superhedge_penalised: empty support");
    if (prior.size() != support.size() || G_hat.size() != support.size())
        throw std::invalid_argument("discrete_superhedge_penalised: size mismatch");
    for (double p : prior)
        if (!(p > 0.0))
            throw std::invalid_argument("discrete_superhedge_penalised: prior must charge every path");
    if (bound_N < 0) throw std::invalid_argument("discrete_superhedge_penalised: negative bound");

    const auto tree = detail::build_support_tree(support);
    const std::size_t n = support.size();
    const std::size_t J = tree.obs_times.size();
    const std::size_t dim = tree.dim;

    // ---- superhedge side: min x s.t. x + sum_j gamma(node)' * dS >= G ----
    // variables: x (split), gamma per (node, coord) (split)
    const std::size_t n_free = 1 + tree.n_nodes * dim;
    LpProblem hedge(2 * n_free);
    hedge.c[0] = -1.0;  // maximise -x
    hedge.c[1] = 1.0;
    auto gvar = [&](std::size_t node, std::size_t i) { return 1 + node * dim + i; };
    for (std::size_t w = 0; w < n; ++w) {
        std::vector<double> row(hedge.n, 0.0);
        row[0] = 1.0;
        row[1] = -1.0;
        for (std::size_t j = 0; j < J; ++j) {
            std::size_t node = tree.node_of[j][w];
            for (std::size_t i = 0; i < dim; ++i) {
                double inc = tree.value(w, j + 1, i) - tree.value(w, j, i);
                if (inc == 0.0) continue;
                std::size_t f = gvar(node, i);
                row[2 * f] += inc;
                row[2 * f + 1] -= inc;
            }
        }
        hedge.add_row(std::move(row), '>', G_hat[w]);
    }
    // position bounds |gamma| <= bound_N
    for (std::size_t f = 1; f < n_free; ++f) {
        std::vector<double> row(hedge.n, 0.0);
        row[2 * f] = 1.0;
        row[2 * f + 1] = -1.0;
        hedge.add_row(row, '<', bound_N);
        for (double& v : row) v = -v;
        hedge.add_row(std::move(row), '<', bound_N);
    }
    auto hsol = solve_lp(hedge);
    if (hsol.status != LpStatus::Optimal)
        throw std::runtime_error("discrete_superhedge_penalised: hedge LP failed");

    // ---- measure side: max E_q[G] - N * sum |class drift| ----
    // variables: q per path, z per (node, coord)
    const std::size_t nq = n;
    const std::size_t nz = tree.n_nodes * dim;
    LpProblem meas(nq + nz);
    for (std::size_t w = 0; w < n; ++w) meas.c[w] = G_hat[w];
    for (std::size_t z = 0; z < nz; ++z) meas.c[nq + z] = -bound_N;
    meas.add_row([&] {
        std::vector<double> row(meas.n, 0.0);
        for (std::size_t w = 0; w < n; ++w) row[w] = 1.0;
        return row;
    }(), '=', 1.0);
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t i = 0; i < dim; ++i) {
            // group rows by node: drift(node,i) = sum_{w in node} q_w * inc
            std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> per_node;
            for (std::size_t w = 0; w < n; ++w) {
                double inc = tree.value(w, j + 1, i) - tree.value(w, j, i);
                per_node[tree.node_of[j][w]].emplace_back(w, inc);
            }
            for (auto& [node, entries] : per_node) {
                bool nonzero = false;
                for (auto& [w, inc] : entries) nonzero = nonzero || inc != 0.0;
                if (!nonzero) continue;
                std::vector<double> row(meas.n, 0.0);
                for (auto& [w, inc] : entries) row[w] = inc;
                row[nq + node * dim + i] = -1.0;
                meas.add_row(row, '<', 0.0);
                for (auto& [w, inc] : entries) row[w] = -inc;
                meas.add_row(std::move(row), '<', 0.0);
            }
        }
    }
    auto msol = solve_lp(meas);
    if (msol.status != LpStatus::Optimal)
        throw std::runtime_error("discrete_superhedge_penalised: measure LP failed");

    DriftPenaltyResult out;
    out.superhedge_cost = -hsol.objective;
    out.penalised_value = msol.objective;
    if (std::abs(out.superhedge_cost - out.penalised_value) > tol)
        throw std::logic_error("discrete_superhedge_penalised: the two sides disagree: " +
                               std::to_string(out.superhedge_cost) + " vs " +
                               std::to_string(out.penalised_value));
    return out;
}

// A strictly positive martingale measure charging every path of a truncated
// family of admissible piecewise-constant paths: jumps allowed at the given
// rational times, the k-th jump of each path moving each coordinate by
// 0 or +-2^-(N+k), with symmetric probabilities and floor/cap absorption.
inline FullSupportPrior build_full_support_prior(int N, int max_jumps,
                                                 const std::vector<BigRational>& allowed_times,
                                                 const InfoSpace& info, double horizon = 1.0) {
    if (N < 4) throw std::invalid_argument("build_full_support_prior: N must be >= 4");
    if (max_jumps < 0) throw std::invalid_argument("build_full_support_prior: negative max_jumps");
    for (std::size_t k = 0; k < allowed_times.size(); ++k) {
        if (!(allowed_times[k] > 0) || !(allowed_times[k] < rational_from_double(horizon)))
            throw std::invalid_argument("build_full_support_prior: times must lie inside (0, horizon)");
        if (k > 0 && !(allowed_times[k] > allowed_times[k - 1]))
            throw std::invalid_argument("build_full_support_prior: times must increase");
    }
    const std::size_t dim = static_cast<std::size_t>(info.n_coords());
    const Dyadic floor_value(BigInt(-1), N - 3);

    FullSupportPrior out;
    struct State {
        std::vector<BigRational> jump_times;
        std::vector<std::vector<Dyadic>> values;
        double prob;
        int jumps_used;
        bool absorbed;
    };
    State root{{}, {std::vector<Dyadic>(dim, Dyadic(BigInt(1), 0))}, 1.0, 0, false};

    auto absorbed_at = [&](const std::vector<Dyadic>& v) {
        for (std::size_t i = 0; i < dim; ++i) {
            if (v[i] == floor_value) return true;
            if (static_cast<int>(i) >= info.d && info.K > 0) {
                if (v[i].to_rational() == rational_from_double(info.kappa() + 1.0)) return true;
            }
        }
        return false;
    };

    std::vector<State> frontier{root};
    for (std::size_t step = 0; step < allowed_times.size(); ++step) {
        std::vector<State> next;
        for (auto& st : frontier) {
            if (st.absorbed || st.jumps_used >= max_jumps) {
                next.push_back(st);
                continue;
            }
            const int k = st.jumps_used + 1;
            const Dyadic h(BigInt(1), N + k);
            const Dyadic minus_h(BigInt(-1), N + k);
            // Per-coordinate moves in {-h, 0, +h} with probabilities
            // {1/4, 1/2, 1/4}; a coordinate that cannot take both signed moves
            // stays put, so every transition is mean-preserving.
            std::vector<char> mobile(dim, 1);
            for (std::size_t i = 0; i < dim; ++i) {
                Dyadic down = st.values.back()[i] + minus_h;
                if (down < floor_value) mobile[i] = 0;
                if (static_cast<int>(i) >= info.d && info.K > 0) {
                    Dyadic up = st.values.back()[i] + h;
                    if (up.to_rational() > rational_from_double(info.kappa() + 1.0)) mobile[i] = 0;
                }
            }
            std::vector<std::vector<int>> combos{{}};
            for (std::size_t i = 0; i < dim; ++i) {
                std::vector<std::vector<int>> grown;
                for (const auto& c : combos) {
                    if (!mobile[i]) {
                        auto cc = c;
                        cc.push_back(0);
                        grown.push_back(std::move(cc));
                        continue;
                    }
                    for (int mv : {-1, 0, 1}) {
                        auto cc = c;
                        cc.push_back(mv);
                        grown.push_back(std::move(cc));
                    }
                }
                combos = std::move(grown);
            }
            for (const auto& c : combos) {
                double pr = 1.0;
                bool any = false;
                std::vector<Dyadic> v = st.values.back();
                for (std::size_t i = 0; i < dim; ++i) {
                    if (mobile[i]) pr *= c[i] == 0 ? 0.5 : 0.25;
                    if (c[i] != 0) {
                        any = true;
                        v[i] = v[i] + (c[i] > 0 ? h : minus_h);
                    }
                }
                State ns = st;
                ns.prob = st.prob * pr;
                if (any) {
                    ns.jump_times.push_back(allowed_times[step]);
                    ns.values.push_back(v);
                    ns.jumps_used = k;
                    ns.absorbed = absorbed_at(v);
                }
                next.push_back(std::move(ns));
            }
        }
        frontier = std::move(next);
    }
    for (auto& st : frontier) {
        PiecewiseConstantPath f;
        f.N = N;
        f.horizon = horizon;
        f.jump_times = st.jump_times;
        f.values = st.values;
        f.terminal = st.values.back();
        auto check = check_class_membership(f, info, N);
        if (!check.ok)
            throw std::runtime_error("build_full_support_prior: constructed path not a member (" +
                                     check.detail + ")");
        out.support.push_back(std::move(f));
        out.probs.push_back(st.prob);
    }
    // merge duplicates (identical jump histories can only arise as the no-jump path)
    double total = 0.0;
    for (double p : out.probs) total += p;
    if (std::abs(total - 1.0) > 1e-12)
        throw std::logic_error("build_full_support_prior: probabilities do not sum to 1");
    return out;
}

// Exact martingale check of a full-support prior along every prefix.
inline double prior_martingale_residual(const FullSupportPrior& prior) {
    if (prior.support.empty()) return 0.0;
    const auto tree = detail::build_support_tree(prior.support);
    double worst = 0.0;
    for (std::size_t j = 0; j < tree.obs_times.size(); ++j) {
        std::map<std::size_t, std::vector<std::size_t>> members;
        for (std::size_t w = 0; w < prior.support.size(); ++w)
            members[tree.node_of[j][w]].push_back(w);
        for (auto& [node, ws] : members) {
            for (std::size_t i = 0; i < tree.dim; ++i) {
                double drift = 0.0;
                for (auto w : ws)
                    drift += prior.probs[w] * (tree.value(w, j + 1, i) - tree.value(w, j, i));
                worst = std::max(worst, std::abs(drift));
            }
        }
    }
    return worst;
}

}  // namespace mot
