#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mot/lp.hpp"
#include "mot/paths.hpp"

namespace mot {

// Finitely supported probability measure on the nonnegative half-line.
struct DiscreteMarginal {
    std::vector<double> support;  // strictly increasing, >= 0
    std::vector<double> probs;    // >= 0, sums to 1

    DiscreteMarginal() = default;
    DiscreteMarginal(std::vector<double> x, std::vector<double> p)
        : support(std::move(x)), probs(std::move(p)) {
        validate();
    }

    static DiscreteMarginal dirac(double x) { return DiscreteMarginal({x}, {1.0}); }

    void validate() const {
        if (support.empty() || support.size() != probs.size())
            throw std::invalid_argument("DiscreteMarginal: bad sizes");
        double sum = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k) {
            if (!(support[k] >= 0.0)) throw std::invalid_argument("DiscreteMarginal: negative support");
            if (k > 0 && !(support[k] > support[k - 1]))
                throw std::invalid_argument("DiscreteMarginal: support must increase");
            if (probs[k] < -1e-15) throw std::invalid_argument("DiscreteMarginal: negative mass");
            sum += probs[k];
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("DiscreteMarginal: total mass != 1");
    }

    double mean() const {
        double m = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k) m += support[k] * probs[k];
        return m;
    }
    double put_price(double strike) const {
        double v = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k)
            v += std::max(0.0, strike - support[k]) * probs[k];
        return v;
    }
    double call_price(double strike) const {
        double v = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k)
            v += std::max(0.0, support[k] - strike) * probs[k];
        return v;
    }
    double power_moment(double p) const {
        double v = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k) v += std::pow(support[k], p) * probs[k];
        return v;
    }
    double tail_power_moment(double p, double threshold) const {
        double v = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k)
            if (support[k] >= threshold) v += std::pow(support[k], p) * probs[k];
        return v;
    }
};

// Market put quotes as a piecewise-linear convex curve through (0, 0).
struct PutPriceCurve {
    std::vector<double> strikes;  // strictly increasing, > 0
    std::vector<double> prices;

    PutPriceCurve() = default;
    PutPriceCurve(std::vector<double> k, std::vector<double> p)
        : strikes(std::move(k)), prices(std::move(p)) {
        if (strikes.empty() || strikes.size() != prices.size())
            throw std::invalid_argument("PutPriceCurve: bad sizes");
        for (std::size_t j = 0; j < strikes.size(); ++j) {
            if (!(strikes[j] > 0.0)) throw std::invalid_argument("PutPriceCurve: strikes must be > 0");
            if (j > 0 && !(strikes[j] > strikes[j - 1]))
                throw std::invalid_argument("PutPriceCurve: strikes must increase");
            if (prices[j] < -1e-12 || prices[j] > strikes[j] + 1e-12)
                throw std::invalid_argument("PutPriceCurve: price outside [0, K]");
        }
    }

    // slopes of the segments (0,K1), (K1,K2), ...; slopes.size() == strikes.size()
    std::vector<double> slopes() const {
        std::vector<double> s(strikes.size());
        s[0] = prices[0] / strikes[0];
        for (std::size_t j = 1; j < strikes.size(); ++j)
            s[j] = (prices[j] - prices[j - 1]) / (strikes[j] - strikes[j - 1]);
        return s;
    }
};

// Breeden-Litzenberger inversion: the right put-price slope is the CDF, so
// atoms sit at the slope-change strikes with mass equal to the slope jump.
inline DiscreteMarginal marginal_from_puts(const PutPriceCurve& curve, double tol = 1e-10) {
    auto s = curve.slopes();
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (s[j] < -tol || s[j] > 1.0 + tol)
            throw std::invalid_argument("marginal_from_puts: slope outside [0,1] (arbitrage)");
        if (j > 0 && s[j] < s[j - 1] - tol)
            throw std::invalid_argument("marginal_from_puts: curve not convex (arbitrage)");
    }
    if (std::abs(s.back() - 1.0) > tol)
        throw std::invalid_argument("marginal_from_puts: final slope != 1 (total mass != 1)");
    std::vector<double> support, probs;
    if (s[0] > tol) {
        support.push_back(0.0);
        probs.push_back(s[0]);
    }
    for (std::size_t j = 1; j < s.size(); ++j) {
        double jump = s[j] - s[j - 1];
        if (jump > tol) {
            support.push_back(curve.strikes[j - 1]);
            probs.push_back(jump);
        }
    }
    // renormalise the 1e-10 slope noise away
    double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (double& p : probs) p /= total;
    return DiscreteMarginal(std::move(support), std::move(probs));
}

inline PutPriceCurve puts_from_marginal(const DiscreteMarginal& mu,
                                        const std::vector<double>& strikes) {
    mu.validate();
    std::vector<double> prices(strikes.size());
    for (std::size_t j = 0; j < strikes.size(); ++j) prices[j] = mu.put_price(strikes[j]);
    return PutPriceCurve(strikes, prices);
}

// mu precedes nu in convex order: equal means and smaller call transform.
// Checking at the union support points is exact for finite measures because
// call transforms are piecewise linear with kinks only at atoms.
inline bool convex_order_leq(const DiscreteMarginal& mu, const DiscreteMarginal& nu,
                             double tol = 1e-10) {
    if (std::abs(mu.mean() - nu.mean()) > tol) return false;
    std::vector<double> ks(mu.support);
    ks.insert(ks.end(), nu.support.begin(), nu.support.end());
    ks.push_back(0.0);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (double k : ks)
        if (mu.call_price(k) > nu.call_price(k) + tol) return false;
    return true;
}

// Calibration feasibility: every marginal has mean 1 and each asset's
// maturities increase in convex order.
inline bool strassen_feasible(const std::vector<std::vector<DiscreteMarginal>>& mus,
                              double tol = 1e-10) {
    if (mus.empty()) throw std::invalid_argument("strassen_feasible: no assets");
    for (const auto& per_asset : mus) {
        if (per_asset.empty()) throw std::invalid_argument("strassen_feasible: no maturities");
        for (const auto& mu : per_asset)
            if (std::abs(mu.mean() - 1.0) > tol) return false;
        for (std::size_t j = 1; j < per_asset.size(); ++j)
            if (!convex_order_leq(per_asset[j - 1], per_asset[j], tol)) return false;
    }
    return true;
}

// Bounded-Lipschitz distance sup { int f d(nu - mu) : |f| <= 1, Lip(f) <= 1 },
// solved exactly as a small LP over f-values at the union support (adjacent
// Lipschitz constraints suffice on the line).
inline double bl_distance(const DiscreteMarginal& mu, const DiscreteMarginal& nu) {
    std::vector<double> xs(mu.support);
    xs.insert(xs.end(), nu.support.begin(), nu.support.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    const std::size_t m = xs.size();
    std::vector<double> w(m, 0.0);
    for (std::size_t k = 0; k < mu.support.size(); ++k) {
        auto it = std::lower_bound(xs.begin(), xs.end(), mu.support[k]);
        w[static_cast<std::size_t>(it - xs.begin())] -= mu.probs[k];
    }
    for (std::size_t k = 0; k < nu.support.size(); ++k) {
        auto it = std::lower_bound(xs.begin(), xs.end(), nu.support[k]);
        w[static_cast<std::size_t>(it - xs.begin())] += nu.probs[k];
    }
    // variables g_k = f_k + 1 in [0, 2]; sum w == 0 so the shift cancels
    LpProblem lp(m);
    lp.c = w;
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> row(m, 0.0);
        row[k] = 1.0;
        lp.add_row(row, '<', 2.0);
    }
    for (std::size_t k = 0; k + 1 < m; ++k) {
        std::vector<double> row(m, 0.0);
        row[k] = 1.0;
        row[k + 1] = -1.0;
        double gap = xs[k + 1] - xs[k];
        lp.add_row(row, '<', gap);
        for (double& v : row) v = -v;
        lp.add_row(row, '<', gap);
    }
    auto sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) throw std::runtime_error("bl_distance: LP failed");
    return std::max(0.0, sol.objective);
}

// Tail-overshoot functional used to truncate unbounded claims: evaluated from
// the per-coordinate running maxima of the first d coordinates.
inline double tail_functional_value(const std::vector<double>& coord_sup_norms, double D,
                                    double growth_p) {
    if (!(D > 1.0) || !(growth_p > 1.0))
        throw std::invalid_argument("tail_functional: need D > 1 and p > 1");
    double m = 0.0;
    for (double s : coord_sup_norms) m = std::max(m, s);
    double mp = std::pow(m, growth_p);
    double v = mp / D;
    if (m + 1.0 >= D) v += mp + 1.0;
    return v;
}

inline double tail_functional(const GridPath& path, int d, double D, double growth_p) {
    std::vector<double> sups;
    for (int i = 0; i < d; ++i) sups.push_back(path.sup_norm_coord(static_cast<std::size_t>(i)));
    return tail_functional_value(sups, D, growth_p);
}

// Doob-type bound on the expected tail functional in terms of the terminal
// marginals alone: (p/(p-1))^p sum_i ( 2 * tail_p(threshold) + moment_p / D ),
// threshold = ((p-1)/p)(D-1). The display in the source uses 1/K where the
// proof line uses 1/D; the 1/D reading is the consistent one and is what this
// implements.
inline double marginal_tail_bound(const std::vector<DiscreteMarginal>& terminal_marginals,
                                  double D, double growth_p) {
    if (!(D > 1.0) || !(growth_p > 1.0))
        throw std::invalid_argument("marginal_tail_bound: need D > 1 and p > 1");
    const double p = growth_p;
    const double factor = std::pow(p / (p - 1.0), p);
    const double threshold = ((p - 1.0) / p) * (D - 1.0);
    double sum = 0.0;
    for (const auto& mu : terminal_marginals)
        sum += 2.0 * mu.tail_power_moment(p, threshold) + mu.power_moment(p) / D;
    return factor * sum;
}

// A discrete-time martingale given as a tree of conditional expectations.
struct MartingaleTreeNode {
    std::vector<double> value;  // conditional expectation of the terminal law
    double prob = 1.0;
    std::size_t parent = 0;     // index into the previous level
};

struct MartingaleTree {
    // levels[0] is the root level (one node at (1,...,1))
    std::vector<std::vector<MartingaleTreeNode>> levels;

    // worst martingale-property violation, exact up to summation rounding
    double martingale_residual() const {
        double worst = 0.0;
        for (std::size_t t = 0; t + 1 < levels.size(); ++t) {
            for (std::size_t k = 0; k < levels[t].size(); ++k) {
                const auto& node = levels[t][k];
                std::vector<double> acc(node.value.size(), 0.0);
                double mass = 0.0;
                for (const auto& child : levels[t + 1]) {
                    if (child.parent != k) continue;
                    mass += child.prob;
                    for (std::size_t i = 0; i < acc.size(); ++i)
                        acc[i] += child.prob * child.value[i];
                }
                worst = std::max(worst, std::abs(mass - node.prob));
                for (std::size_t i = 0; i < acc.size(); ++i)
                    worst = std::max(worst, std::abs(acc[i] - node.prob * node.value[i]));
            }
        }
        return worst;
    }
};

struct JointAtom {
    std::vector<double> point;
    double prob;
};

// Lift a terminal joint law (per-coordinate mean 1) to a discrete martingale
// by conditional expectations along a deterministic refinement: one binary
// split of the largest-variance cell per step, full refinement at the last
// step so the terminal law is matched exactly.
inline MartingaleTree conditional_lift(const std::vector<JointAtom>& terminal_law,
                                       std::size_t n_steps) {
    if (terminal_law.empty()) throw std::invalid_argument("conditional_lift: empty law");
    if (n_steps == 0) throw std::invalid_argument("conditional_lift: need at least one step");
    const std::size_t dim = terminal_law.front().point.size();
    double mass = 0.0;
    for (const auto& a : terminal_law) mass += a.prob;
    if (std::abs(mass - 1.0) > 1e-12) throw std::invalid_argument("conditional_lift: mass != 1");
    for (std::size_t i = 0; i < dim; ++i) {
        double m = 0.0;
        for (const auto& a : terminal_law) m += a.prob * a.point[i];
        if (std::abs(m - 1.0) > 1e-9)
            throw std::invalid_argument("conditional_lift: terminal mean != 1 (infeasible)");
    }

    using Cell = std::vector<std::size_t>;  // atom indices
    auto cell_mean = [&](const Cell& c) {
        std::vector<double> m(dim, 0.0);
        double p = 0.0;
        for (auto k : c) p += terminal_law[k].prob;
        for (auto k : c)
            for (std::size_t i = 0; i < dim; ++i) m[i] += terminal_law[k].prob * terminal_law[k].point[i];
        for (double& v : m) v /= p;
        return std::pair{m, p};
    };
    auto cell_variance = [&](const Cell& c, std::size_t& argmax_coord) {
        auto [m, p] = cell_mean(c);
        double best = 0.0;
        argmax_coord = 0;
        for (std::size_t i = 0; i < dim; ++i) {
            double v = 0.0;
            for (auto k : c) {
                double d = terminal_law[k].point[i] - m[i];
                v += terminal_law[k].prob / p * d * d;
            }
            if (v > best) {
                best = v;
                argmax_coord = i;
            }
        }
        return best;
    };

    std::vector<Cell> cells{Cell{}};
    for (std::size_t k = 0; k < terminal_law.size(); ++k) cells[0].push_back(k);

    MartingaleTree tree;
    auto emit_level = [&](const std::vector<Cell>& cs, const std::vector<std::size_t>& parents) {
        std::vector<MartingaleTreeNode> lvl;
        for (std::size_t k = 0; k < cs.size(); ++k) {
            auto [m, p] = cell_mean(cs[k]);
            lvl.push_back(MartingaleTreeNode{m, p, parents[k]});
        }
        tree.levels.push_back(std::move(lvl));
    };
    emit_level(cells, {0});

    for (std::size_t t = 1; t <= n_steps; ++t) {
        std::vector<Cell> next;
        std::vector<std::size_t> parents;
        if (t == n_steps) {
            // full refinement: exact terminal law
            for (std::size_t k = 0; k < cells.size(); ++k)
                for (auto atom : cells[k]) {
                    next.push_back(Cell{atom});
                    parents.push_back(k);
                }
        } else {
            // split the largest-variance cell once
            std::size_t split_k = cells.size();
            double best_var = 0.0;
            std::size_t split_coord = 0;
            for (std::size_t k = 0; k < cells.size(); ++k) {
                if (cells[k].size() < 2) continue;
                std::size_t coord = 0;
                double v = cell_variance(cells[k], coord);
                if (split_k == cells.size() || v > best_var) {
                    best_var = v;
                    split_k = k;
                    split_coord = coord;
                }
            }
            for (std::size_t k = 0; k < cells.size(); ++k) {
                if (k != split_k) {
                    next.push_back(cells[k]);
                    parents.push_back(k);
                    continue;
                }
                Cell sorted = cells[k];
                std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                    double xa = terminal_law[a].point[split_coord];
                    double xb = terminal_law[b].point[split_coord];
                    return xa != xb ? xa < xb : a < b;
                });
                std::size_t half = (sorted.size() + 1) / 2;
                next.push_back(Cell(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(half)));
                parents.push_back(k);
                next.push_back(Cell(sorted.begin() + static_cast<std::ptrdiff_t>(half), sorted.end()));
                parents.push_back(k);
            }
        }
        emit_level(next, parents);
        cells = std::move(next);
    }
    return tree;
}

}  // namespace mot
