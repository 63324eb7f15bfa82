#pragma once

#include <map>
#include <random>
#include <vector>

#include "mot/lattice.hpp"
#include "mot/mot_lp.hpp"
#include "mot/paths.hpp"

namespace mot::testsupport {

struct PathGenOptions {
    std::size_t dim = 1;
    double horizon = 1.0;
    int min_segments = 2;
    int max_segments = 6;
    double max_total_variation = 1.5;  // per coordinate
    double floor = 0.05;
};

// Random nonnegative piecewise-linear path starting at (1,...,1) with bounded
// per-coordinate total variation (keeps partition step counts moderate).
inline GridPath random_grid_path(std::mt19937& rng, const PathGenOptions& o = {}) {
    int nseg = std::uniform_int_distribution<int>(o.min_segments, o.max_segments)(rng);
    std::vector<double> times{0.0};
    std::uniform_real_distribution<double> ut(0.05, 1.0);
    for (int k = 1; k < nseg; ++k) times.push_back(ut(rng) * o.horizon);
    times.push_back(o.horizon);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-6; }),
                times.end());
    if (times.back() != o.horizon) times.push_back(o.horizon);

    std::vector<std::vector<double>> values(times.size(), std::vector<double>(o.dim, 1.0));
    double budget = o.max_total_variation / static_cast<double>(times.size() - 1);
    std::uniform_real_distribution<double> um(-1.0, 1.0);
    for (std::size_t i = 0; i < o.dim; ++i) {
        double cur = 1.0;
        for (std::size_t k = 1; k < times.size(); ++k) {
            cur = std::max(o.floor, cur + budget * um(rng));
            values[k][i] = cur;
        }
    }
    return GridPath(std::move(times), std::move(values));
}

struct LatticeGenOptions {
    int max_assets = 2;
    int max_steps = 3;
    int max_levels = 1;        // inner grid half-width; extremes +-t are always kept
    std::size_t max_paths = 700;
};

// Random lattice with nested grids around 1 so that every node has bracketing
// successors (a martingale measure always exists).
inline LatticeModel random_lattice(std::mt19937& rng, const LatticeGenOptions& o = {}) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        LatticeModel model;
        model.d = std::uniform_int_distribution<int>(1, o.max_assets)(rng);
        int m = std::uniform_int_distribution<int>(1, o.max_steps)(rng);
        model.times = {0.0};
        for (int t = 1; t <= m; ++t)
            model.times.push_back(static_cast<double>(t) / static_cast<double>(m));
        model.maturity_indices = {static_cast<std::size_t>(m)};
        if (m >= 2 && std::bernoulli_distribution(0.5)(rng))
            model.maturity_indices = {static_cast<std::size_t>(m / 2 + (m == 2 ? 0 : 1)),
                                      static_cast<std::size_t>(m)};
        if (model.maturity_indices.front() == 0) model.maturity_indices.erase(model.maturity_indices.begin());
        // tick * steps < 1 keeps every extreme nonnegative, so each value has
        // bracketing successors and a martingale measure exists
        double tick = std::uniform_real_distribution<double>(0.15, 0.9 / m)(rng);
        model.grids.resize(model.times.size());
        std::size_t paths = 1;
        for (std::size_t t = 0; t < model.times.size(); ++t) {
            model.grids[t].resize(static_cast<std::size_t>(model.d));
            for (int i = 0; i < model.d; ++i) {
                if (t == 0) {
                    model.grids[t][static_cast<std::size_t>(i)] = {1.0};
                    continue;
                }
                int levels = std::min<int>(static_cast<int>(t), std::uniform_int_distribution<int>(
                                                                    1, o.max_levels)(rng));
                std::vector<double> g;
                for (int j = -static_cast<int>(t); j <= static_cast<int>(t); ++j) {
                    if (std::abs(j) > levels && std::abs(j) != static_cast<int>(t)) continue;
                    g.push_back(1.0 + j * tick);
                }
                std::sort(g.begin(), g.end());
                g.erase(std::unique(g.begin(), g.end()), g.end());
                model.grids[t][static_cast<std::size_t>(i)] = g;
            }
            std::size_t joint = 1;
            for (const auto& g : model.grids[t]) joint *= g.size();
            paths *= t == 0 ? 1 : joint;
        }
        if (paths > o.max_paths) continue;
        model.validate();
        return model;
    }
    throw std::runtime_error("random_lattice: could not generate within budget");
}

// Binomial-style lattice with alternating-parity grids: every transition moves
// by an odd multiple of the tick, so no step is flat. On such lattices a fine
// enough crossing mesh rebalances at every step along every path.
inline LatticeModel random_binomial_lattice(std::mt19937& rng, int max_steps = 3) {
    LatticeModel model;
    model.d = 1;
    int m = std::uniform_int_distribution<int>(2, max_steps)(rng);
    double tick = std::uniform_real_distribution<double>(0.15, 0.9 / m)(rng);
    model.times = {0.0};
    for (int t = 1; t <= m; ++t)
        model.times.push_back(static_cast<double>(t) / static_cast<double>(m));
    model.maturity_indices = {static_cast<std::size_t>(m)};
    model.grids.resize(model.times.size());
    for (int t = 0; t <= m; ++t) {
        std::vector<double> g;
        for (int j = -t; j <= t; j += 2) g.push_back(1.0 + j * tick);
        model.grids[static_cast<std::size_t>(t)] = {g};
    }
    model.validate();
    return model;
}

// Random martingale measure built forward: per node each asset mixes its
// grid-bracket of the current value with a mean-preserving extreme spread.
inline std::vector<double> random_martingale_measure(std::mt19937& rng, const LatticePaths& lat) {
    const auto& model = lat.model();
    const std::size_t m = model.steps();
    const std::size_t P = lat.n_paths();
    std::vector<double> q(P, 1.0);
    std::uniform_real_distribution<double> utheta(0.0, 1.0);

    // per time/prefix-class transition weights, applied multiplicatively
    for (std::size_t t = 0; t < m; ++t) {
        const std::size_t n_cls = lat.n_prefix_classes(t);
        const std::size_t block = lat.block_size(t);
        for (std::size_t c = 0; c < n_cls; ++c) {
            // weights over the next joint states: product over assets
            std::vector<double> asset_theta;
            for (int i = 0; i < model.d; ++i) asset_theta.push_back(utheta(rng) * 0.8);
            const auto& cur = lat.value(c * block, t);
            for (std::size_t w = c * block; w < (c + 1) * block; ++w) {
                double weight = 1.0;
                for (int i = 0; i < model.d; ++i) {
                    const auto& grid = model.grids[t + 1][static_cast<std::size_t>(i)];
                    double v = cur[static_cast<std::size_t>(i)];
                    double x = lat.value(w, t + 1)[static_cast<std::size_t>(i)];
                    // bracket distribution
                    double lo = grid.front(), hi = grid.back();
                    for (double gv : grid) {
                        if (gv <= v + 1e-12) lo = std::max(lo, gv);
                        if (gv >= v - 1e-12) hi = std::min(hi, gv);
                    }
                    double p_bracket = 0.0;
                    if (std::abs(hi - lo) < 1e-12) {
                        p_bracket = std::abs(x - v) < 1e-12 ? 1.0 : 0.0;
                    } else if (std::abs(x - lo) < 1e-12) {
                        p_bracket = (hi - v) / (hi - lo);
                    } else if (std::abs(x - hi) < 1e-12) {
                        p_bracket = (v - lo) / (hi - lo);
                    }
                    // extreme mean-preserving spread
                    double a = grid.front(), b = grid.back();
                    double p_ext = 0.0;
                    if (std::abs(b - a) < 1e-12) {
                        p_ext = 1.0;
                    } else if (std::abs(x - a) < 1e-12) {
                        p_ext = (b - v) / (b - a);
                    } else if (std::abs(x - b) < 1e-12) {
                        p_ext = (v - a) / (b - a);
                    }
                    double theta = asset_theta[static_cast<std::size_t>(i)];
                    weight *= (1.0 - theta) * p_bracket + theta * p_ext;
                }
                q[w] *= weight;
            }
        }
    }
    return q;
}

// Put quotes priced under a given lattice measure (exact calibration).
inline std::vector<QuotedOption> puts_priced_under(std::mt19937& rng, const LatticePaths& lat,
                                                   const std::vector<double>& q, int per_maturity) {
    const auto& model = lat.model();
    InfoSpace info = model.info();
    std::vector<QuotedOption> options;
    for (std::size_t j = 0; j < model.maturity_indices.size(); ++j) {
        std::size_t t = model.maturity_indices[j];
        for (int i = 0; i < model.d; ++i) {
            const auto& grid = model.grids[t][static_cast<std::size_t>(i)];
            std::vector<double> strikes(grid);
            std::shuffle(strikes.begin(), strikes.end(), rng);
            int count = std::min<int>(per_maturity, static_cast<int>(strikes.size()));
            for (int k = 0; k < count; ++k) {
                if (strikes[static_cast<std::size_t>(k)] <= 0.0) continue;
                Payoff put = Payoff::put(i, strikes[static_cast<std::size_t>(k)],
                                         static_cast<int>(j) + 1, info);
                double price = 0.0;
                for (std::size_t w = 0; w < lat.n_paths(); ++w)
                    price += q[w] * put(lat.grid_path(w));
                options.push_back(QuotedOption{put, price});
            }
        }
    }
    return options;
}

inline std::vector<double> random_table_values(std::mt19937& rng, std::size_t n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace mot::testsupport
