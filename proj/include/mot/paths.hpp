#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mot {

// A continuous price path, piecewise-linear between grid times. Coordinates
// are the d underlying assets followed by K continuously traded options, all
// numeraire-denominated and starting at 1.
struct GridPath {
    std::vector<double> times;                // strictly increasing, times[0] == 0
    std::vector<std::vector<double>> values;  // one point per grid time

    GridPath() = default;
    GridPath(std::vector<double> t, std::vector<std::vector<double>> v)
        : times(std::move(t)), values(std::move(v)) {
        validate();
    }

    std::size_t dim() const { return values.empty() ? 0 : values.front().size(); }
    double horizon() const { return times.back(); }

    void validate() const {
        if (times.size() < 2) throw std::invalid_argument("GridPath: need at least two grid times");
        if (times.size() != values.size())
            throw std::invalid_argument("GridPath: times/values size mismatch");
        if (times.front() != 0.0) throw std::invalid_argument("GridPath: first time must be 0");
        for (std::size_t k = 1; k < times.size(); ++k)
            if (!(times[k] > times[k - 1]))
                throw std::invalid_argument("GridPath: times must be strictly increasing");
        const std::size_t n = dim();
        if (n == 0) throw std::invalid_argument("GridPath: empty value vectors");
        for (const auto& v : values) {
            if (v.size() != n) throw std::invalid_argument("GridPath: ragged values");
            for (double x : v)
                if (!(x >= 0.0)) throw std::invalid_argument("GridPath: negative coordinate");
        }
        for (double x : values.front())
            if (x != 1.0) throw std::invalid_argument("GridPath: path must start at (1,...,1)");
    }

    // Linear interpolation; t must lie in [0, horizon].
    std::vector<double> at(double t) const {
        if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
            throw std::domain_error("GridPath::at: time outside horizon");
        t = std::clamp(t, times.front(), times.back());
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return values.front();
        if (it == times.end()) return values.back();
        std::size_t hi = static_cast<std::size_t>(it - times.begin());
        std::size_t lo = hi - 1;
        double w = (t - times[lo]) / (times[hi] - times[lo]);
        std::vector<double> out(dim());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = values[lo][i] + w * (values[hi][i] - values[lo][i]);
        return out;
    }

    double coord_at(double t, std::size_t i) const { return at(t)[i]; }

    // sup_t max_i |coordinate|, attained at a grid time.
    double sup_norm() const {
        double m = 0.0;
        for (const auto& v : values)
            for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }

    double sup_norm_coord(std::size_t i) const {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, std::abs(v[i]));
        return m;
    }
};

inline GridPath constant_path(double horizon, std::size_t dim) {
    return GridPath({0.0, horizon}, {std::vector<double>(dim, 1.0), std::vector<double>(dim, 1.0)});
}

// Right-continuous step function on [0, horizon]: values[k] is held on
// [times[k], times[k+1]) and `terminal` at the horizon itself.
struct StepFn {
    std::vector<double> times;  // times[0] == 0, strictly increasing, all < horizon
    std::vector<std::vector<double>> values;
    std::vector<double> terminal;
    double horizon = 1.0;

    std::size_t dim() const { return terminal.size(); }
    std::size_t segments() const { return values.size(); }

    std::vector<double> at(double t) const {
        if (t < -1e-12 || t > horizon + 1e-12) throw std::domain_error("StepFn::at: outside horizon");
        if (t >= horizon) return terminal;
        auto it = std::upper_bound(times.begin(), times.end(), t);
        std::size_t k = static_cast<std::size_t>(it - times.begin());
        return values[k == 0 ? 0 : k - 1];
    }

    double sup_norm() const {
        double m = 0.0;
        for (const auto& v : values)
            for (double x : v) m = std::max(m, std::abs(x));
        for (double x : terminal) m = std::max(m, std::abs(x));
        return m;
    }
};

// Exact sup-norm distance between a step function and a piecewise-linear
// path: on each merged interval the difference is linear in t, so it is
// maximal at an interval endpoint (one-sided).
inline double step_sup_distance(const StepFn& f, const GridPath& p) {
    if (std::abs(f.horizon - p.horizon()) > 1e-12)
        throw std::domain_error("step_sup_distance: mismatched horizons");
    std::vector<double> grid(f.times);
    grid.insert(grid.end(), p.times.begin(), p.times.end());
    grid.push_back(f.horizon);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double m = 0.0;
    for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
        auto fv = f.at(grid[g]);
        auto pa = p.at(grid[g]);
        auto pb = p.at(grid[g + 1]);
        for (std::size_t i = 0; i < fv.size(); ++i)
            m = std::max({m, std::abs(fv[i] - pa[i]), std::abs(fv[i] - pb[i])});
    }
    auto fT = f.at(f.horizon);
    auto pT = p.at(p.horizon());
    for (std::size_t i = 0; i < fT.size(); ++i) m = std::max(m, std::abs(fT[i] - pT[i]));
    return m;
}

inline double step_sup_distance(const StepFn& f, const StepFn& g) {
    if (std::abs(f.horizon - g.horizon) > 1e-12)
        throw std::domain_error("step_sup_distance: mismatched horizons");
    std::vector<double> grid(f.times);
    grid.insert(grid.end(), g.times.begin(), g.times.end());
    grid.push_back(f.horizon);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double m = 0.0;
    for (double t : grid) {
        auto fv = f.at(t);
        auto gv = g.at(t);
        for (std::size_t i = 0; i < fv.size(); ++i) m = std::max(m, std::abs(fv[i] - gv[i]));
    }
    return m;
}

// A European option traded continuously alongside the underlyings; its payoff
// constrains the terminal value of the corresponding path coordinate.
struct TradedTerminalOption {
    std::function<double(const std::vector<double>&)> payoff;  // on the d underlying values
    double price = 1.0;     // strictly positive quote
    double sup_bound = 1.0; // ||payoff||_inf
};

// Market dimensions plus the terminal payoff constraints that carve the
// admissible path set out of all nonnegative paths.
struct InfoSpace {
    int d = 1;
    int K = 0;
    std::vector<TradedTerminalOption> options;  // size K
    std::vector<double> maturities;             // T_1 < ... < T_n

    InfoSpace() : maturities{1.0} {}
    InfoSpace(int d_, std::vector<double> mats) : d(d_), maturities(std::move(mats)) {
        if (d <= 0) throw std::invalid_argument("InfoSpace: d must be positive");
        if (maturities.empty()) throw std::invalid_argument("InfoSpace: need at least one maturity");
        for (std::size_t j = 1; j < maturities.size(); ++j)
            if (!(maturities[j] > maturities[j - 1]))
                throw std::invalid_argument("InfoSpace: maturities must increase");
    }

    void add_option(TradedTerminalOption opt) {
        if (!(opt.price > 0.0)) throw std::invalid_argument("InfoSpace: option price must be positive");
        options.push_back(std::move(opt));
        K = static_cast<int>(options.size());
    }

    int n_coords() const { return d + K; }
    double horizon() const { return maturities.back(); }

    // max_j ||X_j||_inf / P(X_j); the normalised bound on option coordinates.
    double kappa() const {
        double k = 0.0;
        for (const auto& o : options) k = std::max(k, o.sup_bound / o.price);
        return k;
    }
};

// Lower/upper enclosure of a distance that may only be known through an
// oracle. Exact prediction sets report lower == upper.
struct DistanceBounds {
    double lower = 0.0;
    double upper = 0.0;
};

// The set of paths the modeller deems possible. Custom sets provide a
// membership predicate plus a distance oracle returning enclosing bounds.
struct PredictionSet {
    enum class Kind { All, SupNormBall, Custom };
    Kind kind = Kind::All;
    double ball_bound = 1.0;
    std::function<bool(const GridPath&)> member;
    std::function<DistanceBounds(const GridPath&)> distance_oracle;

    static PredictionSet all() { return PredictionSet{}; }

    static PredictionSet sup_norm_ball(double b) {
        if (!(b >= 1.0)) throw std::invalid_argument("sup_norm_ball: bound must be >= 1");
        PredictionSet s;
        s.kind = Kind::SupNormBall;
        s.ball_bound = b;
        return s;
    }

    static PredictionSet custom(std::function<bool(const GridPath&)> member,
                                std::function<DistanceBounds(const GridPath&)> oracle) {
        PredictionSet s;
        s.kind = Kind::Custom;
        s.member = std::move(member);
        s.distance_oracle = std::move(oracle);
        return s;
    }
};

// sup-norm distance of two paths on a common horizon; exact because the
// difference of piecewise-linear paths is piecewise-linear, so the sup is
// attained at a merged grid time.
inline double sup_norm_distance(const GridPath& a, const GridPath& b) {
    if (std::abs(a.horizon() - b.horizon()) > 1e-12)
        throw std::domain_error("sup_norm_distance: mismatched horizons");
    if (a.dim() != b.dim()) throw std::domain_error("sup_norm_distance: mismatched dimensions");
    std::vector<double> grid;
    grid.reserve(a.times.size() + b.times.size());
    grid.insert(grid.end(), a.times.begin(), a.times.end());
    grid.insert(grid.end(), b.times.begin(), b.times.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double m = 0.0;
    for (double t : grid) {
        auto va = a.at(std::min(t, a.horizon()));
        auto vb = b.at(std::min(t, b.horizon()));
        for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, std::abs(va[i] - vb[i]));
    }
    return m;
}

inline double in_info_space_violation(const GridPath& p, const InfoSpace& info) {
    if (static_cast<int>(p.dim()) != info.n_coords())
        throw std::invalid_argument("in_info_space: path dimension != d+K");
    if (info.K == 0) return 0.0;
    const auto& terminal = p.values.back();
    std::vector<double> underlying(terminal.begin(), terminal.begin() + info.d);
    double worst = 0.0;
    for (int i = 0; i < info.K; ++i) {
        double target = info.options[i].payoff(underlying) / info.options[i].price;
        worst = std::max(worst, std::abs(terminal[info.d + i] - target));
    }
    return worst;
}

inline bool in_info_space(const GridPath& p, const InfoSpace& info, double tol = 1e-9) {
    return in_info_space_violation(p, info) <= tol;
}

// Uncapped distance from p to the prediction set, as an enclosure. For the
// sup-norm ball the clamped path omega ^ b realises the infimum, so the value
// is exact: max(0, sup_t max_i p_i(t) - b).
inline DistanceBounds set_distance(const PredictionSet& set, const InfoSpace& info,
                                   const GridPath& p) {
    switch (set.kind) {
        case PredictionSet::Kind::All:
            return {0.0, 0.0};
        case PredictionSet::Kind::SupNormBall: {
            double excess = std::max(0.0, p.sup_norm() - set.ball_bound);
            return {excess, excess};
        }
        case PredictionSet::Kind::Custom: {
            if (set.member && set.member(p)) return {0.0, 0.0};
            DistanceBounds b = set.distance_oracle(p);
            if (b.lower > b.upper + 1e-15)
                throw std::runtime_error("set_distance: oracle lower bound exceeds upper bound");
            return b;
        }
    }
    throw std::logic_error("set_distance: unreachable");
    (void)info;
}

// Distance to the prediction set capped at 1. Consumers pick a side of the
// enclosure: the superhedging penalty takes .upper, the primal relaxation
// takes .lower; both coincide for All / SupNormBall.
inline DistanceBounds capped_set_distance(const PredictionSet& set, const InfoSpace& info,
                                          const GridPath& p) {
    DistanceBounds b = set_distance(set, info, p);
    return {std::min(1.0, std::max(0.0, b.lower)), std::min(1.0, std::max(0.0, b.upper))};
}

// Membership in the eps-fattened set: in the admissible path space and within
// eps of the set. Custom sets are resolved through the oracle's lower bound,
// so a path is excluded only when it is surely farther than eps. The boundary
// comparison carries an ulp-scale slack, same rationale as the info-space
// tolerance: grid values are floating point.
inline bool in_fattened_set(const PredictionSet& set, const InfoSpace& info, const GridPath& p,
                            double eps, double info_tol = 1e-9, double boundary_tol = 1e-12) {
    if (eps < 0) throw std::invalid_argument("in_fattened_set: eps must be >= 0");
    if (!in_info_space(p, info, info_tol)) return false;
    return set_distance(set, info, p).lower <= eps + boundary_tol;
}

// A non-decreasing piecewise-linear time reparametrisation fixing 0 and all
// maturities.
struct TimeChange {
    std::vector<double> times;   // domain grid on [0, T_n]
    std::vector<double> images;  // f(times), non-decreasing

    TimeChange(std::vector<double> t, std::vector<double> ft)
        : times(std::move(t)), images(std::move(ft)) {
        if (times.size() != images.size() || times.size() < 2)
            throw std::invalid_argument("TimeChange: bad grid");
        for (std::size_t k = 1; k < times.size(); ++k) {
            if (!(times[k] > times[k - 1]))
                throw std::invalid_argument("TimeChange: domain grid must increase");
            if (images[k] < images[k - 1] - 1e-15)
                throw std::invalid_argument("TimeChange: map must be non-decreasing");
        }
    }

    static TimeChange identity(double horizon) { return TimeChange({0.0, horizon}, {0.0, horizon}); }

    double operator()(double t) const {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return images.front();
        if (it == times.end()) return images.back();
        std::size_t hi = static_cast<std::size_t>(it - times.begin());
        std::size_t lo = hi - 1;
        double w = (t - times[lo]) / (times[hi] - times[lo]);
        return images[lo] + w * (images[hi] - images[lo]);
    }

    void check_fixes(const InfoSpace& info, double tol = 1e-12) const {
        if (std::abs((*this)(0.0)) > tol) throw std::domain_error("TimeChange: f(0) != 0");
        for (double T : info.maturities)
            if (std::abs((*this)(T) - T) > tol)
                throw std::domain_error("TimeChange: maturity not fixed");
    }
};

// Composition p(f(t)) on a grid fine enough to make it exact: breakpoints of f
// plus preimages of p's breakpoints under every linear piece of f.
inline GridPath time_change(const GridPath& p, const TimeChange& f, const InfoSpace& info) {
    f.check_fixes(info);
    std::vector<double> grid(f.times);
    for (std::size_t seg = 0; seg + 1 < f.times.size(); ++seg) {
        double t0 = f.times[seg], t1 = f.times[seg + 1];
        double s0 = f.images[seg], s1 = f.images[seg + 1];
        if (s1 <= s0) continue;  // flat piece: composition constant there
        for (double s : p.times) {
            if (s > s0 && s < s1) grid.push_back(t0 + (s - s0) / (s1 - s0) * (t1 - t0));
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-15; }),
               grid.end());
    std::vector<std::vector<double>> vals;
    vals.reserve(grid.size());
    for (double t : grid) vals.push_back(p.at(std::min(f(t), p.horizon())));
    return GridPath(std::move(grid), std::move(vals));
}

}  // namespace mot
