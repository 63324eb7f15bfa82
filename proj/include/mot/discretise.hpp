#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mot/paths.hpp"
#include "mot/payoffs.hpp"
#include "mot/rational.hpp"

namespace mot {

// Successive times at which the path moves by 2^-N in max-coordinate norm,
// capped at the horizon. Crossing times are solved per linear segment, so the
// per-step move is exactly 2^-N in the triggering coordinate (up to one ulp
// of root arithmetic) except possibly the final step.
struct LebesguePartition {
    int N = 1;
    std::vector<double> taus;                        // tau_0 = 0 < ... < tau_m = T
    std::vector<std::vector<double>> values_at_taus; // path values at the taus
    std::size_t step_count() const { return taus.size() - 1; }  // m
};

inline LebesguePartition lebesgue_partition(const GridPath& p, int N) {
    if (N < 1) throw std::invalid_argument("lebesgue_partition: N must be >= 1");
    const double h = std::ldexp(1.0, -N);
    const std::size_t dim = p.dim();
    LebesguePartition part;
    part.N = N;
    part.taus.push_back(0.0);
    part.values_at_taus.push_back(p.values.front());

    std::vector<double> anchor = p.values.front();
    double cur_t = 0.0;
    std::size_t seg = 0;  // invariant: cur_t in [times[seg], times[seg+1])
    while (seg + 1 < p.times.size()) {
        const double t0 = p.times[seg], t1 = p.times[seg + 1];
        if (cur_t >= t1) { ++seg; continue; }
        const auto& va = p.values[seg];
        const auto& vb = p.values[seg + 1];
        double best_t = std::numeric_limits<double>::infinity();
        std::size_t best_i = dim;
        bool best_up = true;
        for (std::size_t i = 0; i < dim; ++i) {
            const double slope = (vb[i] - va[i]) / (t1 - t0);
            if (slope == 0.0) continue;
            for (int sign = -1; sign <= 1; sign += 2) {
                const double target = anchor[i] + sign * h;
                const double tr = t0 + (target - va[i]) / slope;
                if (tr > cur_t && tr <= t1 + 1e-15 && tr < best_t) {
                    // guard against roots just past the segment end from rounding
                    const double tc = std::min(tr, t1);
                    const double val = va[i] + slope * (tc - t0);
                    if (std::abs(val - anchor[i]) >= h - 1e-12) {
                        best_t = tc;
                        best_i = i;
                        best_up = sign > 0;
                    }
                }
            }
        }
        if (best_i == dim) {
            cur_t = t1;
            ++seg;
            continue;
        }
        std::vector<double> v(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            const double w = (best_t - t0) / (t1 - t0);
            v[i] = va[i] + w * (vb[i] - va[i]);
        }
        v[best_i] = anchor[best_i] + (best_up ? h : -h);  // exact crossing level
        if (!(best_t > part.taus.back()))
            throw std::runtime_error("lebesgue_partition: crossing times collapsed (sub-ulp segment)");
        part.taus.push_back(best_t);
        part.values_at_taus.push_back(v);
        anchor = v;
        cur_t = best_t;
        if (cur_t >= t1) ++seg;
    }
    const double T = p.horizon();
    if (part.taus.back() < T) {
        part.taus.push_back(T);
        part.values_at_taus.push_back(p.values.back());
    }
    return part;
}

// First-stage approximation: hold the value reached at each partition time.
// Satisfies step_sup_distance(result, p) <= 2^-N.
inline StepFn naive_discretise(const GridPath& p, int N) {
    LebesguePartition part = lebesgue_partition(p, N);
    StepFn f;
    f.horizon = p.horizon();
    const std::size_t m = part.step_count();
    f.times.assign(part.taus.begin(), part.taus.begin() + static_cast<std::ptrdiff_t>(m));
    f.values.assign(part.values_at_taus.begin(),
                    part.values_at_taus.begin() + static_cast<std::ptrdiff_t>(m));
    f.terminal = part.values_at_taus.back();
    return f;
}

// Per-coordinate ceiling onto the 2^-N grid.
inline std::vector<double> grid_project(const std::vector<double>& x, int N) {
    if (N < 1) throw std::invalid_argument("grid_project: N must be >= 1");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = dyadic_ceil(x[i], N).to_double();
    return out;
}

inline double grid_project(double x, int N) { return grid_project(std::vector<double>{x}, N)[0]; }

// A piecewise-constant path with exact rational jump times and exact dyadic
// values on stage-refined grids; the discretisation targets live here.
struct PiecewiseConstantPath {
    int N = 4;
    double horizon = 1.0;
    std::vector<BigRational> jump_times;          // t_1 < ... < t_{l-1}, inside (0, horizon)
    std::vector<std::vector<Dyadic>> values;      // v_0 .. v_{l-1}; v_k held on [t_k, t_{k+1})
    std::vector<Dyadic> terminal;                 // value at the horizon

    std::size_t dim() const { return terminal.size(); }
    std::size_t segments() const { return values.size(); }
    // Number of jump epochs up to and including the horizon cap.
    std::size_t step_count() const { return values.size(); }

    StepFn to_step_fn() const {
        StepFn f;
        f.horizon = horizon;
        f.times.push_back(0.0);
        for (const auto& t : jump_times) f.times.push_back(to_double(t));
        for (const auto& v : values) {
            std::vector<double> row(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) row[i] = v[i].to_double();
            f.values.push_back(std::move(row));
        }
        f.terminal.resize(terminal.size());
        for (std::size_t i = 0; i < terminal.size(); ++i) f.terminal[i] = terminal[i].to_double();
        return f;
    }
};

struct ClassCheck {
    bool ok = true;
    int violated_condition = 0;  // 1..7, or 0 when ok
    std::string detail;
};

// Membership test for the countable class of admissible piecewise-constant
// paths at mesh exponent N: start at 1, rational jump times, stage-k jump
// sizes j/2^(N+k+1) with |j| <= 2^(k+1)+1, a floor at -2^(-N+3), a cap of
// kappa+1 on option coordinates, and absorption once floor or cap is hit.
// The jump-size grid is one stage finer than the nominal mesh at every k;
// this is the version the discretisation pipeline actually lands in.
inline ClassCheck check_class_membership(const PiecewiseConstantPath& f, const InfoSpace& info,
                                         int N) {
    if (N < 4) throw std::invalid_argument("check_class_membership: N must be >= 4");
    auto fail = [](int cond, std::string why) {
        return ClassCheck{false, cond, std::move(why)};
    };
    const std::size_t dim = f.dim();
    if (dim != static_cast<std::size_t>(info.n_coords()))
        return fail(1, "dimension mismatch with info space");
    if (f.values.size() != f.jump_times.size() + 1) return fail(2, "segment/jump count mismatch");

    const Dyadic one(BigInt(1), 0);
    for (std::size_t i = 0; i < dim; ++i)
        if (!(f.values[0][i] == one)) return fail(1, "initial value not 1 in coordinate " + std::to_string(i));

    const BigRational T = rational_from_double(f.horizon);
    BigRational prev(0);
    for (const auto& t : f.jump_times) {
        if (!(t > prev)) return fail(2, "jump times not strictly increasing");
        if (!(t < T)) return fail(2, "jump time not before horizon");
        prev = t;
    }
    for (std::size_t i = 0; i < dim; ++i)
        if (!(f.terminal[i] == f.values.back()[i])) return fail(2, "jump at the horizon");

    for (std::size_t k = 1; k < f.values.size(); ++k) {
        const int level = N + static_cast<int>(k) + 1;
        const BigInt jmax = pow2(static_cast<int>(k) + 1) + 1;
        for (std::size_t i = 0; i < dim; ++i) {
            Dyadic delta = f.values[k][i] - f.values[k - 1][i];
            delta.normalize();
            if (delta.exp > level)
                return fail(3, "jump " + std::to_string(k) + " off the stage grid");
            BigInt j = delta.num << (level - delta.exp);
            if (abs(j) > jmax)
                return fail(3, "jump " + std::to_string(k) + " too large: |j|=" + j.str());
        }
    }

    const Dyadic floor_value(BigInt(-1), N - 3);  // -2^(-N+3)
    for (const auto& v : f.values)
        for (std::size_t i = 0; i < dim; ++i)
            if (v[i] < floor_value) return fail(4, "coordinate below the floor");

    if (info.K > 0) {
        const BigRational cap = rational_from_double(info.kappa() + 1.0);
        for (const auto& v : f.values)
            for (std::size_t i = static_cast<std::size_t>(info.d); i < dim; ++i)
                if (v[i].to_rational() > cap) return fail(5, "option coordinate above kappa+1");
    }

    auto absorbed_after = [&](std::size_t k) -> bool {
        for (std::size_t j = k + 1; j < f.values.size(); ++j)
            for (std::size_t i = 0; i < dim; ++i)
                if (!(f.values[j][i] == f.values[k][i])) return false;
        return true;
    };
    for (std::size_t k = 0; k + 1 < f.values.size(); ++k) {
        for (std::size_t i = 0; i < dim; ++i)
            if (f.values[k][i] == floor_value && !absorbed_after(k))
                return fail(6, "path continues after hitting the floor");
        if (info.K > 0) {
            const BigRational cap = rational_from_double(info.kappa() + 1.0);
            for (std::size_t i = static_cast<std::size_t>(info.d); i < dim; ++i)
                if (f.values[k][i].to_rational() == cap && !absorbed_after(k))
                    return fail(7, "path continues after hitting the cap");
        }
    }
    return ClassCheck{};
}

// All stages of the discretisation pipeline, exposed so the per-stage error
// bounds can be checked term by term.
struct DiscretisationStages {
    LebesguePartition partition;
    StepFn naive;     // values held at partition times
    StepFn staged;    // staged grid projections, unshifted jump times
    PiecewiseConstantPath result;  // projections on shifted rational jump times
};

inline DiscretisationStages staged_dyadic_discretise(const GridPath& p, const InfoSpace& info,
                                                     int N) {
    if (N < 4) throw std::invalid_argument("dyadic_discretise: N must be >= 4");
    if (!in_info_space(p, info))
        throw std::invalid_argument("dyadic_discretise: path not in the admissible path space");

    DiscretisationStages out;
    out.partition = lebesgue_partition(p, N);
    out.naive = naive_discretise(p, N);

    const auto& part = out.partition;
    const std::size_t m = part.step_count();
    const std::size_t dim = p.dim();

    // Stage-k ceiling projections of the value reached at the next partition
    // time; the common offset makes the initial value exactly (1,...,1).
    std::vector<std::vector<Dyadic>> proj(m);
    for (std::size_t k = 0; k < m; ++k) {
        const int level = N + static_cast<int>(k) + 1;
        proj[k].reserve(dim);
        for (std::size_t i = 0; i < dim; ++i)
            proj[k].push_back(dyadic_ceil(part.values_at_taus[k + 1][i], level));
    }
    std::vector<Dyadic> offset(dim);
    for (std::size_t i = 0; i < dim; ++i) offset[i] = Dyadic(BigInt(1), 0) - proj[0][i];

    std::vector<std::vector<Dyadic>> vals(m);
    for (std::size_t k = 0; k < m; ++k) {
        vals[k].reserve(dim);
        for (std::size_t i = 0; i < dim; ++i) vals[k].push_back(offset[i] + proj[k][i]);
    }

    out.staged.horizon = p.horizon();
    out.staged.times.assign(part.taus.begin(), part.taus.begin() + static_cast<std::ptrdiff_t>(m));
    for (const auto& v : vals) {
        std::vector<double> row(dim);
        for (std::size_t i = 0; i < dim; ++i) row[i] = v[i].to_double();
        out.staged.values.push_back(std::move(row));
    }
    out.staged.terminal = out.staged.values.back();

    // Shift each jump into an exact rational inside (tau_{k-1}, tau_k].
    PiecewiseConstantPath& hat = out.result;
    hat.N = N;
    hat.horizon = p.horizon();
    hat.values = std::move(vals);
    hat.terminal = hat.values.back();
    BigRational tau_hat(0);
    for (std::size_t k = 1; k < m; ++k) {
        const BigRational lo = rational_from_double(part.taus[k - 1]) - tau_hat;
        const BigRational hi = rational_from_double(part.taus[k]) - tau_hat;
        tau_hat += min_sum_rational_in(lo, hi);
        hat.jump_times.push_back(tau_hat);
    }

    ClassCheck check = check_class_membership(hat, info, N);
    if (!check.ok)
        throw std::logic_error("dyadic_discretise: output failed class membership (condition " +
                               std::to_string(check.violated_condition) + ": " + check.detail + ")");
    return out;
}

// The full pipeline: Lebesgue partition, staged ceiling projections, rational
// jump-time shift. The output is a class member with sup-norm error < 2^(-N+3).
inline PiecewiseConstantPath dyadic_discretise(const GridPath& p, const InfoSpace& info, int N) {
    return staged_dyadic_discretise(p, info, N).result;
}

// Linear interpolation through the jump points; may dip below zero for paths
// that use the negative floor, so the result bypasses the nonnegativity
// validation and is clamped by callers that need an admissible path.
inline GridPath lift_continuous(const PiecewiseConstantPath& f, const InfoSpace& info) {
    ClassCheck check = check_class_membership(f, info, f.N);
    if (!check.ok)
        throw std::domain_error("lift_continuous: input not a class member (condition " +
                                std::to_string(check.violated_condition) + ")");
    GridPath out;
    out.times.push_back(0.0);
    std::vector<double> row(f.dim());
    for (std::size_t i = 0; i < f.dim(); ++i) row[i] = f.values[0][i].to_double();
    out.values.push_back(row);
    for (std::size_t k = 0; k < f.jump_times.size(); ++k) {
        out.times.push_back(to_double(f.jump_times[k]));
        for (std::size_t i = 0; i < f.dim(); ++i) row[i] = f.values[k + 1][i].to_double();
        out.values.push_back(row);
    }
    out.times.push_back(f.horizon);
    for (std::size_t i = 0; i < f.dim(); ++i) row[i] = f.terminal[i].to_double();
    out.values.push_back(row);
    return out;  // deliberately no validate(): see above
}

inline GridPath clamp_nonnegative(GridPath p) {
    for (auto& v : p.values)
        for (double& x : v) x = std::max(0.0, x);
    return p;
}

// G evaluated on the coordinatewise nonnegative part of the lifted path.
inline double extend_payoff(const Payoff& g, const PiecewiseConstantPath& f,
                            const InfoSpace& info) {
    GridPath lifted = clamp_nonnegative(lift_continuous(f, info));
    lifted.validate();
    return g(lifted);
}

// Partition step count of the lifted (and clamped) path at mesh 2^-D.
inline std::size_t count_steps_on_lift(const PiecewiseConstantPath& f, int D,
                                       const InfoSpace& info) {
    if (D < 1) throw std::invalid_argument("count_steps_on_lift: D must be >= 1");
    GridPath lifted = clamp_nonnegative(lift_continuous(f, info));
    return lebesgue_partition(lifted, D).step_count();
}

// Verifies |G(base) - G(perturbed)| <= L ||base||^p * sum |dt_j - dt_hat_j|
// for two step paths sharing values and maturity times, with only interior
// jump times shifted.
inline bool check_time_continuity(const Payoff& g, const PiecewiseConstantPath& base,
                                  const PiecewiseConstantPath& perturbed, const InfoSpace& info,
                                  double tol = 1e-12) {
    if (!g.time_continuity_L() || !g.growth())
        throw std::domain_error("check_time_continuity: payoff lacks declared constants");
    if (base.dim() != perturbed.dim() || base.segments() != perturbed.segments())
        throw std::domain_error("check_time_continuity: structural mismatch");
    for (std::size_t k = 0; k < base.values.size(); ++k)
        for (std::size_t i = 0; i < base.dim(); ++i)
            if (!(base.values[k][i] == perturbed.values[k][i]))
                throw std::domain_error("check_time_continuity: jump values differ");
    for (std::size_t i = 0; i < base.dim(); ++i)
        if (!(base.terminal[i] == perturbed.terminal[i]))
            throw std::domain_error("check_time_continuity: terminal values differ");
    // Maturities must be jump times in both or interior to a segment in both.
    for (double T_i : info.maturities) {
        if (T_i >= base.horizon) continue;
        const BigRational Tr = rational_from_double(T_i);
        bool in_base = std::find(base.jump_times.begin(), base.jump_times.end(), Tr) !=
                       base.jump_times.end();
        bool in_pert = std::find(perturbed.jump_times.begin(), perturbed.jump_times.end(), Tr) !=
                       perturbed.jump_times.end();
        if (in_base != in_pert)
            throw std::domain_error("check_time_continuity: maturity alignment differs");
    }

    auto gaps = [](const PiecewiseConstantPath& f) {
        std::vector<BigRational> ts;
        ts.emplace_back(0);
        ts.insert(ts.end(), f.jump_times.begin(), f.jump_times.end());
        ts.push_back(rational_from_double(f.horizon));
        std::vector<BigRational> out;
        for (std::size_t k = 1; k < ts.size(); ++k) out.push_back(ts[k] - ts[k - 1]);
        return out;
    };
    auto gb = gaps(base), gp = gaps(perturbed);
    BigRational total(0);
    for (std::size_t k = 0; k < gb.size(); ++k) {
        BigRational diff = gb[k] - gp[k];
        if (diff < 0) diff = -diff;
        total += diff;
    }
    const double lhs = std::abs(g(base.to_step_fn()) - g(perturbed.to_step_fn()));
    const double norm = base.to_step_fn().sup_norm();
    const double rhs = *g.time_continuity_L() * std::pow(norm, g.growth()->p) * to_double(total);
    return lhs <= rhs + tol;
}

}  // namespace mot
