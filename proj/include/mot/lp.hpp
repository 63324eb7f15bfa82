#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mot {

// Dense two-phase primal simplex. Deterministic: the default rule is Dantzig
// pricing with a Bland fallback once the objective stalls, and pure Bland is
// available as the reference rule; both must agree to 1e-8 on any instance.

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

enum class PivotRule { BlandOnly, DantzigWithBlandFallback };

struct LpRow {
    std::vector<double> a;
    char sense = '<';  // '<', '=', '>'
    double b = 0.0;
};

// maximise c'x subject to rows, x >= 0
struct LpProblem {
    std::size_t n = 0;
    std::vector<double> c;
    std::vector<LpRow> rows;

    explicit LpProblem(std::size_t n_vars = 0) : n(n_vars), c(n_vars, 0.0) {}

    void add_row(std::vector<double> a, char sense, double b) {
        if (a.size() != n) throw std::invalid_argument("LpProblem: row size mismatch");
        rows.push_back(LpRow{std::move(a), sense, b});
    }
};

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    double objective = 0.0;
    std::vector<double> x;
    std::vector<double> row_duals;     // multipliers per original row (valid at optimum)
    std::vector<double> farkas;        // row certificate when infeasible
    std::size_t pivots = 0;
};

struct SimplexOptions {
    double tol = 1e-9;
    std::size_t max_pivots = 2000000;
    PivotRule rule = PivotRule::DantzigWithBlandFallback;
};

namespace detail {

class SimplexTableau {
  public:
    // Standard form: maximise c'x s.t. A x = b, x >= 0, b >= 0.
    SimplexTableau(std::vector<std::vector<double>> A, std::vector<double> b,
                   std::vector<double> c)
        : m_(A.size()), n_(c.size()), tab_(m_ + 1), basis_(m_) {
        for (std::size_t i = 0; i < m_; ++i) {
            tab_[i] = std::move(A[i]);
            tab_[i].push_back(b[i]);
        }
        tab_[m_].assign(n_ + 1, 0.0);
        c_ = std::move(c);
    }

    // Phase 1: artificial variables, minimise their sum.
    bool run_two_phase(const SimplexOptions& opts, LpStatus& status, std::size_t& pivots) {
        // append one artificial per row
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t r = 0; r <= m_; ++r) {
                double v = (r == i) ? 1.0 : 0.0;
                tab_[r].insert(tab_[r].end() - 1, v);
            }
            basis_[i] = n_ + i;
        }
        std::size_t total = n_ + m_;
        // phase-1 objective: maximise -(sum of artificials). The objective row
        // stores reduced costs and, in its last entry, -z.
        std::vector<double> obj(total + 1, 0.0);
        for (std::size_t j = n_; j < total; ++j) obj[j] = -1.0;
        tab_[m_] = obj;
        for (std::size_t i = 0; i < m_; ++i) add_row_to_obj(i, 1.0);  // price out basis
        if (!iterate(total, opts, pivots)) {
            status = LpStatus::IterationLimit;
            return false;
        }
        phase1_obj_ = -tab_[m_].back();
        if (phase1_obj_ < -opts.tol) {
            status = LpStatus::Infeasible;
            return false;
        }
        // drive remaining artificials out of the basis where possible
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            std::size_t enter = total;
            for (std::size_t j = 0; j < n_; ++j) {
                if (std::abs(tab_[i][j]) > 1e-7) {
                    enter = j;
                    break;
                }
            }
            if (enter < n_) {
                pivot(i, enter);
                ++pivots;
            }
            // else: redundant row, keep the zero-valued artificial basic
        }
        // phase-2 objective
        std::vector<double> obj2(total + 1, 0.0);
        for (std::size_t j = 0; j < n_; ++j) obj2[j] = c_[j];
        tab_[m_] = obj2;
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_ && c_[basis_[i]] != 0.0) add_row_to_obj(i, -c_[basis_[i]]);
        }
        // artificials may not re-enter
        artificial_start_ = n_;
        if (!iterate(total, opts, pivots, /*phase2=*/true)) {
            status = unbounded_ ? LpStatus::Unbounded : LpStatus::IterationLimit;
            return false;
        }
        status = LpStatus::Optimal;
        return true;
    }

    double objective() const { return -tab_[m_].back(); }
    double phase1_objective() const { return phase1_obj_; }

    std::vector<double> primal(std::size_t n_orig) const {
        std::vector<double> x(n_orig, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_orig) x[basis_[i]] = tab_[i].back();
        return x;
    }

    // Row multipliers y = c_B B^-1, read off the artificial columns: their
    // reduced cost is c_art - y_i with c_art = 0 in phase 2 and -1 in phase 1.
    std::vector<double> row_duals() const {
        std::vector<double> y(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) y[i] = -tab_[m_][n_ + i];
        return y;
    }
    std::vector<double> farkas_duals() const {
        std::vector<double> y(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) y[i] = -1.0 - tab_[m_][n_ + i];
        return y;
    }
  private:
    void add_row_to_obj(std::size_t row, double mult) {
        for (std::size_t j = 0; j < tab_[m_].size(); ++j) tab_[m_][j] += mult * tab_[row][j];
    }

    void pivot(std::size_t row, std::size_t col) {
        double piv = tab_[row][col];
        double inv = 1.0 / piv;
        for (double& v : tab_[row]) v *= inv;
        tab_[row][col] = 1.0;
        for (std::size_t r = 0; r <= m_; ++r) {
            if (r == row) continue;
            double f = tab_[r][col];
            if (f == 0.0) continue;
            auto& dst = tab_[r];
            const auto& src = tab_[row];
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] -= f * src[j];
            dst[col] = 0.0;
        }
        basis_[row] = col;
    }

    bool iterate(std::size_t total, const SimplexOptions& opts, std::size_t& pivots,
                 bool phase2 = false) {
        std::size_t stall = 0;
        double last_obj = tab_[m_].back();
        bool bland = opts.rule == PivotRule::BlandOnly;
        while (true) {
            if (pivots > opts.max_pivots) return false;
            std::size_t limit = phase2 ? artificial_start_ : total;
            std::size_t enter = total;
            if (!bland) {
                double best = opts.tol;
                for (std::size_t j = 0; j < limit; ++j) {
                    double rc = tab_[m_][j];
                    if (rc > best) {
                        best = rc;
                        enter = j;
                    }
                }
            } else {
                for (std::size_t j = 0; j < limit; ++j) {
                    if (tab_[m_][j] > opts.tol) {
                        enter = j;
                        break;
                    }
                }
            }
            if (enter == total) return true;  // optimal
            // ratio test; ties broken by smallest basis index (Bland-safe)
            std::size_t leave = m_;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                double a = tab_[i][enter];
                if (a > opts.tol) {
                    double ratio = tab_[i].back() / a;
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 && (leave == m_ || basis_[i] < basis_[leave]))) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == m_) {
                unbounded_ = true;
                return false;
            }
            pivot(leave, enter);
            ++pivots;
            // the last objective entry holds -z: no decrease means degeneracy
            double obj = tab_[m_].back();
            if (!bland) {
                if (obj >= last_obj - 1e-13) {
                    if (++stall > 2 * (m_ + total)) bland = true;
                } else {
                    stall = 0;
                }
            }
            last_obj = obj;
        }
    }

    std::size_t m_, n_;
    std::vector<std::vector<double>> tab_;  // m rows + objective row; each n+m+1 wide
    std::vector<std::size_t> basis_;
    std::vector<double> c_;
    double phase1_obj_ = 0.0;
    std::size_t artificial_start_ = 0;
    bool unbounded_ = false;
};

}  // namespace detail

// Solve max c'x s.t. rows, x >= 0.
inline LpSolution solve_lp(const LpProblem& prob, const SimplexOptions& opts = {}) {
    const std::size_t n0 = prob.n;
    const std::size_t m = prob.rows.size();
    // convert to equalities with slacks, b >= 0
    std::size_t n_slack = 0;
    for (const auto& r : prob.rows)
        if (r.sense != '=') ++n_slack;
    const std::size_t n = n0 + n_slack;
    std::vector<std::vector<double>> A(m, std::vector<double>(n, 0.0));
    std::vector<double> b(m, 0.0);
    std::vector<double> c(n, 0.0);
    std::vector<double> row_sign(m, 1.0);
    for (std::size_t j = 0; j < n0; ++j) c[j] = prob.c[j];
    std::size_t slack = n0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& r = prob.rows[i];
        double s = 1.0;
        // normalise to b >= 0 first
        if (r.b < 0.0) s = -1.0;
        row_sign[i] = s;
        for (std::size_t j = 0; j < n0; ++j) A[i][j] = s * r.a[j];
        b[i] = s * r.b;
        if (r.sense == '<') {
            A[i][slack++] = s * 1.0;
        } else if (r.sense == '>') {
            A[i][slack++] = s * -1.0;
        }
    }
    detail::SimplexTableau tab(std::move(A), std::move(b), std::move(c));
    LpSolution sol;
    LpStatus status;
    std::size_t pivots = 0;
    bool ok = tab.run_two_phase(opts, status, pivots);
    sol.pivots = pivots;
    sol.status = status;
    if (!ok) {
        if (status == LpStatus::Infeasible) {
            sol.farkas = tab.farkas_duals();
            for (std::size_t i = 0; i < m; ++i) sol.farkas[i] *= row_sign[i];
        }
        return sol;
    }
    sol.objective = tab.objective();
    sol.x = tab.primal(n0);
    sol.row_duals = tab.row_duals();
    for (std::size_t i = 0; i < m; ++i) sol.row_duals[i] *= row_sign[i];
    return sol;
}

}  // namespace mot
