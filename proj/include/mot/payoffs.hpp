#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mot/paths.hpp"

namespace mot {

// Declared growth envelope |G(S)| <= L (1 + sup_t |S_t|^p).
struct GrowthBound {
    double L = 0.0;
    double p = 0.0;
};

// A derivative payoff on paths, with optional regularity metadata used by the
// validation routines: a bound kappa, a modulus of continuity f_e, a growth
// envelope and a time-continuity constant.
class Payoff {
  public:
    Payoff() = default;
    Payoff(std::string name, std::function<double(const GridPath&)> eval)
        : name_(std::move(name)), eval_(std::move(eval)) {}

    double operator()(const GridPath& p) const {
        if (!eval_) throw std::logic_error("Payoff: empty");
        double v = eval_(p);
        if (kappa_ && std::abs(v) > *kappa_ + 1e-9)
            throw std::logic_error("Payoff '" + name_ + "': declared bound violated");
        return v;
    }

    // Evaluation on right-continuous step paths, available for the payoff
    // families whose definition extends to them directly.
    double operator()(const StepFn& f) const {
        if (!step_eval_) throw std::domain_error("Payoff '" + name_ + "': no step-path evaluation");
        return step_eval_(f);
    }
    bool has_step_eval() const { return static_cast<bool>(step_eval_); }

    const std::string& name() const { return name_; }

    Payoff& with_bound(double kappa) {
        kappa_ = kappa;
        return *this;
    }
    Payoff& with_modulus(std::function<double(double)> fe) {
        modulus_ = std::move(fe);
        return *this;
    }
    Payoff& with_growth(double L, double p) {
        growth_ = GrowthBound{L, p};
        return *this;
    }
    Payoff& with_time_continuity(double L_tc, double p) {
        time_continuity_L_ = L_tc;
        if (!growth_) growth_ = GrowthBound{L_tc, p};
        return *this;
    }
    Payoff& with_step_eval(std::function<double(const StepFn&)> se) {
        step_eval_ = std::move(se);
        return *this;
    }

    std::optional<double> bound() const { return kappa_; }
    const std::function<double(double)>& modulus() const { return modulus_; }
    std::optional<GrowthBound> growth() const { return growth_; }
    std::optional<double> time_continuity_L() const { return time_continuity_L_; }

    // --- constructors for the stock payoff families ---

    // f(S_{T_j}) for the asset vector at the maturity with index j.
    static Payoff european(std::string name, int maturity_index,
                           std::function<double(const std::vector<double>&)> f,
                           const InfoSpace& info) {
        double T = maturity_at(info, maturity_index);
        Payoff g(std::move(name), [T, f](const GridPath& p) {
            return f(p.at(std::min(T, p.horizon())));
        });
        g.with_step_eval([T, f = std::move(f)](const StepFn& s) {
            return f(s.at(std::min(T, s.horizon)));
        });
        return g;
    }

    static Payoff put(int asset, double strike, int maturity_index, const InfoSpace& info) {
        double T = maturity_at(info, maturity_index);
        auto a = static_cast<std::size_t>(asset);
        Payoff g("put(a" + std::to_string(asset) + ",K=" + fmt(strike) + ")",
                 [a, strike, T](const GridPath& p) {
                     return std::max(0.0, strike - p.at(std::min(T, p.horizon()))[a]);
                 });
        g.with_bound(strike).with_modulus([](double x) { return x; });
        g.with_step_eval([a, strike, T](const StepFn& s) {
            return std::max(0.0, strike - s.at(std::min(T, s.horizon))[a]);
        });
        return g;
    }

    static Payoff call(int asset, double strike, int maturity_index, const InfoSpace& info) {
        double T = maturity_at(info, maturity_index);
        auto a = static_cast<std::size_t>(asset);
        Payoff g("call(a" + std::to_string(asset) + ",K=" + fmt(strike) + ")",
                 [a, strike, T](const GridPath& p) {
                     return std::max(0.0, p.at(std::min(T, p.horizon()))[a] - strike);
                 });
        g.with_modulus([](double x) { return x; }).with_growth(std::max(1.0, strike), 1.0);
        g.with_step_eval([a, strike, T](const StepFn& s) {
            return std::max(0.0, s.at(std::min(T, s.horizon))[a] - strike);
        });
        return g;
    }

    static Payoff terminal_value(int asset, const InfoSpace& info) {
        double T = info.horizon();
        auto a = static_cast<std::size_t>(asset);
        Payoff g("terminal(a" + std::to_string(asset) + ")", [a, T](const GridPath& p) {
            return p.at(std::min(T, p.horizon()))[a];
        });
        g.with_modulus([](double x) { return x; }).with_growth(1.0, 1.0);
        g.with_step_eval([a, T](const StepFn& s) { return s.at(std::min(T, s.horizon))[a]; });
        return g;
    }

    static Payoff basket(std::vector<double> weights, int maturity_index, const InfoSpace& info) {
        double T = maturity_at(info, maturity_index);
        double wsum = 0.0;
        for (double w : weights) wsum += std::abs(w);
        Payoff g("basket", [w = std::move(weights), T](const GridPath& p) {
            auto v = p.at(std::min(T, p.horizon()));
            if (w.size() > v.size()) throw std::domain_error("basket: more weights than coordinates");
            double s = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * v[i];
            return s;
        });
        g.with_modulus([wsum](double x) { return wsum * x; }).with_growth(std::max(1.0, wsum), 1.0);
        return g;
    }

    // Running maximum of one coordinate; exact on piecewise-linear paths.
    static Payoff lookback_max(int asset) {
        auto a = static_cast<std::size_t>(asset);
        Payoff g("lookback_max(a" + std::to_string(asset) + ")", [a](const GridPath& p) {
            double m = 0.0;
            for (const auto& v : p.values) m = std::max(m, v[a]);
            return m;
        });
        g.with_modulus([](double x) { return x; }).with_growth(1.0, 1.0);
        g.with_step_eval([a](const StepFn& s) {
            double m = s.terminal[a];
            for (const auto& v : s.values) m = std::max(m, v[a]);
            return m;
        });
        return g;
    }

    static Payoff asian_average(int asset, std::vector<double> sampling_times) {
        if (sampling_times.empty()) throw std::invalid_argument("asian_average: no sampling times");
        auto a = static_cast<std::size_t>(asset);
        Payoff g("asian_average(a" + std::to_string(asset) + ")",
                 [a, ts = sampling_times](const GridPath& p) {
                     double s = 0.0;
                     for (double t : ts) s += p.at(t)[a];
                     return s / static_cast<double>(ts.size());
                 });
        g.with_modulus([](double x) { return x; }).with_growth(1.0, 1.0);
        g.with_step_eval([a, ts = std::move(sampling_times)](const StepFn& f) {
            double s = 0.0;
            for (double t : ts) s += f.at(t)[a];
            return s / static_cast<double>(ts.size());
        });
        return g;
    }

    // Time-averaged value (1/T) int_0^T S dt; exact trapezoid on piecewise-
    // linear paths and exact sums on step paths.
    static Payoff asian_continuous(int asset, double horizon) {
        auto a = static_cast<std::size_t>(asset);
        Payoff g("asian_continuous(a" + std::to_string(asset) + ")", [a, horizon](const GridPath& p) {
            double s = 0.0;
            for (std::size_t k = 0; k + 1 < p.times.size(); ++k)
                s += 0.5 * (p.values[k][a] + p.values[k + 1][a]) * (p.times[k + 1] - p.times[k]);
            return s / horizon;
        });
        g.with_modulus([](double x) { return x; }).with_growth(1.0, 1.0);
        g.with_time_continuity(1.0 / horizon, 1.0);
        g.with_step_eval([a, horizon](const StepFn& f) {
            double s = 0.0;
            for (std::size_t k = 0; k < f.values.size(); ++k) {
                double next = k + 1 < f.times.size() ? f.times[k + 1] : f.horizon;
                s += f.values[k][a] * (next - f.times[k]);
            }
            return s / horizon;
        });
        return g;
    }

    static Payoff constant(double c) {
        Payoff g("const(" + fmt(c) + ")", [c](const GridPath&) { return c; });
        g.with_bound(std::abs(c)).with_modulus([](double) { return 0.0; });
        g.with_step_eval([c](const StepFn&) { return c; });
        return g;
    }

  private:
    static double maturity_at(const InfoSpace& info, int j) {
        if (j < 1 || j > static_cast<int>(info.maturities.size()))
            throw std::invalid_argument("Payoff: maturity index out of range");
        return info.maturities[static_cast<std::size_t>(j - 1)];
    }
    static std::string fmt(double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", x);
        return buf;
    }

    std::string name_;
    std::function<double(const GridPath&)> eval_;
    std::function<double(const StepFn&)> step_eval_;
    std::optional<double> kappa_;
    std::function<double(double)> modulus_;
    std::optional<GrowthBound> growth_;
    std::optional<double> time_continuity_L_;
};

inline double evaluate(const Payoff& g, const GridPath& p) { return g(p); }

// Pointwise clip to [-D, D]. The clipped payoff is bounded by D and inherits
// the modulus (clipping is 1-Lipschitz).
inline Payoff clip_payoff(const Payoff& g, double D) {
    if (!(D > 0)) throw std::invalid_argument("clip_payoff: D must be positive");
    Payoff out("clip(" + g.name() + ")", [g, D](const GridPath& p) {
        return std::min(D, std::max(-D, g(p)));
    });
    out.with_bound(D);
    if (g.modulus()) out.with_modulus(g.modulus());
    return out;
}

struct ModulusReport {
    bool ok = true;
    double worst_excess = 0.0;  // max over pairs of |G(a)-G(b)| - f_e(dist)
    std::size_t worst_pair = 0;
};

// Checks |G(a) - G(b)| <= f_e(||a - b||) on the supplied sample pairs.
inline ModulusReport validate_modulus(const Payoff& g,
                                      const std::vector<std::pair<GridPath, GridPath>>& samples,
                                      double tol = 1e-12) {
    if (!g.modulus()) throw std::invalid_argument("validate_modulus: payoff has no declared modulus");
    ModulusReport rep;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        double lhs = std::abs(g(samples[k].first) - g(samples[k].second));
        double rhs = g.modulus()(sup_norm_distance(samples[k].first, samples[k].second));
        double excess = lhs - rhs;
        if (excess > rep.worst_excess) {
            rep.worst_excess = excess;
            rep.worst_pair = k;
        }
    }
    rep.ok = rep.worst_excess <= tol;
    return rep;
}

}  // namespace mot
