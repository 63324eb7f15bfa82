#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mot/paths.hpp"
#include "mot/payoffs.hpp"

namespace mot {

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Finite path lattice: per-asset value grids at each time, root (1,...,1), and
// the path set given by all grid-valued sequences from the root. Paths and
// history prefixes are indexed lexicographically, so a prefix class is a
// contiguous block of path ids.
struct LatticeModel {
    std::vector<double> times;                             // u_0 = 0 < ... < u_m
    std::vector<std::size_t> maturity_indices;             // into times; last must be m
    int d = 1;
    std::vector<std::vector<std::vector<double>>> grids;   // grids[t][asset], t = 0..m
    std::size_t path_budget = 200000;

    std::size_t steps() const { return times.size() - 1; }

    void validate() const {
        if (times.size() < 2) throw std::invalid_argument("LatticeModel: need at least one step");
        if (times.front() != 0.0) throw std::invalid_argument("LatticeModel: times must start at 0");
        for (std::size_t t = 1; t < times.size(); ++t)
            if (!(times[t] > times[t - 1]))
                throw std::invalid_argument("LatticeModel: times must increase");
        if (maturity_indices.empty() || maturity_indices.back() != steps())
            throw std::invalid_argument("LatticeModel: last maturity must be the horizon");
        for (std::size_t j = 1; j < maturity_indices.size(); ++j)
            if (!(maturity_indices[j] > maturity_indices[j - 1]))
                throw std::invalid_argument("LatticeModel: maturity indices must increase");
        if (grids.size() != times.size())
            throw std::invalid_argument("LatticeModel: one grid per time");
        for (std::size_t t = 0; t < grids.size(); ++t) {
            if (grids[t].size() != static_cast<std::size_t>(d))
                throw std::invalid_argument("LatticeModel: one grid per asset");
            for (const auto& g : grids[t]) {
                if (g.empty()) throw std::invalid_argument("LatticeModel: empty grid");
                for (std::size_t k = 0; k < g.size(); ++k) {
                    if (!(g[k] >= 0.0)) throw std::invalid_argument("LatticeModel: negative grid value");
                    if (k > 0 && !(g[k] > g[k - 1]))
                        throw std::invalid_argument("LatticeModel: grid values must increase");
                }
            }
        }
        for (const auto& g : grids[0])
            if (g.size() != 1 || g[0] != 1.0)
                throw std::invalid_argument("LatticeModel: root must be (1,...,1)");
    }

    InfoSpace info() const {
        std::vector<double> mats;
        for (auto idx : maturity_indices) mats.push_back(times[idx]);
        return InfoSpace(d, mats);
    }
};

// Enumerated lattice with cached path values and prefix-block strides.
class LatticePaths {
  public:
    explicit LatticePaths(const LatticeModel& model) : model_(model) {
        model.validate();
        const std::size_t m = model.steps();
        const std::size_t dd = static_cast<std::size_t>(model.d);
        joint_.resize(m + 1);
        joint_[0] = {std::vector<double>(dd, 1.0)};
        for (std::size_t t = 1; t <= m; ++t) {
            std::vector<std::vector<double>> states{{}};
            for (std::size_t i = 0; i < dd; ++i) {
                std::vector<std::vector<double>> grown;
                for (const auto& partial : states)
                    for (double v : model.grids[t][i]) {
                        auto s = partial;
                        s.push_back(v);
                        grown.push_back(std::move(s));
                    }
                states = std::move(grown);
            }
            joint_[t] = std::move(states);
        }
        strides_.assign(m + 1, 1);
        std::size_t count = 1;
        for (std::size_t t = m; t >= 1; --t) {
            strides_[t] = count;
            if (count > model.path_budget / joint_[t].size())
                throw BudgetExceeded("lattice path budget exceeded");
            count *= joint_[t].size();
        }
        n_paths_ = count;
    }

    const LatticeModel& model() const { return model_; }
    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_states(std::size_t t) const { return joint_[t].size(); }

    // state of path at time t (t = 0..m)
    std::size_t state_index(std::size_t path, std::size_t t) const {
        if (t == 0) return 0;
        return (path / strides_[t]) % joint_[t].size();
    }
    const std::vector<double>& value(std::size_t path, std::size_t t) const {
        return joint_[t][state_index(path, t)];
    }

    // prefix class of the history through time t; classes are the blocks
    // [class * block_size(t), (class+1) * block_size(t))
    std::size_t prefix_class(std::size_t path, std::size_t t) const {
        if (t == 0) return 0;
        return path / strides_[t];
    }
    std::size_t n_prefix_classes(std::size_t t) const {
        if (t == 0) return 1;
        return n_paths_ / strides_[t];
    }
    std::size_t block_size(std::size_t t) const { return t == 0 ? n_paths_ : strides_[t]; }

    GridPath grid_path(std::size_t path) const {
        std::vector<std::vector<double>> vals;
        vals.reserve(model_.times.size());
        for (std::size_t t = 0; t < model_.times.size(); ++t) vals.push_back(value(path, t));
        return GridPath(model_.times, std::move(vals));
    }

    // id of the lattice path matching the given grid path exactly (times and
    // values within tolerance), if any
    std::optional<std::size_t> match(const GridPath& p, double tol = 1e-9) const {
        if (p.times.size() != model_.times.size()) return std::nullopt;
        for (std::size_t t = 0; t < p.times.size(); ++t)
            if (std::abs(p.times[t] - model_.times[t]) > tol) return std::nullopt;
        std::size_t id = 0;
        for (std::size_t t = 1; t < model_.times.size(); ++t) {
            const auto& states = joint_[t];
            std::size_t found = states.size();
            for (std::size_t s = 0; s < states.size(); ++s) {
                bool all = true;
                for (std::size_t i = 0; i < states[s].size(); ++i)
                    if (std::abs(states[s][i] - p.values[t][i]) > tol) {
                        all = false;
                        break;
                    }
                if (all) {
                    found = s;
                    break;
                }
            }
            if (found == states.size()) return std::nullopt;
            id += found * strides_[t];
        }
        return id;
    }

  private:
    LatticeModel model_;
    std::vector<std::vector<std::vector<double>>> joint_;  // joint_[t][state][asset]
    std::vector<std::size_t> strides_;
    std::size_t n_paths_ = 0;
};

// Payoff defined by a table of values over the paths of one lattice; queries
// off that lattice are rejected.
inline Payoff table_grid_payoff(std::shared_ptr<const LatticePaths> lattice,
                                std::vector<double> values) {
    if (values.size() != lattice->n_paths())
        throw std::invalid_argument("table_grid_payoff: one value per lattice path");
    double bound = 0.0;
    for (double v : values) bound = std::max(bound, std::abs(v));
    Payoff g("table_grid", [lattice, values = std::move(values)](const GridPath& p) {
        auto id = lattice->match(p);
        if (!id) throw std::domain_error("table_grid_payoff: path not on the lattice");
        return values[*id];
    });
    g.with_bound(bound);
    return g;
}

}  // namespace mot
