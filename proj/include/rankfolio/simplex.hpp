#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace rankfolio {

// Minimal dense two-phase primal simplex, adequate for desk-scale LPs.
// Minimizes c.x subject to the rows, with x >= 0 implicit.  Bland's rule
// keeps pivoting deterministic and cycle-free.

enum class LpRelation { LessEq, GreaterEq, Equal };

struct LpRow {
    std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
    LpRelation rel = LpRelation::LessEq;
    double rhs = 0.0;
};

struct LpProblem {
    int n_vars = 0;
    std::vector<double> objective;  // size n_vars, minimized
    std::vector<LpRow> rows;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
};

LpSolution solve_lp(const LpProblem& p);

}  // namespace rankfolio
