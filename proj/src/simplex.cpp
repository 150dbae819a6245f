#include "rankfolio/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rankfolio/common.hpp"

namespace rankfolio {

namespace {

constexpr double kEps = 1e-9;
constexpr double kFeasTol = 1e-7;

struct Tableau {
    std::size_t m = 0, n = 0;         // rows, columns (excl. rhs)
    std::vector<std::vector<double>> a;  // m x n
    std::vector<double> b;            // m, kept >= 0
    std::vector<int> basis;           // m, column basic in each row
    std::vector<char> blocked;        // n, columns barred from entering

    void pivot(std::size_t r, std::size_t c) {
        const double piv = a[r][c];
        for (std::size_t j = 0; j < n; ++j) a[r][j] /= piv;
        b[r] /= piv;
        a[r][c] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r) continue;
            const double f = a[i][c];
            if (std::abs(f) < kEps) { a[i][c] = 0.0; continue; }
            for (std::size_t j = 0; j < n; ++j) a[i][j] -= f * a[r][j];
            b[i] -= f * b[r];
            a[i][c] = 0.0;
        }
        basis[r] = static_cast<int>(c);
    }
};

// Minimize cost over the tableau with Bland's rule.  Returns false when the
// problem is unbounded below.
bool run_simplex(Tableau& t, const std::vector<double>& cost) {
    while (true) {
        // Reduced costs priced against the current basis.
        std::vector<double> y(t.m);
        for (std::size_t i = 0; i < t.m; ++i) y[i] = cost[static_cast<std::size_t>(t.basis[i])];
        int enter = -1;
        for (std::size_t j = 0; j < t.n; ++j) {
            if (t.blocked[j]) continue;
            double red = cost[j];
            for (std::size_t i = 0; i < t.m; ++i) red -= y[i] * t.a[i][j];
            if (red < -kEps) { enter = static_cast<int>(j); break; }  // Bland: lowest index
        }
        if (enter < 0) return true;
        const std::size_t c = static_cast<std::size_t>(enter);
        std::size_t leave = t.m;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < t.m; ++i) {
            if (t.a[i][c] <= kEps) continue;
            const double ratio = t.b[i] / t.a[i][c];
            if (ratio < best - kEps ||
                (ratio < best + kEps && (leave == t.m || t.basis[i] < t.basis[leave]))) {
                best = ratio;
                leave = i;
            }
        }
        if (leave == t.m) return false;
        t.pivot(leave, c);
    }
}

}  // namespace

LpSolution solve_lp(const LpProblem& p) {
    if (p.n_vars < 0 || static_cast<int>(p.objective.size()) != p.n_vars) {
        throw ValidationError("LP objective size does not match n_vars");
    }
    for (const LpRow& row : p.rows) {
        for (const auto& [idx, coef] : row.coeffs) {
            if (idx < 0 || idx >= p.n_vars) throw ValidationError("LP coefficient index out of range");
            (void)coef;
        }
    }

    const std::size_t m = p.rows.size();
    const std::size_t nv = static_cast<std::size_t>(p.n_vars);
    LpSolution sol;
    if (m == 0) {
        // x = 0 is feasible; any negative cost direction is unbounded.
        for (double c : p.objective) {
            if (c < -kEps) { sol.status = LpStatus::Unbounded; return sol; }
        }
        sol.status = LpStatus::Optimal;
        sol.x.assign(nv, 0.0);
        sol.objective = 0.0;
        return sol;
    }

    // Column layout: structural | one slack/surplus per inequality | artificials.
    std::size_t n_slack = 0;
    for (const LpRow& row : p.rows) {
        if (row.rel != LpRelation::Equal) ++n_slack;
    }
    Tableau t;
    t.m = m;
    t.n = nv + n_slack + m;  // worst case: one artificial per row
    t.a.assign(m, std::vector<double>(t.n, 0.0));
    t.b.assign(m, 0.0);
    t.basis.assign(m, -1);
    t.blocked.assign(t.n, 0);

    std::size_t slack_at = nv;
    std::size_t art_at = nv + n_slack;
    const std::size_t first_art = art_at;
    for (std::size_t i = 0; i < m; ++i) {
        const LpRow& row = p.rows[i];
        double sign = 1.0;
        LpRelation rel = row.rel;
        if (row.rhs < 0.0) {  // normalize rhs >= 0
            sign = -1.0;
            if (rel == LpRelation::LessEq) rel = LpRelation::GreaterEq;
            else if (rel == LpRelation::GreaterEq) rel = LpRelation::LessEq;
        }
        for (const auto& [idx, coef] : row.coeffs) {
            t.a[i][static_cast<std::size_t>(idx)] += sign * coef;
        }
        t.b[i] = sign * row.rhs;
        if (rel == LpRelation::LessEq) {
            t.a[i][slack_at] = 1.0;
            t.basis[i] = static_cast<int>(slack_at++);
        } else {
            if (rel == LpRelation::GreaterEq) t.a[i][slack_at++] = -1.0;
            t.a[i][art_at] = 1.0;
            t.basis[i] = static_cast<int>(art_at++);
        }
    }

    // Phase 1: minimize the artificial mass.
    bool need_phase1 = false;
    std::vector<double> cost1(t.n, 0.0);
    for (std::size_t j = first_art; j < t.n; ++j) cost1[j] = 1.0;
    for (std::size_t i = 0; i < m; ++i) need_phase1 = need_phase1 || t.basis[i] >= static_cast<int>(first_art);
    if (need_phase1) {
        if (!run_simplex(t, cost1)) throw ValidationError("phase-1 LP reported unbounded");
        double art_mass = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (t.basis[i] >= static_cast<int>(first_art)) art_mass += t.b[i];
        }
        if (art_mass > kFeasTol) {
            sol.status = LpStatus::Infeasible;
            return sol;
        }
        // Pivot leftover zero-level artificials out; drop rows that went redundant.
        for (std::size_t i = 0; i < t.m;) {
            if (t.basis[i] < static_cast<int>(first_art)) { ++i; continue; }
            std::size_t j = 0;
            for (; j < first_art; ++j) {
                if (std::abs(t.a[i][j]) > 1e-7) break;
            }
            if (j < first_art) {
                t.pivot(i, j);
                ++i;
            } else {
                t.a.erase(t.a.begin() + static_cast<std::ptrdiff_t>(i));
                t.b.erase(t.b.begin() + static_cast<std::ptrdiff_t>(i));
                t.basis.erase(t.basis.begin() + static_cast<std::ptrdiff_t>(i));
                --t.m;
            }
        }
    }
    for (std::size_t j = first_art; j < t.n; ++j) t.blocked[j] = 1;

    // Phase 2: the real objective.
    std::vector<double> cost2(t.n, 0.0);
    for (std::size_t j = 0; j < nv; ++j) cost2[j] = p.objective[j];
    if (!run_simplex(t, cost2)) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }

    sol.status = LpStatus::Optimal;
    sol.x.assign(nv, 0.0);
    for (std::size_t i = 0; i < t.m; ++i) {
        if (t.basis[i] >= 0 && t.basis[i] < static_cast<int>(nv)) {
            sol.x[static_cast<std::size_t>(t.basis[i])] = t.b[i];
        }
    }
    sol.objective = 0.0;
    for (std::size_t j = 0; j < nv; ++j) sol.objective += p.objective[j] * sol.x[j];
    return sol;
}

}  // namespace rankfolio
