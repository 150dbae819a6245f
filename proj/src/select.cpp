#include "rankfolio/select.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>

#include "rankfolio/common.hpp"
#include "rankfolio/simplex.hpp"

namespace rankfolio {

namespace {

// operationalizes "at least nu * n data points"
std::int64_t cover_target(double nu, std::size_t n) {
    return static_cast<std::int64_t>(std::ceil(nu * static_cast<double>(n) - 1e-9));
}

void check_nu(double nu) {
    if (!(nu > 0.0 && nu <= 1.0)) throw ValidationError("nu must be in (0, 1]");
}

struct ItemMask {
    std::vector<std::uint64_t> bits;

    explicit ItemMask(std::size_t n) : bits((n + 63) / 64, 0) {}
    void set(std::int32_t i) { bits[static_cast<std::size_t>(i) >> 6] |= 1ull << (i & 63); }
    void unite(const ItemMask& o) {
        for (std::size_t w = 0; w < bits.size(); ++w) bits[w] |= o.bits[w];
    }
    std::int64_t count() const {
        std::int64_t c = 0;
        for (std::uint64_t w : bits) c += std::popcount(w);
        return c;
    }
    std::int64_t count_union(const ItemMask& o) const {
        std::int64_t c = 0;
        for (std::size_t w = 0; w < bits.size(); ++w) c += std::popcount(bits[w] | o.bits[w]);
        return c;
    }
};

std::vector<ItemMask> set_masks(const CoverSets& cs) {
    std::vector<ItemMask> masks;
    masks.reserve(cs.sets.size());
    for (const auto& set : cs.sets) {
        ItemMask m(cs.n_items);
        for (std::int32_t i : set) m.set(i);
        masks.push_back(std::move(m));
    }
    return masks;
}

double union_fraction(const CoverSets& cs) {
    if (cs.n_items == 0) return 0.0;
    ItemMask u(cs.n_items);
    for (const ItemMask& m : set_masks(cs)) u.unite(m);
    return static_cast<double>(u.count()) / static_cast<double>(cs.n_items);
}

// Independent recount of what an ordered selection covers; fills steps.
void fill_steps(const CoverSets& cs, const std::vector<std::size_t>& order, Portfolio& p) {
    p.model_ids.clear();
    p.steps.clear();
    std::vector<char> covered(cs.n_items, 0);
    std::int64_t total = 0;
    for (std::size_t j : order) {
        std::int64_t gain = 0;
        for (std::int32_t i : cs.sets[j]) {
            if (!covered[i]) {
                covered[i] = 1;
                ++gain;
            }
        }
        total += gain;
        p.model_ids.push_back(cs.model_ids[j]);
        p.steps.push_back({gain, cs.n_items == 0
                                     ? 0.0
                                     : static_cast<double>(total) / static_cast<double>(cs.n_items)});
    }
    p.nu_achieved = cs.n_items == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(cs.n_items);
}

}  // namespace

CoverSets build_cover_sets(const ErrorMatrix& em, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must be in [0, 1]");
    CoverSets cs;
    cs.lambda = lambda;
    cs.n_items = em.n_items();
    cs.model_ids = em.model_ids;
    cs.sets.resize(em.n_models());
    for (std::size_t j = 0; j < em.n_models(); ++j) {
        for (std::size_t i = 0; i < em.n_items(); ++i) {
            if (covers_entry(em.at(i, j), lambda)) {
                cs.sets[j].push_back(static_cast<std::int32_t>(i));
            }
        }
    }
    return cs;
}

const char* select_method_name(SelectMethod m) {
    switch (m) {
        case SelectMethod::Greedy: return "greedy";
        case SelectMethod::ExactIP: return "exact_ip";
        case SelectMethod::LpRounded: return "lp_rounded";
        case SelectMethod::Phase2Mse: return "phase2_mse";
    }
    return "greedy";
}

SelectionResult greedy_select(const CoverSets& cs, double nu) {
    check_nu(nu);
    const std::size_t n = cs.n_items, m = cs.sets.size();
    const std::int64_t target = cover_target(nu, n);

    SelectionResult res;
    res.method = SelectMethod::Greedy;
    res.portfolio.lambda = cs.lambda;
    res.portfolio.nu_target = nu;
    res.max_achievable_nu = union_fraction(cs);

    std::vector<char> covered(n, 0), selected(m, 0);
    std::vector<std::size_t> order;
    std::int64_t covered_count = 0;
    while (covered_count < target) {
        std::int64_t best_gain = 0;
        std::size_t best_j = m;
        for (std::size_t j = 0; j < m; ++j) {
            if (selected[j]) continue;
            std::int64_t gain = 0;
            for (std::int32_t i : cs.sets[j]) gain += covered[i] ? 0 : 1;
            if (gain > best_gain) {  // strict: ties keep the lowest index
                best_gain = gain;
                best_j = j;
            }
        }
        if (best_j == m) break;  // nothing adds coverage
        selected[best_j] = 1;
        for (std::int32_t i : cs.sets[best_j]) covered[i] = 1;
        covered_count += best_gain;
        order.push_back(best_j);
    }
    fill_steps(cs, order, res.portfolio);
    res.feasible = covered_count >= target;
    res.objective = static_cast<double>(res.portfolio.model_ids.size());
    return res;
}

namespace {

struct ExactSearch {
    const CoverSets& cs;
    std::int64_t target;
    std::int64_t budget;
    std::vector<ItemMask> masks;
    std::vector<ItemMask> suffix_union;     // union of masks[idx..m)
    std::vector<std::int64_t> suffix_best;  // max |set| over [idx..m)
    std::vector<std::size_t> chosen;
    std::vector<std::size_t> best;
    bool have_best = false;
    bool budget_hit = false;
    std::int64_t nodes = 0;

    ExactSearch(const CoverSets& c, std::int64_t t, std::int64_t b)
        : cs(c), target(t), budget(b), masks(set_masks(c)) {
        const std::size_t m = cs.sets.size();
        suffix_union.assign(m + 1, ItemMask(cs.n_items));
        suffix_best.assign(m + 1, 0);
        for (std::size_t idx = m; idx-- > 0;) {
            suffix_union[idx] = suffix_union[idx + 1];
            suffix_union[idx].unite(masks[idx]);
            suffix_best[idx] = std::max(suffix_best[idx + 1],
                                        static_cast<std::int64_t>(cs.sets[idx].size()));
        }
    }

    void dfs(std::size_t idx, const ItemMask& covered, std::int64_t covered_count) {
        if (++nodes > budget) {
            budget_hit = true;
            return;
        }
        if (covered_count >= target) {
            if (!have_best || chosen.size() < best.size()) {
                best = chosen;
                have_best = true;
            }
            return;
        }
        if (idx == cs.sets.size()) return;
        if (have_best && chosen.size() + 1 >= best.size()) return;
        if (covered.count_union(suffix_union[idx]) < target) return;  // cannot reach target
        if (suffix_best[idx] > 0) {
            const std::int64_t need = target - covered_count;
            const std::int64_t lb = (need + suffix_best[idx] - 1) / suffix_best[idx];
            if (have_best && static_cast<std::int64_t>(chosen.size()) + lb >=
                                 static_cast<std::int64_t>(best.size())) {
                return;
            }
        }
        // include idx
        ItemMask with = covered;
        with.unite(masks[idx]);
        const std::int64_t with_count = with.count();
        chosen.push_back(idx);
        dfs(idx + 1, with, with_count);
        chosen.pop_back();
        if (budget_hit) return;
        // exclude idx
        dfs(idx + 1, covered, covered_count);
    }
};

}  // namespace

SelectionResult exact_select(const CoverSets& cs, double nu, std::int64_t node_budget) {
    check_nu(nu);
    if (node_budget < 1) throw ValidationError("node_budget must be >= 1");
    const std::size_t n = cs.n_items;
    const std::int64_t target = cover_target(nu, n);

    SelectionResult res = greedy_select(cs, nu);  // incumbent and feasibility probe
    res.method = SelectMethod::ExactIP;
    if (!res.feasible) {
        // Greedy stalls only once it has exhausted the union, which proves
        // no subset reaches the target.
        res.optimal = true;
        return res;
    }

    ExactSearch search(cs, target, node_budget);
    search.best.resize(res.portfolio.model_ids.size());
    std::iota(search.best.begin(), search.best.end(), 0);  // placeholder of incumbent size
    search.have_best = true;
    ItemMask empty(n);
    search.dfs(0, empty, 0);
    if (search.have_best && search.best.size() < res.portfolio.model_ids.size()) {
        fill_steps(cs, search.best, res.portfolio);
    }
    res.feasible = true;
    res.optimal = !search.budget_hit;
    res.objective = static_cast<double>(res.portfolio.model_ids.size());
    return res;
}

SelectionResult lp_relax_and_round(const CoverSets& cs, double nu) {
    check_nu(nu);
    const std::size_t n = cs.n_items, m = cs.sets.size();
    const std::int64_t target = cover_target(nu, n);

    SelectionResult res;
    res.method = SelectMethod::LpRounded;
    res.portfolio.lambda = cs.lambda;
    res.portfolio.nu_target = nu;
    res.max_achievable_nu = union_fraction(cs);

    // Items with the same coverage pattern are interchangeable in the LP
    // (class-averaging u preserves feasibility and cost), so collapse them
    // into one u variable with a multiplicity.  Uncoverable items would be
    // pinned at zero and are left out entirely.  This keeps the tableau
    // sized by distinct patterns (<= 2^m), not by items.
    const std::size_t words = (m + 63) / 64;
    std::vector<std::vector<std::uint64_t>> pattern(n, std::vector<std::uint64_t>(words, 0));
    for (std::size_t j = 0; j < m; ++j) {
        for (std::int32_t i : cs.sets[j]) pattern[i][j / 64] |= std::uint64_t{1} << (j % 64);
    }
    std::map<std::vector<std::uint64_t>, double> classes;  // pattern -> item count
    for (std::size_t i = 0; i < n; ++i) {
        bool any = false;
        for (std::uint64_t w : pattern[i]) any = any || w != 0;
        if (any) classes[pattern[i]] += 1.0;
    }
    const int nc = static_cast<int>(classes.size());
    const int nv = static_cast<int>(m) + nc;

    LpProblem lp;
    lp.n_vars = nv;
    lp.objective.assign(static_cast<std::size_t>(nv), 0.0);
    for (std::size_t j = 0; j < m; ++j) lp.objective[j] = 1.0;  // min sum t_j

    LpRow demand;  // sum size_c * u_c >= nu * n
    demand.rel = LpRelation::GreaterEq;
    demand.rhs = nu * static_cast<double>(n);
    {
        int c = 0;
        for (const auto& [mask, size] : classes) {
            demand.coeffs.push_back({static_cast<int>(m) + c, size});
            ++c;
        }
    }
    lp.rows.push_back(std::move(demand));
    {
        int c = 0;
        for (const auto& [mask, size] : classes) {  // u_c <= sum of covering t_j
            LpRow row;
            row.rel = LpRelation::LessEq;
            row.rhs = 0.0;
            row.coeffs.push_back({static_cast<int>(m) + c, 1.0});
            for (std::size_t j = 0; j < m; ++j) {
                if (mask[j / 64] >> (j % 64) & 1) row.coeffs.push_back({static_cast<int>(j), -1.0});
            }
            lp.rows.push_back(std::move(row));
            ++c;
        }
    }
    for (int v = 0; v < nv; ++v) {  // box t, u in [0, 1]
        LpRow row;
        row.rel = LpRelation::LessEq;
        row.rhs = 1.0;
        row.coeffs.push_back({v, 1.0});
        lp.rows.push_back(std::move(row));
    }

    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) {
        res.feasible = false;
        return res;
    }
    res.certificate = sol.objective;

    // Continuous-threshold rounding: admit candidates by descending t_j until
    // the target number of items is covered.
    std::vector<std::size_t> by_t(m);
    std::iota(by_t.begin(), by_t.end(), 0);
    std::stable_sort(by_t.begin(), by_t.end(), [&](std::size_t a, std::size_t b) {
        return sol.x[a] != sol.x[b] ? sol.x[a] > sol.x[b] : a < b;
    });
    std::vector<char> covered(n, 0);
    std::int64_t covered_count = 0;
    std::vector<std::size_t> order;
    for (std::size_t j : by_t) {
        if (covered_count >= target) break;
        order.push_back(j);
        for (std::int32_t i : cs.sets[j]) {
            if (!covered[i]) {
                covered[i] = 1;
                ++covered_count;
            }
        }
    }
    fill_steps(cs, order, res.portfolio);
    res.feasible = covered_count >= target;
    res.objective = static_cast<double>(res.portfolio.model_ids.size());
    // Portfolio sizes are integral, so the LP bound rounds up: a portfolio of
    // ceil(certificate) is provably minimum.
    res.optimal = res.feasible && res.objective <= std::ceil(*res.certificate - 1e-6) + 1e-9;
    return res;
}

namespace {

constexpr double kMiss = std::numeric_limits<double>::infinity();

double row_error(double cur) { return std::isinf(cur) ? 1.0 : cur; }

double mse_of(const std::vector<double>& cur) {
    if (cur.empty()) return 0.0;
    double s = 0.0;
    for (double c : cur) {
        const double e = row_error(c);
        s += e * e;
    }
    return s / static_cast<double>(cur.size());
}

struct Phase2Search {
    const ErrorMatrix& em;
    const CoverSets& cs;
    std::int64_t target;
    int k;
    std::vector<ItemMask> masks;
    std::vector<ItemMask> suffix_union;
    std::vector<std::vector<double>> suffix_min;  // [idx][i]: best err over cols idx..m
    std::vector<std::size_t> chosen, best;
    double best_mse = std::numeric_limits<double>::infinity();
    bool have_best = false;

    Phase2Search(const ErrorMatrix& e, const CoverSets& c, std::int64_t t, int kk)
        : em(e), cs(c), target(t), k(kk), masks(set_masks(c)) {
        const std::size_t m = em.n_models(), n = em.n_items();
        suffix_union.assign(m + 1, ItemMask(n));
        suffix_min.assign(m + 1, std::vector<double>(n, kMiss));
        for (std::size_t idx = m; idx-- > 0;) {
            suffix_union[idx] = suffix_union[idx + 1];
            suffix_union[idx].unite(masks[idx]);
            for (std::size_t i = 0; i < n; ++i) {
                const float v = em.at(i, idx);
                const double e = ErrorMatrix::is_missing(v) ? kMiss : static_cast<double>(v);
                suffix_min[idx][i] = std::min(suffix_min[idx + 1][i], e);
            }
        }
    }

    void dfs(std::size_t idx, const std::vector<double>& cur, const ItemMask& covered,
             std::int64_t covered_count) {
        const std::size_t m = em.n_models();
        const std::size_t remaining = static_cast<std::size_t>(k) - chosen.size();
        if (remaining == 0) {
            if (covered_count < target) return;
            const double mse = mse_of(cur);
            if (!have_best || mse < best_mse - 1e-15) {
                best = chosen;
                best_mse = mse;
                have_best = true;
            }
            return;
        }
        if (m - idx < remaining) return;
        if (covered.count_union(suffix_union[idx]) < target) return;
        if (have_best) {
            // Optimistic completion: every remaining column admitted at once.
            double lb = 0.0;
            for (std::size_t i = 0; i < cur.size(); ++i) {
                const double e = row_error(std::min(cur[i], suffix_min[idx][i]));
                lb += e * e;
            }
            lb /= cur.empty() ? 1.0 : static_cast<double>(cur.size());
            if (lb >= best_mse - 1e-15) return;
        }
        // include idx
        std::vector<double> next = cur;
        for (std::size_t i = 0; i < next.size(); ++i) {
            const float v = em.at(i, idx);
            if (!ErrorMatrix::is_missing(v)) next[i] = std::min(next[i], static_cast<double>(v));
        }
        ItemMask with = covered;
        with.unite(masks[idx]);
        chosen.push_back(idx);
        dfs(idx + 1, next, with, with.count());
        chosen.pop_back();
        // exclude idx
        dfs(idx + 1, cur, covered, covered_count);
    }
};

std::vector<double> assigned_errors(const ErrorMatrix& em, const std::vector<std::size_t>& cols) {
    std::vector<double> cur(em.n_items(), kMiss);
    for (std::size_t j : cols) {
        for (std::size_t i = 0; i < em.n_items(); ++i) {
            const float v = em.at(i, j);
            if (!ErrorMatrix::is_missing(v)) cur[i] = std::min(cur[i], static_cast<double>(v));
        }
    }
    return cur;
}

std::int64_t covered_count_of(const CoverSets& cs, const std::vector<std::size_t>& cols) {
    std::vector<char> covered(cs.n_items, 0);
    std::int64_t c = 0;
    for (std::size_t j : cols) {
        for (std::int32_t i : cs.sets[j]) {
            if (!covered[i]) {
                covered[i] = 1;
                ++c;
            }
        }
    }
    return c;
}

}  // namespace

SelectionResult phase2_min_mse(const ErrorMatrix& em, double lambda, double nu, int k,
                               int max_passes) {
    check_nu(nu);
    if (max_passes < 1) throw ValidationError("max_passes must be >= 1");
    const std::size_t m = em.n_models();
    if (k < 1 || static_cast<std::size_t>(k) > m) {
        throw ValidationError("k must be between 1 and the candidate count");
    }
    const CoverSets cs = build_cover_sets(em, lambda);
    const std::int64_t target = cover_target(nu, em.n_items());

    SelectionResult res;
    res.method = SelectMethod::Phase2Mse;
    res.portfolio.lambda = lambda;
    res.portfolio.nu_target = nu;
    res.max_achievable_nu = union_fraction(cs);

    std::vector<std::size_t> picked;
    double mse = 0.0;
    bool exact = m <= 25;
    if (exact) {
        Phase2Search search(em, cs, target, k);
        std::vector<double> cur(em.n_items(), kMiss);
        ItemMask empty(em.n_items());
        search.dfs(0, cur, empty, 0);
        if (!search.have_best) {
            throw InfeasibleError("no feasible portfolio of size " + std::to_string(k) +
                                  " at lambda=" + std::to_string(lambda));
        }
        picked = search.best;
        mse = search.best_mse;
    } else {
        // Local search from the phase-1 greedy portfolio; when greedy
        // overshoots the requested size, the LP-rounded portfolio is the
        // fallback start.
        SelectionResult start = greedy_select(cs, nu);
        if (!start.feasible) {
            throw InfeasibleError("no feasible portfolio at lambda=" + std::to_string(lambda) +
                                  ": max achievable nu is " +
                                  std::to_string(start.max_achievable_nu));
        }
        if (static_cast<int>(start.portfolio.model_ids.size()) > k) {
            start = lp_relax_and_round(cs, nu);
        }
        if (!start.feasible || static_cast<int>(start.portfolio.model_ids.size()) > k) {
            throw InfeasibleError("phase 1 found no portfolio of size <= " + std::to_string(k) +
                                  " at lambda=" + std::to_string(lambda));
        }
        std::vector<char> in(m, 0);
        for (const std::string& id : start.portfolio.model_ids) {
            const auto it = std::find(cs.model_ids.begin(), cs.model_ids.end(), id);
            in[static_cast<std::size_t>(it - cs.model_ids.begin())] = 1;
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (in[j]) picked.push_back(j);
        }
        while (static_cast<int>(picked.size()) < k) {  // pad by best MSE improvement
            std::size_t best_j = m;
            double best_mse = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j) {
                if (in[j]) continue;
                picked.push_back(j);
                const double cand = mse_of(assigned_errors(em, picked));
                picked.pop_back();
                if (cand < best_mse - 1e-15) {
                    best_mse = cand;
                    best_j = j;
                }
            }
            picked.push_back(best_j);
            in[best_j] = 1;
            std::sort(picked.begin(), picked.end());
        }
        mse = mse_of(assigned_errors(em, picked));
        for (int pass = 0; pass < max_passes; ++pass) {
            bool improved = false;
            for (std::size_t si = 0; si < picked.size() && !improved; ++si) {
                for (std::size_t u = 0; u < m && !improved; ++u) {
                    if (in[u]) continue;
                    std::vector<std::size_t> cand = picked;
                    cand[si] = u;
                    std::sort(cand.begin(), cand.end());
                    if (covered_count_of(cs, cand) < target) continue;
                    const double cand_mse = mse_of(assigned_errors(em, cand));
                    if (cand_mse < mse - 1e-15) {  // first improvement
                        in[picked[si]] = 0;
                        in[u] = 1;
                        picked = std::move(cand);
                        mse = cand_mse;
                        improved = true;
                    }
                }
            }
            if (!improved) break;
        }
    }

    std::sort(picked.begin(), picked.end());
    fill_steps(cs, picked, res.portfolio);
    res.feasible = covered_count_of(cs, picked) >= target;
    res.optimal = exact;
    res.objective = mse;
    return res;
}

nlohmann::ordered_json selection_to_json(const SelectionResult& s) {
    nlohmann::ordered_json j;
    j["lambda"] = s.portfolio.lambda;
    j["nu"] = s.portfolio.nu_target;
    j["k"] = s.portfolio.model_ids.size();
    j["method"] = select_method_name(s.method);
    j["selected"] = s.portfolio.model_ids;
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (const PortfolioStep& st : s.portfolio.steps) {
        steps.push_back({{"covered", st.marginal_covered}, {"cumulative", st.cumulative_fraction}});
    }
    j["coverage_steps"] = std::move(steps);
    j["nu_achieved"] = s.portfolio.nu_achieved;
    j["objective"] = s.objective;
    if (s.certificate) j["certificate"] = *s.certificate;
    else j["certificate"] = nullptr;
    j["feasible"] = s.feasible;
    j["optimal"] = s.optimal;
    j["max_achievable_nu"] = s.max_achievable_nu;
    return j;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 20.0);
    for (int i = 6; i <= 9; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

}  // namespace rankfolio
