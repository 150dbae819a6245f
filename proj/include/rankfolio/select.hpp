#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankfolio/coverage.hpp"

#include "json.hpp"

namespace rankfolio {

// Partial-set-cover instance derived from an ErrorMatrix at a fixed lambda:
// sets[j] lists the item indices candidate j covers.
struct CoverSets {
    double lambda = 0.0;
    std::size_t n_items = 0;
    std::vector<std::string> model_ids;
    std::vector<std::vector<std::int32_t>> sets;  // sorted item indices per candidate
};

CoverSets build_cover_sets(const ErrorMatrix& em, double lambda);

struct PortfolioStep {
    std::int64_t marginal_covered = 0;
    double cumulative_fraction = 0.0;
};

struct Portfolio {
    std::vector<std::string> model_ids;  // in selection order
    std::vector<PortfolioStep> steps;
    double lambda = 0.0;
    double nu_target = 0.0;
    double nu_achieved = 0.0;
};

enum class SelectMethod { Greedy, ExactIP, LpRounded, Phase2Mse };

const char* select_method_name(SelectMethod m);

struct SelectionResult {
    Portfolio portfolio;
    SelectMethod method = SelectMethod::Greedy;
    double objective = 0.0;                  // portfolio size; MSE for phase 2
    std::optional<double> certificate;       // LP lower bound where available
    bool feasible = false;
    bool optimal = false;                    // exact search completed
    double max_achievable_nu = 0.0;          // union coverage when infeasible
};

// Greedy partial cover: repeatedly add the candidate covering the most
// uncovered items (ties -> lowest index) until ceil(nu * n_items) items are
// covered or no candidate adds coverage.
SelectionResult greedy_select(const CoverSets& cs, double nu);

// Depth-first branch-and-bound for the minimum-size portfolio.  Intended for
// <= 25 candidates; node_budget caps the search, clearing `optimal` when hit.
SelectionResult exact_select(const CoverSets& cs, double nu,
                             std::int64_t node_budget = 10'000'000);

// LP relaxation (t_j, u_i in [0,1], sum u_i >= nu*n, u_i <= sum of covering
// t_j) solved exactly, then continuous-threshold rounding: keep adding the
// unselected candidate with the largest fractional t_j until ceil(nu*n) items
// are covered.  The LP optimum is kept as the lower-bound certificate.
SelectionResult lp_relax_and_round(const CoverSets& cs, double nu);

// Phase 2: among feasible (lambda, nu)-portfolios of size exactly k, minimize
// the mean squared assigned error (items assigned to their best selected
// model; an all-MISSING row counts as error 1).  Exact branch-and-bound up to
// 25 candidates, deterministic first-improvement swap local search beyond.
// Throws InfeasibleError when no feasible size-k portfolio exists.
SelectionResult phase2_min_mse(const ErrorMatrix& em, double lambda, double nu, int k,
                               int max_passes = 1000);

nlohmann::ordered_json selection_to_json(const SelectionResult& s);

// {0.05 .. 0.50 step 0.05} + {0.6, 0.7, 0.8, 0.9}
std::vector<double> default_lambda_grid();

}  // namespace rankfolio
