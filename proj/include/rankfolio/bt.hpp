#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "rankfolio/vote.hpp"

#include "json.hpp"

namespace rankfolio {

// Inverse-probability-weighted pairwise win weights for one data slice.
struct PairWeights {
    // (a, b) -> accumulated weight of "a beat b" evidence.
    std::map<std::pair<std::string, std::string>, double> weights;
    // unordered pair (min, max) -> empirical sampling frequency P̂.
    std::map<std::pair<std::string, std::string>, double> pair_freq;
    std::int64_t n_votes = 0;  // decisive + tie votes consumed
};

// Each decisive vote on pair {a,b} adds 1/P̂({a,b}) to the winner's direction;
// a tie adds tie_weight/P̂ to both directions.  P̂ counts decisive and tie
// votes alike.  BothBad votes are skipped entirely.
PairWeights compute_weights(std::span<const Vote> slice, double tie_weight = 0.5);

struct FitDiagnostics {
    int iterations = 0;
    double final_grad_norm = 0.0;
    bool converged = false;
    bool clamped = false;  // some score hit the +-theta_max box
};

struct BtRanking {
    std::map<std::string, double> scores;  // natural-log scale, mean zero
    std::map<std::string, double> elo;     // 400 * theta + 1000
    FitDiagnostics fit;

    std::optional<double> score(const std::string& model) const {
        auto it = scores.find(model);
        if (it == scores.end()) return std::nullopt;
        return it->second;
    }
};

struct FitOptions {
    double tol = 1e-8;        // convergence on gradient infinity-norm
    int max_iter = 10000;
    double theta_max = 10.0;  // box clamp for degenerate (all-win) models
};

// Maximum-likelihood Bradley-Terry fit: full-batch gradient ascent with a
// backtracking/doubling line search.  Deterministic.  Scores are clamped to
// |theta| <= theta_max during the fit; a binding clamp reports
// converged=false, clamped=true.
BtRanking fit_bt(const PairWeights& pw, const FitOptions& opts = {});

// Pr(a beats b) = 1 / (1 + exp(theta_b - theta_a)).  Throws ValidationError
// for a model the ranking does not score.
double win_prob(const BtRanking& r, const std::string& a, const std::string& b);

// Same curve on the Elo scale: 1 / (1 + exp(-delta / 400)).
double elo_win_prob(double delta_elo);

// Weighted log-likelihood of theta under the given pair weights.
double log_likelihood(const std::map<std::string, double>& theta, const PairWeights& pw);

nlohmann::ordered_json ranking_to_json(const StratumKey& key, const BtRanking& r,
                                       std::int64_t n_votes);
struct NamedRanking;
NamedRanking ranking_from_json(const nlohmann::json& j);

// A ranking plus the stratum it was fitted on; the name doubles as the
// column id in error matrices.
struct NamedRanking {
    std::string name;
    StratumKey key;
    BtRanking ranking;
    std::int64_t n_votes = 0;
};

}  // namespace rankfolio
