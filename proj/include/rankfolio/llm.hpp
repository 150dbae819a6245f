#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankfolio/coverage.hpp"

namespace rankfolio {

// Extrapolation from ranking-level coverage to LLM-level coverage: each vote
// gets a posterior over the candidate rankings, and an LLM satisfies the vote
// to the degree the posterior-weighted rankings would have preferred it.

// p(i, r) = Pr_r(observed winner beats observed loser); nullopt when r lacks
// a score for either model (MISSING).  Vote must be decisive.
std::optional<double> vote_accuracy(const BtRanking& r, const Vote& v);

struct RankingPosterior {
    std::int64_t vote_id = 0;
    // (index into the ranking list, sigma weight); weights sum to 1 over the
    // rankings that score both vote models.
    std::vector<std::pair<std::size_t, double>> weights;
};

// sigma(i, r) = p(i, r) / sum_s p(i, s), support restricted to rankings with
// both models scored.  Throws ValidationError when every ranking is MISSING.
RankingPosterior ranking_posterior(std::span<const NamedRanking> rankings, const Vote& v);

// How a ranking that never scored an LLM contributes to its satisfaction.
enum class MissingLlmPolicy {
    HalfCredit,   // unscored ranking contributes sigma * 0.5
    Renormalize,  // restrict and renormalize the posterior to scoring rankings
};

// q(i, l): 1 when l is the observed winner, else the posterior-weighted
// probability that l would beat the observed winner.
double llm_satisfaction(std::span<const NamedRanking> rankings, const RankingPosterior& post,
                        const Vote& v, const std::string& llm,
                        MissingLlmPolicy policy = MissingLlmPolicy::HalfCredit);

// err[i][l] = 1 - q(i, l) over decisive votes x candidate LLMs.  Winner
// columns are exactly zero.
ErrorMatrix llm_error_matrix(std::span<const NamedRanking> rankings, std::span<const Vote> votes,
                             std::span<const std::string> llms,
                             MissingLlmPolicy policy = MissingLlmPolicy::HalfCredit,
                             unsigned workers = 0);

}  // namespace rankfolio
