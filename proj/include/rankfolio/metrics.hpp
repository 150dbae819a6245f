#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rankfolio/bt.hpp"

namespace rankfolio {

// Fraction of decisive votes offset by an opposing decisive vote on the same
// unordered pair: sum over pairs of 2*min(wins, losses) / total decisive.
// Ties never cancel anything.  Throws ValidationError when no decisive votes.
double cancellation_rate(const VoteSet& vs);

// max(elo) - min(elo); throws ValidationError below 2 models.
double score_spread(const BtRanking& r);

struct IngroupPerformance {
    double mean_winner_prob = 0.0;
    double mean_log_loss = 0.0;
    std::int64_t n_evaluated = 0;
    std::int64_t n_missing = 0;  // votes skipped for lacking scores
};

// Mean probability assigned to the observed winner and mean -ln of it over a
// ranking's own decisive slice.  Throws ValidationError on an empty slice.
IngroupPerformance ingroup_performance(const BtRanking& r, std::span<const Vote> slice);

struct DensityEntry {
    std::string group;  // stratification dimension label
    const BtRanking* ranking = nullptr;
    std::span<const Vote> votes;  // the ranking's own slice
};

// Histogram (uniform bins over [0,1]) of winner probabilities pooled per
// group.  Counts sum to the number of evaluated (ranking, vote) pairs.
std::map<std::string, std::vector<std::int64_t>> winprob_density(
    std::span<const DensityEntry> entries, int bins);

// Fraction of decisive votes whose observed winner is predicted with
// probability >= p.  MISSING votes stay in the denominator.
double confidence_threshold_fraction(const BtRanking& r, std::span<const Vote> votes, double p);

}  // namespace rankfolio
