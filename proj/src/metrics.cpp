#include "rankfolio/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rankfolio/common.hpp"
#include "rankfolio/llm.hpp"

namespace rankfolio {

double cancellation_rate(const VoteSet& vs) {
    // unordered pair -> (wins for min-name side, wins for max-name side)
    std::map<std::pair<std::string, std::string>, std::pair<std::int64_t, std::int64_t>> tally;
    std::int64_t total = 0;
    for (const Vote& v : vs.votes) {
        if (!v.decisive()) continue;
        auto& [lo_wins, hi_wins] = tally[std::minmax(v.model_a, v.model_b)];
        if (v.winner() == std::min(v.model_a, v.model_b)) ++lo_wins;
        else ++hi_wins;
        ++total;
    }
    if (total == 0) throw ValidationError("cancellation_rate needs at least one decisive vote");
    std::int64_t canceled = 0;
    for (const auto& [pair, wl] : tally) canceled += 2 * std::min(wl.first, wl.second);
    return static_cast<double>(canceled) / static_cast<double>(total);
}

double score_spread(const BtRanking& r) {
    if (r.elo.size() < 2) throw ValidationError("score_spread needs at least 2 models");
    double lo = r.elo.begin()->second, hi = lo;
    for (const auto& [model, e] : r.elo) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    return hi - lo;
}

IngroupPerformance ingroup_performance(const BtRanking& r, std::span<const Vote> slice) {
    if (slice.empty()) throw ValidationError("ingroup_performance needs a non-empty slice");
    IngroupPerformance perf;
    double prob_sum = 0.0, loss_sum = 0.0;
    for (const Vote& v : slice) {
        const auto p = vote_accuracy(r, v);  // throws on non-decisive votes
        if (!p) {
            ++perf.n_missing;
            continue;
        }
        prob_sum += *p;
        loss_sum += -std::log(*p);
        ++perf.n_evaluated;
    }
    if (perf.n_evaluated == 0) {
        throw ValidationError("ingroup_performance: ranking scores none of the slice");
    }
    perf.mean_winner_prob = prob_sum / static_cast<double>(perf.n_evaluated);
    perf.mean_log_loss = loss_sum / static_cast<double>(perf.n_evaluated);
    return perf;
}

std::map<std::string, std::vector<std::int64_t>> winprob_density(
    std::span<const DensityEntry> entries, int bins) {
    if (bins < 2) throw ValidationError("winprob_density needs at least 2 bins");
    std::map<std::string, std::vector<std::int64_t>> hist;
    for (const DensityEntry& e : entries) {
        if (!e.ranking) throw ValidationError("winprob_density entry without a ranking");
        auto& counts = hist[e.group];
        counts.resize(static_cast<std::size_t>(bins), 0);
        for (const Vote& v : e.votes) {
            const auto p = vote_accuracy(*e.ranking, v);
            if (!p) continue;
            const int b = std::min(bins - 1, static_cast<int>(*p * bins));
            ++counts[static_cast<std::size_t>(b)];
        }
    }
    return hist;
}

double confidence_threshold_fraction(const BtRanking& r, std::span<const Vote> votes, double p) {
    if (!(p > 0.5 && p < 1.0)) throw ValidationError("confidence threshold p must be in (0.5, 1)");
    std::int64_t n = 0, confident = 0;
    for (const Vote& v : votes) {
        if (!v.decisive()) continue;
        ++n;  // MISSING predictions stay in the denominator
        const auto q = vote_accuracy(r, v);
        if (q && *q >= p) ++confident;
    }
    if (n == 0) throw ValidationError("confidence_threshold_fraction needs decisive votes");
    return static_cast<double>(confident) / static_cast<double>(n);
}

}  // namespace rankfolio
