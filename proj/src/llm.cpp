#include "rankfolio/llm.hpp"

#include <cmath>

#include "rankfolio/common.hpp"

namespace rankfolio {

std::optional<double> vote_accuracy(const BtRanking& r, const Vote& v) {
    if (!v.decisive()) {
        throw ValidationError("vote_accuracy needs a decisive vote (id " + std::to_string(v.id) + ")");
    }
    const auto sw = r.score(v.winner());
    const auto sl = r.score(v.loser());
    if (!sw || !sl) return std::nullopt;
    return sigmoid(*sw - *sl);
}

RankingPosterior ranking_posterior(std::span<const NamedRanking> rankings, const Vote& v) {
    RankingPosterior post;
    post.vote_id = v.id;
    double total = 0.0;
    for (std::size_t r = 0; r < rankings.size(); ++r) {
        const auto p = vote_accuracy(rankings[r].ranking, v);
        if (!p) continue;
        post.weights.push_back({r, *p});
        total += *p;
    }
    if (post.weights.empty()) {
        throw ValidationError("no ranking scores both models of vote " + std::to_string(v.id));
    }
    // total > 0 always: p is a strictly positive logistic value.
    for (auto& [r, w] : post.weights) w /= total;
    return post;
}

double llm_satisfaction(std::span<const NamedRanking> rankings, const RankingPosterior& post,
                        const Vote& v, const std::string& llm, MissingLlmPolicy policy) {
    if (llm == v.winner()) return 1.0;
    double q = 0.0;
    double scored_mass = 0.0;
    for (const auto& [r, sigma] : post.weights) {
        const BtRanking& rk = rankings[r].ranking;
        const auto sl = rk.score(llm);
        const auto sw = rk.score(v.winner());  // scored by posterior support already
        if (!sl || !sw) {
            if (policy == MissingLlmPolicy::HalfCredit) q += sigma * 0.5;
            continue;
        }
        q += sigma * sigmoid(*sl - *sw);
        scored_mass += sigma;
    }
    if (policy == MissingLlmPolicy::Renormalize) {
        // Restrict the posterior to rankings that score the LLM; an LLM no
        // ranking scores falls back to maximal uncertainty.
        return scored_mass > 0.0 ? q / scored_mass : 0.5;
    }
    return q;
}

ErrorMatrix llm_error_matrix(std::span<const NamedRanking> rankings, std::span<const Vote> votes,
                             std::span<const std::string> llms, MissingLlmPolicy policy,
                             unsigned workers) {
    if (llms.empty()) throw ValidationError("llm_error_matrix needs at least one LLM column");
    ErrorMatrix em;
    em.model_ids.assign(llms.begin(), llms.end());
    em.item_ids.reserve(votes.size());
    for (const Vote& v : votes) em.item_ids.push_back(v.id);
    em.err.assign(votes.size() * llms.size(), 0.0f);
    parallel_for(votes.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Vote& v = votes[i];
            const RankingPosterior post = ranking_posterior(rankings, v);
            for (std::size_t j = 0; j < llms.size(); ++j) {
                const double q = llm_satisfaction(rankings, post, v, llms[j], policy);
                em.set(i, j, static_cast<float>(1.0 - q));
            }
        }
    });
    return em;
}

}  // namespace rankfolio
