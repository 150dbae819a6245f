#include <cmath>

#include "doctest.h"
#include "rankfolio/common.hpp"
#include "rankfolio/llm.hpp"

using namespace rankfolio;

namespace {

Vote mk(std::int64_t id, const std::string& a, const std::string& b, Outcome o) {
    Vote v;
    v.id = id;
    v.model_a = a;
    v.model_b = b;
    v.outcome = o;
    v.language = "English";
    return v;
}

NamedRanking named(const std::string& name, std::map<std::string, double> scores) {
    NamedRanking nr;
    nr.name = name;
    for (const auto& [m, s] : scores) {
        nr.ranking.scores[m] = s;
        nr.ranking.elo[m] = 400.0 * s + 1000.0;
    }
    return nr;
}

}  // namespace

TEST_CASE("vote_accuracy is the winner probability") {
    NamedRanking r = named("r", {{"a", std::log(3.0)}, {"b", 0.0}});
    Vote v = mk(0, "a", "b", Outcome::AWins);
    CHECK(*vote_accuracy(r.ranking, v) == doctest::Approx(0.75).epsilon(1e-12));

    NamedRanking partial = named("p", {{"a", 0.0}});
    CHECK_FALSE(vote_accuracy(partial.ranking, v).has_value());

    Vote tie = mk(1, "a", "b", Outcome::Tie);
    CHECK_THROWS_AS(vote_accuracy(r.ranking, tie), ValidationError);
}

TEST_CASE("ranking_posterior normalizes over scoring rankings") {
    std::vector<NamedRanking> rankings = {named("r1", {{"a", std::log(3.0)}, {"b", 0.0}}),
                                          named("r2", {{"a", 0.0}, {"b", std::log(3.0)}}),
                                          named("r3", {{"a", 0.0}})};
    Vote v = mk(0, "a", "b", Outcome::AWins);
    RankingPosterior post = ranking_posterior(rankings, v);
    REQUIRE(post.weights.size() == 2);  // r3 scores only one model
    CHECK(post.weights[0].first == 0);
    CHECK(post.weights[0].second == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(post.weights[1].second == doctest::Approx(0.25).epsilon(1e-12));

    std::vector<NamedRanking> identical = {named("r1", {{"a", 1.0}, {"b", 0.0}}),
                                           named("r2", {{"a", 1.0}, {"b", 0.0}})};
    RankingPosterior half = ranking_posterior(identical, v);
    CHECK(half.weights[0].second == doctest::Approx(0.5));
    CHECK(half.weights[1].second == doctest::Approx(0.5));

    std::vector<NamedRanking> single = {identical[0]};
    CHECK(ranking_posterior(single, v).weights[0].second == doctest::Approx(1.0));

    std::vector<NamedRanking> none = {named("r3", {{"a", 0.0}})};
    CHECK_THROWS_AS(ranking_posterior(none, v), ValidationError);
}

TEST_CASE("llm_satisfaction winner and single-ranking forms") {
    std::vector<NamedRanking> rankings = {
        named("r1", {{"a", 0.0}, {"b", 0.0}, {"c", std::log(9.0)}})};
    Vote v = mk(0, "a", "b", Outcome::AWins);
    RankingPosterior post = ranking_posterior(rankings, v);

    CHECK(llm_satisfaction(rankings, post, v, "a") == 1.0);  // winner exactly
    CHECK(llm_satisfaction(rankings, post, v, "b") == doctest::Approx(0.5));
    // theta_c - theta_winner = ln 9 -> q = 0.9
    CHECK(llm_satisfaction(rankings, post, v, "c") == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("missing llm policies") {
    std::vector<NamedRanking> rankings = {named("r1", {{"a", 0.0}, {"b", 0.0}, {"c", 1.0}}),
                                          named("r2", {{"a", 0.0}, {"b", 0.0}})};
    Vote v = mk(0, "a", "b", Outcome::AWins);
    RankingPosterior post = ranking_posterior(rankings, v);  // weights 0.5 / 0.5

    const double q_r1 = sigmoid(1.0);
    // HalfCredit: r2 cannot score c and contributes 0.5 * 0.5
    const double half = llm_satisfaction(rankings, post, v, "c", MissingLlmPolicy::HalfCredit);
    CHECK(half == doctest::Approx(0.5 * q_r1 + 0.5 * 0.5).epsilon(1e-12));
    // Renormalize: r1 carries all the mass
    const double renorm = llm_satisfaction(rankings, post, v, "c", MissingLlmPolicy::Renormalize);
    CHECK(renorm == doctest::Approx(q_r1).epsilon(1e-12));

    // nothing scores d: HalfCredit gives 0.5, Renormalize falls back to 0.5
    CHECK(llm_satisfaction(rankings, post, v, "d", MissingLlmPolicy::HalfCredit) ==
          doctest::Approx(0.5));
    CHECK(llm_satisfaction(rankings, post, v, "d", MissingLlmPolicy::Renormalize) ==
          doctest::Approx(0.5));
}

TEST_CASE("llm_error_matrix single ranking degenerates to 1 - win_prob") {
    std::vector<NamedRanking> rankings = {
        named("r1", {{"a", 0.7}, {"b", -0.4}, {"c", 0.1}})};
    std::vector<Vote> votes = {mk(0, "a", "b", Outcome::AWins), mk(1, "b", "c", Outcome::BWins),
                               mk(2, "a", "c", Outcome::AWins)};
    std::vector<std::string> llms = {"a", "b", "c"};
    ErrorMatrix em = llm_error_matrix(rankings, votes, llms);
    REQUIRE(em.n_items() == 3);
    REQUIRE(em.n_models() == 3);
    for (std::size_t i = 0; i < votes.size(); ++i) {
        const Vote& v = votes[i];
        for (std::size_t j = 0; j < llms.size(); ++j) {
            const double expected =
                llms[j] == v.winner()
                    ? 0.0
                    : 1.0 - win_prob(rankings[0].ranking, llms[j], v.winner());
            CHECK(std::abs(em.at(i, j) - expected) < 1e-6);
        }
        bool has_zero = false;
        for (std::size_t j = 0; j < llms.size(); ++j) has_zero = has_zero || em.at(i, j) == 0.0f;
        CHECK(has_zero);  // the winner column is exactly zero
    }

    CHECK_THROWS_AS(llm_error_matrix(rankings, votes, std::vector<std::string>{}),
                    ValidationError);
}

TEST_CASE("raising an llm's score never lowers q") {
    Vote v = mk(0, "a", "b", Outcome::AWins);
    double last = -1.0;
    for (double theta : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        std::vector<NamedRanking> rankings = {named("r1", {{"a", 0.0}, {"b", -0.3}, {"c", theta}}),
                                              named("r2", {{"a", 0.5}, {"b", 0.0}, {"c", 0.0}})};
        RankingPosterior post = ranking_posterior(rankings, v);
        const double q = llm_satisfaction(rankings, post, v, "c");
        CHECK(q > last);
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);
        last = q;
    }
}
