#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "rankfolio/common.hpp"
#include "rankfolio/synth.hpp"

using namespace rankfolio;

namespace {

MixtureSpec base_spec() {
    MixtureSpec spec;
    Subpopulation sp;
    sp.name = "core";
    sp.weight = 1.0;
    sp.theta = {{"a", std::log(3.0)}, {"b", 0.0}};
    sp.languages = {"English"};
    spec.subpopulations = {sp};
    spec.n_votes = 1000;
    spec.seed = 5;
    return spec;
}

}  // namespace

TEST_CASE("mixture validation rejects malformed specs") {
    CHECK_NOTHROW(base_spec().validate());
    {
        MixtureSpec s = base_spec();
        s.subpopulations.clear();
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
    {
        MixtureSpec s = base_spec();
        s.n_votes = 0;
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
    {
        MixtureSpec s = base_spec();
        s.tie_rate = 0.5;
        CHECK_THROWS_AS(s.validate(), ValidationError);
        s.tie_rate = -0.01;
        CHECK_THROWS_AS(s.validate(), ValidationError);
        s.tie_rate = 0.49;
        CHECK_NOTHROW(s.validate());
    }
    {
        MixtureSpec s = base_spec();
        s.pair_sampling = PairSampling::PowerLaw;
        s.alpha = 0.0;
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
    {
        MixtureSpec s = base_spec();
        s.subpopulations[0].name.clear();
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
    {
        MixtureSpec s = base_spec();
        s.subpopulations[0].weight = 0.5;
        s.subpopulations.push_back(s.subpopulations[0]);  // duplicate name
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
    {
        MixtureSpec s = base_spec();
        s.subpopulations[0].weight = 0.9;  // sum != 1
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
    {
        MixtureSpec s = base_spec();
        s.subpopulations[0].theta = {{"solo", 1.0}};
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
    {
        MixtureSpec s = base_spec();
        s.subpopulations[0].languages.clear();
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
}

TEST_CASE("generation is deterministic for a fixed seed") {
    MixtureSpec spec = base_spec();
    spec.tie_rate = 0.1;
    SynthResult r1 = generate(spec);
    SynthResult r2 = generate(spec);
    REQUIRE(r1.votes.votes.size() == r2.votes.votes.size());
    for (std::size_t i = 0; i < r1.votes.votes.size(); ++i) {
        const Vote& a = r1.votes.votes[i];
        const Vote& b = r2.votes.votes[i];
        CHECK(a.id == b.id);
        CHECK(a.model_a == b.model_a);
        CHECK(a.model_b == b.model_b);
        CHECK(a.outcome == b.outcome);
        CHECK(a.language == b.language);
        CHECK(a.tasks == b.tasks);
        CHECK(a.timestamp == b.timestamp);
    }
    CHECK(r1.truth.vote_subpopulation == r2.truth.vote_subpopulation);
    CHECK(r1.votes.models == r2.votes.models);

    // a different seed actually changes the stream
    spec.seed = 6;
    SynthResult r3 = generate(spec);
    bool differs = false;
    for (std::size_t i = 0; i < r1.votes.votes.size() && !differs; ++i) {
        differs = r1.votes.votes[i].outcome != r3.votes.votes[i].outcome;
    }
    CHECK(differs);
}

TEST_CASE("votes carry sequential ids and subpopulation stamps") {
    MixtureSpec spec = base_spec();
    spec.subpopulations[0].languages = {"English", "Chinese"};
    spec.subpopulations[0].tasks = {"chat"};
    spec.n_votes = 200;
    SynthResult r = generate(spec);
    REQUIRE(r.votes.votes.size() == 200);
    REQUIRE(r.truth.vote_subpopulation.size() == 200);
    bool saw_english = false, saw_chinese = false;
    for (std::size_t i = 0; i < r.votes.votes.size(); ++i) {
        const Vote& v = r.votes.votes[i];
        CHECK(v.id == static_cast<std::int64_t>(i));
        CHECK(v.timestamp == static_cast<std::int64_t>(i));
        CHECK(v.model_a == "a");  // lexicographic pair order
        CHECK(v.model_b == "b");
        CHECK((v.language == "English" || v.language == "Chinese"));
        saw_english = saw_english || v.language == "English";
        saw_chinese = saw_chinese || v.language == "Chinese";
        CHECK(v.tasks == std::vector<std::string>{"chat"});
        CHECK(r.truth.vote_subpopulation[i] == 0);
    }
    CHECK(saw_english);
    CHECK(saw_chinese);
    CHECK(r.votes.models == std::set<std::string>{"a", "b"});

    spec.subpopulations[0].tasks.clear();
    SynthResult untasked = generate(spec);
    for (const Vote& v : untasked.votes.votes) CHECK(v.tasks.empty());
}

TEST_CASE("empirical win and tie rates concentrate on the spec") {
    MixtureSpec spec = base_spec();
    spec.n_votes = 20000;
    SynthResult r = generate(spec);
    std::int64_t a_wins = 0;
    for (const Vote& v : r.votes.votes) a_wins += v.outcome == Outcome::AWins ? 1 : 0;
    const double p_hat = static_cast<double>(a_wins) / 20000.0;
    CHECK(std::abs(p_hat - sigmoid(std::log(3.0))) < 0.015);  // 0.75 +- ~5 sigma

    spec.tie_rate = 0.2;
    SynthResult rt = generate(spec);
    std::int64_t ties = 0, decisive_a = 0, decisive = 0;
    for (const Vote& v : rt.votes.votes) {
        if (v.outcome == Outcome::Tie) {
            ++ties;
        } else {
            ++decisive;
            decisive_a += v.outcome == Outcome::AWins ? 1 : 0;
        }
    }
    CHECK(std::abs(static_cast<double>(ties) / 20000.0 - 0.2) < 0.015);
    // conditional on decisive the win rate is unchanged
    CHECK(std::abs(static_cast<double>(decisive_a) / static_cast<double>(decisive) - 0.75) < 0.02);
}

TEST_CASE("subpopulation weights drive the vote mix") {
    MixtureSpec spec;
    Subpopulation heavy, light;
    heavy.name = "heavy";
    heavy.weight = 0.8;
    heavy.theta = {{"h1", 0.0}, {"h2", 0.0}};
    heavy.languages = {"English"};
    light.name = "light";
    light.weight = 0.2;
    light.theta = {{"l1", 0.0}, {"l2", 0.0}};
    light.languages = {"Chinese"};
    spec.subpopulations = {heavy, light};
    spec.n_votes = 20000;
    spec.seed = 9;
    SynthResult r = generate(spec);
    std::int64_t heavy_votes = 0;
    for (std::size_t i = 0; i < r.votes.votes.size(); ++i) {
        const int si = r.truth.vote_subpopulation[i];
        heavy_votes += si == 0 ? 1 : 0;
        // the stamp is consistent with the models drawn
        if (si == 0) CHECK(r.votes.votes[i].model_a.front() == 'h');
        else CHECK(r.votes.votes[i].model_a.front() == 'l');
    }
    CHECK(std::abs(static_cast<double>(heavy_votes) / 20000.0 - 0.8) < 0.02);
}

TEST_CASE("power-law sampling orders pair frequencies by rank") {
    MixtureSpec spec = base_spec();
    spec.subpopulations[0].theta = {{"w", 0.0}, {"x", 0.0}, {"y", 0.0}, {"z", 0.0}};
    spec.pair_sampling = PairSampling::PowerLaw;
    spec.alpha = 1.2;
    spec.n_votes = 30000;
    SynthResult r = generate(spec);
    // lexicographic pair ranks: (w,x) (w,y) (w,z) (x,y) (x,z) (y,z)
    const std::vector<std::pair<std::string, std::string>> order = {
        {"w", "x"}, {"w", "y"}, {"w", "z"}, {"x", "y"}, {"x", "z"}, {"y", "z"}};
    std::map<std::pair<std::string, std::string>, std::int64_t> counts;
    for (const Vote& v : r.votes.votes) ++counts[{v.model_a, v.model_b}];
    REQUIRE(counts.size() == order.size());
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        CHECK(counts.at(order[k]) > counts.at(order[k + 1]));
    }
    // and the empirical share of the top pair is near its k^-alpha weight
    double total_w = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) total_w += std::pow(k + 1.0, -1.2);
    const double expect_top = 1.0 / total_w;
    CHECK(std::abs(static_cast<double>(counts.at(order[0])) / 30000.0 - expect_top) < 0.02);
}

TEST_CASE("mixture json round-trips") {
    MixtureSpec spec;
    Subpopulation a, b;
    a.name = "english";
    a.weight = 0.6;
    a.theta = {{"alpha", 1.5}, {"beta", 0.0}, {"gamma", -1.5}};
    a.languages = {"English"};
    a.tasks = {"chat", "code"};
    b.name = "chinese";
    b.weight = 0.4;
    b.theta = {{"alpha", -1.0}, {"beta", 1.0}};
    b.languages = {"Chinese"};
    spec.subpopulations = {a, b};
    spec.n_votes = 123;
    spec.pair_sampling = PairSampling::PowerLaw;
    spec.alpha = 1.5;
    spec.tie_rate = 0.1;
    spec.seed = 77;

    const nlohmann::ordered_json j = mixture_to_json(spec);
    const MixtureSpec back = mixture_from_json(nlohmann::json::parse(j.dump()));
    CHECK(mixture_to_json(back).dump() == j.dump());
    CHECK(back.subpopulations[0].theta.at("alpha") == 1.5);
    CHECK(back.pair_sampling == PairSampling::PowerLaw);
}

TEST_CASE("mixture json rejects bad input") {
    nlohmann::json missing = {{"subpopulations", nlohmann::json::array()}};
    CHECK_THROWS_AS(mixture_from_json(missing), ValidationError);
    nlohmann::json bad_sampling = nlohmann::json::parse(R"({
        "subpopulations": [{"name": "s", "weight": 1.0,
                            "theta": {"a": 0.0, "b": 1.0}, "languages": ["English"]}],
        "n_votes": 10, "pair_sampling": "zipf"})");
    CHECK_THROWS_AS(mixture_from_json(bad_sampling), ValidationError);
    nlohmann::json wrong_type = nlohmann::json::parse(R"({
        "subpopulations": [{"name": "s", "weight": 1.0,
                            "theta": {"a": 0.0, "b": 1.0}, "languages": ["English"]}],
        "n_votes": "many"})");
    CHECK_THROWS_AS(mixture_from_json(wrong_type), ValidationError);
}

TEST_CASE("ground truth sidecar records the mixture and per-vote labels") {
    MixtureSpec spec = base_spec();
    spec.n_votes = 50;
    SynthResult r = generate(spec);
    const nlohmann::ordered_json j = ground_truth_to_json(r.truth);
    REQUIRE(j.contains("subpopulations"));
    REQUIRE(j.contains("vote_subpopulation"));
    CHECK(j["vote_subpopulation"].size() == 50);
    CHECK(j["subpopulations"][0]["name"] == "core");
    CHECK(j["subpopulations"][0]["theta"]["a"] == doctest::Approx(std::log(3.0)));
    CHECK(j["subpopulations"][0]["languages"][0] == "English");
}
