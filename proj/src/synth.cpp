#include "rankfolio/synth.hpp"

#include <algorithm>
#include <cmath>

#include "rankfolio/common.hpp"

namespace rankfolio {

void MixtureSpec::validate() const {
    if (subpopulations.empty()) throw ValidationError("mixture needs at least one subpopulation");
    if (n_votes < 1) throw ValidationError("n_votes must be >= 1");
    if (!(tie_rate >= 0.0 && tie_rate < 0.5)) throw ValidationError("tie_rate must be in [0, 0.5)");
    if (pair_sampling == PairSampling::PowerLaw && !(alpha > 0.0)) {
        throw ValidationError("power-law alpha must be > 0");
    }
    double weight_sum = 0.0;
    std::map<std::string, int> names;
    for (const Subpopulation& sp : subpopulations) {
        if (sp.name.empty()) throw ValidationError("subpopulation needs a name");
        if (++names[sp.name] > 1) throw ValidationError("duplicate subpopulation name: " + sp.name);
        if (!(sp.weight > 0.0 && sp.weight <= 1.0)) {
            throw ValidationError("subpopulation '" + sp.name + "' weight must be in (0, 1]");
        }
        if (sp.theta.size() < 2) {
            throw ValidationError("subpopulation '" + sp.name + "' needs >= 2 models");
        }
        if (sp.languages.empty()) {
            throw ValidationError("subpopulation '" + sp.name + "' needs >= 1 language");
        }
        weight_sum += sp.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-9) {
        throw ValidationError("subpopulation weights must sum to 1");
    }
}

namespace {

// Cumulative weights for binary-search sampling; last entry pinned to the
// total so rounding can never push a draw off the end.
std::vector<double> cumulative(const std::vector<double>& weights) {
    std::vector<double> cum(weights.size());
    double run = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        run += weights[i];
        cum[i] = run;
    }
    return cum;
}

struct SubpopSampler {
    std::vector<std::pair<std::string, std::string>> pairs;  // lexicographic
    std::vector<double> pair_cum;
    std::vector<double> theta_a, theta_b;  // aligned with pairs
};

SubpopSampler make_sampler(const Subpopulation& sp, PairSampling sampling, double alpha) {
    SubpopSampler s;
    std::vector<std::string> models;
    for (const auto& [name, t] : sp.theta) models.push_back(name);  // map: already sorted
    for (std::size_t a = 0; a < models.size(); ++a) {
        for (std::size_t b = a + 1; b < models.size(); ++b) {
            s.pairs.push_back({models[a], models[b]});
            s.theta_a.push_back(sp.theta.at(models[a]));
            s.theta_b.push_back(sp.theta.at(models[b]));
        }
    }
    std::vector<double> w(s.pairs.size(), 1.0);
    if (sampling == PairSampling::PowerLaw) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            w[k] = std::pow(static_cast<double>(k + 1), -alpha);  // rank k+1 in pair order
        }
    }
    s.pair_cum = cumulative(w);
    return s;
}

}  // namespace

SynthResult generate(const MixtureSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    std::vector<double> sub_weights;
    for (const Subpopulation& sp : spec.subpopulations) sub_weights.push_back(sp.weight);
    const std::vector<double> sub_cum = cumulative(sub_weights);

    std::vector<SubpopSampler> samplers;
    samplers.reserve(spec.subpopulations.size());
    for (const Subpopulation& sp : spec.subpopulations) {
        samplers.push_back(make_sampler(sp, spec.pair_sampling, spec.alpha));
    }

    SynthResult out;
    out.truth.subpopulations = spec.subpopulations;
    out.truth.vote_subpopulation.reserve(static_cast<std::size_t>(spec.n_votes));
    out.votes.votes.reserve(static_cast<std::size_t>(spec.n_votes));
    for (std::int64_t i = 0; i < spec.n_votes; ++i) {
        const std::size_t si = rng.pick_cumulative(sub_cum);
        const Subpopulation& sp = spec.subpopulations[si];
        const SubpopSampler& sampler = samplers[si];
        const std::size_t pi = rng.pick_cumulative(sampler.pair_cum);

        Vote v;
        v.id = i;
        v.model_a = sampler.pairs[pi].first;
        v.model_b = sampler.pairs[pi].second;
        if (rng.uniform() < spec.tie_rate) {
            v.outcome = Outcome::Tie;
        } else {
            const double p_a = sigmoid(sampler.theta_a[pi] - sampler.theta_b[pi]);
            v.outcome = rng.uniform() < p_a ? Outcome::AWins : Outcome::BWins;
        }
        v.language = sp.languages[rng.uniform_index(sp.languages.size())];
        if (!sp.tasks.empty()) v.tasks = {sp.tasks[rng.uniform_index(sp.tasks.size())]};
        v.timestamp = i;
        out.votes.models.insert(v.model_a);
        out.votes.models.insert(v.model_b);
        out.truth.vote_subpopulation.push_back(static_cast<int>(si));
        out.votes.votes.push_back(std::move(v));
    }
    return out;
}

MixtureSpec mixture_from_json(const nlohmann::json& j) {
    MixtureSpec spec;
    try {
        for (const auto& sj : j.at("subpopulations")) {
            Subpopulation sp;
            sp.name = sj.at("name").get<std::string>();
            sp.weight = sj.at("weight").get<double>();
            for (const auto& [model, t] : sj.at("theta").items()) {
                sp.theta[model] = t.get<double>();
            }
            sp.languages = sj.at("languages").get<std::vector<std::string>>();
            if (sj.contains("tasks")) sp.tasks = sj.at("tasks").get<std::vector<std::string>>();
            spec.subpopulations.push_back(std::move(sp));
        }
        spec.n_votes = j.at("n_votes").get<std::int64_t>();
        const std::string sampling = j.value("pair_sampling", "uniform");
        if (sampling == "uniform") {
            spec.pair_sampling = PairSampling::Uniform;
        } else if (sampling == "power_law") {
            spec.pair_sampling = PairSampling::PowerLaw;
        } else {
            throw ValidationError("pair_sampling must be uniform or power_law");
        }
        spec.alpha = j.value("alpha", 1.0);
        spec.tie_rate = j.value("tie_rate", 0.0);
        spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad mixture JSON: ") + e.what());
    }
    spec.validate();
    return spec;
}

nlohmann::ordered_json mixture_to_json(const MixtureSpec& spec) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json subs = nlohmann::ordered_json::array();
    for (const Subpopulation& sp : spec.subpopulations) {
        nlohmann::ordered_json sj;
        sj["name"] = sp.name;
        sj["weight"] = sp.weight;
        nlohmann::ordered_json theta = nlohmann::ordered_json::object();
        for (const auto& [model, t] : sp.theta) theta[model] = t;
        sj["theta"] = std::move(theta);
        sj["languages"] = sp.languages;
        sj["tasks"] = sp.tasks;
        subs.push_back(std::move(sj));
    }
    j["subpopulations"] = std::move(subs);
    j["n_votes"] = spec.n_votes;
    j["pair_sampling"] = spec.pair_sampling == PairSampling::PowerLaw ? "power_law" : "uniform";
    j["alpha"] = spec.alpha;
    j["tie_rate"] = spec.tie_rate;
    j["seed"] = spec.seed;
    return j;
}

nlohmann::ordered_json ground_truth_to_json(const GroundTruth& gt) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json subs = nlohmann::ordered_json::array();
    for (const Subpopulation& sp : gt.subpopulations) {
        nlohmann::ordered_json sj;
        sj["name"] = sp.name;
        sj["weight"] = sp.weight;
        nlohmann::ordered_json theta = nlohmann::ordered_json::object();
        for (const auto& [model, t] : sp.theta) theta[model] = t;
        sj["theta"] = std::move(theta);
        sj["languages"] = sp.languages;
        sj["tasks"] = sp.tasks;
        subs.push_back(std::move(sj));
    }
    j["subpopulations"] = std::move(subs);
    j["vote_subpopulation"] = gt.vote_subpopulation;
    return j;
}

}  // namespace rankfolio
