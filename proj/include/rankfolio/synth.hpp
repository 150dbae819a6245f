#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rankfolio/vote.hpp"

#include "json.hpp"

namespace rankfolio {

struct Subpopulation {
    std::string name;
    double weight = 0.0;
    std::map<std::string, double> theta;
    std::vector<std::string> languages;
    std::vector<std::string> tasks;
};

enum class PairSampling { Uniform, PowerLaw };

struct MixtureSpec {
    std::vector<Subpopulation> subpopulations;
    std::int64_t n_votes = 0;
    PairSampling pair_sampling = PairSampling::Uniform;
    double alpha = 1.0;     // PowerLaw exponent: pair ranked k gets weight k^-alpha
    double tie_rate = 0.0;  // in [0, 0.5)
    std::uint64_t seed = 0;

    void validate() const;  // throws ValidationError
};

struct GroundTruth {
    std::vector<Subpopulation> subpopulations;
    std::vector<int> vote_subpopulation;  // per-vote index
};

struct SynthResult {
    VoteSet votes;
    GroundTruth truth;
};

// Seeded mixture draw: per vote pick a subpopulation by weight, a model pair
// by pair_sampling over that subpopulation's lexicographically sorted pairs,
// then tie with prob tie_rate else a logistic winner under the
// subpopulation's theta.  Language and task stamps come uniformly from the
// subpopulation's lists.  Byte-identical output for a fixed seed.
SynthResult generate(const MixtureSpec& spec);

MixtureSpec mixture_from_json(const nlohmann::json& j);
nlohmann::ordered_json mixture_to_json(const MixtureSpec& spec);
nlohmann::ordered_json ground_truth_to_json(const GroundTruth& gt);

}  // namespace rankfolio
