#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "rankfolio/lang_family.hpp"

namespace rankfolio {

enum class Outcome { AWins, BWins, Tie, BothBad };

struct Vote {
    std::int64_t id = 0;  // stable row index within the owning VoteSet
    std::string model_a;
    std::string model_b;
    Outcome outcome = Outcome::Tie;
    std::string language;
    std::vector<std::string> tasks;  // sorted, unique
    std::int64_t timestamp = 0;      // UTC seconds

    bool decisive() const { return outcome == Outcome::AWins || outcome == Outcome::BWins; }
    // BothBad votes are retained on parse but excluded from every analysis.
    bool excluded() const { return outcome == Outcome::BothBad; }
    const std::string& winner() const { return outcome == Outcome::AWins ? model_a : model_b; }
    const std::string& loser() const { return outcome == Outcome::AWins ? model_b : model_a; }
};

struct VoteSet {
    std::vector<Vote> votes;
    std::set<std::string> models;  // union over all votes, both slots
};

enum class VoteFormat { JsonLines, Csv };

// Parses votes; assigns ids 0..n-1 in row order.  Malformed rows raise
// ParseError (with line number); an out-of-range winner raises ValidationError.
VoteSet parse_votes(std::istream& in, VoteFormat format);
VoteSet parse_votes_file(const std::string& path);  // format from extension

// Inverse of parse_votes up to id regeneration.
void serialize_votes(const VoteSet& vs, VoteFormat format, std::ostream& out);

enum class Dimension { Global, Language, Family, Task, FamilyXTask, LanguageXTask, Custom };

const char* dimension_name(Dimension d);
Dimension dimension_from_name(const std::string& name);

struct StratumKey {
    Dimension dim = Dimension::Global;
    std::vector<std::string> values;  // e.g. {"Germanic", "code"} for FamilyXTask

    std::string display() const;    // "family_x_task:Germanic|code"
    std::string file_slug() const;  // filesystem-safe
    bool operator<(const StratumKey& o) const;
    bool operator==(const StratumKey& o) const = default;
};

struct Stratum {
    StratumKey key;
    std::vector<std::int64_t> member_ids;  // sorted vote ids; ties included, BothBad excluded
};

// Splits a VoteSet along one dimension.  A vote carrying several task tags
// joins every matching task stratum.  Strata with fewer than min_votes members
// are dropped.  Global returns at most one stratum holding every
// decisive-or-tie vote.
std::vector<Stratum> stratify(const VoteSet& vs, Dimension dim, int min_votes,
                              const FamilyMap* families = nullptr);

// Custom stratification over a caller-supplied key (e.g. hour-of-day pulled
// from the timestamp).  Shares the generic grouping path with stratify().
std::vector<Stratum> stratify_custom(const VoteSet& vs, const std::string& column_name,
                                     const std::function<std::string(const Vote&)>& key_fn,
                                     int min_votes);

// All decisive votes of the set, in id order.
std::vector<Vote> decisive_slice(const VoteSet& vs);
// Member votes of a stratum, in id order.
std::vector<Vote> slice_by_ids(const VoteSet& vs, const std::vector<std::int64_t>& ids);

}  // namespace rankfolio
