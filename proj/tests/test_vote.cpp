#include <sstream>

#include "doctest.h"
#include "rankfolio/common.hpp"
#include "rankfolio/vote.hpp"

using namespace rankfolio;

namespace {

Vote mk(std::int64_t id, const std::string& a, const std::string& b, Outcome o,
        const std::string& lang, std::vector<std::string> tasks = {}) {
    Vote v;
    v.id = id;
    v.model_a = a;
    v.model_b = b;
    v.outcome = o;
    v.language = lang;
    v.tasks = std::move(tasks);
    return v;
}

VoteSet make_set(std::vector<Vote> votes) {
    VoteSet vs;
    for (auto& v : votes) {
        vs.models.insert(v.model_a);
        vs.models.insert(v.model_b);
        vs.votes.push_back(std::move(v));
    }
    return vs;
}

}  // namespace

TEST_CASE("parse_votes jsonl basics") {
    std::istringstream in(
        R"({"model_a":"m1","model_b":"m2","winner":"model_a","language":"English","tasks":["code"],"timestamp":1700000000})"
        "\n"
        R"({"model_a":"m1","model_b":"m2","winner":"both_bad","language":"German","tasks":[],"timestamp":5})"
        "\n");
    VoteSet vs = parse_votes(in, VoteFormat::JsonLines);
    REQUIRE(vs.votes.size() == 2);
    CHECK(vs.votes[0].outcome == Outcome::AWins);
    CHECK(vs.votes[0].winner() == "m1");
    CHECK(vs.votes[0].language == "English");
    CHECK(vs.votes[0].tasks == std::vector<std::string>{"code"});
    CHECK(vs.votes[0].timestamp == 1700000000);
    CHECK(vs.votes[1].excluded());
    CHECK(vs.votes[1].id == 1);
    CHECK(vs.models == std::set<std::string>{"m1", "m2"});
}

TEST_CASE("parse_votes empty stream") {
    std::istringstream in("");
    VoteSet vs = parse_votes(in, VoteFormat::JsonLines);
    CHECK(vs.votes.empty());
    CHECK(vs.models.empty());
}

TEST_CASE("parse_votes csv row maps fields") {
    std::istringstream in("m1,m2,model_a,English,code,1700000000\n");
    VoteSet vs = parse_votes(in, VoteFormat::Csv);
    REQUIRE(vs.votes.size() == 1);
    CHECK(vs.votes[0].outcome == Outcome::AWins);
    CHECK(vs.votes[0].tasks == std::vector<std::string>{"code"});
}

TEST_CASE("parse_votes csv header, quoting, multi-task") {
    std::istringstream in(
        "model_a,model_b,winner,language,tasks,timestamp\n"
        "\"m,1\",m2,tie,German,\"code;math\",7\n");
    VoteSet vs = parse_votes(in, VoteFormat::Csv);
    REQUIRE(vs.votes.size() == 1);
    CHECK(vs.votes[0].model_a == "m,1");
    CHECK(vs.votes[0].outcome == Outcome::Tie);
    CHECK(vs.votes[0].tasks == std::vector<std::string>{"code", "math"});
}

TEST_CASE("parse_votes errors carry line numbers") {
    std::istringstream bad_json("{\"model_a\":\"m1\"\n");
    CHECK_THROWS_AS(parse_votes(bad_json, VoteFormat::JsonLines), ParseError);

    std::istringstream bad_winner(
        R"({"model_a":"m1","model_b":"m2","winner":"model_c","language":"x","tasks":[],"timestamp":0})"
        "\n");
    CHECK_THROWS_AS(parse_votes(bad_winner, VoteFormat::JsonLines), ValidationError);

    std::istringstream short_row("m1,m2,model_a,English\n");
    CHECK_THROWS_AS(parse_votes(short_row, VoteFormat::Csv), ParseError);

    std::istringstream self("m1,m1,model_a,English,,0\n");
    CHECK_THROWS_AS(parse_votes(self, VoteFormat::Csv), ValidationError);
}

TEST_CASE("serialize round-trips") {
    VoteSet vs = make_set({mk(0, "a b", "m2", Outcome::BWins, "French", {"math", "code"}),
                           mk(1, "m3", "m\"4", Outcome::BothBad, "German"),
                           mk(2, "m3", "m2", Outcome::Tie, "x,y")});
    for (VoteFormat f : {VoteFormat::JsonLines, VoteFormat::Csv}) {
        std::ostringstream out;
        serialize_votes(vs, f, out);
        std::istringstream in(out.str());
        VoteSet back = parse_votes(in, f);
        REQUIRE(back.votes.size() == vs.votes.size());
        for (std::size_t i = 0; i < vs.votes.size(); ++i) {
            CHECK(back.votes[i].model_a == vs.votes[i].model_a);
            CHECK(back.votes[i].model_b == vs.votes[i].model_b);
            CHECK(back.votes[i].outcome == vs.votes[i].outcome);
            CHECK(back.votes[i].language == vs.votes[i].language);
            CHECK(back.votes[i].tasks == vs.votes[i].tasks);
            CHECK(back.votes[i].timestamp == vs.votes[i].timestamp);
        }
        CHECK(back.models == vs.models);
    }
}

TEST_CASE("language_family table") {
    CHECK(language_family("German") == "Germanic");
    CHECK(language_family("Tamil") == "Dravidian");
    CHECK(language_family("Klingon") == "Constructed");
    CHECK(language_family("NoSuchLanguage") == "Other");
}

TEST_CASE("stratify by language with min_votes") {
    std::vector<Vote> votes;
    for (int i = 0; i < 60; ++i) votes.push_back(mk(i, "m1", "m2", Outcome::AWins, "German"));
    for (int i = 60; i < 100; ++i) votes.push_back(mk(i, "m1", "m2", Outcome::AWins, "Dutch"));
    VoteSet vs = make_set(votes);

    auto strata = stratify(vs, Dimension::Language, 50);
    REQUIRE(strata.size() == 1);
    CHECK(strata[0].key.display() == "language:German");
    CHECK(strata[0].member_ids.size() == 60);

    // Both languages are Germanic, so the family stratum unites them.
    auto fam = stratify(vs, Dimension::Family, 50);
    REQUIRE(fam.size() == 1);
    CHECK(fam[0].key.display() == "family:Germanic");
    CHECK(fam[0].member_ids.size() == 100);

    auto glob = stratify(vs, Dimension::Global, 50);
    REQUIRE(glob.size() == 1);
    CHECK(glob[0].member_ids.size() == 100);
}

TEST_CASE("family counts equal the sum of language counts") {
    std::vector<Vote> votes;
    for (int i = 0; i < 30; ++i) votes.push_back(mk(i, "m1", "m2", Outcome::AWins, "German"));
    for (int i = 30; i < 50; ++i) votes.push_back(mk(i, "m1", "m2", Outcome::BWins, "Dutch"));
    for (int i = 50; i < 55; ++i) votes.push_back(mk(i, "m1", "m2", Outcome::AWins, "Tamil"));
    VoteSet vs = make_set(votes);
    auto langs = stratify(vs, Dimension::Language, 1);
    auto fams = stratify(vs, Dimension::Family, 1);
    std::map<std::string, std::size_t> by_family;
    for (const auto& s : langs) {
        by_family[language_family(s.key.values[0])] += s.member_ids.size();
    }
    REQUIRE(fams.size() == by_family.size());
    for (const auto& s : fams) CHECK(s.member_ids.size() == by_family.at(s.key.values[0]));
}

TEST_CASE("multi-task votes join several task strata") {
    VoteSet vs = make_set({mk(0, "m1", "m2", Outcome::AWins, "English", {"code", "math"}),
                           mk(1, "m1", "m2", Outcome::BWins, "English", {"code"})});
    auto tasks = stratify(vs, Dimension::Task, 1);
    REQUIRE(tasks.size() == 2);
    CHECK(tasks[0].key.display() == "task:code");
    CHECK(tasks[0].member_ids.size() == 2);
    CHECK(tasks[1].key.display() == "task:math");
    CHECK(tasks[1].member_ids.size() == 1);

    auto cross = stratify(vs, Dimension::LanguageXTask, 1);
    REQUIRE(cross.size() == 2);
    CHECK(cross[0].key.display() == "language_x_task:English|code");
}

TEST_CASE("bothbad votes are excluded from strata") {
    VoteSet vs = make_set({mk(0, "m1", "m2", Outcome::BothBad, "English"),
                           mk(1, "m1", "m2", Outcome::Tie, "English"),
                           mk(2, "m1", "m2", Outcome::AWins, "English")});
    auto glob = stratify(vs, Dimension::Global, 1);
    REQUIRE(glob.size() == 1);
    CHECK(glob[0].member_ids == std::vector<std::int64_t>{1, 2});
    CHECK(decisive_slice(vs).size() == 1);
}

TEST_CASE("stratify_custom groups on a caller key") {
    VoteSet vs = make_set({mk(0, "m1", "m2", Outcome::AWins, "English"),
                           mk(1, "m1", "m2", Outcome::AWins, "German"),
                           mk(2, "m1", "m2", Outcome::AWins, "English")});
    vs.votes[0].timestamp = 3600;
    vs.votes[1].timestamp = 3601;
    vs.votes[2].timestamp = 7300;
    auto hours = stratify_custom(
        vs, "hour", [](const Vote& v) { return std::to_string(v.timestamp / 3600); }, 1);
    REQUIRE(hours.size() == 2);
    CHECK(hours[0].member_ids == std::vector<std::int64_t>{0, 1});
    CHECK(hours[1].member_ids == std::vector<std::int64_t>{2});
    CHECK_THROWS_AS(stratify(vs, Dimension::Custom, 1), ValidationError);
}

TEST_CASE("stratum keys order and slug") {
    StratumKey a{Dimension::Family, {"Germanic"}};
    StratumKey b{Dimension::FamilyXTask, {"Germanic", "code"}};
    CHECK(a < b);
    CHECK(b.display() == "family_x_task:Germanic|code");
    CHECK(b.file_slug() == "family_x_task__Germanic__code");
}
