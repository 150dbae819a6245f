#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rankfolio/common.hpp"
#include "rankfolio/coverage.hpp"

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

TEST_CASE("ranking_error is the loser probability") {
    NamedRanking r = named("r", {{"a", 0.0}, {"b", 0.0}});
    Vote v = mk(0, "a", "b", Outcome::AWins);
    CHECK(*ranking_error(r.ranking, v) == doctest::Approx(0.5));

    // winner ahead by ln 4 -> error exactly 0.2 (covered at the 0.2 boundary)
    NamedRanking sharp = named("s", {{"a", std::log(4.0)}, {"b", 0.0}});
    CHECK(*ranking_error(sharp.ranking, v) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(covers(*ranking_error(sharp.ranking, v), 0.2));
    CHECK_FALSE(covers(0.200001, 0.2));

    // loser ranked above winner by ln 9 -> error 0.9
    NamedRanking wrong = named("w", {{"a", 0.0}, {"b", std::log(9.0)}});
    CHECK(*ranking_error(wrong.ranking, v) == doctest::Approx(0.9).epsilon(1e-12));

    // missing model -> MISSING; tie -> error
    NamedRanking partial = named("p", {{"a", 0.0}});
    CHECK_FALSE(ranking_error(partial.ranking, v).has_value());
    Vote tie = mk(1, "a", "b", Outcome::Tie);
    CHECK_THROWS_AS(ranking_error(r.ranking, tie), ValidationError);
}

TEST_CASE("threshold equivalence with the log-odds form") {
    // covers(err, lambda) iff theta_winner - theta_loser >= ln((1-lambda)/lambda)
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double gap = rng.uniform(-4.0, 4.0);
        const double lambda = rng.uniform(0.01, 0.99);
        NamedRanking r = named("r", {{"w", gap}, {"l", 0.0}});
        Vote v = mk(0, "w", "l", Outcome::AWins);
        const double err = *ranking_error(r.ranking, v);
        const bool log_odds = gap >= std::log((1.0 - lambda) / lambda) - 1e-12;
        CHECK(covers(err, lambda + 1e-12) == log_odds);
    }
}

TEST_CASE("build_error_matrix evaluates every ranking on every vote") {
    std::vector<NamedRanking> rankings = {named("r1", {{"a", std::log(9.0)}, {"b", 0.0}}),
                                          named("r2", {{"a", 0.0}})};
    std::vector<Vote> votes = {mk(0, "a", "b", Outcome::AWins), mk(1, "b", "a", Outcome::AWins)};
    ErrorMatrix em = build_error_matrix(rankings, votes);
    REQUIRE(em.n_items() == 2);
    REQUIRE(em.n_models() == 2);
    CHECK(em.at(0, 0) == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(em.at(1, 0) == doctest::Approx(0.9).epsilon(1e-6));  // upset under r1
    CHECK(ErrorMatrix::is_missing(em.at(0, 1)));
    CHECK(ErrorMatrix::is_missing(em.at(1, 1)));

    std::vector<Vote> with_tie = {mk(0, "a", "b", Outcome::Tie)};
    CHECK_THROWS_AS(build_error_matrix(rankings, with_tie), ValidationError);

    std::vector<NamedRanking> dup = {rankings[0], rankings[0]};
    CHECK_THROWS_AS(build_error_matrix(dup, votes), ValidationError);
}

TEST_CASE("coverage_fraction counts by hand") {
    ErrorMatrix em;
    em.item_ids = {0, 1, 2};
    em.model_ids = {"r"};
    // 0.25 is exactly representable in float32, so the boundary case is real
    em.err = {0.1f, 0.25f, 0.5f};
    std::vector<std::string> sel = {"r"};
    CHECK(coverage_fraction(em, sel, 0.25) == doctest::Approx(2.0 / 3.0));
    CHECK(coverage_fraction(em, {}, 0.25) == 0.0);
    CHECK_THROWS_AS(coverage_fraction(em, std::vector<std::string>{"nope"}, 0.25),
                    ValidationError);

    // all-MISSING rows stay uncovered at lambda=1
    em.err[2] = ErrorMatrix::missing_value();
    CHECK(coverage_fraction(em, sel, 1.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("coverage_curve is monotone and hits the endpoints") {
    ErrorMatrix em;
    em.item_ids = {0};
    em.model_ids = {"r"};
    em.err = {0.5f};  // exactly representable -> true boundary hit at 0.5
    std::vector<std::string> sel = {"r"};
    std::vector<double> grid = {0.0, 0.49, 0.5, 1.0};
    auto curve = coverage_curve(em, sel, grid);
    REQUIRE(curve.size() == 4);
    CHECK(curve[0].second == 0.0);
    CHECK(curve[1].second == 0.0);
    CHECK(curve[2].second == 1.0);  // boundary inclusive
    CHECK(curve[3].second == 1.0);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second >= curve[i - 1].second);
}

TEST_CASE("marginal gains shrink as the selection grows (submodularity spot check)") {
    Rng rng(5);
    ErrorMatrix em;
    const int n = 40, m = 5;
    em.model_ids = {"a", "b", "c", "d", "e"};
    for (int i = 0; i < n; ++i) em.item_ids.push_back(i);
    em.err.resize(n * m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) em.set(i, j, static_cast<float>(rng.uniform()));
    }
    const double lambda = 0.35;
    std::vector<std::string> small_set = {"a"};
    std::vector<std::string> big = {"a", "b", "c"};
    for (const std::string& add : {"d", "e"}) {
        auto with_small = small_set, with_big = big;
        with_small.push_back(add);
        with_big.push_back(add);
        const double gain_small =
            coverage_fraction(em, with_small, lambda) - coverage_fraction(em, small_set, lambda);
        const double gain_big =
            coverage_fraction(em, with_big, lambda) - coverage_fraction(em, big, lambda);
        CHECK(gain_big <= gain_small + 1e-12);
    }
}

TEST_CASE("binary matrix round-trip, streamed variant, and csv") {
    std::vector<NamedRanking> rankings = {named("r1", {{"a", 1.0}, {"b", 0.0}}),
                                          named("r2", {{"a", 0.0}})};
    std::vector<Vote> votes;
    for (int i = 0; i < 257; ++i) {
        votes.push_back(mk(i, i % 3 == 0 ? "b" : "a", i % 3 == 0 ? "a" : "b", Outcome::AWins));
    }
    ErrorMatrix em = build_error_matrix(rankings, votes);

    std::stringstream buf;
    write_error_matrix(em, buf);
    ErrorMatrix back = read_error_matrix(buf);
    REQUIRE(back.n_items() == em.n_items());
    REQUIRE(back.model_ids == em.model_ids);
    for (std::size_t i = 0; i < em.n_items(); ++i) {
        for (std::size_t j = 0; j < em.n_models(); ++j) {
            if (ErrorMatrix::is_missing(em.at(i, j))) {
                CHECK(ErrorMatrix::is_missing(back.at(i, j)));
            } else {
                CHECK(back.at(i, j) == em.at(i, j));
            }
        }
    }

    const auto dir = std::filesystem::temp_directory_path() / "rankfolio_cov_test";
    std::filesystem::create_directories(dir);
    const std::string streamed = (dir / "streamed.bin").string();
    write_error_matrix_streamed(rankings, votes, streamed, 100);
    ErrorMatrix sm = read_error_matrix_file(streamed);
    REQUIRE(sm.n_items() == em.n_items());
    bool same = true;
    for (std::size_t k = 0; k < em.err.size(); ++k) {
        const bool bm = ErrorMatrix::is_missing(em.err[k]);
        same = same && (bm ? ErrorMatrix::is_missing(sm.err[k]) : sm.err[k] == em.err[k]);
    }
    CHECK(same);
    std::filesystem::remove_all(dir);

    std::ostringstream csv;
    write_error_matrix_csv(em, csv);
    std::istringstream lines(csv.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "item_id,r1,r2");
    std::string row0;
    std::getline(lines, row0);
    CHECK(row0.substr(row0.size() - 1) == ",");  // MISSING r2 cell is empty

    std::stringstream corrupt("not a matrix");
    CHECK_THROWS_AS(read_error_matrix(corrupt), IoError);
    CHECK_THROWS_AS(read_error_matrix_file("/nonexistent/path.bin"), IoError);
}
