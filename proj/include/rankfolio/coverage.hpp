#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankfolio/bt.hpp"

namespace rankfolio {

// Dense items x models matrix of ranking errors in [0,1].  NaN marks MISSING
// (the model/ranking cannot score that item).
struct ErrorMatrix {
    std::vector<std::int64_t> item_ids;
    std::vector<std::string> model_ids;
    std::vector<float> err;  // row-major, n_items * n_models

    std::size_t n_items() const { return item_ids.size(); }
    std::size_t n_models() const { return model_ids.size(); }
    float at(std::size_t i, std::size_t j) const { return err[i * model_ids.size() + j]; }
    void set(std::size_t i, std::size_t j, float v) { err[i * model_ids.size() + j] = v; }

    static constexpr float missing_value() { return std::numeric_limits<float>::quiet_NaN(); }
    static bool is_missing(float v) { return std::isnan(v); }
};

// Probability the ranking assigns to the observed loser.  nullopt when either
// model is unscored (MISSING).  Tie votes are not rankable errors; throws.
std::optional<double> ranking_error(const BtRanking& r, const Vote& v);

// err <= lambda, boundary inclusive.  MISSING is never covered.
inline bool covers(double err, double lambda) { return err <= lambda; }
inline bool covers_entry(float err, double lambda) {
    return !ErrorMatrix::is_missing(err) && static_cast<double>(err) <= lambda;
}

// err[i][j] = ranking_error(rankings[j], votes[i]).  Rows are computed on a
// worker pool; output slots are disjoint so the result is deterministic.
// Every vote must be decisive.
ErrorMatrix build_error_matrix(std::span<const NamedRanking> rankings,
                               std::span<const Vote> votes, unsigned workers = 0);

// Fraction of items whose best selected entry covers at lambda.  The
// denominator is always n_items; an empty selection covers nothing.
double coverage_fraction(const ErrorMatrix& em, std::span<const std::string> selected,
                         double lambda);

// (lambda, fraction) pairs; non-decreasing in lambda for a fixed selection.
std::vector<std::pair<double, double>> coverage_curve(const ErrorMatrix& em,
                                                      std::span<const std::string> selected,
                                                      std::span<const double> lambdas);

// Binary export: magic, dims, id tables, then row-major float32 (NaN=MISSING).
void write_error_matrix(const ErrorMatrix& em, std::ostream& out);
ErrorMatrix read_error_matrix(std::istream& in);
ErrorMatrix read_error_matrix_file(const std::string& path);
void write_error_matrix_file(const ErrorMatrix& em, const std::string& path);

// Row-chunked streaming writer for matrices too large to hold: computes
// chunk_rows rows at a time and appends them to the same binary format.
void write_error_matrix_streamed(std::span<const NamedRanking> rankings,
                                 std::span<const Vote> votes, const std::string& path,
                                 std::size_t chunk_rows, unsigned workers = 0);

// Human-readable export for small matrices; empty cell = MISSING.
void write_error_matrix_csv(const ErrorMatrix& em, std::ostream& out);

}  // namespace rankfolio
