#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankfolio/common.hpp"
#include "rankfolio/coverage.hpp"
#include "rankfolio/select.hpp"

#include "json.hpp"

namespace rankfolio {

// Tabular classification data: encoded features for training plus the raw
// string table for profiling reports.
struct TabularDataset {
    std::vector<std::string> feature_names;        // after one-hot encoding
    std::vector<std::vector<double>> rows;         // encoded, z-scored numeric
    std::vector<int> labels;                       // {0,1}
    std::map<std::string, std::vector<std::string>> groups;  // grouping -> per-row label

    std::vector<std::string> raw_columns;
    std::vector<std::vector<std::string>> raw_rows;
    nlohmann::ordered_json manifest;  // encoding record: columns, means, sds

    std::size_t n_rows() const { return rows.size(); }
};

// CSV loader; label column must hold 0/1.  Group columns are captured
// separately and excluded from the feature matrix.  Numeric columns are
// z-scored, everything else is one-hot encoded; the manifest records all of
// it.
TabularDataset load_tabular_csv(std::istream& in, const std::string& label_col,
                                const std::vector<std::string>& group_cols,
                                const std::vector<std::string>& drop_cols = {});

enum class ObjectiveKind { PlainBce, EoRegularized };

struct TrainObjective {
    ObjectiveKind kind = ObjectiveKind::PlainBce;
    double mu = 0.0;
    std::string grouping;  // required for EoRegularized
};

struct ClassifierModel {
    std::string name;
    std::vector<double> weights;
    double bias = 0.0;
    TrainObjective objective;
    FitDiagnostics fit;
    double final_bce = 0.0;
    double hard_eo_gap = 0.0;

    double predict(std::span<const double> x) const;
};

// Hard-threshold equalized-odds gap:
// (max_g TPR_g - min_g TPR_g) + (max_g FPR_g - min_g FPR_g).
// A group with no positives (negatives) is skipped in the TPR (FPR) term with
// a warning; a single group yields 0 with a warning.
double eo_gap(std::span<const double> preds, std::span<const int> labels,
              std::span<const std::string> groups, double threshold = 0.5,
              std::vector<std::string>* warnings = nullptr);

struct TrainOptions {
    double tol = 1e-6;         // gradient infinity-norm
    int max_iter = 5000;
    double weight_clamp = 25;  // box clamp; keeps separable problems bounded
    double tau = 50;           // softmax temperature of the EO surrogate
    double init_sd = 0.01;     // seed-driven weight initialization
};

// Logistic regression minimizing BCE + mu * EO_soft, where EO_soft replaces
// the hard rates with label-conditioned group means of predicted
// probabilities and max/min with softmax-smoothed versions (temperature tau).
// Deterministic given the seed.
ClassifierModel train_classifier(const TabularDataset& ds, const TrainObjective& objective,
                                 std::uint64_t seed, const TrainOptions& opts = {});

// 1 PlainBce model + one EoRegularized model per (grouping, mu): 61 with
// defaults.  Training jobs run on a worker pool; each job is deterministic.
std::vector<ClassifierModel> build_ensemble(const TabularDataset& ds,
                                            const std::vector<double>& mu_grid,
                                            const std::vector<std::string>& groupings,
                                            std::uint64_t seed, unsigned workers = 0,
                                            const TrainOptions& opts = {});

std::vector<double> default_mu_grid();  // {10, 20, ..., 300}

// err[i][j] = |h_j(x_i) - y_i|; plugs into portfolio-select unchanged.
ErrorMatrix classifier_error_matrix(std::span<const ClassifierModel> models,
                                    const TabularDataset& ds);

// Assignment table (one row per model + "No model") over the cells of two
// groupings, plus detail and summary stats for the uncovered individuals.
struct UncoveredProfile {
    std::vector<std::string> cell_labels;  // e.g. "Female|African-American"
    std::vector<std::pair<std::string, std::vector<std::int64_t>>> assignment_counts;
    std::vector<std::size_t> uncovered_rows;
    nlohmann::ordered_json summary;  // numeric column stats + label rate of uncovered
};

UncoveredProfile uncovered_profile(const ErrorMatrix& em, const Portfolio& portfolio,
                                   double lambda, const TabularDataset& ds,
                                   const std::pair<std::string, std::string>& cell_groupings);

// Per-cell false positive rates under minimum-error assignment of individuals
// to portfolio models.  Values are reported at 3 decimal places; cells with no
// negative-labeled rows have no FPR.
struct FprReport {
    double overall = 0.0;
    std::vector<std::string> cell_labels;
    std::vector<std::optional<double>> cell_fpr;
    std::vector<std::int64_t> cell_negatives;
};

FprReport fpr_report(std::span<const ClassifierModel> models,
                     std::span<const std::string> portfolio_ids, const TabularDataset& ds,
                     double threshold, const std::pair<std::string, std::string>& cell_groupings);

void write_uncovered_profile_csv(const UncoveredProfile& p, std::ostream& out);
void write_fpr_report_csv(const FprReport& r, std::ostream& out);

}  // namespace rankfolio
