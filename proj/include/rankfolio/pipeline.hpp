#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankfolio/bt.hpp"

namespace rankfolio {

// One config drives every subcommand; unknown keys are rejected so typos
// surface as validation errors.  Defaults mirror the reference experiment
// setup (min_votes 50, nu 0.95, tie weight 0.5, lambda grid
// 0.05..0.50/0.05 plus 0.6..0.9).
struct RunConfig {
    // inputs
    std::string votes_path;
    std::string format;  // "", "jsonl" or "csv"; empty = by extension
    std::string rankings_dir;
    std::string matrix_path;
    std::string family_map_path;  // optional override CSV
    std::string mixture_path;     // synth spec JSON
    std::string data_path;        // tabular CSV for compas

    // outputs
    std::string out_dir;  // resolved against $RANKFOLIO_OUT when relative

    // fit
    std::vector<std::string> schemes = {"language"};
    int min_votes = 50;
    double tie_weight = 0.5;
    double tol = 1e-8;
    int max_iter = 10000;

    // selection
    std::vector<double> lambda_grid;  // empty = default grid
    double nu = 0.95;
    std::string method = "both";  // greedy | mip | exact | both

    // llm portfolio
    double lambda_select = 0.05;
    double lambda_eval = 0.20;
    int top_k = 10;
    std::string missing_llm = "half";  // half | renorm

    // compas
    std::string label_col = "two_year_recid";
    std::vector<std::string> group_cols = {"sex", "race"};
    std::vector<std::string> drop_cols;
    double mu_max = 300.0;
    double mu_step = 10.0;
    double compas_lambda = 0.45;
    double threshold = 0.5;

    // general
    std::uint64_t seed = 0;
    unsigned workers = 0;  // 0 = hardware concurrency
    bool stream_matrix = false;
    bool matrix_csv = false;

    std::vector<double> lambdas() const;  // grid or default
};

// TOML-like key = value file; '#' comments, quoted or bare strings, comma
// lists.  Unknown keys throw ValidationError.
void apply_config_file(RunConfig& cfg, const std::string& path);
// Applies the RANKFOLIO_OUT root to a relative out_dir.
std::string resolve_out_dir(const RunConfig& cfg);

int cmd_fit(const RunConfig& cfg);
int cmd_coverage(const RunConfig& cfg);
int cmd_select(const RunConfig& cfg);
int cmd_llm_portfolio(const RunConfig& cfg);
int cmd_compas(const RunConfig& cfg);
int cmd_synth(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);

// Shared helpers (used by subcommands and tests).
std::vector<NamedRanking> load_rankings_dir(const std::string& dir);
std::vector<NamedRanking> fit_all_strata(const VoteSet& vs, const RunConfig& cfg,
                                         std::vector<std::string>* warnings = nullptr);

}  // namespace rankfolio
