// rankfolio CLI: fit / coverage / select / llm-portfolio / compas / synth / report.
//
// Every config key is also a flag; flags win over the config file, which wins
// over defaults.  Exit codes: 0 ok, 2 validation, 3 infeasible, 4 I/O.

#include <cctype>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rankfolio/common.hpp"
#include "rankfolio/pipeline.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split_commas(s)) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw rankfolio::ValidationError("bad number in lambda grid: '" + tok + "'");
        }
    }
    return out;
}

// String staging area: CLI11 writes here, and we fold into cfg afterwards so
// that list-valued flags stay comma-separated single arguments.
struct FlagBuf {
    std::string schemes, lambda_grid, group_cols, drop_cols;
};

void add_common_flags(CLI::App* cmd, rankfolio::RunConfig& cfg, FlagBuf& buf,
                      std::string& config_path) {
    cmd->add_option("-c,--config", config_path, "key=value config file");
    cmd->add_option("--votes", cfg.votes_path, "votes file (.jsonl or .csv)");
    cmd->add_option("--format", cfg.format, "votes format: jsonl|csv (default: by extension)");
    cmd->add_option("--rankings-dir", cfg.rankings_dir, "directory of fitted ranking JSONs");
    cmd->add_option("--matrix", cfg.matrix_path, "error matrix path (.bin)");
    cmd->add_option("--family-map", cfg.family_map_path, "language->family CSV override");
    cmd->add_option("--mixture", cfg.mixture_path, "mixture spec JSON (synth)");
    cmd->add_option("--data", cfg.data_path, "tabular CSV (compas)");
    cmd->add_option("-o,--out", cfg.out_dir, "output directory");
    cmd->add_option("--schemes", buf.schemes, "stratification schemes, comma separated");
    cmd->add_option("--min-votes", cfg.min_votes, "minimum votes per stratum");
    cmd->add_option("--tie-weight", cfg.tie_weight, "weight a tie adds to each direction");
    cmd->add_option("--tol", cfg.tol, "gradient tolerance for fits");
    cmd->add_option("--max-iter", cfg.max_iter, "max fit iterations");
    cmd->add_option("--lambda-grid", buf.lambda_grid, "lambda thresholds, comma separated");
    cmd->add_option("--nu", cfg.nu, "coverage target in (0,1]");
    cmd->add_option("--method", cfg.method, "selector: greedy|mip|exact|both");
    cmd->add_option("--lambda-select", cfg.lambda_select, "portfolio lambda (llm-portfolio)");
    cmd->add_option("--lambda-eval", cfg.lambda_eval, "evaluation lambda (llm-portfolio)");
    cmd->add_option("--top-k", cfg.top_k, "rows in the LLM ordering table");
    cmd->add_option("--missing-llm", cfg.missing_llm, "unscored-ranking policy: half|renorm");
    cmd->add_option("--label-col", cfg.label_col, "label column (compas)");
    cmd->add_option("--group-cols", buf.group_cols, "protected columns, comma separated");
    cmd->add_option("--drop-cols", buf.drop_cols, "columns to drop, comma separated");
    cmd->add_option("--mu-max", cfg.mu_max, "largest fairness weight");
    cmd->add_option("--mu-step", cfg.mu_step, "fairness weight step");
    cmd->add_option("--compas-lambda", cfg.compas_lambda, "coverage lambda (compas)");
    cmd->add_option("--threshold", cfg.threshold, "classification threshold");
    cmd->add_option("--seed", cfg.seed, "RNG seed");
    cmd->add_option("--workers", cfg.workers, "worker threads (0 = hardware)");
    cmd->add_flag("--stream-matrix", cfg.stream_matrix, "write the matrix in row chunks");
    cmd->add_flag("--matrix-csv", cfg.matrix_csv, "also write the matrix as CSV");
}

void fold_flags(rankfolio::RunConfig& cfg, const FlagBuf& buf) {
    if (!buf.schemes.empty()) cfg.schemes = split_commas(buf.schemes);
    if (!buf.lambda_grid.empty()) cfg.lambda_grid = parse_grid(buf.lambda_grid);
    if (!buf.group_cols.empty()) cfg.group_cols = split_commas(buf.group_cols);
    if (!buf.drop_cols.empty()) cfg.drop_cols = split_commas(buf.drop_cols);
}

// The config file must load before flag values land in cfg, so peek at argv
// for -c/--config ahead of the real parse.
std::string peek_config(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if ((a == "-c" || a == "--config") && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
        if (a.rfind("-c=", 0) == 0) return a.substr(3);
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    using namespace rankfolio;

    CLI::App app{"rankfolio: stratified rankings and minimum (lambda,nu)-portfolios"};
    app.require_subcommand(1);

    RunConfig cfg;
    FlagBuf buf;
    std::string config_path;

    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const RunConfig&);
    };
    const Sub subs[] = {
        {"fit", "fit per-stratum Bradley-Terry rankings", cmd_fit},
        {"coverage", "build the ranking error matrix and diagnostics", cmd_coverage},
        {"select", "select portfolios over the lambda grid", cmd_select},
        {"llm-portfolio", "portfolio-induced LLM orderings", cmd_llm_portfolio},
        {"compas", "fairness ensemble + portfolio reports", cmd_compas},
        {"synth", "generate a synthetic vote set", cmd_synth},
        {"report", "heterogeneity report over strata", cmd_report},
    };
    for (const auto& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        add_common_flags(cmd, cfg, buf, config_path);
    }

    try {
        // Config file first (if any), then flags override it.
        std::string pre = peek_config(argc, argv);
        if (!pre.empty()) apply_config_file(cfg, pre);

        app.parse(argc, argv);
        fold_flags(cfg, buf);

        for (const auto& s : subs)
            if (app.get_subcommand(s.name)->parsed()) return s.run(cfg);
        return 2;  // unreachable: require_subcommand(1)
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ValidationError& e) {  // ParseError derives from this
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
