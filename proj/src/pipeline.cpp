#include "rankfolio/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rankfolio/common.hpp"
#include "rankfolio/coverage.hpp"
#include "rankfolio/fair.hpp"
#include "rankfolio/lang_family.hpp"
#include "rankfolio/llm.hpp"
#include "rankfolio/metrics.hpp"
#include "rankfolio/select.hpp"
#include "rankfolio/synth.hpp"

namespace fs = std::filesystem;

namespace rankfolio {

std::vector<double> RunConfig::lambdas() const {
    return lambda_grid.empty() ? default_lambda_grid() : lambda_grid;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            const std::string t = unquote(trim(cur));
            if (!t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    const std::string t = unquote(trim(cur));
    if (!t.empty()) out.push_back(t);
    return out;
}

double to_real(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "' needs a number, got '" + s + "'");
    }
}

std::int64_t to_int(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "' needs an integer, got '" + s + "'");
    }
}

bool to_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw ValidationError("config key '" + key + "' needs true/false, got '" + s + "'");
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "votes_path") cfg.votes_path = unquote(value);
    else if (key == "format") cfg.format = unquote(value);
    else if (key == "rankings_dir") cfg.rankings_dir = unquote(value);
    else if (key == "matrix_path") cfg.matrix_path = unquote(value);
    else if (key == "family_map_path") cfg.family_map_path = unquote(value);
    else if (key == "mixture_path") cfg.mixture_path = unquote(value);
    else if (key == "data_path") cfg.data_path = unquote(value);
    else if (key == "out_dir") cfg.out_dir = unquote(value);
    else if (key == "schemes") cfg.schemes = split_list(value);
    else if (key == "min_votes") cfg.min_votes = static_cast<int>(to_int(value, key));
    else if (key == "tie_weight") cfg.tie_weight = to_real(value, key);
    else if (key == "tol") cfg.tol = to_real(value, key);
    else if (key == "max_iter") cfg.max_iter = static_cast<int>(to_int(value, key));
    else if (key == "lambda_grid") {
        cfg.lambda_grid.clear();
        for (const std::string& item : split_list(value)) {
            cfg.lambda_grid.push_back(to_real(item, key));
        }
    } else if (key == "nu") cfg.nu = to_real(value, key);
    else if (key == "method") cfg.method = unquote(value);
    else if (key == "lambda_select") cfg.lambda_select = to_real(value, key);
    else if (key == "lambda_eval") cfg.lambda_eval = to_real(value, key);
    else if (key == "top_k") cfg.top_k = static_cast<int>(to_int(value, key));
    else if (key == "missing_llm") cfg.missing_llm = unquote(value);
    else if (key == "label_col") cfg.label_col = unquote(value);
    else if (key == "group_cols") cfg.group_cols = split_list(value);
    else if (key == "drop_cols") cfg.drop_cols = split_list(value);
    else if (key == "mu_max") cfg.mu_max = to_real(value, key);
    else if (key == "mu_step") cfg.mu_step = to_real(value, key);
    else if (key == "compas_lambda") cfg.compas_lambda = to_real(value, key);
    else if (key == "threshold") cfg.threshold = to_real(value, key);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(value, key));
    else if (key == "workers") cfg.workers = static_cast<unsigned>(to_int(value, key));
    else if (key == "stream_matrix") cfg.stream_matrix = to_bool(value, key);
    else if (key == "matrix_csv") cfg.matrix_csv = to_bool(value, key);
    else throw ValidationError("unknown config key '" + key + "'");
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments outside quotes
        bool quoted = false;
        std::string body;
        for (char c : line) {
            if (c == '"') quoted = !quoted;
            if (c == '#' && !quoted) break;
            body.push_back(c);
        }
        body = trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected key = value", lineno);
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ParseError("empty config key", lineno);
        apply_key(cfg, key, value);
    }
}

std::string resolve_out_dir(const RunConfig& cfg) {
    fs::path out = cfg.out_dir.empty() ? fs::path("out") : fs::path(cfg.out_dir);
    if (out.is_relative()) {
        if (const char* root = std::getenv("RANKFOLIO_OUT")) {
            if (*root) out = fs::path(root) / out;
        }
    }
    return out.string();
}

namespace {

VoteFormat format_of(const RunConfig& cfg) {
    if (cfg.format == "jsonl") return VoteFormat::JsonLines;
    if (cfg.format == "csv") return VoteFormat::Csv;
    if (!cfg.format.empty()) {
        throw ValidationError("format must be jsonl or csv, got '" + cfg.format + "'");
    }
    const std::string& p = cfg.votes_path;
    return p.size() >= 4 && p.substr(p.size() - 4) == ".csv" ? VoteFormat::Csv
                                                             : VoteFormat::JsonLines;
}

VoteSet load_votes(const RunConfig& cfg) {
    if (cfg.votes_path.empty()) throw ValidationError("votes_path is required");
    std::ifstream in(cfg.votes_path);
    if (!in) throw IoError("cannot open votes file: " + cfg.votes_path);
    return parse_votes(in, format_of(cfg));
}

FamilyMap load_family_map(const RunConfig& cfg) {
    if (cfg.family_map_path.empty()) return FamilyMap::builtin();
    std::ifstream in(cfg.family_map_path);
    if (!in) throw IoError("cannot open family map: " + cfg.family_map_path);
    return FamilyMap::load_csv(in);
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

// Binary mode everywhere so trees are byte-identical across platforms.
void write_text(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << content;
    if (!out) throw IoError("failed writing " + p.string());
}

void write_json(const fs::path& p, const nlohmann::ordered_json& j) {
    write_text(p, j.dump(2) + "\n");
}

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

// Whether a vote belongs to a ranking's stratum; used to rebuild own-slices
// for diagnostics without the original Stratum objects.
bool stratum_contains(const StratumKey& key, const Vote& v, const FamilyMap& fam) {
    const auto has_task = [&](const std::string& t) {
        return std::find(v.tasks.begin(), v.tasks.end(), t) != v.tasks.end();
    };
    switch (key.dim) {
        case Dimension::Global: return true;
        case Dimension::Language: return v.language == key.values[0];
        case Dimension::Family: return fam.family(v.language) == key.values[0];
        case Dimension::Task: return has_task(key.values[0]);
        case Dimension::FamilyXTask:
            return fam.family(v.language) == key.values[0] && has_task(key.values[1]);
        case Dimension::LanguageXTask:
            return v.language == key.values[0] && has_task(key.values[1]);
        case Dimension::Custom: return false;  // not reconstructible from the vote alone
    }
    return false;
}

std::vector<Vote> own_slice(const NamedRanking& r, const std::vector<Vote>& decisive,
                            const FamilyMap& fam) {
    std::vector<Vote> out;
    for (const Vote& v : decisive) {
        if (stratum_contains(r.key, v, fam)) out.push_back(v);
    }
    return out;
}

std::string rankings_dir_of(const RunConfig& cfg) {
    if (!cfg.rankings_dir.empty()) return cfg.rankings_dir;
    return (fs::path(resolve_out_dir(cfg)) / "rankings").string();
}

std::string matrix_path_of(const RunConfig& cfg) {
    if (!cfg.matrix_path.empty()) return cfg.matrix_path;
    return (fs::path(resolve_out_dir(cfg)) / "error_matrix.bin").string();
}

MissingLlmPolicy missing_policy(const RunConfig& cfg) {
    if (cfg.missing_llm == "half") return MissingLlmPolicy::HalfCredit;
    if (cfg.missing_llm == "renorm") return MissingLlmPolicy::Renormalize;
    throw ValidationError("missing_llm must be half or renorm, got '" + cfg.missing_llm + "'");
}

}  // namespace

std::vector<NamedRanking> load_rankings_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("rankings directory not found: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no ranking JSON files in " + dir);
    std::vector<NamedRanking> rankings;
    for (const std::string& f : files) {
        std::ifstream in(f);
        if (!in) throw IoError("cannot open " + f);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw IoError("bad JSON in " + f + ": " + e.what());
        }
        rankings.push_back(ranking_from_json(j));
    }
    return rankings;
}

std::vector<NamedRanking> fit_all_strata(const VoteSet& vs, const RunConfig& cfg,
                                         std::vector<std::string>* warnings) {
    const FamilyMap fam = load_family_map(cfg);
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };

    std::vector<Stratum> strata;
    {
        auto global = stratify(vs, Dimension::Global, 1);
        if (global.empty()) throw ValidationError("no usable votes (all both_bad?)");
        strata.push_back(std::move(global.front()));
    }
    for (const std::string& scheme : cfg.schemes) {
        const Dimension dim = dimension_from_name(scheme);
        if (dim == Dimension::Global) continue;  // always present
        auto part = stratify(vs, dim, cfg.min_votes, &fam);
        if (part.empty()) {
            warn("scheme '" + scheme + "' produced no stratum with >= " +
                 std::to_string(cfg.min_votes) + " votes");
        }
        for (Stratum& s : part) strata.push_back(std::move(s));
    }

    FitOptions opts;
    opts.tol = cfg.tol;
    opts.max_iter = cfg.max_iter;
    std::vector<NamedRanking> rankings(strata.size());
    parallel_for(strata.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            const std::vector<Vote> slice = slice_by_ids(vs, strata[s].member_ids);
            const PairWeights pw = compute_weights(slice, cfg.tie_weight);
            NamedRanking nr;
            nr.key = strata[s].key;
            nr.name = strata[s].key.display();
            nr.n_votes = pw.n_votes;
            nr.ranking = fit_bt(pw, opts);
            rankings[s] = std::move(nr);
        }
    });
    for (const NamedRanking& r : rankings) {
        if (!r.ranking.fit.converged) {
            warn("fit for " + r.name + " did not converge (grad norm " +
                 fmt(r.ranking.fit.final_grad_norm, 9) + (r.ranking.fit.clamped ? ", clamped)" : ")"));
        }
    }
    return rankings;
}

int cmd_fit(const RunConfig& cfg) {
    const VoteSet vs = load_votes(cfg);
    std::vector<std::string> warnings;
    const std::vector<NamedRanking> rankings = fit_all_strata(vs, cfg, &warnings);

    const fs::path out(resolve_out_dir(cfg));
    const fs::path rdir = out / "rankings";
    ensure_dir(rdir);
    nlohmann::ordered_json index = nlohmann::ordered_json::array();
    for (const NamedRanking& r : rankings) {
        const std::string slug = r.key.file_slug() + ".json";
        write_json(rdir / slug, ranking_to_json(r.key, r.ranking, r.n_votes));
        index.push_back({{"name", r.name},
                         {"file", slug},
                         {"n_votes", r.n_votes},
                         {"models", r.ranking.scores.size()},
                         {"converged", r.ranking.fit.converged},
                         {"clamped", r.ranking.fit.clamped},
                         {"iterations", r.ranking.fit.iterations}});
    }
    nlohmann::ordered_json summary;
    summary["n_rankings"] = rankings.size();
    summary["rankings"] = std::move(index);
    summary["warnings"] = warnings;
    write_json(out / "fit_summary.json", summary);
    std::cout << "fit: " << rankings.size() << " rankings -> " << rdir.string() << "\n";
    for (const std::string& w : warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

int cmd_coverage(const RunConfig& cfg) {
    const std::vector<NamedRanking> rankings = load_rankings_dir(rankings_dir_of(cfg));
    const VoteSet vs = load_votes(cfg);
    const std::vector<Vote> decisive = decisive_slice(vs);
    if (decisive.empty()) throw ValidationError("no decisive votes to cover");
    const FamilyMap fam = load_family_map(cfg);

    const fs::path out(resolve_out_dir(cfg));
    ensure_dir(out);
    const std::string mpath = matrix_path_of(cfg);
    ensure_dir(fs::path(mpath).parent_path());
    ErrorMatrix em;
    if (cfg.stream_matrix) {
        write_error_matrix_streamed(rankings, decisive, mpath, 4096, cfg.workers);
        em = read_error_matrix_file(mpath);
    } else {
        em = build_error_matrix(rankings, decisive, cfg.workers);
        write_error_matrix_file(em, mpath);
    }
    if (cfg.matrix_csv) {
        std::ofstream csv(out / "error_matrix.csv", std::ios::binary);
        if (!csv) throw IoError("cannot write error_matrix.csv");
        write_error_matrix_csv(em, csv);
    }

    // Per-stratum diagnostics over each ranking's own slice.
    std::ostringstream diag;
    diag << "key,n,spread,mean_winner_prob,mean_log_loss\n";
    for (const NamedRanking& r : rankings) {
        const std::vector<Vote> slice = own_slice(r, decisive, fam);
        if (slice.empty() || r.ranking.scores.size() < 2) continue;
        const IngroupPerformance perf = ingroup_performance(r.ranking, slice);
        diag << r.name << ',' << slice.size() << ',' << fmt(score_spread(r.ranking), 3) << ','
             << fmt(perf.mean_winner_prob) << ',' << fmt(perf.mean_log_loss) << "\n";
    }
    write_text(out / "diagnostics.csv", diag.str());

    // Whole-ensemble coverage curve across the lambda grid.
    std::ostringstream curve;
    curve << "lambda,coverage\n";
    for (double l : cfg.lambdas()) {
        curve << fmt(l, 2) << ',' << fmt(coverage_fraction(em, em.model_ids, l)) << "\n";
    }
    write_text(out / "coverage_curve.csv", curve.str());
    std::cout << "coverage: " << em.n_items() << " items x " << em.n_models() << " rankings -> "
              << mpath << "\n";
    return 0;
}

int cmd_select(const RunConfig& cfg) {
    if (cfg.method != "greedy" && cfg.method != "mip" && cfg.method != "exact" &&
        cfg.method != "both") {
        throw ValidationError("method must be greedy, mip, exact, or both");
    }
    const ErrorMatrix em = read_error_matrix_file(matrix_path_of(cfg));
    const fs::path out(resolve_out_dir(cfg));
    const fs::path sdir = out / "select";
    ensure_dir(sdir);

    const std::vector<double> grid = cfg.lambdas();
    const bool greedy = cfg.method == "greedy" || cfg.method == "both";
    const bool mip = cfg.method == "mip" || cfg.method == "both";
    const bool exact = cfg.method == "exact";

    struct LambdaReport {
        nlohmann::ordered_json json;
        std::string csv_rows;
        bool any_feasible = false;
    };
    std::vector<LambdaReport> reports(grid.size());
    parallel_for(grid.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t li = begin; li < end; ++li) {
            const double lambda = grid[li];
            const CoverSets cs = build_cover_sets(em, lambda);
            LambdaReport& rep = reports[li];
            rep.json["lambda"] = lambda;
            rep.json["nu"] = cfg.nu;
            nlohmann::ordered_json methods = nlohmann::ordered_json::object();
            std::ostringstream csv;
            auto record = [&](const SelectionResult& sel) {
                methods[select_method_name(sel.method)] = selection_to_json(sel);
                rep.any_feasible = rep.any_feasible || sel.feasible;
                csv << fmt(lambda, 2) << ',' << select_method_name(sel.method) << ','
                    << sel.portfolio.model_ids.size() << ',' << (sel.feasible ? 1 : 0) << ','
                    << fmt(sel.portfolio.nu_achieved) << ','
                    << (sel.certificate ? fmt(*sel.certificate) : "") << "\n";
            };
            if (greedy) record(greedy_select(cs, cfg.nu));
            if (mip) {
                const SelectionResult rounded = lp_relax_and_round(cs, cfg.nu);
                record(rounded);
                if (rounded.feasible) {
                    // Phase 2: re-optimize the same-size portfolio for MSE.
                    record(phase2_min_mse(em, lambda, cfg.nu,
                                          static_cast<int>(rounded.portfolio.model_ids.size())));
                }
            }
            if (exact) record(exact_select(cs, cfg.nu));
            rep.json["methods"] = std::move(methods);
            rep.csv_rows = csv.str();
        }
    });

    std::ostringstream summary;
    summary << "lambda,method,k,feasible,nu_achieved,certificate\n";
    bool any_feasible = false;
    for (std::size_t li = 0; li < grid.size(); ++li) {
        char name[32];
        std::snprintf(name, sizeof(name), "lambda_%.2f.json", grid[li]);
        write_json(sdir / name, reports[li].json);
        summary << reports[li].csv_rows;
        any_feasible = any_feasible || reports[li].any_feasible;
    }
    write_text(sdir / "summary.csv", summary.str());
    std::cout << "select: " << grid.size() << " lambda values -> " << sdir.string() << "\n";
    if (!any_feasible) {
        std::cout << "select: no feasible portfolio at any lambda (nu=" << fmt(cfg.nu, 2) << ")\n";
        return 3;
    }
    return 0;
}

int cmd_llm_portfolio(const RunConfig& cfg) {
    const std::vector<NamedRanking> rankings = load_rankings_dir(rankings_dir_of(cfg));
    const VoteSet vs = load_votes(cfg);
    const std::vector<Vote> decisive = decisive_slice(vs);
    if (decisive.empty()) throw ValidationError("no decisive votes");
    const MissingLlmPolicy policy = missing_policy(cfg);
    if (cfg.top_k < 1) throw ValidationError("top_k must be >= 1");

    // Phase 1: ranking portfolios at lambda_select.
    const ErrorMatrix rank_em = build_error_matrix(rankings, decisive, cfg.workers);
    const CoverSets cs = build_cover_sets(rank_em, cfg.lambda_select);
    const SelectionResult greedy = greedy_select(cs, cfg.nu);
    const SelectionResult rounded = lp_relax_and_round(cs, cfg.nu);
    if (!greedy.feasible && !rounded.feasible) {
        std::cout << "llm-portfolio: no feasible ranking portfolio at lambda="
                  << fmt(cfg.lambda_select, 2) << " (max nu " << fmt(greedy.max_achievable_nu)
                  << ")\n";
        return 3;
    }

    const std::vector<std::string> llms(vs.models.begin(), vs.models.end());
    auto subset = [&](const std::vector<std::string>& names) {
        std::vector<NamedRanking> out;
        for (const NamedRanking& r : rankings) {
            if (std::find(names.begin(), names.end(), r.name) != names.end()) out.push_back(r);
        }
        return out;
    };
    struct Column {
        std::string label;
        std::vector<std::string> order;
        std::vector<double> cumulative;
    };
    // LLM ordering induced by a ranking set: greedy set cover over the LLM
    // error matrix at lambda_eval.
    auto induced = [&](const std::vector<NamedRanking>& ensemble, const std::string& label) {
        Column col;
        col.label = label;
        if (ensemble.empty()) return col;
        const ErrorMatrix llm_em = llm_error_matrix(ensemble, decisive, llms, policy, cfg.workers);
        const SelectionResult sel = greedy_select(build_cover_sets(llm_em, cfg.lambda_eval), 1.0);
        for (std::size_t s = 0; s < sel.portfolio.model_ids.size(); ++s) {
            col.order.push_back(sel.portfolio.model_ids[s]);
            col.cumulative.push_back(sel.portfolio.steps[s].cumulative_fraction);
        }
        return col;
    };
    // Global column: LLMs in global-Elo order, cumulative coverage of the
    // prefix under the global ranking's own LLM matrix.
    auto global_column = [&]() {
        Column col;
        col.label = "global";
        const NamedRanking* global = nullptr;
        for (const NamedRanking& r : rankings) {
            if (r.key.dim == Dimension::Global) global = &r;
        }
        if (!global) return col;
        std::vector<std::pair<double, std::string>> by_elo;
        for (const auto& [model, e] : global->ranking.elo) by_elo.push_back({-e, model});
        std::sort(by_elo.begin(), by_elo.end());
        const std::vector<NamedRanking> ens = {*global};
        const ErrorMatrix llm_em = llm_error_matrix(ens, decisive, llms, policy, cfg.workers);
        std::vector<std::string> prefix;
        for (const auto& [neg_elo, model] : by_elo) {
            prefix.push_back(model);
            col.order.push_back(model);
            col.cumulative.push_back(coverage_fraction(llm_em, prefix, cfg.lambda_eval));
        }
        return col;
    };

    const Column greedy_col =
        induced(subset(greedy.portfolio.model_ids), greedy.feasible ? "greedy" : "greedy(infeasible)");
    const Column mip_col =
        induced(subset(rounded.portfolio.model_ids), rounded.feasible ? "mip" : "mip(infeasible)");
    const Column global_col = global_column();

    const fs::path out(resolve_out_dir(cfg));
    const fs::path ldir = out / "llm";
    ensure_dir(ldir);
    const std::size_t rows = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.top_k),
        std::max({greedy_col.order.size(), mip_col.order.size(), global_col.order.size()}));
    std::ostringstream csv;
    csv << "rank,greedy_llm,greedy_cum,mip_llm,mip_cum,global_llm,global_cum\n";
    auto cell = [](const Column& c, std::size_t r) {
        return r < c.order.size() ? c.order[r] + "," + fmt(c.cumulative[r]) : ",";
    };
    for (std::size_t r = 0; r < rows; ++r) {
        csv << (r + 1) << ',' << cell(greedy_col, r) << ',' << cell(mip_col, r) << ','
            << cell(global_col, r) << "\n";
    }
    write_text(ldir / "llm_portfolio.csv", csv.str());

    nlohmann::ordered_json j;
    j["lambda_select"] = cfg.lambda_select;
    j["lambda_eval"] = cfg.lambda_eval;
    j["nu"] = cfg.nu;
    j["ranking_portfolios"] = {{"greedy", selection_to_json(greedy)},
                               {"lp_rounded", selection_to_json(rounded)}};
    auto col_json = [](const Column& c) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (std::size_t r = 0; r < c.order.size(); ++r) {
            arr.push_back({{"llm", c.order[r]}, {"cumulative", c.cumulative[r]}});
        }
        return arr;
    };
    j["orderings"] = {{"greedy", col_json(greedy_col)},
                      {"mip", col_json(mip_col)},
                      {"global", col_json(global_col)}};
    write_json(ldir / "llm_portfolio.json", j);
    std::cout << "llm-portfolio: " << rows << " rows -> " << ldir.string() << "\n";
    return 0;
}

int cmd_compas(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw ValidationError("data_path is required");
    std::ifstream in(cfg.data_path);
    if (!in) throw IoError("cannot open dataset: " + cfg.data_path);
    const TabularDataset ds = load_tabular_csv(in, cfg.label_col, cfg.group_cols, cfg.drop_cols);

    if (cfg.mu_step <= 0.0 || cfg.mu_max < 0.0) throw ValidationError("bad mu grid");
    std::vector<double> mu_grid;
    for (double mu = cfg.mu_step; mu <= cfg.mu_max + 1e-9; mu += cfg.mu_step) mu_grid.push_back(mu);
    const std::vector<ClassifierModel> models =
        build_ensemble(ds, mu_grid, cfg.group_cols, cfg.seed, cfg.workers);

    const fs::path out(resolve_out_dir(cfg));
    const fs::path cdir = out / "compas";
    ensure_dir(cdir);
    write_json(cdir / "dataset_manifest.json", ds.manifest);

    std::ostringstream mcsv;
    mcsv << "name,kind,grouping,mu,bce,hard_eo_gap,converged,iterations\n";
    for (const ClassifierModel& m : models) {
        mcsv << m.name << ','
             << (m.objective.kind == ObjectiveKind::PlainBce ? "plain_bce" : "eo_regularized") << ','
             << m.objective.grouping << ',' << fmt(m.objective.mu, 1) << ',' << fmt(m.final_bce)
             << ',' << (m.objective.grouping.empty() ? "" : fmt(m.hard_eo_gap)) << ','
             << (m.fit.converged ? 1 : 0) << ',' << m.fit.iterations << "\n";
    }
    write_text(cdir / "models.csv", mcsv.str());

    const ErrorMatrix em = classifier_error_matrix(models, ds);
    write_error_matrix_file(em, (cdir / "error_matrix.bin").string());

    std::ostringstream curve;
    curve << "lambda,coverage\n";
    for (double l : cfg.lambdas()) {
        curve << fmt(l, 2) << ',' << fmt(coverage_fraction(em, em.model_ids, l)) << "\n";
    }
    write_text(cdir / "coverage_curve.csv", curve.str());

    const CoverSets cs = build_cover_sets(em, cfg.compas_lambda);
    const SelectionResult greedy = greedy_select(cs, cfg.nu);
    const SelectionResult rounded = lp_relax_and_round(cs, cfg.nu);
    nlohmann::ordered_json sel;
    sel["greedy"] = selection_to_json(greedy);
    sel["lp_rounded"] = selection_to_json(rounded);
    write_json(cdir / "selection.json", sel);
    if (!greedy.feasible) {
        std::cout << "compas: no feasible portfolio at lambda=" << fmt(cfg.compas_lambda, 2)
                  << " nu=" << fmt(cfg.nu, 2) << " (max nu " << fmt(greedy.max_achievable_nu)
                  << ")\n";
        return 3;
    }

    if (cfg.group_cols.size() >= 2) {
        const std::pair<std::string, std::string> cells{cfg.group_cols[0], cfg.group_cols[1]};
        const UncoveredProfile prof =
            uncovered_profile(em, greedy.portfolio, cfg.compas_lambda, ds, cells);
        std::ostringstream ucsv;
        write_uncovered_profile_csv(prof, ucsv);
        write_text(cdir / "uncovered.csv", ucsv.str());
        write_json(cdir / "uncovered_summary.json", prof.summary);

        const FprReport port_fpr =
            fpr_report(models, greedy.portfolio.model_ids, ds, cfg.threshold, cells);
        std::ostringstream fcsv;
        write_fpr_report_csv(port_fpr, fcsv);
        write_text(cdir / "fpr_portfolio.csv", fcsv.str());
        const std::vector<std::string> global_only = {models.front().name};
        const FprReport global_fpr = fpr_report(models, global_only, ds, cfg.threshold, cells);
        std::ostringstream gcsv;
        write_fpr_report_csv(global_fpr, gcsv);
        write_text(cdir / "fpr_global.csv", gcsv.str());
    } else {
        std::cout << "compas: fewer than 2 group columns; skipping cell reports\n";
    }
    std::cout << "compas: " << models.size() << " models, portfolio k="
              << greedy.portfolio.model_ids.size() << " -> " << cdir.string() << "\n";
    return 0;
}

int cmd_synth(const RunConfig& cfg) {
    if (cfg.mixture_path.empty()) throw ValidationError("mixture_path is required");
    std::ifstream in(cfg.mixture_path);
    if (!in) throw IoError("cannot open mixture spec: " + cfg.mixture_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad mixture JSON: ") + e.what(), 0);
    }
    const MixtureSpec spec = mixture_from_json(j);
    const SynthResult result = generate(spec);

    const fs::path out(resolve_out_dir(cfg));
    const fs::path sdir = out / "synth";
    ensure_dir(sdir);
    std::ofstream votes(sdir / "votes.jsonl", std::ios::binary);
    if (!votes) throw IoError("cannot write votes.jsonl");
    serialize_votes(result.votes, VoteFormat::JsonLines, votes);
    if (!votes) throw IoError("failed writing votes.jsonl");
    votes.close();
    write_json(sdir / "ground_truth.json", ground_truth_to_json(result.truth));
    write_json(sdir / "mixture.json", mixture_to_json(spec));
    std::cout << "synth: " << result.votes.votes.size() << " votes -> " << sdir.string() << "\n";
    return 0;
}

int cmd_report(const RunConfig& cfg) {
    const VoteSet vs = load_votes(cfg);
    std::vector<std::string> warnings;
    const std::vector<NamedRanking> rankings = fit_all_strata(vs, cfg, &warnings);
    const std::vector<Vote> decisive = decisive_slice(vs);
    if (decisive.empty()) throw ValidationError("no decisive votes to report on");
    const FamilyMap fam = load_family_map(cfg);

    const fs::path out(resolve_out_dir(cfg));
    const fs::path rdir = out / "report";
    ensure_dir(rdir);

    nlohmann::ordered_json strata = nlohmann::ordered_json::array();
    std::vector<DensityEntry> density;
    std::vector<std::vector<Vote>> slices(rankings.size());
    for (std::size_t i = 0; i < rankings.size(); ++i) {
        const NamedRanking& r = rankings[i];
        slices[i] = own_slice(r, decisive, fam);
        if (slices[i].empty() || r.ranking.scores.size() < 2) continue;
        VoteSet sub;
        sub.votes = slices[i];
        nlohmann::ordered_json row;
        row["key"] = r.name;
        row["n_votes"] = slices[i].size();
        row["cancellation_rate"] = cancellation_rate(sub);
        row["spread_elo"] = score_spread(r.ranking);
        const IngroupPerformance perf = ingroup_performance(r.ranking, slices[i]);
        row["mean_winner_prob"] = perf.mean_winner_prob;
        row["mean_log_loss"] = perf.mean_log_loss;
        row["conf_ge_0.7"] = confidence_threshold_fraction(r.ranking, slices[i], 0.7);
        strata.push_back(std::move(row));
        density.push_back({dimension_name(r.key.dim), &r.ranking, slices[i]});
    }

    nlohmann::ordered_json rep;
    {
        VoteSet all;
        all.votes = decisive;
        rep["cancellation_rate"] = cancellation_rate(all);
    }
    rep["n_votes"] = vs.votes.size();
    rep["n_decisive"] = decisive.size();
    rep["n_models"] = vs.models.size();
    rep["strata"] = std::move(strata);
    rep["warnings"] = warnings;
    write_json(rdir / "report.json", rep);

    const int bins = 20;
    const auto hist = winprob_density(density, bins);
    std::ostringstream dcsv;
    dcsv << "group,bin_lo,bin_hi,count\n";
    for (const auto& [group, counts] : hist) {
        for (int b = 0; b < bins; ++b) {
            dcsv << group << ',' << fmt(static_cast<double>(b) / bins, 2) << ','
                 << fmt(static_cast<double>(b + 1) / bins, 2) << ',' << counts[b] << "\n";
        }
    }
    write_text(rdir / "winprob_density.csv", dcsv.str());
    std::cout << "report: " << rankings.size() << " rankings -> " << rdir.string() << "\n";
    return 0;
}

}  // namespace rankfolio
