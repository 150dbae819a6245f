#include "rankfolio/fair.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

namespace rankfolio {

namespace {

std::vector<std::string> split_row(const std::string& line, std::int64_t lineno) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", lineno);
    fields.push_back(cur);
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

TabularDataset load_tabular_csv(std::istream& in, const std::string& label_col,
                                const std::vector<std::string>& group_cols,
                                const std::vector<std::string>& drop_cols) {
    if (!in) throw IoError("dataset stream is not readable");
    TabularDataset ds;
    std::string line;
    std::int64_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("dataset is empty", 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ds.raw_columns = split_row(line, lineno);
    std::map<std::string, std::size_t> col_index;
    for (std::size_t c = 0; c < ds.raw_columns.size(); ++c) {
        if (!col_index.emplace(ds.raw_columns[c], c).second) {
            throw ParseError("duplicate column: " + ds.raw_columns[c], lineno);
        }
    }
    auto require = [&](const std::string& name) {
        const auto it = col_index.find(name);
        if (it == col_index.end()) throw ValidationError("dataset lacks column '" + name + "'");
        return it->second;
    };
    const std::size_t label_at = require(label_col);
    std::map<std::string, std::size_t> group_at;
    for (const std::string& g : group_cols) group_at[g] = require(g);
    std::set<std::string> skip(drop_cols.begin(), drop_cols.end());
    for (const std::string& d : drop_cols) require(d);
    skip.insert(label_col);
    for (const std::string& g : group_cols) skip.insert(g);

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_row(line, lineno);
        if (fields.size() != ds.raw_columns.size()) {
            throw ParseError("expected " + std::to_string(ds.raw_columns.size()) + " columns, got " +
                                 std::to_string(fields.size()),
                             lineno);
        }
        const std::string& lab = fields[label_at];
        if (lab != "0" && lab != "1") {
            throw ValidationError("label must be 0 or 1, got '" + lab + "' (line " +
                                  std::to_string(lineno) + ")");
        }
        ds.labels.push_back(lab == "1" ? 1 : 0);
        for (const auto& [g, at] : group_at) ds.groups[g].push_back(fields[at]);
        ds.raw_rows.push_back(std::move(fields));
    }
    if (ds.raw_rows.empty()) throw ValidationError("dataset has no data rows");

    // Feature columns: numeric iff every value parses as a number.
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < ds.raw_columns.size(); ++c) {
        if (!skip.count(ds.raw_columns[c])) feature_cols.push_back(c);
    }
    nlohmann::ordered_json numeric_manifest = nlohmann::ordered_json::object();
    nlohmann::ordered_json categorical_manifest = nlohmann::ordered_json::object();
    struct Encoder {
        std::size_t col;
        bool numeric;
        double mean = 0.0, sd = 0.0;
        std::map<std::string, std::size_t> levels;  // categorical value -> slot
    };
    std::vector<Encoder> encoders;
    for (std::size_t c : feature_cols) {
        Encoder enc;
        enc.col = c;
        enc.numeric = true;
        double v = 0.0;
        for (const auto& row : ds.raw_rows) {
            if (!parse_double(row[c], v)) {
                enc.numeric = false;
                break;
            }
        }
        const std::string& name = ds.raw_columns[c];
        if (enc.numeric) {
            double sum = 0.0, sq = 0.0;
            for (const auto& row : ds.raw_rows) {
                parse_double(row[c], v);
                sum += v;
                sq += v * v;
            }
            const double n = static_cast<double>(ds.raw_rows.size());
            enc.mean = sum / n;
            enc.sd = std::sqrt(std::max(0.0, sq / n - enc.mean * enc.mean));
            ds.feature_names.push_back(name);
            numeric_manifest[name] = {{"mean", enc.mean}, {"sd", enc.sd}};
        } else {
            for (const auto& row : ds.raw_rows) enc.levels.emplace(row[c], 0);
            nlohmann::ordered_json levels = nlohmann::ordered_json::array();
            for (const auto& [value, at] : enc.levels) {
                ds.feature_names.push_back(name + "=" + value);
                levels.push_back(value);
            }
            categorical_manifest[name] = std::move(levels);
        }
        encoders.push_back(std::move(enc));
    }
    ds.rows.assign(ds.raw_rows.size(), std::vector<double>(ds.feature_names.size(), 0.0));
    {
        std::size_t base = 0;
        for (Encoder& enc : encoders) {
            if (enc.numeric) {
                for (std::size_t i = 0; i < ds.raw_rows.size(); ++i) {
                    double v = 0.0;
                    parse_double(ds.raw_rows[i][enc.col], v);
                    ds.rows[i][base] = enc.sd > 0.0 ? (v - enc.mean) / enc.sd : 0.0;
                }
                base += 1;
            } else {
                for (auto& [value, at] : enc.levels) at = base++;
                for (std::size_t i = 0; i < ds.raw_rows.size(); ++i) {
                    ds.rows[i][enc.levels.at(ds.raw_rows[i][enc.col])] = 1.0;
                }
            }
        }
    }

    ds.manifest["label"] = label_col;
    ds.manifest["groups"] = group_cols;
    ds.manifest["dropped"] = drop_cols;
    ds.manifest["n_rows"] = ds.raw_rows.size();
    ds.manifest["numeric"] = std::move(numeric_manifest);     // population mean/sd
    ds.manifest["categorical"] = std::move(categorical_manifest);
    ds.manifest["feature_names"] = ds.feature_names;
    return ds;
}

double ClassifierModel::predict(std::span<const double> x) const {
    double z = bias;
    for (std::size_t k = 0; k < weights.size() && k < x.size(); ++k) z += weights[k] * x[k];
    return sigmoid(z);
}

double eo_gap(std::span<const double> preds, std::span<const int> labels,
              std::span<const std::string> groups, double threshold,
              std::vector<std::string>* warnings) {
    if (preds.size() != labels.size() || preds.size() != groups.size()) {
        throw ValidationError("eo_gap inputs must be the same length");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must be in (0, 1)");
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };
    struct Counts {
        std::int64_t tp = 0, fn = 0, fp = 0, tn = 0;
    };
    std::map<std::string, Counts> by_group;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        Counts& c = by_group[groups[i]];
        const bool hard = preds[i] >= threshold;
        if (labels[i] == 1) (hard ? c.tp : c.fn) += 1;
        else (hard ? c.fp : c.tn) += 1;
    }
    if (by_group.size() < 2) {
        warn("eo_gap: fewer than 2 groups; gap is 0 by convention");
        return 0.0;
    }
    double gap = 0.0;
    for (const bool positive_term : {true, false}) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        int participating = 0;
        for (const auto& [g, c] : by_group) {
            const std::int64_t denom = positive_term ? c.tp + c.fn : c.fp + c.tn;
            if (denom == 0) {
                warn(std::string("eo_gap: group '") + g + "' has no " +
                     (positive_term ? "positive" : "negative") + " rows; term skipped");
                continue;
            }
            const double rate = static_cast<double>(positive_term ? c.tp : c.fp) /
                                static_cast<double>(denom);
            lo = std::min(lo, rate);
            hi = std::max(hi, rate);
            ++participating;
        }
        if (participating >= 2) gap += hi - lo;
    }
    return gap;
}

namespace {

struct EoSlices {
    // by_label[y] lists (rows...) per group that has label-y rows.
    std::vector<std::vector<std::size_t>> by_label[2];
};

EoSlices make_slices(const TabularDataset& ds, const std::string& grouping) {
    const auto it = ds.groups.find(grouping);
    if (it == ds.groups.end()) throw ValidationError("dataset lacks grouping '" + grouping + "'");
    std::map<std::string, std::size_t> ids;
    for (const std::string& g : it->second) ids.emplace(g, 0);
    std::size_t next = 0;
    for (auto& [g, id] : ids) id = next++;
    EoSlices s;
    s.by_label[0].resize(next);
    s.by_label[1].resize(next);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        s.by_label[ds.labels[i]][ids.at(it->second[i])].push_back(i);
    }
    for (int y : {0, 1}) {
        auto& v = s.by_label[y];
        v.erase(std::remove_if(v.begin(), v.end(),
                               [](const std::vector<std::size_t>& rows) { return rows.empty(); }),
                v.end());
    }
    return s;
}

// Loss and gradient of BCE + mu * EO_soft at the given parameters
// (weights.., bias).  EO_soft replaces hard rates with label-conditioned
// group means of p and max/min with their softmax-smoothed counterparts.
double loss_and_gradient(const TabularDataset& ds, const EoSlices* slices, double mu, double tau,
                         const std::vector<double>& params, std::vector<double>& grad) {
    const std::size_t n = ds.n_rows(), nf = ds.feature_names.size();
    std::vector<double> p(n), dz(n);
    double bce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = params[nf];
        const auto& x = ds.rows[i];
        for (std::size_t k = 0; k < nf; ++k) z += params[k] * x[k];
        p[i] = sigmoid(z);
        bce -= ds.labels[i] ? log_sigmoid(z) : log_sigmoid(-z);
        dz[i] = (p[i] - static_cast<double>(ds.labels[i])) / static_cast<double>(n);
    }
    bce /= static_cast<double>(n);

    double penalty = 0.0;
    if (slices && mu > 0.0) {
        for (int y : {0, 1}) {
            const auto& cells = slices->by_label[y];
            if (cells.size() < 2) continue;
            std::vector<double> m(cells.size());
            for (std::size_t g = 0; g < cells.size(); ++g) {
                double sum = 0.0;
                for (std::size_t i : cells[g]) sum += p[i];
                m[g] = sum / static_cast<double>(cells[g].size());
            }
            // softmax-smoothed max/min: f = sum m_g a_g, a ~ exp(+-tau m)
            const double mmax = *std::max_element(m.begin(), m.end());
            const double mmin = *std::min_element(m.begin(), m.end());
            std::vector<double> a(m.size()), b(m.size());
            double za = 0.0, zb = 0.0;
            for (std::size_t g = 0; g < m.size(); ++g) {
                a[g] = std::exp(tau * (m[g] - mmax));
                b[g] = std::exp(-tau * (m[g] - mmin));
                za += a[g];
                zb += b[g];
            }
            double fmax = 0.0, fmin = 0.0;
            for (std::size_t g = 0; g < m.size(); ++g) {
                a[g] /= za;
                b[g] /= zb;
                fmax += m[g] * a[g];
                fmin += m[g] * b[g];
            }
            penalty += fmax - fmin;
            for (std::size_t g = 0; g < m.size(); ++g) {
                const double dgap_dm = a[g] * (1.0 + tau * (m[g] - fmax)) -
                                       b[g] * (1.0 - tau * (m[g] - fmin));
                const double scale = mu * dgap_dm / static_cast<double>(cells[g].size());
                for (std::size_t i : cells[g]) dz[i] += scale * p[i] * (1.0 - p[i]);
            }
        }
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = ds.rows[i];
        for (std::size_t k = 0; k < nf; ++k) grad[k] += dz[i] * x[k];
        grad[nf] += dz[i];
    }
    return bce + mu * penalty;
}

double bce_of(const TabularDataset& ds, const ClassifierModel& model) {
    double bce = 0.0;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const double p = model.predict(ds.rows[i]);
        bce -= ds.labels[i] ? std::log(p) : std::log1p(-p);
    }
    return bce / static_cast<double>(ds.n_rows());
}

std::string model_name(const TrainObjective& o) {
    if (o.kind == ObjectiveKind::PlainBce) return "bce";
    char buf[64];
    if (o.mu == std::round(o.mu) && o.mu >= 0 && o.mu < 1000) {
        std::snprintf(buf, sizeof(buf), "%s_mu%03d", o.grouping.c_str(),
                      static_cast<int>(std::round(o.mu)));
    } else {
        std::snprintf(buf, sizeof(buf), "%s_mu%g", o.grouping.c_str(), o.mu);
    }
    return buf;
}

}  // namespace

ClassifierModel train_classifier(const TabularDataset& ds, const TrainObjective& objective,
                                 std::uint64_t seed, const TrainOptions& opts) {
    if (ds.n_rows() == 0) throw ValidationError("cannot train on an empty dataset");
    if (objective.mu < 0.0) throw ValidationError("mu must be >= 0");
    if (opts.tol <= 0.0 || opts.max_iter < 1 || opts.weight_clamp <= 0.0 || opts.tau <= 0.0) {
        throw ValidationError("bad training options");
    }
    EoSlices slices;
    const bool regularized = objective.kind == ObjectiveKind::EoRegularized;
    if (regularized) {
        if (objective.grouping.empty()) throw ValidationError("EoRegularized needs a grouping");
        slices = make_slices(ds, objective.grouping);
    }

    const std::size_t nf = ds.feature_names.size();
    std::vector<double> params(nf + 1), grad(nf + 1), trial(nf + 1), trial_grad(nf + 1);
    Rng rng(seed);
    for (double& w : params) w = rng.gaussian(0.0, opts.init_sd);

    const double mu = regularized ? objective.mu : 0.0;
    const EoSlices* sl = regularized ? &slices : nullptr;
    double loss = loss_and_gradient(ds, sl, mu, opts.tau, params, grad);
    double step = 1.0;
    ClassifierModel model;
    model.objective = objective;
    model.name = model_name(objective);

    auto inf_norm = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        if (inf_norm(grad) <= opts.tol) {
            model.fit.converged = true;
            break;
        }
        bool moved = false;
        for (int half = 0; half < 60; ++half) {
            bool hit = false;
            for (std::size_t k = 0; k < params.size(); ++k) {
                const double v = params[k] - step * grad[k];  // descent
                trial[k] = std::clamp(v, -opts.weight_clamp, opts.weight_clamp);
                hit = hit || trial[k] != v;
            }
            const double trial_loss = loss_and_gradient(ds, sl, mu, opts.tau, trial, trial_grad);
            if (trial_loss < loss) {
                params.swap(trial);
                grad.swap(trial_grad);
                loss = trial_loss;
                model.fit.clamped = model.fit.clamped || hit;
                step *= 2.0;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    model.fit.iterations = iter;
    model.fit.final_grad_norm = inf_norm(grad);
    if (model.fit.clamped) {
        bool binding = false;
        for (double w : params) binding = binding || std::abs(w) >= opts.weight_clamp;
        model.fit.clamped = binding;
    }

    model.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(nf));
    model.bias = params[nf];
    model.final_bce = bce_of(ds, model);
    if (!objective.grouping.empty()) {
        std::vector<double> preds(ds.n_rows());
        for (std::size_t i = 0; i < ds.n_rows(); ++i) preds[i] = model.predict(ds.rows[i]);
        model.hard_eo_gap = eo_gap(preds, ds.labels, ds.groups.at(objective.grouping));
    }
    return model;
}

std::vector<ClassifierModel> build_ensemble(const TabularDataset& ds,
                                            const std::vector<double>& mu_grid,
                                            const std::vector<std::string>& groupings,
                                            std::uint64_t seed, unsigned workers,
                                            const TrainOptions& opts) {
    std::vector<TrainObjective> jobs;
    jobs.push_back({ObjectiveKind::PlainBce, 0.0, ""});
    for (const std::string& g : groupings) {
        if (!ds.groups.count(g)) throw ValidationError("dataset lacks grouping '" + g + "'");
        for (double mu : mu_grid) jobs.push_back({ObjectiveKind::EoRegularized, mu, g});
    }
    std::vector<ClassifierModel> models(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            models[j] = train_classifier(ds, jobs[j], seed + j, opts);
        }
    });
    return models;
}

std::vector<double> default_mu_grid() {
    std::vector<double> grid;
    for (int mu = 10; mu <= 300; mu += 10) grid.push_back(static_cast<double>(mu));
    return grid;
}

ErrorMatrix classifier_error_matrix(std::span<const ClassifierModel> models,
                                    const TabularDataset& ds) {
    if (models.empty()) throw ValidationError("classifier_error_matrix needs models");
    ErrorMatrix em;
    for (const ClassifierModel& m : models) em.model_ids.push_back(m.name);
    em.item_ids.resize(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) em.item_ids[i] = static_cast<std::int64_t>(i);
    em.err.assign(ds.n_rows() * models.size(), 0.0f);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        for (std::size_t j = 0; j < models.size(); ++j) {
            const double h = models[j].predict(ds.rows[i]);
            em.set(i, j, static_cast<float>(std::abs(h - static_cast<double>(ds.labels[i]))));
        }
    }
    return em;
}

namespace {

struct Cells {
    std::vector<std::string> labels;
    std::vector<std::size_t> row_cell;
};

// Cell values of one grouping, collapsed to the two most frequent plus
// "Other" when the grouping has more than three levels (the Table-7 shape).
std::map<std::string, std::string> collapse_levels(const std::vector<std::string>& values) {
    std::map<std::string, std::int64_t> counts;
    for (const std::string& v : values) ++counts[v];
    std::map<std::string, std::string> mapping;
    if (counts.size() <= 3) {
        for (const auto& [v, c] : counts) mapping[v] = v;
        return mapping;
    }
    std::vector<std::pair<std::string, std::int64_t>> by_freq(counts.begin(), counts.end());
    std::stable_sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (std::size_t i = 0; i < by_freq.size(); ++i) {
        mapping[by_freq[i].first] = i < 2 ? by_freq[i].first : "Other";
    }
    return mapping;
}

Cells make_cells(const TabularDataset& ds, const std::pair<std::string, std::string>& groupings) {
    for (const std::string& g : {groupings.first, groupings.second}) {
        if (!ds.groups.count(g)) throw ValidationError("dataset lacks grouping '" + g + "'");
    }
    const auto& g1 = ds.groups.at(groupings.first);
    const auto& g2 = ds.groups.at(groupings.second);
    const auto map1 = collapse_levels(g1);
    const auto map2 = collapse_levels(g2);
    std::map<std::string, std::size_t> cell_id;
    std::set<std::string> v1, v2;
    for (const auto& [raw, mapped] : map1) v1.insert(mapped);
    for (const auto& [raw, mapped] : map2) v2.insert(mapped);
    Cells cells;
    for (const std::string& a : v1) {
        for (const std::string& b : v2) {
            cell_id[a + "|" + b] = cells.labels.size();
            cells.labels.push_back(a + "|" + b);
        }
    }
    cells.row_cell.resize(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        cells.row_cell[i] = cell_id.at(map1.at(g1[i]) + "|" + map2.at(g2[i]));
    }
    return cells;
}

// Minimum-error assignment of row i to a portfolio column; returns the
// position within `cols`, or npos when nothing covers at lambda.
std::size_t assign_row(const ErrorMatrix& em, const std::vector<std::size_t>& cols, std::size_t i,
                       double lambda) {
    std::size_t best = std::string::npos;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const float v = em.at(i, cols[c]);
        if (ErrorMatrix::is_missing(v)) continue;
        if (static_cast<double>(v) < best_err) {
            best_err = static_cast<double>(v);
            best = c;
        }
    }
    if (best == std::string::npos || !covers(best_err, lambda)) return std::string::npos;
    return best;
}

std::vector<std::size_t> portfolio_columns(const ErrorMatrix& em,
                                           const std::vector<std::string>& ids) {
    std::vector<std::size_t> cols;
    for (const std::string& id : ids) {
        const auto it = std::find(em.model_ids.begin(), em.model_ids.end(), id);
        if (it == em.model_ids.end()) throw ValidationError("portfolio names unknown model: " + id);
        cols.push_back(static_cast<std::size_t>(it - em.model_ids.begin()));
    }
    return cols;
}

}  // namespace

UncoveredProfile uncovered_profile(const ErrorMatrix& em, const Portfolio& portfolio,
                                   double lambda, const TabularDataset& ds,
                                   const std::pair<std::string, std::string>& cell_groupings) {
    if (em.n_items() != ds.n_rows()) {
        throw ValidationError("error matrix rows do not match the dataset");
    }
    const Cells cells = make_cells(ds, cell_groupings);
    const std::vector<std::size_t> cols = portfolio_columns(em, portfolio.model_ids);

    UncoveredProfile prof;
    prof.cell_labels = cells.labels;
    std::vector<std::vector<std::int64_t>> counts(cols.size() + 1,
                                                  std::vector<std::int64_t>(cells.labels.size(), 0));
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const std::size_t a = assign_row(em, cols, i, lambda);
        if (a == std::string::npos) {
            counts.back()[cells.row_cell[i]] += 1;
            prof.uncovered_rows.push_back(i);
        } else {
            counts[a][cells.row_cell[i]] += 1;
        }
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
        prof.assignment_counts.push_back({portfolio.model_ids[c], std::move(counts[c])});
    }
    prof.assignment_counts.push_back({"No model", std::move(counts.back())});

    // Numeric means of the uncovered cohort plus its label rate.
    nlohmann::ordered_json means = nlohmann::ordered_json::object();
    if (ds.manifest.contains("numeric")) {
        for (const auto& [col, stats] : ds.manifest.at("numeric").items()) {
            const auto it = std::find(ds.raw_columns.begin(), ds.raw_columns.end(), col);
            if (it == ds.raw_columns.end()) continue;
            const std::size_t at = static_cast<std::size_t>(it - ds.raw_columns.begin());
            double sum = 0.0;
            for (std::size_t i : prof.uncovered_rows) {
                double v = 0.0;
                parse_double(ds.raw_rows[i][at], v);
                sum += v;
            }
            means[col] = prof.uncovered_rows.empty()
                             ? 0.0
                             : sum / static_cast<double>(prof.uncovered_rows.size());
        }
    }
    std::int64_t positives = 0;
    for (std::size_t i : prof.uncovered_rows) positives += ds.labels[i];
    prof.summary["n_uncovered"] = prof.uncovered_rows.size();
    prof.summary["fraction_uncovered"] =
        static_cast<double>(prof.uncovered_rows.size()) / static_cast<double>(ds.n_rows());
    prof.summary["label_rate"] = prof.uncovered_rows.empty()
                                     ? 0.0
                                     : static_cast<double>(positives) /
                                           static_cast<double>(prof.uncovered_rows.size());
    prof.summary["numeric_means"] = std::move(means);
    return prof;
}

FprReport fpr_report(std::span<const ClassifierModel> models,
                     std::span<const std::string> portfolio_ids, const TabularDataset& ds,
                     double threshold, const std::pair<std::string, std::string>& cell_groupings) {
    if (portfolio_ids.empty()) throw ValidationError("fpr_report needs a non-empty portfolio");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must be in (0, 1)");
    std::vector<const ClassifierModel*> chosen;
    for (const std::string& id : portfolio_ids) {
        const ClassifierModel* found = nullptr;
        for (const ClassifierModel& m : models) {
            if (m.name == id) {
                found = &m;
                break;
            }
        }
        if (!found) throw ValidationError("portfolio names unknown model: " + id);
        chosen.push_back(found);
    }
    const Cells cells = make_cells(ds, cell_groupings);

    FprReport rep;
    rep.cell_labels = cells.labels;
    std::vector<std::int64_t> neg(cells.labels.size(), 0), fp(cells.labels.size(), 0);
    std::int64_t total_neg = 0, total_fp = 0;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        // Each individual is scored by the portfolio model with the smallest
        // error on them (ties: earlier portfolio position).
        const ClassifierModel* best = chosen.front();
        double best_err = std::numeric_limits<double>::infinity();
        for (const ClassifierModel* m : chosen) {
            const double err = std::abs(m->predict(ds.rows[i]) - static_cast<double>(ds.labels[i]));
            if (err < best_err) {
                best_err = err;
                best = m;
            }
        }
        if (ds.labels[i] != 0) continue;
        const std::size_t cell = cells.row_cell[i];
        ++neg[cell];
        ++total_neg;
        if (best->predict(ds.rows[i]) >= threshold) {
            ++fp[cell];
            ++total_fp;
        }
    }
    auto round3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
    rep.overall = total_neg ? round3(static_cast<double>(total_fp) / static_cast<double>(total_neg))
                            : 0.0;
    rep.cell_negatives.assign(neg.begin(), neg.end());
    for (std::size_t c = 0; c < cells.labels.size(); ++c) {
        if (neg[c] == 0) rep.cell_fpr.push_back(std::nullopt);
        else rep.cell_fpr.push_back(round3(static_cast<double>(fp[c]) / static_cast<double>(neg[c])));
    }
    return rep;
}

void write_uncovered_profile_csv(const UncoveredProfile& p, std::ostream& out) {
    out << "model";
    for (const std::string& cell : p.cell_labels) out << ',' << cell;
    out << ",total\n";
    for (const auto& [model, counts] : p.assignment_counts) {
        out << model;
        std::int64_t total = 0;
        for (std::int64_t c : counts) {
            out << ',' << c;
            total += c;
        }
        out << ',' << total << "\n";
    }
}

void write_fpr_report_csv(const FprReport& r, std::ostream& out) {
    out << "cell,fpr,n_negatives\n";
    char buf[32];
    std::int64_t total_neg = 0;
    for (std::int64_t n : r.cell_negatives) total_neg += n;
    std::snprintf(buf, sizeof(buf), "%.3f", r.overall);
    out << "overall," << buf << ',' << total_neg << "\n";
    for (std::size_t c = 0; c < r.cell_labels.size(); ++c) {
        out << r.cell_labels[c] << ',';
        if (r.cell_fpr[c]) {
            std::snprintf(buf, sizeof(buf), "%.3f", *r.cell_fpr[c]);
            out << buf;
        }
        out << ',' << r.cell_negatives[c] << "\n";
    }
}

}  // namespace rankfolio
