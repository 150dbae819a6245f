#include "rankfolio/bt.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rankfolio/common.hpp"

namespace rankfolio {

PairWeights compute_weights(std::span<const Vote> slice, double tie_weight) {
    if (tie_weight < 0.0) throw ValidationError("tie_weight must be >= 0");
    PairWeights pw;
    std::map<std::pair<std::string, std::string>, std::int64_t> pair_count;
    for (const Vote& v : slice) {
        if (v.excluded()) continue;
        if (v.model_a == v.model_b) {
            throw ValidationError("vote " + std::to_string(v.id) + " compares a model to itself");
        }
        pair_count[std::minmax(v.model_a, v.model_b)] += 1;
        ++pw.n_votes;
    }
    if (pw.n_votes == 0) return pw;
    for (const auto& [pair, count] : pair_count) {
        pw.pair_freq[pair] = static_cast<double>(count) / static_cast<double>(pw.n_votes);
    }
    for (const Vote& v : slice) {
        if (v.excluded()) continue;
        const double inv_p = 1.0 / pw.pair_freq.at(std::minmax(v.model_a, v.model_b));
        if (v.outcome == Outcome::Tie) {
            pw.weights[{v.model_a, v.model_b}] += tie_weight * inv_p;
            pw.weights[{v.model_b, v.model_a}] += tie_weight * inv_p;
        } else {
            pw.weights[{v.winner(), v.loser()}] += inv_p;
        }
    }
    return pw;
}

namespace {

// Gradient of the weighted log-likelihood at theta; also returns the value.
// d/d theta_m = sum_b w_{mb} sigma(theta_b - theta_m) - sum_a w_{am} sigma(theta_m - theta_a)
double value_and_gradient(const std::vector<double>& theta,
                          const std::vector<std::pair<std::pair<int, int>, double>>& edges,
                          std::vector<double>& grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double ll = 0.0;
    for (const auto& [pair, w] : edges) {
        const auto [win, lose] = pair;
        const double d = theta[win] - theta[lose];
        ll += w * log_sigmoid(d);
        const double s = sigmoid(-d);  // 1 - Pr(win beats lose)
        grad[win] += w * s;
        grad[lose] -= w * s;
    }
    return ll;
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

BtRanking fit_bt(const PairWeights& pw, const FitOptions& opts) {
    if (opts.tol <= 0.0 || opts.max_iter < 1 || opts.theta_max <= 0.0) {
        throw ValidationError("bad fit options");
    }
    // Index models deterministically (map order = lexicographic).
    std::map<std::string, int> index;
    for (const auto& [pair, w] : pw.weights) {
        index.emplace(pair.first, 0);
        index.emplace(pair.second, 0);
    }
    if (index.empty()) throw ValidationError("cannot fit a ranking from zero weighted votes");
    int next = 0;
    for (auto& [name, idx] : index) idx = next++;
    const int n = next;

    std::vector<std::pair<std::pair<int, int>, double>> edges;
    edges.reserve(pw.weights.size());
    for (const auto& [pair, w] : pw.weights) {
        if (w <= 0.0) continue;
        edges.push_back({{index.at(pair.first), index.at(pair.second)}, w});
    }

    std::vector<double> theta(n, 0.0), grad(n, 0.0), trial(n, 0.0), trial_grad(n, 0.0);
    double ll = value_and_gradient(theta, edges, grad);
    double step = 1.0;
    BtRanking out;
    auto clamp_into = [&](const std::vector<double>& base, double s, std::vector<double>& dst) {
        bool hit = false;
        for (int i = 0; i < n; ++i) {
            const double v = base[i] + s * grad[i];
            dst[i] = std::clamp(v, -opts.theta_max, opts.theta_max);
            hit = hit || dst[i] != v;
        }
        return hit;
    };

    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const double gnorm = inf_norm(grad);
        if (gnorm <= opts.tol) {
            out.fit.converged = true;
            break;
        }
        // Backtrack until the ascent step improves the likelihood, then let
        // the accepted step double on the next iteration.  Near the optimum
        // the likelihood plateaus below double granularity while the gradient
        // is still computable exactly, so a step that holds the value (within
        // rounding slack) but shrinks the gradient also counts as progress.
        bool moved = false;
        const double slack = 1e-12 * (std::abs(ll) + 1.0);
        for (int half = 0; half < 60; ++half) {
            const bool hit = clamp_into(theta, step, trial);
            const double trial_ll = value_and_gradient(trial, edges, trial_grad);
            if (trial_ll > ll ||
                (trial_ll >= ll - slack && inf_norm(trial_grad) < gnorm)) {
                theta.swap(trial);
                grad.swap(trial_grad);
                ll = trial_ll;
                out.fit.clamped = out.fit.clamped || hit;
                step *= 2.0;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;  // step underflowed: numerically stationary
    }
    out.fit.iterations = iter;
    out.fit.final_grad_norm = inf_norm(grad);
    if (out.fit.clamped) {
        // A binding box means the true MLE diverges; report non-convergence.
        bool binding = false;
        for (double t : theta) binding = binding || std::abs(t) >= opts.theta_max;
        out.fit.clamped = binding;
        if (binding) out.fit.converged = false;
    }

    double mean = 0.0;
    for (double t : theta) mean += t;
    mean /= n;
    for (const auto& [name, idx] : index) {
        const double s = theta[idx] - mean;
        out.scores[name] = s;
        out.elo[name] = 400.0 * s + 1000.0;
    }
    return out;
}

double win_prob(const BtRanking& r, const std::string& a, const std::string& b) {
    const auto sa = r.score(a), sb = r.score(b);
    if (!sa) throw ValidationError("ranking does not score model '" + a + "'");
    if (!sb) throw ValidationError("ranking does not score model '" + b + "'");
    return sigmoid(*sa - *sb);
}

double elo_win_prob(double delta_elo) { return sigmoid(delta_elo / 400.0); }

double log_likelihood(const std::map<std::string, double>& theta, const PairWeights& pw) {
    double ll = 0.0;
    for (const auto& [pair, w] : pw.weights) {
        auto wi = theta.find(pair.first), li = theta.find(pair.second);
        if (wi == theta.end() || li == theta.end()) {
            throw ValidationError("log_likelihood: theta is missing a weighted model");
        }
        ll += w * log_sigmoid(wi->second - li->second);
    }
    return ll;
}

nlohmann::ordered_json ranking_to_json(const StratumKey& key, const BtRanking& r,
                                       std::int64_t n_votes) {
    nlohmann::ordered_json j;
    j["stratum"] = key.display();
    j["dimension"] = dimension_name(key.dim);
    j["values"] = key.values;
    j["n_votes"] = n_votes;
    nlohmann::ordered_json scores = nlohmann::ordered_json::object();
    nlohmann::ordered_json elo = nlohmann::ordered_json::object();
    for (const auto& [model, s] : r.scores) {
        scores[model] = s;
        elo[model] = r.elo.at(model);
    }
    j["scores"] = std::move(scores);
    j["elo"] = std::move(elo);
    j["fit"] = {{"iterations", r.fit.iterations},
                {"final_grad_norm", r.fit.final_grad_norm},
                {"converged", r.fit.converged},
                {"clamped", r.fit.clamped}};
    return j;
}

NamedRanking ranking_from_json(const nlohmann::json& j) {
    NamedRanking nr;
    try {
        nr.name = j.at("stratum").get<std::string>();
        nr.key.dim = dimension_from_name(j.at("dimension").get<std::string>());
        nr.key.values = j.at("values").get<std::vector<std::string>>();
        nr.n_votes = j.at("n_votes").get<std::int64_t>();
        for (const auto& [model, s] : j.at("scores").items()) {
            nr.ranking.scores[model] = s.get<double>();
        }
        if (j.contains("elo")) {
            for (const auto& [model, e] : j.at("elo").items()) {
                nr.ranking.elo[model] = e.get<double>();
            }
        } else {
            for (const auto& [model, s] : nr.ranking.scores) {
                nr.ranking.elo[model] = 400.0 * s + 1000.0;
            }
        }
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            nr.ranking.fit.iterations = f.value("iterations", 0);
            nr.ranking.fit.final_grad_norm = f.value("final_grad_norm", 0.0);
            nr.ranking.fit.converged = f.value("converged", false);
            nr.ranking.fit.clamped = f.value("clamped", false);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad ranking JSON: ") + e.what());
    }
    return nr;
}

}  // namespace rankfolio
