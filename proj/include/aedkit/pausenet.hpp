#pragma once

// Two-state moving / exploratory-pausing classifier: stratified splitting,
// SMOTE oversampling of the minority class, an RBF-kernel SVM trained by
// sequential minimal (pairwise) optimization, prediction, persistence, and
// precision/recall/F1 evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aedkit/common.hpp"
#include "aedkit/dsp.hpp"
#include "aedkit/rng.hpp"

namespace aedkit::pausenet {

using dsp::FeatureWindow;
using nlohmann::json;
using sensorlog::ActivityLabel;

// pausing maps to +1, moving to -1; a decision value of exactly 0 predicts
// moving (the majority prior).
inline int label_sign(ActivityLabel l) { return l == ActivityLabel::pausing ? +1 : -1; }

struct Scaler {
    std::vector<double> mean;
    std::vector<double> std; // zero-variance features get std 1 (feature inert)

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> z(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / std[i];
        return z;
    }
};

struct PausingModel {
    Scaler scaler;
    double gamma = 0.0; // RBF: k(a,b) = exp(-gamma * |a-b|^2)
    double c = 1.0;
    std::vector<std::vector<double>> support_vectors; // scaled space
    std::vector<double> coeffs;                       // alpha_i * y_i, |.| <= C
    double bias = 0.0;
    std::uint64_t seed = 0;
    std::int64_t trained_at_ms = 0;
    std::int64_t n_moving = 0, n_pausing = 0; // training-set class counts

    std::size_t dim() const { return scaler.mean.size(); }
};

struct TrainConfig {
    double c = 1.0;
    std::optional<double> gamma;   // default: 1 / (dim * mean scaled-feature variance)
    double kkt_tolerance = 1e-3;
    double alpha_epsilon = 1e-12;
    int max_epochs = 2000;         // cap on outer SMO passes
    std::uint64_t seed = 1;
    std::int64_t trained_at_ms = 0; // caller-supplied so model files stay reproducible
};

// ---------------------------------------------------------------------------
// Stratified split
// ---------------------------------------------------------------------------

struct Split {
    std::vector<FeatureWindow> train;
    std::vector<FeatureWindow> eval;
};

// Per-class shuffle then take round(frac * n) for training (ties at .5
// round down), preserving class proportions within one segment. Output
// keeps the input's relative order; the seed only decides the membership.
inline Split stratified_split(std::span<const FeatureWindow> windows, double train_frac,
                              std::uint64_t seed) {
    std::vector<std::size_t> moving, pausing;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (!windows[i].label) throw ValidationError("stratified_split: unlabeled window");
        (*windows[i].label == ActivityLabel::moving ? moving : pausing).push_back(i);
    }
    if (moving.size() < 2 || pausing.size() < 2)
        throw ValidationError("stratified_split: each class needs at least 2 windows");

    std::vector<bool> in_train(windows.size(), false);
    Rng rng(seed);
    for (auto* cls : {&moving, &pausing}) {
        const double want = train_frac * static_cast<double>(cls->size());
        std::size_t take = static_cast<std::size_t>(std::floor(want + 0.5));
        if (want - std::floor(want) == 0.5) take = static_cast<std::size_t>(want); // half rounds down
        take = std::min(take, cls->size());
        rng.shuffle(*cls);
        for (std::size_t k = 0; k < take; ++k) in_train[(*cls)[k]] = true;
    }
    Split out;
    for (std::size_t i = 0; i < windows.size(); ++i)
        (in_train[i] ? out.train : out.eval).push_back(windows[i]);
    return out;
}

// ---------------------------------------------------------------------------
// SMOTE
// ---------------------------------------------------------------------------

struct SmoteResult {
    std::vector<FeatureWindow> windows; // originals (unchanged) + synthetics
    std::vector<std::string> warnings;
};

// Oversample the minority class to parity with the majority. Each synthetic
// point is x + u * (x_nn - x) with u ~ U[0,1) and x_nn one of x's k nearest
// same-class neighbours (Euclidean on raw features). Bases cycle through
// the minority points in input order.
inline SmoteResult smote(std::span<const FeatureWindow> train, int k, std::uint64_t seed) {
    SmoteResult res;
    res.windows.assign(train.begin(), train.end());

    std::vector<std::size_t> moving, pausing;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (!train[i].label) throw ValidationError("smote: unlabeled window");
        (*train[i].label == ActivityLabel::moving ? moving : pausing).push_back(i);
    }
    const bool pausing_minority = pausing.size() <= moving.size();
    const auto& minority = pausing_minority ? pausing : moving;
    const auto& majority = pausing_minority ? moving : pausing;
    if (minority.size() == majority.size() || minority.empty()) return res;

    int kk = k;
    if (static_cast<std::size_t>(kk) + 1 > minority.size()) {
        kk = static_cast<int>(minority.size()) - 1;
        res.warnings.push_back("smote: minority class of " + std::to_string(minority.size()) +
                               " too small for k=" + std::to_string(k) + ", reduced to k=" +
                               std::to_string(kk));
    }

    // Brute-force k-NN inside the minority class; ties break on index.
    const std::size_t nmin = minority.size();
    std::vector<std::vector<std::size_t>> neighbours(nmin);
    for (std::size_t i = 0; i < nmin; ++i) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(nmin - 1);
        for (std::size_t j = 0; j < nmin; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            const auto& a = train[minority[i]].features;
            const auto& b = train[minority[j]].features;
            for (std::size_t f = 0; f < a.size(); ++f) {
                const double d = a[f] - b[f];
                d2 += d * d;
            }
            dist.emplace_back(d2, j);
        }
        std::sort(dist.begin(), dist.end());
        for (int t = 0; t < kk && t < static_cast<int>(dist.size()); ++t)
            neighbours[i].push_back(dist[static_cast<std::size_t>(t)].second);
    }

    Rng rng(seed);
    const std::size_t need = majority.size() - minority.size();
    for (std::size_t s = 0; s < need; ++s) {
        const std::size_t bi = s % nmin;
        const FeatureWindow& base = train[minority[bi]];
        FeatureWindow synth = base; // inherits the class label
        if (!neighbours[bi].empty()) {
            const auto& nn =
                train[minority[neighbours[bi][rng.below(neighbours[bi].size())]]].features;
            const double u = rng.uniform();
            for (std::size_t f = 0; f < synth.features.size(); ++f)
                synth.features[f] = base.features[f] + u * (nn[f] - base.features[f]);
        }
        res.windows.push_back(std::move(synth));
    }
    return res;
}

// ---------------------------------------------------------------------------
// SMO training
// ---------------------------------------------------------------------------

namespace detail {

inline double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

class SmoSolver {
public:
    SmoSolver(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
              double c, double gamma, double tol, double eps, int max_epochs, Rng rng)
        : x_(x), y_(y), c_(c), gamma_(gamma), tol_(tol), eps_(eps), max_epochs_(max_epochs),
          rng_(rng), n_(x.size()), alpha_(x.size(), 0.0), error_(x.size()) {
        for (std::size_t i = 0; i < n_; ++i) error_[i] = -y_[i]; // f == 0 initially
    }

    void solve() {
        int changed = 0;
        bool examine_all = true;
        int epochs = 0;
        while (changed > 0 || examine_all) {
            if (++epochs > max_epochs_) {
                throw ValidationError(
                    "svm training did not converge within " + std::to_string(max_epochs_) +
                    " passes (max KKT violation " + std::to_string(max_kkt_violation()) + ")");
            }
            changed = 0;
            if (examine_all) {
                for (std::size_t i = 0; i < n_; ++i) changed += examine(i);
            } else {
                for (std::size_t i = 0; i < n_; ++i)
                    if (non_bound(i)) changed += examine(i);
            }
            if (examine_all) examine_all = false;
            else if (changed == 0) examine_all = true;
        }
    }

    const std::vector<double>& alphas() const { return alpha_; }
    double bias() const { return bias_; }

private:
    bool non_bound(std::size_t i) const { return alpha_[i] > 0.0 && alpha_[i] < c_; }

    double kernel(std::size_t i, std::size_t j) const { return rbf(x_[i], x_[j], gamma_); }

    double max_kkt_violation() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double r = error_[i] * y_[i];
            if (alpha_[i] < c_) worst = std::max(worst, -r);
            if (alpha_[i] > 0.0) worst = std::max(worst, r);
        }
        return worst;
    }

    int examine(std::size_t i2) {
        const double e2 = error_[i2];
        const double r2 = e2 * y_[i2];
        const bool violates =
            (r2 < -tol_ && alpha_[i2] < c_) || (r2 > tol_ && alpha_[i2] > 0.0);
        if (!violates) return 0;

        // Second-choice heuristic: largest |E1 - E2| among non-bound points.
        std::size_t best = n_;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!non_bound(i)) continue;
            const double gap = std::abs(error_[i] - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best < n_ && take_step(best, i2)) return 1;

        // Sweep non-bound, then all, each from a seeded random start.
        const std::size_t start1 = static_cast<std::size_t>(rng_.below(n_));
        for (std::size_t off = 0; off < n_; ++off) {
            const std::size_t i1 = (start1 + off) % n_;
            if (non_bound(i1) && take_step(i1, i2)) return 1;
        }
        const std::size_t start2 = static_cast<std::size_t>(rng_.below(n_));
        for (std::size_t off = 0; off < n_; ++off) {
            const std::size_t i1 = (start2 + off) % n_;
            if (take_step(i1, i2)) return 1;
        }
        return 0;
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        const double a1_old = alpha_[i1], a2_old = alpha_[i2];
        const int y1 = y_[i1], y2 = y_[i2];
        const double e1 = error_[i1], e2 = error_[i2];
        const double s = y1 * y2;

        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2_old - a1_old);
            hi = std::min(c_, c_ + a2_old - a1_old);
        } else {
            lo = std::max(0.0, a1_old + a2_old - c_);
            hi = std::min(c_, a1_old + a2_old);
        }
        if (lo >= hi) return false;

        const double k11 = kernel(i1, i1), k12 = kernel(i1, i2), k22 = kernel(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;

        double a2;
        if (eta > 0.0) {
            a2 = a2_old + y2 * (e1 - e2) / eta;
            a2 = std::clamp(a2, lo, hi);
        } else {
            // Degenerate direction (duplicate points): evaluate the dual
            // objective at both clip ends and move only on a clear win.
            const double f1 = e1 + y1 - bias_ - a1_old * y1 * k11 - a2_old * y2 * k12;
            const double f2 = e2 + y2 - bias_ - a1_old * y1 * k12 - a2_old * y2 * k22;
            auto objective = [&](double cand2) {
                const double cand1 = a1_old + s * (a2_old - cand2);
                return cand1 + cand2 - 0.5 * k11 * cand1 * cand1 - 0.5 * k22 * cand2 * cand2 -
                       s * k12 * cand1 * cand2 - y1 * cand1 * f1 - y2 * cand2 * f2;
            };
            const double obj_lo = objective(lo), obj_hi = objective(hi);
            if (obj_lo > obj_hi + eps_) a2 = lo;
            else if (obj_hi > obj_lo + eps_) a2 = hi;
            else return false;
        }
        if (std::abs(a2 - a2_old) < eps_ * (a2 + a2_old + eps_)) return false;

        const double a1 = a1_old + s * (a2_old - a2);
        const double d1 = y1 * (a1 - a1_old), d2 = y2 * (a2 - a2_old);

        const double b1 = bias_ - e1 - d1 * k11 - d2 * k12;
        const double b2 = bias_ - e2 - d1 * k12 - d2 * k22;
        double b_new;
        if (a1 > 0.0 && a1 < c_) b_new = b1;
        else if (a2 > 0.0 && a2 < c_) b_new = b2;
        else b_new = (b1 + b2) / 2.0;

        const double db = b_new - bias_;
        for (std::size_t i = 0; i < n_; ++i)
            error_[i] += d1 * kernel(i1, i) + d2 * kernel(i2, i) + db;

        alpha_[i1] = a1;
        alpha_[i2] = a2;
        bias_ = b_new;
        return true;
    }

    const std::vector<std::vector<double>>& x_;
    const std::vector<int>& y_;
    double c_, gamma_, tol_, eps_;
    int max_epochs_;
    Rng rng_;
    std::size_t n_;
    std::vector<double> alpha_;
    std::vector<double> error_; // f(x_i) - y_i
    double bias_ = 0.0;
};

} // namespace detail

inline PausingModel train(std::span<const FeatureWindow> train_set, const TrainConfig& cfg = {}) {
    if (train_set.empty()) throw ValidationError("train: empty training set");
    const std::size_t dim = train_set.front().features.size();

    std::int64_t n_moving = 0, n_pausing = 0;
    std::vector<int> y;
    y.reserve(train_set.size());
    for (const auto& w : train_set) {
        if (!w.label) throw ValidationError("train: unlabeled window");
        (*w.label == ActivityLabel::moving ? n_moving : n_pausing)++;
        y.push_back(label_sign(*w.label));
    }
    if (n_moving == 0 || n_pausing == 0)
        throw ValidationError("train: both classes must be present");

    PausingModel model;
    model.c = cfg.c;
    model.seed = cfg.seed;
    model.trained_at_ms = cfg.trained_at_ms;
    model.n_moving = n_moving;
    model.n_pausing = n_pausing;

    // Fit the z-score scaler on the training set.
    model.scaler.mean.assign(dim, 0.0);
    model.scaler.std.assign(dim, 0.0);
    for (const auto& w : train_set)
        for (std::size_t f = 0; f < dim; ++f) model.scaler.mean[f] += w.features[f];
    for (double& m : model.scaler.mean) m /= static_cast<double>(train_set.size());
    for (const auto& w : train_set)
        for (std::size_t f = 0; f < dim; ++f) {
            const double d = w.features[f] - model.scaler.mean[f];
            model.scaler.std[f] += d * d;
        }
    for (double& s : model.scaler.std) {
        s = std::sqrt(s / static_cast<double>(train_set.size()));
        if (s <= 0.0) s = 1.0; // constant feature: inert after centering
    }

    std::vector<std::vector<double>> x;
    x.reserve(train_set.size());
    for (const auto& w : train_set)
        x.push_back(model.scaler.apply(std::span<const double>(w.features)));

    if (cfg.gamma) {
        model.gamma = *cfg.gamma;
    } else {
        // "scale"-style default: 1 / (dim * mean per-feature variance) in
        // the scaled space.
        double var_sum = 0.0;
        for (std::size_t f = 0; f < dim; ++f) {
            double mean = 0.0;
            for (const auto& row : x) mean += row[f];
            mean /= static_cast<double>(x.size());
            double acc = 0.0;
            for (const auto& row : x) acc += (row[f] - mean) * (row[f] - mean);
            var_sum += acc / static_cast<double>(x.size());
        }
        const double mean_var = var_sum / static_cast<double>(dim);
        model.gamma = mean_var > 0.0 ? 1.0 / (static_cast<double>(dim) * mean_var)
                                     : 1.0 / static_cast<double>(dim);
    }
    if (!(model.gamma > 0.0)) throw ValidationError("train: gamma must be positive");
    if (!(model.c > 0.0)) throw ValidationError("train: C must be positive");

    detail::SmoSolver solver(x, y, model.c, model.gamma, cfg.kkt_tolerance, cfg.alpha_epsilon,
                             cfg.max_epochs, Rng(cfg.seed));
    solver.solve();
    model.bias = solver.bias();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (solver.alphas()[i] > 0.0) {
            model.support_vectors.push_back(x[i]);
            model.coeffs.push_back(solver.alphas()[i] * y[i]);
        }
    }
    return model;
}

inline double decision_value(const PausingModel& model, std::span<const double> features) {
    if (features.size() != model.dim())
        throw ValidationError("predict: feature dimension " + std::to_string(features.size()) +
                              " does not match model dimension " + std::to_string(model.dim()));
    const std::vector<double> z = model.scaler.apply(features);
    double f = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        f += model.coeffs[i] * detail::rbf(model.support_vectors[i], z, model.gamma);
    return f;
}

inline ActivityLabel predict(const PausingModel& model, std::span<const double> features) {
    return decision_value(model, features) > 0.0 ? ActivityLabel::pausing : ActivityLabel::moving;
}

inline std::vector<ActivityLabel> predict(const PausingModel& model,
                                          std::span<const FeatureWindow> windows) {
    std::vector<ActivityLabel> out;
    out.reserve(windows.size());
    for (const auto& w : windows)
        out.push_back(predict(model, std::span<const double>(w.features)));
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct EvalMetrics {
    ClassMetrics moving;
    ClassMetrics pausing;
    double weighted_f1 = 0.0;
    // confusion[actual][predicted], index 0 = moving, 1 = pausing
    std::array<std::array<std::int64_t, 2>, 2> confusion{};
};

inline EvalMetrics evaluate(const PausingModel& model, std::span<const FeatureWindow> eval_set) {
    if (eval_set.empty()) throw ValidationError("evaluate: empty evaluation set");
    EvalMetrics m;
    for (const auto& w : eval_set) {
        if (!w.label) throw ValidationError("evaluate: unlabeled window");
        const int actual = *w.label == ActivityLabel::pausing ? 1 : 0;
        const int pred = predict(model, std::span<const double>(w.features)) == ActivityLabel::pausing ? 1 : 0;
        m.confusion[static_cast<std::size_t>(actual)][static_cast<std::size_t>(pred)]++;
    }
    auto fill = [&](int cls, ClassMetrics& out) {
        const auto c = static_cast<std::size_t>(cls);
        const double tp = static_cast<double>(m.confusion[c][c]);
        const double fp = static_cast<double>(m.confusion[1 - c][c]);
        const double fn = static_cast<double>(m.confusion[c][1 - c]);
        out.support = m.confusion[c][0] + m.confusion[c][1];
        out.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
        out.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
        out.f1 = out.precision + out.recall > 0.0
                     ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                     : 0.0;
    };
    fill(0, m.moving);
    fill(1, m.pausing);
    const double total = static_cast<double>(m.moving.support + m.pausing.support);
    m.weighted_f1 = (static_cast<double>(m.moving.support) * m.moving.f1 +
                     static_cast<double>(m.pausing.support) * m.pausing.f1) /
                    total;
    return m;
}

// ---------------------------------------------------------------------------
// Persistence (single JSON document)
// ---------------------------------------------------------------------------

inline json model_to_json(const PausingModel& m) {
    return json{{"format", "pausing-svm-v1"},
                {"scaler", {{"mean", m.scaler.mean}, {"std", m.scaler.std}}},
                {"kernel", {{"type", "rbf"}, {"gamma", m.gamma}}},
                {"C", m.c},
                {"support_vectors", m.support_vectors},
                {"coeffs", m.coeffs},
                {"bias", m.bias},
                {"metadata",
                 {{"seed", m.seed},
                  {"trained_at_ms", m.trained_at_ms},
                  {"class_counts", {{"moving", m.n_moving}, {"pausing", m.n_pausing}}}}}};
}

inline PausingModel model_from_json(const json& j) {
    if (j.value("format", "") != "pausing-svm-v1")
        throw ValidationError("unrecognised model format");
    PausingModel m;
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.std = j.at("scaler").at("std").get<std::vector<double>>();
    m.gamma = j.at("kernel").at("gamma").get<double>();
    m.c = j.at("C").get<double>();
    m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    m.coeffs = j.at("coeffs").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.seed = j.at("metadata").at("seed").get<std::uint64_t>();
    m.trained_at_ms = j.at("metadata").at("trained_at_ms").get<std::int64_t>();
    m.n_moving = j.at("metadata").at("class_counts").at("moving").get<std::int64_t>();
    m.n_pausing = j.at("metadata").at("class_counts").at("pausing").get<std::int64_t>();
    if (m.coeffs.size() != m.support_vectors.size())
        throw ValidationError("model: coeffs/support_vectors size mismatch");
    return m;
}

inline void save_model(const PausingModel& m, const std::filesystem::path& path) {
    write_text_file(path, model_to_json(m).dump(2) + "\n");
}

inline PausingModel load_model(const std::filesystem::path& path) {
    try {
        return model_from_json(json::parse(read_text_file(path)));
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

} // namespace aedkit::pausenet
