#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajcurate/errors.hpp"
#include "trajcurate/features.hpp"
#include "trajcurate/scoring.hpp"

namespace trajcurate {

/// Success label from the holistic reward: 1 iff reward > 0.5, strictly.
inline int label(double reward) { return reward > 0.5 ? 1 : 0; }

/// Numerically stable sigmoid clamped into the open interval (0,1).
/// Finite z of any magnitude is fine; extreme negatives land at the
/// smallest positive double instead of 0.
inline double sigmoid(double z) {
    double p;
    if (z >= 0) {
        p = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        p = e / (1.0 + e);
    }
    constexpr double lo = std::numeric_limits<double>::denorm_min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(p, lo, hi);
}

struct FitConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 1000;
    double l2_lambda = 0.01;
    double convergence_tol = 1e-6;
    std::uint64_t seed = 42;

    bool operator==(const FitConfig&) const = default;
};

struct LabeledSample {
    std::vector<double> features; // raw (untransformed)
    int label = 0;
};

/// Validation metrics plus per-feature Pearson correlation against labels.
/// A zero-spread feature reports correlation 0 with its degenerate flag set.
struct FitReport {
    double accuracy = 0.0;
    double f1 = 0.0;
    std::vector<double> correlation;
    std::vector<bool> degenerate;

    bool operator==(const FitReport&) const = default;
};

struct ScreeningModel {
    std::vector<std::string> feature_names;
    std::vector<double> weights;
    double bias = 0.0;
    NormStats norm;
    FitReport fit_report;

    double decision(std::span<const double> standardized) const {
        if (standardized.size() != weights.size())
            throw FeatureMismatch("predict: vector has " +
                                  std::to_string(standardized.size()) +
                                  " features, model expects " +
                                  std::to_string(weights.size()));
        return std::inner_product(weights.begin(), weights.end(),
                                  standardized.begin(), bias);
    }

    double predict_proba(std::span<const double> standardized) const {
        return sigmoid(decision(standardized));
    }

    double predict_from_raw(std::span<const double> raw) const {
        auto z = transform(raw, norm);
        return predict_proba(z);
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["feature_names"] = feature_names;
        j["weights"] = weights;
        j["bias"] = bias;
        j["norm"] = {{"mean", norm.mean}, {"std", norm.std}};
        nlohmann::ordered_json corr = nlohmann::ordered_json::object();
        nlohmann::ordered_json degen = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < fit_report.correlation.size(); ++i) {
            corr[feature_names[i]] = fit_report.correlation[i];
            if (i < fit_report.degenerate.size() && fit_report.degenerate[i])
                degen.push_back(feature_names[i]);
        }
        j["fit_report"] = {{"accuracy", fit_report.accuracy},
                           {"f1", fit_report.f1},
                           {"correlation", corr},
                           {"degenerate_features", degen}};
        j["format_version"] = 1;
        return j;
    }

    static ScreeningModel from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("format_version", 0) != 1)
            throw ConfigError("model file: unsupported or missing format_version");
        ScreeningModel m;
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        m.norm.mean = j.at("norm").at("mean").get<std::vector<double>>();
        m.norm.std = j.at("norm").at("std").get<std::vector<double>>();
        if (m.weights.size() != m.feature_names.size() ||
            m.norm.mean.size() != m.feature_names.size())
            throw ConfigError("model file: inconsistent dimensions");
        for (double w : m.weights)
            if (!std::isfinite(w)) throw ConfigError("model file: non-finite weight");
        if (!std::isfinite(m.bias)) throw ConfigError("model file: non-finite bias");
        if (j.contains("fit_report")) {
            const auto& fr = j["fit_report"];
            m.fit_report.accuracy = fr.value("accuracy", 0.0);
            m.fit_report.f1 = fr.value("f1", 0.0);
            m.fit_report.correlation.assign(m.feature_names.size(), 0.0);
            m.fit_report.degenerate.assign(m.feature_names.size(), false);
            if (fr.contains("correlation")) {
                for (std::size_t i = 0; i < m.feature_names.size(); ++i) {
                    const auto& name = m.feature_names[i];
                    if (fr["correlation"].contains(name))
                        m.fit_report.correlation[i] = fr["correlation"][name].get<double>();
                }
            }
            if (fr.contains("degenerate_features")) {
                for (const auto& name : fr["degenerate_features"]) {
                    for (std::size_t i = 0; i < m.feature_names.size(); ++i)
                        if (m.feature_names[i] == name.get<std::string>())
                            m.fit_report.degenerate[i] = true;
                }
            }
        }
        return m;
    }
};

namespace lr {

/// Mean binary cross-entropy from logits plus (lambda/2)*||w||^2; the bias
/// is unregularized. Stable for arbitrary logit magnitudes.
inline double loss(std::span<const std::vector<double>> x, std::span<const int> y,
                   std::span<const double> w, double b, double lambda) {
    const std::size_t m = x.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double z = std::inner_product(w.begin(), w.end(), x[i].begin(), b);
        // -log sigma(z) for y=1, -log(1-sigma(z)) for y=0
        if (z >= 0)
            sum += std::log1p(std::exp(-z)) + (1 - y[i]) * z;
        else
            sum += std::log1p(std::exp(z)) - y[i] * z;
    }
    double reg = 0.0;
    for (double wi : w) reg += wi * wi;
    return sum / static_cast<double>(m) + 0.5 * lambda * reg;
}

struct Gradient {
    std::vector<double> w;
    double b = 0.0;
};

inline Gradient gradient(std::span<const std::vector<double>> x, std::span<const int> y,
                         std::span<const double> w, double b, double lambda) {
    const std::size_t m = x.size();
    Gradient g;
    g.w.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double z = std::inner_product(w.begin(), w.end(), x[i].begin(), b);
        const double r = sigmoid(z) - y[i];
        for (std::size_t k = 0; k < w.size(); ++k) g.w[k] += r * x[i][k];
        g.b += r;
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < w.size(); ++k) g.w[k] = g.w[k] * inv_m + lambda * w[k];
    g.b *= inv_m;
    return g;
}

inline double inf_norm(const Gradient& g) {
    double n = std::abs(g.b);
    for (double v : g.w) n = std::max(n, std::abs(v));
    return n;
}

} // namespace lr

/// Accuracy, positive-class F1 (0 on zero division), and per-raw-feature
/// Pearson correlation with the labels.
inline FitReport validate(const ScreeningModel& m, std::span<const LabeledSample> holdout) {
    FitReport rep;
    if (holdout.empty()) return rep;
    std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
    for (const LabeledSample& s : holdout) {
        const int pred = m.predict_from_raw(s.features) >= 0.5 ? 1 : 0;
        if (pred == s.label) ++correct;
        if (pred == 1 && s.label == 1) ++tp;
        if (pred == 1 && s.label == 0) ++fp;
        if (pred == 0 && s.label == 1) ++fn;
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(holdout.size());
    const double denom = static_cast<double>(2 * tp + fp + fn);
    rep.f1 = denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;

    const std::size_t dim = holdout[0].features.size();
    rep.correlation.assign(dim, 0.0);
    rep.degenerate.assign(dim, false);
    const double n = static_cast<double>(holdout.size());
    double y_mean = 0.0;
    for (const LabeledSample& s : holdout) y_mean += s.label;
    y_mean /= n;
    double y_var = 0.0;
    for (const LabeledSample& s : holdout) y_var += (s.label - y_mean) * (s.label - y_mean);
    for (std::size_t k = 0; k < dim; ++k) {
        double x_mean = 0.0;
        for (const LabeledSample& s : holdout) x_mean += s.features[k];
        x_mean /= n;
        double x_var = 0.0, cov = 0.0;
        for (const LabeledSample& s : holdout) {
            const double dx = s.features[k] - x_mean;
            x_var += dx * dx;
            cov += dx * (s.label - y_mean);
        }
        if (x_var < 1e-24 || y_var < 1e-24) {
            rep.correlation[k] = 0.0;
            rep.degenerate[k] = true;
        } else {
            rep.correlation[k] = cov / std::sqrt(x_var * y_var);
        }
    }
    return rep;
}

/// Full-batch gradient descent on regularized BCE. Deterministic for a
/// fixed seed and dataset. Normalization stats come from the training
/// split; the fit report from the held-out 20%.
///
/// Loss is kept non-increasing: a step that raises it is retried at half
/// the rate until it no longer does.
inline ScreeningModel fit(std::span<const LabeledSample> data,
                          std::span<const std::string> feature_names,
                          const FitConfig& cfg) {
    if (data.size() < 2)
        throw TooFewSamples("fit needs at least 2 samples, got " +
                            std::to_string(data.size()));
    {
        bool has0 = false, has1 = false;
        for (const LabeledSample& s : data) (s.label ? has1 : has0) = true;
        if (!has0 || !has1) throw SingleClassData("fit needs both classes present");
    }
    const std::size_t dim = feature_names.size();
    for (const LabeledSample& s : data)
        if (s.features.size() != dim)
            throw FeatureMismatch("fit: sample dimension differs from feature_names");

    // Deterministic 80/20 split by seeded shuffle.
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t holdout_n = std::max<std::size_t>(1, data.size() / 5);
    const std::size_t train_n = data.size() - holdout_n;

    std::vector<LabeledSample> train, holdout;
    train.reserve(train_n);
    holdout.reserve(holdout_n);
    for (std::size_t i = 0; i < train_n; ++i) train.push_back(data[order[i]]);
    for (std::size_t i = train_n; i < data.size(); ++i) holdout.push_back(data[order[i]]);
    {
        bool has0 = false, has1 = false;
        for (const LabeledSample& s : train) (s.label ? has1 : has0) = true;
        if (!has0 || !has1)
            throw SingleClassData("training split contains a single class");
    }

    std::vector<std::vector<double>> raw;
    raw.reserve(train.size());
    for (const LabeledSample& s : train) raw.push_back(s.features);
    NormStats norm = fit_norm(std::span<const std::vector<double>>(raw));

    std::vector<std::vector<double>> x;
    std::vector<int> y;
    x.reserve(train.size());
    y.reserve(train.size());
    for (const LabeledSample& s : train) {
        x.push_back(transform(s.features, norm));
        y.push_back(s.label);
    }

    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    double lr_now = cfg.learning_rate;
    double prev_loss = lr::loss(x, y, w, b, cfg.l2_lambda);
    if (!std::isfinite(prev_loss)) throw NonFiniteLoss("initial loss is not finite");

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const lr::Gradient g = lr::gradient(x, y, w, b, cfg.l2_lambda);
        if (lr::inf_norm(g) < cfg.convergence_tol) break;
        // Backoff: halve the step until the loss does not increase.
        for (;;) {
            std::vector<double> w2(dim);
            for (std::size_t k = 0; k < dim; ++k) w2[k] = w[k] - lr_now * g.w[k];
            const double b2 = b - lr_now * g.b;
            const double loss2 = lr::loss(x, y, w2, b2, cfg.l2_lambda);
            if (!std::isfinite(loss2)) throw NonFiniteLoss("loss became non-finite");
            if (loss2 <= prev_loss) {
                w = std::move(w2);
                b = b2;
                prev_loss = loss2;
                break;
            }
            lr_now *= 0.5;
            if (lr_now < 1e-18) { // step underflow: converged as far as doubles go
                lr_now = 0.0;
                break;
            }
        }
        if (lr_now == 0.0) break;
    }

    ScreeningModel model;
    model.feature_names.assign(feature_names.begin(), feature_names.end());
    model.weights = std::move(w);
    model.bias = b;
    model.norm = std::move(norm);
    model.fit_report = validate(model, holdout);
    return model;
}

/// Carry fitted weights into scoring parameters: cap weights become
/// w_i * scale and decay slopes max(0, -w_i) * scale, with
/// scale = M / max_i |w_i|. Scale-equivariant: rescaling all weights
/// leaves the mapping unchanged. Ratio functions are untouched.
inline ScoringConfig weights_to_theta(const ScreeningModel& m, const ScoringConfig& cfg) {
    double max_abs = 0.0;
    for (double w : m.weights) max_abs = std::max(max_abs, std::abs(w));

    auto weight_of = [&](const std::string& feature) {
        for (std::size_t i = 0; i < m.feature_names.size(); ++i)
            if (m.feature_names[i] == feature) return m.weights[i];
        throw UnknownFeature("weights_to_theta: feature not in model: " + feature);
    };

    ScoringConfig out = cfg;
    for (ScoringFunction& f : out.functions) {
        if (auto* c = std::get_if<CapFunction>(&f)) {
            const double wi = weight_of(c->feature);
            c->w = max_abs > 0 ? wi * (c->M / max_abs) : 0.0;
        } else if (auto* d = std::get_if<DecayFunction>(&f)) {
            const double wi = weight_of(d->feature);
            d->p = max_abs > 0 ? std::max(0.0, -wi) * (d->M / max_abs) : 0.0;
        }
    }
    return out;
}

} // namespace trajcurate
