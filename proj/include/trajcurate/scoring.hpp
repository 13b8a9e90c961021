#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "trajcurate/errors.hpp"
#include "trajcurate/features.hpp"

namespace trajcurate {

// Three scoring families. What each function reads is configuration, not
// code: the feature bindings live in ScoringConfig.

/// Linear reward with a hard cap. Negative w is allowed (penalty features);
/// the cap still applies.
inline double f_cap(double x, double w, double M) { return std::min(w * x, M); }

/// Proportional reward. Zero denominator scores zero.
inline double f_ratio(double v_tgt, double v_tot, double M) {
    if (v_tgt > v_tot)
        throw RatioDomain("f_ratio: target " + std::to_string(v_tgt) +
                          " exceeds total " + std::to_string(v_tot));
    if (v_tot <= 0) return 0.0;
    return M * v_tgt / v_tot;
}

/// Plateau then linear decay with a floor: 0 below c_min, M on
/// [c_min, c_opt], then max(M - p*(c - c_opt), m).
inline double f_decay(double c, double c_min, double c_opt, double p, double M, double m) {
    if (c < c_min) return 0.0;
    if (c <= c_opt) return M;
    return std::max(M - p * (c - c_opt), m);
}

struct CapFunction {
    std::string feature;
    double w = 1.0;
    double M = 10.0;
    bool operator==(const CapFunction&) const = default;
};

struct RatioFunction {
    std::string target;
    std::string total;
    double M = 10.0;
    bool operator==(const RatioFunction&) const = default;
};

struct DecayFunction {
    std::string feature;
    double c_min = 0.0;
    double c_opt = 0.0;
    double p = 0.0;
    double M = 10.0;
    double m = 0.0;
    bool operator==(const DecayFunction&) const = default;
};

using ScoringFunction = std::variant<CapFunction, RatioFunction, DecayFunction>;

struct ScoringConfig {
    std::vector<ScoringFunction> functions;

    // M > 0 everywhere; decay additionally needs c_min <= c_opt, p >= 0,
    // 0 <= m <= M.
    void check() const {
        for (const ScoringFunction& f : functions) {
            if (const auto* c = std::get_if<CapFunction>(&f)) {
                if (!(c->M > 0)) throw ConfigError("cap: M must be > 0");
            } else if (const auto* r = std::get_if<RatioFunction>(&f)) {
                if (!(r->M > 0)) throw ConfigError("ratio: M must be > 0");
            } else if (const auto* d = std::get_if<DecayFunction>(&f)) {
                if (!(d->M > 0)) throw ConfigError("decay: M must be > 0");
                if (!(d->c_min <= d->c_opt)) throw ConfigError("decay: c_min must be <= c_opt");
                if (!(d->p >= 0)) throw ConfigError("decay: p must be >= 0");
                if (!(d->m >= 0 && d->m <= d->M))
                    throw ConfigError("decay: m must be in [0, M]");
            }
        }
    }

    bool operator==(const ScoringConfig&) const = default;
};

/// Sum of the active functions evaluated on the trajectory's features.
/// Empty config scores 0.
inline double total_score(const Trajectory& t, const ScoringConfig& cfg,
                          const FeatureRegistry& reg) {
    double sum = 0.0;
    for (const ScoringFunction& f : cfg.functions) {
        if (const auto* c = std::get_if<CapFunction>(&f)) {
            const std::string names[] = {c->feature};
            sum += f_cap(reg.extract_named(t, names)[0], c->w, c->M);
        } else if (const auto* r = std::get_if<RatioFunction>(&f)) {
            const std::string names[] = {r->target, r->total};
            auto v = reg.extract_named(t, names);
            sum += f_ratio(v[0], v[1], r->M);
        } else if (const auto* d = std::get_if<DecayFunction>(&f)) {
            const std::string names[] = {d->feature};
            sum += f_decay(reg.extract_named(t, names)[0], d->c_min, d->c_opt, d->p,
                           d->M, d->m);
        }
    }
    return sum;
}

} // namespace trajcurate
