#pragma once

// Closed-form protocol quantities: conclusive probability, QBERs, the
// Clauser-Horne parameter and the secure key rates r, r~ and r'.
//
// Rates are returned raw and may be negative; a negative rate means no key
// can be distilled.

#include <cmath>
#include <stdexcept>

#include "diqkd/quantum.hpp"

namespace diqkd {

struct Efficiencies {
    double eta_a = 1.0; // Alice overall efficiency (transmission + detection)
    double eta_b = 1.0;

    void validate() const {
        if (eta_a < 0.0 || eta_a > 1.0 || eta_b < 0.0 || eta_b > 1.0)
            throw std::domain_error("Efficiencies: values must be in [0,1]");
    }
};

struct RateReport {
    double s_ch = 0;         // CH parameter
    double q_ps = 0;         // QBER on post-selected data
    double q_c = 0;          // QBER on all conclusive data
    double p_c = 0;          // conclusive probability
    double r = 0;            // post-selected rate per emitted pair
    double r_old = 0;        // rate without post-selection
    double r_bb84_style = 0; // maximally-entangled-protocol rate
};

inline double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0)
        throw std::domain_error("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// P_c = 1/2 (1 - cos theta cos phi)
inline double conclusive_prob(double theta, double phi) {
    return 0.5 * (1.0 - std::cos(theta) * std::cos(phi));
}

// Q^ps = (1 - cos(theta - phi)) / (2 - 2 cos theta cos phi)
inline double qber_ps(double theta, double phi) {
    double den = 2.0 - 2.0 * std::cos(theta) * std::cos(phi);
    if (den <= 0.0)
        throw std::domain_error("qber_ps: undefined, conclusive probability is zero");
    return (1.0 - std::cos(theta - phi)) / den;
}

// Q^c = eta_A Q^ps + (1 - eta_A)/2
inline double qber_conclusive(double q_ps, double eta_a) {
    return eta_a * q_ps + (1.0 - eta_a) / 2.0;
}

// f(S) = 1 + sqrt(1 - 4S - 4S^2). The radicand vanishes exactly at the
// maximal quantum CH value (sqrt2 - 1)/2; tiny float undershoot is clamped.
inline double f_ch(double s) {
    double rad = 1.0 - 4.0 * s - 4.0 * s * s;
    if (rad < -1e-12)
        throw std::domain_error("f_ch: radicand negative (super-quantum CH value)");
    if (rad < 0.0) rad = 0.0;
    return 1.0 + std::sqrt(rad);
}

// S_CH(theta, phi) = 1/2 (cos phi + sin theta sin phi - 1), perfect efficiencies.
inline double s_ch_ideal(double theta, double phi) {
    return 0.5 * (std::cos(phi) + std::sin(theta) * std::sin(phi) - 1.0);
}

// max over phi, attained at phi = arctan(sin theta).
inline double s_ch_max(double theta) {
    double s = std::sin(theta);
    return 0.5 * (std::sqrt(s * s + 1.0) - 1.0);
}

// Core rate expressions in terms of an explicit conclusive probability, so the
// same formulas apply to table-derived (noisy, empirical) quantities.
inline double rate_post_selected_from_parts(double p_c, const Efficiencies& eff, double s_ch,
                                            double q_ps) {
    return eff.eta_b * p_c * (eff.eta_a * (1.0 - binary_entropy(q_ps)) - std::log2(f_ch(s_ch)));
}

inline double rate_no_postselection_from_parts(double p_c, const Efficiencies& eff, double s_ch,
                                               double q_c) {
    return eff.eta_a * eff.eta_b * p_c *
           (1.0 - binary_entropy(q_c) - std::log2(f_ch(s_ch)));
}

// r = eta_B P_c [eta_A (1 - h2(Q^ps)) - log2 f(S_CH)]
inline double rate_post_selected(double theta, double phi, const Efficiencies& eff, double s_ch,
                                 double q_ps) {
    return rate_post_selected_from_parts(conclusive_prob(theta, phi), eff, s_ch, q_ps);
}

// r~ = eta_A eta_B P_c [1 - h2(Q^c) - log2 f(S_CH)]
inline double rate_no_postselection(double theta, double phi, const Efficiencies& eff, double s_ch,
                                    double q_c) {
    return rate_no_postselection_from_parts(conclusive_prob(theta, phi), eff, s_ch, q_c);
}

// r' = eta_A eta_B (1 - h2(Q^ps)) - log2 f(S_CH)
inline double rate_bb84_style(const Efficiencies& eff, double s_ch, double q_ps) {
    return eff.eta_a * eff.eta_b * (1.0 - binary_entropy(q_ps)) - std::log2(f_ch(s_ch));
}

// r_BB84 = 1 - 2 h2(Q), trusted devices.
inline double rate_bb84_trusted(double q) {
    return 1.0 - 2.0 * binary_entropy(q);
}

} // namespace diqkd
