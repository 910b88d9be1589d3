#pragma once

// Predicted CH parameter and threshold detection efficiencies under losses.
//
// Non-detection conventions: on A1, B0 and B1 a non-detection is assigned the
// -1 outcome (abar1, bbar0, bbar1); on A0 Alice picks a0/abar0 with
// probability 1/2 each.

#include <cmath>
#include <stdexcept>

#include "diqkd/keyrate.hpp"
#include "diqkd/quantum.hpp"

namespace diqkd {

// Requested threshold does not exist below unit efficiency (the measurement
// settings admit no CH violation).
struct no_violation_error : std::domain_error {
    using std::domain_error::domain_error;
};

// CH probabilities over all generated pairs, predicted from the
// coincidence-conditioned table.
struct PredictedProbabilities {
    double p_a1_b1 = 0;
    double p_a1_b0 = 0;
    double p_a0_b1 = 0;
    double p_a0_b0 = 0;
    double p_a1 = 0;
    double p_b1 = 0;

    double s_ch() const { return p_a1_b1 + p_a0_b1 + p_a1_b0 - p_a0_b0 - p_a1 - p_b1; }
};

inline PredictedProbabilities predict_probabilities(const CoincidenceTable& t,
                                                    const Efficiencies& eff) {
    eff.validate();
    const double ea = eff.eta_a, eb = eff.eta_b;
    PredictedProbabilities out;
    out.p_a1_b1 = ea * eb * t(1, 1, 0, 0);
    out.p_a1_b0 = ea * eb * t(1, 0, 0, 0);
    out.p_a1 = ea * (t(1, 0, 0, 0) + t(1, 0, 0, 1));
    out.p_b1 = eb * (t(0, 1, 0, 0) + t(0, 1, 1, 0));
    out.p_a0_b0 = ea * eb * t(0, 0, 0, 0) + (1.0 - ea) * eb * 0.5 * (t(0, 0, 0, 0) + t(0, 0, 1, 0));
    out.p_a0_b1 = ea * eb * t(0, 1, 0, 0) + (1.0 - ea) * eb * 0.5 * (t(0, 1, 0, 0) + t(0, 1, 1, 0));
    return out;
}

// Predicted CH parameter under efficiencies eta_A, eta_B.
inline double predict_s_ch(const CoincidenceTable& t, const Efficiencies& eff) {
    eff.validate();
    const double ea = eff.eta_a, eb = eff.eta_b;
    return ea * eb *
               (t(1, 1, 0, 0) + 0.5 * t(0, 1, 0, 0) + t(1, 0, 0, 0) - 0.5 * t(0, 0, 0, 0) +
                0.5 * t(0, 0, 1, 0) - 0.5 * t(0, 1, 1, 0)) -
           ea * (t(1, 0, 0, 0) + t(1, 0, 0, 1)) -
           0.5 * eb * (t(0, 1, 0, 0) + t(0, 1, 1, 0) + t(0, 0, 0, 0) + t(0, 0, 1, 0));
}

// Symmetric threshold eta_A = eta_B = eta^th for S_CH = 0.
inline double threshold_symmetric(const CoincidenceTable& t) {
    double num = t(1, 0, 0, 0) + t(1, 0, 0, 1) + 0.5 * t(0, 1, 1, 0) + 0.5 * t(0, 1, 0, 0) +
                 0.5 * t(0, 0, 1, 0) + 0.5 * t(0, 0, 0, 0);
    double den = t(1, 1, 0, 0) + 0.5 * t(0, 1, 0, 0) + t(1, 0, 0, 0) - 0.5 * t(0, 0, 0, 0) +
                 0.5 * t(0, 0, 1, 0) - 0.5 * t(0, 1, 1, 0);
    if (den <= 0.0)
        throw no_violation_error("threshold_symmetric: no violation at any eta <= 1");
    return num / den;
}

// Bob's threshold with Alice trusted (eta_A = 1).
inline double threshold_bob(const CoincidenceTable& t) {
    double num = t(1, 0, 0, 0) + t(1, 0, 0, 1);
    double den = t(1, 1, 0, 0) + t(1, 0, 0, 0) - t(0, 0, 0, 0) - t(0, 1, 1, 0);
    if (den <= 0.0)
        throw no_violation_error("threshold_bob: no violation at any eta_B <= 1");
    return num / den;
}

} // namespace diqkd
