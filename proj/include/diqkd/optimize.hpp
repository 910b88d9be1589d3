#pragma once

// Angle optimization, threshold-efficiency searches and rate-vs-efficiency
// curves. Derivative-free throughout: the rate landscape has kinks where the
// rate crosses zero and where the f_ch radicand vanishes.
//
// All grids and brackets are fixed, so identical inputs give identical
// results.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "diqkd/keyrate.hpp"
#include "diqkd/loss.hpp"
#include "diqkd/quantum.hpp"

namespace diqkd {

struct OptimizationResult {
    double best_theta = 0;
    double best_phi = 0;
    double best_value = 0;
    int iterations = 0;
    bool converged = false;
};

struct ThresholdResult {
    double threshold = 0;
    double theta_at_threshold = 0;
    double phi_at_threshold = 0;
    double achieved_rate_above = 0; // rate at threshold + 1e-4, inner-optimized angles
};

namespace detail {

inline constexpr double kAngleEps = 1e-9;   // nudge off the theta = 0 exclusion
inline constexpr double kAngleTol = 1e-8;
inline constexpr double kEtaTol = 1e-5;

// Golden-section maximization on [lo, hi]; ties resolve toward lo.
inline double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol,
                         int* iters = nullptr) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    int n = 0;
    while (b - a > tol) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        ++n;
    }
    if (iters) *iters += n;
    return 0.5 * (a + b);
}

inline double bisect_root(const std::function<double(double)>& g, double lo, double hi,
                          double tol) {
    double glo = g(lo), ghi = g(hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    if ((glo > 0) == (ghi > 0))
        throw std::domain_error("bisect_root: bracket endpoints have equal signs");
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        double gm = g(mid);
        if (gm == 0.0) return mid;
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Post-selected key rate at a parameter point, with the CH parameter predicted
// under the given efficiencies and the QBER taken from the (possibly noisy)
// coincidence table.
inline double rate_at_point(double theta, double phi, const Efficiencies& eff,
                            const NoiseParams& noise) {
    TwoQubitState st = make_state(theta);
    CoincidenceTable t =
        noise.is_zero() ? coincidence_probs(st, phi) : coincidence_probs(apply_noise(st, noise), phi);
    double pc = t.conclusive_prob();
    if (pc < 1e-15) return 0.0; // no conclusive events, no key
    double s = predict_s_ch(t, eff);
    double q = std::min(std::max(t.qber_ps(), 0.0), 1.0);
    return rate_post_selected_from_parts(pc, eff, s, q);
}

// Trusted-device rate (eta = 1) from the closed forms; equals
// rate_at_point(theta, phi, {1,1}, {}) on pure states.
inline double rate_trusted(double theta, double phi) {
    if (conclusive_prob(theta, phi) < 1e-15) return 0.0;
    return rate_post_selected(theta, phi, Efficiencies{1.0, 1.0}, s_ch_ideal(theta, phi),
                              qber_ps(theta, phi));
}

// phi = arctan(sin theta), the maximal-violation choice.
inline double optimal_phi_for_violation(double theta) {
    return std::atan(std::sin(theta));
}

// phi maximizing the post-selected rate at fixed theta: 1e-3 rad grid scan,
// golden-section refinement to 1e-8 rad. Flat landscapes resolve to the
// smallest maximizer.
inline double optimal_phi_for_rate(double theta, const Efficiencies& eff,
                                   const NoiseParams& noise) {
    auto f = [&](double phi) { return rate_at_point(theta, phi, eff, noise); };
    const double step = 1e-3;
    double best_phi = 0.0, best = f(0.0);
    for (double phi = step; phi <= M_PI / 2 + 1e-15; phi += step) {
        double v = f(std::min(phi, M_PI / 2));
        if (v > best) {
            best = v;
            best_phi = std::min(phi, M_PI / 2);
        }
    }
    double lo = std::max(0.0, best_phi - step);
    double hi = std::min(M_PI / 2, best_phi + step);
    return detail::golden_max(f, lo, hi, detail::kAngleTol);
}

// argmax over theta of r(theta, phi=theta) with trusted devices.
inline OptimizationResult best_theta_entB92_trusted() {
    OptimizationResult res;
    auto f = [](double th) { return rate_trusted(th, th); };
    const int n = 2000;
    double best = -1e300, best_th = detail::kAngleEps;
    for (int i = 0; i <= n; ++i) {
        double th = detail::kAngleEps + (M_PI / 2 - detail::kAngleEps) * i / n;
        double v = f(th);
        if (v > best) {
            best = v;
            best_th = th;
        }
    }
    double step = M_PI / 2 / n;
    res.best_theta = detail::golden_max(f, std::max(detail::kAngleEps, best_th - step),
                                        std::min(M_PI / 2, best_th + step), detail::kAngleTol,
                                        &res.iterations);
    res.best_phi = res.best_theta;
    res.best_value = f(res.best_theta);
    res.converged = true;
    return res;
}

// Root of r(theta, arctan sin theta) - r(theta, theta) on [60 deg, 80 deg],
// trusted devices.
inline double crossover_theta_trusted() {
    auto g = [](double th) {
        return rate_trusted(th, optimal_phi_for_violation(th)) - rate_trusted(th, th);
    };
    return detail::bisect_root(g, 60.0 * M_PI / 180.0, 80.0 * M_PI / 180.0, detail::kAngleTol);
}

// Maximum post-selected rate over (theta, phi) at fixed efficiencies: coarse
// grid plus coordinate-wise golden-section sweeps.
inline OptimizationResult max_rate_over_angles(const Efficiencies& eff, const NoiseParams& noise,
                                               int grid = 64) {
    OptimizationResult res;
    auto f = [&](double th, double ph) { return rate_at_point(th, ph, eff, noise); };
    double best = -1e300, bth = detail::kAngleEps, bph = detail::kAngleEps;
    for (int i = 0; i <= grid; ++i) {
        double th = detail::kAngleEps + (M_PI / 2 - detail::kAngleEps) * i / grid;
        for (int j = 0; j <= grid; ++j) {
            double ph = detail::kAngleEps + (M_PI / 2 - detail::kAngleEps) * j / grid;
            double v = f(th, ph);
            if (v > best) {
                best = v;
                bth = th;
                bph = ph;
            }
        }
    }
    double win = M_PI / 2 / grid;
    for (int sweep = 0; sweep < 5; ++sweep) {
        bth = detail::golden_max([&](double t) { return f(t, bph); },
                                 std::max(detail::kAngleEps, bth - win),
                                 std::min(M_PI / 2, bth + win), detail::kAngleTol, &res.iterations);
        bph = detail::golden_max([&](double p) { return f(bth, p); }, std::max(0.0, bph - win),
                                 std::min(M_PI / 2, bph + win), detail::kAngleTol, &res.iterations);
        win /= 2;
    }
    res.best_theta = bth;
    res.best_phi = bph;
    res.best_value = f(bth, bph);
    res.converged = true;
    return res;
}

// Maximum rate restricted to the ent-B92 line phi = theta.
inline OptimizationResult max_rate_entB92(const Efficiencies& eff, const NoiseParams& noise,
                                          int grid = 2000) {
    OptimizationResult res;
    auto f = [&](double th) { return rate_at_point(th, th, eff, noise); };
    double best = -1e300, bth = detail::kAngleEps;
    for (int i = 0; i <= grid; ++i) {
        double th = detail::kAngleEps + (M_PI / 2 - detail::kAngleEps) * i / grid;
        double v = f(th);
        if (v > best) {
            best = v;
            bth = th;
        }
    }
    double step = M_PI / 2 / grid;
    res.best_theta = detail::golden_max(f, std::max(detail::kAngleEps, bth - step),
                                        std::min(M_PI / 2, bth + step), detail::kAngleTol,
                                        &res.iterations);
    res.best_phi = res.best_theta;
    res.best_value = f(res.best_theta);
    res.converged = true;
    return res;
}

// sup{eta : max over (theta,phi) of r > 0} for eta_A = eta_B = eta, by outer
// bisection with inner 2-D angle optimization. Noiseless expectation: 0.9057.
inline ThresholdResult di_threshold_symmetric(const NoiseParams& noise) {
    auto max_rate = [&](double eta) {
        return max_rate_over_angles(Efficiencies{eta, eta}, noise);
    };
    double lo = 0.5, hi = 1.0;
    if (max_rate(hi).best_value <= 0.0)
        throw std::domain_error("di_threshold_symmetric: no positive rate even at eta = 1");
    if (max_rate(lo).best_value > 0.0)
        throw std::domain_error("di_threshold_symmetric: positive rate at bracket floor eta = 0.5");
    while (hi - lo > detail::kEtaTol) {
        double mid = 0.5 * (lo + hi);
        if (max_rate(mid).best_value > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    ThresholdResult res;
    res.threshold = 0.5 * (lo + hi);
    OptimizationResult above = max_rate(res.threshold + 1e-4);
    res.theta_at_threshold = above.best_theta;
    res.phi_at_threshold = above.best_phi;
    res.achieved_rate_above = above.best_value;
    return res;
}

// Infimum over theta of Bob's Bell-violation threshold with eta_A = 1 and
// phi = theta. Noiseless: approaches 1/2 as theta -> 0; with white noise the
// minimizing theta moves to the interior.
inline ThresholdResult sdi_threshold_bob(const NoiseParams& noise,
                                         double theta_min = 0.5 * M_PI / 180.0,
                                         double theta_max = M_PI / 2) {
    auto thr = [&](double th) {
        TwoQubitState st = make_state(th);
        CoincidenceTable t = noise.is_zero() ? coincidence_probs(st, th)
                                             : coincidence_probs(apply_noise(st, noise), th);
        try {
            return threshold_bob(t);
        } catch (const no_violation_error&) {
            return 1e300; // outside [0,1]; never the minimum when a violation exists
        }
    };
    const int n = 4000;
    double best = 1e300, bth = theta_min;
    for (int i = 0; i <= n; ++i) {
        double th = theta_min + (theta_max - theta_min) * i / n;
        double v = thr(th);
        if (v < best) {
            best = v;
            bth = th;
        }
    }
    if (best > 1.0)
        throw no_violation_error("sdi_threshold_bob: no violation anywhere on the theta grid");
    double step = (theta_max - theta_min) / n;
    double th_star = detail::golden_max([&](double t) { return -thr(t); },
                                        std::max(theta_min, bth - step),
                                        std::min(theta_max, bth + step), detail::kAngleTol);
    ThresholdResult res;
    res.threshold = thr(th_star);
    res.theta_at_threshold = th_star;
    res.phi_at_threshold = th_star;
    res.achieved_rate_above = rate_at_point(
        th_star, th_star, Efficiencies{1.0, std::min(1.0, res.threshold + 1e-4)}, noise);
    return res;
}

enum class ScenarioMode { full_di, one_sdi };

struct RateCurvePoint {
    double eta = 0;
    double rate_generalized = 0;
    double theta_generalized = 0;
    double phi_generalized = 0;
    double rate_entB92 = 0;
    double theta_entB92 = 0;
};

// Per efficiency value: inner-optimized rates for the generalized protocol and
// the ent-B92 restriction.
inline std::vector<RateCurvePoint> rate_vs_eta_curve(ScenarioMode mode, const NoiseParams& noise,
                                                     const std::vector<double>& eta_grid) {
    std::vector<RateCurvePoint> out;
    out.reserve(eta_grid.size());
    for (double eta : eta_grid) {
        Efficiencies eff = mode == ScenarioMode::full_di ? Efficiencies{eta, eta}
                                                         : Efficiencies{1.0, eta};
        RateCurvePoint pt;
        pt.eta = eta;
        OptimizationResult gen = max_rate_over_angles(eff, noise);
        pt.rate_generalized = gen.best_value;
        pt.theta_generalized = gen.best_theta;
        pt.phi_generalized = gen.best_phi;
        OptimizationResult ent = max_rate_entB92(eff, noise, 600);
        pt.rate_entB92 = ent.best_value;
        pt.theta_entB92 = ent.best_theta;
        // phi = theta is a feasible point of the 2-D search; keep the envelope
        // consistent when the 1-D refinement lands closer to the optimum.
        if (ent.best_value > pt.rate_generalized) {
            pt.rate_generalized = ent.best_value;
            pt.theta_generalized = ent.best_theta;
            pt.phi_generalized = ent.best_phi;
        }
        out.push_back(pt);
    }
    return out;
}

} // namespace diqkd
