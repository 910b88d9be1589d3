#pragma once

// Two-qubit state construction, the colored/white noise channel, polarization
// measurement projectors and Born-rule coincidence probabilities for the
// generalized ent-B92 protocol.
//
// Basis ordering is fixed everywhere as {HH, HV, VH, VV}.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace diqkd {

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec2 = Eigen::Vector2cd;
using Vec4 = Eigen::Vector4cd;

inline constexpr double kHermTol = 1e-12;
inline constexpr double kEigenFloor = -1e-10;

struct ProtocolParams {
    double theta;            // entanglement angle, (0, pi/2]
    double phi;              // Bob basis angle, [0, pi/2]
    double test_prob = 0.05; // probability of Alice choosing the A1 basis

    void validate() const {
        if (!(theta > 0.0) || theta > M_PI / 2 + kHermTol)
            throw std::domain_error("ProtocolParams: theta must be in (0, pi/2]");
        if (phi < 0.0 || phi > M_PI / 2 + kHermTol)
            throw std::domain_error("ProtocolParams: phi must be in [0, pi/2]");
        if (test_prob < 0.0 || test_prob >= 1.0)
            throw std::domain_error("ProtocolParams: test_prob must be in [0,1)");
    }
};

struct NoiseParams {
    double p_c = 0.0; // colored (phase-damping) weight
    double p_w = 0.0; // white (depolarizing) weight

    void validate() const {
        if (p_c < 0.0 || p_w < 0.0 || p_c + p_w > 1.0)
            throw std::domain_error("NoiseParams: weights must be >= 0 with p_c + p_w <= 1");
    }
    bool is_zero() const { return p_c == 0.0 && p_w == 0.0; }
};

class TwoQubitState {
  public:
    enum class Kind { pure, mixed };

    static TwoQubitState pure(const Vec4& amps) {
        TwoQubitState s;
        s.kind_ = Kind::pure;
        s.amps_ = amps;
        s.rho_ = amps * amps.adjoint();
        s.check_invariants();
        return s;
    }

    static TwoQubitState mixed(const Mat4& rho) {
        TwoQubitState s;
        s.kind_ = Kind::mixed;
        s.amps_.setZero();
        s.rho_ = rho;
        s.check_invariants();
        return s;
    }

    Kind kind() const { return kind_; }
    bool is_pure() const { return kind_ == Kind::pure; }

    const Mat4& density() const { return rho_; }

    const Vec4& amplitudes() const {
        if (!is_pure()) throw std::domain_error("amplitudes(): state is not pure");
        return amps_;
    }

    double purity() const { return (rho_ * rho_).trace().real(); }

    // C = 2 |a_HH a_VV - a_HV a_VH| for pure states.
    double concurrence() const {
        if (!is_pure()) throw std::domain_error("concurrence(): state is not pure");
        return 2.0 * std::abs(amps_(0) * amps_(3) - amps_(1) * amps_(2));
    }

  private:
    TwoQubitState() = default;

    void check_invariants() const {
        if (is_pure()) {
            if (std::abs(amps_.squaredNorm() - 1.0) > kHermTol)
                throw std::domain_error("TwoQubitState: pure amplitudes not normalized");
            return;
        }
        if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
            throw std::domain_error("TwoQubitState: density matrix not Hermitian");
        if (std::abs(rho_.trace().real() - 1.0) > kHermTol || std::abs(rho_.trace().imag()) > kHermTol)
            throw std::domain_error("TwoQubitState: trace != 1");
        Eigen::SelfAdjointEigenSolver<Mat4> es(rho_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < kEigenFloor)
            throw std::domain_error("TwoQubitState: negative eigenvalue");
    }

    Kind kind_ = Kind::pure;
    Vec4 amps_;
    Mat4 rho_;
};

// |Phi(theta)> = cos(theta/2)|HH> + sin(theta/2)|VV>, 0 < theta <= pi/2.
inline TwoQubitState make_state(double theta) {
    if (!(theta > 0.0) || theta > M_PI / 2 + kHermTol)
        throw std::domain_error("make_state: theta must be in (0, pi/2]");
    Vec4 a = Vec4::Zero();
    a(0) = std::cos(theta / 2);
    a(3) = std::sin(theta / 2);
    return TwoQubitState::pure(a);
}

// rho = (1-p_c-p_w)|Phi><Phi| + p_c rho_c + p_w I/4 with
// rho_c = cos^2(theta/2)|HH><HH| + sin^2(theta/2)|VV><VV|.
inline TwoQubitState apply_noise(const TwoQubitState& state, const NoiseParams& noise) {
    if (!state.is_pure())
        throw std::domain_error("apply_noise: input state must be pure");
    noise.validate();
    const Vec4& a = state.amplitudes();
    Mat4 rho = (1.0 - noise.p_c - noise.p_w) * state.density();
    rho(0, 0) += noise.p_c * std::norm(a(0));
    rho(3, 3) += noise.p_c * std::norm(a(3));
    rho += (noise.p_w / 4.0) * Mat4::Identity();
    return TwoQubitState::mixed(rho);
}

enum class Party { alice, bob };

struct MeasurementOutcome {
    Party party;
    int basis;       // k in {0,1}
    bool bar;        // true for abar_k / bbar_k

    void validate() const {
        if (basis != 0 && basis != 1)
            throw std::domain_error("MeasurementOutcome: basis index must be 0 or 1");
    }
    std::string label() const {
        std::string s = party == Party::alice ? "a" : "b";
        if (bar) s += "bar";
        return s + std::to_string(basis);
    }
};

// Single-qubit state vector for a named outcome, in the {H, V} basis.
inline Vec2 outcome_ket(const MeasurementOutcome& o, double phi) {
    o.validate();
    Vec2 v;
    if (o.party == Party::alice) {
        if (o.basis == 1) {
            // a1 = V, abar1 = H
            v << (o.bar ? 1.0 : 0.0), (o.bar ? 0.0 : 1.0);
        } else {
            // a0 = (H+V)/sqrt2, abar0 = (H-V)/sqrt2
            const double s = 1.0 / std::sqrt(2.0);
            v << s, (o.bar ? -s : s);
        }
        return v;
    }
    const double sign = (o.basis == 0) ? -1.0 : 1.0; // -(-1)^k
    if (!o.bar)
        v << std::sin(phi / 2), sign * std::cos(phi / 2);
    else
        v << std::cos(phi / 2), -sign * std::sin(phi / 2);
    return v;
}

inline Mat2 projector(const MeasurementOutcome& o, double phi) {
    Vec2 k = outcome_ket(o, phi);
    return k * k.adjoint();
}

// Bob's restricted POVM: {1/2 |b0><b0|, 1/2 |b1><b1|, 1 - Pi0 - Pi1}.
inline std::array<Mat2, 3> bob_povm(double phi) {
    Mat2 pi0 = 0.5 * projector({Party::bob, 0, false}, phi);
    Mat2 pi1 = 0.5 * projector({Party::bob, 1, false}, phi);
    return {pi0, pi1, Mat2::Identity() - pi0 - pi1};
}

// Joint outcome probabilities p(x,y), conditioned on the basis pair choice and
// normalized over coincidences. Index convention: (alice_basis, bob_basis,
// alice_bar, bob_bar), bar = 1 selects abar_i / bbar_j.
struct CoincidenceTable {
    double p[2][2][2][2];

    double operator()(int i, int j, int x, int y) const { return p[i][j][x][y]; }

    void validate() const {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double sum = 0;
                for (int x = 0; x < 2; ++x)
                    for (int y = 0; y < 2; ++y) {
                        if (p[i][j][x][y] < -kHermTol || p[i][j][x][y] > 1.0 + kHermTol)
                            throw std::domain_error("CoincidenceTable: entry outside [0,1]");
                        sum += p[i][j][x][y];
                    }
                if (std::abs(sum - 1.0) > 1e-12)
                    throw std::domain_error("CoincidenceTable: basis pair not normalized");
            }
    }

    // P_c = 1/2 (1 - cos theta cos phi) for pure states; here from the table,
    // averaged over Bob's basis choice (independent of Alice's basis).
    double conclusive_prob() const {
        return 0.5 * (p[0][0][0][0] + p[0][0][1][0]) + 0.5 * (p[0][1][0][0] + p[0][1][1][0]);
    }

    // QBER on post-selected data. Decode rule: conclusive b_k carries bit k^1,
    // so the error events are (a0,b0) and (abar0,b1).
    double qber_ps() const {
        double pc = conclusive_prob();
        if (pc <= 0.0)
            throw std::domain_error("qber_ps: conclusive probability is zero");
        return (0.5 * p[0][0][0][0] + 0.5 * p[0][1][1][0]) / pc;
    }
};

inline Mat4 kron2(const Mat2& a, const Mat2& b) {
    Mat4 out;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            out.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
    return out;
}

// p(x,y) = Tr[rho (P_x (x) P_y)] for all outcome pairs of each basis pair.
inline CoincidenceTable coincidence_probs(const TwoQubitState& state, double phi) {
    CoincidenceTable t{};
    const Mat4& rho = state.density();
    Mat2 pa[2][2], pb[2][2];
    for (int k = 0; k < 2; ++k)
        for (int bar = 0; bar < 2; ++bar) {
            pa[k][bar] = projector({Party::alice, k, bar != 0}, phi);
            pb[k][bar] = projector({Party::bob, k, bar != 0}, phi);
        }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y) {
                    Mat4 op = kron2(pa[i][x], pb[j][y]);
                    t.p[i][j][x][y] = (rho * op).trace().real();
                }
    return t;
}

} // namespace diqkd
