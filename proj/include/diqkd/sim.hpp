#pragma once

// Event-level Monte Carlo simulation of the generalized ent-B92 protocol:
// pair emission, basis choice, Born-rule outcomes, detection losses,
// non-detection assignment, sifting and post-selection.
//
// Sampling is addressed per event through the counter-based RNG, so results
// are identical for any shard/thread layout.

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cstdlib>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "diqkd/keyrate.hpp"
#include "diqkd/loss.hpp"
#include "diqkd/quantum.hpp"
#include "diqkd/rng.hpp"

namespace diqkd {

struct insufficient_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    ProtocolParams params;
    NoiseParams noise;
    Efficiencies eff;
    std::uint64_t n_pairs = 0;
    std::uint64_t seed = 0;

    void validate() const {
        params.validate();
        noise.validate();
        eff.validate();
        if (n_pairs < 1) throw std::domain_error("SimConfig: n_pairs must be >= 1");
    }
};

struct EventRecord {
    int alice_basis;    // 0 = A0 (key), 1 = A1 (test)
    int bob_basis;      // 0 = B0, 1 = B1
    int alice_raw;      // 0 = a_i, 1 = abar_i, 2 = no detection
    int bob_raw;        // 0 = b_j, 1 = bbar_j, 2 = no detection
    int alice_assigned; // 0 = a_i, 1 = abar_i (after assignment rule)
    int bob_assigned;   // 0 = conclusive (b_j), 1 = inconclusive
};

struct SimResult {
    SimConfig config;

    // counts indexed [alice_basis][bob_basis]
    std::uint64_t n_basis[2][2] = {};
    // assigned outcome pairs: [i][j][alice_assigned][bob_assigned]
    std::uint64_t assigned[2][2][2][2] = {};
    // raw outcome pairs among double-detection events: [i][j][x][y]
    std::uint64_t coinc[2][2][2][2] = {};

    std::uint64_t bob_detected = 0;
    std::uint64_t conclusive = 0;    // Bob detected b_j
    std::uint64_t sifted_len = 0;    // A0 basis and conclusive
    std::uint64_t sifted_errors = 0;
    std::uint64_t ps_len = 0;        // sifted and Alice physically detected
    std::uint64_t ps_errors = 0;

    // empirical estimates; NaN when the denominator is empty
    double p_c_hat = 0, p_c_sigma = 0;
    double q_c_hat = 0, q_c_sigma = 0;
    double q_ps_hat = 0, q_ps_sigma = 0;
    double s_ch_direct_hat = 0, s_ch_direct_sigma = 0;
    double s_ch_predicted_hat = 0;
};

inline double empirical_s_ch_direct(const SimResult& r, double* sigma_out = nullptr);
inline double empirical_s_ch_predicted(const SimResult& r, const Efficiencies& eff);

namespace detail {

inline double ratio_or_nan(std::uint64_t num, std::uint64_t den) {
    return den ? static_cast<double>(num) / static_cast<double>(den)
               : std::numeric_limits<double>::quiet_NaN();
}

inline double binom_sigma(double p, std::uint64_t n) {
    return n ? std::sqrt(p * (1.0 - p) / static_cast<double>(n))
             : std::numeric_limits<double>::quiet_NaN();
}

inline unsigned sim_threads() {
    if (const char* env = std::getenv("DIQKD_THREADS")) {
        long v = std::atol(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Cumulative joint-outcome distributions per basis pair, outcome order
// (a,b), (a,bbar), (abar,b), (abar,bbar).
struct SampleDist {
    double cum[2][2][4];

    explicit SampleDist(const CoincidenceTable& t) {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double acc = 0;
                int k = 0;
                for (int x = 0; x < 2; ++x)
                    for (int y = 0; y < 2; ++y) {
                        acc += t(i, j, x, y);
                        cum[i][j][k++] = acc;
                    }
                cum[i][j][3] = 1.0; // absorb rounding
            }
    }
};

inline EventRecord sample_event(const SimConfig& cfg, const SampleDist& dist,
                                const CounterRng& rng, std::uint64_t idx) {
    EventRecord ev{};
    ev.alice_basis = rng.bernoulli(cfg.params.test_prob, idx, 0) ? 1 : 0;
    ev.bob_basis = rng.bernoulli(0.5, idx, 1) ? 1 : 0;

    double u = rng.uniform(idx, 2);
    const double* cum = dist.cum[ev.alice_basis][ev.bob_basis];
    int k = 0;
    while (k < 3 && u >= cum[k]) ++k;
    int x = k >> 1, y = k & 1;

    bool a_det = rng.bernoulli(cfg.eff.eta_a, idx, 3);
    bool b_det = rng.bernoulli(cfg.eff.eta_b, idx, 4);
    ev.alice_raw = a_det ? x : 2;
    ev.bob_raw = b_det ? y : 2;

    if (a_det) {
        ev.alice_assigned = x;
    } else if (ev.alice_basis == 1) {
        ev.alice_assigned = 1; // abar1, the -1 output
    } else {
        ev.alice_assigned = rng.bernoulli(0.5, idx, 5) ? 1 : 0;
    }
    ev.bob_assigned = (b_det && y == 0) ? 0 : 1;

    assert(!(ev.alice_basis == 1 && !a_det && ev.alice_assigned == 0));
    assert(!(ev.bob_raw == 2 && ev.bob_assigned == 0));
    return ev;
}

} // namespace detail

inline SimResult simulate(const SimConfig& cfg) {
    cfg.validate();
    SimResult res;
    res.config = cfg;

    TwoQubitState st = make_state(cfg.params.theta);
    CoincidenceTable table = cfg.noise.is_zero()
                                 ? coincidence_probs(st, cfg.params.phi)
                                 : coincidence_probs(apply_noise(st, cfg.noise), cfg.params.phi);
    detail::SampleDist dist(table);
    CounterRng rng(cfg.seed);

    const std::uint64_t shard_size = 1u << 16;
    const std::uint64_t n_shards = (cfg.n_pairs + shard_size - 1) / shard_size;
    std::atomic<std::uint64_t> next_shard{0};
    std::mutex merge_mtx;

    auto worker = [&]() {
        SimResult local;
        for (;;) {
            std::uint64_t s = next_shard.fetch_add(1);
            if (s >= n_shards) break;
            std::uint64_t lo = s * shard_size;
            std::uint64_t hi = std::min(cfg.n_pairs, lo + shard_size);
            for (std::uint64_t idx = lo; idx < hi; ++idx) {
                EventRecord ev = detail::sample_event(cfg, dist, rng, idx);
                local.n_basis[ev.alice_basis][ev.bob_basis]++;
                local.assigned[ev.alice_basis][ev.bob_basis][ev.alice_assigned][ev.bob_assigned]++;
                if (ev.alice_raw != 2 && ev.bob_raw != 2)
                    local.coinc[ev.alice_basis][ev.bob_basis][ev.alice_raw][ev.bob_raw]++;
                if (ev.bob_raw != 2) local.bob_detected++;
                if (ev.bob_assigned == 0) {
                    local.conclusive++;
                    if (ev.alice_basis == 0) {
                        local.sifted_len++;
                        // decode bit is bob_basis ^ 1; error iff assigned bit == bob_basis
                        bool err = ev.alice_assigned == ev.bob_basis;
                        if (err) local.sifted_errors++;
                        if (ev.alice_raw != 2) {
                            local.ps_len++;
                            if (err) local.ps_errors++;
                        }
                    }
                }
            }
        }
        std::lock_guard<std::mutex> lk(merge_mtx);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                res.n_basis[i][j] += local.n_basis[i][j];
                for (int x = 0; x < 2; ++x)
                    for (int y = 0; y < 2; ++y) {
                        res.assigned[i][j][x][y] += local.assigned[i][j][x][y];
                        res.coinc[i][j][x][y] += local.coinc[i][j][x][y];
                    }
            }
        res.bob_detected += local.bob_detected;
        res.conclusive += local.conclusive;
        res.sifted_len += local.sifted_len;
        res.sifted_errors += local.sifted_errors;
        res.ps_len += local.ps_len;
        res.ps_errors += local.ps_errors;
    };

    unsigned n_threads = std::min<std::uint64_t>(detail::sim_threads(), n_shards);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    res.p_c_hat = detail::ratio_or_nan(res.conclusive, res.bob_detected);
    res.p_c_sigma = detail::binom_sigma(res.p_c_hat, res.bob_detected);
    res.q_c_hat = detail::ratio_or_nan(res.sifted_errors, res.sifted_len);
    res.q_c_sigma = detail::binom_sigma(res.q_c_hat, res.sifted_len);
    res.q_ps_hat = detail::ratio_or_nan(res.ps_errors, res.ps_len);
    res.q_ps_sigma = detail::binom_sigma(res.q_ps_hat, res.ps_len);

    try {
        res.s_ch_direct_hat = empirical_s_ch_direct(res, &res.s_ch_direct_sigma);
    } catch (const insufficient_data_error&) {
        res.s_ch_direct_hat = res.s_ch_direct_sigma = std::numeric_limits<double>::quiet_NaN();
    }
    try {
        res.s_ch_predicted_hat = empirical_s_ch_predicted(res, cfg.eff);
    } catch (const insufficient_data_error&) {
        res.s_ch_predicted_hat = std::numeric_limits<double>::quiet_NaN();
    }
    return res;
}

// CH parameter assembled directly from assigned-outcome frequencies
// (conditioned on basis choice). Estimates the predicted S_CH at the
// simulated efficiencies.
inline double empirical_s_ch_direct(const SimResult& r, double* sigma_out) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (r.n_basis[i][j] == 0)
                throw insufficient_data_error("empirical_s_ch_direct: empty basis pair");

    auto joint = [&](int i, int j) {
        return static_cast<double>(r.assigned[i][j][0][0]) / static_cast<double>(r.n_basis[i][j]);
    };
    std::uint64_t n_a1 = r.n_basis[1][0] + r.n_basis[1][1];
    std::uint64_t n_b1 = r.n_basis[0][1] + r.n_basis[1][1];
    double p_a1 = static_cast<double>(r.assigned[1][0][0][0] + r.assigned[1][0][0][1] +
                                      r.assigned[1][1][0][0] + r.assigned[1][1][0][1]) /
                  static_cast<double>(n_a1);
    double p_b1 = static_cast<double>(r.assigned[0][1][0][0] + r.assigned[0][1][1][0] +
                                      r.assigned[1][1][0][0] + r.assigned[1][1][1][0]) /
                  static_cast<double>(n_b1);
    double s = joint(1, 1) + joint(0, 1) + joint(1, 0) - joint(0, 0) - p_a1 - p_b1;
    if (sigma_out) {
        double var = 0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double p = joint(i, j);
                var += p * (1.0 - p) / static_cast<double>(r.n_basis[i][j]);
            }
        var += p_a1 * (1.0 - p_a1) / static_cast<double>(n_a1);
        var += p_b1 * (1.0 - p_b1) / static_cast<double>(n_b1);
        *sigma_out = std::sqrt(var);
    }
    return s;
}

// Coincidence-conditioned table from double-detection events, pushed through
// the loss-model prediction at the given (nominal) efficiencies.
inline double empirical_s_ch_predicted(const SimResult& r, const Efficiencies& eff) {
    CoincidenceTable t{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            std::uint64_t n = 0;
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y) n += r.coinc[i][j][x][y];
            if (n == 0)
                throw insufficient_data_error("empirical_s_ch_predicted: no coincidences");
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    t.p[i][j][x][y] =
                        static_cast<double>(r.coinc[i][j][x][y]) / static_cast<double>(n);
        }
    return predict_s_ch(t, eff);
}

inline constexpr double kQuantumMaxCh = 0.2071067811865476; // (sqrt2 - 1)/2

// Plugs the empirical estimates into the key rate formulas. The CH estimate is
// clamped to the quantum maximum so that sampling fluctuations at the extremal
// point cannot push f_ch out of domain.
inline RateReport empirical_rates(const SimResult& r) {
    if (r.ps_len == 0 || r.sifted_len == 0 || r.bob_detected == 0)
        throw insufficient_data_error("empirical_rates: empty key");
    RateReport rep;
    double s = empirical_s_ch_direct(r);
    rep.s_ch = std::min(s, kQuantumMaxCh);
    rep.q_ps = r.q_ps_hat;
    rep.q_c = r.q_c_hat;
    rep.p_c = r.p_c_hat;
    rep.r = rate_post_selected_from_parts(rep.p_c, r.config.eff, rep.s_ch, rep.q_ps);
    rep.r_old = rate_no_postselection_from_parts(rep.p_c, r.config.eff, rep.s_ch, rep.q_c);
    rep.r_bb84_style = rate_bb84_style(r.config.eff, rep.s_ch, rep.q_ps);
    return rep;
}

} // namespace diqkd
