// discrete.hpp — discrete-time chain z_n = lam z_{n-1} + (1-|lam|^2)^{1/2} a_n
// with fresh thermal modes a_n, projective ground-state checks after each
// step, a dense two-mode oracle for the survival probability, and a
// counter-based Monte-Carlo sampler of the geometric exit time.
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <complex>
#include <cstdint>
#include <thread>
#include <vector>

#include "qpsb/errors.hpp"
#include "qpsb/lindblad.hpp"
#include "qpsb/params.hpp"

namespace qpsb {

struct ChainSpec {
    cplx lam;
    double n0;
    int nmax = 64;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(std::abs(lam) < 1.0)) {
            throw config_error("ChainSpec: |lam| < 1 required");
        }
        if (!(n0 >= 0.0)) throw config_error("ChainSpec: n0 >= 0 required");
        if (nmax < 1) throw config_error("ChainSpec: nmax >= 1 required");
    }
};

// thermal single-mode state, diagonal proportional to (n0/(n0+1))^n
inline cmat thermal_state(int N, double n0) {
    return invariant_state(N, ProcessParams{1.0, 0.0, n0});
}

namespace detail {

// Two-mode Gaussian unitary with U^dag z U = lam z + (1-|lam|^2)^{1/2} a on
// the (system, ancilla) pair: a beamsplitter of angle arccos|lam| followed by
// a number rotation carrying the phase of lam. Dense matrix on the
// (T x T)-dimensional joint space, column-stacked as system-major kron.
inline cmat chain_step_unitary(int T, cplx lam) {
    const double m = std::abs(lam);
    const double theta = std::acos(std::min(m, 1.0));
    const cmat z = annihilation_matrix(T);
    const cmat id = cmat::Identity(T, T);
    const cmat za = Eigen::kroneckerProduct(z, z.adjoint()).eval();  // z a^dag
    const cmat K = theta * (za.adjoint() - za);  // U1 = e^{K}: U1^dag z U1 = cos(theta) z + sin(theta) a
    cmat U = K.exp();
    if (m > 0.0) {
        // trailing number rotation puts the phase of lam on the z component:
        // rot^dag z rot = e^{i chi} z for rot = e^{i chi n}
        const double chi = std::arg(lam);
        cmat rot = cmat::Zero(T, T);
        for (int n = 0; n < T; ++n) rot(n, n) = std::exp(cplx(0.0, chi * n));
        U = U * Eigen::kroneckerProduct(rot, id).eval();
    }
    return U;
}

inline cmat partial_trace_ancilla(const cmat& joint, int T) {
    cmat out = cmat::Zero(T, T);
    for (int i = 0; i < T; ++i) {
        for (int j = 0; j < T; ++j) {
            cplx s = 0.0;
            for (int k = 0; k < T; ++k) s += joint(i * T + k, j * T + k);
            out(i, j) = s;
        }
    }
    return out;
}

}  // namespace detail

// Probability that projective ground-state checks succeed after each of the
// first n steps, by brute force: couple the system to a fresh thermal mode,
// apply the exact two-mode update, trace the mode out, read off the
// ground-state weight, project, repeat.
inline double survival_probability_oracle(const ChainSpec& spec, int n, int trunc) {
    spec.validate();
    if (n < 0 || n > spec.nmax) {
        throw std::domain_error("survival_probability_oracle: need 0 <= n <= nmax");
    }
    if (trunc < 2) {
        throw std::domain_error("survival_probability_oracle: trunc >= 2 required");
    }
    const double thermal_tail =
        (spec.n0 > 0.0)
            ? std::pow(spec.n0 / (spec.n0 + 1.0), static_cast<double>(trunc))
            : 0.0;
    if (thermal_tail > 1e-10) {
        throw numeric_error("survival_probability_oracle: thermal tail above 1e-10, increase trunc");
    }
    const int T = trunc;
    const cmat U = detail::chain_step_unitary(T, spec.lam);
    const cmat bath = thermal_state(T, spec.n0);

    cmat rho = cmat::Zero(T, T);
    rho(0, 0) = 1.0;
    double survival = 1.0;
    for (int step = 0; step < n; ++step) {
        const cmat joint = U * Eigen::kroneckerProduct(rho, bath).eval() * U.adjoint();
        const cmat reduced = detail::partial_trace_ancilla(joint, T);
        const double p0 = reduced(0, 0).real();
        if (!(p0 > 0.0)) throw numeric_error("survival_probability_oracle: vanishing ground weight");
        survival *= p0;
        rho = cmat::Zero(T, T);
        rho(0, 0) = 1.0;  // post-projection state
    }
    return survival;
}

// per-step leave probability from the dense oracle
inline double leave_probability_oracle(const ChainSpec& spec, int trunc) {
    return 1.0 - survival_probability_oracle(spec, std::min(1, spec.nmax), trunc);
}

// closed-form conjecture for the per-step leave probability, confirmed by the
// dense oracle in the test suite before use
inline double leave_probability_conjecture(const ChainSpec& spec) {
    spec.validate();
    const double m = spec.n0 * (1.0 - std::norm(spec.lam));
    return m / (1.0 + m);
}

namespace detail {

// counter-based bit mixer (splitmix64 finalizer); (seed, counter) -> U(0,1)
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t h = mix64(mix64(seed) ^ counter);
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

struct ExitTimeResult {
    std::vector<std::uint64_t> histogram;  // histogram[k-1] = exits at step k
    std::uint64_t censored = 0;            // runs surviving past nmax
    std::uint64_t samples = 0;
    double leave_prob_used;    // per-step Bernoulli parameter fed to the sampler
    double fitted_leave_prob;  // censored-geometric maximum likelihood estimate
    double fitted_stderr;
    double mean_exit_step;     // over uncensored runs
    double chi_square;         // goodness of fit against the fitted geometric law
    int chi_square_dof;
};

// Sequential Bernoulli sampling of the ground-state exit step. After every
// successful check the state is exactly the ground state, so the draws are
// i.i.d. with the oracle's per-step leave probability. Sampling is
// counter-based, keyed by sample index, so the result is bit-reproducible for
// a fixed seed and independent of the worker count.
inline ExitTimeResult exit_time_montecarlo(const ChainSpec& spec,
                                           std::uint64_t samples,
                                           double leave_prob, int workers = 1) {
    spec.validate();
    if (samples < 1) throw config_error("exit_time_montecarlo: samples >= 1 required");
    if (!(leave_prob >= 0.0 && leave_prob < 1.0)) {
        throw std::domain_error("exit_time_montecarlo: leave probability in [0,1) required");
    }
    if (workers < 1) throw config_error("exit_time_montecarlo: workers >= 1 required");
    ExitTimeResult res;
    res.samples = samples;
    res.leave_prob_used = leave_prob;
    res.histogram.assign(static_cast<std::size_t>(spec.nmax), 0);

    struct Shard {
        std::vector<std::uint64_t> histogram;
        std::uint64_t censored = 0;
        std::uint64_t exits = 0;
        std::uint64_t exit_step_sum = 0;
    };
    const std::uint64_t stride = static_cast<std::uint64_t>(spec.nmax) + 1;
    const auto run_range = [&](std::uint64_t lo, std::uint64_t hi, Shard& out) {
        out.histogram.assign(static_cast<std::size_t>(spec.nmax), 0);
        for (std::uint64_t i = lo; i < hi; ++i) {
            int exit_step = 0;
            for (int n = 1; n <= spec.nmax; ++n) {
                const double u = detail::uniform01(
                    spec.seed, i * stride + static_cast<std::uint64_t>(n));
                if (u < leave_prob) {
                    exit_step = n;
                    break;
                }
            }
            if (exit_step == 0) {
                ++out.censored;
            } else {
                ++out.histogram[static_cast<std::size_t>(exit_step - 1)];
                ++out.exits;
                out.exit_step_sum += static_cast<std::uint64_t>(exit_step);
            }
        }
    };

    const int nshards = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), samples));
    std::vector<Shard> shards(static_cast<std::size_t>(nshards));
    if (nshards == 1) {
        run_range(0, samples, shards[0]);
    } else {
        std::vector<std::thread> pool;
        const std::uint64_t chunk = samples / static_cast<std::uint64_t>(nshards);
        for (int w = 0; w < nshards; ++w) {
            const std::uint64_t lo = chunk * static_cast<std::uint64_t>(w);
            const std::uint64_t hi = (w == nshards - 1) ? samples : lo + chunk;
            pool.emplace_back(
                [&run_range, lo, hi, &shard = shards[static_cast<std::size_t>(w)]] {
                    run_range(lo, hi, shard);
                });
        }
        for (auto& th : pool) th.join();
    }
    std::uint64_t exits = 0;
    std::uint64_t exit_step_sum = 0;
    for (const Shard& sh : shards) {
        res.censored += sh.censored;
        exits += sh.exits;
        exit_step_sum += sh.exit_step_sum;
        for (std::size_t k = 0; k < res.histogram.size(); ++k) {
            res.histogram[k] += sh.histogram[k];
        }
    }
    res.mean_exit_step =
        (exits > 0) ? static_cast<double>(exit_step_sum) / static_cast<double>(exits)
                    : 0.0;

    // censored-geometric MLE: p_hat = exits / (total steps attempted)
    const double total_steps =
        static_cast<double>(exit_step_sum) +
        static_cast<double>(res.censored) * static_cast<double>(spec.nmax);
    if (exits == 0 || total_steps == 0.0) {
        res.fitted_leave_prob = 0.0;
        res.fitted_stderr = 0.0;
        res.chi_square = 0.0;
        res.chi_square_dof = 0;
        return res;
    }
    const double p = static_cast<double>(exits) / total_steps;
    res.fitted_leave_prob = p;
    res.fitted_stderr = std::sqrt(p * p * (1.0 - p) / static_cast<double>(exits));

    // chi-square against the fitted law, pooling bins to expected count >= 5
    double chi = 0.0;
    int bins = 0;
    double obs_pool = 0.0;
    double exp_pool = 0.0;
    const double ns = static_cast<double>(samples);
    for (int k = 1; k <= spec.nmax; ++k) {
        obs_pool += static_cast<double>(res.histogram[static_cast<std::size_t>(k - 1)]);
        exp_pool += ns * std::pow(1.0 - p, k - 1) * p;
        if (exp_pool >= 5.0) {
            chi += (obs_pool - exp_pool) * (obs_pool - exp_pool) / exp_pool;
            ++bins;
            obs_pool = 0.0;
            exp_pool = 0.0;
        }
    }
    obs_pool += static_cast<double>(res.censored);
    exp_pool += ns * std::pow(1.0 - p, spec.nmax);
    if (exp_pool > 0.0) {
        chi += (obs_pool - exp_pool) * (obs_pool - exp_pool) / exp_pool;
        ++bins;
    }
    res.chi_square = chi;
    res.chi_square_dof = std::max(bins - 2, 1);  // one fitted parameter
    return res;
}

}  // namespace qpsb
