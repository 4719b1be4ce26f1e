// lindblad.hpp — truncated-Fock realization of the thermal quadratic master
// equation: superoperator application (matrix-free, with a dense route for
// small truncations), invariant state, relaxation spectrum, adaptive
// propagation, regression correlators, and coherent/cat-state decoherence.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "qpsb/errors.hpp"
#include "qpsb/params.hpp"
#include "qpsb/weyl.hpp"

namespace qpsb {

using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;

inline cmat annihilation_matrix(int N) {
    if (N < 2) throw std::domain_error("annihilation_matrix: N >= 2 required");
    cmat z = cmat::Zero(N, N);
    for (int n = 1; n < N; ++n) z(n - 1, n) = std::sqrt(static_cast<double>(n));
    return z;
}

inline cmat creation_matrix(int N) {
    return annihilation_matrix(N).adjoint();
}

inline cmat number_matrix(int N) {
    cmat n = cmat::Zero(N, N);
    for (int k = 0; k < N; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

// Generator rho -> i nu [zbar z, rho] + g2 (2 z rho zbar - rho zbar z - zbar z rho)
//                                     + g1 (2 zbar rho z - rho z zbar - z zbar rho),
// with g1 = kappa n0, g2 = kappa (n0 + 1), on an N-level truncation. apply()
// acts on density matrices (Schrodinger), apply_dual() on observables
// (Heisenberg), with Tr(a . apply(rho)) = Tr(apply_dual(a) . rho).
struct Superoperator {
    int N;
    ProcessParams params;
    double g1, g2;
    cmat z, zbar, num;

    Superoperator(int dim, const ProcessParams& p)
        : N(dim),
          params(p),
          g1(p.kappa * p.n0),
          g2(p.kappa * (p.n0 + 1.0)),
          z(annihilation_matrix(dim)),
          zbar(creation_matrix(dim)),
          num(number_matrix(dim)) {}

    cmat apply(const cmat& rho) const {
        const cplx inu(0.0, params.nu);
        cmat out = inu * (num * rho - rho * num);
        out += g2 * (2.0 * z * rho * zbar - rho * zbar * z - zbar * z * rho);
        out += g1 * (2.0 * zbar * rho * z - rho * z * zbar - z * zbar * rho);
        return out;
    }

    cmat apply_dual(const cmat& a) const {
        const cplx inu(0.0, params.nu);
        cmat out = -inu * (num * a - a * num);
        out += g1 * (2.0 * z * a * zbar - z * zbar * a - a * z * zbar);
        out += g2 * (2.0 * zbar * a * z - zbar * z * a - a * zbar * z);
        return out;
    }

    // dense N^2 x N^2 matrix of apply() in the column-stacked basis; intended
    // for small N (cross-validation via the matrix exponential)
    cmat dense() const {
        const int M = N * N;
        cmat big(M, M);
        for (int col = 0; col < M; ++col) {
            cmat e = cmat::Zero(N, N);
            e(col % N, col / N) = 1.0;
            const cmat img = apply(e);
            for (int j = 0; j < N; ++j) {
                for (int i = 0; i < N; ++i) big(j * N + i, col) = img(i, j);
            }
        }
        return big;
    }
};

// Gibbs invariant state, diagonal entries proportional to e^{-sigma n} with
// e^{sigma} = (n0 + 1)/n0; the n0 = 0 limit is the vacuum projector.
inline cmat invariant_state(int N, const ProcessParams& p) {
    if (N < 2) throw std::domain_error("invariant_state: N >= 2 required");
    cmat rho = cmat::Zero(N, N);
    if (p.n0 == 0.0) {
        rho(0, 0) = 1.0;
        return rho;
    }
    const double ratio = p.n0 / (p.n0 + 1.0);
    double w = 1.0;
    double z = 0.0;
    for (int n = 0; n < N; ++n) {
        rho(n, n) = w;
        z += w;
        w *= ratio;
    }
    rho /= z;
    return rho;
}

inline double truncation_leakage(const cmat& rho) {
    const int N = static_cast<int>(rho.rows());
    return std::abs(rho(N - 1, N - 1));
}

inline double trace_distance(const cmat& a, const cmat& b) {
    const cmat d = 0.5 * ((a - b) + (a - b).adjoint().eval());
    Eigen::SelfAdjointEigenSolver<cmat> es(d);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// The generator preserves the diagonal (zero-charge) sector; on occupation
// probabilities x_n it acts as the birth-death matrix
//   (L x)_n = 2 g2 [(n+1) x_{n+1} - n x_n] + 2 g1 [n x_{n-1} - (n+1) x_n].
inline Eigen::MatrixXd diagonal_sector_matrix(int N, const ProcessParams& p) {
    const double g1 = p.kappa * p.n0;
    const double g2 = p.kappa * (p.n0 + 1.0);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N, N);
    for (int n = 0; n < N; ++n) {
        m(n, n) = -2.0 * g2 * n - 2.0 * g1 * (n + 1);
        if (n + 1 < N) m(n, n + 1) = 2.0 * g2 * (n + 1);
        if (n > 0) m(n, n - 1) = 2.0 * g1 * n;
    }
    return m;
}

struct SpectrumReport {
    std::vector<double> target_eigenvalues;   // -2 p kappa, p = 0..pmax
    std::vector<double> matched_eigenvalues;  // nearest diagonal-sector eigenvalue
    std::vector<double> residual_norms;       // |L* v - lambda v| / |v| per p
    double rho1_residual;     // residual of the closed-form first gap vector
    double invariant_residual;
    double mean_occupation_deviation;
    double max_leakage;
};

// Relaxation ladder in the diagonal sector: for p <= pmax an eigenvalue of
// the generator within tolerance of -2 p kappa, with the residual of the
// numerically determined polynomial eigenvector measured through the full
// superoperator. The first gap also has the closed form
// rho_1 = e^{-sigma n} (n - n0), checked directly.
inline SpectrumReport spectrum_check(int N, const ProcessParams& p, int pmax) {
    if (!(pmax >= 0 && pmax < N / 2)) {
        throw std::domain_error("spectrum_check: need 0 <= pmax << N");
    }
    if (!(p.n0 > 0.0)) {
        throw std::domain_error("spectrum_check: n0 > 0 required");
    }
    const Superoperator L(N, p);
    const Eigen::MatrixXd sector = diagonal_sector_matrix(N, p);
    Eigen::EigenSolver<Eigen::MatrixXd> es(sector);
    if (es.info() != Eigen::Success) {
        throw numeric_error("spectrum_check: sector eigensolve failed");
    }

    SpectrumReport rep{};
    rep.max_leakage = 0.0;
    for (int q = 0; q <= pmax; ++q) {
        const double target = -2.0 * p.kappa * q;
        int best = 0;
        double bestdist = std::numeric_limits<double>::infinity();
        for (int k = 0; k < N; ++k) {
            const double d = std::abs(es.eigenvalues()(k) - cplx(target));
            if (d < bestdist) {
                bestdist = d;
                best = k;
            }
        }
        const double lambda = es.eigenvalues()(best).real();
        cvec v = es.eigenvectors().col(best);
        cmat rho = cmat::Zero(N, N);
        for (int n = 0; n < N; ++n) rho(n, n) = v(n);
        rho /= rho.norm();
        const double resid = (L.apply(rho) - lambda * rho).norm();
        rep.target_eigenvalues.push_back(target);
        rep.matched_eigenvalues.push_back(lambda);
        rep.residual_norms.push_back(resid);
        rep.max_leakage = std::max(rep.max_leakage, truncation_leakage(rho));
    }

    const double sigma = p.sigma();
    cmat rho1 = cmat::Zero(N, N);
    for (int n = 0; n < N; ++n) rho1(n, n) = std::exp(-sigma * n) * (n - p.n0);
    rho1 /= rho1.norm();
    rep.rho1_residual = (L.apply(rho1) + 2.0 * p.kappa * rho1).norm();

    const cmat rinv = invariant_state(N, p);
    rep.invariant_residual = L.apply(rinv).norm();
    rep.mean_occupation_deviation =
        std::abs((rinv * L.num).trace().real() - p.n0);
    if (rep.max_leakage > 1e-8) {
        throw numeric_error("spectrum_check: truncation leakage above 1e-8, increase N");
    }
    return rep;
}

struct EvolveOptions {
    double local_tol = 1e-10;
    double leakage_threshold = 1e-6;
    bool hermitize = true;
    bool renormalize_trace = false;
};

namespace detail {

// classic fourth-order step
inline cmat rk4_step(const Superoperator& L, const cmat& rho, double h, bool dual) {
    const auto f = [&](const cmat& x) { return dual ? L.apply_dual(x) : L.apply(x); };
    const cmat k1 = f(rho);
    const cmat k2 = f(rho + 0.5 * h * k1);
    const cmat k3 = f(rho + 0.5 * h * k2);
    const cmat k4 = f(rho + h * k3);
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// step-doubling adaptive integrator for d rho/dt = L rho (or the dual)
inline cmat propagate(const Superoperator& L, cmat state, double t, bool dual,
                      const EvolveOptions& opt) {
    if (t == 0.0) return state;
    // explicit-stability guess: the stiffest sector rate is about 4 N kappa
    const double rate = 4.0 * L.N * L.params.kappa + std::abs(L.params.nu) + 1.0;
    double h = std::min(t, 1.0 / rate);
    double done = 0.0;
    int rejected = 0;
    while (done < t) {
        h = std::min(h, t - done);
        const cmat big = rk4_step(L, state, h, dual);
        cmat half = rk4_step(L, state, 0.5 * h, dual);
        half = rk4_step(L, half, 0.5 * h, dual);
        const double err = (big - half).cwiseAbs().maxCoeff() / 15.0;
        if (err > opt.local_tol) {
            if (++rejected > 10000) {
                throw numeric_error("propagate: step control failed to converge");
            }
            h *= std::max(0.1, 0.9 * std::pow(opt.local_tol / err, 0.2));
            continue;
        }
        // local extrapolation
        state = half + (half - big) / 15.0;
        done += h;
        if (err > 0.0) {
            h *= std::min(4.0, 0.9 * std::pow(opt.local_tol / err, 0.2));
        } else {
            h *= 4.0;
        }
    }
    return state;
}

}  // namespace detail

// rho_t = e^{t L*} rho_0 by adaptive explicit integration. Hermiticity is
// restored by symmetrization; the top-level occupation is monitored as a
// truncation-leakage gauge.
inline cmat evolve(const cmat& rho0, double t, const ProcessParams& p,
                   const EvolveOptions& opt = {}) {
    require_nonnegative_time(t, "evolve");
    if (rho0.rows() != rho0.cols() || rho0.rows() < 2) {
        throw std::domain_error("evolve: square matrix with N >= 2 required");
    }
    const Superoperator L(static_cast<int>(rho0.rows()), p);
    cmat rho = detail::propagate(L, rho0, t, /*dual=*/false, opt);
    if (opt.hermitize) rho = 0.5 * (rho + rho.adjoint().eval());
    if (opt.renormalize_trace) {
        const double tr = rho.trace().real();
        if (std::abs(tr) < 1e-12) throw numeric_error("evolve: vanishing trace");
        rho /= tr;
    }
    if (truncation_leakage(rho) > opt.leakage_threshold) {
        throw numeric_error("evolve: truncation leakage above threshold, increase N");
    }
    return rho;
}

// Heisenberg propagation a -> e^{t L} a of an observable (no hermitization).
inline cmat evolve_dual(const cmat& a, double t, const ProcessParams& p,
                        const EvolveOptions& opt = {}) {
    require_nonnegative_time(t, "evolve_dual");
    const Superoperator L(static_cast<int>(a.rows()), p);
    return detail::propagate(L, a, t, /*dual=*/true, opt);
}

// Truncated matrix of the system Weyl element
// e^{log_scalar} e^{mu zbar} e^{mubar z}; both exponentials are nilpotent at
// finite truncation, so the power series is finite and exact.
inline cmat weyl_matrix(int N, const SystemElement& e) {
    if (N < 2) throw std::domain_error("weyl_matrix: N >= 2 required");
    const auto nilpotent_exp = [N](const cmat& m) {
        cmat acc = cmat::Identity(N, N);
        cmat term = cmat::Identity(N, N);
        for (int k = 1; k < N; ++k) {
            term = (term * m) / static_cast<double>(k);
            acc += term;
        }
        return acc;
    };
    const cmat up = nilpotent_exp(e.mu * creation_matrix(N));
    const cmat dn = nilpotent_exp(e.mubar * annihilation_matrix(N));
    return std::exp(e.log_scalar) * (up * dn);
}

// normalized truncated coherent state; returns the pre-normalization weight
// deficit through *tail_weight when requested
inline cvec coherent_vector(int N, cplx alpha, double* tail_weight = nullptr) {
    if (N < 2) throw std::domain_error("coherent_vector: N >= 2 required");
    cvec v(N);
    cplx c = 1.0;
    v(0) = c;
    for (int n = 1; n < N; ++n) {
        c *= alpha / std::sqrt(static_cast<double>(n));
        v(n) = c;
    }
    const double norm2 = v.squaredNorm();
    if (tail_weight != nullptr) {
        *tail_weight = std::abs(std::exp(std::norm(alpha)) - norm2) *
                       std::exp(-std::norm(alpha));
    }
    v /= std::sqrt(norm2);
    return v;
}

// Multi-time correlator by quantum regression: for s = 0 < t_1 < ... < t_N,
//   E[J_{t_1}(a_1) ... J_{t_N}(a_N)]
//     = Tr(rho_0 Phi_{t_1}(A_1 Phi_{t_2 - t_1}(... A_{N-1} Phi_{t_N - t_{N-1}}(A_N))))
// with A_j the truncated Weyl matrix of a_j and Phi the Heisenberg semigroup.
inline cplx regression_correlator(
    std::span<const std::pair<SystemElement, double>> elems, const cmat& rho0,
    const ProcessParams& p, const EvolveOptions& opt = {}) {
    const int N = static_cast<int>(rho0.rows());
    if (elems.empty()) return rho0.trace();
    double prev = 0.0;
    for (const auto& [e, t] : elems) {
        if (!(t > prev)) {
            throw std::domain_error("regression_correlator: times must be strictly increasing and > 0");
        }
        prev = t;
    }
    cmat acc = weyl_matrix(N, elems.back().first);
    for (std::size_t j = elems.size() - 1; j-- > 0;) {
        const double dt = elems[j + 1].second - elems[j].second;
        acc = weyl_matrix(N, elems[j].first) * evolve_dual(acc, dt, p, opt);
    }
    acc = evolve_dual(acc, elems.front().second, p, opt);
    return (rho0 * acc).trace();
}

inline cplx coherent_overlap(cplx a, cplx b) {  // <a|b>
    return std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(a) * b);
}

struct CatStateSpec {
    cplx alpha;
    cplx beta;
    cplx u{1.0 / std::sqrt(2.0)};
    cplx v{1.0 / std::sqrt(2.0)};

    double normalization_deviation() const {
        const double s = std::norm(u) + std::norm(v) +
                         2.0 * (u * std::conj(v) * coherent_overlap(beta, alpha)).real();
        return std::abs(s - 1.0);
    }
};

// Closed-form evolution of the four coherent blocks of a cat state. The block
// rho_t^{xy} (evolved from |x><y|) has coherent-basis kernel
//   <b| rho_t^{xy} |c> = <y|x> / (sigma_t + 1) <b|c>
//                        e^{-(c - x(t))(conj(b) - conj(y(t))) / (sigma_t + 1)}
// with sigma_t = n0 (1 - e^{-2 kappa t}) and x(t) = e^{-gamma_bar t} x.
// The 1/(sigma_t + 1) prefactor keeps each block trace-consistent; it cancels
// in the decoherence ratio.
struct CatEvolution {
    CatStateSpec spec;
    ProcessParams params;
    double t;
    double sigma_t;
    cplx alpha_t;
    cplx beta_t;

    cplx block_element(cplx x, cplx y, cplx b, cplx c) const {
        const cplx decay = std::exp(-params.gamma_bar() * t);
        const cplx xt = decay * x;
        const cplx yt = decay * y;
        const double s = sigma_t + 1.0;
        return coherent_overlap(y, x) / s * coherent_overlap(b, c) *
               std::exp(-(c - xt) * (std::conj(b) - std::conj(yt)) / s);
    }

    // full cat state rho_t = |u|^2 rho^{aa} + u conj(v) rho^{ab}
    //                      + v conj(u) rho^{ba} + |v|^2 rho^{bb}
    cplx state_element(cplx b, cplx c) const {
        const cplx a = spec.alpha;
        const cplx be = spec.beta;
        return std::norm(spec.u) * block_element(a, a, b, c) +
               spec.u * std::conj(spec.v) * block_element(a, be, b, c) +
               spec.v * std::conj(spec.u) * block_element(be, a, b, c) +
               std::norm(spec.v) * block_element(be, be, b, c);
    }
};

inline CatEvolution cat_evolution_closed_form(const CatStateSpec& spec, double t,
                                              const ProcessParams& p) {
    require_nonnegative_time(t, "cat_evolution_closed_form");
    const cplx decay = std::exp(-p.gamma_bar() * t);
    return {spec, p, t, p.n0 * (1.0 - std::exp(-2.0 * p.kappa * t)),
            decay * spec.alpha, decay * spec.beta};
}

// Decoherence ratio of the off-diagonal cat blocks,
//   R_t = |<a|b>|^2 |<a(t)|b(t)>|^{-2/(sigma_t+1)},
// equal to |<b|r^{ba}|c><b|r^{ab}|c>| / |<b|r^{aa}|c><b|r^{bb}|c>| for any
// probes b, c.
inline double decoherence_ratio(const CatStateSpec& spec, double t,
                                const ProcessParams& p) {
    require_nonnegative_time(t, "decoherence_ratio");
    if (std::abs(spec.alpha - spec.beta) < 1e-12) {
        throw std::domain_error("decoherence_ratio: alpha and beta must differ");
    }
    const double sigma_t = p.n0 * (1.0 - std::exp(-2.0 * p.kappa * t));
    const double d2 = std::norm(spec.alpha - spec.beta);
    const double d2t = d2 * std::exp(-2.0 * p.kappa * t);
    // |<a|b>|^2 = e^{-|a-b|^2}
    return std::exp(-d2 + d2t / (sigma_t + 1.0));
}

inline double decoherence_ratio_probe(const CatStateSpec& spec, double t,
                                      const ProcessParams& p, cplx b, cplx c) {
    if (std::abs(spec.alpha - spec.beta) < 1e-12) {
        throw std::domain_error("decoherence_ratio_probe: alpha and beta must differ");
    }
    const CatEvolution ev = cat_evolution_closed_form(spec, t, p);
    const cplx a = spec.alpha;
    const cplx be = spec.beta;
    const cplx num = ev.block_element(be, a, b, c) * ev.block_element(a, be, b, c);
    const cplx den = ev.block_element(a, a, b, c) * ev.block_element(be, be, b, c);
    if (std::abs(den) < 1e-280) {
        throw numeric_error("decoherence_ratio_probe: probe overlap underflow");
    }
    return std::abs(num) / std::abs(den);
}

}  // namespace qpsb
