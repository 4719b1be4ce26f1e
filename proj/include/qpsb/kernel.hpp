// kernel.hpp — closed-form noise kernels G(t,s), two-point functions, and the
// limiting kernels (t-Brownian, classical diffusive, Ornstein-Uhlenbeck).
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "qpsb/params.hpp"

namespace qpsb {

// Commutator kernel [xi(t), xibar(s)] = G(t,s), min-form:
//   G(t,s) = e^{-gamma_bar t - gamma s} (e^{(gamma+gamma_bar) min(t,s)} - 1)
inline cplx kernel_G(double t, double s, const ProcessParams& p) {
    require_nonnegative_time(t, "kernel_G(t)");
    require_nonnegative_time(s, "kernel_G(s)");
    const cplx g = p.gamma();
    const cplx gb = p.gamma_bar();
    const double m = std::min(t, s);
    return std::exp(-gb * t - g * s) * (std::exp((g + gb) * m) - 1.0);
}

// Piecewise form of the same kernel; kept as an independent evaluation route.
//   t <= s: (e^{gamma t} - e^{-gamma_bar t}) e^{-gamma s}
//   t >= s: e^{-gamma_bar t} (e^{gamma_bar s} - e^{-gamma s})
inline cplx kernel_G_piecewise(double t, double s, const ProcessParams& p) {
    require_nonnegative_time(t, "kernel_G_piecewise(t)");
    require_nonnegative_time(s, "kernel_G_piecewise(s)");
    const cplx g = p.gamma();
    const cplx gb = p.gamma_bar();
    if (t <= s) {
        return (std::exp(g * t) - std::exp(-gb * t)) * std::exp(-g * s);
    }
    return std::exp(-gb * t) * (std::exp(gb * s) - std::exp(-g * s));
}

// Two-point function E[xibar(t) xi(s)] evaluated at (t,s):
// E[xibar(s) xi(t)] = n0 G(s,t); note the argument swap against the commutator.
inline cplx two_point(double t, double s, const ProcessParams& p) {
    return p.n0 * kernel_G(s, t, p);
}

// Full commutator [z(t), zbar(s)] = e^{-gamma_bar t - gamma s} + G(t,s),
// which is stationary: equal to e^{-gamma_bar (t-s)} for t >= s.
inline cplx full_commutator_zz(double t, double s, const ProcessParams& p) {
    require_nonnegative_time(t, "full_commutator_zz(t)");
    require_nonnegative_time(s, "full_commutator_zz(s)");
    if (t < s) {
        throw std::domain_error(
            "full_commutator_zz: requires t >= s (caller swaps and conjugates)");
    }
    return std::exp(-p.gamma_bar() * t - p.gamma() * s) + kernel_G(t, s, p);
}

// kappa -> 0 limit of G/kappa with the nu-phase removed: [chi(t), chibar(s)].
inline double limit_kernel_tbrownian(double t, double s) {
    require_nonnegative_time(t, "limit_kernel_tbrownian(t)");
    require_nonnegative_time(s, "limit_kernel_tbrownian(s)");
    return 2.0 * std::min(t, s);
}

// kappa -> 0 with D = kappa n0 fixed: classical diffusive two-point function
// E[xibar(t) xi(s)] = 2 D e^{i nu (t-s)} min(t,s); the commutator vanishes.
inline cplx limit_kernel_classical(double t, double s, double D, double nu) {
    require_nonnegative_time(t, "limit_kernel_classical(t)");
    require_nonnegative_time(s, "limit_kernel_classical(s)");
    if (D < 0.0) {
        throw std::domain_error("limit_kernel_classical: D must be >= 0");
    }
    return 2.0 * D * std::exp(cplx(0.0, nu * (t - s))) * std::min(t, s);
}

// Semi-classical quadrature covariance: two commuting Ornstein-Uhlenbeck
// processes, E[X(t)X(s)] = (T/2 omega0) e^{-kappa(t+s)} (e^{2 kappa min} - 1).
inline double ou_covariance(double t, double s, double T, double omega0,
                            double kappa) {
    require_nonnegative_time(t, "ou_covariance(t)");
    require_nonnegative_time(s, "ou_covariance(s)");
    if (!(T > 0.0) || !(omega0 > 0.0) || !(kappa > 0.0)) {
        throw std::domain_error("ou_covariance: T, omega0, kappa must be > 0");
    }
    const double m = std::min(t, s);
    return (T / (2.0 * omega0)) * std::exp(-kappa * (t + s)) *
           (std::exp(2.0 * kappa * m) - 1.0);
}

}  // namespace qpsb
