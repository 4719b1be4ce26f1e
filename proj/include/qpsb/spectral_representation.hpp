// spectral_representation.hpp — continuum spectral representation of z(t):
// Lorentzian mode density R_Omega, kernel reconstruction by quadrature, and
// the diagonalizing-mode checks.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "qpsb/kernel.hpp"
#include "qpsb/params.hpp"
#include "qpsb/quadrature.hpp"

namespace qpsb {

// In the Markov limit r(eps) = kappa/pi and the PV transform equals -nu, so
// the mode density is the normalized Lorentzian centred at -nu of half-width
// kappa: R_Omega = (kappa/pi) / ((Omega + nu)^2 + kappa^2).
inline double mode_density(double Omega, const ProcessParams& p) {
    const double d = Omega + p.nu;
    return (p.kappa / M_PI) / (d * d + p.kappa * p.kappa);
}

// int R_Omega dOmega, by quadrature; equals 1.
inline double mode_density_normalization(const ProcessParams& p,
                                         const QuadConfig& quad = {}) {
    return lorentzian_fourier_quad(-p.nu, p.kappa, 0.0, quad).real();
}

// Noise commutator from the spectral representation,
//   [xi(t), xibar(s)] = (kappa/pi) int dw
//       (e^{-iwt} - e^{-gamma_bar t})(e^{iws} - e^{-gamma s}) / |w + i gamma_bar|^2.
// The product expands into four Lorentzian Fourier integrals, each evaluated
// by quadrature; reproduces kernel_G(t,s).
inline cplx spectral_kernel_quadrature(const ProcessParams& p, double t, double s,
                                       const QuadConfig& quad = {}) {
    require_nonnegative_time(t, "spectral_kernel_quadrature(t)");
    require_nonnegative_time(s, "spectral_kernel_quadrature(s)");
    const cplx g = p.gamma();
    const cplx gb = p.gamma_bar();
    // |w + i gamma_bar|^2 = (w + nu)^2 + kappa^2: centre -nu, half-width kappa
    const double c = -p.nu;
    const double hw = p.kappa;
    const cplx term1 = lorentzian_fourier_quad(c, hw, t - s, quad);
    const cplx term2 = -std::exp(-g * s) * lorentzian_fourier_quad(c, hw, t, quad);
    const cplx term3 = -std::exp(-gb * t) * lorentzian_fourier_quad(c, hw, -s, quad);
    const cplx term4 = std::exp(-gb * t - g * s) *
                       lorentzian_fourier_quad(c, hw, 0.0, quad);
    return term1 + term2 + term3 + term4;
}

struct DiagonalModeReport {
    double norm_deviation;        // |int R_Omega dOmega - 1|
    double max_kernel_deviation;  // max |int e^{-i Omega tau} R_Omega - e^{-gamma_bar tau}|
    std::vector<double> taus;
    std::vector<cplx> quadrature_values;
};

// Verifies that z(t) = int dOmega e^{-i Omega t} R_Omega^{1/2} b_Omega
// reproduces the stationary full commutator: for tau = t - s >= 0,
//   int dOmega e^{-i Omega tau} R_Omega = e^{-gamma_bar tau}.
inline DiagonalModeReport diagonal_mode_check(const ProcessParams& p,
                                              const QuadConfig& quad = {},
                                              const std::vector<double>& taus = {
                                                  0.0, 0.5, 1.0, 2.0, 4.0}) {
    DiagonalModeReport rep;
    rep.norm_deviation = std::abs(mode_density_normalization(p, quad) - 1.0);
    rep.max_kernel_deviation = 0.0;
    rep.taus = taus;
    for (double tau : taus) {
        require_nonnegative_time(tau, "diagonal_mode_check");
        const cplx q = lorentzian_fourier_quad(-p.nu, p.kappa, tau, quad);
        rep.quadrature_values.push_back(q);
        const cplx expected = std::exp(-p.gamma_bar() * tau);
        rep.max_kernel_deviation =
            std::max(rep.max_kernel_deviation, std::abs(q - expected));
    }
    return rep;
}

}  // namespace qpsb
