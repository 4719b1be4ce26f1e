// quadrature.hpp — adaptive quadrature, principal-value integration with
// symmetric-window subtraction, and long-range Lorentzian Fourier sums.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qpsb/errors.hpp"
#include "qpsb/params.hpp"

namespace qpsb {

struct QuadConfig {
    double tol = 1e-10;        // target absolute tolerance of adaptive pieces
    int max_depth = 30;        // adaptive bisection depth (deep enough to pin
                               // density jumps between nodes)
    double pv_window = 1.0;    // half-width of the symmetric PV window
    double tail_tol = 1e-12;   // bound below which a truncated tail is accepted
};

// Adaptive Gauss-Kronrod on [a,b]; b may be +inf. Throws numeric_error when the
// error estimate stays above tolerance.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, const QuadConfig& cfg,
                        const char* what = "integrate") {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, cfg.max_depth, cfg.tol, &err);
    if (!(err <= std::max(cfg.tol * 100.0, 1e-8 * std::abs(v) + cfg.tol * 10.0))) {
        throw numeric_error(std::string(what) +
                            ": quadrature error estimate " + std::to_string(err) +
                            " above tolerance " + std::to_string(cfg.tol));
    }
    return v;
}

// Cauchy principal value of  int_0^inf r(w) / (eps - w) dw.
//
// Inside a window symmetric about eps the constant r(eps) contributes zero by
// symmetry, so the integrand is replaced by (r(w) - r(eps))/(eps - w), which is
// bounded; outside the window the raw integrand is integrated adaptively.
// support_hi < inf truncates the upper integral (densities of finite support).
inline double principal_value(const std::function<double(double)>& r,
                              double eps, double support_hi,
                              const QuadConfig& cfg) {
    if (!(eps > 0.0)) {
        throw std::domain_error("principal_value: eps must be > 0");
    }
    const double reps = r(eps);
    const double delta = std::min(cfg.pv_window, 0.5 * eps);
    const double lo = eps - delta;
    const double hi = eps + delta;

    const auto regular = [&](double w) {
        const double d = eps - w;
        // removable point; the adaptive rule never lands exactly on it, but
        // guard against underflow of the difference quotient
        if (std::abs(d) < 1e-300) return 0.0;
        return (r(w) - reps) / d;
    };
    // split at eps so no node coincides with the singular point
    double inside = integrate(regular, lo, eps, cfg, "principal_value(window-)") +
                    integrate(regular, eps, hi, cfg, "principal_value(window+)");

    const auto raw = [&](double w) { return r(w) / (eps - w); };
    double below = (lo > 0.0) ? integrate(raw, 0.0, lo, cfg, "principal_value(below)")
                              : 0.0;
    double above = 0.0;
    if (support_hi > hi) {
        above = integrate(raw, hi, support_hi, cfg, "principal_value(above)");
    } else if (std::isinf(support_hi)) {
        above = integrate(raw, hi, std::numeric_limits<double>::infinity(), cfg,
                          "principal_value(tail)");
    }
    return inside + below + above;
}

// Quadrature of the Lorentzian Fourier integral
//   int dw e^{-i w tau} (hw/pi) / ((w - center)^2 + hw^2)
// over the real line. The finite window [-W, W] is integrated with composite
// Gauss-Legendre panels sized to the oscillation. The tau = 0 tail is the
// analytic arctan remainder; oscillatory tails use two integration-by-parts
// boundary terms, with W chosen so the O(1/(tau^2 W^3)) residue is below
// tail_tol.
inline cplx lorentzian_fourier_quad(double center, double hw, double tau,
                                    const QuadConfig& cfg) {
    if (!(hw > 0.0)) {
        throw std::domain_error("lorentzian_fourier_quad: half-width must be > 0");
    }
    const double atau = std::abs(tau);
    const bool zero_phase = atau < 1e-12;
    double W;
    if (zero_phase) {
        W = std::abs(center) + 1e4 * hw;  // tail handled in closed form below
    } else {
        W = std::cbrt(6.0 * hw / (M_PI * atau * atau * cfg.tail_tol));
        W = std::max(W, std::abs(center) + 50.0 * hw);
    }

    const auto g = [&](double w) {
        const double d = w - center;
        return (hw / M_PI) / (d * d + hw * hw);
    };
    const auto gp = [&](double w) {
        const double d = w - center;
        const double den = d * d + hw * hw;
        return -(hw / M_PI) * 2.0 * d / (den * den);
    };

    // panel width: resolve both the oscillation (half a period per panel)
    // and the Lorentzian peak
    const double osc = zero_phase ? 1e30 : M_PI / atau;
    cplx acc = 0.0;
    using gauss = boost::math::quadrature::gauss<double, 15>;
    double a = -W;
    while (a < W) {
        const double dist = std::abs(a - center);
        const double h = std::max(std::min(osc, std::max(hw, 0.05 * dist)), 1e-6);
        const double b = std::min(a + h, W);
        const auto fr = [&](double w) { return std::cos(w * tau) * g(w); };
        const auto fi = [&](double w) { return -std::sin(w * tau) * g(w); };
        acc += cplx(gauss::integrate(fr, a, b), gauss::integrate(fi, a, b));
        a = b;
    }

    if (zero_phase) {
        // exact remainder of the normalized Lorentzian outside [-W, W]
        const double t1 = std::atan((W - center) / hw);
        const double t2 = std::atan((W + center) / hw);
        acc += cplx(1.0 - (t1 + t2) / M_PI, 0.0);
    } else {
        const cplx itau(0.0, tau);
        const cplx phase_up = std::exp(cplx(0.0, -W * tau));
        const cplx phase_lo = std::exp(cplx(0.0, W * tau));
        acc += phase_up * (g(W) / itau - gp(W) / (tau * tau));
        acc += phase_lo * (-g(-W) / itau + gp(-W) / (tau * tau));
    }
    return acc;
}

}  // namespace qpsb
