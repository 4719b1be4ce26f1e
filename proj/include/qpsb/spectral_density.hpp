// spectral_density.hpp — reservoir coupling densities r(omega) and the damping
// coefficient gamma_bar = pi r(eps) + i PV int r(w)/(eps - w) dw.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpsb/errors.hpp"
#include "qpsb/quadrature.hpp"

namespace qpsb {

enum class DensityFamily { lorentzian, ohmic_with_cutoff, gaussian_bump, tabulated };

// A nonnegative coupling density r(omega) on omega >= 0. support_hi marks
// where the density is identically zero (inf for unbounded families), which
// the principal-value scheme uses to truncate its upper integral.
struct SpectralDensity {
    DensityFamily family = DensityFamily::tabulated;
    std::function<double(double)> eval;
    double support_hi = std::numeric_limits<double>::infinity();

    double operator()(double omega) const { return eval(omega); }

    // r(w) = amp * (width/pi) / ((w - center)^2 + width^2), restricted to w >= 0
    static SpectralDensity lorentzian(double amp, double center, double width) {
        if (!(amp > 0.0) || !(width > 0.0)) {
            throw config_error("lorentzian density: amp and width must be > 0");
        }
        SpectralDensity d;
        d.family = DensityFamily::lorentzian;
        d.eval = [amp, center, width](double w) {
            if (w < 0.0) return 0.0;
            const double dd = w - center;
            return amp * (width / M_PI) / (dd * dd + width * width);
        };
        return d;
    }

    // r(w) = amp * w * e^{-w / cutoff}
    static SpectralDensity ohmic_with_cutoff(double amp, double cutoff) {
        if (!(amp > 0.0) || !(cutoff > 0.0)) {
            throw config_error("ohmic density: amp and cutoff must be > 0");
        }
        SpectralDensity d;
        d.family = DensityFamily::ohmic_with_cutoff;
        d.eval = [amp, cutoff](double w) {
            return (w < 0.0) ? 0.0 : amp * w * std::exp(-w / cutoff);
        };
        return d;
    }

    // r(w) = amp * e^{-(w - center)^2 / (2 width^2)}
    static SpectralDensity gaussian_bump(double amp, double center, double width) {
        if (!(amp > 0.0) || !(width > 0.0)) {
            throw config_error("gaussian-bump density: amp and width must be > 0");
        }
        SpectralDensity d;
        d.family = DensityFamily::gaussian_bump;
        d.eval = [amp, center, width](double w) {
            if (w < 0.0) return 0.0;
            const double dd = (w - center) / width;
            return amp * std::exp(-0.5 * dd * dd);
        };
        return d;
    }

    // piecewise-linear interpolation through (omega_i, r_i); zero outside
    static SpectralDensity tabulated(std::vector<double> omegas,
                                     std::vector<double> values) {
        if (omegas.size() != values.size() || omegas.size() < 2) {
            throw config_error("tabulated density: need >= 2 (omega, r) samples");
        }
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            if (i > 0 && !(omegas[i] > omegas[i - 1])) {
                throw config_error("tabulated density: omega must be strictly increasing");
            }
            if (values[i] < 0.0) {
                throw config_error("tabulated density: r(omega) must be >= 0");
            }
        }
        SpectralDensity d;
        d.family = DensityFamily::tabulated;
        d.support_hi = omegas.back();
        d.eval = [om = std::move(omegas), va = std::move(values)](double w) {
            if (w <= om.front() || w >= om.back()) {
                // closed endpoints: return the endpoint value exactly at it
                if (w == om.front()) return va.front();
                if (w == om.back()) return va.back();
                return 0.0;
            }
            const auto it = std::upper_bound(om.begin(), om.end(), w);
            const std::size_t j = static_cast<std::size_t>(it - om.begin());
            const double f = (w - om[j - 1]) / (om[j] - om[j - 1]);
            return va[j - 1] + f * (va[j] - va[j - 1]);
        };
        return d;
    }

    // two-column CSV (omega, r), optional header line
    static SpectralDensity from_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open density CSV: " + path);
        std::vector<double> om, va;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string a, b;
            if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) continue;
            try {
                om.push_back(std::stod(a));
                va.push_back(std::stod(b));
            } catch (const std::exception&) {
                continue;  // header or comment line
            }
        }
        return tabulated(std::move(om), std::move(va));
    }
};

// gamma_bar = pi r(eps) + i PV int_0^inf r(w)/(eps - w) dw. The real part is
// pi r(eps) by construction; only the imaginary part is quadrature.
inline cplx gamma_from_density(const SpectralDensity& r, double eps,
                               const QuadConfig& quad = {}) {
    if (!(eps > 0.0)) {
        throw std::domain_error("gamma_from_density: eps must be > 0");
    }
    const double re = M_PI * r(eps);
    const double im = principal_value([&r](double w) { return r(w); }, eps,
                                      r.support_hi, quad);
    return {re, im};
}

}  // namespace qpsb
