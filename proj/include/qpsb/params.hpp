// params.hpp — Markov-limit process parameters (kappa, nu, n0) and derived rates
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

namespace qpsb {

using cplx = std::complex<double>;

// Parameters of the Markov-limit process. Rates and times are mutually
// inverse units (hbar = 1); no unit system is enforced.
//
// kappa  damping rate, strictly positive (kappa = 0 is served by the
//        dedicated limit kernels, not by this type)
// nu     effective frequency (renormalized, not the bare one)
// n0     mean bath occupation at the system frequency, >= 0
struct ProcessParams {
    double kappa;
    double nu;
    double n0;

    ProcessParams(double kappa_, double nu_, double n0_ = 0.0)
        : kappa(kappa_), nu(nu_), n0(n0_) {
        if (!(kappa > 0.0)) {
            throw std::domain_error("ProcessParams: kappa must be > 0");
        }
        if (!(n0 >= 0.0)) {
            throw std::domain_error("ProcessParams: n0 must be >= 0");
        }
    }

    // gamma = kappa + i nu, gamma_bar = kappa - i nu
    cplx gamma() const { return {kappa, nu}; }
    cplx gamma_bar() const { return {kappa, -nu}; }

    // Gibbs exponent of the invariant state: n0 = 1/(e^sigma - 1).
    double sigma() const {
        if (!(n0 > 0.0)) {
            throw std::domain_error("ProcessParams::sigma: undefined for n0 = 0");
        }
        return std::log((n0 + 1.0) / n0);
    }

    bool operator==(const ProcessParams&) const = default;
};

inline void require_nonnegative_time(double t, const char* who) {
    if (!(t >= 0.0)) {
        throw std::domain_error(std::string(who) + ": negative time");
    }
}

}  // namespace qpsb
