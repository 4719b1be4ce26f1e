// finite_bath.hpp — exact finite-oscillator bath: secular equation, interlaced
// eigenfrequencies with residues, sum-rule identities, and the rescaled
// weak-coupling drift/noise coefficients.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "qpsb/errors.hpp"
#include "qpsb/params.hpp"
#include "qpsb/spectral_density.hpp"

namespace qpsb {

// System frequency eps, dimensionless coupling lambda, and bath oscillators
// (omega_alpha, |phi_alpha|^2, n_alpha). Coupling phases are absorbed into the
// bath oscillators, so couplings stores the nonnegative weights |phi_alpha|^2.
// Oscillators whose weight is exactly zero decouple from the secular problem
// and are kept aside in `decoupled`.
struct BathSpec {
    double eps = 1.0;
    double lambda = 0.1;
    std::vector<double> omegas;       // strictly increasing, > 0
    std::vector<double> couplings;    // |phi_alpha|^2 > 0
    std::vector<double> occupations;  // n_alpha >= 0
    std::vector<double> decoupled;    // zero-weight frequencies (from_density)

    std::size_t size() const { return omegas.size(); }

    void validate() const {
        if (!(eps > 0.0) || !(lambda > 0.0)) {
            throw config_error("BathSpec: eps and lambda must be > 0");
        }
        if (omegas.size() != couplings.size() ||
            omegas.size() != occupations.size()) {
            throw config_error("BathSpec: field lengths differ");
        }
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            if (!(omegas[i] > 0.0)) {
                throw config_error("BathSpec: omegas must be positive");
            }
            if (i > 0 && !(omegas[i] > omegas[i - 1])) {
                throw config_error("BathSpec: omegas must be strictly increasing");
            }
            if (!(couplings[i] > 0.0)) {
                throw config_error("BathSpec: couplings must be positive");
            }
            if (!(occupations[i] >= 0.0)) {
                throw config_error("BathSpec: occupations must be >= 0");
            }
        }
    }

    // eps - lambda^2 sum |phi|^2 / omega; positive iff the Hamiltonian is
    // bounded below (equivalently S(0) < 0, all eigenfrequencies positive)
    double boundedness_margin() const {
        double s = 0.0;
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            s += couplings[i] / omegas[i];
        }
        return eps - lambda * lambda * s;
    }
    bool bounded_below() const { return boundedness_margin() > 0.0; }
};

// Secular function S(Omega) = Omega - eps - lambda^2 sum |phi|^2/(Omega - omega)
inline double secular_eval(const BathSpec& spec, double Omega) {
    double s = 0.0;
    for (std::size_t i = 0; i < spec.omegas.size(); ++i) {
        const double d = Omega - spec.omegas[i];
        if (d == 0.0) {
            throw std::domain_error("secular_eval: Omega at a bath pole");
        }
        s += spec.couplings[i] / d;
    }
    return Omega - spec.eps - spec.lambda * spec.lambda * s;
}

// S'(Omega) = 1 + lambda^2 sum |phi|^2/(Omega - omega)^2, evaluated analytically
inline double secular_deriv(const BathSpec& spec, double Omega) {
    double s = 0.0;
    for (std::size_t i = 0; i < spec.omegas.size(); ++i) {
        const double d = Omega - spec.omegas[i];
        s += spec.couplings[i] / (d * d);
    }
    return 1.0 + spec.lambda * spec.lambda * s;
}

// Exact eigen-decomposition of the coupled system: the L+1 interlaced roots
// Omega_k of S and their residues R_k = 1/S'(Omega_k).
struct SecularSpectrum {
    BathSpec bath;
    std::vector<double> Omegas;    // sorted, Omega_0 < omega_1 < Omega_1 < ...
    std::vector<double> residues;  // R_k > 0

    // eigenfrequencies of the physical system including decoupled oscillators
    std::vector<double> all_eigenfrequencies() const {
        std::vector<double> v = Omegas;
        v.insert(v.end(), bath.decoupled.begin(), bath.decoupled.end());
        std::sort(v.begin(), v.end());
        return v;
    }
};

namespace detail {

// bisection on a bracket with guaranteed sign change; runs to relative
// bracket width ~1 ulp
inline double bisect_root(const BathSpec& spec, double lo, double hi) {
    double flo = secular_eval(spec, lo);
    double fhi = secular_eval(spec, hi);
    if (!(flo < 0.0) || !(fhi > 0.0)) {
        throw numeric_error("eigenfrequencies: bracket [" + std::to_string(lo) +
                            ", " + std::to_string(hi) +
                            "] has no sign change (near-degenerate omegas?)");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket at machine resolution
        const double fm = secular_eval(spec, mid);
        if (fm < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// nudge a pole endpoint inward until the secular function shows the expected
// sign (S -> -inf just above a pole, +inf just below)
inline double nudge_from_pole(const BathSpec& spec, double pole, double towards,
                              bool want_negative) {
    double step = std::max(std::abs(pole), 1.0) * 1e-15;
    const double dir = (towards > pole) ? 1.0 : -1.0;
    for (int i = 0; i < 60; ++i) {
        const double x = pole + dir * step;
        if ((dir > 0 && x >= towards) || (dir < 0 && x <= towards)) break;
        const double f = secular_eval(spec, x);
        if (want_negative ? (f < 0.0) : (f > 0.0)) return x;
        step *= 4.0;
    }
    throw numeric_error("eigenfrequencies: could not establish sign near pole " +
                        std::to_string(pole));
}

}  // namespace detail

// One root per open interval between consecutive poles, one below omega_1 and
// one above omega_L, each located by bracketed bisection; residues from the
// analytic derivative.
inline SecularSpectrum eigenfrequencies(const BathSpec& spec) {
    spec.validate();
    const std::size_t L = spec.size();
    SecularSpectrum sp;
    sp.bath = spec;
    sp.Omegas.reserve(L + 1);

    if (L == 0) {
        sp.Omegas.push_back(spec.eps);
        sp.residues.push_back(1.0);
        return sp;
    }

    // root below omega_1: S(-inf) = -inf and S -> +inf just below the pole.
    // Under boundedness S(0) < 0 so [0, omega_1) brackets it; otherwise walk
    // left until the sign turns negative.
    {
        double lo = 0.0;
        double flo;
        try {
            flo = secular_eval(spec, lo);
        } catch (const std::domain_error&) {
            lo = -1e-12;
            flo = secular_eval(spec, lo);
        }
        if (!(flo < 0.0)) {
            double step = std::max(spec.eps, 1.0);
            while (!(secular_eval(spec, lo) < 0.0)) {
                lo -= step;
                step *= 2.0;
                if (lo < -1e12) {
                    throw numeric_error("eigenfrequencies: no lower bracket");
                }
            }
        }
        const double hi =
            detail::nudge_from_pole(spec, spec.omegas[0], lo, /*want_negative=*/false);
        sp.Omegas.push_back(detail::bisect_root(spec, lo, hi));
    }

    // interior roots: S goes from -inf to +inf across (omega_a, omega_{a+1})
    for (std::size_t a = 0; a + 1 < L; ++a) {
        const double lo = detail::nudge_from_pole(spec, spec.omegas[a],
                                                  spec.omegas[a + 1], true);
        const double hi = detail::nudge_from_pole(spec, spec.omegas[a + 1],
                                                  spec.omegas[a], false);
        sp.Omegas.push_back(detail::bisect_root(spec, lo, hi));
    }

    // root above omega_L: S is increasing past the last pole
    {
        const double lo =
            detail::nudge_from_pole(spec, spec.omegas[L - 1],
                                    spec.omegas[L - 1] + 1.0, true);
        double sum_c = 0.0;
        for (double c : spec.couplings) sum_c += c;
        double hi = spec.omegas[L - 1] + std::abs(spec.eps) +
                    spec.lambda * spec.lambda * sum_c + 1.0;
        while (!(secular_eval(spec, hi) > 0.0)) hi *= 2.0;
        sp.Omegas.push_back(detail::bisect_root(spec, lo, hi));
    }

    sp.residues.reserve(L + 1);
    for (double Om : sp.Omegas) {
        sp.residues.push_back(1.0 / secular_deriv(spec, Om));
    }
    return sp;
}

// Deviations of the three residue identities that encode the initial
// conditions of the coupled evolution.
struct SumRuleReport {
    double dev_unit;   // |sum_k R_k - 1|
    double dev_pole;   // max_a |sum_k R_k/(Omega_k - omega_a)|
    double dev_resid;  // max_{a,b} |sum_k R_k/((..a)(..b)) - delta_ab/(lambda^2 phi_a^2)|
};

inline SumRuleReport sum_rule_check(const SecularSpectrum& sp) {
    const auto& b = sp.bath;
    const std::size_t L = b.size();
    const std::size_t K = sp.Omegas.size();
    SumRuleReport rep{0.0, 0.0, 0.0};

    double unit = 0.0;
    for (double r : sp.residues) unit += r;
    rep.dev_unit = std::abs(unit - 1.0);

    for (std::size_t a = 0; a < L; ++a) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            s += sp.residues[k] / (sp.Omegas[k] - b.omegas[a]);
        }
        rep.dev_pole = std::max(rep.dev_pole, std::abs(s));
    }

    const double l2 = b.lambda * b.lambda;
    for (std::size_t a = 0; a < L; ++a) {
        for (std::size_t bb = a; bb < L; ++bb) {
            double s = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                s += sp.residues[k] /
                     ((sp.Omegas[k] - b.omegas[a]) * (sp.Omegas[k] - b.omegas[bb]));
            }
            const double target = (a == bb) ? 1.0 / (l2 * b.couplings[a]) : 0.0;
            rep.dev_resid = std::max(rep.dev_resid, std::abs(s - target));
        }
    }
    return rep;
}

// Riemann discretization of a smooth density: omega_l = eta l, |phi_l|^2 =
// eta r(eta l). Grid points where r vanishes decouple and are kept aside.
// occupation maps omega -> n(omega) (constant or Bose rule).
inline BathSpec bath_from_density(const SpectralDensity& r, double eps,
                                  double lambda, double eta, std::size_t L,
                                  const std::function<double(double)>& occupation) {
    if (!(eta > 0.0) || L < 1) {
        throw config_error("bath_from_density: eta > 0 and L >= 1 required");
    }
    BathSpec spec;
    spec.eps = eps;
    spec.lambda = lambda;
    double bound_sum = 0.0;
    for (std::size_t l = 1; l <= L; ++l) {
        const double w = eta * static_cast<double>(l);
        const double c = eta * r(w);
        if (c > 0.0) {
            spec.omegas.push_back(w);
            spec.couplings.push_back(c);
            spec.occupations.push_back(occupation(w));
            bound_sum += c / w;
        } else {
            spec.decoupled.push_back(w);
        }
    }
    if (!(eps > lambda * lambda * bound_sum)) {
        throw config_error(
            "bath_from_density: boundedness violated, eps = " + std::to_string(eps) +
            " <= lambda^2 sum eta r(eta l)/(eta l) = " +
            std::to_string(lambda * lambda * bound_sum));
    }
    return spec;
}

inline std::function<double(double)> constant_occupation(double n0) {
    return [n0](double) { return n0; };
}

inline std::function<double(double)> bose_occupation(double T) {
    if (!(T > 0.0)) throw config_error("bose_occupation: T must be > 0");
    return [T](double w) { return 1.0 / std::expm1(w / T); };
}

// Rescaled drift coefficient fbar(t) = sum_k R_k e^{-i (Omega_k - eps) t / lambda^2};
// converges to e^{-gamma_bar t} in the weak-coupling limit.
inline cplx rescaled_drift(const SecularSpectrum& sp, double t) {
    require_nonnegative_time(t, "rescaled_drift");
    const double l2 = sp.bath.lambda * sp.bath.lambda;
    cplx acc = 0.0;
    for (std::size_t k = 0; k < sp.Omegas.size(); ++k) {
        const double phase = -(sp.Omegas[k] - sp.bath.eps) * t / l2;
        acc += sp.residues[k] * std::exp(cplx(0.0, phase));
    }
    return acc;
}

// Noise coefficients Fbar_alpha(t) = lambda sum_k R_k e^{-i(Omega_k - eps) t /
// lambda^2} phi_alpha / (Omega_k - omega_alpha), one per coupled oscillator.
inline std::vector<cplx> rescaled_noise_coefficients(const SecularSpectrum& sp,
                                                     double t) {
    require_nonnegative_time(t, "rescaled_noise_coefficients");
    const auto& b = sp.bath;
    const double l2 = b.lambda * b.lambda;
    const std::size_t L = b.size();
    const std::size_t K = sp.Omegas.size();
    std::vector<cplx> mode(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double phase = -(sp.Omegas[k] - b.eps) * t / l2;
        mode[k] = sp.residues[k] * std::exp(cplx(0.0, phase));
    }
    std::vector<cplx> out(L);
    for (std::size_t a = 0; a < L; ++a) {
        const double phi = std::sqrt(b.couplings[a]);
        cplx acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            acc += mode[k] * (phi / (sp.Omegas[k] - b.omegas[a]));
        }
        out[a] = b.lambda * acc;
    }
    return out;
}

// Finite-size noise kernel sum_alpha Fbar_alpha(t) F_alpha(s); with
// weighted=true each term carries n_alpha (the two-point function).
// Converges to G(t,s) resp. the thermal kernel as lambda -> 0.
inline cplx rescaled_noise_kernel(const SecularSpectrum& sp, double t, double s,
                                  bool weighted = false) {
    const auto ft = rescaled_noise_coefficients(sp, t);
    const auto fs = rescaled_noise_coefficients(sp, s);
    cplx acc = 0.0;
    for (std::size_t a = 0; a < ft.size(); ++a) {
        const double w = weighted ? sp.bath.occupations[a] : 1.0;
        acc += w * ft[a] * std::conj(fs[a]);
    }
    return acc;
}

// |fbar(t)|^2 + sum_alpha |Fbar_alpha(t)|^2; exactly 1 at every finite size.
inline double unitarity_sum(const SecularSpectrum& sp, double t) {
    const cplx f = rescaled_drift(sp, t);
    double acc = std::norm(f);
    for (const cplx& c : rescaled_noise_coefficients(sp, t)) acc += std::norm(c);
    return acc;
}

}  // namespace qpsb
