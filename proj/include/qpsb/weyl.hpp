// weyl.hpp — exact algebra of normal-ordered Weyl words in the noise xi(t)
// and the system mode z: canonical products, the full expectation E, the flow
// J_t, the dynamical map Phi_t, conditional expectations E_s, the extended
// flow sigma_s, and martingales. All commutators are scalars, so every
// operation is exact BCH on coefficients plus an accumulated log-scalar.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "qpsb/kernel.hpp"
#include "qpsb/params.hpp"

namespace qpsb {

inline constexpr double weyl_prune_tol = 1e-14;   // coefficients below are zero
inline constexpr double weyl_equal_tol = 1e-12;   // canonical-form equality

// scalar * e^{mu zbar} e^{mubar z}, an element of the system algebra A0.
// mu and mubar are independent formal parameters, not necessarily conjugate.
struct SystemElement {
    cplx mu{0.0};
    cplx mubar{0.0};
    cplx log_scalar{0.0};
};

// A0 product: e^{m1 zbar} e^{mb1 z} e^{m2 zbar} e^{mb2 z}
//           = e^{(m1+m2) zbar} e^{(mb1+mb2) z} e^{mb1 m2}   since [z, zbar] = 1
inline SystemElement operator*(const SystemElement& x, const SystemElement& y) {
    return {x.mu + y.mu, x.mubar + y.mubar,
            x.log_scalar + y.log_scalar + x.mubar * y.mu};
}

inline SystemElement system_identity() { return {}; }

// One time slot of a Weyl word: e^{a xibar(t)} e^{b xi(t)}.
struct NoiseFactor {
    double t;
    cplx a;
    cplx b;
};

// Normal-ordered, time-ordered Weyl word
//   e^{log_scalar} e^{mu_sys zbar} e^{mubar_sys z}
//     prod_j e^{a_j xibar(t_j)} e^{b_j xi(t_j)}     (t_j strictly increasing).
// Construction keeps the form canonical: factors stay sorted, equal times are
// merged, and every reordering feeds its scalar commutator into log_scalar.
struct WeylWord {
    cplx mu_sys{0.0};
    cplx mubar_sys{0.0};
    std::vector<NoiseFactor> factors;
    cplx log_scalar{0.0};
};

namespace detail {

inline bool negligible(const cplx& c) { return std::abs(c) < weyl_prune_tol; }

inline void prune(WeylWord& w) {
    for (auto& f : w.factors) {
        if (negligible(f.a)) f.a = 0.0;
        if (negligible(f.b)) f.b = 0.0;
    }
    std::erase_if(w.factors,
                  [](const NoiseFactor& f) { return f.a == 0.0 && f.b == 0.0; });
}

}  // namespace detail

// Multiply on the right by e^{c xibar(t)}: commuting it leftwards past
// e^{b_j xi(t_j)} with t_j > t contributes c b_j G(t_j, t) to the log-scalar;
// a same-time slot merges with the same rule.
inline void append_creation(WeylWord& w, double t, cplx c, const ProcessParams& p) {
    require_nonnegative_time(t, "append_creation");
    if (detail::negligible(c)) return;
    auto& fs = w.factors;
    std::size_t i = fs.size();
    while (i > 0 && fs[i - 1].t > t) {
        --i;
        w.log_scalar += c * fs[i].b * kernel_G(fs[i].t, t, p);
    }
    if (i > 0 && fs[i - 1].t == t) {
        w.log_scalar += c * fs[i - 1].b * kernel_G(t, t, p);
        fs[i - 1].a += c;
    } else {
        fs.insert(fs.begin() + static_cast<std::ptrdiff_t>(i), {t, c, 0.0});
    }
}

// Multiply on the right by e^{c xi(t)}: commuting leftwards past
// e^{a_j xibar(t_j)} with t_j > t contributes -c a_j G(t, t_j).
inline void append_annihilation(WeylWord& w, double t, cplx c,
                                const ProcessParams& p) {
    require_nonnegative_time(t, "append_annihilation");
    if (detail::negligible(c)) return;
    auto& fs = w.factors;
    std::size_t i = fs.size();
    while (i > 0 && fs[i - 1].t > t) {
        --i;
        w.log_scalar -= c * fs[i].a * kernel_G(t, fs[i].t, p);
    }
    if (i > 0 && fs[i - 1].t == t) {
        fs[i - 1].b += c;
    } else {
        fs.insert(fs.begin() + static_cast<std::ptrdiff_t>(i), {t, 0.0, c});
    }
}

// Canonical form of an arbitrarily ordered product of factors.
inline WeylWord canonicalize(std::span<const NoiseFactor> product,
                             const ProcessParams& p) {
    WeylWord w;
    for (const auto& f : product) {
        append_creation(w, f.t, f.a, p);
        append_annihilation(w, f.t, f.b, p);
    }
    detail::prune(w);
    return w;
}

// Word product (left * right), exact.
inline WeylWord operator_product(const WeylWord& x, const WeylWord& y,
                                 const ProcessParams& p) {
    WeylWord w = x;
    w.log_scalar += y.log_scalar + x.mubar_sys * y.mu_sys;
    w.mu_sys += y.mu_sys;
    w.mubar_sys += y.mubar_sys;
    for (const auto& f : y.factors) {
        append_creation(w, f.t, f.a, p);
        append_annihilation(w, f.t, f.b, p);
    }
    detail::prune(w);
    return w;
}

// Canonical equality to tolerance. Factors at t = 0 are the identity
// (xi(0) = 0, encoded by G(0, .) = 0) and are ignored.
inline bool canonical_equal(const WeylWord& x, const WeylWord& y,
                            double tol = weyl_equal_tol) {
    if (std::abs(x.mu_sys - y.mu_sys) > tol) return false;
    if (std::abs(x.mubar_sys - y.mubar_sys) > tol) return false;
    if (std::abs(x.log_scalar - y.log_scalar) > tol) return false;
    const auto live = [](const WeylWord& w) {
        std::vector<NoiseFactor> v;
        for (const auto& f : w.factors) {
            if (f.t > 0.0) v.push_back(f);
        }
        return v;
    };
    const auto fx = live(x);
    const auto fy = live(y);
    if (fx.size() != fy.size()) return false;
    for (std::size_t i = 0; i < fx.size(); ++i) {
        if (std::abs(fx[i].t - fy[i].t) > tol) return false;
        if (std::abs(fx[i].a - fy[i].a) > tol) return false;
        if (std::abs(fx[i].b - fy[i].b) > tol) return false;
    }
    return true;
}

// Full Gaussian expectation E: A_infty -> A0,
//   E[word] = sys_factor * exp(sum_{i,j} b_i a_j G(t_i, t_j) (n0 + 1_{i<j})).
inline SystemElement expectation_E(const WeylWord& w, const ProcessParams& p) {
    cplx expo = w.log_scalar;
    const auto& fs = w.factors;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        for (std::size_t j = 0; j < fs.size(); ++j) {
            const double weight = p.n0 + ((i < j) ? 1.0 : 0.0);
            if (weight == 0.0) continue;
            expo += fs[i].b * fs[j].a * kernel_G(fs[i].t, fs[j].t, p) * weight;
        }
    }
    return {w.mu_sys, w.mubar_sys, expo};
}

// Flow J_t: A0 -> A_t,  J_t(e^{mu zbar} e^{mubar z}) =
//   e^{mu e^{-gamma t} zbar} e^{mubar e^{-gamma_bar t} z} e^{mu xibar(t)} e^{mubar xi(t)}.
inline WeylWord flow_J(const SystemElement& e, double t, const ProcessParams& p) {
    require_nonnegative_time(t, "flow_J");
    WeylWord w;
    w.mu_sys = e.mu * std::exp(-p.gamma() * t);
    w.mubar_sys = e.mubar * std::exp(-p.gamma_bar() * t);
    w.log_scalar = e.log_scalar;
    append_creation(w, t, e.mu, p);
    append_annihilation(w, t, e.mubar, p);
    detail::prune(w);
    return w;
}

// Dynamical map Phi_t = E o J_t on A0 (one-point functions):
//   (mu, mubar) -> (mu(t), mubar(t)),  log_scalar += n0 (mu mubar - mu(t) mubar(t)).
inline SystemElement dynamical_map_Phi(const SystemElement& e, double t,
                                       const ProcessParams& p) {
    require_nonnegative_time(t, "dynamical_map_Phi");
    const cplx mu_t = e.mu * std::exp(-p.gamma() * t);
    const cplx mubar_t = e.mubar * std::exp(-p.gamma_bar() * t);
    return {mu_t, mubar_t,
            e.log_scalar + p.n0 * (e.mu * e.mubar - mu_t * mubar_t)};
}

// Conditional expectation E_s: factors at times <= s are untouched; future
// factors are pulled back to time s with decayed coefficients and the exact
// scalar exponents X_s^(N) + n0 Y_s^(N).
inline WeylWord conditional_E(const WeylWord& w, double s, const ProcessParams& p) {
    require_nonnegative_time(s, "conditional_E");
    const cplx g = p.gamma();
    const cplx gb = p.gamma_bar();

    WeylWord out;
    out.mu_sys = w.mu_sys;
    out.mubar_sys = w.mubar_sys;
    out.log_scalar = w.log_scalar;

    std::vector<NoiseFactor> future;
    for (const auto& f : w.factors) {
        if (f.t <= s) {
            out.factors.push_back(f);
        } else {
            future.push_back(f);
        }
    }
    const std::size_t N = future.size();
    if (N == 0) return out;

    // decayed coefficients mu(tau) = mu e^{-gamma tau}, mubar(tau) = mubar e^{-gamma_bar tau}
    const auto mu_of = [&](std::size_t j, double tau) {
        return future[j].a * std::exp(-g * tau);
    };
    const auto mubar_of = [&](std::size_t j, double tau) {
        return future[j].b * std::exp(-gb * tau);
    };

    cplx X = 0.0;
    cplx Y = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        Y += future[i].b * future[i].a;
        for (std::size_t j = i + 1; j < N; ++j) {
            const double tji = future[j].t - future[i].t;
            X += future[i].b * mu_of(j, tji);
            Y += future[i].b * mu_of(j, tji) + future[i].a * mubar_of(j, tji);
        }
        for (std::size_t j = 0; j < N; ++j) {
            const cplx cross = mubar_of(i, future[i].t - s) * mu_of(j, future[j].t - s);
            Y -= cross;
            if (i < j) X -= cross;
        }
    }
    out.log_scalar += X + p.n0 * Y;

    for (std::size_t j = 0; j < N; ++j) {
        const double tau = future[j].t - s;
        append_creation(out, s, mu_of(j, tau), p);
        append_annihilation(out, s, mubar_of(j, tau), p);
    }
    detail::prune(out);
    return out;
}

// Extended flow sigma_s: *-endomorphism of A_infty with sigma_s o J_t = J_{t+s};
//   sigma_s(xi(t)) = xi(t+s) - e^{-gamma_bar t} xi(s),
//   sigma_s(xibar(t)) = xibar(t+s) - e^{-gamma t} xibar(s),
// and sigma_s acts as J_s on the system factor.
inline WeylWord extended_flow_sigma(const WeylWord& w, double s,
                                    const ProcessParams& p) {
    require_nonnegative_time(s, "extended_flow_sigma");
    const cplx g = p.gamma();
    const cplx gb = p.gamma_bar();

    WeylWord out;
    out.mu_sys = w.mu_sys * std::exp(-g * s);
    out.mubar_sys = w.mubar_sys * std::exp(-gb * s);
    out.log_scalar = w.log_scalar;
    append_creation(out, s, w.mu_sys, p);
    append_annihilation(out, s, w.mubar_sys, p);

    for (const auto& f : w.factors) {
        append_creation(out, f.t + s, f.a, p);
        append_creation(out, s, -f.a * std::exp(-g * f.t), p);
        append_annihilation(out, f.t + s, f.b, p);
        append_annihilation(out, s, -f.b * std::exp(-gb * f.t), p);
    }
    detail::prune(out);
    return out;
}

// Exponential martingale M_t = e^{mu e^{gamma t} xibar(t)} e^{mubar e^{gamma_bar t} xi(t)}
//   * e^{-n0 mu mubar e^{(gamma+gamma_bar) t}};  E_s[M_t] = M_s for s < t.
inline WeylWord martingale_M(double t, cplx mu, cplx mubar,
                             const ProcessParams& p) {
    require_nonnegative_time(t, "martingale_M");
    WeylWord w;
    append_creation(w, t, mu * std::exp(p.gamma() * t), p);
    append_annihilation(w, t, mubar * std::exp(p.gamma_bar() * t), p);
    w.log_scalar = -p.n0 * mu * mubar * std::exp(2.0 * p.kappa * t);
    detail::prune(w);
    return w;
}

// Nested (quantum regression) formula: for s < t_1 < ... < t_N and a_j in A0,
//   E_s[J_{t_1}(a_1) ... J_{t_N}(a_N)]
//     = J_s[ Phi_{t_1 - s}(a_1 Phi_{t_2 - t_1}(... a_{N-1} Phi_{t_N - t_{N-1}}(a_N))) ].
// This evaluates the right-hand side; it equals conditional_E of the
// canonicalized product of flows.
inline WeylWord nested_evaluate(
    std::span<const std::pair<SystemElement, double>> elems, double s,
    const ProcessParams& p) {
    require_nonnegative_time(s, "nested_evaluate");
    if (elems.empty()) return flow_J(system_identity(), s, p);
    double prev = s;
    for (const auto& [e, t] : elems) {
        if (!(t > prev)) {
            throw std::domain_error("nested_evaluate: times must be strictly increasing and > s");
        }
        prev = t;
    }
    SystemElement acc = elems.back().first;
    for (std::size_t j = elems.size() - 1; j-- > 0;) {
        const double dt = elems[j + 1].second - elems[j].second;
        acc = elems[j].first * dynamical_map_Phi(acc, dt, p);
    }
    acc = dynamical_map_Phi(acc, elems.front().second - s, p);
    return flow_J(acc, s, p);
}

}  // namespace qpsb
