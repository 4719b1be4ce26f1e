// Truncated-Fock master equation: generator structure, invariant state,
// relaxation spectrum, adaptive propagation, regression correlators, and
// coherent/cat decoherence. Cross-paths: the dense superoperator matrix with
// a generic matrix exponential, and closed-form Weyl expectations.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "qpsb/lindblad.hpp"
#include "qpsb/weyl.hpp"

using namespace qpsb;
using Catch::Matchers::WithinAbs;

namespace {

struct Stream {
    std::uint64_t s = 0x6b90d2c4u, c = 0;
    double u(double a, double b) {
        c += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = s + c;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        x ^= x >> 31;
        return a + (b - a) * ((x >> 11) + 0.5) * 0x1.0p-53;
    }
    cplx z(double r) { return {u(-r, r), u(-r, r)}; }
};

// random hermitian unit-trace matrix supported on the first N-2 levels, so one
// generator application stays inside the truncation
cmat random_state(Stream& st, int N) {
    cmat m = cmat::Zero(N, N);
    for (int i = 0; i < N - 2; ++i) {
        for (int j = 0; j < N - 2; ++j) m(i, j) = st.z(1.0);
    }
    m = (m * m.adjoint()).eval();
    m /= m.trace();
    return m;
}

cmat random_observable(Stream& st, int N) {
    cmat m = cmat::Zero(N, N);
    for (int i = 0; i < N - 2; ++i) {
        for (int j = 0; j < N - 2; ++j) m(i, j) = st.z(1.0);
    }
    return 0.5 * (m + m.adjoint().eval());
}

}  // namespace

TEST_CASE("mode matrices") {
    const int N = 6;
    const cmat z = annihilation_matrix(N);
    const cmat zbar = creation_matrix(N);
    CHECK((zbar - z.adjoint()).norm() == 0.0);
    CHECK((zbar * z - number_matrix(N)).norm() < 1e-14);
    // canonical commutator holds below the truncation edge
    const cmat comm = z * zbar - zbar * z;
    for (int n = 0; n < N - 1; ++n) {
        CHECK_THAT(comm(n, n).real(), WithinAbs(1.0, 1e-14));
    }
    CHECK_THROWS_AS(annihilation_matrix(1), std::domain_error);
}

TEST_CASE("generator preserves trace and hermiticity") {
    const int N = 12;
    const ProcessParams p(0.5, 0.3, 0.7);
    const Superoperator L(N, p);
    Stream st;
    double tdev = 0.0, hdev = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const cmat rho = random_state(st, N);
        const cmat img = L.apply(rho);
        tdev = std::max(tdev, std::abs(img.trace()));
        hdev = std::max(hdev, (img - img.adjoint().eval()).norm());
    }
    CHECK(tdev < 1e-12);
    CHECK(hdev < 1e-12);
}

TEST_CASE("dual generator") {
    const int N = 14;
    const ProcessParams p(0.4, -0.7, 0.6);
    const Superoperator L(N, p);
    SECTION("annihilation operator decays at gamma_bar") {
        const cmat img = L.apply_dual(L.z) + p.gamma_bar() * L.z;
        // compare away from the truncation edge
        CHECK(img.topLeftCorner(N - 1, N - 1).norm() < 1e-12);
    }
    SECTION("number operator relaxes toward n0") {
        const cmat img = L.apply_dual(L.num) + 2.0 * p.kappa * (L.num - p.n0 * cmat::Identity(N, N));
        CHECK(img.topLeftCorner(N - 1, N - 1).norm() < 1e-12);
    }
    SECTION("adjoint relation with the state-side generator") {
        Stream st;
        double dev = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const cmat rho = random_state(st, N);
            const cmat a = random_observable(st, N);
            dev = std::max(dev, std::abs((a * L.apply(rho)).trace() -
                                         (L.apply_dual(a) * rho).trace()));
        }
        CHECK(dev < 1e-11);
    }
    SECTION("dissipation functional is nonnegative") {
        Stream st;
        for (int trial = 0; trial < 10; ++trial) {
            cmat a = cmat::Zero(N, N);
            for (int i = 0; i < N - 2; ++i) {
                for (int j = 0; j < N - 2; ++j) a(i, j) = st.z(1.0);
            }
            const cmat d = L.apply_dual(a.adjoint() * a) -
                           L.apply_dual(a.adjoint()) * a -
                           a.adjoint() * L.apply_dual(a);
            Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (d + d.adjoint().eval()));
            CHECK(es.eigenvalues().minCoeff() > -1e-10);
        }
    }
}

TEST_CASE("weak damping reduces to the free rotation") {
    const int N = 10;
    const ProcessParams p(1e-9, 0.8, 0.5);
    const Superoperator L(N, p);
    Stream st;
    const cmat rho = random_state(st, N);
    const cmat free_part =
        cplx(0.0, p.nu) * (L.num * rho - rho * L.num);
    CHECK((L.apply(rho) - free_part).norm() < 1e-7);
}

TEST_CASE("invariant state") {
    SECTION("unit occupation gives the dyadic ladder") {
        const cmat rho = invariant_state(40, ProcessParams(0.5, 0.0, 1.0));
        double w = 0.5;
        for (int n = 0; n < 12; ++n) {
            CHECK_THAT(rho(n, n).real(), WithinAbs(w, 1e-12));
            w *= 0.5;
        }
    }
    SECTION("vacuum limit") {
        const cmat rho = invariant_state(8, ProcessParams(0.5, 0.0, 0.0));
        CHECK_THAT(rho(0, 0).real(), WithinAbs(1.0, 0.0));
        CHECK(rho.norm() == 1.0);
    }
    SECTION("annihilated by the generator, correct mean occupation") {
        const ProcessParams p(0.7, 0.4, 1.3);
        const int N = 60;
        const cmat rho = invariant_state(N, p);
        const Superoperator L(N, p);
        CHECK(L.apply(rho).norm() < 1e-13);
        CHECK_THAT((rho * L.num).trace().real(), WithinAbs(p.n0, 1e-10));
    }
}

TEST_CASE("dense matrix agrees with matrix-free application") {
    const int N = 8;
    const ProcessParams p(0.5, -0.3, 0.8);
    const Superoperator L(N, p);
    const cmat big = L.dense();
    Stream st;
    for (int trial = 0; trial < 5; ++trial) {
        cmat rho(N, N);
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) rho(i, j) = st.z(1.0);
        }
        const cvec v = Eigen::Map<const cvec>(rho.data(), N * N);
        const cvec img = big * v;
        const cmat direct = L.apply(rho);
        const cvec dv = Eigen::Map<const cvec>(direct.data(), N * N);
        CHECK((img - dv).norm() < 1e-12);
    }
}

TEST_CASE("adaptive propagation against the dense matrix exponential") {
    const int N = 8;
    const ProcessParams p(0.6, 0.4, 0.5);
    const Superoperator L(N, p);
    Stream st;
    const cmat rho0 = random_state(st, N);
    for (double t : {0.3, 1.1}) {
        const cmat expm = (t * L.dense()).exp();
        const cvec v = expm * Eigen::Map<const cvec>(rho0.data(), N * N);
        cmat ref(N, N);
        for (int j = 0; j < N; ++j) {
            for (int i = 0; i < N; ++i) ref(i, j) = v(j * N + i);
        }
        const cmat got = evolve(rho0, t, p);
        CAPTURE(t);
        CHECK((got - ref).norm() < 1e-8);
    }
}

TEST_CASE("relaxation spectrum ladder") {
    const ProcessParams p(0.5, 0.2, 0.5);
    const auto rep = spectrum_check(60, p, 3);
    for (int q = 0; q <= 3; ++q) {
        CAPTURE(q);
        CHECK_THAT(rep.matched_eigenvalues[static_cast<std::size_t>(q)],
                   WithinAbs(-2.0 * p.kappa * q, 1e-8));
        CHECK(rep.residual_norms[static_cast<std::size_t>(q)] < 1e-8);
    }
    CHECK(rep.rho1_residual < 1e-10);
    CHECK(rep.invariant_residual < 1e-10);
    CHECK(rep.mean_occupation_deviation < 1e-10);
    CHECK(rep.max_leakage < 1e-8);
    SECTION("rejects a vacuum bath and oversized ladders") {
        CHECK_THROWS_AS(spectrum_check(60, ProcessParams(0.5, 0.0, 0.0), 3),
                        std::domain_error);
        CHECK_THROWS_AS(spectrum_check(10, p, 6), std::domain_error);
    }
}

TEST_CASE("evolution of states") {
    const ProcessParams p(0.5, 0.3, 0.4);
    const int N = 36;
    SECTION("zero time is the identity") {
        const cmat rho = invariant_state(N, p);
        CHECK((evolve(rho, 0.0, p) - rho).norm() == 0.0);
    }
    SECTION("coherent mean follows the damped rotation") {
        const cplx alpha(1.1, -0.4);
        const cvec v = coherent_vector(N, alpha);
        const cmat rho0 = v * v.adjoint();
        const cmat z = annihilation_matrix(N);
        for (double t : {0.4, 1.2}) {
            const cmat rho = evolve(rho0, t, p);
            const cplx mean = (rho * z).trace();
            const cplx expected = alpha * std::exp(-p.gamma_bar() * t);
            CAPTURE(t);
            CHECK(std::abs(mean - expected) < 1e-7);
        }
    }
    SECTION("positivity, hermiticity and trace along the path") {
        const cplx alpha(0.9, 0.5);
        const cvec v = coherent_vector(N, alpha);
        cmat rho = v * v.adjoint();
        for (double t : {0.3, 0.7, 1.5}) {
            rho = evolve(v * v.adjoint(), t, p);
            CHECK((rho - rho.adjoint().eval()).norm() < 1e-12);
            CHECK_THAT(rho.trace().real(), WithinAbs(1.0, 1e-9));
            Eigen::SelfAdjointEigenSolver<cmat> es(rho);
            CHECK(es.eigenvalues().minCoeff() > -1e-9);
        }
    }
    SECTION("long times thermalize") {
        const cvec v = coherent_vector(N, cplx(0.8, 0.0));
        const cmat rho = evolve(v * v.adjoint(), 20.0, p);
        CHECK(trace_distance(rho, invariant_state(N, p)) < 1e-6);
    }
    SECTION("schrodinger and heisenberg pictures agree") {
        Stream st;
        const cmat rho0 = random_state(st, 12);
        const cmat a = random_observable(st, 12);
        for (double t : {0.5, 1.3}) {
            const cplx lhs = (evolve(rho0, t, p) * a).trace();
            const cplx rhs = (rho0 * evolve_dual(a, t, p)).trace();
            CHECK(std::abs(lhs - rhs) < 1e-7);
        }
    }
    SECTION("truncation overflow is detected") {
        const cvec v = coherent_vector(6, cplx(2.5, 0.0));
        CHECK_THROWS_AS(evolve(v * v.adjoint(), 0.5, ProcessParams(0.5, 0.0, 3.0)),
                        numeric_error);
    }
}

TEST_CASE("weyl matrix against a generic exponential") {
    const int N = 12;
    const cplx mu(0.4, -0.2), mubar(0.3, 0.5), ls(0.1, 0.2);
    const cmat got = weyl_matrix(N, SystemElement{mu, mubar, ls});
    const cmat ref = std::exp(ls) *
                     ((mu * creation_matrix(N)).exp() *
                      (mubar * annihilation_matrix(N)).exp());
    CHECK((got - ref).norm() < 1e-12);
}

TEST_CASE("coherent vector tail accounting") {
    double tail = 0.0;
    const cvec v = coherent_vector(30, cplx(1.0, 0.5), &tail);
    CHECK_THAT(v.norm(), WithinAbs(1.0, 1e-14));
    CHECK(tail < 1e-12);
    double fat_tail = 0.0;
    coherent_vector(4, cplx(2.0, 0.0), &fat_tail);
    CHECK(fat_tail > 1e-3);
}

TEST_CASE("regression correlators match the closed-form expectation") {
    // E[prod_j J_{t_j}(a_j)] over the joint thermal state factorizes into the
    // word expectation times the thermal trace of the residual system factor,
    // Tr(rho_inv e^{mu zbar} e^{mubar z}) = e^{n0 mu mubar}
    Stream st;
    for (const double n0 : {0.0, 0.8}) {
        const ProcessParams p(0.5, 0.3, n0);
        const int N = 30;
        const cmat rho0 = invariant_state(N, p);
        for (int trial = 0; trial < 3; ++trial) {
            std::vector<std::pair<SystemElement, double>> elems;
            double t = 0.0;
            WeylWord prod;
            for (int j = 0; j <= trial; ++j) {
                t += st.u(0.2, 0.7);
                const SystemElement e{st.z(0.4), st.z(0.4), 0.0};
                elems.emplace_back(e, t);
                prod = operator_product(prod, flow_J(e, t, p), p);
            }
            const SystemElement red = expectation_E(prod, p);
            const cplx closed =
                std::exp(red.log_scalar + p.n0 * red.mu * red.mubar);
            const cplx got = regression_correlator(elems, rho0, p);
            CAPTURE(n0, trial);
            CHECK(std::abs(got - closed) < 1e-6);
        }
    }
}

TEST_CASE("cat state normalization") {
    CatStateSpec spec{cplx(1.0, 0.0), cplx(-1.0, 0.0)};
    CHECK(spec.normalization_deviation() > 0.0);  // default u, v ignore overlap
    const double ov = coherent_overlap(spec.beta, spec.alpha).real();
    const double norm = std::sqrt(2.0 * (1.0 + ov));
    spec.u = 1.0 / norm;
    spec.v = 1.0 / norm;
    CHECK(spec.normalization_deviation() < 1e-14);
}

TEST_CASE("coherent block evolution against direct integration") {
    const ProcessParams p(0.5, 0.4, 0.5);
    const CatStateSpec spec{cplx(1.0, 0.0), cplx(-0.5, 0.8)};
    const int N = 40;
    const cplx probes_b(0.3, -0.2), probes_c(-0.1, 0.4);
    for (double t : {0.3, 1.0}) {
        const CatEvolution ev = cat_evolution_closed_form(spec, t, p);
        for (const auto& [x, y] : {std::pair{spec.alpha, spec.alpha},
                                   std::pair{spec.alpha, spec.beta},
                                   std::pair{spec.beta, spec.alpha}}) {
            const cvec vx = coherent_vector(N, x);
            const cvec vy = coherent_vector(N, y);
            const cmat block0 = coherent_overlap(y, x) * (vx * vy.adjoint());
            const cmat block_t = evolve(block0, t, p, {.hermitize = false});
            const cvec vb = coherent_vector(N, probes_b);
            const cvec vc = coherent_vector(N, probes_c);
            const cplx got = vb.adjoint() * block_t * vc;
            const cplx expected = ev.block_element(x, y, probes_b, probes_c);
            CAPTURE(t, x, y);
            CHECK(std::abs(got - expected) < 1e-5);
        }
        // assembled state element for the normalized cat
        CatStateSpec norm = spec;
        const double s =
            std::sqrt(2.0 * (1.0 + coherent_overlap(spec.beta, spec.alpha).real()));
        norm.u = 1.0 / s;
        norm.v = 1.0 / s;
        const CatEvolution nev = cat_evolution_closed_form(norm, t, p);
        const cvec va = coherent_vector(N, norm.alpha);
        const cvec vb2 = coherent_vector(N, norm.beta);
        const cvec psi = (norm.u * va + norm.v * vb2).eval();
        const cmat rho_t = evolve(psi * psi.adjoint(), t, p);
        const cvec pb = coherent_vector(N, probes_b);
        const cvec pc = coherent_vector(N, probes_c);
        const cplx got = pb.adjoint() * rho_t * pc;
        CHECK(std::abs(got - nev.state_element(probes_b, probes_c)) < 1e-5);
    }
}

TEST_CASE("decoherence ratio") {
    const ProcessParams p(0.5, 0.2, 0.5);
    const CatStateSpec spec{cplx(1.0, 0.0), cplx(-0.5, 0.8)};
    SECTION("starts at one and decays") {
        CHECK_THAT(decoherence_ratio(spec, 0.0, p), WithinAbs(1.0, 1e-14));
        double prev = 1.0;
        for (double t : {0.2, 0.5, 1.0, 2.0}) {
            const double r = decoherence_ratio(spec, t, p);
            CHECK(r < prev);
            prev = r;
        }
    }
    SECTION("probe independence") {
        Stream st;
        for (double t : {0.3, 1.2}) {
            const double ref = decoherence_ratio(spec, t, p);
            for (int trial = 0; trial < 6; ++trial) {
                const double got =
                    decoherence_ratio_probe(spec, t, p, st.z(0.6), st.z(0.6));
                CAPTURE(t, trial);
                CHECK_THAT(got, WithinAbs(ref, 1e-8));
            }
        }
    }
    SECTION("initial slope is the enhanced decoherence rate") {
        const double h = 1e-4 / p.kappa;
        const double slope = std::log(decoherence_ratio(spec, h, p)) / h;
        const double expected =
            -2.0 * (p.n0 + 1.0) * p.kappa * std::norm(spec.alpha - spec.beta);
        CHECK_THAT(slope / expected, WithinAbs(1.0, 0.01));
    }
    SECTION("coincident amplitudes are rejected") {
        const CatStateSpec bad{cplx(0.5, 0.0), cplx(0.5, 0.0)};
        CHECK_THROWS_AS(decoherence_ratio(bad, 1.0, p), std::domain_error);
    }
}
