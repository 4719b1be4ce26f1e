// Quadrature building blocks and the continuum spectral representation:
// principal values, Lorentzian Fourier integrals, density families, and the
// kernel reconstruction.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>

#include "qpsb/kernel.hpp"
#include "qpsb/quadrature.hpp"
#include "qpsb/spectral_density.hpp"
#include "qpsb/spectral_representation.hpp"

using namespace qpsb;
using Catch::Matchers::WithinAbs;

TEST_CASE("principal value with the exact log antiderivative") {
    const QuadConfig cfg;
    // flat density c on [a, b]: PV int c/(eps - w) dw = c ln((eps-a)/(b-eps))
    const double c = 0.4, a = 0.2, b = 1.8, eps = 1.0;
    const auto r = [c, a, b](double w) { return (w >= a && w <= b) ? c : 0.0; };
    const double pv = principal_value(r, eps, b, cfg);
    CHECK_THAT(pv, WithinAbs(c * std::log((eps - a) / (b - eps)), 1e-9));
}

TEST_CASE("principal value of an asymmetric window") {
    const QuadConfig cfg;
    const double c = 0.25, a = 0.5, b = 4.0, eps = 1.2;
    const auto r = [c, a, b](double w) { return (w >= a && w <= b) ? c : 0.0; };
    const double pv = principal_value(r, eps, b, cfg);
    CHECK_THAT(pv, WithinAbs(c * std::log((eps - a) / (b - eps)), 1e-9));
}

TEST_CASE("lorentzian fourier integral against the closed form") {
    const QuadConfig cfg;
    const double center = -1.3, hw = 0.8;
    for (double tau : {0.0, 0.05, 0.5, 2.0, 7.0, -0.5, -3.0}) {
        const cplx got = lorentzian_fourier_quad(center, hw, tau, cfg);
        const cplx expected =
            std::exp(cplx(0.0, -center * tau) - hw * std::abs(tau));
        CAPTURE(tau);
        CHECK(std::abs(got - expected) < 1e-9);
    }
}

TEST_CASE("density families") {
    SECTION("lorentzian is normalized over the full line") {
        const auto r = SpectralDensity::lorentzian(2.0, 5.0, 0.1);
        CHECK_THAT(r(5.0), WithinAbs(2.0 / (M_PI * 0.1), 1e-12));
        CHECK(r(-1.0) == 0.0);
    }
    SECTION("ohmic vanishes at the origin and has the right peak") {
        const auto r = SpectralDensity::ohmic_with_cutoff(1.5, 2.0);
        CHECK(r(0.0) == 0.0);
        // maximum at omega = cutoff
        CHECK(r(2.0) > r(1.0));
        CHECK(r(2.0) > r(3.0));
        CHECK_THAT(r(2.0), WithinAbs(1.5 * 2.0 * std::exp(-1.0), 1e-14));
    }
    SECTION("tabulated interpolation is linear and clamped") {
        const auto r = SpectralDensity::tabulated({1.0, 2.0, 4.0}, {0.0, 1.0, 0.0});
        CHECK(r(0.5) == 0.0);
        CHECK(r(5.0) == 0.0);
        CHECK_THAT(r(1.5), WithinAbs(0.5, 1e-15));
        CHECK_THAT(r(3.0), WithinAbs(0.5, 1e-15));
        CHECK(r(2.0) == 1.0);
        CHECK(r.support_hi == 4.0);
    }
    SECTION("tabulated validation") {
        CHECK_THROWS_AS(SpectralDensity::tabulated({1.0}, {0.5}), config_error);
        CHECK_THROWS_AS(SpectralDensity::tabulated({1.0, 1.0}, {0.5, 0.5}),
                        config_error);
        CHECK_THROWS_AS(SpectralDensity::tabulated({1.0, 2.0}, {0.5, -0.5}),
                        config_error);
    }
    SECTION("csv round trip") {
        const std::string path = "density_roundtrip.csv";
        {
            std::ofstream out(path);
            out << "omega,r\n0.5,0.1\n1,0.3\n2,0.2\n";
        }
        const auto r = SpectralDensity::from_csv(path);
        CHECK_THAT(r(1.0), WithinAbs(0.3, 1e-15));
        CHECK_THAT(r(1.5), WithinAbs(0.25, 1e-15));
        std::remove(path.c_str());
        CHECK_THROWS_AS(SpectralDensity::from_csv("does_not_exist.csv"), config_error);
    }
}

TEST_CASE("mode density and its normalization") {
    const ProcessParams p(0.4, 0.1, 0.0);
    const QuadConfig cfg;
    CHECK_THAT(mode_density(-p.nu, p), WithinAbs(1.0 / (M_PI * p.kappa), 1e-13));
    CHECK_THAT(mode_density_normalization(p, cfg), WithinAbs(1.0, 1e-8));
}

TEST_CASE("diagonalizing modes reproduce the stationary commutator") {
    const ProcessParams p(0.4, 0.1, 0.0);
    const QuadConfig cfg;
    const auto rep = diagonal_mode_check(p, cfg);
    CHECK(rep.norm_deviation < 1e-8);
    CHECK(rep.max_kernel_deviation < 1e-6);
    // tau = 2 closed form
    const cplx at2 = lorentzian_fourier_quad(-p.nu, p.kappa, 2.0, cfg);
    CHECK(std::abs(at2 - std::exp(-p.gamma_bar() * 2.0)) < 1e-8);
    // modulus decays at the damping rate
    CHECK_THAT(std::abs(lorentzian_fourier_quad(-p.nu, p.kappa, 5.0, cfg)),
               WithinAbs(std::exp(-5.0 * p.kappa), 1e-8));
}

TEST_CASE("spectral kernel quadrature reproduces the closed form") {
    const QuadConfig cfg;
    SECTION("origin vanishes") {
        const ProcessParams p(0.5, 0.2, 0.0);
        CHECK(std::abs(spectral_kernel_quadrature(p, 0.0, 0.0, cfg)) < 1e-10);
    }
    SECTION("fixed point") {
        const ProcessParams p(0.5, 0.2, 0.0);
        CHECK(std::abs(spectral_kernel_quadrature(p, 1.0, 2.0, cfg) -
                       kernel_G(1.0, 2.0, p)) < 1e-6);
    }
    SECTION("5x5 grid for two parameter sets") {
        for (const auto& p : {ProcessParams(0.5, 0.2, 0.0), ProcessParams(1.1, -0.8, 0.0)}) {
            double dev = 0.0;
            for (double t : {0.0, 0.6, 1.2, 2.1, 3.0}) {
                for (double s : {0.0, 0.6, 1.2, 2.1, 3.0}) {
                    dev = std::max(dev, std::abs(spectral_kernel_quadrature(p, t, s, cfg) -
                                                 kernel_G(t, s, p)));
                }
            }
            CHECK(dev < 1e-6);
        }
    }
}

TEST_CASE("adaptive integrator flags hopeless integrands") {
    QuadConfig cfg;
    cfg.tol = 1e-14;
    cfg.max_depth = 1;
    const auto nasty = [](double x) { return std::cos(500.0 * x * x); };
    CHECK_THROWS_AS(integrate(nasty, 0.0, 50.0, cfg, "nasty"), numeric_error);
}
