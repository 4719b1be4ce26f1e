// qpsb_cli.cpp — command-line front-end: loads a JSON run configuration,
// drives the library modules, and emits deterministic CSV results.
//
// Exit codes: 0 success, 2 configuration error, 3 invariant failure,
// 4 numeric failure.

#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qpsb/discrete.hpp"
#include "qpsb/finite_bath.hpp"
#include "qpsb/io.hpp"
#include "qpsb/kernel.hpp"
#include "qpsb/lindblad.hpp"
#include "qpsb/params.hpp"
#include "qpsb/spectral_density.hpp"
#include "qpsb/spectral_representation.hpp"
#include "qpsb/weyl.hpp"

namespace {

using namespace qpsb;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_invariant = 3;
constexpr int exit_numeric = 4;

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    bool check = false;
    int workers = 1;
};

// deterministic counter-based uniform stream for --check sampling
struct Rng {
    std::uint64_t seed;
    std::uint64_t ctr = 0;
    double u() { return detail::uniform01(seed, ctr++); }
    double u(double a, double b) { return a + (b - a) * u(); }
    cplx c(double r) { return {u(-r, r), u(-r, r)}; }
};

struct CheckSuite {
    std::vector<std::string> failures;
    void require(bool ok, const std::string& name) {
        if (!ok) failures.push_back(name);
    }
    int finish(const std::string& command) const {
        if (failures.empty()) {
            std::cerr << command << ": all invariants hold\n";
            return exit_ok;
        }
        for (const auto& f : failures) {
            std::cerr << command << ": invariant failed: " << f << "\n";
        }
        return exit_invariant;
    }
};

std::uint64_t effective_seed(const json& cfg, const CommonOpts& opt) {
    if (opt.seed) return *opt.seed;  // flag overrides the config field
    return cfg.value("seed", std::uint64_t{0});
}

// ---------------------------------------------------------------- kernel ----

int run_kernel(const json& cfg, const CommonOpts& opt) {
    const ProcessParams p = parse_process_params(cfg);
    const auto ts = parse_grid(cfg, "t_grid");
    const auto ss = parse_grid(cfg, "s_grid");
    const double D = number_or(cfg, "classical_diffusion", 1.0);

    CsvWriter csv({"t", "s", "g_re", "g_im", "two_point_re", "two_point_im",
                   "limit_tbrownian", "limit_classical_re", "limit_classical_im"});
    for (double t : ts) {
        for (double s : ss) {
            csv.cell(t).cell(s);
            csv.cell(kernel_G(t, s, p));
            csv.cell(two_point(t, s, p));
            csv.cell(limit_kernel_tbrownian(t, s));
            csv.cell(limit_kernel_classical(t, s, D, p.nu));
            csv.end_row();
        }
    }
    if (!opt.out_path.empty()) csv.write(opt.out_path);

    if (opt.check) {
        CheckSuite suite;
        double branch_dev = 0.0;
        double herm_dev = 0.0;
        for (double t : ts) {
            for (double s : ss) {
                const cplx g = kernel_G(t, s, p);
                branch_dev = std::max(branch_dev,
                                      std::abs(g - kernel_G_piecewise(t, s, p)));
                herm_dev = std::max(
                    herm_dev, std::abs(kernel_G(s, t, p) - std::conj(g)));
            }
        }
        suite.require(branch_dev < 1e-13, "min-form vs piecewise branch consistency");
        suite.require(herm_dev < 1e-13, "kernel hermiticity G(s,t) = conj(G(t,s))");
        return suite.finish("kernel");
    }
    return exit_ok;
}

// --------------------------------------------------------- bath-converge ----

int run_bath_converge(const json& cfg, const CommonOpts& opt) {
    const SpectralDensity density = parse_density(cfg);
    const double eps = require_number(cfg, "eps");
    const auto lambdas = parse_grid(cfg, "lambda_list");
    if (lambdas.size() < 2) {
        throw config_error("bath-converge: lambda_list needs at least 2 entries");
    }
    const double eta_hat = number_or(cfg, "eta_hat", 0.25);
    const double t_max = number_or(cfg, "t_max", 3.0);
    const int t_count = static_cast<int>(number_or(cfg, "t_count", 13));
    const double n0 = number_or(cfg, "n0", 0.0);
    const QuadConfig quad;

    // Markov-limit reference rates from the density itself
    const cplx gb = gamma_from_density(density, eps, quad);
    const ProcessParams p(gb.real(), -gb.imag(), n0);

    CsvWriter csv({"lambda", "eta", "modes", "drift_dev", "noise_kernel_dev",
                   "sumrule_unit", "sumrule_pole", "sumrule_resid"});
    std::vector<double> drift_devs;
    std::vector<double> kernel_devs;
    for (double lam : lambdas) {
        const double eta = lam * lam * eta_hat;
        const auto L = static_cast<std::size_t>(std::ceil(4.0 * eps / eta));
        const BathSpec bath = bath_from_density(density, eps, lam, eta, L,
                                                constant_occupation(n0));
        const SecularSpectrum sp = eigenfrequencies(bath);
        const SumRuleReport rules = sum_rule_check(sp);

        double ddev = 0.0;
        double kdev = 0.0;
        for (int i = 0; i < t_count; ++i) {
            const double t = t_max * i / (t_count - 1.0);
            ddev = std::max(ddev, std::abs(rescaled_drift(sp, t) -
                                           std::exp(-p.gamma_bar() * t)));
            for (int j = 0; j <= i; ++j) {
                const double s = t_max * j / (t_count - 1.0);
                kdev = std::max(kdev,
                                std::abs(rescaled_noise_kernel(sp, t, s, false) -
                                         kernel_G(t, s, ProcessParams(
                                                             p.kappa, p.nu, 0.0))));
            }
        }
        drift_devs.push_back(ddev);
        kernel_devs.push_back(kdev);
        csv.cell(lam).cell(eta).cell(static_cast<double>(sp.Omegas.size()));
        csv.cell(ddev).cell(kdev);
        csv.cell(rules.dev_unit).cell(rules.dev_pole).cell(rules.dev_resid);
        csv.end_row();
    }
    bool monotone = true;
    for (std::size_t i = 1; i < drift_devs.size(); ++i) {
        if (lambdas[i] < lambdas[i - 1] &&
            !(drift_devs[i] < drift_devs[i - 1] && kernel_devs[i] < kernel_devs[i - 1])) {
            monotone = false;
        }
        if (lambdas[i] > lambdas[i - 1] &&
            !(drift_devs[i] > drift_devs[i - 1] && kernel_devs[i] > kernel_devs[i - 1])) {
            monotone = false;
        }
    }
    csv.cell(0.0).cell(0.0).cell(0.0);
    csv.cell(monotone ? 1.0 : 0.0).cell(monotone ? 1.0 : 0.0);
    csv.cell(0.0).cell(0.0).cell(0.0);
    csv.end_row();  // summary row: monotonicity flag in the deviation columns
    if (!opt.out_path.empty()) csv.write(opt.out_path);

    if (opt.check) {
        CheckSuite suite;
        suite.require(monotone, "deviations decrease towards smaller lambda");
        return suite.finish("bath-converge");
    }
    return exit_ok;
}

// -------------------------------------------------------------- lindblad ----

int run_lindblad(const json& cfg, const CommonOpts& opt) {
    const ProcessParams p = parse_process_params(cfg);
    const int N = static_cast<int>(number_or(cfg, "fock_dim", 60));
    const int pmax = static_cast<int>(number_or(cfg, "pmax", 3));
    const auto ts = parse_grid(cfg, "t_grid");
    const cplx alpha0 = cfg.contains("alpha") ? parse_complex(cfg, "alpha") : cplx(1.0, 0.0);

    const SpectrumReport rep = spectrum_check(N, p, pmax);
    const cmat rinv = invariant_state(N, p);
    const cvec a = coherent_vector(N, alpha0);
    const cmat rho0 = a * a.adjoint();

    CsvWriter csv({"section", "p", "t", "value", "reference"});
    for (std::size_t q = 0; q < rep.target_eigenvalues.size(); ++q) {
        csv.cell(std::string("eigenvalue_residual"))
            .cell(static_cast<double>(q))
            .cell(0.0)
            .cell(rep.residual_norms[q])
            .cell(rep.target_eigenvalues[q]);
        csv.end_row();
        csv.cell(std::string("eigenvalue"))
            .cell(static_cast<double>(q))
            .cell(0.0)
            .cell(rep.matched_eigenvalues[q])
            .cell(rep.target_eigenvalues[q]);
        csv.end_row();
    }
    csv.cell(std::string("invariant_mean_occupation_dev"))
        .cell(0.0).cell(0.0).cell(rep.mean_occupation_deviation).cell(0.0);
    csv.end_row();
    csv.cell(std::string("first_gap_closed_form_residual"))
        .cell(1.0).cell(0.0).cell(rep.rho1_residual).cell(-2.0 * p.kappa);
    csv.end_row();

    cmat rho = rho0;
    double prev_t = 0.0;
    for (double t : ts) {
        rho = evolve(rho, t - prev_t, p);
        prev_t = t;
        const cplx mean = (rho * annihilation_matrix(N)).trace();
        const cplx expected = std::exp(-p.gamma_bar() * t) * alpha0;
        csv.cell(std::string("relaxation"))
            .cell(0.0).cell(t)
            .cell(trace_distance(rho, rinv))
            .cell(std::abs(mean - expected));
        csv.end_row();
    }
    if (!opt.out_path.empty()) csv.write(opt.out_path);

    if (opt.check) {
        CheckSuite suite;
        double max_resid = 0.0;
        for (double r : rep.residual_norms) max_resid = std::max(max_resid, r);
        suite.require(max_resid < 1e-6, "relaxation ladder residuals below 1e-6");
        suite.require(rep.mean_occupation_deviation < 1e-10,
                      "invariant state mean occupation");
        suite.require(rep.invariant_residual < 1e-10, "generator kills the invariant state");

        Rng rng{effective_seed(cfg, opt)};
        const Superoperator L(N, p);
        double max_trace = 0.0;
        double max_diss = -1.0;
        for (int trial = 0; trial < 20; ++trial) {
            cmat h = cmat::Zero(N, N);
            for (int i = 0; i < N - 2; ++i) {
                for (int j = 0; j <= i; ++j) {
                    h(i, j) = rng.c(1.0);
                }
            }
            h = ((h + h.adjoint()) / 2.0).eval();
            max_trace = std::max(max_trace, std::abs(L.apply(h).trace()));
            max_diss = std::max(max_diss, (h * L.apply(h)).trace().real());
        }
        suite.require(max_trace < 1e-12, "trace preservation of the generator");
        suite.require(max_diss <= 1e-10, "dissipativity tr(rho L rho) <= 0");
        return suite.finish("lindblad");
    }
    return exit_ok;
}

// ----------------------------------------------------------- conditional ----

void emit_word(CsvWriter& csv, double s, const WeylWord& w) {
    csv.cell(std::string("system")).cell(s).cell(0.0)
        .cell(w.mu_sys).cell(w.mubar_sys);
    csv.end_row();
    csv.cell(std::string("scalar")).cell(s).cell(0.0)
        .cell(w.log_scalar).cell(cplx(0.0));
    csv.end_row();
    for (const auto& f : w.factors) {
        csv.cell(std::string("factor")).cell(s).cell(f.t).cell(f.a).cell(f.b);
        csv.end_row();
    }
}

int run_conditional(const json& cfg, const CommonOpts& opt) {
    const ProcessParams p = parse_process_params(cfg);
    const auto ss = parse_grid(cfg, "s_grid");

    WeylWord word;
    if (!cfg.contains("word") || !cfg["word"].is_array()) {
        throw config_error("conditional: missing 'word' array of {t, a, b} factors");
    }
    for (const auto& f : cfg["word"]) {
        const double t = require_number(f, "t");
        append_creation(word, t, parse_complex(f, "a"), p);
        append_annihilation(word, t, parse_complex(f, "b"), p);
    }
    if (cfg.contains("system")) {
        word.mu_sys = parse_complex(cfg["system"], "mu");
        word.mubar_sys = parse_complex(cfg["system"], "mubar");
    }

    CsvWriter csv({"kind", "s", "t", "a_re", "a_im", "b_re", "b_im"});
    for (double s : ss) {
        emit_word(csv, s, conditional_E(word, s, p));
    }
    if (!opt.out_path.empty()) csv.write(opt.out_path);

    if (opt.check) {
        CheckSuite suite;
        Rng rng{effective_seed(cfg, opt)};
        double tower_dev = 0.0;
        double neutral_dev = 0.0;
        double mart_dev = 0.0;
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<NoiseFactor> fs;
            double t = 0.0;
            for (int j = 0; j < 3; ++j) {
                t += rng.u(0.1, 1.0);
                fs.push_back({t, rng.c(0.8), rng.c(0.8)});
            }
            const WeylWord w = canonicalize(fs, p);
            const double s1 = rng.u(0.05, t);
            const double s2 = rng.u(0.05, s1);
            // tower property E_{s2} E_{s1} = E_{s2}
            const WeylWord lhs = conditional_E(conditional_E(w, s1, p), s2, p);
            const WeylWord rhs = conditional_E(w, s2, p);
            const SystemElement el = expectation_E(lhs, p);
            const SystemElement er = expectation_E(rhs, p);
            tower_dev = std::max(tower_dev, std::abs(el.log_scalar - er.log_scalar));
            suite.require(canonical_equal(lhs, rhs, 1e-10), "tower property");
            // neutrality: E_s(past * w) = past * E_s(w)
            WeylWord past;
            append_creation(past, 0.5 * s1, rng.c(0.8), p);
            const WeylWord n1 = conditional_E(operator_product(past, w, p), s1, p);
            const WeylWord n2 = operator_product(past, conditional_E(w, s1, p), p);
            suite.require(canonical_equal(n1, n2, 1e-10), "left neutrality");
            neutral_dev = std::max(neutral_dev,
                                   std::abs(expectation_E(n1, p).log_scalar -
                                            expectation_E(n2, p).log_scalar));
            // martingale property
            const cplx mu = rng.c(0.7);
            const cplx mubar = rng.c(0.7);
            const WeylWord mt = martingale_M(t, mu, mubar, p);
            const WeylWord ms = martingale_M(s1, mu, mubar, p);
            const WeylWord cond = conditional_E(mt, s1, p);
            suite.require(canonical_equal(cond, ms, 1e-9), "martingale E_s[M_t] = M_s");
            mart_dev = std::max(mart_dev,
                                std::abs(expectation_E(cond, p).log_scalar -
                                         expectation_E(ms, p).log_scalar));
        }
        std::cerr << "conditional: tower dev " << tower_dev << ", neutrality dev "
                  << neutral_dev << ", martingale dev " << mart_dev << "\n";
        return suite.finish("conditional");
    }
    return exit_ok;
}

// ----------------------------------------------------------- decoherence ----

int run_decoherence(const json& cfg, const CommonOpts& opt) {
    const ProcessParams p = parse_process_params(cfg);
    CatStateSpec spec;
    spec.alpha = parse_complex(cfg, "alpha");
    spec.beta = parse_complex(cfg, "beta");
    if (cfg.contains("u")) spec.u = parse_complex(cfg, "u");
    if (cfg.contains("v")) spec.v = parse_complex(cfg, "v");
    const auto ts = parse_grid(cfg, "t_grid");
    const bool with_lindblad = cfg.value("lindblad_check", true);

    const double amax = std::max(std::abs(spec.alpha), std::abs(spec.beta));
    const int N = static_cast<int>(
        number_or(cfg, "fock_dim", std::ceil(amax * amax + 8.0 * amax + 20.0)));
    const cplx probe_b = cfg.contains("probe_b") ? parse_complex(cfg, "probe_b")
                                                 : cplx(0.3, -0.2);
    const cplx probe_c = cfg.contains("probe_c") ? parse_complex(cfg, "probe_c")
                                                 : cplx(-0.1, 0.4);

    // Lindblad route: evolve the four coherent blocks on the truncated space
    // and assemble the same probe-element ratio
    const cvec va = coherent_vector(N, spec.alpha);
    const cvec vb = coherent_vector(N, spec.beta);
    const cvec pb = coherent_vector(N, probe_b);
    const cvec pc = coherent_vector(N, probe_c);

    CsvWriter csv({"t", "ratio", "closed_form", "lindblad_check"});
    for (double t : ts) {
        const double closed = decoherence_ratio(spec, t, p);
        const double probe = decoherence_ratio_probe(spec, t, p, probe_b, probe_c);
        double lind = closed;
        if (with_lindblad) {
            const cmat raa = evolve(va * va.adjoint(), t, p);
            const cmat rbb = evolve(vb * vb.adjoint(), t, p);
            const cmat rab = evolve(va * vb.adjoint(), t, p, {.hermitize = false});
            const cmat rba = evolve(vb * va.adjoint(), t, p, {.hermitize = false});
            const cplx num = (pb.adjoint() * rba * pc)(0) * (pb.adjoint() * rab * pc)(0);
            const cplx den = (pb.adjoint() * raa * pc)(0) * (pb.adjoint() * rbb * pc)(0);
            lind = std::abs(num) / std::abs(den);
        }
        csv.cell(t).cell(probe).cell(closed).cell(lind);
        csv.end_row();
    }
    if (!opt.out_path.empty()) csv.write(opt.out_path);

    if (opt.check) {
        CheckSuite suite;
        Rng rng{effective_seed(cfg, opt)};
        suite.require(std::abs(decoherence_ratio(spec, 0.0, p) - 1.0) < 1e-12,
                      "ratio equals 1 at t = 0");
        double probe_dev = 0.0;
        for (int trial = 0; trial < 8; ++trial) {
            const double t = rng.u(0.0, 2.0 / p.kappa);
            const double r0 = decoherence_ratio(spec, t, p);
            const double r1 = decoherence_ratio_probe(spec, t, p, rng.c(0.7), rng.c(0.7));
            probe_dev = std::max(probe_dev, std::abs(r1 - r0) / r0);
        }
        suite.require(probe_dev < 1e-8, "probe independence of the ratio");
        const double h = 1e-4 / p.kappa;
        const double slope =
            std::log(decoherence_ratio(spec, h, p)) / h;
        const double expected = -2.0 * (p.n0 + 1.0) * p.kappa *
                                std::norm(spec.alpha - spec.beta);
        suite.require(std::abs(slope - expected) < 0.01 * std::abs(expected),
                      "short-time slope -2(n0+1) kappa |alpha-beta|^2");
        return suite.finish("decoherence");
    }
    return exit_ok;
}

// -------------------------------------------------------------- discrete ----

int run_discrete(const json& cfg, const CommonOpts& opt) {
    ChainSpec spec = parse_chain_spec(cfg);
    if (opt.seed) spec.seed = *opt.seed;
    const auto samples =
        static_cast<std::uint64_t>(number_or(cfg, "samples", 100000));
    if (samples < 10000) throw config_error("discrete: samples >= 10000 required");
    const int trunc = static_cast<int>(number_or(cfg, "trunc", 30));

    const double q_oracle = leave_probability_oracle(spec, trunc);
    if (spec.n0 == 0.0) {
        std::cerr << "discrete: n0 = 0, every run is censored at nmax\n";
    }
    const ExitTimeResult mc =
        exit_time_montecarlo(spec, samples, q_oracle, opt.workers);

    const double p = mc.fitted_leave_prob;
    const bool agree =
        (mc.fitted_stderr == 0.0)
            ? (spec.n0 == 0.0)
            : std::abs(p - q_oracle) <= 3.0 * mc.fitted_stderr;

    CsvWriter csv({"kind", "exit_step", "count", "value"});
    for (int k = 1; k <= spec.nmax; ++k) {
        const double pmf = (p > 0.0) ? std::pow(1.0 - p, k - 1) * p : 0.0;
        csv.cell(std::string("bin")).cell(static_cast<double>(k))
            .cell(static_cast<double>(mc.histogram[static_cast<std::size_t>(k - 1)]))
            .cell(pmf * static_cast<double>(samples));
        csv.end_row();
    }
    const auto meta = [&csv](const std::string& kind, double value) {
        csv.cell(kind).cell(0.0).cell(0.0).cell(value);
        csv.end_row();
    };
    meta("censored", static_cast<double>(mc.censored));
    meta("fitted_q", p);
    meta("fitted_stderr", mc.fitted_stderr);
    meta("oracle_q", q_oracle);
    meta("conjecture_q", leave_probability_conjecture(spec));
    meta("agreement", agree ? 1.0 : 0.0);
    meta("mean_exit_step", mc.mean_exit_step);
    meta("chi_square", mc.chi_square);
    meta("chi_square_dof", static_cast<double>(mc.chi_square_dof));
    if (!opt.out_path.empty()) csv.write(opt.out_path);

    if (opt.check) {
        CheckSuite suite;
        const double s1 = survival_probability_oracle(spec, 1, trunc);
        const double s2 = survival_probability_oracle(spec, 2, trunc);
        const double s3 = survival_probability_oracle(spec, 3, trunc);
        suite.require(std::abs(s3 - s1 * s2) < 1e-10,
                      "renewal factorization survival(1+2) = survival(1) survival(2)");
        suite.require(agree, "fitted parameter within 3 standard errors of the oracle");
        return suite.finish("discrete");
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"open-system phase-space laboratory: kernels, finite baths, "
                 "Weyl words, Lindblad dynamics, discrete stopping times"};
    app.require_subcommand(1);

    CommonOpts opt;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON run configuration")
            ->required();
        sub->add_option("--out", opt.out_path, "output CSV path");
        sub->add_option("--seed", seed_flag, "RNG seed (overrides the config field)")
            ->each([&](const std::string&) { seed_given = true; });
        sub->add_flag("--check", opt.check, "run the module invariant suite and gate the exit code");
        sub->add_option("--workers", opt.workers, "worker threads for shardable commands")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* c_kernel = app.add_subcommand("kernel", "noise kernel tables");
    CLI::App* c_bath = app.add_subcommand("bath-converge", "finite-bath convergence study");
    CLI::App* c_lind = app.add_subcommand("lindblad", "spectrum and relaxation");
    CLI::App* c_cond = app.add_subcommand("conditional", "conditional expectations of Weyl words");
    CLI::App* c_deco = app.add_subcommand("decoherence", "cat-state decoherence sweep");
    CLI::App* c_disc = app.add_subcommand("discrete", "discrete-chain exit times");
    for (CLI::App* sub : {c_kernel, c_bath, c_lind, c_cond, c_deco, c_disc}) {
        add_common(sub);
    }

    CLI11_PARSE(app, argc, argv);
    if (seed_given) opt.seed = seed_flag;

    try {
        const json cfg = load_config(opt.config_path);
        if (c_kernel->parsed()) return run_kernel(cfg, opt);
        if (c_bath->parsed()) return run_bath_converge(cfg, opt);
        if (c_lind->parsed()) return run_lindblad(cfg, opt);
        if (c_cond->parsed()) return run_conditional(cfg, opt);
        if (c_deco->parsed()) return run_decoherence(cfg, opt);
        if (c_disc->parsed()) return run_discrete(cfg, opt);
        std::cerr << "no subcommand selected\n";
        return exit_config;
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config;
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
}
