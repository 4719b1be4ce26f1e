// io.hpp — JSON run configuration parsing and deterministic CSV emission.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpsb/discrete.hpp"
#include "qpsb/errors.hpp"
#include "qpsb/finite_bath.hpp"
#include "qpsb/params.hpp"
#include "qpsb/spectral_density.hpp"
#include "qpsb/weyl.hpp"

namespace qpsb {

using json = nlohmann::json;

// shortest round-trip decimal; locale-independent, so output bytes are stable
inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    // trim to the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char trial[40];
        std::snprintf(trial, sizeof(trial), "%.*g", prec, x);
        if (std::strtod(trial, nullptr) == x) return trial;
    }
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i > 0) body_ += ',';
            body_ += header[i];
        }
        body_ += '\n';
        columns_ = header.size();
    }

    CsvWriter& cell(double x) {
        if (in_row_ > 0) body_ += ',';
        body_ += format_number(x);
        ++in_row_;
        return *this;
    }

    CsvWriter& cell(cplx z) {
        cell(z.real());
        return cell(z.imag());
    }

    CsvWriter& cell(const std::string& s) {
        if (in_row_ > 0) body_ += ',';
        body_ += s;
        ++in_row_;
        return *this;
    }

    void end_row() {
        if (in_row_ != columns_) {
            throw std::logic_error("CsvWriter: row has " + std::to_string(in_row_) +
                                   " cells, header has " + std::to_string(columns_));
        }
        body_ += '\n';
        in_row_ = 0;
    }

    const std::string& str() const { return body_; }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw config_error("cannot open output file: " + path);
        out << body_;
        if (!out) throw config_error("write failed: " + path);
    }

  private:
    std::string body_;
    std::size_t columns_ = 0;
    std::size_t in_row_ = 0;
};

inline json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw config_error("config parse error in " + path + ": " + e.what());
    }
}

inline double require_number(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw config_error("config: missing numeric field '" + key + "'");
    }
    return j[key].get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) {
        throw config_error("config: field '" + key + "' must be numeric");
    }
    return j[key].get<double>();
}

// complex fields are a plain number or a [re, im] pair
inline cplx parse_complex(const json& j, const std::string& key) {
    if (!j.contains(key)) throw config_error("config: missing field '" + key + "'");
    const json& v = j[key];
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw config_error("config: field '" + key + "' must be a number or [re, im]");
}

inline ProcessParams parse_process_params(const json& root) {
    if (!root.contains("process")) {
        throw config_error("config: missing 'process' block");
    }
    const json& p = root["process"];
    try {
        return ProcessParams{require_number(p, "kappa"), require_number(p, "nu"),
                             require_number(p, "n0")};
    } catch (const std::domain_error& e) {
        throw config_error(std::string("config: process block invalid: ") + e.what());
    }
}

// "grid": explicit array [t0, t1, ...] or {"start": a, "stop": b, "count": n}
inline std::vector<double> parse_grid(const json& root, const std::string& key) {
    if (!root.contains(key)) throw config_error("config: missing grid '" + key + "'");
    const json& g = root[key];
    std::vector<double> out;
    if (g.is_array()) {
        for (const auto& v : g) {
            if (!v.is_number()) throw config_error("config: grid '" + key + "' must be numeric");
            out.push_back(v.get<double>());
        }
    } else if (g.is_object()) {
        const double a = require_number(g, "start");
        const double b = require_number(g, "stop");
        const int n = static_cast<int>(require_number(g, "count"));
        if (n < 1 || b < a) {
            throw config_error("config: grid '" + key + "' needs count >= 1 and stop >= start");
        }
        for (int i = 0; i < n; ++i) {
            out.push_back((n == 1) ? a : a + (b - a) * i / (n - 1.0));
        }
    } else {
        throw config_error("config: grid '" + key + "' must be array or {start,stop,count}");
    }
    if (out.empty()) throw config_error("config: grid '" + key + "' is empty");
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (!(out[i] >= out[i - 1])) {
            throw config_error("config: grid '" + key + "' must be sorted ascending");
        }
    }
    return out;
}

inline SpectralDensity parse_density(const json& root) {
    if (!root.contains("density")) throw config_error("config: missing 'density' block");
    const json& d = root["density"];
    const std::string family = d.value("family", "");
    if (family == "lorentzian") {
        return SpectralDensity::lorentzian(require_number(d, "amp"),
                                           require_number(d, "center"),
                                           require_number(d, "width"));
    }
    if (family == "ohmic") {
        return SpectralDensity::ohmic_with_cutoff(require_number(d, "amp"),
                                                  require_number(d, "cutoff"));
    }
    if (family == "gaussian") {
        return SpectralDensity::gaussian_bump(require_number(d, "amp"),
                                              require_number(d, "center"),
                                              require_number(d, "width"));
    }
    if (family == "tabulated") {
        if (d.contains("csv")) return SpectralDensity::from_csv(d["csv"].get<std::string>());
        if (!d.contains("omegas") || !d.contains("values")) {
            throw config_error("config: tabulated density needs 'omegas' and 'values' (or 'csv')");
        }
        return SpectralDensity::tabulated(d["omegas"].get<std::vector<double>>(),
                                          d["values"].get<std::vector<double>>());
    }
    throw config_error("config: density family must be lorentzian | ohmic | gaussian | tabulated");
}

inline ChainSpec parse_chain_spec(const json& root) {
    if (!root.contains("chain")) throw config_error("config: missing 'chain' block");
    const json& c = root["chain"];
    ChainSpec spec;
    spec.lam = parse_complex(c, "lam");
    spec.n0 = require_number(c, "n0");
    spec.nmax = static_cast<int>(number_or(c, "nmax", 64));
    spec.seed = c.value("seed", std::uint64_t{0});
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("config: chain block invalid: ") + e.what());
    }
    return spec;
}

inline json complex_to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw config_error("complex value must be [re, im]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json word_to_json(const WeylWord& w) {
    json factors = json::array();
    for (const auto& f : w.factors) {
        factors.push_back(json{{"t", f.t},
                               {"a", complex_to_json(f.a)},
                               {"b", complex_to_json(f.b)}});
    }
    return json{{"system", json::array({w.mu_sys.real(), w.mu_sys.imag(),
                                        w.mubar_sys.real(), w.mubar_sys.imag()})},
                {"factors", factors},
                {"log_scalar", complex_to_json(w.log_scalar)}};
}

inline WeylWord word_from_json(const json& j) {
    WeylWord w;
    const json& sys = j.at("system");
    if (!sys.is_array() || sys.size() != 4) {
        throw config_error("word: 'system' must be [mu_re, mu_im, mubar_re, mubar_im]");
    }
    w.mu_sys = {sys[0].get<double>(), sys[1].get<double>()};
    w.mubar_sys = {sys[2].get<double>(), sys[3].get<double>()};
    w.log_scalar = complex_from_json(j.at("log_scalar"));
    double prev = -1.0;
    for (const auto& f : j.at("factors")) {
        const double t = f.at("t").get<double>();
        if (t < 0.0 || t <= prev) {
            throw config_error("word: factor times must be nonnegative and strictly increasing");
        }
        prev = t;
        w.factors.push_back({t, complex_from_json(f.at("a")), complex_from_json(f.at("b"))});
    }
    return w;
}

inline json bath_spec_to_json(const BathSpec& b) {
    return json{{"eps", b.eps},
                {"lambda", b.lambda},
                {"omegas", b.omegas},
                {"couplings", b.couplings},
                {"occupations", b.occupations},
                {"decoupled", b.decoupled}};
}

inline BathSpec parse_bath_spec(const json& root) {
    if (!root.contains("bath")) throw config_error("config: missing 'bath' block");
    const json& b = root["bath"];
    BathSpec spec;
    spec.eps = require_number(b, "eps");
    spec.lambda = require_number(b, "lambda");
    try {
        spec.omegas = b.at("omegas").get<std::vector<double>>();
        spec.couplings = b.at("couplings").get<std::vector<double>>();
        if (b.contains("occupations")) {
            spec.occupations = b["occupations"].get<std::vector<double>>();
        } else {
            spec.occupations.assign(spec.omegas.size(), number_or(b, "n0", 0.0));
        }
    } catch (const json::exception& e) {
        throw config_error(std::string("config: bath block invalid: ") + e.what());
    }
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("config: bath block invalid: ") + e.what());
    }
    return spec;
}

}  // namespace qpsb
