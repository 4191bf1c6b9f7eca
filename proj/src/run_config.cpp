#include "vibret/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vibret {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (trim(v.substr(used)).empty() && std::isfinite(x)) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] != '-') {
            const unsigned long long x = std::stoull(v, &used);
            if (trim(v.substr(used)).empty()) return x;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
    const std::string l = lower(v);
    if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
    if (l == "false" || l == "no" || l == "off" || l == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

int orbital_index(const std::string& name, int n_orbitals) {
    const int homo = n_orbitals / 2 - 1;
    const std::string s = trim(name);
    auto offset = [&](std::size_t at, int sign) {
        const std::string rest = trim(s.substr(at));
        if (rest.empty()) return 0;
        if (rest[0] != (sign > 0 ? '+' : '-')) throw ConfigError("bad orbital name '" + s + "'");
        return sign * static_cast<int>(to_count("orbital", trim(rest.substr(1))));
    };
    int idx = 0;
    if (s.rfind("HOMO", 0) == 0) {
        idx = homo + offset(4, -1);
    } else if (s.rfind("LUMO", 0) == 0) {
        idx = homo + 1 + offset(4, +1);
    } else {
        idx = static_cast<int>(to_count("orbital", s));
    }
    if (idx < 0 || idx >= n_orbitals) throw ConfigError("orbital '" + s + "' is outside the chain");
    return idx;
}

Excitation parse_move(const std::string& text, int n_orbitals) {
    std::string s = trim(text);
    Spin spin = Spin::up;
    if (const auto colon = s.find(':'); colon != std::string::npos) {
        const std::string sp = lower(trim(s.substr(colon + 1)));
        if (sp == "up") {
            spin = Spin::up;
        } else if (sp == "down") {
            spin = Spin::down;
        } else {
            throw ConfigError("bad spin '" + sp + "'");
        }
        s = trim(s.substr(0, colon));
    }
    const auto arrow = s.find("->");
    if (arrow == std::string::npos) throw ConfigError("excitation '" + s + "' lacks '->'");
    return {orbital_index(s.substr(0, arrow), n_orbitals), orbital_index(s.substr(arrow + 2), n_orbitals), spin};
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

InitialStateSpec parse_initial_state(const std::string& text, int n_orbitals) {
    const auto parts = split(text, ';');
    if (parts.empty() || parts[0].empty()) throw ConfigError("initial_state is empty");
    if (parts.size() > 2) throw ConfigError("initial_state has more than one ';'");

    InitialStateSpec spec;
    spec.labels = parts[0].find('(') != std::string::npos;
    if (spec.labels) {
        for (const std::string& t : split(parts[0], '+')) {
            if (t.empty()) throw ConfigError("empty label term in initial_state");
            try {
                (void)Determinant::from_label(t, n_orbitals);
            } catch (const std::exception& e) {
                throw ConfigError("initial_state label " + t + ": " + e.what());
            }
            spec.label_terms.push_back(t);
        }
    } else {
        for (const std::string& t : split(parts[0], ',')) {
            if (t.empty()) throw ConfigError("empty excitation term in initial_state");
            std::vector<Excitation> moves;
            if (t != "GS") {
                for (const std::string& m : split(t, '&')) moves.push_back(parse_move(m, n_orbitals));
            }
            spec.excitation_terms.push_back(std::move(moves));
        }
    }

    const std::size_t n = spec.size();
    if (parts.size() == 2) {
        std::string b = parts[1];
        const auto eq = b.find('=');
        if (eq == std::string::npos || trim(b.substr(0, eq)) != "b")
            throw ConfigError("amplitudes must be given as 'b = x, y, ...'");
        for (const std::string& x : split(b.substr(eq + 1), ',')) spec.amplitudes.push_back(to_double("b", x));
        if (spec.amplitudes.size() != n)
            throw ConfigError("initial_state has " + std::to_string(n) + " terms but " +
                              std::to_string(spec.amplitudes.size()) + " amplitudes");
    } else {
        spec.amplitudes.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
    }
    double norm = 0.0;
    for (double a : spec.amplitudes) norm += a * a;
    if (std::abs(norm - 1.0) > 1e-3)
        throw ConfigError("initial_state amplitudes have squared norm " + std::to_string(norm) + ", expected 1");
    for (double& a : spec.amplitudes) a /= std::sqrt(norm);
    return spec;
}

SuperpositionState build_initial_state(const InitialStateSpec& spec, const OrbitalSet& orbitals) {
    const int n = orbitals.size();
    if (spec.labels) {
        std::vector<Term> terms;
        for (std::size_t i = 0; i < spec.label_terms.size(); ++i) {
            if (spec.amplitudes[i] == 0.0) continue;
            terms.push_back({cplx(spec.amplitudes[i], 0.0), Determinant::from_label(spec.label_terms[i], n)});
        }
        return SuperpositionState(orbitals, std::move(terms));
    }
    std::vector<ExcitationTerm> terms;
    for (std::size_t i = 0; i < spec.excitation_terms.size(); ++i) {
        if (spec.amplitudes[i] == 0.0) continue;
        terms.push_back({cplx(spec.amplitudes[i], 0.0), spec.excitation_terms[i]});
    }
    return build_excited_state(orbitals, Determinant::ground(n / 2), terms);
}

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string v = trim(raw_value);
    if (key == "n_sites") {
        params.n_sites = static_cast<int>(to_count(key, v));
    } else if (key == "t0") {
        params.t0 = to_double(key, v);
    } else if (key == "alpha") {
        params.alpha = to_double(key, v);
    } else if (key == "k_spring") {
        params.k_spring = to_double(key, v);
    } else if (key == "mass") {
        params.mass = to_double(key, v);
    } else if (key == "a_lattice") {
        params.a_lattice = to_double(key, v);
    } else if (key == "hbar") {
        params.hbar = to_double(key, v);
    } else if (key == "clamp") {
        const std::string l = lower(v);
        if (l == "both") {
            clamp = {true, true};
        } else if (l == "none") {
            clamp = {false, false};
        } else if (l == "first") {
            clamp = {true, false};
        } else if (l == "last") {
            clamp = {false, true};
        } else {
            throw ConfigError("clamp: expected both|none|first|last");
        }
    } else if (key == "initial_state") {
        initial_state = v;
    } else if (key == "triad") {
        if (lower(v) == "none") {
            triad.reset();
        } else {
            std::istringstream in(v);
            std::array<std::string, 3> t;
            std::string extra;
            if (!(in >> t[0] >> t[1] >> t[2]) || (in >> extra)) throw ConfigError("triad: expected three labels");
            triad = t;
        }
    } else if (key == "trajectories") {
        trajectories = to_count(key, v);
    } else if (key == "seed") {
        seed = to_count(key, v);
    } else if (key == "sampling") {
        const std::string l = lower(v);
        if (l == "wigner") {
            sampling = Sampling::wigner;
        } else if (l == "equilibrium") {
            sampling = Sampling::equilibrium;
        } else {
            throw ConfigError("sampling: expected wigner|equilibrium");
        }
    } else if (key == "dt") {
        integrator.dt = to_double(key, v);
    } else if (key == "t_max") {
        integrator.t_max = to_double(key, v);
    } else if (key == "record_interval") {
        record_interval = to_double(key, v);
    } else if (key == "energy_drift_tolerance") {
        integrator.energy_drift_tolerance = to_double(key, v);
    } else if (key == "orthonormality_tolerance") {
        integrator.orthonormality_tolerance = to_double(key, v);
    } else if (key == "rdm2") {
        const std::string l = lower(v);
        if (l == "auto") {
            rdm2 = Rdm2Policy::automatic;
        } else if (l == "on" || l == "true") {
            rdm2 = Rdm2Policy::on;
        } else if (l == "off" || l == "false") {
            rdm2 = Rdm2Policy::off;
        } else {
            throw ConfigError("rdm2: expected auto|on|off");
        }
    } else if (key == "output_dir") {
        if (v.empty()) throw ConfigError("output_dir is empty");
        output_dir = v;
    } else if (key == "checkpoint_every") {
        checkpoint_every = to_count(key, v);
    } else if (key == "checkpoint_interval") {
        checkpoint_interval = to_double(key, v);
    } else if (key == "workers") {
        workers = static_cast<int>(to_count(key, v));
    } else if (key == "deterministic") {
        deterministic = to_bool(key, v);
    } else if (key == "resume") {
        resume = to_bool(key, v);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

void RunConfig::validate() {
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(integrator.dt > 0.0) || !(integrator.t_max >= 0.0)) throw ConfigError("dt must be positive and t_max >= 0");
    if (!(record_interval > 0.0)) throw ConfigError("record_interval must be positive");
    const double stride = record_interval / integrator.dt;
    if (std::abs(stride - std::round(stride)) > 1e-9 * stride || std::round(stride) < 1)
        throw ConfigError("record_interval must be a whole multiple of dt");
    integrator.record_stride = static_cast<int>(std::llround(stride));
    const double steps = integrator.t_max / integrator.dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        throw ConfigError("t_max must be a whole multiple of dt");
    if (!(integrator.energy_drift_tolerance > 0.0) || !(integrator.orthonormality_tolerance > 0.0))
        throw ConfigError("monitor tolerances must be positive");
    if (trajectories == 0) throw ConfigError("trajectories must be at least 1");
    if (sampling == Sampling::wigner && !seed) throw ConfigError("seed is required for Wigner-sampled ensembles");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (checkpoint_interval < 0.0) throw ConfigError("checkpoint_interval must be >= 0");
    if (record_rdm2() && params.n_sites > kDenseRdm2Limit)
        throw ConfigError("two-body records are limited to n_sites <= " + std::to_string(kDenseRdm2Limit));
    (void)parse_initial_state(initial_state, params.n_sites);
    if (triad) {
        for (const std::string& l : *triad) {
            try {
                (void)Determinant::from_label(l, params.n_sites);
            } catch (const std::exception& e) {
                throw ConfigError("triad label " + l + ": " + e.what());
            }
        }
    }
}

bool RunConfig::record_rdm2() const {
    switch (rdm2) {
    case Rdm2Policy::on:
        return true;
    case Rdm2Policy::off:
        return false;
    case Rdm2Policy::automatic:
        break;
    }
    return params.n_sites <= 8;
}

std::string RunConfig::canonical() const {
    const char* clamp_name = clamp.first ? (clamp.last ? "both" : "first") : (clamp.last ? "last" : "none");
    std::ostringstream o;
    o.precision(17);
    o << "n_sites = " << params.n_sites << "\nt0 = " << params.t0 << "\nalpha = " << params.alpha
      << "\nk_spring = " << params.k_spring << "\nmass = " << params.mass << "\na_lattice = " << params.a_lattice
      << "\nhbar = " << params.hbar << "\nclamp = " << clamp_name << "\ninitial_state = " << initial_state
      << "\ntrajectories = " << trajectories << "\n";
    if (seed) o << "seed = " << *seed << "\n";
    o << "sampling = " << (sampling == Sampling::wigner ? "wigner" : "equilibrium") << "\ndt = " << integrator.dt
      << "\nt_max = " << integrator.t_max << "\nrecord_interval = " << record_interval
      << "\nenergy_drift_tolerance = " << integrator.energy_drift_tolerance
      << "\northonormality_tolerance = " << integrator.orthonormality_tolerance
      << "\nrdm2 = " << (record_rdm2() ? "on" : "off") << "\ndeterministic = " << (deterministic ? "true" : "false")
      << "\n";
    return o.str();
}

std::string RunConfig::dump() const {
    std::string out = canonical();
    out += "triad = ";
    out += triad ? (*triad)[0] + " " + (*triad)[1] + " " + (*triad)[2] : std::string("none");
    out += "\n";
    return out;
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
    return buf;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        try {
            base.set(line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

}  // namespace vibret
