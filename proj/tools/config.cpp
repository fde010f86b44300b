#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace qfragile::cli {

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
        s += (i ? ", " : "") + items[i];
    }
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

struct Range {
    double lo = -HUGE_VAL;
    double hi = HUGE_VAL;
};

class Checker {
public:
    std::vector<std::string> violations;

    void add(const std::string& path, const std::string& msg) { violations.push_back(path + ": " + msg); }

    static std::string sub(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    bool object(const Json& j, const std::string& path) {
        if (!j.is_object()) {
            add(path.empty() ? "<root>" : path, "expected an object");
            return false;
        }
        return true;
    }

    void allowed(const Json& j, const std::string& path, const std::set<std::string>& keys) {
        for (const auto& [k, v] : j.items()) {
            if (!keys.count(k)) {
                add(sub(path, k), "unknown key");
            }
        }
    }

    bool present(const Json& j, const std::string& key, const std::string& path, bool required) {
        if (j.contains(key)) {
            return true;
        }
        if (required) {
            add(sub(path, key), "required field missing");
        }
        return false;
    }

    void range_check(double v, const std::string& path, Range r) {
        if (!std::isfinite(v) || v < r.lo || v > r.hi) {
            add(path, "value " + fmt(v) + " outside [" + fmt(r.lo) + ", " + fmt(r.hi) + "]");
        }
    }

    void number(const Json& j, const std::string& key, const std::string& path, Range r, bool required) {
        if (!present(j, key, path, required)) {
            return;
        }
        const auto& v = j.at(key);
        if (!v.is_number()) {
            add(sub(path, key), "expected a number");
            return;
        }
        range_check(v.get<double>(), sub(path, key), r);
    }

    void integer(const Json& j, const std::string& key, const std::string& path, Range r, bool required) {
        if (!present(j, key, path, required)) {
            return;
        }
        const auto& v = j.at(key);
        if (!v.is_number_integer()) {
            add(sub(path, key), "expected an integer");
            return;
        }
        range_check(v.get<double>(), sub(path, key), r);
    }

    void boolean(const Json& j, const std::string& key, const std::string& path) {
        if (j.contains(key) && !j.at(key).is_boolean()) {
            add(sub(path, key), "expected true or false");
        }
    }

    void string_enum(const Json& j, const std::string& key, const std::string& path,
                     const std::vector<std::string>& values, bool required) {
        if (!present(j, key, path, required)) {
            return;
        }
        const auto& v = j.at(key);
        if (!v.is_string()) {
            add(sub(path, key), "expected a string");
            return;
        }
        if (std::find(values.begin(), values.end(), v.get<std::string>()) == values.end()) {
            add(sub(path, key), "'" + v.get<std::string>() + "' is not one of {" + join(values) + "}");
        }
    }

    // number, or a non-empty list of numbers
    void number_or_list(const Json& j, const std::string& key, const std::string& path, Range r, bool required,
                        bool integral = false) {
        if (!present(j, key, path, required)) {
            return;
        }
        const auto& v = j.at(key);
        const std::string p = sub(path, key);
        auto one = [&](const Json& x, const std::string& xp) {
            if (integral ? !x.is_number_integer() : !x.is_number()) {
                add(xp, integral ? "expected an integer" : "expected a number");
                return;
            }
            range_check(x.get<double>(), xp, r);
        };
        if (v.is_array()) {
            if (v.empty()) {
                add(p, "list must not be empty");
            }
            for (std::size_t i = 0; i < v.size(); ++i) {
                one(v[i], p + "[" + std::to_string(i) + "]");
            }
        } else {
            one(v, p);
        }
    }

    void interval(const Json& j, const std::string& key, const std::string& path, Range r) {
        if (!j.contains(key)) {
            return;
        }
        const auto& v = j.at(key);
        const std::string p = sub(path, key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            add(p, "expected [lo, hi]");
            return;
        }
        range_check(v[0].get<double>(), p + "[0]", r);
        range_check(v[1].get<double>(), p + "[1]", r);
        if (!(v[1].get<double>() > v[0].get<double>())) {
            add(p, "hi must exceed lo");
        }
    }

    // {values: [...]} or {lo, hi, points}; beta grids also take densify and halfwidth
    void grid(const Json& j, const std::string& key, const std::string& path, Range r, bool required,
              bool beta_grid = false) {
        if (!present(j, key, path, required)) {
            return;
        }
        const auto& g = j.at(key);
        const std::string p = sub(path, key);
        if (!object(g, p)) {
            return;
        }
        std::set<std::string> keys = {"values", "lo", "hi", "points"};
        if (beta_grid) {
            keys.insert({"densify", "halfwidth"});
        }
        allowed(g, p, keys);
        if (g.contains("values")) {
            for (const char* k : {"lo", "hi", "points", "densify", "halfwidth"}) {
                if (g.contains(k)) {
                    add(sub(p, k), "cannot be combined with values");
                }
            }
            const auto& v = g.at("values");
            if (!v.is_array() || v.empty()) {
                add(sub(p, "values"), "expected a non-empty list of numbers");
                return;
            }
            for (std::size_t i = 0; i < v.size(); ++i) {
                const std::string ip = sub(p, "values") + "[" + std::to_string(i) + "]";
                if (!v[i].is_number()) {
                    add(ip, "expected a number");
                    return;
                }
                range_check(v[i].get<double>(), ip, r);
                if (i > 0 && v[i - 1].is_number() && !(v[i].get<double>() > v[i - 1].get<double>())) {
                    add(sub(p, "values"), "must be strictly increasing");
                    return;
                }
            }
            return;
        }
        const bool defaults = beta_grid;
        number(g, "lo", p, r, !defaults);
        number(g, "hi", p, r, !defaults);
        integer(g, "points", p, {2, 1e7}, !defaults);
        if (g.contains("lo") && g.contains("hi") && g["lo"].is_number() && g["hi"].is_number() &&
            !(g["hi"].get<double>() > g["lo"].get<double>())) {
            add(sub(p, "hi"), "must exceed lo");
        }
        integer(g, "densify", p, {0, 1e6}, false);
        number(g, "halfwidth", p, {1e-12, 1.0}, false);
    }

    // Spin given directly as J or through N qubits (J = N/2).
    void spin_probe(const Json& j, const std::string& path, double max_j, bool allow_state,
                    const std::vector<std::string>& states = {"first-dicke"}) {
        if (!present(j, "probe", path, true)) {
            return;
        }
        const auto& pr = j.at("probe");
        const std::string p = sub(path, "probe");
        if (!object(pr, p)) {
            return;
        }
        std::set<std::string> keys = {"J", "N"};
        if (allow_state) {
            keys.insert("state");
        }
        allowed(pr, p, keys);
        if (allow_state) {
            string_enum(pr, "state", p, states, false);
        }
        const bool has_j = pr.contains("J");
        const bool has_n = pr.contains("N");
        if (has_j == has_n) {
            add(p, "exactly one of J or N is required");
            return;
        }
        if (has_n) {
            integer(pr, "N", p, {2, 2 * max_j}, true);
            return;
        }
        number(pr, "J", p, {1, max_j}, true);
        if (pr["J"].is_number()) {
            const double tj = 2.0 * pr["J"].get<double>();
            if (tj != std::round(tj)) {
                add(sub(p, "J"), "must be an integer or half-integer");
            }
        }
    }
};

const std::set<std::string> kCommon = {"experiment", "output", "seed", "threads", "description"};

std::set<std::string> with_common(std::set<std::string> keys) {
    keys.insert(kCommon.begin(), kCommon.end());
    return keys;
}

double probe_spin(const Json& config) {
    const auto& pr = config.value("probe", Json::object());
    if (!pr.is_object()) {
        return NAN;
    }
    if (pr.contains("J") && pr["J"].is_number()) {
        return pr["J"].get<double>();
    }
    if (pr.contains("N") && pr["N"].is_number_integer()) {
        return pr["N"].get<int>() / 2.0;
    }
    return NAN;
}

constexpr Range kNonNeg{0.0, HUGE_VAL};
constexpr Range kUnit{0.0, 1.0};
constexpr Range kBeta{0.0, M_PI};

void check_sweep(Checker& c, const Json& j) {
    c.allowed(j, "", with_common({"probe", "noise", "grid"}));
    c.spin_probe(j, "", kMaxSpin, true);
    c.grid(j, "grid", "", kBeta, false, true);
    if (!j.contains("noise")) {
        return;
    }
    const auto& n = j.at("noise");
    if (!c.object(n, "noise")) {
        return;
    }
    c.allowed(n, "noise", {"kind", "gamma_t", "epsilon", "M", "base"});
    const std::vector<std::string> kinds = {"none", "collective-depolarizing", "local-depolarizing",
                                            "identity-mixing", "pathological"};
    c.string_enum(n, "kind", "noise", kinds, true);
    if (!n.contains("kind") || !n["kind"].is_string()) {
        return;
    }
    const std::string kind = n["kind"].get<std::string>();
    const bool uses_gamma = kind == "collective-depolarizing" || kind == "local-depolarizing" || kind == "pathological";
    if (uses_gamma) {
        c.number_or_list(n, "gamma_t", "noise", kNonNeg, true);
    } else if (n.contains("gamma_t")) {
        c.add("noise.gamma_t", "not used by noise kind '" + kind + "'");
    }
    if (kind == "identity-mixing") {
        c.number_or_list(n, "epsilon", "noise", kUnit, true);
    } else if (n.contains("epsilon")) {
        c.add("noise.epsilon", "not used by noise kind '" + kind + "'");
    }
    if (kind == "pathological") {
        c.number(n, "M", "noise", {-kMaxSpin, kMaxSpin}, true);
        c.string_enum(n, "base", "noise", {"jz", "jx", "jy", "xyz"}, false);
        const double jv = probe_spin(j);
        if (n.contains("M") && n["M"].is_number() && std::isfinite(jv)) {
            const double m = n["M"].get<double>();
            if (!(std::abs(m) < jv) || std::round(jv - m) != jv - m) {
                c.add("noise.M", "must satisfy |M| < J with J - M integral");
            }
        }
    } else {
        for (const char* k : {"M", "base"}) {
            if (n.contains(k)) {
                c.add(std::string("noise.") + k, "only used by noise kind 'pathological'");
            }
        }
    }
    if (kind == "local-depolarizing") {
        const double jv = probe_spin(j);
        if (std::isfinite(jv) && 2.0 * jv > kMaxLocalQubits) {
            c.add("probe", "local-depolarizing supports at most " + std::to_string(kMaxLocalQubits) + " qubits");
        }
    }
}

void check_jensen(Checker& c, const Json& j, bool local) {
    c.allowed(j, "", with_common({"probe", "gamma_t", "grid"}));
    c.spin_probe(j, "", local ? kMaxLocalQubits / 2.0 : kMaxSpin, true);
    c.number(j, "gamma_t", "", kNonNeg, true);
    c.grid(j, "grid", "", kBeta, false, true);
}

void check_sphere(Checker& c, const Json& j) {
    c.allowed(j, "", with_common({"probe", "epsilon", "theta_grid", "phi_grid"}));
    c.spin_probe(j, "", kMaxSpin, true, {"first-dicke", "coherent"});
    c.number(j, "epsilon", "", kUnit, true);
    c.grid(j, "theta_grid", "", kBeta, true);
    c.grid(j, "phi_grid", "", {-2 * M_PI, 2 * M_PI}, true);
}

void check_mle(Checker& c, const Json& j) {
    c.allowed(j, "", with_common({"probe", "gamma_t", "beta_grid", "theta0", "average", "average_range",
                                  "average_points", "samples", "runs", "resolution", "theta_range", "fold"}));
    c.spin_probe(j, "", kMaxSpin, true);
    c.number(j, "gamma_t", "", kNonNeg, true);
    c.grid(j, "beta_grid", "", kBeta, true);
    if (j.contains("theta0")) {
        c.number_or_list(j, "theta0", "", {-M_PI, M_PI}, false);
    }
    c.boolean(j, "average", "");
    c.boolean(j, "fold", "");
    c.interval(j, "average_range", "", {-M_PI, M_PI});
    c.interval(j, "theta_range", "", {-M_PI, M_PI});
    c.integer(j, "average_points", "", {1, 1e5}, false);
    c.integer(j, "samples", "", {1, 1e7}, false);
    c.integer(j, "runs", "", {1, 1e8}, false);
    c.integer(j, "resolution", "", {3, 1e7}, false);
    if (j.contains("average") && j["average"].is_boolean() && !j["average"].get<bool>() && !j.contains("theta0")) {
        c.add("theta0", "required when average is false");
    }
}

void check_bosonic(Checker& c, const Json& j) {
    c.allowed(j, "", with_common({"fock_n", "gamma_t", "alpha_grid", "cutoff"}));
    c.number_or_list(j, "fock_n", "", {0, 1}, true, true);
    c.number(j, "gamma_t", "", kNonNeg, true);
    c.grid(j, "alpha_grid", "", {0, 20}, true);
    c.integer(j, "cutoff", "", {6, 400}, false);
}

void check_qubit(Checker& c, const Json& j) {
    c.allowed(j, "", with_common({"beta_grid", "p", "theta"}));
    c.grid(j, "beta_grid", "", {-2 * M_PI, 2 * M_PI}, true);
    c.number_or_list(j, "p", "", kUnit, true);
    c.number(j, "theta", "", {-M_PI, M_PI}, false);
}

void check_echo(Checker& c, const Json& j) {
    c.allowed(j, "", with_common({"probe", "design_theta", "epsilon", "theta_grid"}));
    c.spin_probe(j, "", kMaxSpin, true);
    c.number(j, "design_theta", "", {-M_PI, M_PI}, true);
    c.number_or_list(j, "epsilon", "", kUnit, true);
    c.grid(j, "theta_grid", "", {-M_PI, M_PI}, true);
}

void check_hpa(Checker& c, const Json& j) {
    c.allowed(j, "", with_common({"J", "n"}));
    if (!c.present(j, "J", "", true)) {
        return;
    }
    c.number_or_list(j, "J", "", {8, 1e6}, true);
    if (!j["J"].is_array() || j["J"].size() < 3) {
        c.add("J", "at least 3 values are required for a fit");
    } else {
        for (std::size_t i = 0; i < j["J"].size(); ++i) {
            const auto& v = j["J"][i];
            if (v.is_number() && 2.0 * v.get<double>() != std::round(2.0 * v.get<double>())) {
                c.add("J[" + std::to_string(i) + "]", "must be an integer or half-integer");
            }
        }
    }
    c.integer(j, "n", "", {1, 1e6}, false);
}

}  // namespace

Json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
}

std::vector<std::string> validate_config(const Json& config) {
    Checker c;
    if (!c.object(config, "")) {
        return c.violations;
    }
    c.string_enum(config, "experiment", "", kExperimentKinds, true);
    if (c.present(config, "output", "", true)) {
        const auto& o = config.at("output");
        if (!o.is_string() || o.get<std::string>().empty()) {
            c.add("output", "expected a non-empty file name");
        } else if (std::filesystem::path(o.get<std::string>()).extension() != ".csv") {
            c.add("output", "file name must end in .csv");
        }
    }
    if (config.contains("seed") && !config.at("seed").is_number_unsigned()) {
        c.add("seed", "expected a nonnegative integer");
    }
    c.integer(config, "threads", "", {0, 4096}, false);
    if (config.contains("description") && !config.at("description").is_string()) {
        c.add("description", "expected a string");
    }
    if (!config.contains("experiment") || !config.at("experiment").is_string()) {
        return c.violations;
    }
    const std::string kind = config.at("experiment").get<std::string>();
    if (kind == "sweep-cfi") {
        check_sweep(c, config);
    } else if (kind == "discontinuities") {
        c.allowed(config, "", with_common({"probe"}));
        c.spin_probe(config, "", 1e4, true);
    } else if (kind == "jensen") {
        check_jensen(c, config, false);
    } else if (kind == "local-noise-jensen") {
        check_jensen(c, config, true);
    } else if (kind == "sphere-scan") {
        check_sphere(c, config);
    } else if (kind == "mle-bias") {
        check_mle(c, config);
    } else if (kind == "bosonic-sweep") {
        check_bosonic(c, config);
    } else if (kind == "qubit-demo") {
        check_qubit(c, config);
    } else if (kind == "echo-demo") {
        check_echo(c, config);
    } else if (kind == "hpa-scaling") {
        check_hpa(c, config);
    }
    return c.violations;
}

}  // namespace qfragile::cli
