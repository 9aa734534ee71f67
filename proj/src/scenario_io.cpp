#include "dysonmap/scenario_io.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dysonmap {

namespace {

using KeySet = std::set<std::string>;

const KeySet kTop = {"schema", "name", "coefficients", "kappa", "truncation", "grid", "initial_map",
                     "perturbation_order", "lr_convention", "solver", "tolerances", "checks"};
const KeySet kCoefficients = {"omega", "alpha", "beta"};
const std::map<std::string, KeySet> kFormKeys = {
    {"constant", {"form", "value"}},
    {"polynomial", {"form", "coeffs"}},
    {"sinusoid", {"form", "A", "B", "C", "nu"}},
    {"exp_ramp", {"form", "c", "sigma"}},
};
const KeySet kTruncation = {"dim", "guard"};
const KeySet kGrid = {"t0", "t1", "steps"};
const KeySet kInitialMap = {"gamma0", "lambda0", "theta0"};
const KeySet kSolver = {"substeps", "step_guard"};
const KeySet kTolerances = {"algebraic",      "integrator",       "perturbative_floor", "perturbative_c",
                            "quasi_hermiticity", "pairing_identity", "tail_warning",       "stencil_order"};
const KeySet kChecks = {"analytic_evolution"};

std::string join_path(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

struct Issue {
    std::string path;
    std::string message;
    int line = -1;
    int column = -1;
};

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    void fail(const std::string& path, const YAML::Node& node, const std::string& msg) {
        Issue i{path, msg};
        if (node.IsDefined() && node.Mark().line >= 0) {
            i.line = node.Mark().line + 1;
            i.column = node.Mark().column + 1;
        }
        issues_.push_back(std::move(i));
    }

    bool require_map(const YAML::Node& n, const std::string& path) {
        if (n.IsMap()) return true;
        fail(path, n, "expected a mapping");
        return false;
    }

    void check_keys(const YAML::Node& n, const std::string& path, const KeySet& allowed) {
        for (const auto& kv : n) {
            const std::string key = kv.first.as<std::string>();
            if (allowed.count(key)) continue;
            const std::string full = join_path(path, key);
            fail(full, kv.first,
                 "unknown key '" + key + "' in " + (path.empty() ? "<top level>" : path) + "; did you mean '" +
                     nearest_key(full) + "'?");
        }
    }

    double real(const YAML::Node& n, const std::string& path) {
        try {
            if (n.IsScalar()) return n.as<double>();
        } catch (const YAML::Exception&) {
        }
        fail(path, n, "expected a real number");
        return 0.0;
    }

    long integer(const YAML::Node& n, const std::string& path) {
        try {
            if (n.IsScalar()) return n.as<long>();
        } catch (const YAML::Exception&) {
        }
        fail(path, n, "expected an integer");
        return 0;
    }

    bool boolean(const YAML::Node& n, const std::string& path) {
        try {
            if (n.IsScalar()) return n.as<bool>();
        } catch (const YAML::Exception&) {
        }
        fail(path, n, "expected true or false");
        return false;
    }

    /// number | [re, im] | {re, im} | {abs, arg}
    cd complex(const YAML::Node& n, const std::string& path) {
        if (n.IsScalar()) return {real(n, path), 0.0};
        if (n.IsSequence()) {
            if (n.size() != 2) {
                fail(path, n, "expected [re, im] (got " + std::to_string(n.size()) + " entries)");
                return {};
            }
            return {real(n[0], path + "[0]"), real(n[1], path + "[1]")};
        }
        if (n.IsMap()) {
            if (n["abs"] || n["arg"]) {
                check_keys(n, path, {"abs", "arg"});
                const double r = n["abs"] ? real(n["abs"], path + ".abs") : 1.0;
                const double a = n["arg"] ? real(n["arg"], path + ".arg") : 0.0;
                return std::polar(r, a);
            }
            check_keys(n, path, {"re", "im"});
            return {n["re"] ? real(n["re"], path + ".re") : 0.0, n["im"] ? real(n["im"], path + ".im") : 0.0};
        }
        fail(path, n, "expected a complex number");
        return {};
    }

    Coefficient coefficient(const YAML::Node& n, const std::string& path) {
        if (n.IsScalar() || n.IsSequence()) return Coefficient::constant(complex(n, path));
        if (!require_map(n, path)) return {};
        const std::string form = n["form"] ? n["form"].as<std::string>() : "constant";
        const auto it = kFormKeys.find(form);
        if (it == kFormKeys.end()) {
            fail(path + ".form", n["form"], "unknown form '" + form + "' (constant, polynomial, sinusoid, exp_ramp)");
            return {};
        }
        check_keys(n, path, it->second);
        auto opt_complex = [&](const char* key) {
            return n[key] ? complex(n[key], path + "." + key) : cd{};
        };
        if (form == "constant") {
            if (!n["value"]) fail(path + ".value", n, "missing key 'value'");
            return Coefficient::constant(opt_complex("value"));
        }
        if (form == "polynomial") {
            const YAML::Node c = n["coeffs"];
            if (!c || !c.IsSequence() || c.size() == 0) {
                fail(path + ".coeffs", c ? c : n, "expected a non-empty list of coefficients");
                return {};
            }
            std::vector<cd> cs;
            for (std::size_t k = 0; k < c.size(); ++k) cs.push_back(complex(c[k], path + ".coeffs[" + std::to_string(k) + "]"));
            return Coefficient::polynomial(std::move(cs));
        }
        if (form == "sinusoid") {
            const double nu = n["nu"] ? real(n["nu"], path + ".nu") : 1.0;
            return Coefficient::sinusoid(opt_complex("A"), opt_complex("B"), opt_complex("C"), nu);
        }
        const double sigma = n["sigma"] ? real(n["sigma"], path + ".sigma") : 0.0;
        return Coefficient::exp_ramp(opt_complex("c"), sigma);
    }

    [[noreturn]] void raise() const {
        std::ostringstream msg;
        msg << source_ << ": " << issues_.size() << (issues_.size() == 1 ? " error" : " errors");
        for (const auto& i : issues_) {
            msg << "\n  " << (i.path.empty() ? "<document>" : i.path);
            if (i.line > 0) msg << " (line " << i.line << ", column " << i.column << ")";
            msg << ": " << i.message;
        }
        const Issue& first = issues_.front();
        throw ConfigError(msg.str(), first.path, first.line, first.column);
    }

    bool ok() const { return issues_.empty(); }

private:
    std::string source_;
    std::vector<Issue> issues_;
};

void apply_override(YAML::Node& root, const std::string& assignment, const std::string& source) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError(source + ": override '" + assignment + "' must have the form key=value", assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string p; std::getline(ss, p, '.');) {
        if (p.empty()) throw ConfigError(source + ": malformed override key '" + key + "'", key);
        parts.push_back(p);
    }
    const auto& keys = schema_keys();
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const std::string& k) {
        return k == key || key.rfind(k + ".", 0) == 0;
    });
    if (!known)
        throw ConfigError(source + ": override key '" + key + "' is not a scenario key; did you mean '" +
                              nearest_key(key) + "'?",
                          key);

    YAML::Node value;
    try {
        value = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ": override '" + key + "' has an unparsable value: " + e.msg, key);
    }

    YAML::Node cur;
    cur.reset(root);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        YAML::Node next = cur[parts[i]];
        if (!next.IsMap()) {
            // A scalar shorthand (e.g. `omega: 1`) is expanded before descending.
            if (next.IsScalar() || next.IsSequence()) {
                YAML::Node expanded(YAML::NodeType::Map);
                expanded["form"] = "constant";
                expanded["value"] = YAML::Clone(next);
                cur[parts[i]] = expanded;
            } else {
                cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
            }
        }
        YAML::Node child = cur[parts[i]];
        cur.reset(child);
    }
    cur[parts.back()] = value;
}

}  // namespace

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

const std::vector<std::string>& schema_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& t : kTop) k.push_back(t);
        KeySet coeff_keys;
        for (const auto& [form, ks] : kFormKeys) coeff_keys.insert(ks.begin(), ks.end());
        for (const auto& c : kCoefficients) {
            k.push_back("coefficients." + c);
            for (const auto& ck : coeff_keys) k.push_back("coefficients." + c + "." + ck);
        }
        const std::pair<const char*, const KeySet*> sections[] = {
            {"truncation", &kTruncation}, {"grid", &kGrid},         {"initial_map", &kInitialMap},
            {"solver", &kSolver},         {"tolerances", &kTolerances}, {"checks", &kChecks}};
        for (const auto& [sec, ks] : sections)
            for (const auto& key : *ks) k.push_back(std::string(sec) + "." + key);
        std::sort(k.begin(), k.end());
        return k;
    }();
    return keys;
}

std::string nearest_key(const std::string& key) {
    const auto last = [](const std::string& p) {
        const auto dot = p.rfind('.');
        return dot == std::string::npos ? p : p.substr(dot + 1);
    };
    const std::string leaf = last(key);
    std::string best;
    std::tuple<int, std::size_t, std::size_t> best_score{2, SIZE_MAX, SIZE_MAX};
    for (const auto& cand : schema_keys()) {
        const std::string cl = last(cand);
        // Prefer candidates whose leaf is contained in the typo (or vice versa), then edit distance.
        const int contained = (leaf.find(cl) != std::string::npos || cl.find(leaf) != std::string::npos) ? 0 : 1;
        const std::tuple<int, std::size_t, std::size_t> score{contained, edit_distance(leaf, cl),
                                                              edit_distance(key, cand)};
        if (score < best_score) {
            best_score = score;
            best = cand;
        }
    }
    return best;
}

RunSpec parse_scenario_text(const std::string& text, const std::vector<std::string>& overrides,
                            const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ": parse error at line " + std::to_string(e.mark.line + 1) + ", column " +
                              std::to_string(e.mark.column + 1) + ": " + e.msg,
                          "", e.mark.line + 1, e.mark.column + 1);
    }
    if (!root.IsMap()) throw ConfigError(source + ": the document must be a mapping", "");
    for (const auto& o : overrides) apply_override(root, o, source);

    Reader r(source);
    r.check_keys(root, "", kTop);

    RunSpec spec;
    Scenario& s = spec.scenario;

    if (!root["schema"]) {
        r.fail("schema", root, "missing key 'schema' (expected " + std::to_string(kScenarioSchema) + ")");
    } else if (r.integer(root["schema"], "schema") != kScenarioSchema) {
        r.fail("schema", root["schema"], "unsupported schema version (expected " + std::to_string(kScenarioSchema) + ")");
    }
    if (root["name"]) s.name = root["name"].as<std::string>();

    if (const YAML::Node c = root["coefficients"]) {
        if (r.require_map(c, "coefficients")) {
            r.check_keys(c, "coefficients", kCoefficients);
            if (c["omega"]) s.omega = r.coefficient(c["omega"], "coefficients.omega");
            if (c["alpha"]) s.alpha = r.coefficient(c["alpha"], "coefficients.alpha");
            if (c["beta"]) s.beta = r.coefficient(c["beta"], "coefficients.beta");
        }
    }

    if (const YAML::Node k = root["kappa"]) {
        s.kappa = r.real(k, "kappa");
        if (!std::isfinite(s.kappa) || s.kappa < 0.0)
            r.fail("kappa", k, "must be a finite number >= 0 (got " + k.as<std::string>() + ")");
    }

    if (const YAML::Node t = root["truncation"]) {
        if (r.require_map(t, "truncation")) {
            r.check_keys(t, "truncation", kTruncation);
            if (t["dim"]) s.dim = r.integer(t["dim"], "truncation.dim");
            if (t["guard"]) s.solver.guard_band = r.integer(t["guard"], "truncation.guard");
        }
    }
    if (s.dim < 2) r.fail("truncation.dim", root["truncation"]["dim"], "must be >= 2");
    else if (s.solver.guard_band < 0 || s.solver.guard_band >= s.dim)
        r.fail("truncation.guard", root["truncation"]["guard"], "must lie in [0, dim)");

    if (const YAML::Node g = root["grid"]) {
        double t0 = s.grid.t0, t1 = s.grid.t1;
        long steps = s.grid.steps;
        if (g.IsSequence()) {
            if (g.size() != 3) {
                r.fail("grid", g, "expected [t0, t1, steps] (got " + std::to_string(g.size()) + " entries)");
            } else {
                t0 = r.real(g[0], "grid[0]");
                t1 = r.real(g[1], "grid[1]");
                steps = r.integer(g[2], "grid[2]");
            }
        } else if (r.require_map(g, "grid")) {
            r.check_keys(g, "grid", kGrid);
            if (g["t0"]) t0 = r.real(g["t0"], "grid.t0");
            if (g["t1"]) t1 = r.real(g["t1"], "grid.t1");
            if (g["steps"]) steps = r.integer(g["steps"], "grid.steps");
        }
        if (!(std::isfinite(t0) && std::isfinite(t1) && t1 > t0)) r.fail("grid", g, "degenerate grid: needs t1 > t0");
        else if (steps < 2) r.fail("grid.steps", g, "needs at least 2 steps");
        else s.grid = TimeGrid(t0, t1, steps);
    }

    if (const YAML::Node im = root["initial_map"]) {
        if (r.require_map(im, "initial_map")) {
            r.check_keys(im, "initial_map", kInitialMap);
            if (const YAML::Node g0 = im["gamma0"]) {
                if (!(g0.IsScalar() && g0.as<std::string>() == "auto"))
                    s.gamma0 = r.complex(g0, "initial_map.gamma0");
            }
            if (im["lambda0"]) s.lambda0 = r.complex(im["lambda0"], "initial_map.lambda0");
            if (im["theta0"]) s.theta0 = r.complex(im["theta0"], "initial_map.theta0");
        }
    }

    if (const YAML::Node p = root["perturbation_order"]) {
        s.perturbation_order = static_cast<int>(r.integer(p, "perturbation_order"));
        if (s.perturbation_order != 1 && s.perturbation_order != 2)
            r.fail("perturbation_order", p, "must be 1 or 2");
    }

    if (const YAML::Node c = root["lr_convention"]) {
        const std::string v = c.IsScalar() ? c.as<std::string>() : "";
        if (v == "published") s.lr_convention = LrConvention::Published;
        else if (v == "self_consistent") s.lr_convention = LrConvention::SelfConsistent;
        else r.fail("lr_convention", c, "expected 'published' or 'self_consistent'");
    }

    if (const YAML::Node so = root["solver"]) {
        if (r.require_map(so, "solver")) {
            r.check_keys(so, "solver", kSolver);
            if (so["substeps"]) {
                s.solver.substeps = r.integer(so["substeps"], "solver.substeps");
                if (s.solver.substeps < 1) r.fail("solver.substeps", so["substeps"], "must be >= 1");
            }
            if (so["step_guard"]) {
                s.solver.step_guard = r.real(so["step_guard"], "solver.step_guard");
                if (!(s.solver.step_guard > 0.0)) r.fail("solver.step_guard", so["step_guard"], "must be > 0");
            }
        }
    }

    Tolerances& tol = spec.diagnostics.tolerances;
    if (const YAML::Node t = root["tolerances"]) {
        if (r.require_map(t, "tolerances")) {
            r.check_keys(t, "tolerances", kTolerances);
            const std::pair<const char*, double*> fields[] = {
                {"algebraic", &tol.algebraic},
                {"integrator", &tol.integrator},
                {"perturbative_floor", &tol.perturbative_floor},
                {"perturbative_c", &tol.perturbative_c},
                {"quasi_hermiticity", &tol.quasi_hermiticity},
                {"pairing_identity", &tol.pairing_identity},
                {"tail_warning", &tol.tail_warning},
                {"stencil_order", &tol.stencil_order},
            };
            for (const auto& [key, dst] : fields) {
                if (!t[key]) continue;
                const std::string path = std::string("tolerances.") + key;
                *dst = r.real(t[key], path);
                if (!(*dst > 0.0)) r.fail(path, t[key], "must be > 0");
            }
        }
    }
    if (const YAML::Node c = root["checks"]) {
        if (r.require_map(c, "checks")) {
            r.check_keys(c, "checks", kChecks);
            if (c["analytic_evolution"])
                spec.diagnostics.checks.analytic_evolution = r.boolean(c["analytic_evolution"], "checks.analytic_evolution");
        }
    }

    if (!r.ok()) r.raise();
    try {
        s.validate();
    } catch (const Error& e) {
        throw ConfigError(source + ": " + e.what(), "");
    }
    return spec;
}

RunSpec parse_scenario(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'", "");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), overrides, path);
}

}  // namespace dysonmap
