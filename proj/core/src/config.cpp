#include "stflow/config.hpp"

#include "stflow/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace stflow {

namespace {

namespace pt = boost::property_tree;

const std::vector<std::string> kKinds{"pde-solve",           "lambda-sweep", "flow-sim",
                                      "flow-modulus",        "mollify-convergence", "transport",
                                      "weak-residual",       "nonuniqueness-demo",  "modulus-verify"};

const std::map<std::string, std::set<std::string>> kKeys{
    {"experiment", {"kind", "seed", "output"}},
    {"drift", {"family", "value", "rate", "alpha", "C", "r0", "strength", "mollify"}},
    {"modulus", {"family", "C", "theta", "alpha", "r0", "delta", "p"}},
    {"grid", {"d", "L", "n", "periodic"}},
    {"time", {"s", "T", "dt", "master_dt"}},
    {"mc", {"M", "p", "separations", "n_list", "lambda_k_max", "points", "quantity", "model", "bootstrap", "record"}},
    {"pde", {"source", "tol", "max_iter"}},
    {"transport", {"datum", "test_radius", "test_center", "refinements", "alpha"}},
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Plain decimal or base^exponent, e.g. 2^-8.
double to_number(const std::string& field, const std::string& raw) {
    const std::string s = trim(raw);
    auto parse = [&](const std::string& t) {
        double v = 0.0;
        const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
        if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty())
            throw ValidationError(field, "'" + raw + "' is not a number");
        return v;
    };
    const auto caret = s.find('^');
    const double v = caret == std::string::npos ? parse(s) : std::pow(parse(trim(s.substr(0, caret))), parse(trim(s.substr(caret + 1))));
    if (!std::isfinite(v)) throw ValidationError(field, "'" + raw + "' is not finite");
    return v;
}

int to_int(const std::string& field, const std::string& raw) {
    const double v = to_number(field, raw);
    if (v != std::floor(v) || std::abs(v) > 2e9) throw ValidationError(field, "'" + raw + "' is not an integer");
    return static_cast<int>(v);
}

bool to_bool(const std::string& field, const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ValidationError(field, "'" + raw + "' is not a boolean");
}

std::vector<double> to_list(const std::string& field, const std::string& raw) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(to_number(field, item));
    }
    return out;
}

std::vector<Vec> to_points(const std::string& field, const std::string& raw) {
    std::vector<Vec> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, '|')) {
        const auto v = to_list(field, item);
        if (v.empty()) continue;
        if (static_cast<int>(v.size()) > kMaxDim) throw ValidationError(field, "point has too many components");
        Vec p(static_cast<int>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) p(static_cast<int>(i)) = v[i];
        out.push_back(p);
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
    return s;
}

void check(bool ok, const std::string& field, const std::string& why) {
    if (!ok) throw ValidationError(field, why);
}

bool divides(double whole, double part) {
    const double r = whole / part;
    return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r) && std::round(r) >= 1.0;
}

void validate(const ExperimentConfig& c) {
    static const std::set<std::string> drift_families{"zero", "constant", "ou", "tanh", "sine", "rotation",
                                                      "holder", "signed-power", "abs", "log-modulus"};
    check(drift_families.count(c.drift.family) > 0, "drift.family", "unknown drift family '" + c.drift.family + "'");
    check(c.drift.family != "constant" || static_cast<int>(c.drift.value.size()) == c.grid.d, "drift.value",
          "constant drift needs grid.d components");
    check(c.drift.family != "rotation" || c.grid.d == 2, "drift.family", "rotation drift needs grid.d = 2");
    check(c.drift.mollify == 0.0 || c.drift.mollify >= 1.0, "drift.mollify", "must be 0 or >= 1");
    check(c.drift.alpha > 0.0 && c.drift.alpha <= 1.0, "drift.alpha", "must lie in (0, 1]");
    check(c.drift.family != "signed-power" || c.drift.alpha < 1.0, "drift.alpha", "must lie in (0, 1)");
    check(c.drift.family != "log-modulus" || (c.drift.r0 > 0.0 && c.drift.r0 < 1.0), "drift.r0", "must lie in (0, 1)");

    static const std::set<std::string> modulus_families{"power-log", "inverse-log", "linear"};
    check(modulus_families.count(c.modulus.family) > 0, "modulus.family",
          "unknown modulus family '" + c.modulus.family + "'");
    check(c.modulus.C >= 0.0, "modulus.C", "must be nonnegative");
    check(c.modulus.r0 > 0.0 && c.modulus.r0 < 1.0, "modulus.r0", "must lie in (0, 1)");
    check(c.modulus.delta > 0.0 && c.modulus.delta < 1.0, "modulus.delta", "must lie in (0, 1)");
    check(c.modulus.p >= 1.0, "modulus.p", "must be >= 1");

    check(c.grid.d >= 1 && c.grid.d <= kMaxDim, "grid.d", "must lie in 1..3");
    check(c.grid.L > 0.0, "grid.L", "must be positive");
    check(c.grid.n >= 4, "grid.n", "must be at least 4");

    check(c.time.T > c.time.s, "time.T", "must exceed time.s");
    check(c.time.dt > 0.0, "time.dt", "must be positive");
    check(divides(c.time.T - c.time.s, c.time.dt), "time.dt", "must divide T - s");
    check(c.time.master_dt == 0.0 || (c.time.master_dt > 0.0 && divides(c.time.dt, c.time.master_dt)),
          "time.master_dt", "must be 0 or divide time.dt");

    check(c.mc.M >= 1, "mc.M", "must be at least 1");
    check(c.mc.p > 0.0, "mc.p", "must be positive");
    for (double r : c.mc.separations) check(r > 0.0 && r < 1.0, "mc.separations", "entries must lie in (0, 1)");
    check(c.kind != ExperimentKind::FlowModulus || c.mc.separations.size() >= 4, "mc.separations",
          "need at least four separations");
    check(!c.mc.n_list.empty(), "mc.n_list", "must not be empty");
    for (std::size_t i = 0; i < c.mc.n_list.size(); ++i) {
        check(c.mc.n_list[i] >= 1.0, "mc.n_list", "entries must be >= 1");
        check(i == 0 || c.mc.n_list[i] > c.mc.n_list[i - 1], "mc.n_list", "must be increasing");
    }
    check(c.mc.lambda_k_max >= 0 && c.mc.lambda_k_max <= 20, "mc.lambda_k_max", "must lie in 0..20");
    for (const Vec& p : c.mc.points) check(p.size() == c.grid.d, "mc.points", "points need grid.d components");
    check(c.mc.quantity == "X" || c.mc.quantity == "gradX", "mc.quantity", "must be X or gradX");
    check(c.mc.model == "power" || c.mc.model == "log-power", "mc.model", "must be power or log-power");
    check(c.mc.record == "summary" || c.mc.record == "paths", "mc.record", "must be summary or paths");

    static const std::set<std::string> sources{"one", "sine", "holder-sine"};
    check(sources.count(c.pde.source) > 0, "pde.source", "unknown source '" + c.pde.source + "'");
    check(c.pde.tol > 0.0, "pde.tol", "must be positive");
    check(c.pde.max_iter >= 1, "pde.max_iter", "must be positive");

    static const std::set<std::string> data{"sine", "cosine", "gaussian", "step"};
    check(data.count(c.transport.datum) > 0, "transport.datum", "unknown datum '" + c.transport.datum + "'");
    check(c.transport.test_radius > 0.0, "transport.test_radius", "must be positive");
    check(static_cast<int>(c.transport.test_center.size()) == c.grid.d, "transport.test_center",
          "needs grid.d components");
    check(c.transport.refinements >= 2 && c.transport.refinements <= 8, "transport.refinements", "must lie in 2..8");
    check(c.transport.alpha > 0.0 && c.transport.alpha < 1.0, "transport.alpha", "must lie in (0, 1)");
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

const char* to_string(ExperimentKind k) noexcept { return kKinds[static_cast<std::size_t>(k)].c_str(); }

const std::vector<std::string>& experiment_kinds() { return kKinds; }

ExperimentKind parse_kind(const std::string& name) {
    for (std::size_t i = 0; i < kKinds.size(); ++i)
        if (kKinds[i] == name) return static_cast<ExperimentKind>(i);
    throw ValidationError("experiment.kind", "unknown experiment kind '" + name + "'");
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorKind::Parse, std::string("config line ") + std::to_string(e.line()) + ": " + e.message());
    }
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Parse, "override '" + o + "' is not key=value");
        const std::string key = trim(o.substr(0, eq));
        if (key.find('.') == std::string::npos) throw ValidationError(key, "override key needs section.key");
        tree.put(pt::ptree::path_type(key, '.'), trim(o.substr(eq + 1)));
    }
    // Reject unknown sections and keys.
    std::map<std::string, std::string> kv;
    for (const auto& [section, body] : tree) {
        const auto known = kKeys.find(section);
        if (known == kKeys.end()) throw ValidationError(section, "unknown section");
        if (!body.data().empty() && body.empty()) throw ValidationError(section, "expected a section, found a value");
        for (const auto& [key, leaf] : body) {
            const std::string field = section + "." + key;
            if (!known->second.count(key)) throw ValidationError(field, "unknown key");
            kv[field] = leaf.data();
        }
    }
    auto has = [&](const char* f) { return kv.count(f) > 0; };
    auto num = [&](const char* f, double& dst) { if (has(f)) dst = to_number(f, kv[f]); };
    auto integer = [&](const char* f, int& dst) { if (has(f)) dst = to_int(f, kv[f]); };
    auto text_of = [&](const char* f, std::string& dst) { if (has(f)) dst = trim(kv[f]); };

    ExperimentConfig c;
    if (!has("experiment.kind")) throw ValidationError("experiment.kind", "missing");
    c.kind = parse_kind(trim(kv["experiment.kind"]));
    if (has("experiment.seed")) {
        const std::string s = trim(kv["experiment.seed"]);
        const auto r = std::from_chars(s.data(), s.data() + s.size(), c.seed);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
            throw ValidationError("experiment.seed", "'" + s + "' is not an unsigned 64-bit integer");
    }
    text_of("experiment.output", c.output);

    text_of("drift.family", c.drift.family);
    if (has("drift.value")) c.drift.value = to_list("drift.value", kv["drift.value"]);
    num("drift.rate", c.drift.rate);
    num("drift.alpha", c.drift.alpha);
    num("drift.C", c.drift.C);
    num("drift.r0", c.drift.r0);
    num("drift.strength", c.drift.strength);
    num("drift.mollify", c.drift.mollify);

    text_of("modulus.family", c.modulus.family);
    num("modulus.C", c.modulus.C);
    num("modulus.theta", c.modulus.theta);
    num("modulus.alpha", c.modulus.alpha);
    num("modulus.r0", c.modulus.r0);
    num("modulus.delta", c.modulus.delta);
    num("modulus.p", c.modulus.p);

    integer("grid.d", c.grid.d);
    num("grid.L", c.grid.L);
    integer("grid.n", c.grid.n);
    if (has("grid.periodic")) c.grid.periodic = to_bool("grid.periodic", kv["grid.periodic"]);

    num("time.s", c.time.s);
    num("time.T", c.time.T);
    num("time.dt", c.time.dt);
    num("time.master_dt", c.time.master_dt);

    integer("mc.M", c.mc.M);
    num("mc.p", c.mc.p);
    c.mc.separations = has("mc.separations") ? to_list("mc.separations", kv["mc.separations"]) : std::vector<double>{};
    if (!has("mc.separations"))
        for (int k = 3; k <= 10; ++k) c.mc.separations.push_back(std::ldexp(1.0, -k));
    if (has("mc.n_list")) c.mc.n_list = to_list("mc.n_list", kv["mc.n_list"]);
    integer("mc.lambda_k_max", c.mc.lambda_k_max);
    if (has("mc.points")) c.mc.points = to_points("mc.points", kv["mc.points"]);
    if (c.mc.points.empty()) c.mc.points.push_back(Vec::Zero(c.grid.d));
    text_of("mc.quantity", c.mc.quantity);
    text_of("mc.model", c.mc.model);
    if (has("mc.bootstrap")) c.mc.bootstrap = to_bool("mc.bootstrap", kv["mc.bootstrap"]);
    text_of("mc.record", c.mc.record);

    text_of("pde.source", c.pde.source);
    num("pde.tol", c.pde.tol);
    integer("pde.max_iter", c.pde.max_iter);

    text_of("transport.datum", c.transport.datum);
    num("transport.test_radius", c.transport.test_radius);
    if (has("transport.test_center")) c.transport.test_center = to_list("transport.test_center", kv["transport.test_center"]);
    else c.transport.test_center.assign(static_cast<std::size_t>(c.grid.d), 0.0);
    integer("transport.refinements", c.transport.refinements);
    num("transport.alpha", c.transport.alpha);

    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

std::map<std::string, std::string> ExperimentConfig::canonical() const {
    std::map<std::string, std::string> m;
    m["experiment.kind"] = to_string(kind);
    m["experiment.seed"] = std::to_string(seed);
    m["drift.family"] = drift.family;
    m["drift.value"] = join(drift.value);
    m["drift.rate"] = format_number(drift.rate);
    m["drift.alpha"] = format_number(drift.alpha);
    m["drift.C"] = format_number(drift.C);
    m["drift.r0"] = format_number(drift.r0);
    m["drift.strength"] = format_number(drift.strength);
    m["drift.mollify"] = format_number(drift.mollify);
    m["modulus.family"] = modulus.family;
    m["modulus.C"] = format_number(modulus.C);
    m["modulus.theta"] = format_number(modulus.theta);
    m["modulus.alpha"] = format_number(modulus.alpha);
    m["modulus.r0"] = format_number(modulus.r0);
    m["modulus.delta"] = format_number(modulus.delta);
    m["modulus.p"] = format_number(modulus.p);
    m["grid.d"] = std::to_string(grid.d);
    m["grid.L"] = format_number(grid.L);
    m["grid.n"] = std::to_string(grid.n);
    m["grid.periodic"] = grid.periodic ? "true" : "false";
    m["time.s"] = format_number(time.s);
    m["time.T"] = format_number(time.T);
    m["time.dt"] = format_number(time.dt);
    m["time.master_dt"] = format_number(time.master_dt);
    m["mc.M"] = std::to_string(mc.M);
    m["mc.p"] = format_number(mc.p);
    m["mc.separations"] = join(mc.separations);
    m["mc.n_list"] = join(mc.n_list);
    m["mc.lambda_k_max"] = std::to_string(mc.lambda_k_max);
    std::string pts;
    for (std::size_t i = 0; i < mc.points.size(); ++i)
        pts += (i ? "|" : "") + join(std::vector<double>(mc.points[i].data(), mc.points[i].data() + mc.points[i].size()));
    m["mc.points"] = pts;
    m["mc.quantity"] = mc.quantity;
    m["mc.model"] = mc.model;
    m["mc.bootstrap"] = mc.bootstrap ? "true" : "false";
    m["mc.record"] = mc.record;
    m["pde.source"] = pde.source;
    m["pde.tol"] = format_number(pde.tol);
    m["pde.max_iter"] = std::to_string(pde.max_iter);
    m["transport.datum"] = transport.datum;
    m["transport.test_radius"] = format_number(transport.test_radius);
    m["transport.test_center"] = join(transport.test_center);
    m["transport.refinements"] = std::to_string(transport.refinements);
    m["transport.alpha"] = format_number(transport.alpha);
    return m;
}

std::uint64_t ExperimentConfig::hash() const {
    std::string s;
    for (const auto& [k, v] : canonical()) s += k + "=" + v + "\n";
    return fnv1a(s);
}

std::string ExperimentConfig::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

std::string ExperimentConfig::output_dir() const {
    if (!output.empty()) return output;
    if (const char* env = std::getenv("STFLOW_OUTPUT_DIR"); env && *env) return env;
    return "stflow-out";
}

DriftSpec build_drift(const ExperimentConfig& cfg) {
    const DriftConfig& c = cfg.drift;
    const int d = cfg.grid.d;
    DriftSpec b;
    if (c.family == "zero") b = drifts::zero(d);
    else if (c.family == "constant") {
        Vec v(d);
        for (int i = 0; i < d; ++i) v(i) = c.value[static_cast<std::size_t>(i)];
        b = drifts::constant(v);
    } else if (c.family == "ou") b = drifts::ornstein_uhlenbeck(d, c.rate);
    else if (c.family == "tanh") b = drifts::tanh(d);
    else if (c.family == "sine") b = drifts::sine(d);
    else if (c.family == "rotation") b = drifts::rotation(c.strength);
    else if (c.family == "holder") b = drifts::holder(d, c.alpha);
    else if (c.family == "signed-power") b = drifts::signed_power(d, c.alpha);
    else if (c.family == "abs") b = drifts::abs(d);
    else if (c.family == "log-modulus") b = drifts::log_modulus(d, c.C, c.alpha, c.r0);
    else throw ValidationError("drift.family", "unknown drift family '" + c.family + "'");
    return c.mollify > 0.0 ? mollify_drift(b, c.mollify) : b;
}

Modulus build_modulus(const ModulusConfig& c) {
    if (c.family == "power-log") return Modulus::power_log(c.C, c.theta, c.alpha, c.r0);
    if (c.family == "inverse-log") return Modulus::inverse_log(c.C, c.alpha, c.r0);
    if (c.family == "linear") return Modulus::linear(c.C, c.r0);
    throw ValidationError("modulus.family", "unknown modulus family '" + c.family + "'");
}

}  // namespace stflow
