#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "interpkit/errors.hpp"

namespace interpkit::cli {

namespace {

using boost::property_tree::ptree;

const std::map<std::string, std::set<std::string>>& grammar()
{
    static const std::map<std::string, std::set<std::string>> g{
        {"grid", {"t_min", "t_max", "n_nodes", "step"}},
        {"tq", {"theta", "q"}},
        {"weight", {"kind", "c", "n", "x", "y", "tail", "burn_in"}},
        {"pair", {"preset", "a", "b", "kind0", "scale0", "kind1", "scale1"}},
        {"pair.dst", {"preset", "a", "b", "kind0", "scale0", "kind1", "scale1"}},
        {"operator", {"law", "matrix", "seed"}},
        {"input", {"f", "method", "order"}},
        {"harness",
         {"seed", "trials", "ladder", "q_values", "weights", "bumps", "threads", "order", "stability_factor",
          "growth_factor", "degenerate_below"}},
        {"solver", {"max_iterations", "tolerance", "exec"}},
        {"output", {"dir", "formats"}},
    };
    return g;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s, const std::string& seps = " \t,")
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (seps.find(c) != std::string::npos) {
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& v)
{
    if (s == "inf" || s == "+inf" || s == "infinity") {
        v = std::numeric_limits<double>::infinity();
        return true;
    }
    const char* b = s.data();
    const char* e = b + s.size();
    const auto r = std::from_chars(b, e, v);
    return r.ec == std::errc() && r.ptr == e;
}

std::string where(const std::string& section, const std::string& key)
{
    return "[" + section + "] " + key;
}

NormSpec norm_spec(const std::string& kind, const std::vector<double>& scale, const std::string& ctx)
{
    Vec s(Eigen::Index(scale.size()));
    for (std::size_t i = 0; i < scale.size(); ++i)
        s[Eigen::Index(i)] = scale[i];
    if (kind == "l1")
        return NormSpec(NormKind::L1, s);
    if (kind == "linf")
        return NormSpec(NormKind::Linf, s);
    throw ConfigError(ctx + ": norm kind must be l1 or linf, got '" + kind + "'");
}

WeightFamily weight_from_token(const std::string& token)
{
    const auto colon = token.find(':');
    const std::string name = token.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : token.substr(colon + 1);
    double p = 0.0;
    if (!arg.empty() && !parse_double(arg, p))
        throw ConfigError("[harness] weights: bad parameter in '" + token + "'");
    if (name == "log")
        return WeightFamily::log();
    if (name == "sin_log")
        return WeightFamily::sin_log();
    if (name == "constant")
        return WeightFamily::constant(arg.empty() ? 1.0 : p);
    if (name == "power_log") {
        if (arg.empty() || p != std::floor(p))
            throw ConfigError("[harness] weights: power_log needs an integer exponent, e.g. power_log:2");
        return WeightFamily::power_log(int(p));
    }
    throw ConfigError("[harness] weights: unknown weight '" + name + "'");
}

} // namespace

RunConfig RunConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    return parse(in);
}

RunConfig RunConfig::parse(std::istream& in)
{
    RunConfig c;
    try {
        boost::property_tree::read_ini(in, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    const auto& g = grammar();
    for (const auto& [name, sec] : c.tree_) {
        const auto it = g.find(name);
        if (it == g.end()) {
            if (sec.empty())
                throw ConfigError("key '" + name + "' outside any section");
            throw ConfigError("unknown section [" + name + "]");
        }
        for (const auto& [key, value] : sec) {
            if (!it->second.count(key))
                throw ConfigError("unknown key " + where(name, key));
            if (!value.empty())
                throw ConfigError("nested value under " + where(name, key));
        }
    }
    return c;
}

const ptree* RunConfig::section(const std::string& name) const
{
    // section names may contain dots, so no path lookup
    const auto it = tree_.find(name);
    return it == tree_.not_found() ? nullptr : &it->second;
}

bool RunConfig::has_section(const std::string& name) const
{
    return section(name) != nullptr;
}

bool RunConfig::has(const std::string& sec, const std::string& key) const
{
    return raw(sec, key).has_value();
}

std::optional<std::string> RunConfig::raw(const std::string& sec, const std::string& key) const
{
    const ptree* s = section(sec);
    if (!s)
        return std::nullopt;
    const auto it = s->find(key);
    if (it == s->not_found())
        return std::nullopt;
    return trim(it->second.data());
}

std::string RunConfig::str(const std::string& sec, const std::string& key) const
{
    const auto v = raw(sec, key);
    if (!v)
        throw ConfigError("missing " + where(sec, key));
    return *v;
}

double RunConfig::num(const std::string& sec, const std::string& key) const
{
    const std::string s = str(sec, key);
    double v = 0.0;
    if (!parse_double(s, v))
        throw ConfigError(where(sec, key) + ": not a number: '" + s + "'");
    return v;
}

double RunConfig::num_or(const std::string& sec, const std::string& key, double fallback) const
{
    return has(sec, key) ? num(sec, key) : fallback;
}

long RunConfig::integer(const std::string& sec, const std::string& key) const
{
    const std::string s = str(sec, key);
    long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError(where(sec, key) + ": not an integer: '" + s + "'");
    return v;
}

std::vector<double> RunConfig::list(const std::string& sec, const std::string& key) const
{
    std::vector<double> out;
    for (const auto& t : tokens(str(sec, key))) {
        double v = 0.0;
        if (!parse_double(t, v))
            throw ConfigError(where(sec, key) + ": not a number: '" + t + "'");
        out.push_back(v);
    }
    return out;
}

nlohmann::json RunConfig::echo() const
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, sec] : tree_) {
        nlohmann::json s = nlohmann::json::object();
        for (const auto& [key, value] : sec)
            s[key] = trim(value.data());
        j[name] = s;
    }
    return j;
}

LogGrid RunConfig::grid() const
{
    if (!has_section("grid"))
        throw ConfigError("missing section [grid]");
    const double a = num("grid", "t_min"), b = num("grid", "t_max");
    if (has("grid", "n_nodes") == has("grid", "step"))
        throw ConfigError("[grid] needs exactly one of n_nodes, step");
    try {
        if (has("grid", "step"))
            return make_grid_with_step(a, b, num("grid", "step"));
        const long n = integer("grid", "n_nodes");
        if (n < 2)
            throw ConfigError("[grid] n_nodes: must be >= 2");
        return make_grid(a, b, std::size_t(n));
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("[grid]: ") + e.what());
    }
}

ThetaQ RunConfig::tq() const
{
    const double theta = num_or("tq", "theta", 0.5);
    const double q = num_or("tq", "q", 2.0);
    try {
        return std::isinf(q) ? ThetaQ::make_inf(theta) : ThetaQ::make(theta, q);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("[tq]: ") + e.what());
    }
}

WeightFamily RunConfig::weight() const
{
    const std::string kind = has("weight", "kind") ? str("weight", "kind") : "log";
    try {
        if (kind == "log")
            return WeightFamily::log();
        if (kind == "sin_log")
            return WeightFamily::sin_log();
        if (kind == "constant")
            return WeightFamily::constant(num_or("weight", "c", 1.0));
        if (kind == "power_log") {
            const long n = integer("weight", "n");
            return WeightFamily::power_log(int(n));
        }
        if (kind == "piecewise")
            return WeightFamily::phi_log_piecewise(list("weight", "x"), list("weight", "y"));
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("[weight]: ") + e.what());
    }
    throw ConfigError("[weight] kind: unknown weight '" + kind + "'");
}

Tail RunConfig::tail() const
{
    if (!has("weight", "tail"))
        return Tail::Auto;
    const std::string t = str("weight", "tail");
    if (t == "auto")
        return Tail::Auto;
    if (t == "extension")
        return Tail::Extension;
    throw ConfigError("[weight] tail: expected auto or extension, got '" + t + "'");
}

double RunConfig::burn_in() const
{
    const double b = num_or("weight", "burn_in", default_burn_in);
    if (!(b >= 1.0))
        throw ConfigError("[weight] burn_in: must be >= 1");
    return b;
}

CouplePair RunConfig::pair(const std::string& sec) const
{
    if (!has_section(sec))
        throw ConfigError("missing section [" + sec + "]");
    try {
        if (has(sec, "preset")) {
            const std::string p = str(sec, "preset");
            if (p == "scalar")
                return CouplePair::scalar(has(sec, "a") ? num(sec, "a") : 1.0, has(sec, "b") ? num(sec, "b") : 1.0);
            if (p == "diagonal_l1") {
                const auto a = list(sec, "a"), b = list(sec, "b");
                return CouplePair(norm_spec("l1", a, where(sec, "a")), norm_spec("l1", b, where(sec, "b")));
            }
            throw ConfigError(where(sec, "preset") + ": expected scalar or diagonal_l1, got '" + p + "'");
        }
        return CouplePair(norm_spec(str(sec, "kind0"), list(sec, "scale0"), where(sec, "kind0")),
                          norm_spec(str(sec, "kind1"), list(sec, "scale1"), where(sec, "kind1")));
    } catch (const InvalidArgument& e) {
        throw ConfigError("[" + sec + "]: " + e.what());
    }
}

CouplePair RunConfig::dst_pair() const
{
    return has_section("pair.dst") ? pair("pair.dst") : pair("pair");
}

OperatorLaw RunConfig::operator_law() const
{
    const std::string law = has("operator", "law") ? str("operator", "law") : "random";
    if (law == "random")
        return OperatorLaw::Random;
    if (law == "identity")
        return OperatorLaw::Identity;
    if (law == "matrix")
        return OperatorLaw::Fixed;
    throw ConfigError("[operator] law: expected random, identity or matrix, got '" + law + "'");
}

namespace {

Mat parse_matrix(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    for (const auto& r : tokens(text, "|")) {
        std::vector<double> row;
        for (const auto& t : tokens(r)) {
            double v = 0.0;
            if (!parse_double(t, v))
                throw ConfigError("[operator] matrix: not a number: '" + t + "'");
            row.push_back(v);
        }
        if (!row.empty())
            rows.push_back(row);
    }
    if (rows.empty())
        throw ConfigError("[operator] matrix: empty");
    Mat m(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw ConfigError("[operator] matrix: ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
    }
    return m;
}

} // namespace

PairOperator RunConfig::make_operator(const CouplePair& src, const CouplePair& dst) const
{
    const Eigen::Index rows = Eigen::Index(dst.dim()), cols = Eigen::Index(src.dim());
    try {
        switch (operator_law()) {
        case OperatorLaw::Identity:
            if (rows != cols)
                throw ConfigError("[operator] law: identity needs equal pair dimensions");
            return operator_pair_norm(Mat::Identity(rows, cols), src, dst);
        case OperatorLaw::Fixed:
            return operator_pair_norm(parse_matrix(str("operator", "matrix")), src, dst);
        case OperatorLaw::Random: {
            std::mt19937_64 rng(std::uint64_t(has("operator", "seed") ? integer("operator", "seed") : 1));
            std::normal_distribution<double> N;
            Mat T(rows, cols);
            for (Eigen::Index j = 0; j < cols; ++j)
                for (Eigen::Index i = 0; i < rows; ++i)
                    T(i, j) = N(rng);
            const PairOperator raw = operator_pair_norm(T, src, dst);
            return operator_pair_norm(T / raw.pair_norm, src, dst);
        }
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("[operator]: ") + e.what());
    }
    throw ConfigError("[operator]: unreachable");
}

Vec RunConfig::input_f() const
{
    const auto v = list("input", "f");
    Vec f(Eigen::Index(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]))
            throw ConfigError("[input] f: entries must be finite");
        f[Eigen::Index(i)] = v[i];
    }
    return f;
}

std::vector<JMethod> RunConfig::methods() const
{
    const std::string m = has("input", "method") ? str("input", "method") : "solver";
    if (m == "solver")
        return {JMethod::Solver};
    if (m == "fundamental")
        return {JMethod::Fundamental};
    if (m == "oracle")
        return {JMethod::Oracle};
    if (m == "all")
        return {};
    throw ConfigError("[input] method: expected solver, fundamental, oracle or all, got '" + m + "'");
}

int RunConfig::order() const
{
    const char* sec = has("input", "order") ? "input" : "harness";
    if (!has(sec, "order"))
        return 1;
    const long n = integer(sec, "order");
    if (n < 0 || n > 8)
        throw ConfigError(where(sec, "order") + ": must be in 0..8");
    return int(n);
}

SolverOptions RunConfig::solver() const
{
    SolverOptions o;
    if (has("solver", "max_iterations")) {
        const long it = integer("solver", "max_iterations");
        if (it < 1)
            throw ConfigError("[solver] max_iterations: must be >= 1");
        o.max_iterations = int(it);
    }
    o.tolerance = num_or("solver", "tolerance", o.tolerance);
    if (!(o.tolerance > 0.0 && o.tolerance < 1.0))
        throw ConfigError("[solver] tolerance: must be in (0, 1)");
    if (has("solver", "exec")) {
        const std::string e = str("solver", "exec");
        if (e == "serial")
            o.exec = Exec::Serial;
        else if (e == "parallel")
            o.exec = Exec::Parallel;
        else
            throw ConfigError("[solver] exec: expected serial or parallel, got '" + e + "'");
    }
    return o;
}

EnsembleConfig RunConfig::ensemble() const
{
    EnsembleConfig e;
    auto count = [&](const char* key, long lo) {
        const long v = integer("harness", key);
        if (v < lo)
            throw ConfigError(where("harness", key) + ": must be >= " + std::to_string(lo));
        return v;
    };
    if (has("harness", "seed")) {
        const std::string s = str("harness", "seed");
        std::uint64_t v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw ConfigError("[harness] seed: not an unsigned integer: '" + s + "'");
        e.seed = v;
    }
    if (has("harness", "trials"))
        e.trials = int(count("trials", 1));
    if (has("harness", "bumps"))
        e.bumps = int(count("bumps", 1));
    if (has("harness", "threads"))
        e.threads = int(count("threads", 0));
    if (has("harness", "ladder")) {
        e.ladder.clear();
        for (const auto& rung : tokens(str("harness", "ladder"), ",")) {
            const auto parts = tokens(rung, ": \t");
            double a = 0, b = 0, n = 0;
            if (parts.size() != 3 || !parse_double(parts[0], a) || !parse_double(parts[1], b) ||
                !parse_double(parts[2], n) || n != std::floor(n) || n < 2)
                throw ConfigError("[harness] ladder: expected t_min:t_max:n_nodes, got '" + trim(rung) + "'");
            e.ladder.push_back(GridSpec{a, b, std::size_t(n)});
        }
    }
    e.tq = tq();
    if (has("harness", "q_values"))
        e.q_values = list("harness", "q_values");
    if (has("harness", "weights")) {
        e.weights.clear();
        for (const auto& t : tokens(str("harness", "weights")))
            e.weights.push_back(weight_from_token(t));
    } else if (has_section("weight")) {
        e.weights = {weight()};
    }
    e.burn_in = burn_in();
    e.stability_factor = num_or("harness", "stability_factor", e.stability_factor);
    e.growth_factor = num_or("harness", "growth_factor", e.growth_factor);
    e.degenerate_below = num_or("harness", "degenerate_below", e.degenerate_below);
    if (has_section("pair"))
        e.src = pair("pair");
    if (has_section("pair.dst"))
        e.dst = pair("pair.dst");
    if (has_section("operator")) {
        e.op_law = operator_law();
        if (e.op_law == OperatorLaw::Fixed)
            e.op_matrix = parse_matrix(str("operator", "matrix"));
    }
    e.solver = solver();
    try {
        e.validate();
    } catch (const InvalidArgument& x) {
        throw ConfigError(std::string("[harness]: ") + x.what());
    }
    return e;
}

std::filesystem::path RunConfig::output_dir() const
{
    if (const char* env = std::getenv("INTERPKIT_OUTPUT_DIR"); env && *env)
        return env;
    return has("output", "dir") ? std::filesystem::path(str("output", "dir")) : std::filesystem::path(".");
}

bool RunConfig::wants(const std::string& format) const
{
    if (!has("output", "formats"))
        return true;
    const auto f = tokens(str("output", "formats"));
    for (const auto& x : f)
        if (x != "json" && x != "csv")
            throw ConfigError("[output] formats: unknown format '" + x + "'");
    return std::find(f.begin(), f.end(), format) != f.end();
}

} // namespace interpkit::cli
