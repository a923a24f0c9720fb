#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "interpkit/errors.hpp"
#include "interpkit/version.hpp"
#include "run_config.hpp"

namespace interpkit::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

json num(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json vec(const Vec& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(num(v[i]));
    return a;
}

json header(const RunConfig& cfg, const std::string& command)
{
    return json{{"command", command}, {"version", std::string(version)}, {"config", cfg.echo()}};
}

void write_file(const fs::path& dir, const std::string& name, const std::string& text)
{
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + p.string());
    std::cerr << "wrote " << p.string() << "\n";
}

void write_json(const RunConfig& cfg, const std::string& name, const json& j)
{
    if (cfg.wants("json"))
        write_file(cfg.output_dir(), name, j.dump(2) + "\n");
}

// "# key: value" lines so a CSV on its own still says how it was made
std::string csv_preamble(const RunConfig& cfg, const std::string& command)
{
    std::ostringstream os;
    os << "# interpkit " << version << " " << command << "\n";
    os << "# config " << cfg.echo().dump() << "\n";
    return os.str();
}

int cmd_weight(const RunConfig& cfg)
{
    const LogGrid grid = cfg.grid();
    const WeightFamily w = cfg.weight();
    const Tail tail = cfg.tail();
    const double burn = cfg.burn_in();
    const WeightProfile p = profile(w, grid, burn, tail);
    std::optional<GridFunction> gw;
    if (grid.unit_index())
        gw = g_transform(p.w);

    json j = header(cfg, "weight");
    j["weight"] = w.name();
    j["tail"] = tail == Tail::Auto ? "auto" : "extension";
    j["w_norm"] = num(p.w_norm);
    j["w1_seminorm"] = num(p.w1_seminorm);
    const L3Split split = decompose_l3(w, grid, tail);
    j["decomposition"] = {{"bounded_part_sup", num(sup_abs(split.bounded_part, grid.burn_in_index(burn)))},
                          {"w1_part_seminorm", num(w1_seminorm(split.w1_part, burn))}};
    write_json(cfg, "weight.json", j);

    if (cfg.wants("csv")) {
        std::ostringstream os;
        os.precision(17);
        os << csv_preamble(cfg, "weight") << "t,w,Pw,sharp,Gw\n";
        for (std::size_t k = 0; k < grid.size(); ++k) {
            os << grid[k] << ',' << p.w[k] << ',' << p.pw[k] << ',' << p.sharp[k] << ',';
            if (gw)
                os << (*gw)[k];
            os << '\n';
        }
        write_file(cfg.output_dir(), "weight.csv", os.str());
    }
    std::cout << "w_norm " << p.w_norm << "\nw1_seminorm " << p.w1_seminorm << "\n";
    return Pass;
}

int cmd_jnorm(const RunConfig& cfg)
{
    const LogGrid grid = cfg.grid();
    const ThetaQ tq = cfg.tq();
    const CouplePair pair = cfg.pair();
    const Vec f = cfg.input_f();
    if (std::size_t(f.size()) != pair.dim())
        throw ConfigError("[input] f: length does not match the pair dimension");
    const SolverOptions opts = cfg.solver();
    std::vector<JMethod> methods = cfg.methods();
    const bool all = methods.empty();
    if (all)
        methods = {JMethod::Solver, JMethod::Fundamental, JMethod::Oracle};

    json j = header(cfg, "jnorm");
    json results = json::object();
    std::optional<Representation> primary;
    for (JMethod m : methods) {
        json r;
        try {
            const JNormResult res = jnorm(f, pair, tq, grid, m, opts);
            r["value"] = num(res.value);
            r["representation_cost"] = num(res.rep.cost(tq));
            r["reconstruction_error"] = num(res.rep.reconstruction_error());
            if (m != JMethod::Fundamental) {
                r["lower_bound"] = num(res.lower_bound);
                r["iterations"] = res.iterations;
                r["converged"] = res.converged;
                r["certified"] = res.rep.cost(tq) <= selector_factor * res.lower_bound || res.value == 0.0;
            }
            if (!primary)
                primary = res.rep;
            std::cout << to_string(m) << " " << res.value << "\n";
        } catch (const Unsupported& e) {
            // explicit requests fail loudly; "all" records the refusal
            if (!all)
                throw;
            r["refused"] = e.what();
        }
        results[to_string(m)] = r;
    }
    j["results"] = results;
    write_json(cfg, "jnorm.json", j);

    if (primary && cfg.wants("csv")) {
        const GridFunction jp = primary->j_profile();
        std::ostringstream os;
        os.precision(17);
        os << csv_preamble(cfg, "jnorm") << "t";
        for (std::size_t i = 0; i < pair.dim(); ++i)
            os << ",u" << i;
        os << ",J\n";
        for (std::size_t k = 0; k < grid.size(); ++k) {
            os << grid[k];
            for (Eigen::Index i = 0; i < primary->u().cols(); ++i)
                os << ',' << primary->u()(Eigen::Index(k), i);
            os << ',' << jp[k] << '\n';
        }
        write_file(cfg.output_dir(), "jnorm.csv", os.str());
    }
    return Pass;
}

int cmd_commute(const RunConfig& cfg)
{
    const LogGrid grid = cfg.grid();
    const ThetaQ tq = cfg.tq();
    const CouplePair src = cfg.pair(), dst = cfg.dst_pair();
    const PairOperator T = cfg.make_operator(src, dst);
    const Vec f = cfg.input_f();
    if (std::size_t(f.size()) != src.dim())
        throw ConfigError("[input] f: length does not match the source pair dimension");
    const int n = cfg.order();
    const WeightFamily w = cfg.weight();
    const SolverOptions opts = cfg.solver();
    const Selector sel(grid, tq, opts);
    const GridFunction W = w.on(grid);

    const Vec C = higher_commutator(T, W, f, n, sel);
    const double cn = jnorm(C, dst, tq, grid, JMethod::Solver, opts).value;
    const double fn = sel(f, src)->cost(tq);
    const double wn = w_norm(w, grid, cfg.burn_in(), cfg.tail());
    const double den = T.pair_norm * std::pow(wn, n) * fn;

    json j = header(cfg, "commute");
    j["order"] = n;
    j["commutator"] = vec(C);
    j["commutator_norm"] = num(cn);
    j["f_norm"] = num(fn);
    j["pair_norm"] = num(T.pair_norm);
    j["w_norm"] = num(wn);
    j["ratio"] = den > 1e-12 ? num(cn / den) : json(nullptr);
    if (n == 1) {
        const GoodRepresentation g = good_representation(T, W, f, sel);
        j["good_representation"] = {{"cost", num(g.v.cost(tq))},
                                    {"residual", vec(g.residual)},
                                    {"difference_integral", vec(integrate_haar(grid, g.diff))}};
    }
    write_json(cfg, "commute.json", j);
    std::cout << "commutator_norm " << cn << "\n";
    if (den > 1e-12)
        std::cout << "ratio " << cn / den << "\n";
    return Pass;
}

int cmd_verify(const RunConfig& cfg, const std::string& suite)
{
    const EnsembleConfig e = cfg.ensemble();
    VerificationReport rep;
    if (suite == "t1") {
        rep = verify_t1(e);
    } else if (suite == "teoA") {
        rep = verify_teoA(e);
    } else if (suite == "higher") {
        rep = verify_higher(e, cfg.has("harness", "order") ? cfg.order() : 2);
    } else if (suite == "probe") {
        std::vector<LogGrid> grids;
        for (const auto& g : e.ladder)
            grids.push_back(g.make());
        const std::vector<double> qs = e.q_values.empty() ? std::vector<double>{e.tq.q} : e.q_values;
        rep.suite = "probe";
        for (double q : qs) {
            const ThetaQ tq = std::isinf(q) ? ThetaQ::make_inf(e.tq.theta) : ThetaQ::make(e.tq.theta, q);
            VerificationReport r = probe_unboundedness(grids, e.weights.front(), tq, e.solver, e.growth_factor);
            rep.trials.insert(rep.trials.end(), r.trials.begin(), r.trials.end());
            rep.groups.insert(rep.groups.end(), r.groups.begin(), r.groups.end());
            rep.checks.insert(rep.checks.end(), r.checks.begin(), r.checks.end());
            for (auto it = r.diagnostics.begin(); it != r.diagnostics.end(); ++it)
                rep.diagnostics[it.key()] = it.value();
            rep.max_ratio = std::max(rep.max_ratio, r.max_ratio);
            rep.degenerate_count += r.degenerate_count;
            rep.wall_seconds += r.wall_seconds;
        }
        rep.config = to_json(e);
        rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const Check& c) { return c.pass; });
    } else {
        throw ConfigError("unknown suite '" + suite + "' (expected t1, teoA, higher or probe)");
    }

    json j = rep.to_json();
    j["command"] = "verify";
    j["run_config"] = cfg.echo();
    write_json(cfg, "verify_" + suite + ".json", j);
    if (cfg.wants("csv"))
        write_file(cfg.output_dir(), "verify_" + suite + ".csv", csv_preamble(cfg, "verify " + suite) + rep.to_csv());

    for (const auto& c : rep.checks)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  value " << c.value << "  limit " << c.limit << "\n";
    std::cout << suite << (rep.pass ? " passed" : " FAILED") << ", max ratio " << rep.max_ratio << ", degenerate "
              << rep.degenerate_count << "\n";
    std::cerr << "wall time " << rep.wall_seconds << " s\n";
    return rep.pass ? Pass : AssertionFailed;
}

} // namespace

int run(int argc, char** argv)
{
    CLI::App app{"interpkit: J-method norms, Omega commutators and their verification suites"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);
    std::string path, suite;
    auto* weight = app.add_subcommand("weight", "W-norm analysis of a weight on a grid");
    weight->add_option("config", path, "run config")->required();
    auto* jn = app.add_subcommand("jnorm", "J-method norm of [input] f");
    jn->add_option("config", path, "run config")->required();
    auto* com = app.add_subcommand("commute", "one-shot commutator C_n f");
    com->add_option("config", path, "run config")->required();
    auto* ver = app.add_subcommand("verify", "run a verification suite");
    ver->add_option("suite", suite, "t1 | teoA | higher | probe")->required();
    ver->add_option("config", path, "run config")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Pass : ConfigFailure;
    }

    try {
        const RunConfig cfg = RunConfig::load(path);
        (void)cfg.wants("json");   // validates [output] formats up front
        if (*weight)
            return cmd_weight(cfg);
        if (*jn)
            return cmd_jnorm(cfg);
        if (*com)
            return cmd_commute(cfg);
        return cmd_verify(cfg, suite);
    } catch (const ConfigError& e) {
        std::cerr << "interpkit: config error: " << e.what() << "\n";
        return ConfigFailure;
    } catch (const InvalidArgument& e) {
        std::cerr << "interpkit: invalid input: " << e.what() << "\n";
        return ConfigFailure;
    } catch (const CertificationError& e) {
        std::cerr << "interpkit: certification failed: " << e.what() << "\n";
        return NumericalFailure;
    } catch (const Unsupported& e) {
        std::cerr << "interpkit: refused: " << e.what() << "\n";
        return NumericalFailure;
    } catch (const NumericalError& e) {
        std::cerr << "interpkit: numerical failure: " << e.what() << "\n";
        return NumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "interpkit: " << e.what() << "\n";
        return NumericalFailure;
    }
}

} // namespace interpkit::cli
