#include "interpkit/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "interpkit/errors.hpp"
#include "interpkit/version.hpp"

namespace interpkit {

namespace {

using json = nlohmann::json;
using Rng = std::mt19937_64;
using Clock = std::chrono::steady_clock;

std::string grid_label(const LogGrid& g)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "[%.0e,%.0e]", g.t_min(), g.t_max());
    return buf;
}

std::string join(std::initializer_list<std::string> parts)
{
    std::string s;
    for (const auto& p : parts) {
        if (!s.empty())
            s += '/';
        s += p;
    }
    return s;
}

json pair_json(const CouplePair& p)
{
    auto norm = [](const NormSpec& n) {
        return json{{"kind", to_string(n.kind)}, {"scale", std::vector<double>(n.scale.data(), n.scale.data() + n.scale.size())}};
    };
    return json{{"norm0", norm(p.norm0)}, {"norm1", norm(p.norm1)}};
}

json q_json(double q)
{
    if (std::isinf(q))
        return "inf";
    return q;
}

std::vector<LogGrid> make_grids(const EnsembleConfig& cfg)
{
    std::vector<LogGrid> g;
    for (const auto& s : cfg.ladder)
        g.push_back(s.make());
    return g;
}

std::vector<double> q_list(const EnsembleConfig& cfg)
{
    return cfg.q_values.empty() ? std::vector<double>{cfg.tq.q} : cfg.q_values;
}

ThetaQ with_q(const ThetaQ& tq, double q)
{
    return std::isinf(q) ? ThetaQ::make_inf(tq.theta) : ThetaQ::make(tq.theta, q);
}

TrialRecord record(const std::string& group, int trial, double num, double den, double degenerate_below)
{
    TrialRecord r;
    r.group = group;
    r.trial = trial;
    r.numerator = num;
    r.denominator = den;
    if (!(den >= degenerate_below)) {
        r.degenerate = true;
        r.note = "denominator below threshold";
    } else {
        r.ratio = num / den;
    }
    return r;
}

// Runs body(trial) for every trial, possibly concurrently; results are kept
// in trial order.
void run_trials(int trials, int threads, const std::function<std::vector<TrialRecord>(int)>& body,
                std::vector<TrialRecord>& out)
{
    std::vector<std::vector<TrialRecord>> slots(static_cast<std::size_t>(trials));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(trials));
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
    for (int i = 0; i < trials; ++i) {
        try {
            slots[std::size_t(i)] = body(i);
        } catch (...) {
            errors[std::size_t(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    for (auto& s : slots)
        for (auto& r : s)
            out.push_back(std::move(r));
}

void add_bump(NodeField& u, const LogGrid& grid, Eigen::Index col, double center, double amp)
{
    for (std::size_t k = 0; k < grid.quadrature_size(); ++k) {
        const double x = std::log(grid[k]) - center;
        u(Eigen::Index(k), col) += amp * std::exp(-0.5 * x * x);
    }
}

// count bumps, coordinate and center uniform, amplitude N(0,1). The number
// of draws does not depend on the grid, so one seed gives the same law on
// every grid of a ladder.
NodeField random_bumps(const LogGrid& grid, std::size_t dim, int count, double lo, double hi, Rng& rng)
{
    std::uniform_int_distribution<std::size_t> coord(0, dim - 1);
    std::uniform_real_distribution<double> center(lo, hi);
    std::normal_distribution<double> amp;
    NodeField u = NodeField::Zero(Eigen::Index(grid.size()), Eigen::Index(dim));
    for (int b = 0; b < count; ++b) {
        const std::size_t i = coord(rng);
        const double c = center(rng);
        const double a = amp(rng);
        add_bump(u, grid, Eigen::Index(i), c, a);
    }
    return u;
}

Vec random_vector(std::size_t d, Rng& rng)
{
    std::normal_distribution<double> N;
    Vec v(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = N(rng);
    return v;
}

PairOperator draw_operator(const EnsembleConfig& cfg, const CouplePair& src, const CouplePair& dst, Rng& rng)
{
    const Eigen::Index rows = Eigen::Index(dst.dim()), cols = Eigen::Index(src.dim());
    switch (cfg.op_law) {
    case OperatorLaw::Identity:
        if (rows != cols)
            throw InvalidArgument("identity operator needs equal source and destination dimensions");
        return operator_pair_norm(Mat::Identity(rows, cols), src, dst);
    case OperatorLaw::Fixed:
        if (cfg.op_matrix.rows() != rows || cfg.op_matrix.cols() != cols)
            throw InvalidArgument("operator matrix does not match the pairs");
        return operator_pair_norm(cfg.op_matrix, src, dst);
    case OperatorLaw::Random:
        break;
    }
    std::normal_distribution<double> N;
    Mat T(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            T(i, j) = N(rng);
    const PairOperator raw = operator_pair_norm(T, src, dst);
    if (!(raw.pair_norm > 0.0))
        throw NumericalError("random operator with zero pair norm");
    return operator_pair_norm(T / raw.pair_norm, src, dst);
}

CouplePair default_src()
{
    Vec a = Vec::Ones(3), b(3);
    b << 1.0 / 16.0, 1.0, 16.0;
    return CouplePair::diagonal_l1(a, b);
}

CouplePair default_dst()
{
    Vec a = Vec::Ones(3), b(3);
    b << 0.25, 2.0, 8.0;
    return CouplePair::diagonal_l1(a, b);
}

CouplePair src_of(const EnsembleConfig& cfg)
{
    return cfg.src ? *cfg.src : default_src();
}

CouplePair dst_of(const EnsembleConfig& cfg)
{
    if (cfg.dst)
        return *cfg.dst;
    if (cfg.op_law == OperatorLaw::Identity)
        return src_of(cfg);
    return default_dst();
}

double group_max(const std::vector<TrialRecord>& recs, const std::string& group)
{
    double m = 0.0;
    for (const auto& r : recs)
        if (r.group == group && !r.degenerate)
            m = std::max(m, r.ratio);
    return m;
}

bool group_has_data(const std::vector<TrialRecord>& recs, const std::string& group)
{
    for (const auto& r : recs)
        if (r.group == group && !r.degenerate)
            return true;
    return false;
}

// max/min of the group maxima along the ladder; all-zero maxima count as
// stable (nothing to compare)
Check stability_check(const std::string& name, const std::vector<TrialRecord>& recs,
                      const std::vector<std::string>& groups, double factor)
{
    Check c;
    c.name = name;
    c.limit = factor;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::ostringstream detail;
    for (const auto& g : groups) {
        if (!group_has_data(recs, g)) {
            c.pass = false;
            c.value = std::numeric_limits<double>::infinity();
            c.detail = "no non-degenerate trials in " + g;
            return c;
        }
        const double m = group_max(recs, g);
        detail << g << " max " << m << "; ";
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    if (hi == 0.0)
        c.value = 1.0;
    else if (lo == 0.0)
        c.value = std::numeric_limits<double>::infinity();
    else
        c.value = hi / lo;
    c.pass = std::isfinite(hi) && c.value <= factor;
    c.detail = detail.str();
    return c;
}

Check growth_check(const std::string& name, double first, double last, double factor)
{
    Check c;
    c.name = name;
    c.limit = factor;
    c.value = first > 0.0 ? last / first : std::numeric_limits<double>::infinity();
    c.pass = std::isfinite(c.value) && c.value >= factor;
    std::ostringstream d;
    d << "narrowest " << first << ", widest " << last;
    c.detail = d.str();
    return c;
}

Check finite_check(const std::string& name, const std::vector<TrialRecord>& recs)
{
    Check c;
    c.name = name;
    c.pass = true;
    int bad = 0;
    for (const auto& r : recs)
        if (!r.degenerate && !std::isfinite(r.ratio))
            ++bad;
    c.value = bad;
    c.limit = 0;
    c.pass = bad == 0;
    c.detail = std::to_string(bad) + " non-finite ratios";
    return c;
}

Check bound_check(const std::string& name, double value, double limit)
{
    Check c;
    c.name = name;
    c.value = value;
    c.limit = limit;
    c.pass = value <= limit;
    return c;
}

// Groups that measure a contrast (uncancelled ratios, the unboundedness
// probe inside another suite) and so must not feed the constant estimate.
bool contrast_group(const std::string& suite, const std::string& group)
{
    if (group.find("/plain/") != std::string::npos)
        return true;
    return suite != "probe" && group.rfind("probe/", 0) == 0;
}

void finalize(VerificationReport& rep)
{
    std::vector<std::string> order;
    for (const auto& r : rep.trials)
        if (std::find(order.begin(), order.end(), r.group) == order.end())
            order.push_back(r.group);
    rep.groups.clear();
    rep.max_ratio = 0.0;
    rep.degenerate_count = 0;
    for (const auto& g : order) {
        GroupSummary s;
        s.group = g;
        for (const auto& r : rep.trials) {
            if (r.group != g)
                continue;
            ++s.trials;
            if (r.degenerate) {
                ++s.degenerate;
            } else if (s.argmax_trial < 0 || r.ratio > s.max_ratio) {
                s.max_ratio = r.ratio;
                s.argmax_trial = r.trial;
            }
        }
        rep.degenerate_count += s.degenerate;
        if (!contrast_group(rep.suite, g))
            rep.max_ratio = std::max(rep.max_ratio, s.max_ratio);
        rep.groups.push_back(std::move(s));
    }
    rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const Check& c) { return c.pass; });
}

void merge(VerificationReport& into, const VerificationReport& from)
{
    into.trials.insert(into.trials.end(), from.trials.begin(), from.trials.end());
    into.checks.insert(into.checks.end(), from.checks.begin(), from.checks.end());
    for (auto it = from.diagnostics.begin(); it != from.diagnostics.end(); ++it)
        into.diagnostics[it.key()] = it.value();
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double jnorm_value(const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid,
                   const SolverOptions& opts)
{
    return jnorm(f, pair, tq, grid, JMethod::Solver, opts).value;
}

// solver runs inside trial-parallel regions stay serial
SolverOptions trial_solver(const EnsembleConfig& cfg)
{
    SolverOptions o = cfg.solver;
    o.exec = Exec::Serial;
    return o;
}

double narrow_half_width(const std::vector<LogGrid>& grids)
{
    double w = std::numeric_limits<double>::infinity();
    for (const auto& g : grids)
        w = std::min(w, 0.5 * std::log(g.t_max() / g.t_min()));
    return w;
}

double log_mid(const LogGrid& g)
{
    return 0.5 * (std::log(g.t_min()) + std::log(g.t_max()));
}

GridFunction power(const GridFunction& g, int n)
{
    GridFunction r = GridFunction::constant(g.grid(), 1.0);
    for (int i = 0; i < n; ++i)
        r = r * g;
    return r;
}

} // namespace

std::vector<GridSpec> default_ladder()
{
    return {GridSpec{1e-4, 1e4, 185}, GridSpec{1e-6, 1e6, 277}};
}

std::string to_string(OperatorLaw law)
{
    switch (law) {
    case OperatorLaw::Random:
        return "random";
    case OperatorLaw::Identity:
        return "identity";
    case OperatorLaw::Fixed:
        return "matrix";
    }
    return "?";
}

void EnsembleConfig::validate() const
{
    if (trials < 1)
        throw InvalidArgument("trials must be >= 1");
    if (ladder.empty())
        throw InvalidArgument("grid ladder is empty");
    if (weights.empty())
        throw InvalidArgument("weight list is empty");
    if (bumps < 1)
        throw InvalidArgument("bumps must be >= 1");
    if (!(stability_factor >= 1.0) || !(growth_factor > 0.0))
        throw InvalidArgument("stability/growth factors out of range");
    if (threads < 0)
        throw InvalidArgument("threads must be >= 0");
    for (const auto& g : ladder)
        (void)g.make();
    for (double q : q_values)
        (void)with_q(tq, q);
    (void)ThetaQ::make(tq.theta, tq.q);
}

json to_json(const EnsembleConfig& cfg)
{
    json j;
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    json ladder = json::array();
    for (const auto& g : cfg.ladder)
        ladder.push_back({{"t_min", g.t_min}, {"t_max", g.t_max}, {"n_nodes", g.n_nodes}});
    j["ladder"] = ladder;
    j["theta"] = cfg.tq.theta;
    j["q"] = q_json(cfg.tq.q);
    json qs = json::array();
    for (double q : cfg.q_values)
        qs.push_back(q_json(q));
    j["q_values"] = qs;
    json ws = json::array();
    for (const auto& w : cfg.weights)
        ws.push_back({{"kind", w.name()}, {"parameter", w.parameter()}});
    j["weights"] = ws;
    j["burn_in"] = cfg.burn_in;
    j["bumps"] = cfg.bumps;
    j["src"] = cfg.src ? pair_json(*cfg.src) : json(nullptr);
    j["dst"] = cfg.dst ? pair_json(*cfg.dst) : json(nullptr);
    j["operator_law"] = to_string(cfg.op_law);
    if (cfg.op_law == OperatorLaw::Fixed) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < cfg.op_matrix.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index k = 0; k < cfg.op_matrix.cols(); ++k)
                row.push_back(cfg.op_matrix(i, k));
            rows.push_back(row);
        }
        j["operator_matrix"] = rows;
    }
    j["stability_factor"] = cfg.stability_factor;
    j["growth_factor"] = cfg.growth_factor;
    j["degenerate_below"] = cfg.degenerate_below;
    j["solver"] = {{"max_iterations", cfg.solver.max_iterations}, {"tolerance", cfg.solver.tolerance}};
    return j;
}

const GroupSummary& VerificationReport::group(const std::string& name) const
{
    for (const auto& g : groups)
        if (g.group == name)
            return g;
    throw InvalidArgument("no group " + name);
}

const Check& VerificationReport::check(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.name == name)
            return c;
    throw InvalidArgument("no check " + name);
}

json VerificationReport::to_json() const
{
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["suite"] = suite;
    j["version"] = std::string(version);
    j["config"] = config;
    json tr = json::array();
    for (const auto& r : trials) {
        json o{{"group", r.group}, {"trial", r.trial}, {"numerator", num(r.numerator)},
               {"denominator", num(r.denominator)}, {"degenerate", r.degenerate}};
        o["ratio"] = r.degenerate ? json(nullptr) : num(r.ratio);
        if (!r.note.empty())
            o["note"] = r.note;
        tr.push_back(std::move(o));
    }
    j["trials"] = tr;
    json gs = json::array();
    for (const auto& g : groups)
        gs.push_back({{"group", g.group}, {"trials", g.trials}, {"degenerate", g.degenerate},
                      {"max_ratio", num(g.max_ratio)}, {"argmax_trial", g.argmax_trial}});
    j["groups"] = gs;
    json cs = json::array();
    for (const auto& c : checks)
        cs.push_back({{"name", c.name}, {"pass", c.pass}, {"value", num(c.value)}, {"limit", num(c.limit)},
                      {"detail", c.detail}});
    j["checks"] = cs;
    j["diagnostics"] = diagnostics;
    j["max_ratio"] = num(max_ratio);
    j["degenerate_count"] = degenerate_count;
    j["pass"] = pass;
    return j;
}

std::string VerificationReport::to_csv() const
{
    std::ostringstream os;
    os.precision(17);
    os << "group,trial,numerator,denominator,ratio,degenerate\n";
    for (const auto& r : trials) {
        os << r.group << ',' << r.trial << ',' << r.numerator << ',' << r.denominator << ',';
        if (!r.degenerate)
            os << r.ratio;
        os << ',' << (r.degenerate ? 1 : 0) << '\n';
    }
    return os.str();
}

ConstantEstimate estimate_constant(const std::vector<TrialRecord>& records)
{
    ConstantEstimate best;
    bool any = false;
    for (const auto& r : records) {
        if (r.degenerate)
            continue;
        if (!any || r.ratio > best.value) {
            best = ConstantEstimate{r.ratio, r.group, r.trial};
            any = true;
        }
    }
    if (!any)
        throw InvalidArgument("estimate_constant: every trial is degenerate");
    return best;
}

ConstantEstimate estimate_constant(const std::vector<VerificationReport>& reports)
{
    std::vector<TrialRecord> all;
    for (const auto& r : reports)
        for (const auto& t : r.trials)
            if (!contrast_group(r.suite, t.group))
                all.push_back(t);
    return estimate_constant(all);
}

int probe_family_size(const LogGrid& grid)
{
    const double top = (std::log(grid.t_max()) - 2.5) / std::log(4.0);
    return top < 0.0 ? 0 : int(std::floor(top)) + 1;
}

VerificationReport probe_unboundedness(const std::vector<LogGrid>& grids, const WeightFamily& w, const ThetaQ& tq,
                                       const SolverOptions& opts, double growth_factor)
{
    const auto t0 = Clock::now();
    if (grids.empty())
        throw InvalidArgument("probe_unboundedness: no grids");
    VerificationReport rep;
    rep.suite = "probe";
    const std::string q = "q=" + tq.q_label();
    auto family = [](int i) {
        Vec a = Vec::Ones(1), b(1);
        b[0] = std::pow(4.0, -double(i));
        return CouplePair::diagonal_l1(a, b);
    };
    std::vector<double> omega_max, bracket_max;
    std::vector<std::vector<double>> omega_rows;
    for (const auto& grid : grids) {
        const Selector sel(grid, tq, opts);
        const GridFunction W = w.on(grid);
        const int I = probe_family_size(grid);
        const std::string og = join({"probe", "omega", q, grid_label(grid)});
        const std::string bg = join({"probe", "bracket2", q, grid_label(grid)});
        std::vector<double> row;
        Vec e = Vec::Ones(1);
        for (int i = 0; i < I; ++i) {
            const CouplePair p = family(i), pn = family(i + 1);
            const double norm_e = sel(e, p)->cost(tq);
            const Vec om = omega_n(e, W, 1, sel, p);
            const double num = jnorm(om, p, tq, grid, JMethod::Solver, opts).value;
            rep.trials.push_back(record(og, i, num, norm_e, 1e-12));
            row.push_back(rep.trials.back().ratio);
            const PairOperator T = operator_pair_norm(Mat::Identity(1, 1), p, pn);
            const Vec br = bracket(T, W, e, 2, sel);
            const double bnum = jnorm(br, pn, tq, grid, JMethod::Solver, opts).value;
            rep.trials.push_back(record(bg, i, bnum, T.pair_norm * norm_e, 1e-12));
        }
        omega_rows.push_back(row);
        omega_max.push_back(row.empty() ? 0.0 : *std::max_element(row.begin(), row.end()));
        bracket_max.push_back(group_max(rep.trials, bg));

        if (I > 5) {
            Check c;
            c.name = join({"probe", q, grid_label(grid), "strictly increasing i=1..5"});
            c.pass = true;
            double worst = std::numeric_limits<double>::infinity();
            for (int i = 1; i < 5; ++i) {
                worst = std::min(worst, row[std::size_t(i + 1)] - row[std::size_t(i)]);
                if (!(row[std::size_t(i + 1)] > row[std::size_t(i)]))
                    c.pass = false;
            }
            c.value = worst;
            c.limit = 0.0;
            c.detail = "smallest increment";
            rep.checks.push_back(c);
        }
    }
    rep.checks.push_back(growth_check(join({"probe", q, "omega growth over ladder"}), omega_max.front(),
                                      omega_max.back(), growth_factor));
    // ladder grids share their step, so nodes and thresholds line up
    for (std::size_t g = 1; g < grids.size(); ++g) {
        Check c;
        c.name = join({"probe", q, grid_label(grids[g]), "not below narrower grid"});
        c.pass = true;
        c.value = std::numeric_limits<double>::infinity();
        c.limit = -1e-6;
        const std::size_t common = std::min(omega_rows[g].size(), omega_rows[g - 1].size());
        for (std::size_t i = 1; i < common; ++i) {
            const double rel = (omega_rows[g][i] - omega_rows[g - 1][i]) / omega_rows[g - 1][i];
            c.value = std::min(c.value, rel);
        }
        c.pass = !(c.value < c.limit);
        c.detail = "smallest relative change for i >= 1";
        rep.checks.push_back(c);
    }
    rep.diagnostics[join({"probe", q, "omega max per grid"})] = omega_max;
    rep.diagnostics[join({"probe", q, "bracket2 max per grid"})] = bracket_max;
    finalize(rep);
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

VerificationReport verify_t1(const EnsembleConfig& cfg)
{
    cfg.validate();
    const auto t0 = Clock::now();
    VerificationReport rep;
    rep.suite = "t1";
    rep.config = to_json(cfg);
    const std::vector<LogGrid> grids = make_grids(cfg);
    const CouplePair pair = cfg.src ? *cfg.src : CouplePair::scalar();
    const SolverOptions opts = trial_solver(cfg);

    // bump centers: middle half of the narrowest grid, identical on every grid
    const double half = narrow_half_width(grids);
    const double mid = log_mid(grids.front());
    const double lo = mid - 0.5 * half, hi = mid + 0.5 * half;

    for (const auto& w : cfg.weights) {
        std::vector<std::string> pc, pp, mc, mp;
        for (const auto& grid : grids) {
            const GridFunction W = w.on(grid);
            const double wn = w_norm(w, grid, cfg.burn_in);
            const std::vector<GridFunction> one{GridFunction::constant(grid, 1.0)};
            const std::string gl = grid_label(grid);
            pc.push_back(join({"t1", w.name(), "pair", "cancel", gl}));
            pp.push_back(join({"t1", w.name(), "pair", "plain", gl}));
            mc.push_back(join({"t1", w.name(), "multiscale", "cancel", gl}));
            mp.push_back(join({"t1", w.name(), "multiscale", "plain", gl}));

            // thresholds exp(+-X) move with the window
            const double X = std::log(grid.t_max()) - 3.0;
            Vec ma = Vec::Ones(2), mb(2);
            mb << std::exp(-X), std::exp(X);
            const CouplePair ms = CouplePair::diagonal_l1(ma, mb);
            const std::vector<std::vector<double>> ms_centers{{X}, {-X}};

            auto body = [&](int trial) {
                Rng rng(cfg.seed ^ std::uint64_t(trial));
                std::vector<TrialRecord> out;
                const NodeField u = random_bumps(grid, pair.dim(), cfg.bumps, lo, hi, rng);
                const Representation plain(grid, pair, u, integrate_haar(grid, u));
                const Representation canc = impose_cancellations(plain, one);
                for (const auto* r : {&canc, &plain}) {
                    const Vec f = weighted_integral(*r, W, 1);
                    const double num = jnorm_value(f, pair, cfg.tq, grid, opts);
                    out.push_back(record(r == &canc ? pc.back() : pp.back(), trial, num, wn * r->cost(cfg.tq),
                                         cfg.degenerate_below));
                }

                std::normal_distribution<double> N;
                NodeField v = NodeField::Zero(Eigen::Index(grid.size()), 2);
                for (Eigen::Index i = 0; i < 2; ++i) {
                    const double c = ms_centers[std::size_t(i)][0] + 0.5 * N(rng);
                    add_bump(v, grid, i, c, N(rng));
                }
                const Representation mplain(grid, ms, v, integrate_haar(grid, v));
                const Representation mcanc = impose_cancellations(mplain, one, ms_centers);
                for (const auto* r : {&mcanc, &mplain}) {
                    const Vec f = weighted_integral(*r, W, 1);
                    const double num = jnorm_value(f, ms, cfg.tq, grid, opts);
                    out.push_back(record(r == &mcanc ? mc.back() : mp.back(), trial, num, wn * r->cost(cfg.tq),
                                         cfg.degenerate_below));
                }
                return out;
            };
            run_trials(cfg.trials, cfg.threads, body, rep.trials);
        }
        const std::string base = join({"t1", w.name()});
        rep.checks.push_back(finite_check(join({base, "ratios finite"}), rep.trials));
        rep.checks.push_back(stability_check(join({base, "pair", "cancel stable"}), rep.trials, pc, cfg.stability_factor));
        rep.checks.push_back(
            stability_check(join({base, "multiscale", "cancel stable"}), rep.trials, mc, cfg.stability_factor));
        rep.checks.push_back(growth_check(join({base, "multiscale", "plain growth"}), group_max(rep.trials, mp.front()),
                                          group_max(rep.trials, mp.back()), cfg.growth_factor));
        const double a = group_max(rep.trials, pp.front()), b = group_max(rep.trials, pp.back());
        rep.diagnostics[join({base, "pair", "plain growth"})] = a > 0.0 ? b / a : 0.0;
    }
    finalize(rep);
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

VerificationReport verify_teoA(const EnsembleConfig& cfg)
{
    cfg.validate();
    const auto t0 = Clock::now();
    VerificationReport rep;
    rep.suite = "teoA";
    rep.config = to_json(cfg);
    const std::vector<LogGrid> grids = make_grids(cfg);
    const CouplePair src = src_of(cfg), dst = dst_of(cfg);
    const SolverOptions opts = trial_solver(cfg);

    for (const auto& w : cfg.weights) {
        for (double qv : q_list(cfg)) {
            const ThetaQ tq = with_q(cfg.tq, qv);
            const std::string q = "q=" + tq.q_label();
            std::vector<std::string> groups, good_groups;
            double cancel = 0.0, residual = 0.0;
            for (const auto& grid : grids) {
                const Selector sel(grid, tq, opts);
                const GridFunction W = w.on(grid);
                const double wn = w_norm(w, grid, cfg.burn_in);
                groups.push_back(join({"teoA", w.name(), q, grid_label(grid)}));
                good_groups.push_back(join({"teoA-good", w.name(), q, grid_label(grid)}));
                std::vector<double> cancel_t(std::size_t(cfg.trials)), residual_t(std::size_t(cfg.trials));

                auto body = [&](int trial) {
                    Rng rng(cfg.seed ^ std::uint64_t(trial));
                    const PairOperator T = draw_operator(cfg, src, dst, rng);
                    if (!(T.pair_norm > 0.0))
                        throw InvalidArgument("operator has zero pair norm");
                    const Vec f = random_vector(src.dim(), rng);
                    const double jf = sel(f, src)->cost(tq);
                    const GoodRepresentation g = good_representation(T, W, f, sel);
                    const double num = jnorm_value(g.commutator, dst, tq, grid, opts);
                    const double den = T.pair_norm * wn * jf;
                    const Vec ci = integrate_haar(grid, g.diff);
                    cancel_t[std::size_t(trial)] = ci.cwiseAbs().maxCoeff() / std::max(1.0, T.apply(f).cwiseAbs().maxCoeff());
                    residual_t[std::size_t(trial)] =
                        g.residual.cwiseAbs().maxCoeff() / std::max(1.0, g.commutator.cwiseAbs().maxCoeff());
                    return std::vector<TrialRecord>{
                        record(groups.back(), trial, num, den, cfg.degenerate_below),
                        record(good_groups.back(), trial, g.v.cost(tq), den, cfg.degenerate_below)};
                };
                run_trials(cfg.trials, cfg.threads, body, rep.trials);
                cancel = std::max(cancel, *std::max_element(cancel_t.begin(), cancel_t.end()));
                residual = std::max(residual, *std::max_element(residual_t.begin(), residual_t.end()));
            }
            const std::string base = join({"teoA", w.name(), q});
            rep.checks.push_back(stability_check(join({base, "stable"}), rep.trials, groups, cfg.stability_factor));
            rep.checks.push_back(bound_check(join({base, "difference representation cancels"}), cancel, 1e-10));
            rep.diagnostics[join({base, "good representation max relative residual"})] = residual;
            rep.diagnostics[join({base, "good representation stability"})] =
                stability_check("", rep.trials, good_groups, cfg.stability_factor).value;

            const VerificationReport probe = probe_unboundedness(grids, w, tq, cfg.solver, cfg.growth_factor);
            merge(rep, probe);
        }
    }
    rep.checks.push_back(finite_check("teoA/ratios finite", rep.trials));
    finalize(rep);
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

VerificationReport verify_higher(const EnsembleConfig& cfg, int n)
{
    cfg.validate();
    if (n != 2 && n != 3)
        throw InvalidArgument("verify_higher: order must be 2 or 3");
    const auto t0 = Clock::now();
    VerificationReport rep;
    rep.suite = "higher";
    rep.config = to_json(cfg);
    rep.config["order"] = n;
    const std::vector<LogGrid> grids = make_grids(cfg);
    const CouplePair pair = cfg.src ? *cfg.src : CouplePair::scalar();
    const CouplePair src = src_of(cfg), dst = dst_of(cfg);
    const SolverOptions opts = trial_solver(cfg);
    const double half = narrow_half_width(grids);
    const double mid = log_mid(grids.front());
    const double lo = mid - 0.5 * half, hi = mid + 0.5 * half;

    struct List {
        std::string name;
        std::vector<GridFunction> moments;
        GridFunction weight;
    };

    for (const auto& w : cfg.weights) {
        // (a) representation suite
        std::vector<std::vector<std::string>> rgroups;
        for (const auto& grid : grids) {
            const GridFunction W = w.on(grid);
            const GridFunction PW = hardy_average(w, grid);
            const GridFunction one = GridFunction::constant(grid, 1.0);
            const double wn = w_norm(w, grid, cfg.burn_in);
            std::vector<List> lists;
            if (n == 2) {
                lists.push_back({"t2", {one, PW}, PW * PW});
                lists.push_back({"c1", {one, W, PW}, W * W});
            } else {
                std::vector<GridFunction> m{one};
                for (int k = 1; k < n; ++k) {
                    m.push_back(power(W, k));
                    m.push_back(power(PW, k));
                }
                lists.push_back({"nth-i", m, power(PW, n)});
            }
            if (rgroups.size() < lists.size())
                rgroups.resize(lists.size());
            for (std::size_t l = 0; l < lists.size(); ++l) {
                const List& L = lists[l];
                const std::string g = join({"higher", w.name(), "representation", L.name, grid_label(grid)});
                rgroups[l].push_back(g);
                auto body = [&](int trial) {
                    Rng rng(cfg.seed ^ std::uint64_t(trial));
                    const NodeField u = random_bumps(grid, pair.dim(), cfg.bumps, lo, hi, rng);
                    const Representation plain(grid, pair, u, integrate_haar(grid, u));
                    TrialRecord r;
                    try {
                        const Representation c = impose_cancellations(plain, L.moments);
                        const Vec f = weighted_integral(c, L.weight, 1);
                        const double num = jnorm_value(f, pair, cfg.tq, grid, opts);
                        r = record(g, trial, num, std::pow(wn, n) * c.cost(cfg.tq), cfg.degenerate_below);
                    } catch (const NumericalError& e) {
                        r.group = g;
                        r.trial = trial;
                        r.degenerate = true;
                        r.note = e.what();
                    }
                    return std::vector<TrialRecord>{r};
                };
                run_trials(cfg.trials, cfg.threads, body, rep.trials);
            }
        }
        for (const auto& gs : rgroups) {
            const std::string name = gs.front().substr(0, gs.front().rfind('/'));
            rep.checks.push_back(stability_check(join({name, "stable"}), rep.trials, gs, cfg.stability_factor));
        }

        // (b) commutator suite for g = w and g = Pw
        for (double qv : q_list(cfg)) {
            const ThetaQ tq = with_q(cfg.tq, qv);
            const std::string q = "q=" + tq.q_label();
            std::vector<std::string> gw, gp;
            double homog = 0.0, linear = 0.0;
            for (const auto& grid : grids) {
                const Selector sel(grid, tq, opts);
                const GridFunction W = w.on(grid);
                const GridFunction PW = hardy_average(w, grid);
                const double wn_w = w_norm(w, grid, cfg.burn_in);
                const double wn_p = w_norm(PW, cfg.burn_in);
                gw.push_back(join({"higher", w.name(), "commutator", "g=w", q, grid_label(grid)}));
                gp.push_back(join({"higher", w.name(), "commutator", "g=Pw", q, grid_label(grid)}));
                std::vector<double> homog_t(std::size_t(cfg.trials), 0.0), linear_t(std::size_t(cfg.trials), 0.0);
                const double scale = std::pow(2.0, n);

                auto body = [&](int trial) {
                    Rng rng(cfg.seed ^ std::uint64_t(trial));
                    const PairOperator T = draw_operator(cfg, src, dst, rng);
                    const Vec f = random_vector(src.dim(), rng);
                    const double jf = sel(f, src)->cost(tq);
                    std::vector<TrialRecord> out;
                    const std::array<const GridFunction*, 2> gs{&W, &PW};
                    for (std::size_t i = 0; i < 2; ++i) {
                        const GridFunction& g = *gs[i];
                        const Vec C = higher_commutator(T, g, f, n, sel);
                        const double num = jnorm_value(C, dst, tq, grid, opts);
                        const double wn = i == 0 ? wn_w : wn_p;
                        out.push_back(record(i == 0 ? gw.back() : gp.back(), trial, num,
                                             T.pair_norm * std::pow(wn, n) * jf, cfg.degenerate_below));
                        if (trial < 5) {
                            const Vec C2 = higher_commutator(T, g * 2.0, f, n, sel);
                            const double dev = (C2 - scale * C).cwiseAbs().maxCoeff() /
                                               std::max(1e-300, scale * C.cwiseAbs().maxCoeff());
                            homog_t[std::size_t(trial)] = std::max(homog_t[std::size_t(trial)], C.isZero(0.0) ? 0.0 : dev);
                        }
                    }
                    // Omega linear in w for a fixed representation
                    const auto rf = sel(f, src);
                    const Vec a = weighted_integral(*rf, W + PW, 1);
                    const Vec b = weighted_integral(*rf, W, 1) + weighted_integral(*rf, PW, 1);
                    linear_t[std::size_t(trial)] =
                        (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
                    return out;
                };
                run_trials(cfg.trials, cfg.threads, body, rep.trials);
                homog = std::max(homog, *std::max_element(homog_t.begin(), homog_t.end()));
                linear = std::max(linear, *std::max_element(linear_t.begin(), linear_t.end()));
            }
            const std::string base = join({"higher", w.name(), "commutator"});
            rep.checks.push_back(stability_check(join({base, "g=w", q, "stable"}), rep.trials, gw, cfg.stability_factor));
            rep.checks.push_back(stability_check(join({base, "g=Pw", q, "stable"}), rep.trials, gp, cfg.stability_factor));
            rep.checks.push_back(bound_check(join({base, q, "homogeneity 2^n"}), homog, 1e-12));
            rep.checks.push_back(bound_check(join({base, q, "omega linear in w"}), linear, 1e-12));
        }

        // classical case: with w = log and Pw = log - 1, moments {1, w}
        // already cancel u Pw and reduce u w Pw to u w^2
        if (w.kind() == WeightFamily::Kind::Log) {
            double worst = 0.0, discrete = 0.0;
            for (const auto& grid : grids) {
                const GridFunction W = w.on(grid);
                const GridFunction one = GridFunction::constant(grid, 1.0);
                const GridFunction pw_line = W - one;
                const GridFunction PW = hardy_average(w, grid);
                for (int trial = 0; trial < cfg.trials; ++trial) {
                    Rng rng(cfg.seed ^ std::uint64_t(trial));
                    const NodeField u = random_bumps(grid, pair.dim(), cfg.bumps, lo, hi, rng);
                    const Representation c =
                        impose_cancellations(Representation(grid, pair, u, integrate_haar(grid, u)), {one, W});
                    const NodeField au = c.u().cwiseAbs();
                    const Representation a(grid, pair, au, integrate_haar(grid, au));
                    const double s1 = weighted_integral(a, pw_line.abs(), 1).maxCoeff();
                    const double s2 = weighted_integral(a, (W * W).abs(), 1).maxCoeff();
                    const double m1 = weighted_integral(c, pw_line, 1).cwiseAbs().maxCoeff() / s1;
                    const double m2 =
                        (weighted_integral(c, W * pw_line, 1) - weighted_integral(c, W * W, 1)).cwiseAbs().maxCoeff() /
                        s2;
                    worst = std::max({worst, m1, m2});
                    discrete = std::max(discrete, weighted_integral(c, PW, 1).cwiseAbs().maxCoeff() / s1);
                }
            }
            rep.checks.push_back(bound_check(join({"higher", w.name(), "classical case moments"}), worst, 1e-8));
            rep.diagnostics[join({"higher", w.name(), "classical case, discrete Pw moment"})] = discrete;
        }
    }
    rep.checks.push_back(finite_check("higher/ratios finite", rep.trials));
    finalize(rep);
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

} // namespace interpkit
