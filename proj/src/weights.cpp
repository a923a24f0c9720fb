#include "interpkit/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "interpkit/errors.hpp"

namespace interpkit {

namespace {

double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

void check_moment(const WeightFamily& w, const std::function<double(double)>& moment)
{
    const LogGrid ref(1e-3, 1e3, 2001);
    const auto& sig = ref.lebesgue_steps();
    const double delta = ref.haar_step();
    const double m0 = moment(ref.t_min());
    double s = 0.0, s_abs = 0.0;
    for (std::size_t k = 1; k < ref.size(); ++k) {
        const double wk = w(ref[k - 1]);
        s += wk * sig[k - 1];
        s_abs += std::abs(wk) * sig[k - 1];
        const double err = std::abs(moment(ref[k]) - m0 - s);
        if (!(err <= 10.0 * delta * (s_abs + ref[k]) + 1e-12))
            throw InvalidArgument("weight family '" + w.name() + "': closed-form moment disagrees with quadrature at t = " +
                                  std::to_string(ref[k]));
    }
}

} // namespace

WeightFamily WeightFamily::constant(double c)
{
    if (!std::isfinite(c))
        throw InvalidArgument("constant weight must be finite");
    WeightFamily w;
    w.kind_ = Kind::Constant;
    w.name_ = "constant";
    w.param_ = c;
    w.eval_ = [c](double) { return c; };
    w.moment_ = [c](double t) { return c * t; };
    w.logderiv_ = [](double) { return 0.0; };
    w.logderiv_sup_ = 0.0;
    return w;
}

WeightFamily WeightFamily::log()
{
    WeightFamily w;
    w.kind_ = Kind::Log;
    w.name_ = "log";
    w.eval_ = [](double t) { return std::log(t); };
    w.moment_ = [](double t) { return t * (std::log(t) - 1.0); };
    w.logderiv_ = [](double) { return 1.0; };
    w.logderiv_sup_ = 1.0;
    return w;
}

WeightFamily WeightFamily::power_log(int n)
{
    if (n < 0)
        throw InvalidArgument("power_log: exponent must be >= 0");
    if (n == 0)
        return constant(1.0);
    WeightFamily w;
    w.kind_ = Kind::PowerLog;
    w.name_ = "power_log";
    w.param_ = n;
    w.eval_ = [n](double t) { return std::pow(std::log(t), n); };
    // int_0^t (ln s)^n ds = t sum_j (-1)^{n-j} n!/j! (ln t)^j
    w.moment_ = [n](double t) {
        const double l = std::log(t);
        const double nf = factorial(n);
        double s = 0.0;
        for (int j = 0; j <= n; ++j)
            s += ((n - j) % 2 ? -1.0 : 1.0) * nf / factorial(j) * std::pow(l, j);
        return t * s;
    };
    w.logderiv_ = [n](double t) { return n * std::pow(std::log(t), n - 1); };
    if (n == 1)
        w.logderiv_sup_ = 1.0;
    return w;
}

WeightFamily WeightFamily::sin_log()
{
    WeightFamily w;
    w.kind_ = Kind::SinLog;
    w.name_ = "sin_log";
    w.eval_ = [](double t) { return std::sin(std::log(t)); };
    w.moment_ = [](double t) {
        const double l = std::log(t);
        return 0.5 * t * (std::sin(l) - std::cos(l));
    };
    w.logderiv_ = [](double t) { return std::cos(std::log(t)); };
    w.logderiv_sup_ = 1.0;
    return w;
}

WeightFamily WeightFamily::phi_log(std::function<double(double)> phi, std::function<double(double)> dphi)
{
    if (!phi)
        throw InvalidArgument("phi_log: phi is empty");
    WeightFamily w;
    w.kind_ = Kind::PhiLog;
    w.name_ = "phi_log";
    w.eval_ = [phi](double t) { return phi(std::log(t)); };
    if (dphi)
        w.logderiv_ = [dphi](double t) { return dphi(std::log(t)); };
    return w;
}

WeightFamily WeightFamily::phi_log_piecewise(std::vector<double> x, std::vector<double> y)
{
    if (x.size() < 2 || x.size() != y.size())
        throw InvalidArgument("phi_log_piecewise: need >= 2 knots with matching values");
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (!(x[i] < x[i + 1]))
            throw InvalidArgument("phi_log_piecewise: knots must be strictly increasing");
    for (double v : y)
        if (!std::isfinite(v))
            throw InvalidArgument("phi_log_piecewise: non-finite value");

    auto phi = [x, y](double s) {
        if (s <= x.front())
            return y.front();
        if (s >= x.back())
            return y.back();
        const auto it = std::upper_bound(x.begin(), x.end(), s);
        const std::size_t i = std::size_t(it - x.begin()) - 1;
        const double a = (s - x[i]) / (x[i + 1] - x[i]);
        return (1.0 - a) * y[i] + a * y[i + 1];
    };
    auto dphi = [x, y](double s) {
        if (s < x.front() || s >= x.back())
            return 0.0;
        const auto it = std::upper_bound(x.begin(), x.end(), s);
        const std::size_t i = std::size_t(it - x.begin()) - 1;
        return (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    };
    double lip = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        lip = std::max(lip, std::abs((y[i + 1] - y[i]) / (x[i + 1] - x[i])));

    WeightFamily w = phi_log(phi, dphi);
    w.logderiv_sup_ = lip;
    return w;
}

WeightFamily WeightFamily::samples(GridFunction g)
{
    WeightFamily w;
    w.kind_ = Kind::Samples;
    w.name_ = "samples";
    w.samples_ = std::move(g);
    return w;
}

WeightFamily WeightFamily::with_moment(std::function<double(double)> moment) const
{
    if (kind_ == Kind::Samples)
        throw InvalidArgument("sampled weights cannot carry a closed-form moment");
    check_moment(*this, moment);
    WeightFamily w = *this;
    w.moment_ = std::move(moment);
    return w;
}

double WeightFamily::operator()(double t) const
{
    if (kind_ == Kind::Samples)
        throw InvalidArgument("sampled weight is only defined on its grid");
    return eval_(t);
}

GridFunction WeightFamily::on(const LogGrid& grid) const
{
    if (kind_ == Kind::Samples) {
        if (!(samples_->grid() == grid))
            throw InvalidArgument("sampled weight requested on a different grid");
        return *samples_;
    }
    return GridFunction::sample(grid, eval_);
}

double WeightFamily::moment(double t) const
{
    if (!moment_)
        throw InvalidArgument("weight family '" + name_ + "' has no closed-form moment");
    return moment_(t);
}

namespace {

GridFunction average(const GridFunction& w, double tail)
{
    const LogGrid& grid = w.grid();
    const auto& sig = grid.lebesgue_steps();
    std::vector<double> p(w.size());
    // integrate_lebesgue_prefix(w, k, tail) taken relative to w_0, so P(c) = c
    // holds without the rounding of t_min + sum sigma_j against t_k
    const double w0 = w[0];
    double s = tail - w0 * grid[0];
    p[0] = w0 + s / grid[0];
    for (std::size_t k = 1; k < w.size(); ++k) {
        s += (w[k - 1] - w0) * sig[k - 1];
        p[k] = w0 + s / grid[k];
    }
    return GridFunction(grid, std::move(p));
}

} // namespace

GridFunction hardy_average(const WeightFamily& w, const LogGrid& grid, Tail tail)
{
    GridFunction v = w.on(grid);
    const double t0 = grid.t_min();
    const double m = (tail == Tail::Auto && w.has_exact_moment()) ? w.moment(t0) : v[0] * t0;
    return average(v, m);
}

GridFunction hardy_average(const GridFunction& w)
{
    return average(w, w[0] * w.grid().t_min());
}

GridFunction sharp(const WeightFamily& w, const LogGrid& grid, Tail tail)
{
    return hardy_average(w, grid, tail) - w.on(grid);
}

GridFunction sharp(const GridFunction& w)
{
    return hardy_average(w) - w;
}

double sup_abs(const GridFunction& g, std::size_t from)
{
    double m = 0.0;
    for (std::size_t k = from; k < g.size(); ++k)
        m = std::max(m, std::abs(g[k]));
    return m;
}

double w_norm(const WeightFamily& w, const LogGrid& grid, double burn_in, Tail tail)
{
    return sup_abs(sharp(w, grid, tail), grid.burn_in_index(burn_in));
}

double w_norm(const GridFunction& w, double burn_in)
{
    return sup_abs(sharp(w), w.grid().burn_in_index(burn_in));
}

double w1_seminorm(const GridFunction& g, double burn_in)
{
    const LogGrid& grid = g.grid();
    const auto& sig = grid.lebesgue_steps();
    double m = 0.0;
    for (std::size_t k = grid.burn_in_index(burn_in); k + 1 < g.size(); ++k)
        m = std::max(m, std::abs(grid[k] * (g[k + 1] - g[k]) / sig[k]));
    return m;
}

double w1_seminorm(const WeightFamily& w, const LogGrid& grid, double burn_in)
{
    if (w.logderiv_sup_)
        return *w.logderiv_sup_;
    if (w.kind() == WeightFamily::Kind::PhiLog && w.has_log_derivative()) {
        double m = 0.0;
        for (std::size_t k = grid.burn_in_index(burn_in); k < grid.size(); ++k)
            m = std::max(m, std::abs(w.log_derivative(grid[k])));
        return m;
    }
    return w1_seminorm(w.on(grid), burn_in);
}

WeightProfile profile(const WeightFamily& w, const LogGrid& grid, double burn_in, Tail tail)
{
    GridFunction v = w.on(grid);
    GridFunction pw = hardy_average(w, grid, tail);
    GridFunction sh = pw - v;
    const double wn = sup_abs(sh, grid.burn_in_index(burn_in));
    const double w1 = w1_seminorm(w, grid, burn_in);
    return WeightProfile{std::move(v), std::move(pw), std::move(sh), wn, w1};
}

L3Split decompose_l3(const WeightFamily& w, const LogGrid& grid, Tail tail)
{
    GridFunction v = w.on(grid);
    GridFunction pw = hardy_average(w, grid, tail);
    return L3Split{v - pw, pw};
}

GridFunction g_transform(const GridFunction& w)
{
    const LogGrid& grid = w.grid();
    const std::size_t c = grid.unit_index_or_throw();
    const double delta = grid.haar_step();
    std::vector<double> g(w.size(), 0.0);
    double s = 0.0;
    for (std::size_t k = c + 1; k < w.size(); ++k) {
        s += w[k - 1] * delta;
        g[k] = s;
    }
    s = 0.0;
    for (std::size_t k = c; k-- > 0;) {
        s += w[k] * delta;
        g[k] = -s;
    }
    return GridFunction(grid, std::move(g));
}

GridFunction qbar(const GridFunction& g)
{
    return g_transform(g) * -1.0;
}

GridFunction rearrange(const GridFunction& g)
{
    const LogGrid& grid = g.grid();
    const std::size_t n = g.size();
    const auto& sig = grid.lebesgue_steps();

    std::vector<double> mass(n, 0.0);
    mass[0] = grid[1];
    for (std::size_t k = 1; k + 1 < n; ++k)
        mass[k] = sig[k];

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(g[a]) > std::abs(g[b]); });

    std::vector<double> cum(n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        s += mass[order[j]];
        cum[j] = s;
    }

    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        // relative slack absorbs rounding in the running mass
        const auto it = std::upper_bound(cum.begin(), cum.end(), grid[k] * (1.0 + 1e-12));
        const std::size_t j = it == cum.end() ? n - 1 : std::size_t(it - cum.begin());
        out[k] = std::abs(g[order[j]]);
    }
    return GridFunction(grid, std::move(out));
}

} // namespace interpkit
