#include <cmath>
#include <random>

#include "doctest.h"

#include "interpkit/errors.hpp"
#include "interpkit/weights.hpp"

using namespace interpkit;

namespace {

const LogGrid& wide()
{
    static const LogGrid g = make_grid(1e-6, 1e6, 1201);
    return g;
}

std::vector<WeightFamily> differentiable_families()
{
    return {WeightFamily::log(), WeightFamily::sin_log(),
            WeightFamily::phi_log([](double x) { return std::atan(x); },
                                  [](double x) { return 1.0 / (1.0 + x * x); }),
            WeightFamily::phi_log([](double x) { return 0.5 * x + std::cos(2.0 * x); },
                                  [](double x) { return 0.5 - 2.0 * std::sin(2.0 * x); })};
}

GridFunction random_weight(const LogGrid& g, std::mt19937_64& rng)
{
    std::normal_distribution<double> N(0.0, 1.0);
    const double a = N(rng), b = N(rng), c = N(rng), f = 0.2 + std::abs(N(rng));
    return GridFunction::sample(g, [&](double t) {
        const double x = std::log(t);
        return a * x + b * std::sin(f * x) + c * std::tanh(x);
    });
}

} // namespace

TEST_CASE("hardy_average: constants and linear weight")
{
    const LogGrid& g = wide();
    const GridFunction p = hardy_average(WeightFamily::constant(3.0), g, Tail::Extension);
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK(p[k] == doctest::Approx(3.0).epsilon(1e-13));

    const auto lin = WeightFamily::phi_log([](double x) { return std::exp(x); })
                         .with_moment([](double t) { return 0.5 * t * t; });
    const GridFunction pl = hardy_average(lin, g);
    for (std::size_t k = g.burn_in_index(1e3); k < g.size(); k += 50)
        CHECK(pl[k] == doctest::Approx(g[k] / 2.0).epsilon(0.02));
}

TEST_CASE("log weight: Pw = log t - 1 and sharp = -1")
{
    const LogGrid& g = wide();
    const GridFunction p = hardy_average(WeightFamily::log(), g);
    const GridFunction s = sharp(WeightFamily::log(), g);
    for (std::size_t k = g.burn_in_index(1e3); k < g.size(); ++k) {
        CHECK(std::abs(p[k] - (std::log(g[k]) - 1.0)) <= 0.02);
        CHECK(std::abs(s[k] + 1.0) <= 0.02);
    }
    CHECK(w_norm(WeightFamily::log(), g) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(w1_seminorm(WeightFamily::log(), g) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sin_log weight: closed-form sharp")
{
    const LogGrid& g = wide();
    const GridFunction s = sharp(WeightFamily::sin_log(), g);
    for (std::size_t k = g.burn_in_index(1e3); k < g.size(); ++k) {
        const double x = std::log(g[k]);
        const double expected = -(std::sin(x) + std::cos(x)) / 2.0;
        // 2% of the amplitude sqrt(2)/2
        CHECK(std::abs(s[k] - expected) <= 0.02 * std::sqrt(0.5));
    }
    CHECK(w_norm(WeightFamily::sin_log(), g) == doctest::Approx(std::sqrt(0.5)).epsilon(0.02));
    CHECK(w1_seminorm(WeightFamily::sin_log(), g) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("constant weight: all seminorms vanish")
{
    const LogGrid& g = wide();
    const auto c = WeightFamily::constant(-2.5);
    const GridFunction s = sharp(c, g);
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK(s[k] == 0.0);
    CHECK(w_norm(c, g) == 0.0);
    CHECK(w1_seminorm(c, g) == 0.0);
    const L3Split d = decompose_l3(c, g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(d.bounded_part[k] == 0.0);
        CHECK(d.w1_part[k] == -2.5);
    }
}

TEST_CASE("sharp equals Pw - w exactly and w_norm is its sup")
{
    const LogGrid& g = wide();
    for (const auto& w : differentiable_families()) {
        const WeightProfile p = profile(w, g);
        for (std::size_t k = 0; k < g.size(); ++k)
            CHECK(p.sharp[k] == p.pw[k] - p.w[k]);
        CHECK(p.w_norm == sup_abs(p.sharp, g.burn_in_index(default_burn_in)));
    }
}

TEST_CASE("decompose_l3 on log")
{
    const LogGrid& g = wide();
    const L3Split d = decompose_l3(WeightFamily::log(), g);
    for (std::size_t k = g.burn_in_index(1e3); k < g.size(); ++k) {
        CHECK(std::abs(d.bounded_part[k] - 1.0) <= 0.02);
        CHECK(std::abs(d.w1_part[k] - (std::log(g[k]) - 1.0)) <= 0.02);
        CHECK(d.bounded_part[k] + d.w1_part[k] == doctest::Approx(std::log(g[k])).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("P is bounded on W: (Pw)# = P(w#) in extension mode")
{
    const LogGrid g = make_grid(1e-4, 1e4, 185);
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const GridFunction w = random_weight(g, rng);
        const GridFunction lhs = sharp(hardy_average(w));
        const GridFunction rhs = hardy_average(sharp(w));
        const double scale = sup_abs(w) + 1.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            CHECK(std::abs(lhs[k] - rhs[k]) <= 1e-12 * scale);
        CHECK(sup_abs(lhs) <= sup_abs(sharp(w)) * (1.0 + 1e-12));
    }
}

TEST_CASE("sharp is linear")
{
    const LogGrid g = make_grid(1e-4, 1e4, 185);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const GridFunction a = random_weight(g, rng), b = random_weight(g, rng);
        const GridFunction lhs = sharp(a * 1.5 + b * -0.75);
        const GridFunction rhs = sharp(a) * 1.5 + sharp(b) * -0.75;
        for (std::size_t k = 0; k < g.size(); ++k)
            CHECK(std::abs(lhs[k] - rhs[k]) <= 1e-12 * (1.0 + std::abs(rhs[k])));
    }
}

TEST_CASE("W1 is contained in W")
{
    const LogGrid& g = wide();
    for (const auto& w : differentiable_families()) {
        CAPTURE(w.name());
        CHECK(w_norm(w, g) <= w1_seminorm(w, g) + 2.0 * g.haar_step());
        // Pw lands in W1 with seminorm at most ||w||_W
        CHECK(w1_seminorm(hardy_average(w, g)) <= w_norm(w, g) * (1.0 + 1e-12));
    }
    // a piecewise-linear phi has no closed-form derivative
    const auto pw = WeightFamily::phi_log_piecewise({-5.0, 0.0, 5.0}, {0.0, 2.0, 1.0});
    CHECK(w_norm(pw, g) <= w1_seminorm(pw, g) + 2.0 * g.haar_step());
}

TEST_CASE("Qbar of a bounded function lies in W")
{
    const LogGrid& g = wide();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(g.size());
        for (auto& x : v)
            x = U(rng);
        const GridFunction b(g, v);
        // |(Qbar b)#| <= sup|b| pointwise in the continuum
        CHECK(w_norm(qbar(b)) <= sup_abs(b) * (1.0 + 2.0 * g.haar_step()));
    }
}

TEST_CASE("log growth bound for Pw")
{
    const LogGrid& g = wide();
    const std::size_t one = *g.unit_index();
    for (const auto& w : differentiable_families()) {
        CAPTURE(w.name());
        const WeightProfile p = profile(w, g);
        for (std::size_t k = g.burn_in_index(1e3); k < g.size(); ++k) {
            const double bound = std::abs(p.pw[one]) + p.w_norm * std::abs(std::log(g[k]));
            CHECK(std::abs(p.pw[k]) <= bound + 4.0 * g.haar_step() * (1.0 + std::abs(std::log(g[k]))));
        }
    }
}

TEST_CASE("endpoint decay over nested grids")
{
    const double theta = 0.5;
    for (const auto& w : {WeightFamily::log(), WeightFamily::sin_log()}) {
        CAPTURE(w.name());
        double lo = INFINITY, hi = INFINITY;
        for (double e : {4.0, 6.0, 8.0}) {
            const double a = std::pow(10.0, -e), b = std::pow(10.0, e);
            const double l = std::pow(a, theta) * std::abs(w(a));
            const double h = std::pow(b, -theta) * std::abs(w(b));
            CHECK(l < lo);
            CHECK(h < hi);
            lo = l;
            hi = h;
        }
    }
}

TEST_CASE("qbar and g_transform")
{
    const LogGrid g = make_grid(1e-2, 1e2, 41);
    const std::size_t one = *g.unit_index();
    const GridFunction q = qbar(GridFunction::constant(g, 1.0));
    const GridFunction gt = g_transform(GridFunction::constant(g, 1.0));
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double lg = (double(k) - double(one)) * g.haar_step();
        CHECK(std::abs(q[k] + lg) <= g.haar_step() + 1e-12);
        CHECK(std::abs(gt[k] - lg) <= g.haar_step() + 1e-12);
    }
    CHECK(q[one] == 0.0);
    CHECK(gt[one] == 0.0);
    const GridFunction z = qbar(GridFunction::constant(g, 0.0));
    const GridFunction zg = g_transform(GridFunction::constant(g, 0.0));
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(z[k] == 0.0);
        CHECK(zg[k] == 0.0);
    }

    const LogGrid even = make_grid(1e-2, 1e2, 40);
    CHECK_THROWS_AS(qbar(GridFunction::constant(even, 1.0)), InvalidArgument);
    CHECK_THROWS_AS(g_transform(GridFunction::constant(even, 1.0)), InvalidArgument);
}

TEST_CASE("rearrange")
{
    const LogGrid g = make_grid(1e-3, 1e3, 61);
    const GridFunction c = rearrange(GridFunction::constant(g, 2.0));
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK(c[k] == 2.0);

    const GridFunction dec = GridFunction::sample(g, [](double t) { return 1.0 / (1.0 + t); });
    const GridFunction r = rearrange(dec);
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK(r[k] == doctest::Approx(dec[k]).epsilon(1e-12));

    std::mt19937_64 rng(2);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> v(g.size());
    for (auto& x : v)
        x = N(rng);
    const GridFunction rr = rearrange(GridFunction(g, v));
    for (std::size_t k = 1; k < g.size(); ++k)
        CHECK(rr[k] <= rr[k - 1]);
    CHECK(rr[0] == doctest::Approx(sup_abs(GridFunction(g, v))));
}

TEST_CASE("with_moment rejects a wrong closed form")
{
    CHECK_THROWS_AS(WeightFamily::log().with_moment([](double t) { return t; }), InvalidArgument);
}
