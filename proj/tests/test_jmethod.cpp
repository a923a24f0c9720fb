#include <cmath>
#include <random>

#include "doctest.h"

#include "interpkit/errors.hpp"
#include "interpkit/jmethod.hpp"

using namespace interpkit;

namespace {

Vec vec(std::initializer_list<double> v)
{
    Vec x(Eigen::Index(v.size()));
    Eigen::Index i = 0;
    for (double a : v)
        x[i++] = a;
    return x;
}

Vec gaussian(std::mt19937_64& rng, int d)
{
    std::normal_distribution<double> N(0.0, 1.0);
    Vec v(d);
    for (int i = 0; i < d; ++i)
        v[i] = N(rng);
    return v;
}

Vec positive(std::mt19937_64& rng, int d)
{
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    Vec v(d);
    for (int i = 0; i < d; ++i)
        v[i] = std::exp(U(rng));
    return v;
}

SolverOptions serial()
{
    SolverOptions o;
    o.exec = Exec::Serial;
    return o;
}

} // namespace

TEST_CASE("ThetaQ validation")
{
    CHECK_THROWS_AS(ThetaQ::make(0.0, 2.0), InvalidArgument);
    CHECK_THROWS_AS(ThetaQ::make(1.0, 2.0), InvalidArgument);
    CHECK_THROWS_AS(ThetaQ::make(0.5, 0.5), InvalidArgument);
    CHECK(ThetaQ::make(0.5, 1.0).conjugate() == INFINITY);
    CHECK(ThetaQ::make_inf(0.5).conjugate() == 1.0);
    CHECK(ThetaQ::make(0.5, 4.0).conjugate() == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("phi_norm examples")
{
    const LogGrid g = make_grid(1e-4, 1e4, 161);
    const double theta = 0.3;
    const GridFunction tt = GridFunction::sample(g, [&](double t) { return std::pow(t, theta); });
    CHECK(phi_norm(tt, ThetaQ::make_inf(theta)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(phi_norm(GridFunction::constant(g, 0.0), ThetaQ::make(0.5, 2.0)) == 0.0);

    // (int s^-1 ds/s)^(1/2) = (int s^-2 ds)^(1/2) over the window
    const LogGrid fine = make_grid(1e-4, 1e4, 2001);
    const double exact = std::sqrt(1e4 - 1e-4);
    CHECK(phi_norm(GridFunction::constant(fine, 1.0), ThetaQ::make(0.5, 2.0)) == doctest::Approx(exact).epsilon(0.01));
}

TEST_CASE("phi_norm with the log weight is weaker")
{
    const LogGrid g = make_grid(1e-4, 1e4, 185);
    const GridFunction v = GridFunction::sample(g, [](double t) { return 1.0 / (1.0 + std::abs(std::log(t))); });
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> x(g.size());
        for (auto& a : x)
            a = gaussian(rng, 1)[0];
        const GridFunction h(g, x);
        for (double q : {1.0, 2.0, 3.5, double(INFINITY)}) {
            const ThetaQ tq = ThetaQ::make(0.4, q);
            CHECK(phi_norm(h, tq, v) <= phi_norm(h, tq));
        }
    }
}

TEST_CASE("Hardy inequalities on ensembles")
{
    const LogGrid g = make_grid(1e-4, 1e4, 737);
    const double d = g.haar_step();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const double theta = 0.1 + 0.8 * U(rng);
        const double q = (trial % 4 == 3) ? INFINITY : 1.0 + 3.0 * U(rng);
        const ThetaQ tq = ThetaQ::make(theta, q);
        // nonnegative bumps in log t
        const double c = std::log(1e-2) + std::log(1e4) * U(rng), w = 0.5 + 2.0 * U(rng);
        const GridFunction h = GridFunction::sample(g, [&](double t) {
            const double x = (std::log(t) - c) / w;
            return std::exp(-x * x) * std::pow(t, theta);
        });
        const GridFunction below = cumulative_haar(h);
        std::vector<double> above(g.size(), 0.0);
        double s = 0.0;
        for (std::size_t k = g.size() - 1; k-- > 0;) {
            s += h[k] / g[k] * d;
            above[k] = g[k] * s;
        }
        const double base = phi_norm(h, tq);
        CHECK(phi_norm(below, tq) <= base / theta * (1.0 + 2.0 * d));
        CHECK(phi_norm(GridFunction(g, above), tq) <= base / (1.0 - theta) * (1.0 + 2.0 * d));
    }
}

TEST_CASE("represent_fundamental places spikes at the thresholds")
{
    const LogGrid g = make_grid(1e-2, 1e2, 41);
    const std::size_t one = *g.unit_index();
    const Representation r = represent_fundamental(vec({2.0}), CouplePair::scalar(), g);
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK(r.u()(Eigen::Index(k), 0) == (k == one ? 2.0 / g.haar_step() : 0.0));
    CHECK(r.reconstruction_error() == 0.0);

    const Representation z = represent_fundamental(vec({0.0}), CouplePair::scalar(), g);
    CHECK(z.u().cwiseAbs().maxCoeff() == 0.0);

    // thresholds a_i / b_i = 1 and 16 on a grid of ratio 2
    const LogGrid h = make_grid(1.0 / 64.0, 64.0, 13);
    const CouplePair p = CouplePair::diagonal_l1(vec({1.0, 1.0}), vec({1.0, 1.0 / 16.0}));
    const Representation s = represent_fundamental(vec({1.0, 1.0}), p, h);
    Eigen::Index k0, k1;
    s.u().col(0).maxCoeff(&k0);
    s.u().col(1).maxCoeff(&k1);
    CHECK(h[std::size_t(k0)] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h[std::size_t(k1)] == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(s.u().cwiseAbs().sum() == doctest::Approx(2.0 / h.haar_step()).epsilon(1e-12));
    CHECK(s.reconstruction_error() <= 1e-15);
}

TEST_CASE("jnorm: scalar pair targets")
{
    const CouplePair p = CouplePair::scalar();
    const LogGrid g = make_grid(1e-8, 1e8, 1601);
    const JNormResult inf = jnorm(vec({1.0}), p, ThetaQ::make_inf(0.5), g, JMethod::Solver);
    CHECK(inf.value == doctest::Approx(0.25).epsilon(0.02));
    CHECK(inf.converged);
    CHECK(inf.lower_bound <= inf.value);

    const LogGrid h = make_grid(1e-4, 1e4, 185);
    const JNormResult one = jnorm(vec({1.0}), p, ThetaQ::make(0.5, 1.0), h, JMethod::Solver);
    CHECK(one.value == doctest::Approx(1.0).epsilon(0.005));
    const JNormResult fund = jnorm(vec({1.0}), p, ThetaQ::make(0.5, 1.0), h, JMethod::Fundamental);
    CHECK(fund.value == doctest::Approx(1.0).epsilon(1e-12));

    const JNormResult zero = jnorm(vec({0.0}), p, ThetaQ::make(0.5, 2.0), h, JMethod::Solver);
    CHECK(zero.value == 0.0);
    CHECK(zero.rep.u().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("jnorm: solver <= fundamental, reconstruction, certified gap")
{
    std::mt19937_64 rng(31);
    const LogGrid g = make_grid(1e-3, 1e3, 71);
    for (int trial = 0; trial < 24; ++trial) {
        const int d = 1 + trial % 3;
        const NormKind k0 = (trial / 3 & 1) ? NormKind::Linf : NormKind::L1;
        const NormKind k1 = (trial / 6 & 1) ? NormKind::Linf : NormKind::L1;
        const CouplePair p(NormSpec(k0, positive(rng, d)), NormSpec(k1, positive(rng, d)));
        const double q = std::array<double, 4>{1.0, 2.0, 3.0, INFINITY}[std::size_t(trial % 4)];
        const ThetaQ tq = ThetaQ::make(0.3 + 0.05 * (trial % 7), q);
        const Vec f = gaussian(rng, d);
        CAPTURE(trial);
        const JNormResult s = jnorm(f, p, tq, g, JMethod::Solver, serial());
        CHECK(s.rep.reconstruction_error() <= 1e-10);
        if (p.is_l1_l1()) {
            const JNormResult fu = jnorm(f, p, tq, g, JMethod::Fundamental, serial());
            CHECK(s.value <= fu.value * (1.0 + 1e-12));
            CHECK(fu.rep.reconstruction_error() <= 1e-10);
        } else {
            CHECK_THROWS_AS(jnorm(f, p, tq, g, JMethod::Fundamental), Unsupported);
        }
        CHECK(s.lower_bound <= s.value * (1.0 + 1e-12));
        CHECK(s.value <= s.lower_bound * (1.0 + 1e-6));
        CHECK(s.value == doctest::Approx(s.rep.cost(tq)).epsilon(1e-12));
    }
}

TEST_CASE("jnorm: solver against the oracle on small instances")
{
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 24; ++trial) {
        const int d = 1 + trial % 2;
        const std::size_t n = 3 + std::size_t(trial % 5);
        const LogGrid g = make_grid(0.1, 10.0, n);
        const NormKind k0 = (trial / 2 & 1) ? NormKind::Linf : NormKind::L1;
        const NormKind k1 = (trial / 4 & 1) ? NormKind::Linf : NormKind::L1;
        const CouplePair p(NormSpec(k0, positive(rng, d)), NormSpec(k1, positive(rng, d)));
        const double q = std::array<double, 3>{1.0, 2.0, INFINITY}[std::size_t(trial % 3)];
        const ThetaQ tq = ThetaQ::make(0.5, q);
        const Vec f = gaussian(rng, d);
        CAPTURE(trial);
        const double s = jnorm(f, p, tq, g, JMethod::Solver, serial()).value;
        const double o = jnorm(f, p, tq, g, JMethod::Oracle, serial()).value;
        CHECK(std::abs(s - o) <= 0.005 * o);
    }
    CHECK_THROWS_AS(jnorm(vec({1.0}), CouplePair::scalar(), ThetaQ::make(0.5, 2.0), make_grid(0.1, 10.0, 8),
                          JMethod::Oracle),
                    Unsupported);
    CHECK_THROWS_AS(jnorm(vec({1.0, 1.0, 1.0}), CouplePair::diagonal_l1(Vec::Ones(3), Vec::Ones(3)),
                          ThetaQ::make(0.5, 2.0), make_grid(0.1, 10.0, 5), JMethod::Oracle),
                    Unsupported);
}

TEST_CASE("jnorm: scaling law of the scalar pair")
{
    const double a0 = 3.0, a1 = 0.5, theta = 0.3;
    const ThetaQ tq = ThetaQ::make(theta, 2.0);
    const LogGrid unit = make_grid(1e-6, 1e6, 277);
    const LogGrid shifted = make_grid(1e-6 * a0 / a1, 1e6 * a0 / a1, 277);
    const double base = jnorm(vec({1.0}), CouplePair::scalar(), tq, unit, JMethod::Solver).value;
    const double scaled = jnorm(vec({1.0}), CouplePair::scalar(a0, a1), tq, shifted, JMethod::Solver).value;
    CHECK(scaled == doctest::Approx(std::pow(a0, 1.0 - theta) * std::pow(a1, theta) * base).epsilon(0.01));
}

TEST_CASE("near_optimal_selector: homogeneity, determinism, certification")
{
    const LogGrid g = make_grid(1e-4, 1e4, 185);
    const CouplePair p = CouplePair::diagonal_l1(vec({1.0, 1.0}), vec({0.25, 4.0}));
    const ThetaQ tq = ThetaQ::make(0.5, 2.0);
    const Vec f = vec({0.7, -1.3});
    const Representation a = near_optimal_selector(f, p, tq, g);
    const Representation b = near_optimal_selector(f, p, tq, g);
    const Representation twice = near_optimal_selector(f * 2.0, p, tq, g);
    CHECK(a.u() == b.u());
    CHECK(twice.u() == a.u() * 2.0);
    const SolverOptions s = serial();
    CHECK(near_optimal_selector(f, p, tq, g, s).u() == a.u());

    const Representation z = near_optimal_selector(vec({0.0, 0.0}), p, tq, g);
    CHECK(z.cost(tq) == 0.0);

    const LogGrid h = make_grid(1e-4, 1e4, 185);
    const Representation spike = near_optimal_selector(vec({1.0}), CouplePair::scalar(), ThetaQ::make(0.5, 1.0), h);
    CHECK(spike.cost(ThetaQ::make(0.5, 1.0)) <= 2.0);

    SolverOptions starved;
    starved.max_iterations = 1;
    try {
        near_optimal_selector(vec({1.0}), CouplePair::scalar(), ThetaQ::make_inf(0.5), make_grid(1e-6, 1e6, 277),
                              starved);
        FAIL("expected a certification failure");
    } catch (const CertificationError& e) {
        CHECK(e.cost() > 2.0 * e.bound());
    }
}

TEST_CASE("impose_cancellations")
{
    const LogGrid g = make_grid(1e-4, 1e4, 185);
    const CouplePair p = CouplePair::diagonal_l1(vec({1.0, 1.0}), vec({0.25, 4.0}));
    const Representation r = near_optimal_selector(vec({1.0, 2.0}), p, ThetaQ::make(0.5, 2.0), g);
    const GridFunction one = GridFunction::constant(g, 1.0);
    const GridFunction lg = GridFunction::sample(g, [](double t) { return std::log(t); });

    const Representation c = impose_cancellations(r, {one, lg});
    Mat m(2, g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        m(0, Eigen::Index(k)) = 1.0;
        m(1, Eigen::Index(k)) = lg[k];
    }
    const Mat mom = haar_moments(g, m, c.u(), Exec::Serial);
    CHECK(mom.cwiseAbs().maxCoeff() <= 1e-12 * r.u().cwiseAbs().maxCoeff());
    CHECK(c.reconstruction_error() <= 1e-10);
    CHECK(c.target().cwiseAbs().maxCoeff() <= 1e-12);

    // already cancelled: unchanged
    const Representation again = impose_cancellations(c, {one, lg});
    CHECK((again.u() - c.u()).cwiseAbs().maxCoeff() <= 1e-12 * c.u().cwiseAbs().maxCoeff());

    const std::vector<std::vector<double>> centers{{-3.0}, {3.0}};
    const Representation pc = impose_cancellations(r, {one}, centers);
    CHECK(integrate_haar(g, pc.u()).cwiseAbs().maxCoeff() <= 1e-12);

    CHECK_THROWS_AS(impose_cancellations(r, {one, one}), NumericalError);
    CHECK_THROWS_AS(impose_cancellations(r, std::vector<GridFunction>(max_moments + 1, one)), InvalidArgument);
    CHECK_THROWS_AS(impose_cancellations(r, {GridFunction::constant(make_grid(1e-3, 1e3, 5), 1.0)}), InvalidArgument);
}
