#include <cmath>
#include <random>

#include "doctest.h"

#include "interpkit/errors.hpp"
#include "interpkit/pairs.hpp"

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

// min over all 2^d coordinate splits of ||x0||_0 + t ||x1||_1
double k_brute_l1(double t, const Vec& x, const Vec& a, const Vec& b)
{
    const int d = int(x.size());
    double best = INFINITY;
    for (int mask = 0; mask < (1 << d); ++mask) {
        double c = 0.0;
        for (int i = 0; i < d; ++i)
            c += (mask >> i & 1) ? a[i] * std::abs(x[i]) : t * b[i] * std::abs(x[i]);
        best = std::min(best, c);
    }
    return best;
}

// sup of ||Tx||/||x|| over the vertices of the source unit ball
double induced_by_vertices(const Mat& T, const NormSpec& src, const NormSpec& dst)
{
    const int d = int(src.dim());
    double best = 0.0;
    if (src.kind == NormKind::L1) {
        for (int i = 0; i < d; ++i) {
            Vec e = Vec::Zero(d);
            e[i] = 1.0 / src.scale[i];
            best = std::max(best, dst(T * e));
        }
    } else {
        for (int mask = 0; mask < (1 << d); ++mask) {
            Vec e(d);
            for (int i = 0; i < d; ++i)
                e[i] = ((mask >> i & 1) ? 1.0 : -1.0) / src.scale[i];
            best = std::max(best, dst(T * e));
        }
    }
    return best;
}

Vec positive(std::mt19937_64& rng, int d)
{
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    Vec v(d);
    for (int i = 0; i < d; ++i)
        v[i] = std::exp(U(rng));
    return v;
}

Vec gaussian(std::mt19937_64& rng, int d)
{
    std::normal_distribution<double> N(0.0, 1.0);
    Vec v(d);
    for (int i = 0; i < d; ++i)
        v[i] = N(rng);
    return v;
}

} // namespace

TEST_CASE("NormSpec validation and duality")
{
    CHECK_THROWS_AS(NormSpec(NormKind::L1, Vec()), InvalidArgument);
    CHECK_THROWS_AS(NormSpec(NormKind::L1, vec({1.0, 0.0})), InvalidArgument);
    CHECK_THROWS_AS(NormSpec(NormKind::L1, vec({1.0, -2.0})), InvalidArgument);
    CHECK_THROWS_AS(CouplePair(NormSpec(NormKind::L1, vec({1.0})), NormSpec(NormKind::L1, vec({1.0, 1.0}))),
                    InvalidArgument);

    const NormSpec n(NormKind::L1, vec({2.0, 4.0}));
    CHECK(n(vec({1.0, -1.0})) == 6.0);
    const NormSpec d = n.dual();
    CHECK(d.kind == NormKind::Linf);
    CHECK(d(vec({1.0, -1.0})) == 0.5);
    // <x, y> <= ||x|| ||y||_dual
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const Vec x = gaussian(rng, 2), y = gaussian(rng, 2);
        CHECK(std::abs(x.dot(y)) <= n(x) * d(y) * (1.0 + 1e-14));
    }
}

TEST_CASE("j_functional examples")
{
    // ||x||_0 = 3, ||x||_1 = 4
    const CouplePair p = CouplePair::scalar(3.0, 4.0);
    CHECK(j_functional(1.0, vec({1.0}), p) == 4.0);
    CHECK(j_functional(0.5, vec({1.0}), p) == 3.0);
    CHECK_THROWS_AS(j_functional(0.0, vec({1.0}), p), InvalidArgument);
}

TEST_CASE("k_functional and k_decompose examples")
{
    const CouplePair p = CouplePair::diagonal_l1(vec({1.0, 2.0}), vec({3.0, 1.0}));
    const Vec x = vec({1.0, 1.0});
    CHECK(k_functional(1.0, x, p) == 2.0);
    CHECK(k_functional(1.0, x, p) == k_brute_l1(1.0, x, vec({1.0, 2.0}), vec({3.0, 1.0})));
    CHECK(k_functional(1e6, x, p) == 3.0);
    CHECK(k_functional(1.0, Vec::Zero(2), p) == 0.0);

    const KSplit s = k_decompose(1.0, x, p);
    CHECK(s.x0 == vec({1.0, 0.0}));
    CHECK(s.x1 == vec({0.0, 1.0}));
    const KSplit big = k_decompose(1e6, x, p);
    CHECK(big.x0 == x);
    CHECK(big.x1 == Vec::Zero(2));
    const KSplit z = k_decompose(1.0, Vec::Zero(2), p);
    CHECK(z.x0 == Vec::Zero(2));
    CHECK(z.x1 == Vec::Zero(2));

    // tie a_i = t b_i goes to X0
    const KSplit tie = k_decompose(2.0, vec({1.0}), CouplePair::scalar(2.0, 1.0));
    CHECK(tie.x0[0] == 1.0);
}

TEST_CASE("k_decompose reconstructs and realizes K on the l1/l1 path")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> T(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + trial % 5;
        const Vec a = positive(rng, d), b = positive(rng, d), x = gaussian(rng, d);
        const CouplePair p = CouplePair::diagonal_l1(a, b);
        const double t = std::exp(T(rng));
        const KSplit s = k_decompose(t, x, p);
        CHECK((s.x0 + s.x1 - x).cwiseAbs().maxCoeff() == 0.0);
        const double k = k_functional(t, x, p);
        CHECK(p.norm0(s.x0) + t * p.norm1(s.x1) == doctest::Approx(k).epsilon(1e-14));
        CHECK(k == doctest::Approx(k_brute_l1(t, x, a, b)).epsilon(1e-14));
    }
}

TEST_CASE("K <= J, concavity, homogeneity and monotonicity in t")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> T(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + trial % 3;
        const Vec a = positive(rng, d), b = positive(rng, d), x = gaussian(rng, d);
        // cycle through the four endpoint kinds
        const NormKind k0 = (trial & 1) ? NormKind::Linf : NormKind::L1;
        const NormKind k1 = (trial & 2) ? NormKind::Linf : NormKind::L1;
        const CouplePair p(NormSpec(k0, a), NormSpec(k1, b));
        double t1 = std::exp(T(rng)), t3 = std::exp(T(rng));
        if (t1 > t3)
            std::swap(t1, t3);
        const double t2 = 0.3 * t1 + 0.7 * t3;
        const double K1 = k_functional(t1, x, p), K2 = k_functional(t2, x, p), K3 = k_functional(t3, x, p);
        CHECK(K1 <= j_functional(t1, x, p) * (1.0 + 1e-12));
        CHECK(K1 <= std::min(p.norm0(x), t1 * p.norm1(x)) * (1.0 + 1e-12));
        CHECK(K2 >= 0.3 * K1 + 0.7 * K3 - 1e-12 * (1.0 + K3));
        CHECK(K1 <= K3 * (1.0 + 1e-12));
        CHECK(k_functional(t1, x * 3.0, p) == doctest::Approx(3.0 * K1).epsilon(1e-12));
    }
}

TEST_CASE("K on mixed pairs against a direct search in two dimensions")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 12; ++trial) {
        const Vec a = positive(rng, 2), b = positive(rng, 2), x = gaussian(rng, 2);
        const NormKind k0 = (trial & 1) ? NormKind::Linf : NormKind::L1;
        const NormKind k1 = (trial & 2) ? NormKind::Linf : NormKind::L1;
        const CouplePair p(NormSpec(k0, a), NormSpec(k1, b));
        const double t = 0.7;
        // x0 = (s0 x_0, s1 x_1) + off-axis shifts; grid in the box spanned by 0 and x
        double best = INFINITY;
        const int m = 400;
        for (int i = -m / 2; i <= 3 * m / 2; ++i)
            for (int j = -m / 2; j <= 3 * m / 2; j += 1) {
                Vec x0(2);
                x0 << x[0] * i / double(m), x[1] * j / double(m);
                best = std::min(best, p.norm0(x0) + t * p.norm1(x - x0));
            }
        const double k = k_functional(t, x, p);
        CHECK(k <= best * (1.0 + 1e-12));
        CHECK(k >= best * (1.0 - 0.01));
    }
}

TEST_CASE("k_functional refuses large mixed pairs")
{
    const Vec one = Vec::Ones(4);
    const CouplePair p(NormSpec(NormKind::Linf, one), NormSpec(NormKind::L1, one));
    CHECK_THROWS_AS(k_functional(1.0, one, p), Unsupported);
    CHECK_THROWS_AS(k_decompose(1.0, one, p), Unsupported);
}

TEST_CASE("operator pair norms")
{
    const CouplePair p = CouplePair::diagonal_l1(vec({1.0, 2.0}), vec({3.0, 1.0}));
    const Mat I = Mat::Identity(2, 2);
    CHECK(operator_pair_norm(I, p, p).pair_norm == 1.0);
    CHECK(operator_pair_norm(2.0 * I, p, p).pair_norm == 2.0);
    CHECK_THROWS_AS(operator_pair_norm(Mat::Identity(3, 3), p, p), InvalidArgument);
    CHECK_THROWS_AS(induced_norm(I, NormSpec(NormKind::L1, Vec::Ones(2)), NormSpec(NormKind::Linf, Vec::Ones(2))),
                    Unsupported);

    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int ds = 1 + trial % 4, dd = 1 + (trial / 4) % 4;
        const NormKind kind = (trial & 1) ? NormKind::Linf : NormKind::L1;
        const NormSpec s0(kind, positive(rng, ds)), s1(kind, positive(rng, ds));
        const NormSpec d0(kind, positive(rng, dd)), d1(kind, positive(rng, dd));
        Mat T(dd, ds);
        for (int i = 0; i < dd; ++i)
            T.row(i) = gaussian(rng, ds).transpose();
        const PairOperator op = operator_pair_norm(T, CouplePair(s0, s1), CouplePair(d0, d1));
        CHECK(op.endpoint_norms[0] == doctest::Approx(induced_by_vertices(T, s0, d0)).epsilon(1e-13));
        CHECK(op.endpoint_norms[1] == doctest::Approx(induced_by_vertices(T, s1, d1)).epsilon(1e-13));
        CHECK(op.pair_norm == std::max(op.endpoint_norms[0], op.endpoint_norms[1]));
        for (int i = 0; i < 20; ++i) {
            const Vec x = gaussian(rng, ds);
            CHECK(d0(op.apply(x)) <= op.endpoint_norms[0] * s0(x) * (1.0 + 1e-13));
            CHECK(d1(op.apply(x)) <= op.endpoint_norms[1] * s1(x) * (1.0 + 1e-13));
        }
    }
}

TEST_CASE("support_intersection in two dimensions against polygon vertices")
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const NormKind ka = (trial & 1) ? NormKind::Linf : NormKind::L1;
        const NormKind kb = (trial & 2) ? NormKind::Linf : NormKind::L1;
        const NormSpec A(ka, positive(rng, 2)), B(kb, positive(rng, 2));
        const double alpha = std::exp(gaussian(rng, 1)[0]), beta = std::exp(gaussian(rng, 1)[0]);
        const Vec lam = gaussian(rng, 2);
        // dense boundary scan of the intersection
        double best = 0.0;
        const int m = 20000;
        for (int i = 0; i < m; ++i) {
            const double phi = 2.0 * M_PI * i / m;
            Vec dir(2);
            dir << std::cos(phi), std::sin(phi);
            const double r = std::min(alpha / A(dir), beta / B(dir));
            best = std::max(best, r * lam.dot(dir));
        }
        const double s = support_intersection(lam, A, alpha, B, beta);
        CHECK(s >= best * (1.0 - 1e-12));
        CHECK(s <= best * (1.0 + 1e-3) + 1e-12);
    }
}
