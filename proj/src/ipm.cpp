#include "ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

#include "interpkit/errors.hpp"

namespace interpkit::detail {

namespace {

using Dense = Eigen::MatrixXd;

template <typename Body>
void node_loop(Exec exec, std::size_t n, Body&& body)
{
    if (exec == Exec::Parallel) {
        const long nn = long(n);
#pragma omp parallel for schedule(static)
        for (long k = 0; k < nn; ++k)
            body(std::size_t(k));
    } else {
        for (std::size_t k = 0; k < n; ++k)
            body(k);
    }
}

// largest a in (0, 1] with v + a dv >= 0 componentwise (1 if never binding)
double max_step(const Vec& v, const Vec& dv)
{
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0)
            a = std::min(a, -v[i] / dv[i]);
    return a;
}

struct Problem {
    std::size_t d = 0, nb = 0, mr = 0, m = 0;   // dim, block vars, rows per node, nodes
    bool inf = false;
    double q = 1.0, delta = 0.0;
    std::vector<Dense> G;                        // per node, mr x nb
    Vec gc;                                      // coupling to the global bound, per row
};

Problem build(const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid)
{
    Problem P;
    P.d = pair.dim();
    P.nb = 2 * P.d + 1;
    P.inf = tq.is_inf();
    P.q = tq.q;
    P.delta = grid.haar_step();
    P.m = grid.quadrature_size();
    const std::size_t r0 = pair.norm0.kind == NormKind::L1 ? 1 : P.d;
    const std::size_t r1 = pair.norm1.kind == NormKind::L1 ? 1 : P.d;
    P.mr = 2 * P.d + r0 + r1 + (P.inf ? 1 : 0);
    P.gc = Vec::Zero(Eigen::Index(P.mr));
    if (P.inf)
        P.gc[Eigen::Index(P.mr - 1)] = -1.0;

    const Eigen::Index d = Eigen::Index(P.d), e = 2 * d;
    P.G.resize(P.m);
    for (std::size_t k = 0; k < P.m; ++k) {
        const double t = grid[k];
        const double w = std::pow(t, -tq.theta);
        Dense G = Dense::Zero(Eigen::Index(P.mr), Eigen::Index(P.nb));
        for (Eigen::Index i = 0; i < d; ++i) {
            G(i, i) = 1.0;
            G(i, d + i) = -1.0;
            G(d + i, i) = -1.0;
            G(d + i, d + i) = -1.0;
        }
        Eigen::Index row = 2 * d;
        auto add_norm = [&](const NormSpec& ns, double factor) {
            if (ns.kind == NormKind::L1) {
                for (Eigen::Index i = 0; i < d; ++i)
                    G(row, d + i) = factor * ns.scale[i];
                G(row, e) = -1.0;
                ++row;
            } else {
                for (Eigen::Index i = 0; i < d; ++i) {
                    G(row, d + i) = factor * ns.scale[i];
                    G(row, e) = -1.0;
                    ++row;
                }
            }
        };
        add_norm(pair.norm0, w);
        add_norm(pair.norm1, w * t);
        if (P.inf)
            G(row, e) = 1.0;
        P.G[k] = std::move(G);
    }
    return P;
}

double phi_cost(const Problem& P, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid, const NodeField& u)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < P.m; ++k) {
        const Vec x = u.row(Eigen::Index(k)).transpose();
        const double j = std::pow(grid[k], -tq.theta) * std::max(pair.norm0(x), grid[k] * pair.norm1(x));
        if (P.inf)
            acc = std::max(acc, j);
        else
            acc += std::pow(j, P.q) * P.delta;
    }
    return P.inf ? acc : std::pow(acc, 1.0 / P.q);
}

} // namespace

IpmResult solve_ipm(const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid,
                    const NodeField& start, const SolverOptions& opts)
{
    const Problem P = build(pair, tq, grid);
    const std::size_t M = P.m;
    const Eigen::Index d = Eigen::Index(P.d), nb = Eigen::Index(P.nb), mr = Eigen::Index(P.mr);
    const Eigen::Index e = 2 * d;
    const double delta = P.delta;
    const Exec exec = opts.exec;

    // state
    std::vector<Vec> x(M), sl(M), z(M);
    double gs = 0.0;   // global bound, q = inf only
    Vec nu = Vec::Zero(d);

    const Vec ones = Vec::Ones(d);
    for (std::size_t k = 0; k < M; ++k) {
        const double t = grid[k];
        const double w = std::pow(t, -tq.theta);
        const double dk = 1.0 / (w * std::max(pair.norm0(ones), t * pair.norm1(ones)));
        Vec xk = Vec::Zero(nb);
        xk.head(d) = start.row(Eigen::Index(k)).transpose();
        xk.segment(d, d) = xk.head(d).cwiseAbs().array() + dk;
        xk[e] = 0.0;
        const Vec g = P.G[k] * xk;
        double emax = 0.0;
        for (Eigen::Index r = 2 * d; r < mr - (P.inf ? 1 : 0); ++r)
            emax = std::max(emax, g[r]);
        xk[e] = emax + 1.0;
        x[k] = std::move(xk);
        if (P.inf)
            gs = std::max(gs, x[k][e]);
    }
    if (P.inf)
        gs += 1.0;
    for (std::size_t k = 0; k < M; ++k) {
        sl[k] = -(P.G[k] * x[k] + P.gc * gs);
        z[k] = Vec::Ones(mr);
    }
    const double m_total = double(M) * double(mr);

    std::vector<Vec> grad(M), rd(M), rin(M);
    std::vector<Vec> hdiag(M);
    std::vector<Eigen::LDLT<Dense>> fac(M);
    std::vector<Vec> Q(M);
    std::vector<Dense> R(M);
    std::vector<Vec> Dw(M);

    IpmResult res;
    res.lower = 0.0;
    double best_upper = std::numeric_limits<double>::infinity();
    NodeField best_u;
    Vec best_nu = nu;

    auto current_u = [&]() {
        NodeField u = NodeField::Zero(Eigen::Index(grid.size()), d);
        for (std::size_t k = 0; k < M; ++k)
            u.row(Eigen::Index(k)) = x[k].head(d).transpose();
        return u;
    };

    int it = 0;
    for (; it <= opts.max_iterations; ++it) {
        // objective derivatives
        node_loop(exec, M, [&](std::size_t k) {
            Vec g = Vec::Zero(nb), h = Vec::Zero(nb);
            if (!P.inf) {
                if (P.q == 1.0) {
                    g[e] = delta;
                } else {
                    const double ev = x[k][e];
                    g[e] = P.q * delta * std::pow(ev, P.q - 1.0);
                    h[e] = P.q * (P.q - 1.0) * delta * std::pow(ev, P.q - 2.0);
                }
            }
            grad[k] = std::move(g);
            hdiag[k] = std::move(h);
        });

        // residuals
        node_loop(exec, M, [&](std::size_t k) {
            Vec r = grad[k] + P.G[k].transpose() * z[k];
            r.head(d) += delta * nu;
            rd[k] = std::move(r);
            rin[k] = P.G[k] * x[k] + P.gc * gs + sl[k];
        });
        double rds = P.inf ? 1.0 : 0.0;
        Vec req = -f;
        double gap = 0.0, dres = 0.0;
        for (std::size_t k = 0; k < M; ++k) {
            if (P.inf)
                rds += P.gc.dot(z[k]);
            req += delta * x[k].head(d);
            gap += sl[k].dot(z[k]);
            dres = std::max(dres, rd[k].cwiseAbs().maxCoeff());
        }
        if (P.inf)
            dres = std::max(dres, std::abs(rds));
        const double mu = gap / m_total;
        res.residual = std::max(dres, req.cwiseAbs().maxCoeff());
        res.mu = mu;

        // certified bounds
        const NodeField u = current_u();
        const double upper = phi_cost(P, pair, tq, grid, u);
        double lower = 0.0;
        if (nu.cwiseAbs().maxCoeff() > 0.0) {
            lower = std::max(dual_value(nu, f, pair, tq, grid, exec), dual_value(-nu, f, pair, tq, grid, exec));
        }
        if (upper < best_upper) {
            best_upper = upper;
            best_u = u;
        }
        if (lower > res.lower) {
            res.lower = lower;
            best_nu = nu;
        }
        if (std::getenv("INTERPKIT_IPM_TRACE"))
            std::fprintf(stderr, "ipm it %d upper %.12g lower %.12g mu %.3e res %.3e\n", it, upper, lower, mu,
                         res.residual);
        if (best_upper - res.lower <= opts.tolerance * best_upper) {
            res.converged = true;
            break;
        }
        if (it == opts.max_iterations)
            break;

        // Newton blocks: K_k = H + G^T D G
        node_loop(exec, M, [&](std::size_t k) {
            const Vec D = z[k].cwiseQuotient(sl[k]);
            Dense K = P.G[k].transpose() * D.asDiagonal() * P.G[k];
            K.diagonal() += hdiag[k];
            fac[k].compute(K);
            // badly scaled D late in the run can cost positivity; a small
            // local shift keeps the direction usable
            const double scale = K.diagonal().cwiseAbs().maxCoeff();
            for (double reg = 1e-14; reg <= 1e-8 && (fac[k].info() != Eigen::Success || !fac[k].isPositive());
                 reg *= 100.0) {
                Dense Kr = K;
                Kr.diagonal().array() += reg * scale;
                fac[k].compute(Kr);
            }
            if (P.inf)
                Q[k] = fac[k].solve(P.G[k].transpose() * D.cwiseProduct(P.gc));
            Dense At = Dense::Zero(nb, d);
            At.topRows(d) = delta * Dense::Identity(d, d);
            R[k] = fac[k].solve(At);
            Dw[k] = D;
        });
        // breakdown means the iterate is as good as double precision
        // allows; the caller judges the certified gap
        bool broken = false;
        for (std::size_t k = 0; k < M; ++k)
            if (fac[k].info() != Eigen::Success || !fac[k].isPositive())
                broken = true;
        if (broken)
            break;

        const Eigen::Index ng = P.inf ? 1 : 0;
        Dense S = Dense::Zero(ng + d, ng + d);
        {
            double kss = 0.0, ctq = 0.0;
            Dense ctr = Dense::Zero(1, d), ar = Dense::Zero(d, d);
            for (std::size_t k = 0; k < M; ++k) {
                ar += delta * R[k].topRows(d);
                if (P.inf) {
                    const Vec c = P.G[k].transpose() * Dw[k].cwiseProduct(P.gc);
                    kss += P.gc.dot(Dw[k].cwiseProduct(P.gc));
                    ctq += c.dot(Q[k]);
                    ctr += c.transpose() * R[k];
                }
            }
            if (P.inf) {
                S(0, 0) = kss - ctq;
                S.block(0, 1, 1, d) = -ctr;
                S.block(1, 0, d, 1) = -ctr.transpose();
            }
            S.bottomRightCorner(d, d) = -ar;
        }
        const Eigen::PartialPivLU<Dense> slu(S);

        struct Step {
            std::vector<Vec> dx, dsl, dz;
            double dgs = 0.0;
            Vec dnu;
        };

        // one Newton solve for a complementarity right-hand side rc_k
        auto solve = [&](const std::vector<Vec>& rc) {
            Step st;
            st.dx.resize(M);
            st.dsl.resize(M);
            st.dz.resize(M);
            std::vector<Vec> wv(M), p(M);
            node_loop(exec, M, [&](std::size_t k) {
                wv[k] = (rc[k] + z[k].cwiseProduct(rin[k])).cwiseQuotient(sl[k]);
                p[k] = fac[k].solve(-rd[k] - P.G[k].transpose() * wv[k]);
            });
            Vec rhs = Vec::Zero(ng + d);
            double bs = -rds;
            Vec bnu = -req;
            for (std::size_t k = 0; k < M; ++k) {
                if (P.inf) {
                    bs -= P.gc.dot(wv[k]);
                    const Vec c = P.G[k].transpose() * Dw[k].cwiseProduct(P.gc);
                    bs -= c.dot(p[k]);
                }
                bnu -= delta * p[k].head(d);
            }
            if (P.inf)
                rhs[0] = bs;
            rhs.tail(d) = bnu;
            const Vec sol = slu.solve(rhs);
            st.dgs = P.inf ? sol[0] : 0.0;
            st.dnu = sol.tail(d);
            node_loop(exec, M, [&](std::size_t k) {
                Vec dx = p[k] - R[k] * st.dnu;
                if (P.inf)
                    dx -= Q[k] * st.dgs;
                const Vec gdx = P.G[k] * dx + P.gc * st.dgs;
                st.dsl[k] = -rin[k] - gdx;
                st.dz[k] = wv[k] + Dw[k].cwiseProduct(gdx);
                st.dx[k] = std::move(dx);
            });
            return st;
        };

        auto step_length = [&](const Step& st) {
            double a = 1.0;
            for (std::size_t k = 0; k < M; ++k) {
                a = std::min(a, max_step(sl[k], st.dsl[k]));
                a = std::min(a, max_step(z[k], st.dz[k]));
            }
            return a;
        };

        // predictor
        std::vector<Vec> rc(M);
        for (std::size_t k = 0; k < M; ++k)
            rc[k] = -sl[k].cwiseProduct(z[k]);
        const Step aff = solve(rc);
        const double a_aff = step_length(aff);
        double gap_aff = 0.0;
        for (std::size_t k = 0; k < M; ++k)
            gap_aff += (sl[k] + a_aff * aff.dsl[k]).dot(z[k] + a_aff * aff.dz[k]);
        const double mu_aff = gap_aff / m_total;
        const double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);

        // corrector
        for (std::size_t k = 0; k < M; ++k)
            rc[k] = -sl[k].cwiseProduct(z[k]) - aff.dsl[k].cwiseProduct(aff.dz[k]) +
                    Vec::Constant(mr, sigma * mu);
        const Step st = solve(rc);
        const double a = std::min(1.0, 0.99 * step_length(st));
        if (!std::isfinite(a) || !st.dnu.allFinite() || !std::isfinite(st.dgs))
            break;

        for (std::size_t k = 0; k < M; ++k) {
            x[k] += a * st.dx[k];
            sl[k] += a * st.dsl[k];
            z[k] += a * st.dz[k];
        }
        gs += a * st.dgs;
        nu += a * st.dnu;
    }

    res.iterations = it;
    res.u = best_u;
    res.nu = best_nu;
    res.upper = best_upper;
    return res;
}

} // namespace interpkit::detail
