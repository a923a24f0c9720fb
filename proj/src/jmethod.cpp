#include "interpkit/jmethod.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "interpkit/errors.hpp"
#include "ipm.hpp"

namespace interpkit {

ThetaQ ThetaQ::make(double theta, double q)
{
    if (!(theta > 0.0 && theta < 1.0))
        throw InvalidArgument("theta must lie in (0, 1)");
    if (!(q >= 1.0))
        throw InvalidArgument("q must be >= 1");
    return ThetaQ{theta, q};
}

double ThetaQ::conjugate() const
{
    if (is_inf())
        return 1.0;
    if (q == 1.0)
        return std::numeric_limits<double>::infinity();
    return q / (q - 1.0);
}

std::string ThetaQ::q_label() const
{
    if (is_inf())
        return "inf";
    std::ostringstream os;
    os << q;
    return os.str();
}

Representation::Representation(LogGrid grid, CouplePair pair, NodeField u, Vec target)
    : grid_(std::move(grid)), pair_(std::move(pair)), u_(std::move(u)), target_(std::move(target))
{
    if (std::size_t(u_.rows()) != grid_.size() || std::size_t(u_.cols()) != pair_.dim())
        throw InvalidArgument("Representation: field shape does not match grid and pair");
    if (std::size_t(target_.size()) != pair_.dim())
        throw InvalidArgument("Representation: target dimension mismatch");
    if (!u_.allFinite())
        throw InvalidArgument("Representation: non-finite entries");
}

Vec Representation::reconstruct() const
{
    return integrate_haar(grid_, u_);
}

double Representation::reconstruction_error() const
{
    const double err = (reconstruct() - target_).cwiseAbs().maxCoeff();
    const double scale = target_.cwiseAbs().maxCoeff();
    return scale > 0.0 ? err / scale : err;
}

GridFunction Representation::j_profile(Exec exec) const
{
    std::vector<double> v;
    j_values(grid_, u_, pair_, v, exec);
    return GridFunction(grid_, std::move(v));
}

double Representation::cost(const ThetaQ& tq) const
{
    return phi_norm(j_profile(), tq);
}

namespace {

double phi_impl(const GridFunction& g, const ThetaQ& tq, const GridFunction* v)
{
    const LogGrid& grid = g.grid();
    if (v && !(v->grid() == grid))
        throw InvalidArgument("phi_norm: weight lives on a different grid");
    const std::size_t m = grid.quadrature_size();
    std::vector<double> a(m);
    double amax = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double vk = v ? (*v)[k] : 1.0;
        a[k] = std::pow(grid[k], -tq.theta) * std::abs(vk * g[k]);
        amax = std::max(amax, a[k]);
    }
    if (tq.is_inf() || amax == 0.0)
        return amax;
    // scaled to avoid overflow in a^q
    double s = 0.0;
    for (double x : a)
        s += std::pow(x / amax, tq.q);
    return amax * std::pow(s * grid.haar_step(), 1.0 / tq.q);
}

double pow_conj(double x, double qc)
{
    return qc == 1.0 ? x : std::pow(x, qc);
}

} // namespace

double phi_norm(const GridFunction& g, const ThetaQ& tq)
{
    return phi_impl(g, tq, nullptr);
}

double phi_norm(const GridFunction& g, const ThetaQ& tq, const GridFunction& v)
{
    return phi_impl(g, tq, &v);
}

Representation represent_fundamental(const Vec& f, const CouplePair& pair, const LogGrid& grid)
{
    if (!pair.is_l1_l1())
        throw Unsupported("represent_fundamental: pair must have weighted l1 endpoints");
    if (std::size_t(f.size()) != pair.dim())
        throw InvalidArgument("represent_fundamental: dimension mismatch");
    const std::size_t m = grid.quadrature_size();
    const double delta = grid.haar_step();
    NodeField u = NodeField::Zero(Eigen::Index(grid.size()), f.size());
    Vec prev = Vec::Zero(f.size());
    for (std::size_t k = 0; k < m; ++k) {
        const Vec x0 = k_decompose(grid[k], f, pair).x0;
        u.row(Eigen::Index(k)) = ((x0 - prev) / delta).transpose();
        prev = x0;
    }
    u.row(Eigen::Index(m - 1)) += ((f - prev) / delta).transpose();
    return Representation(grid, pair, std::move(u), f);
}

std::string to_string(JMethod m)
{
    switch (m) {
    case JMethod::Fundamental:
        return "fundamental";
    case JMethod::Solver:
        return "solver";
    case JMethod::Oracle:
        return "oracle";
    }
    return "?";
}

double dual_value(const Vec& lambda, const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid,
                  Exec exec)
{
    std::vector<double> prof;
    dual_profile(grid, lambda, pair, tq.theta, prof, exec);
    const double qc = tq.conjugate();
    double den = 0.0;
    if (std::isinf(qc)) {
        for (double p : prof)
            den = std::max(den, p);
    } else {
        double pmax = 0.0;
        for (double p : prof)
            pmax = std::max(pmax, p);
        if (pmax > 0.0) {
            double s = 0.0;
            for (double p : prof)
                s += pow_conj(p / pmax, qc);
            den = pmax * std::pow(s * grid.haar_step(), 1.0 / qc);
        }
    }
    if (!(den > 0.0))
        return 0.0;
    return lambda.dot(f) / den;
}

namespace {

// Exact support functions make the dual objective cheap; on the arc where
// <lambda, f> > 0 it is quasi-concave, so golden section after a scan is safe.
double oracle_value(const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid)
{
    if (pair.dim() == 1) {
        Vec lam(1);
        lam[0] = f[0] >= 0.0 ? 1.0 : -1.0;
        return dual_value(lam, f, pair, tq, grid);
    }
    auto G = [&](double a) {
        Vec lam(2);
        lam << std::cos(a), std::sin(a);
        return dual_value(lam, f, pair, tq, grid);
    };
    const int scan = 1440;
    const double h = 2.0 * std::numbers::pi / scan;
    int best = 0;
    double gbest = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < scan; ++j) {
        const double v = G(j * h);
        if (v > gbest) {
            gbest = v;
            best = j;
        }
    }
    double lo = (best - 1) * h, hi = (best + 1) * h;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - phi * (hi - lo), dd = lo + phi * (hi - lo);
    double gc = G(c), gd = G(dd);
    while (hi - lo > 1e-13) {
        if (gc >= gd) {
            hi = dd;
            dd = c;
            gd = gc;
            c = hi - phi * (hi - lo);
            gc = G(c);
        } else {
            lo = c;
            c = dd;
            gc = gd;
            dd = lo + phi * (hi - lo);
            gd = G(dd);
        }
    }
    return std::max({gbest, gc, gd});
}

Representation zero_rep(const CouplePair& pair, const LogGrid& grid)
{
    return Representation(grid, pair, NodeField::Zero(Eigen::Index(grid.size()), Eigen::Index(pair.dim())),
                          Vec::Zero(Eigen::Index(pair.dim())));
}

// Spread the (tiny) equality residual evenly so the sum hits f to rounding.
void project_sum(NodeField& u, const Vec& f, const LogGrid& grid)
{
    const Vec r = f - integrate_haar(grid, u);
    const std::size_t m = grid.quadrature_size();
    const Vec step = r / (double(m) * grid.haar_step());
    for (std::size_t k = 0; k < m; ++k)
        u.row(Eigen::Index(k)) += step.transpose();
}

// `strict` rejects runs that stop short of the requested gap; the selector
// instead certifies whatever the budget produced against the factor 2.
JNormResult run_solver(const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid,
                       const SolverOptions& opts, bool strict = true)
{
    if (f.cwiseAbs().maxCoeff() == 0.0)
        return JNormResult{0.0, zero_rep(pair, grid), 0.0, 0, true};

    // power-of-two normalization keeps selector(2f) = 2 selector(f) bitwise
    int ex = 0;
    std::frexp(f.cwiseAbs().maxCoeff(), &ex);
    const Vec fh = f.unaryExpr([ex](double v) { return std::ldexp(v, -ex); });

    NodeField start;
    if (pair.is_l1_l1())
        start = represent_fundamental(fh, pair, grid).u();
    else {
        // mass f/(m Delta) on every node
        start = NodeField::Zero(Eigen::Index(grid.size()), fh.size());
        const std::size_t m = grid.quadrature_size();
        for (std::size_t k = 0; k < m; ++k)
            start.row(Eigen::Index(k)) = (fh / (double(m) * grid.haar_step())).transpose();
    }

    const detail::IpmResult r = detail::solve_ipm(fh, pair, tq, grid, start, opts);
    const double gap = r.upper > 0.0 ? (r.upper - r.lower) / r.upper : 0.0;
    if (strict && !r.converged && !(gap <= 1e-6)) {
        std::ostringstream os;
        os << "J-norm solver did not converge after " << r.iterations << " iterations: upper " << r.upper
           << ", dual bound " << r.lower << ", relative gap " << gap << ", KKT residual " << r.residual
           << ", complementarity " << r.mu;
        throw NumericalError(os.str());
    }

    NodeField u = r.u.unaryExpr([ex](double v) { return std::ldexp(v, ex); });
    project_sum(u, f, grid);
    Representation rep(grid, pair, std::move(u), f);
    const double value = rep.cost(tq);
    return JNormResult{value, std::move(rep), std::ldexp(r.lower, ex), r.iterations, r.converged};
}

} // namespace

JNormResult jnorm(const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid, JMethod method,
                  const SolverOptions& opts)
{
    if (std::size_t(f.size()) != pair.dim())
        throw InvalidArgument("jnorm: dimension mismatch");
    if (!f.allFinite())
        throw InvalidArgument("jnorm: non-finite f");
    switch (method) {
    case JMethod::Fundamental: {
        Representation rep = represent_fundamental(f, pair, grid);
        const double v = rep.cost(tq);
        return JNormResult{v, std::move(rep), 0.0, 0, true};
    }
    case JMethod::Solver:
        return run_solver(f, pair, tq, grid, opts);
    case JMethod::Oracle: {
        if (pair.dim() > 2 || grid.size() > 7)
            throw Unsupported("oracle refused: needs dim <= 2 and n_nodes <= 7 (got dim " + std::to_string(pair.dim()) +
                              ", n_nodes " + std::to_string(grid.size()) + ")");
        JNormResult r = run_solver(f, pair, tq, grid, opts);
        r.value = f.cwiseAbs().maxCoeff() == 0.0 ? 0.0 : oracle_value(f, pair, tq, grid);
        r.lower_bound = r.value;
        return r;
    }
    }
    throw InvalidArgument("jnorm: unknown method");
}

Representation near_optimal_selector(const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid,
                                     const SolverOptions& opts)
{
    if (std::size_t(f.size()) != pair.dim())
        throw InvalidArgument("near_optimal_selector: dimension mismatch");
    if (!f.allFinite())
        throw InvalidArgument("near_optimal_selector: non-finite f");
    JNormResult r = run_solver(f, pair, tq, grid, opts, false);
    if (!(r.value <= selector_factor * r.lower_bound)) {
        std::ostringstream os;
        os << "selector certification failed after " << r.iterations << " iterations: cost " << r.value << " > " << selector_factor << " x lower bound "
           << r.lower_bound;
        throw CertificationError(os.str(), r.value, r.lower_bound);
    }
    return std::move(r.rep);
}

std::vector<double> cancellation_centers(const LogGrid& grid, std::size_t m)
{
    const double lo = std::log(grid.t_min()), hi = std::log(grid.t_max());
    const double a = lo + 0.25 * (hi - lo), b = hi - 0.25 * (hi - lo);
    std::vector<double> c(m);
    for (std::size_t j = 0; j < m; ++j)
        c[j] = a + (b - a) * (double(j) + 0.5) / double(m);
    return c;
}

namespace {

// Subtract bumps centred at `centers` from the listed columns of u so the
// moments of those columns vanish.
void cancel_columns(const LogGrid& grid, const Mat& mom, const std::vector<double>& centers, NodeField& u,
                    const std::vector<Eigen::Index>& cols)
{
    const Eigen::Index m = mom.rows(), n = Eigen::Index(grid.size());
    Mat bumps(m, n);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double x = std::log(grid[std::size_t(k)]) - centers[std::size_t(j)];
            bumps(j, k) = std::exp(-0.5 * x * x);
        }
    }
    // A(i, j) = sum_k m_i(t_k) beta_j(t_k) Delta
    const double delta = grid.haar_step();
    Mat A = Mat::Zero(m, m);
    for (std::size_t k = 0; k < grid.quadrature_size(); ++k)
        A += (mom.col(Eigen::Index(k)) * bumps.col(Eigen::Index(k)).transpose()) * delta;
    const Eigen::FullPivLU<Mat> lu(A);
    if (lu.rank() < m || lu.rcond() < 1e-13)
        throw NumericalError("impose_cancellations: singular moment system (rcond " + std::to_string(lu.rcond()) + ")");

    NodeField sub(u.rows(), Eigen::Index(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        sub.col(Eigen::Index(c)) = u.col(cols[c]);
    // second pass mops up rounding from the first
    for (int pass = 0; pass < 2; ++pass) {
        const Mat mu = haar_moments(grid, mom, sub, Exec::Serial);
        if (mu.cwiseAbs().maxCoeff() == 0.0)
            break;
        const Mat c = lu.solve(mu);
        sub -= NodeField(bumps.transpose() * c);
    }
    for (std::size_t c = 0; c < cols.size(); ++c)
        u.col(cols[c]) = sub.col(Eigen::Index(c));
}

Mat moment_matrix(const LogGrid& grid, const std::vector<GridFunction>& moments)
{
    if (moments.size() > max_moments)
        throw InvalidArgument("impose_cancellations: at most " + std::to_string(max_moments) + " moments");
    Mat mom(Eigen::Index(moments.size()), Eigen::Index(grid.size()));
    for (std::size_t j = 0; j < moments.size(); ++j) {
        if (!(moments[j].grid() == grid))
            throw InvalidArgument("impose_cancellations: moment lives on a different grid");
        for (std::size_t k = 0; k < grid.size(); ++k)
            mom(Eigen::Index(j), Eigen::Index(k)) = moments[j][k];
    }
    return mom;
}

} // namespace

Representation impose_cancellations(const Representation& rep, const std::vector<GridFunction>& moments)
{
    const LogGrid& grid = rep.grid();
    if (moments.empty())
        return rep;
    const Mat mom = moment_matrix(grid, moments);
    NodeField u = rep.u();
    std::vector<Eigen::Index> cols(std::size_t(u.cols()));
    for (Eigen::Index c = 0; c < u.cols(); ++c)
        cols[std::size_t(c)] = c;
    cancel_columns(grid, mom, cancellation_centers(grid, moments.size()), u, cols);
    Vec target = integrate_haar(grid, u);
    return Representation(grid, rep.pair(), std::move(u), std::move(target));
}

Representation impose_cancellations(const Representation& rep, const std::vector<GridFunction>& moments,
                                    const std::vector<std::vector<double>>& centers)
{
    const LogGrid& grid = rep.grid();
    if (moments.empty())
        return rep;
    const Mat mom = moment_matrix(grid, moments);
    NodeField u = rep.u();
    if (centers.size() != std::size_t(u.cols()))
        throw InvalidArgument("impose_cancellations: need one center list per coordinate");
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        if (centers[std::size_t(c)].size() != moments.size())
            throw InvalidArgument("impose_cancellations: need one center per moment");
        cancel_columns(grid, mom, centers[std::size_t(c)], u, {c});
    }
    Vec target = integrate_haar(grid, u);
    return Representation(grid, rep.pair(), std::move(u), std::move(target));
}

} // namespace interpkit
