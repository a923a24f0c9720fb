#include "interpkit/kernels.hpp"

#include <cmath>

#include "interpkit/errors.hpp"

namespace interpkit {

namespace {

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

} // namespace

void j_values(const LogGrid& grid, const NodeField& u, const CouplePair& pair, std::vector<double>& out, Exec exec)
{
    if (std::size_t(u.rows()) != grid.size() || std::size_t(u.cols()) != pair.dim())
        throw InvalidArgument("j_values: field shape does not match grid/pair");
    out.assign(grid.size(), 0.0);
    node_loop(exec, grid.size(), [&](std::size_t k) {
        const Vec x = u.row(Eigen::Index(k)).transpose();
        out[k] = std::max(pair.norm0(x), grid[k] * pair.norm1(x));
    });
}

void dual_profile(const LogGrid& grid, const Vec& lambda, const CouplePair& pair, double theta,
                  std::vector<double>& out, Exec exec)
{
    if (std::size_t(lambda.size()) != pair.dim())
        throw InvalidArgument("dual_profile: dimension mismatch");
    const std::size_t m = grid.quadrature_size();
    out.assign(m, 0.0);
    node_loop(exec, m, [&](std::size_t k) {
        const double t = grid[k];
        const double tt = std::pow(t, theta);
        // {x : t^-theta |x|_0 <= 1, t^(1-theta) |x|_1 <= 1}
        out[k] = support_intersection(lambda, pair.norm0, tt, pair.norm1, tt / t);
    });
}

Mat haar_moments(const LogGrid& grid, const Mat& moments, const NodeField& u, Exec exec)
{
    if (std::size_t(moments.cols()) != grid.size() || std::size_t(u.rows()) != grid.size())
        throw InvalidArgument("haar_moments: shapes do not match grid");
    const double delta = grid.haar_step();
    const std::size_t m = grid.quadrature_size();
    Mat out = Mat::Zero(moments.rows(), u.cols());
    node_loop(exec, std::size_t(moments.rows()), [&](std::size_t j) {
        for (std::size_t k = 0; k < m; ++k)
            out.row(Eigen::Index(j)) += (moments(Eigen::Index(j), Eigen::Index(k)) * delta) * u.row(Eigen::Index(k));
    });
    return out;
}

} // namespace interpkit
