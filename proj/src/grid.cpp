#include "interpkit/grid.hpp"

#include <cmath>
#include <string>

#include "interpkit/errors.hpp"

namespace interpkit {

LogGrid::LogGrid(double t_min, double t_max, std::size_t n_nodes)
{
    if (!(t_min > 0.0) || !std::isfinite(t_min))
        throw InvalidArgument("make_grid: t_min must be positive and finite");
    if (!(t_max > t_min) || !std::isfinite(t_max))
        throw InvalidArgument("make_grid: t_max must exceed t_min");
    if (n_nodes < 2)
        throw InvalidArgument("make_grid: n_nodes must be >= 2");

    auto d = std::make_shared<Data>();
    d->t_min = t_min;
    d->t_max = t_max;
    const double lo = std::log(t_min);
    const double hi = std::log(t_max);
    d->delta = (hi - lo) / double(n_nodes - 1);
    d->r = std::exp(d->delta);
    if (!(d->r > 1.0))
        throw InvalidArgument("make_grid: ratio underflows to 1");

    d->t.resize(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k)
        d->t[k] = std::exp(lo + double(k) * d->delta);
    d->t.front() = t_min;
    d->t.back() = t_max;

    // snap the node at 1 so that log(1) = 0 and Gw(1) = 0 hold exactly
    const double kstar = std::round(-lo / d->delta);
    if (kstar >= 0 && kstar < double(n_nodes)) {
        const double off = lo + kstar * d->delta;
        if (std::abs(off) <= 1e-10 * std::max(1.0, std::abs(lo))) {
            d->unit = std::size_t(kstar);
            d->t[*d->unit] = 1.0;
        }
    }

    d->sigma.resize(n_nodes - 1);
    for (std::size_t k = 0; k + 1 < n_nodes; ++k) {
        d->sigma[k] = d->t[k + 1] - d->t[k];
        if (!(d->sigma[k] > 0.0))
            throw InvalidArgument("make_grid: nodes not strictly increasing");
    }
    d_ = std::move(d);
}

std::size_t LogGrid::unit_index_or_throw() const
{
    if (!d_->unit)
        throw InvalidArgument("grid does not contain t = 1 as a node");
    return *d_->unit;
}

std::size_t LogGrid::burn_in_index(double multiplier) const
{
    const double cut = multiplier * d_->t_min;
    std::size_t k = 0;
    // tolerate rounding in t_min r^k
    while (k + 1 < d_->t.size() && d_->t[k] < cut * (1.0 - 1e-12))
        ++k;
    return k;
}

bool LogGrid::operator==(const LogGrid& o) const
{
    if (d_ == o.d_)
        return true;
    return d_->t_min == o.d_->t_min && d_->t_max == o.d_->t_max && d_->t.size() == o.d_->t.size();
}

LogGrid make_grid(double t_min, double t_max, std::size_t n_nodes)
{
    return LogGrid(t_min, t_max, n_nodes);
}

LogGrid make_grid_with_step(double t_min, double t_max, double step)
{
    if (!(step > 0.0))
        throw InvalidArgument("make_grid_with_step: step must be positive");
    if (!(t_min > 0.0) || !(t_max > t_min))
        throw InvalidArgument("make_grid_with_step: bad window");
    const double span = std::log(t_max / t_min);
    std::size_t half = std::size_t(std::llround(span / (2.0 * step)));
    if (half < 1)
        half = 1;
    return LogGrid(t_min, t_max, 2 * half + 1);
}

GridFunction::GridFunction(LogGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), v_(std::move(values))
{
    if (v_.size() != grid_.size())
        throw InvalidArgument("GridFunction: length " + std::to_string(v_.size()) + " does not match grid size " +
                              std::to_string(grid_.size()));
    for (std::size_t k = 0; k < v_.size(); ++k)
        if (!std::isfinite(v_[k]))
            throw InvalidArgument("GridFunction: non-finite value at node " + std::to_string(k));
}

GridFunction GridFunction::constant(const LogGrid& grid, double c)
{
    return GridFunction(grid, std::vector<double>(grid.size(), c));
}

GridFunction GridFunction::sample(const LogGrid& grid, const std::function<double(double)>& f)
{
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = f(grid[k]);
    return GridFunction(grid, std::move(v));
}

namespace {

void check_same(const GridFunction& a, const GridFunction& b)
{
    if (!(a.grid() == b.grid()))
        throw InvalidArgument("grid functions live on different grids");
}

} // namespace

GridFunction GridFunction::operator+(const GridFunction& o) const
{
    check_same(*this, o);
    std::vector<double> v(v_.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = v_[k] + o.v_[k];
    return GridFunction(grid_, std::move(v));
}

GridFunction GridFunction::operator-(const GridFunction& o) const
{
    check_same(*this, o);
    std::vector<double> v(v_.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = v_[k] - o.v_[k];
    return GridFunction(grid_, std::move(v));
}

GridFunction GridFunction::operator*(const GridFunction& o) const
{
    check_same(*this, o);
    std::vector<double> v(v_.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = v_[k] * o.v_[k];
    return GridFunction(grid_, std::move(v));
}

GridFunction GridFunction::operator*(double a) const
{
    std::vector<double> v(v_.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = a * v_[k];
    return GridFunction(grid_, std::move(v));
}

GridFunction GridFunction::abs() const
{
    std::vector<double> v(v_.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = std::abs(v_[k]);
    return GridFunction(grid_, std::move(v));
}

double integrate_haar(const GridFunction& g)
{
    const double delta = g.grid().haar_step();
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < g.size(); ++k)
        s += g[k] * delta;
    return s;
}

Vec integrate_haar(const LogGrid& grid, const NodeField& u)
{
    if (std::size_t(u.rows()) != grid.size())
        throw InvalidArgument("integrate_haar: field rows do not match grid");
    const double delta = grid.haar_step();
    Vec s = Vec::Zero(u.cols());
    for (std::size_t k = 0; k + 1 < grid.size(); ++k)
        s += u.row(Eigen::Index(k)).transpose() * delta;
    return s;
}

GridFunction cumulative_haar(const GridFunction& g)
{
    const double delta = g.grid().haar_step();
    std::vector<double> c(g.size(), 0.0);
    double s = 0.0;
    for (std::size_t k = 1; k < g.size(); ++k) {
        s += g[k - 1] * delta;
        c[k] = s;
    }
    return GridFunction(g.grid(), std::move(c));
}

NodeField cumulative_haar(const LogGrid& grid, const NodeField& u)
{
    if (std::size_t(u.rows()) != grid.size())
        throw InvalidArgument("cumulative_haar: field rows do not match grid");
    const double delta = grid.haar_step();
    NodeField c = NodeField::Zero(u.rows(), u.cols());
    for (Eigen::Index k = 1; k < u.rows(); ++k)
        c.row(k) = c.row(k - 1) + u.row(k - 1) * delta;
    return c;
}

double integrate_lebesgue_prefix(const GridFunction& g, std::size_t k, double tail_moment)
{
    if (k >= g.size())
        throw InvalidArgument("integrate_lebesgue_prefix: node index out of range");
    const auto& sigma = g.grid().lebesgue_steps();
    double s = tail_moment;
    for (std::size_t j = 0; j < k; ++j)
        s += g[j] * sigma[j];
    return s;
}

} // namespace interpkit
