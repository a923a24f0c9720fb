#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace interpkit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
// One row per grid node, one column per coordinate of the pair.
using NodeField = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

//
// Geometric grid t_k = t_min r^k on [t_min, t_max].
//
// Integrals against ds/s use the left rule over k = 0..n-2, so the last
// node never carries Haar weight. Copies share the node storage.
//
class LogGrid {
public:
    LogGrid(double t_min, double t_max, std::size_t n_nodes);

    double t_min() const { return d_->t_min; }
    double t_max() const { return d_->t_max; }
    std::size_t size() const { return d_->t.size(); }
    // number of nodes that carry quadrature weight
    std::size_t quadrature_size() const { return d_->t.size() - 1; }
    double ratio() const { return d_->r; }
    double haar_step() const { return d_->delta; }

    double operator[](std::size_t k) const { return d_->t[k]; }
    const std::vector<double>& nodes() const { return d_->t; }
    // sigma_k = t_{k+1} - t_k, length n-1
    const std::vector<double>& lebesgue_steps() const { return d_->sigma; }

    // Index of the node equal to 1, if the grid has one (snapped exactly).
    std::optional<std::size_t> unit_index() const { return d_->unit; }
    std::size_t unit_index_or_throw() const;

    // First node with t_k >= multiplier * t_min.
    std::size_t burn_in_index(double multiplier) const;

    bool operator==(const LogGrid& o) const;

private:
    struct Data {
        double t_min, t_max, r, delta;
        std::vector<double> t, sigma;
        std::optional<std::size_t> unit;
    };
    std::shared_ptr<const Data> d_;
};

LogGrid make_grid(double t_min, double t_max, std::size_t n_nodes);

// Grid with haar step close to `step` and an odd node count, so that a
// symmetric window contains t = 1.
LogGrid make_grid_with_step(double t_min, double t_max, double step);

class GridFunction {
public:
    GridFunction(LogGrid grid, std::vector<double> values);

    static GridFunction constant(const LogGrid& grid, double c);
    static GridFunction sample(const LogGrid& grid, const std::function<double(double)>& f);

    const LogGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return v_; }
    std::size_t size() const { return v_.size(); }
    double operator[](std::size_t k) const { return v_[k]; }

    GridFunction operator+(const GridFunction& o) const;
    GridFunction operator-(const GridFunction& o) const;
    GridFunction operator*(const GridFunction& o) const;
    GridFunction operator*(double a) const;
    GridFunction abs() const;

private:
    LogGrid grid_;
    std::vector<double> v_;
};

// sum_{k<n-1} g_k Delta
double integrate_haar(const GridFunction& g);
Vec integrate_haar(const LogGrid& grid, const NodeField& u);

// value at t_k is sum_{j<k} g_j Delta
GridFunction cumulative_haar(const GridFunction& g);
NodeField cumulative_haar(const LogGrid& grid, const NodeField& u);

// tail_moment + sum_{j<k} g_j sigma_j
double integrate_lebesgue_prefix(const GridFunction& g, std::size_t k, double tail_moment);

} // namespace interpkit
