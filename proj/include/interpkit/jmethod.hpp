#pragma once

#include <limits>
#include <string>
#include <vector>

#include "interpkit/grid.hpp"
#include "interpkit/kernels.hpp"
#include "interpkit/pairs.hpp"

namespace interpkit {

struct ThetaQ {
    double theta = 0.5;
    double q = 2.0;   // +infinity for the sup gauge

    static ThetaQ make(double theta, double q);
    static ThetaQ make_inf(double theta) { return make(theta, std::numeric_limits<double>::infinity()); }

    bool is_inf() const { return q == std::numeric_limits<double>::infinity(); }
    // Hoelder conjugate, 1 <-> inf
    double conjugate() const;
    std::string q_label() const;
};

//
// u_k on the grid with f = sum_{k<n-1} u_k Delta. The last node is kept in
// the field for alignment but carries no weight.
//
class Representation {
public:
    Representation(LogGrid grid, CouplePair pair, NodeField u, Vec target);

    const LogGrid& grid() const { return grid_; }
    const CouplePair& pair() const { return pair_; }
    const NodeField& u() const { return u_; }
    const Vec& target() const { return target_; }

    Vec reconstruct() const;
    // |reconstruct - target|_inf relative to |target|_inf (absolute when target = 0)
    double reconstruction_error() const;

    // J(t_k, u_k)
    GridFunction j_profile(Exec exec = Exec::Serial) const;
    double cost(const ThetaQ& tq) const;

private:
    LogGrid grid_;
    CouplePair pair_;
    NodeField u_;
    Vec target_;
};

// (sum_{k<n-1} (t_k^-theta |v_k g_k|)^q Delta)^(1/q), sup over k < n-1 when q = inf
double phi_norm(const GridFunction& g, const ThetaQ& tq);
double phi_norm(const GridFunction& g, const ThetaQ& tq, const GridFunction& v);

// u_k = (x0(t_k) - x0(t_{k-1}))/Delta with x0 from the exact K-split,
// boundary masses added at k = 0 and k = n-2 so the sum is exactly f.
Representation represent_fundamental(const Vec& f, const CouplePair& pair, const LogGrid& grid);

enum class JMethod { Fundamental, Solver, Oracle };
std::string to_string(JMethod m);

struct SolverOptions {
    int max_iterations = 200;
    double tolerance = 1e-9;   // relative certified gap (upper - dual) / upper
    Exec exec = Exec::Parallel;
};

struct JNormResult {
    double value = 0.0;
    Representation rep;
    // exact dual value <lambda, f>/D(lambda) at the solver multipliers
    double lower_bound = 0.0;
    int iterations = 0;
    bool converged = true;
};

JNormResult jnorm(const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid, JMethod method,
                  const SolverOptions& opts = {});

// Weak-duality bound for any lambda: <lambda, f> / (sum_k phi°_k(lambda)^q' Delta)^(1/q'),
// phi°_k the dual gauge of x -> t_k^-theta J(t_k, x).
double dual_value(const Vec& lambda, const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid,
                  Exec exec = Exec::Serial);

inline constexpr double selector_factor = 2.0;

// Deterministic solver run certified against the dual bound with factor 2.
Representation near_optimal_selector(const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid,
                                     const SolverOptions& opts = {});

inline constexpr std::size_t max_moments = 8;

// Centers of the Gaussian-in-log-t bumps used for m moments.
std::vector<double> cancellation_centers(const LogGrid& grid, std::size_t m);

// Subtract bump combinations so that sum_k u'_k m_j(t_k) Delta = 0 for each
// moment, coordinate by coordinate. The result's target is its own sum.
Representation impose_cancellations(const Representation& rep, const std::vector<GridFunction>& moments);
// Same with bump centers (log t) chosen per coordinate, centers[i][j] for
// coordinate i and moment j.
Representation impose_cancellations(const Representation& rep, const std::vector<GridFunction>& moments,
                                    const std::vector<std::vector<double>>& centers);

} // namespace interpkit
