#pragma once

#include "interpkit/jmethod.hpp"

namespace interpkit::detail {

struct IpmResult {
    NodeField u;
    Vec nu;              // multipliers of sum_k u_k Delta = f
    int iterations = 0;
    bool converged = false;
    double upper = 0.0;  // Phi(J(u)) at exit
    double lower = 0.0;  // best dual value seen
    double residual = 0.0;   // KKT residual (stationarity, equality) at exit
    double mu = 0.0;         // complementarity at exit
};

// Primal-dual interior point on the epigraph form of
//   min Phi_{theta,q}(J(t_k, u_k))  s.t.  sum_k u_k Delta = f.
// Per node: u (d), y >= |u| (d), e >= t^-theta J (1); q = inf adds one
// global bound s >= e_k. f should be O(1); the caller normalizes.
IpmResult solve_ipm(const Vec& f, const CouplePair& pair, const ThetaQ& tq, const LogGrid& grid,
                    const NodeField& start, const SolverOptions& opts);

} // namespace interpkit::detail
