#pragma once

#include <vector>

#include "interpkit/grid.hpp"
#include "interpkit/pairs.hpp"

namespace interpkit {

// Serial reference vs OpenMP node-parallel versions. Both produce bitwise
// identical results: the parallel map writes per-node slots and every
// reduction runs serially in node order.
enum class Exec { Serial, Parallel };

// J(t_k, u_k) for all nodes
void j_values(const LogGrid& grid, const NodeField& u, const CouplePair& pair, std::vector<double>& out, Exec exec);

// dual gauge of x -> t_k^-theta J(t_k, x) at lambda, for quadrature nodes k < n-1
void dual_profile(const LogGrid& grid, const Vec& lambda, const CouplePair& pair, double theta,
                  std::vector<double>& out, Exec exec);

// sum_k u_k m_j(t_k) Delta for each row m_j of `moments` (rows x nodes)
Mat haar_moments(const LogGrid& grid, const Mat& moments, const NodeField& u, Exec exec);

} // namespace interpkit
