#pragma once

#include <array>
#include <string>

#include "interpkit/grid.hpp"

namespace interpkit {

enum class NormKind { L1, Linf };

// Weighted l1 (sum a_i |x_i|) or weighted l-infinity (max a_i |x_i|).
struct NormSpec {
    NormKind kind = NormKind::L1;
    Vec scale;

    NormSpec() = default;
    NormSpec(NormKind k, Vec s);

    std::size_t dim() const { return std::size_t(scale.size()); }
    double operator()(const Vec& x) const;
    // weighted l1(a) <-> weighted linf(1/a)
    NormSpec dual() const;
    bool operator==(const NormSpec& o) const { return kind == o.kind && scale == o.scale; }
};

std::string to_string(NormKind k);

struct CouplePair {
    NormSpec norm0;
    NormSpec norm1;

    CouplePair() = default;
    CouplePair(NormSpec n0, NormSpec n1);

    std::size_t dim() const { return norm0.dim(); }
    bool is_l1_l1() const { return norm0.kind == NormKind::L1 && norm1.kind == NormKind::L1; }
    bool operator==(const CouplePair& o) const { return norm0 == o.norm0 && norm1 == o.norm1; }

    // (a|x|, b|x|) on R
    static CouplePair scalar(double a0 = 1.0, double a1 = 1.0);
    static CouplePair diagonal_l1(const Vec& a, const Vec& b);
};

double j_functional(double t, const Vec& x, const CouplePair& pair);
double k_functional(double t, const Vec& x, const CouplePair& pair);

struct KSplit {
    Vec x0;
    Vec x1;
};
// Exact l1/l1 split: coordinate i goes to x0 when a_i <= t b_i.
KSplit k_decompose(double t, const Vec& x, const CouplePair& pair);

// sup { <lambda, x> : A(x) <= alpha, B(x) <= beta }, exact for every
// combination of weighted l1 / linf norms.
double support_intersection(const Vec& lambda, const NormSpec& A, double alpha, const NormSpec& B, double beta);

struct PairOperator {
    Mat matrix;
    CouplePair src;
    CouplePair dst;
    std::array<double, 2> endpoint_norms{0.0, 0.0};
    double pair_norm = 0.0;

    Vec apply(const Vec& x) const;
};

// Exact induced norm between two weighted l1 or two weighted linf norms.
double induced_norm(const Mat& T, const NormSpec& src, const NormSpec& dst);

PairOperator operator_pair_norm(const Mat& T, const CouplePair& src, const CouplePair& dst);

} // namespace interpkit
