#include "interpkit/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "interpkit/errors.hpp"

namespace interpkit {

NormSpec::NormSpec(NormKind k, Vec s) : kind(k), scale(std::move(s))
{
    if (scale.size() < 1)
        throw InvalidArgument("NormSpec: empty scale");
    for (Eigen::Index i = 0; i < scale.size(); ++i)
        if (!(scale[i] > 0.0) || !std::isfinite(scale[i]))
            throw InvalidArgument("NormSpec: scale entries must be positive and finite");
}

double NormSpec::operator()(const Vec& x) const
{
    if (x.size() != scale.size())
        throw InvalidArgument("norm: dimension mismatch");
    if (kind == NormKind::L1)
        return (scale.array() * x.array().abs()).sum();
    return (scale.array() * x.array().abs()).maxCoeff();
}

NormSpec NormSpec::dual() const
{
    return NormSpec(kind == NormKind::L1 ? NormKind::Linf : NormKind::L1, scale.cwiseInverse());
}

std::string to_string(NormKind k)
{
    return k == NormKind::L1 ? "l1" : "linf";
}

CouplePair::CouplePair(NormSpec n0, NormSpec n1) : norm0(std::move(n0)), norm1(std::move(n1))
{
    if (norm0.dim() != norm1.dim())
        throw InvalidArgument("CouplePair: norm dimensions differ");
}

CouplePair CouplePair::scalar(double a0, double a1)
{
    return CouplePair(NormSpec(NormKind::L1, Vec::Constant(1, a0)), NormSpec(NormKind::L1, Vec::Constant(1, a1)));
}

CouplePair CouplePair::diagonal_l1(const Vec& a, const Vec& b)
{
    return CouplePair(NormSpec(NormKind::L1, a), NormSpec(NormKind::L1, b));
}

double j_functional(double t, const Vec& x, const CouplePair& pair)
{
    if (!(t > 0.0))
        throw InvalidArgument("j_functional: t must be positive");
    return std::max(pair.norm0(x), t * pair.norm1(x));
}

double k_functional(double t, const Vec& x, const CouplePair& pair)
{
    if (!(t > 0.0))
        throw InvalidArgument("k_functional: t must be positive");
    if (std::size_t(x.size()) != pair.dim())
        throw InvalidArgument("k_functional: dimension mismatch");
    if (pair.is_l1_l1()) {
        const Vec& a = pair.norm0.scale;
        const Vec& b = pair.norm1.scale;
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            s += std::min(a[i], t * b[i]) * std::abs(x[i]);
        return s;
    }
    if (pair.dim() > 3)
        throw Unsupported("k_functional: non-l1/l1 pairs supported only for dim <= 3");
    // K is the inf-convolution of norm0 and t*norm1, its unit ball polar is
    // the intersection of the dual balls
    return support_intersection(x, pair.norm0.dual(), 1.0, pair.norm1.dual(), t);
}

KSplit k_decompose(double t, const Vec& x, const CouplePair& pair)
{
    if (!pair.is_l1_l1())
        throw Unsupported("k_decompose: exact split needs weighted l1 endpoints");
    if (!(t > 0.0))
        throw InvalidArgument("k_decompose: t must be positive");
    if (std::size_t(x.size()) != pair.dim())
        throw InvalidArgument("k_decompose: dimension mismatch");
    KSplit s{Vec::Zero(x.size()), Vec::Zero(x.size())};
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (pair.norm0.scale[i] <= t * pair.norm1.scale[i])
            s.x0[i] = x[i];
        else
            s.x1[i] = x[i];
    }
    return s;
}

namespace {

// Both constraints weighted l1. The LP has two constraints, so some
// optimal vertex has at most two nonzero coordinates.
double support_l1_l1(const Vec& lam, const Vec& a, double alpha, const Vec& b, double beta)
{
    const Eigen::Index d = lam.size();
    double best = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
        best = std::max(best, std::abs(lam[i]) * std::min(alpha / a[i], beta / b[i]));
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double det = a[i] * b[j] - a[j] * b[i];
            if (det == 0.0)
                continue;
            const double xi = (alpha * b[j] - beta * a[j]) / det;
            const double xj = (a[i] * beta - b[i] * alpha) / det;
            if (xi >= 0.0 && xj >= 0.0)
                best = std::max(best, std::abs(lam[i]) * xi + std::abs(lam[j]) * xj);
        }
    }
    return best;
}

// Weighted l1 budget (scale a, radius alpha) with a box |x_i| <= cap_i.
double support_l1_box(const Vec& lam, const Vec& a, double alpha, const Vec& cap)
{
    const Eigen::Index d = lam.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index p, Eigen::Index q) {
        return std::abs(lam[p]) / a[p] > std::abs(lam[q]) / a[q];
    });
    double budget = alpha, val = 0.0;
    for (Eigen::Index i : order) {
        if (budget <= 0.0)
            break;
        const double xi = std::min(cap[i], budget / a[i]);
        val += std::abs(lam[i]) * xi;
        budget -= a[i] * xi;
    }
    return val;
}

} // namespace

double support_intersection(const Vec& lambda, const NormSpec& A, double alpha, const NormSpec& B, double beta)
{
    if (lambda.size() != A.scale.size() || lambda.size() != B.scale.size())
        throw InvalidArgument("support_intersection: dimension mismatch");
    if (!(alpha >= 0.0) || !(beta >= 0.0))
        throw InvalidArgument("support_intersection: radii must be nonnegative");
    if (A.kind == NormKind::L1 && B.kind == NormKind::L1)
        return support_l1_l1(lambda, A.scale, alpha, B.scale, beta);
    if (A.kind == NormKind::Linf && B.kind == NormKind::Linf) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < lambda.size(); ++i)
            s += std::abs(lambda[i]) * std::min(alpha / A.scale[i], beta / B.scale[i]);
        return s;
    }
    if (A.kind == NormKind::L1)
        return support_l1_box(lambda, A.scale, alpha, (beta / B.scale.array()).matrix());
    return support_l1_box(lambda, B.scale, beta, (alpha / A.scale.array()).matrix());
}

Vec PairOperator::apply(const Vec& x) const
{
    if (x.size() != matrix.cols())
        throw InvalidArgument("PairOperator: dimension mismatch");
    return matrix * x;
}

double induced_norm(const Mat& T, const NormSpec& src, const NormSpec& dst)
{
    if (T.cols() != src.scale.size() || T.rows() != dst.scale.size())
        throw InvalidArgument("induced_norm: matrix shape does not match norms");
    if (src.kind != dst.kind)
        throw Unsupported("induced_norm: only l1->l1 and linf->linf are exact");
    double best = 0.0;
    if (src.kind == NormKind::L1) {
        // weighted column sums
        for (Eigen::Index j = 0; j < T.cols(); ++j) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < T.rows(); ++i)
                s += dst.scale[i] * std::abs(T(i, j));
            best = std::max(best, s / src.scale[j]);
        }
    } else {
        // weighted row sums
        for (Eigen::Index i = 0; i < T.rows(); ++i) {
            double s = 0.0;
            for (Eigen::Index j = 0; j < T.cols(); ++j)
                s += std::abs(T(i, j)) / src.scale[j];
            best = std::max(best, dst.scale[i] * s);
        }
    }
    return best;
}

PairOperator operator_pair_norm(const Mat& T, const CouplePair& src, const CouplePair& dst)
{
    PairOperator op;
    op.matrix = T;
    op.src = src;
    op.dst = dst;
    op.endpoint_norms = {induced_norm(T, src.norm0, dst.norm0), induced_norm(T, src.norm1, dst.norm1)};
    op.pair_norm = std::max(op.endpoint_norms[0], op.endpoint_norms[1]);
    return op;
}

} // namespace interpkit
