#pragma once

#include <memory>

#include "interpkit/jmethod.hpp"
#include "interpkit/weights.hpp"

namespace interpkit {

enum class SelectorKind {
    NearOptimal,   // certified solver representation
    Fundamental    // represent_fundamental (l1/l1 pairs only)
};

//
// Deterministic f -> u_f with a per-(f, pair) cache. Copies share the
// cache, so commutators built from one Selector reuse representations.
//
class Selector {
public:
    Selector(LogGrid grid, ThetaQ tq, SolverOptions opts = {}, SelectorKind kind = SelectorKind::NearOptimal);

    std::shared_ptr<const Representation> operator()(const Vec& f, const CouplePair& pair) const;

    const LogGrid& grid() const { return grid_; }
    const ThetaQ& tq() const { return tq_; }
    const SolverOptions& options() const { return opts_; }
    SelectorKind kind() const { return kind_; }
    std::size_t cache_size() const;

private:
    struct Cache;
    LogGrid grid_;
    ThetaQ tq_;
    SolverOptions opts_;
    SelectorKind kind_;
    std::shared_ptr<Cache> cache_;
};

struct OmegaConfig {
    WeightFamily weight;
    int order = 1;
    Selector selector;
};

// (1/n!) sum_k u_k w_k^n Delta
Vec weighted_integral(const Representation& rep, const GridFunction& w, int n = 1);

Vec omega(const Vec& f, const OmegaConfig& cfg, const CouplePair& pair);
Vec omega_n(const Vec& f, const OmegaConfig& cfg, const CouplePair& pair);
Vec omega_n(const Vec& f, const GridFunction& w, int n, const Selector& sel, const CouplePair& pair);

// T u_{f,k} - u_{Tf,k}
NodeField difference_representation(const PairOperator& T, const Vec& f, const Selector& sel);

// [T, Omega_{n,w}] f without correction terms
Vec bracket(const PairOperator& T, const GridFunction& w, const Vec& f, int n, const Selector& sel);

Vec commutator(const PairOperator& T, const GridFunction& w, const Vec& f, const Selector& sel);
Vec commutator(const PairOperator& T, const WeightFamily& w, const Vec& f, const Selector& sel);

struct GoodRepresentation {
    Representation v;   // on the destination pair
    NodeField diff;     // u tilde
    Vec commutator;
    Vec residual;       // commutator - sum_k v_k Delta
};

// v_k = u~_k (w - Pw)_k + (sum_{j<k} u~_j Delta) w#_k with extension-mode P
GoodRepresentation good_representation(const PairOperator& T, const GridFunction& w, const Vec& f,
                                       const Selector& sel);
GoodRepresentation good_representation(const PairOperator& T, const WeightFamily& w, const Vec& f,
                                       const Selector& sel);

// C_0 = Tf, C_n = [T, Omega_n] f - sum_{j=1}^{n-1} Omega_j(C_{n-j} f), the
// inner Omega_j on the destination pair
Vec higher_commutator(const PairOperator& T, const GridFunction& w, const Vec& f, int n, const Selector& sel);
Vec higher_commutator(const PairOperator& T, const WeightFamily& w, const Vec& f, int n, const Selector& sel);

// sum_{t_k<1} x0(t_k) w_k Delta - sum_{t_k>=1} x1(t_k) w_k Delta with the exact K-split
Vec omega_k(const Vec& f, const GridFunction& w, const CouplePair& pair);
Vec omega_k(const Vec& f, const WeightFamily& w, const CouplePair& pair, const LogGrid& grid);

} // namespace interpkit
