#include "interpkit/commutators.hpp"

#include <cstring>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "interpkit/errors.hpp"

namespace interpkit {

struct Selector::Cache {
    mutable std::shared_mutex mutex;
    std::map<std::string, std::shared_ptr<const Representation>> entries;
};

namespace {

void append_bytes(std::string& key, const Vec& v)
{
    const auto* p = reinterpret_cast<const char*>(v.data());
    key.append(p, std::size_t(v.size()) * sizeof(double));
}

std::string cache_key(const Vec& f, const CouplePair& pair)
{
    std::string key;
    key.push_back(char(pair.norm0.kind));
    key.push_back(char(pair.norm1.kind));
    append_bytes(key, pair.norm0.scale);
    append_bytes(key, pair.norm1.scale);
    append_bytes(key, f);
    return key;
}

double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

} // namespace

Selector::Selector(LogGrid grid, ThetaQ tq, SolverOptions opts, SelectorKind kind)
    : grid_(std::move(grid)), tq_(tq), opts_(opts), kind_(kind), cache_(std::make_shared<Cache>())
{
}

std::shared_ptr<const Representation> Selector::operator()(const Vec& f, const CouplePair& pair) const
{
    const std::string key = cache_key(f, pair);
    {
        std::shared_lock lock(cache_->mutex);
        const auto it = cache_->entries.find(key);
        if (it != cache_->entries.end())
            return it->second;
    }
    auto rep = std::make_shared<const Representation>(kind_ == SelectorKind::Fundamental
                                                          ? represent_fundamental(f, pair, grid_)
                                                          : near_optimal_selector(f, pair, tq_, grid_, opts_));
    std::unique_lock lock(cache_->mutex);
    // first writer wins; a concurrent duplicate is bitwise equal anyway
    const auto [it, inserted] = cache_->entries.emplace(key, std::move(rep));
    return it->second;
}

std::size_t Selector::cache_size() const
{
    std::shared_lock lock(cache_->mutex);
    return cache_->entries.size();
}

Vec weighted_integral(const Representation& rep, const GridFunction& w, int n)
{
    if (n < 0)
        throw InvalidArgument("weighted_integral: order must be >= 0");
    if (!(w.grid() == rep.grid()))
        throw InvalidArgument("weighted_integral: weight and representation grids differ");
    const LogGrid& grid = rep.grid();
    const double delta = grid.haar_step();
    const NodeField& u = rep.u();
    Vec s = Vec::Zero(u.cols());
    for (std::size_t k = 0; k < grid.quadrature_size(); ++k) {
        double wn = 1.0;
        for (int i = 0; i < n; ++i)
            wn *= w[k];
        s += u.row(Eigen::Index(k)).transpose() * (wn * delta);
    }
    return s / factorial(n);
}

Vec omega_n(const Vec& f, const GridFunction& w, int n, const Selector& sel, const CouplePair& pair)
{
    if (n < 1)
        throw InvalidArgument("omega_n: order must be >= 1");
    return weighted_integral(*sel(f, pair), w, n);
}

Vec omega(const Vec& f, const OmegaConfig& cfg, const CouplePair& pair)
{
    if (cfg.order != 1)
        throw InvalidArgument("omega: configuration order must be 1");
    return omega_n(f, cfg.weight.on(cfg.selector.grid()), 1, cfg.selector, pair);
}

Vec omega_n(const Vec& f, const OmegaConfig& cfg, const CouplePair& pair)
{
    return omega_n(f, cfg.weight.on(cfg.selector.grid()), cfg.order, cfg.selector, pair);
}

NodeField difference_representation(const PairOperator& T, const Vec& f, const Selector& sel)
{
    if (std::size_t(f.size()) != T.src.dim())
        throw InvalidArgument("commutator: f does not match the source pair");
    const auto uf = sel(f, T.src);
    const auto utf = sel(T.apply(f), T.dst);
    return NodeField(uf->u() * T.matrix.transpose()) - utf->u();
}

Vec bracket(const PairOperator& T, const GridFunction& w, const Vec& f, int n, const Selector& sel)
{
    if (n < 1)
        throw InvalidArgument("bracket: order must be >= 1");
    const NodeField diff = difference_representation(T, f, sel);
    const Representation r(sel.grid(), T.dst, diff, integrate_haar(sel.grid(), diff));
    return weighted_integral(r, w, n);
}

Vec commutator(const PairOperator& T, const GridFunction& w, const Vec& f, const Selector& sel)
{
    return bracket(T, w, f, 1, sel);
}

Vec commutator(const PairOperator& T, const WeightFamily& w, const Vec& f, const Selector& sel)
{
    return commutator(T, w.on(sel.grid()), f, sel);
}

GoodRepresentation good_representation(const PairOperator& T, const GridFunction& w, const Vec& f,
                                       const Selector& sel)
{
    const LogGrid& grid = sel.grid();
    if (!(w.grid() == grid))
        throw InvalidArgument("good_representation: weight grid differs from selector grid");
    NodeField diff = difference_representation(T, f, sel);
    const NodeField U = cumulative_haar(grid, diff);
    const GridFunction sh = sharp(w);   // extension mode
    NodeField v = NodeField::Zero(diff.rows(), diff.cols());
    for (std::size_t k = 0; k < grid.quadrature_size(); ++k) {
        const Eigen::Index r = Eigen::Index(k);
        v.row(r) = diff.row(r) * (-sh[k]) + U.row(r) * sh[k];
    }
    Vec com = weighted_integral(Representation(grid, T.dst, diff, integrate_haar(grid, diff)), w, 1);
    Vec sum = integrate_haar(grid, v);
    Vec residual = com - sum;
    return GoodRepresentation{Representation(grid, T.dst, std::move(v), std::move(sum)), std::move(diff),
                              std::move(com), std::move(residual)};
}

GoodRepresentation good_representation(const PairOperator& T, const WeightFamily& w, const Vec& f,
                                       const Selector& sel)
{
    return good_representation(T, w.on(sel.grid()), f, sel);
}

Vec higher_commutator(const PairOperator& T, const GridFunction& w, const Vec& f, int n, const Selector& sel)
{
    if (n < 0)
        throw InvalidArgument("higher_commutator: order must be >= 0");
    std::vector<Vec> C(std::size_t(n) + 1);
    C[0] = T.apply(f);
    for (int m = 1; m <= n; ++m) {
        Vec c = bracket(T, w, f, m, sel);
        for (int j = 1; j < m; ++j)
            c -= omega_n(C[std::size_t(m - j)], w, j, sel, T.dst);
        C[std::size_t(m)] = std::move(c);
    }
    return C[std::size_t(n)];
}

Vec higher_commutator(const PairOperator& T, const WeightFamily& w, const Vec& f, int n, const Selector& sel)
{
    return higher_commutator(T, w.on(sel.grid()), f, n, sel);
}

Vec omega_k(const Vec& f, const GridFunction& w, const CouplePair& pair)
{
    const LogGrid& grid = w.grid();
    const std::size_t c = grid.unit_index_or_throw();
    if (!pair.is_l1_l1())
        throw Unsupported("omega_k: pair must have weighted l1 endpoints");
    const double delta = grid.haar_step();
    Vec s = Vec::Zero(f.size());
    for (std::size_t k = 0; k < grid.quadrature_size(); ++k) {
        const KSplit sp = k_decompose(grid[k], f, pair);
        if (k < c)
            s += sp.x0 * (w[k] * delta);
        else
            s -= sp.x1 * (w[k] * delta);
    }
    return s;
}

Vec omega_k(const Vec& f, const WeightFamily& w, const CouplePair& pair, const LogGrid& grid)
{
    return omega_k(f, w.on(grid), pair);
}

} // namespace interpkit
