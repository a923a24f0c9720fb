#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "interpkit/grid.hpp"

namespace interpkit {

// Which rule supplies the integral of w over (0, t_min].
enum class Tail {
    Auto,       // closed-form moment when the family has one, else extension
    Extension   // w(t_min) * t_min
};

class WeightFamily {
public:
    enum class Kind { Constant, Log, PowerLog, PhiLog, SinLog, Samples };

    static WeightFamily constant(double c);
    static WeightFamily log();
    static WeightFamily power_log(int n);
    static WeightFamily sin_log();
    // w(t) = phi(log t). dphi is optional; without it w1_seminorm falls
    // back to forward differences.
    static WeightFamily phi_log(std::function<double(double)> phi, std::function<double(double)> dphi = {});
    // phi given by samples (x_i, y_i), piecewise linear, constant outside.
    static WeightFamily phi_log_piecewise(std::vector<double> x, std::vector<double> y);
    // Values on one fixed grid; only evaluable there.
    static WeightFamily samples(GridFunction g);

    // Attach a closed-form t -> int_0^t w(s) ds. Checked against the left
    // rule on a reference grid; throws InvalidArgument on disagreement.
    WeightFamily with_moment(std::function<double(double)> moment) const;

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    double parameter() const { return param_; }

    double operator()(double t) const;
    GridFunction on(const LogGrid& grid) const;

    bool has_exact_moment() const { return bool(moment_); }
    double moment(double t) const;

    // t w'(t), when known in closed form
    bool has_log_derivative() const { return bool(logderiv_); }
    double log_derivative(double t) const { return logderiv_(t); }

private:
    WeightFamily() = default;

    Kind kind_ = Kind::Constant;
    std::string name_;
    double param_ = 0.0;
    std::function<double(double)> eval_;
    std::function<double(double)> moment_;
    std::function<double(double)> logderiv_;
    std::optional<double> logderiv_sup_;
    std::optional<GridFunction> samples_;

    friend double w1_seminorm(const WeightFamily&, const LogGrid&, double);
};

struct WeightProfile {
    GridFunction w;
    GridFunction pw;
    GridFunction sharp;
    double w_norm;
    double w1_seminorm;
};

inline constexpr double default_burn_in = 1e3;

GridFunction hardy_average(const WeightFamily& w, const LogGrid& grid, Tail tail = Tail::Auto);
GridFunction hardy_average(const GridFunction& w);   // extension tail

GridFunction sharp(const WeightFamily& w, const LogGrid& grid, Tail tail = Tail::Auto);
GridFunction sharp(const GridFunction& w);           // extension tail

// max_{k >= from} |g_k|
double sup_abs(const GridFunction& g, std::size_t from = 0);

double w_norm(const WeightFamily& w, const LogGrid& grid, double burn_in = default_burn_in, Tail tail = Tail::Auto);
double w_norm(const GridFunction& w, double burn_in = default_burn_in);

double w1_seminorm(const WeightFamily& w, const LogGrid& grid, double burn_in = default_burn_in);
// forward differences t_k (g_{k+1} - g_k) / sigma_k over the burn-in range
double w1_seminorm(const GridFunction& g, double burn_in = default_burn_in);

WeightProfile profile(const WeightFamily& w, const LogGrid& grid, double burn_in = default_burn_in,
                      Tail tail = Tail::Auto);

struct L3Split {
    GridFunction bounded_part;   // w - Pw
    GridFunction w1_part;        // Pw
};
L3Split decompose_l3(const WeightFamily& w, const LogGrid& grid, Tail tail = Tail::Auto);

// int_t^1 g ds/s on the grid; requires t = 1 as a node
GridFunction qbar(const GridFunction& g);
// int_1^s g dr/r on the grid; requires t = 1 as a node
GridFunction g_transform(const GridFunction& w);

// Non-increasing rearrangement of |g| with respect to ds, node masses
// m_0 = t_1 and m_k = sigma_k, evaluated at s = t_k.
GridFunction rearrange(const GridFunction& g);

} // namespace interpkit
