#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "interpkit/commutators.hpp"

namespace interpkit {

struct GridSpec {
    double t_min = 1e-4;
    double t_max = 1e4;
    std::size_t n_nodes = 185;

    LogGrid make() const { return make_grid(t_min, t_max, n_nodes); }
};

// [1e-4, 1e4] and [1e-6, 1e6] at the same step (~0.1)
std::vector<GridSpec> default_ladder();

enum class OperatorLaw {
    Random,     // N(0,1) entries, normalized to pair_norm = 1
    Identity,
    Fixed       // op_matrix as given
};
std::string to_string(OperatorLaw law);

struct EnsembleConfig {
    std::uint64_t seed = 1;
    int trials = 100;
    std::vector<GridSpec> ladder = default_ladder();
    ThetaQ tq;
    std::vector<double> q_values;   // empty: tq.q only
    std::vector<WeightFamily> weights = {WeightFamily::log()};
    double burn_in = default_burn_in;
    int bumps = 3;                  // bumps per random representation
    std::optional<CouplePair> src;
    std::optional<CouplePair> dst;
    OperatorLaw op_law = OperatorLaw::Random;
    Mat op_matrix;
    double stability_factor = 2.0;
    double growth_factor = 1.5;
    double degenerate_below = 1e-12;
    int threads = 0;                // 0: OpenMP default
    SolverOptions solver;

    void validate() const;
};

nlohmann::json to_json(const EnsembleConfig& cfg);

struct TrialRecord {
    std::string group;
    int trial = 0;
    double numerator = 0.0;
    double denominator = 0.0;
    double ratio = 0.0;   // 0 when degenerate
    bool degenerate = false;
    std::string note;
};

struct GroupSummary {
    std::string group;
    int trials = 0;
    int degenerate = 0;
    double max_ratio = 0.0;
    int argmax_trial = -1;
};

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double limit = 0.0;
    std::string detail;
};

struct VerificationReport {
    std::string suite;
    nlohmann::json config;
    std::vector<TrialRecord> trials;
    std::vector<GroupSummary> groups;
    std::vector<Check> checks;
    nlohmann::json diagnostics = nlohmann::json::object();
    // over theorem-ratio groups only; uncancelled ("plain") and probe groups
    // are contrasts and stay out of it
    double max_ratio = 0.0;
    int degenerate_count = 0;
    bool pass = false;
    double wall_seconds = 0.0;   // not serialized

    const GroupSummary& group(const std::string& name) const;
    const Check& check(const std::string& name) const;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

struct ConstantEstimate {
    double value = 0.0;
    std::string group;
    int trial = -1;
};

// Max non-degenerate ratio with its provenance; throws InvalidArgument when
// every record is degenerate. The report overload skips contrast groups.
ConstantEstimate estimate_constant(const std::vector<TrialRecord>& records);
ConstantEstimate estimate_constant(const std::vector<VerificationReport>& reports);

VerificationReport verify_t1(const EnsembleConfig& cfg);
VerificationReport verify_teoA(const EnsembleConfig& cfg);
VerificationReport verify_higher(const EnsembleConfig& cfg, int n);

// Pair family a = 1, b = 4^-i for i = 0 .. floor((log t_max - 2.5)/log 4)
// on each grid: ratios |Omega_w e_i| / |e_i| and |[T, Omega_{2,w}] e_i| / |e_i|.
VerificationReport probe_unboundedness(const std::vector<LogGrid>& grids, const WeightFamily& w, const ThetaQ& tq,
                                       const SolverOptions& opts = {}, double growth_factor = 1.5);

int probe_family_size(const LogGrid& grid);

} // namespace interpkit
