#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include "interpkit/harness.hpp"

namespace interpkit::cli {

// Bad file, unknown section/key, unparsable or invalid value.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//
// INI-style run configuration. Every section and key is checked against
// the grammar at load time; accessors name the offending key on failure.
//
class RunConfig {
public:
    static RunConfig load(const std::filesystem::path& path);
    static RunConfig parse(std::istream& in);

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    // section -> key -> raw string
    nlohmann::json echo() const;

    LogGrid grid() const;
    ThetaQ tq() const;
    WeightFamily weight() const;
    Tail tail() const;
    double burn_in() const;
    CouplePair pair(const std::string& section = "pair") const;
    CouplePair dst_pair() const;   // [pair.dst], else [pair]
    OperatorLaw operator_law() const;
    PairOperator make_operator(const CouplePair& src, const CouplePair& dst) const;
    Vec input_f() const;
    std::vector<JMethod> methods() const;   // empty: all methods
    int order() const;
    SolverOptions solver() const;
    EnsembleConfig ensemble() const;

    std::filesystem::path output_dir() const;   // INTERPKIT_OUTPUT_DIR wins
    bool wants(const std::string& format) const;

private:
    const boost::property_tree::ptree* section(const std::string& name) const;
    std::optional<std::string> raw(const std::string& section, const std::string& key) const;
    std::string str(const std::string& section, const std::string& key) const;
    double num(const std::string& section, const std::string& key) const;
    double num_or(const std::string& section, const std::string& key, double fallback) const;
    long integer(const std::string& section, const std::string& key) const;
    std::vector<double> list(const std::string& section, const std::string& key) const;

    boost::property_tree::ptree tree_;
};

} // namespace interpkit::cli
