#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qtrack/anneal.hpp"
#include "qtrack/event_io.hpp"
#include "qtrack/qaoa.hpp"
#include "qtrack/subqubo.hpp"
#include "qtrack/tracking.hpp"

namespace qtrack {

// Flat key-value run configuration with dotted section prefixes. Keys come
// from a fixed registry; unknown keys are rejected. Values are kept as
// strings and converted on access so the resolved dump round-trips exactly.
class RunConfig {
public:
    RunConfig();  // registry defaults

    // `key = value` lines, `#` comments, unknown keys rejected
    void load_file(const std::string& path);
    void load_stream(std::istream& in, const std::string& origin);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;

    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;
    std::vector<double> get_list(const std::string& key) const;

    std::uint64_t seed() const { return get_uint("seed"); }

    // resolved dump, sorted by key; reloadable through load_file
    void write(std::ostream& out) const;
    void write_file(const std::string& path) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    DetectorGeometry geometry() const;
    GeneratorConfig generator() const;
    QuboBuildConfig qubo_build() const;
    QaoaConfig qaoa() const;
    SaConfig sa() const;
    SubQuboParams subqubo() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace qtrack
