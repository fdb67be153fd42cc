#pragma once

#include <map>
#include <memory>
#include <string>

#include "fireflow/field.hpp"
#include "fireflow/gmm.hpp"
#include "fireflow/grid.hpp"

namespace fireflow {

/// Plain-text run configuration: one `key = value` pair per line, `#` starts
/// a comment. CLI flags override file values (precedence: defaults < file <
/// flags, documented in the tool help).
class KeyValueConfig {
  public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig parse_file(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const;
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Serialized back to the same key=value form (sorted keys).
    std::string dump() const;

  private:
    std::map<std::string, std::string> values_;
};

/// Mixture grammar: components separated by ';', each
///   weight @ mx,my [@ c00,c01,c11]
/// with a unit covariance when the third part is omitted. Example:
///   "0.5@-8,3;0.5@-8,-3"
GaussianMixture parse_mixture(const std::string& text);

/// The stock experiment pair: pi0 is a 2-component mixture at (-8,+-3),
/// pi1 a 3-component mixture at (8,-4),(8,0),(8,4); unit covariances,
/// equal weights.
GaussianMixture default_pi0();
GaussianMixture default_pi1();

/// Field grammar: "constant:c0,c1,...", "linear:a", "timeonly:c0,c1,...".
/// `dim` applies to linear/timeonly (constant infers it from the params).
std::unique_ptr<AnalyticField> parse_field(const std::string& text, int dim = 1);

/// Schedule grammar: "uniform" or "power:gamma". Forward grids run 0 -> 1;
/// pass forward=false for the mirrored (data -> noise) direction.
TimeGrid make_schedule(const std::string& schedule, int steps, bool forward = true);

}  // namespace fireflow
