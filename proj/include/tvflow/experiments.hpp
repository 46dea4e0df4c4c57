#ifndef TVFLOW_EXPERIMENTS_HPP
#define TVFLOW_EXPERIMENTS_HPP

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace tvflow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration with `[section]` headers and `#` comments.
class ExperimentConfig {
public:
  ExperimentConfig() = default;
  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text,
                                     const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  long get_long(const std::string& section, const std::string& key, long fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key,
                               const std::vector<double>& fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  /// Rejects unknown [params] keys; used to surface typos by name.
  void check_allowed_params(const std::set<std::string>& allowed) const;

  std::string scenario_name() const { return get_string("scenario", "name", ""); }
  unsigned long seed() const {
    return static_cast<unsigned long>(get_long("scenario", "seed", 42));
  }

private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct AssertionRow {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ScenarioResult {
  std::vector<AssertionRow> rows;
  /// Wall-clock budget assertions; checked but kept out of summary.csv so the
  /// summary stays byte-deterministic for a fixed config and seed.
  std::vector<AssertionRow> timing_rows;

  bool all_pass() const;
  void add(const std::string& name, double measured, double expected, double tolerance,
           bool pass);
  /// |measured - expected| <= tolerance
  void add_close(const std::string& name, double measured, double expected,
                 double tolerance);
  /// measured <= bound
  void add_le(const std::string& name, double measured, double bound);
  void add_timing(const std::string& name, double seconds, double budget_s);
};

struct ScenarioInfo {
  std::string name;
  std::string description;
  int criterion;  ///< acceptance criterion number, 0 for auxiliary
  std::function<ScenarioResult(const ExperimentConfig&, const std::string& outdir)> run;
};

const std::vector<ScenarioInfo>& scenario_catalog();
const ScenarioInfo* find_scenario(const std::string& name);

/// Executes one scenario: creates outdir, writes summary.csv (deterministic
/// for a fixed config and seed) and timings.csv, prints rows. Returns true
/// iff every assertion passed.
bool run_scenario(const ExperimentConfig& cfg, const std::string& outdir);

/// Quick-tier parameter overrides (reduced sizes, loosened tolerances) for a
/// scenario; the full tier always runs the acceptance-sized defaults.
void apply_quick_tier(ExperimentConfig& cfg);

/// Runs the full battery (tier "quick" or "full"), one scenario per
/// criterion, printing one pass/fail line each. Returns the number of
/// failing scenarios.
int run_verification(const std::string& tier, const std::string& out_root,
                     int only_criterion = 0);

std::string default_output_root();  ///< "results" or $TVFLOW_OUT

}  // namespace tvflow

#endif
