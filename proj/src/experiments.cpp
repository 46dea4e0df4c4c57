#include "tvflow/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace tvflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text,
                                              const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected `key = value`, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": key '" + key + "' outside any [section]");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str(), path);
}

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string ExperimentConfig::get_string(const std::string& section,
                                         const std::string& key,
                                         const std::string& fallback) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double ExperimentConfig::get_double(const std::string& section, const std::string& key,
                                    double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("config key [" + section + "] " + key + ": bad number '" + v + "'");
  }
}

long ExperimentConfig::get_long(const std::string& section, const std::string& key,
                                long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("config key [" + section + "] " + key + ": bad integer '" + v + "'");
  }
}

std::vector<double> ExperimentConfig::get_list(const std::string& section,
                                               const std::string& key,
                                               const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  std::vector<double> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw ConfigError("config key [" + section + "] " + key + ": bad list item '" +
                        item + "'");
    }
  }
  if (out.empty())
    throw ConfigError("config key [" + section + "] " + key + ": empty list");
  return out;
}

void ExperimentConfig::set(const std::string& section, const std::string& key,
                           const std::string& value) {
  sections_[section][key] = value;
}

void ExperimentConfig::check_allowed_params(const std::set<std::string>& allowed) const {
  const auto s = sections_.find("params");
  if (s == sections_.end()) return;
  for (const auto& [key, value] : s->second)
    if (!allowed.count(key))
      throw ConfigError("unknown [params] key '" + key + "'");
}

// -- results ---------------------------------------------------------------------

bool ScenarioResult::all_pass() const {
  const auto ok = [](const AssertionRow& r) { return r.pass; };
  return std::all_of(rows.begin(), rows.end(), ok) &&
         std::all_of(timing_rows.begin(), timing_rows.end(), ok);
}

void ScenarioResult::add(const std::string& name, double measured, double expected,
                         double tolerance, bool pass) {
  rows.push_back({name, measured, expected, tolerance, pass});
}

void ScenarioResult::add_close(const std::string& name, double measured, double expected,
                               double tolerance) {
  add(name, measured, expected, tolerance, std::abs(measured - expected) <= tolerance);
}

void ScenarioResult::add_le(const std::string& name, double measured, double bound) {
  add(name, measured, bound, 0.0, measured <= bound);
}

void ScenarioResult::add_timing(const std::string& name, double seconds, double budget_s) {
  timing_rows.push_back({name, seconds, budget_s, 0.0, seconds <= budget_s});
}

// -- running ---------------------------------------------------------------------

bool run_scenario(const ExperimentConfig& cfg, const std::string& outdir) {
  const std::string name = cfg.scenario_name();
  const ScenarioInfo* info = find_scenario(name);
  if (!info) throw ConfigError("unknown scenario '" + name + "'");
  std::filesystem::create_directories(outdir);
  ScenarioResult res = info->run(cfg, outdir);

  {
    std::ofstream f(outdir + "/summary.csv");
    if (!f) throw std::runtime_error("cannot write " + outdir + "/summary.csv");
    f << "name,measured,expected,tolerance,pass\n";
    char buf[256];
    for (const auto& r : res.rows) {
      std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%.12g,%s\n", r.name.c_str(),
                    r.measured, r.expected, r.tolerance, r.pass ? "pass" : "FAIL");
      f << buf;
    }
  }
  if (!res.timing_rows.empty()) {
    std::ofstream f(outdir + "/timings.csv");
    f << "name,seconds,budget,pass\n";
    char buf[256];
    for (const auto& r : res.timing_rows) {
      std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%s\n", r.name.c_str(), r.measured,
                    r.expected, r.pass ? "pass" : "FAIL");
      f << buf;
    }
  }

  for (const auto& r : res.rows) {
    std::printf("  %-42s measured=%-14.6g expected=%-14.6g tol=%-10.4g %s\n",
                r.name.c_str(), r.measured, r.expected, r.tolerance,
                r.pass ? "pass" : "FAIL");
  }
  for (const auto& r : res.timing_rows) {
    std::printf("  %-42s %.1fs (budget %.0fs) %s\n", r.name.c_str(), r.measured,
                r.expected, r.pass ? "pass" : "FAIL");
  }
  return res.all_pass();
}

std::string default_output_root() {
  const char* env = std::getenv("TVFLOW_OUT");
  return env && *env ? env : "results";
}

int run_verification(const std::string& tier, const std::string& out_root,
                     int only_criterion) {
  if (tier != "quick" && tier != "full")
    throw ConfigError("verify: tier must be 'quick' or 'full'");
  int failures = 0;
  for (const auto& info : scenario_catalog()) {
    if (info.criterion == 0) continue;
    if (only_criterion != 0 && info.criterion != only_criterion) continue;
    ExperimentConfig cfg;
    cfg.set("scenario", "name", info.name);
    if (tier == "quick") apply_quick_tier(cfg);
    std::printf("criterion-%d %s\n", info.criterion, info.name.c_str());
    bool ok = false;
    try {
      ok = run_scenario(cfg, out_root + "/" + info.name);
    } catch (const std::exception& ex) {
      std::printf("  error: %s\n", ex.what());
    }
    std::printf("criterion-%d %s: %s\n", info.criterion, info.name.c_str(),
                ok ? "PASS" : "FAIL");
    if (!ok) ++failures;
  }
  return failures;
}

}  // namespace tvflow
