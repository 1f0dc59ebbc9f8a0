#pragma once

// Experiment configuration: an INI file with sections, environment overrides
// RHEAT_<SECTION>_<KEY>, and command-line overrides on top. See configs/ for
// annotated examples.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rheat/error.hpp"
#include "rheat/fractional_field.hpp"
#include "rheat/rng.hpp"

namespace rheat {

enum class SchemeVariant { cutoff_sheet, raw_sheet_kappa_infinity, synchronized_grid };

inline const char* to_string(SchemeVariant v) {
  switch (v) {
    case SchemeVariant::cutoff_sheet: return "cutoff_sheet";
    case SchemeVariant::raw_sheet_kappa_infinity: return "raw_sheet_kappa_infinity";
    case SchemeVariant::synchronized_grid: return "synchronized_grid";
  }
  return "unknown";
}

struct ExperimentConfig {
  double h0 = 0.25;
  double h1 = 0.25;
  double kappa = 1.0;
  int m0 = 10000;
  int m1 = 1000;

  std::vector<int> levels{1};
  std::uint64_t seed = 1;
  /// Replica seeds; either listed or derived from `seed` by hashing.
  std::vector<std::uint64_t> seeds;
  SchemeVariant variant = SchemeVariant::cutoff_sheet;
  int threads = 1;
  bool zero_noise = false;
  bool synthetic = false;

  double alpha = 0.6;
  double window_radius = 1.0;
  double padding = 4.0;
  int reference_points = 33;

  std::string out_dir = "out";
  bool emit_plots = false;
  long thin = 0;  // 0 = auto

  HurstPair hurst() const { return HurstPair(h0, h1); }

  /// Sheet configuration for one level and sheet seed, honouring the variant.
  SheetConfig sheet(int n, std::uint64_t sheet_seed) const {
    SheetConfig c;
    c.hurst = hurst();
    c.kappa = variant == SchemeVariant::raw_sheet_kappa_infinity ? std::numeric_limits<double>::infinity() : kappa;
    c.n = n;
    c.m0 = m0;
    c.m1 = m1;
    c.seed = sheet_seed;
    return c;
  }

  /// Seed of the sheet used by replica `seed_value` at level n.
  static std::uint64_t sheet_seed(std::uint64_t seed_value, int n) { return derive_seed(seed_value, static_cast<std::uint64_t>(n)); }
};

struct ConfigWarnings {
  std::vector<std::string> messages;
};

namespace detail {

struct KeySpec {
  const char* section;
  const char* key;
  const char* fallback;
};

inline constexpr KeySpec config_keys[] = {
    {"sheet", "h0", "0.25"},
    {"sheet", "h1", "0.25"},
    {"sheet", "kappa", "1"},
    {"sheet", "m0", "10000"},
    {"sheet", "m1", "1000"},
    {"run", "levels", "1"},
    {"run", "seed", "1"},
    {"run", "seeds", "1"},
    {"run", "variant", "cutoff_sheet"},
    {"run", "threads", "1"},
    {"run", "zero_noise", "false"},
    {"run", "synthetic", "false"},
    {"norm", "alpha", "0.6"},
    {"norm", "window_radius", "1"},
    {"norm", "padding", "4"},
    {"norm", "reference_points", "33"},
    {"output", "dir", "out"},
    {"output", "emit_plots", "false"},
    {"output", "thin", "auto"},
};

inline bool known_key(const std::string& section, const std::string& key) {
  return std::any_of(std::begin(config_keys), std::end(config_keys),
                     [&](const KeySpec& k) { return section == k.section && key == k.key; });
}

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] inline void bad_value(const std::string& path, const std::string& value, const std::string& why) {
  fail(ErrorKind::config, "config " + path + " = '" + value + "': " + why);
}

inline double parse_double(const std::string& path, const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) bad_value(path, s, "not a number");
    return v;
  } catch (const std::logic_error&) {
    bad_value(path, s, "not a number");
  }
}

inline long long parse_int(const std::string& path, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) bad_value(path, s, "not an integer");
    return v;
  } catch (const std::logic_error&) {
    bad_value(path, s, "not an integer");
  }
}

inline std::uint64_t parse_u64(const std::string& path, const std::string& s) {
  if (s.empty() || s[0] == '-') bad_value(path, s, "not an unsigned integer");
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used, 0);
    if (used != s.size()) bad_value(path, s, "not an unsigned integer");
    return v;
  } catch (const std::logic_error&) {
    bad_value(path, s, "not an unsigned integer");
  }
}

inline bool parse_bool(const std::string& path, std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  bad_value(path, s, "expected true/false");
}

}  // namespace detail

/// Raw key/value layers before typing. Later layers win.
class ConfigLayers {
 public:
  ConfigLayers() {
    for (const auto& k : detail::config_keys) tree_.put(path(k.section, k.key), k.fallback);
  }

  void load_file(const std::filesystem::path& file) {
    boost::property_tree::ptree parsed;
    try {
      boost::property_tree::ini_parser::read_ini(file.string(), parsed);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(ErrorKind::config, std::string("cannot read config: ") + e.what());
    }
    for (const auto& [section, body] : parsed) {
      if (body.empty()) fail(ErrorKind::config, "config: key '" + section + "' outside a section");
      for (const auto& [key, value] : body) set(section, key, value.get_value<std::string>());
    }
  }

  /// RHEAT_<SECTION>_<KEY> for every known key.
  void load_environment() {
    for (const auto& k : detail::config_keys) {
      std::string name = std::string("RHEAT_") + k.section + "_" + k.key;
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
      if (const char* v = std::getenv(name.c_str())) set(k.section, k.key, v);
    }
  }

  /// "section.key=value"
  void load_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      fail(ErrorKind::config, "override '" + assignment + "' must look like section.key=value");
    }
    set(detail::trim(assignment.substr(0, dot)), detail::trim(assignment.substr(dot + 1, eq - dot - 1)),
        detail::trim(assignment.substr(eq + 1)));
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    if (!detail::known_key(section, key)) fail(ErrorKind::config, "unknown config key " + section + "." + key);
    tree_.put(path(section, key), detail::trim(value));
  }

  std::string get(const std::string& section, const std::string& key) const {
    return tree_.get<std::string>(path(section, key));
  }

  ExperimentConfig resolve(ConfigWarnings* warnings = nullptr) const;

 private:
  static boost::property_tree::ptree::path_type path(const std::string& section, const std::string& key) {
    return boost::property_tree::ptree::path_type(section + "\x1f" + key, '\x1f');
  }

  boost::property_tree::ptree tree_;
};

inline ExperimentConfig ConfigLayers::resolve(ConfigWarnings* warnings) const {
  using namespace detail;
  ExperimentConfig c;
  auto num = [&](const char* s, const char* k) { return parse_double(std::string(s) + "." + k, get(s, k)); };
  auto integer = [&](const char* s, const char* k) { return parse_int(std::string(s) + "." + k, get(s, k)); };
  auto flag = [&](const char* s, const char* k) { return parse_bool(std::string(s) + "." + k, get(s, k)); };

  c.h0 = num("sheet", "h0");
  c.h1 = num("sheet", "h1");
  if (!(c.h0 > 0.0 && c.h0 < 1.0) || !(c.h1 > 0.0 && c.h1 < 1.0)) {
    fail(ErrorKind::config, "config sheet.h0/h1 must lie in (0,1)");
  }
  c.kappa = num("sheet", "kappa");
  if (!(c.kappa > 0.0)) fail(ErrorKind::config, "config sheet.kappa must be positive");
  const long long m0 = integer("sheet", "m0");
  const long long m1 = integer("sheet", "m1");
  if (m0 < 1 || m1 < 1 || m0 > 10'000'000 || m1 > 10'000'000) {
    fail(ErrorKind::config, "config sheet.m0/m1 must be in [1, 1e7]");
  }
  c.m0 = static_cast<int>(m0);
  c.m1 = static_cast<int>(m1);

  c.levels.clear();
  for (const auto& item : split_list(get("run", "levels"))) {
    const long long n = parse_int("run.levels", item);
    if (n < 1 || n > 6) fail(ErrorKind::config, "config run.levels entries must be in [1, 6]");
    c.levels.push_back(static_cast<int>(n));
  }
  if (c.levels.empty()) fail(ErrorKind::config, "config run.levels is empty");
  std::sort(c.levels.begin(), c.levels.end());
  if (std::adjacent_find(c.levels.begin(), c.levels.end()) != c.levels.end()) {
    fail(ErrorKind::config, "config run.levels has duplicates");
  }

  c.seed = parse_u64("run.seed", get("run", "seed"));
  const auto seed_items = split_list(get("run", "seeds"));
  if (seed_items.empty()) fail(ErrorKind::config, "config run.seeds is empty");
  if (seed_items.size() == 1) {
    const long long count = parse_int("run.seeds", seed_items[0]);
    if (count < 1 || count > 100000) fail(ErrorKind::config, "config run.seeds count must be in [1, 100000]");
    for (long long k = 0; k < count; ++k) c.seeds.push_back(derive_seed(c.seed, static_cast<std::uint64_t>(k)));
  } else {
    for (const auto& item : seed_items) c.seeds.push_back(parse_u64("run.seeds", item));
  }

  const std::string variant = get("run", "variant");
  if (variant == "cutoff_sheet") c.variant = SchemeVariant::cutoff_sheet;
  else if (variant == "raw_sheet_kappa_infinity") c.variant = SchemeVariant::raw_sheet_kappa_infinity;
  else if (variant == "synchronized_grid") c.variant = SchemeVariant::synchronized_grid;
  else bad_value("run.variant", variant, "expected cutoff_sheet, raw_sheet_kappa_infinity or synchronized_grid");

  const long long threads = integer("run", "threads");
  if (threads < 1 || threads > 256) fail(ErrorKind::config, "config run.threads must be in [1, 256]");
  c.threads = static_cast<int>(threads);
  c.zero_noise = flag("run", "zero_noise");
  c.synthetic = flag("run", "synthetic");

  c.alpha = num("norm", "alpha");
  c.window_radius = num("norm", "window_radius");
  c.padding = num("norm", "padding");
  const long long points = integer("norm", "reference_points");
  if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) fail(ErrorKind::config, "config norm.alpha must be >= 0");
  if (!(c.window_radius > 0.0) || !std::isfinite(c.window_radius)) {
    fail(ErrorKind::config, "config norm.window_radius must be positive");
  }
  if (!(c.padding >= 2.0 * c.window_radius) || !std::isfinite(c.padding)) {
    fail(ErrorKind::config, "config norm.padding must be >= 2 * window_radius");
  }
  if (points < 3 || points > 4097) fail(ErrorKind::config, "config norm.reference_points must be in [3, 4097]");
  c.reference_points = static_cast<int>(points);
  const double smallest_l = std::ldexp(1.0, c.levels.front() + 1);
  if (c.window_radius > smallest_l) {
    fail(ErrorKind::config, "config norm.window_radius exceeds the Galerkin domain at the coarsest level");
  }

  c.out_dir = get("output", "dir");
  if (c.out_dir.empty()) fail(ErrorKind::config, "config output.dir is empty");
  c.emit_plots = flag("output", "emit_plots");
  const std::string thin = get("output", "thin");
  if (thin == "auto") {
    c.thin = 0;
  } else {
    c.thin = parse_int("output.thin", thin);
    if (c.thin < 1) fail(ErrorKind::config, "config output.thin must be >= 1 or auto");
  }

  const HurstPair hp = c.hurst();
  if (hp.rough_regime()) {
    if (!(c.alpha > hp.alpha0())) {
      fail(ErrorKind::config, "config norm.alpha = " + std::to_string(c.alpha) + " must exceed alpha0 = 1 - (2 h0 + h1) = " +
                                  std::to_string(hp.alpha0()) + " in the rough regime");
    }
    if (warnings && c.variant != SchemeVariant::raw_sheet_kappa_infinity && c.kappa > hp.alpha0() / 5.0) {
      warnings->messages.push_back("kappa = " + std::to_string(c.kappa) + " exceeds alpha0/5 = " +
                                   std::to_string(hp.alpha0() / 5.0) + "; the convergence theorem does not cover this run");
    }
  }
  return c;
}

/// Fully resolved configuration as JSON, for metadata sidecars.
inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["sheet"] = {{"h0", c.h0}, {"h1", c.h1}, {"kappa", std::isinf(c.kappa) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(c.kappa)},
                {"m0", c.m0}, {"m1", c.m1}};
  j["run"] = {{"levels", c.levels},       {"seed", c.seed},           {"seeds", c.seeds},
              {"variant", to_string(c.variant)}, {"zero_noise", c.zero_noise}, {"synthetic", c.synthetic}};
  j["norm"] = {{"alpha", c.alpha},
               {"window_radius", c.window_radius},
               {"padding", c.padding},
               {"reference_points", c.reference_points}};
  j["output"] = {{"emit_plots", c.emit_plots}, {"thin", c.thin == 0 ? nlohmann::ordered_json("auto") : nlohmann::ordered_json(c.thin)}};
  return j;
}

}  // namespace rheat
