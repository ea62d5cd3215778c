#include "qcd/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qcd/errors.hpp"

namespace qcd {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

void require_keys(const json& object, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  for (const auto& item : object.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end()) {
      fail(where + ": unknown field '" + item.key() + "'");
    }
  }
}

double get_number(const json& object, const std::string& where,
                  const char* key) {
  if (!object.contains(key)) fail(where + ": missing field '" + key + "'");
  const auto& v = object.at(key);
  if (!v.is_number()) fail(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t get_count(const json& object, const std::string& where,
                        const char* key, std::uint64_t fallback) {
  if (!object.contains(key)) return fallback;
  const auto& v = object.at(key);
  if (!v.is_number_unsigned()) {
    fail(where + ": field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

// h accepts a non-negative number or the string "inf".
double parse_h(const json& object, const std::string& where) {
  if (!object.contains("h")) return 0.0;
  const auto& v = object.at("h");
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    fail(where + ": field 'h' must be a number or \"inf\"");
  }
  if (!v.is_number()) fail(where + ": field 'h' must be a number or \"inf\"");
  return v.get<double>();
}

FamilyConfig parse_family(const json& object) {
  if (!object.is_object()) fail("family: must be an object");
  FamilyConfig family;
  const std::string type =
      object.contains("type") && object.at("type").is_string()
          ? object.at("type").get<std::string>()
          : "";
  if (type == "gaussian_finite") {
    require_keys(object, "family",
                 {"type", "thetas", "theta_star", "control"});
    family.type = FamilyConfig::Type::kGaussianFinite;
    if (!object.contains("thetas") || !object.at("thetas").is_array() ||
        object.at("thetas").empty()) {
      fail("family: 'thetas' must be a non-empty array");
    }
    for (const auto& t : object.at("thetas")) {
      if (!t.is_number()) fail("family: 'thetas' entries must be numbers");
      family.thetas.push_back(t.get<double>());
    }
  } else if (type == "gaussian_expfam") {
    require_keys(object, "family",
                 {"type", "theta_interval", "epsilon", "theta_star", "control"});
    family.type = FamilyConfig::Type::kGaussianExpfam;
    if (!object.contains("theta_interval") ||
        !object.at("theta_interval").is_array() ||
        object.at("theta_interval").size() != 2) {
      fail("family: 'theta_interval' must be an array [theta_l, theta_u]");
    }
    family.theta_lower = object.at("theta_interval").at(0).get<double>();
    family.theta_upper = object.at("theta_interval").at(1).get<double>();
    if (object.contains("epsilon")) {
      family.epsilon = get_number(object, "family", "epsilon");
    }
  } else {
    fail("family: 'type' must be \"gaussian_finite\" or \"gaussian_expfam\"");
  }
  family.theta_star = get_number(object, "family", "theta_star");
  if (object.contains("control")) {
    const auto& control = object.at("control");
    if (!control.is_object()) fail("family: 'control' must be an object");
    require_keys(control, "family.control", {"mean"});
    family.control_mean = get_number(control, "family.control", "mean");
  }
  return family;
}

DetectorSpec parse_detector(const json& object, std::size_t index) {
  const std::string where = "detectors[" + std::to_string(index) + "]";
  if (!object.is_object()) fail(where + ": must be an object");
  require_keys(object, where,
               {"type", "theta", "mu", "h", "window", "pattern", "beta", "name"});
  DetectorSpec spec;
  const std::string type =
      object.contains("type") && object.at("type").is_string()
          ? object.at("type").get<std::string>()
          : "";
  if (type == "cusum") {
    spec.kind = DetectorKind::kCusum;
  } else if (type == "decusum") {
    spec.kind = DetectorKind::kDecusum;
  } else if (type == "gcusum") {
    spec.kind = DetectorKind::kGcusum;
  } else if (type == "gdecusum") {
    spec.kind = DetectorKind::kGdecusum;
  } else if (type == "fractional") {
    spec.kind = DetectorKind::kFractional;
  } else {
    fail(where +
         ": 'type' must be one of cusum|decusum|gcusum|gdecusum|fractional");
  }
  if (object.contains("theta")) {
    spec.params.design_theta = get_number(object, where, "theta");
  }
  if (object.contains("mu")) {
    spec.params.mu = get_number(object, where, "mu");
  }
  spec.params.h = parse_h(object, where);
  if (object.contains("window")) {
    const std::uint64_t w = get_count(object, where, "window", 0);
    if (w < 1) fail(where + ": 'window' must be >= 1");
    spec.params.window = static_cast<std::uint32_t>(w);
  }
  if (object.contains("pattern")) {
    const auto& p = object.at("pattern");
    if (!p.is_string()) fail(where + ": 'pattern' must be a string");
    SkipPattern pattern;
    if (p.get<std::string>() == "period2") {
      pattern.kind = SkipPattern::Kind::kPeriod2;
    } else if (p.get<std::string>() == "bernoulli") {
      pattern.kind = SkipPattern::Kind::kBernoulli;
      pattern.keep_probability = get_number(object, where, "beta");
    } else {
      fail(where + ": 'pattern' must be \"period2\" or \"bernoulli\"");
    }
    spec.params.skip_pattern = pattern;
  } else if (object.contains("beta")) {
    fail(where + ": 'beta' requires pattern \"bernoulli\"");
  }
  if (object.contains("name")) {
    if (!object.at("name").is_string()) fail(where + ": 'name' must be a string");
    spec.name = object.at("name").get<std::string>();
  } else {
    spec.name = std::string(detector_kind_name(spec.kind));
  }
  return spec;
}

bool theta_in_family(const FamilyConfig& family, double theta) {
  if (family.type == FamilyConfig::Type::kGaussianFinite) {
    return std::find(family.thetas.begin(), family.thetas.end(), theta) !=
           family.thetas.end();
  }
  return theta >= family.theta_lower && theta <= family.theta_upper;
}

void validate(const ExperimentConfig& config) {
  const FamilyConfig& family = config.family;
  if (family.type == FamilyConfig::Type::kGaussianFinite) {
    for (const double t : family.thetas) {
      if (!std::isfinite(t)) fail("family: thetas must be finite");
    }
    if (!theta_in_family(family, family.theta_star)) {
      fail("family: theta_star must equal one of the declared thetas");
    }
  } else {
    if (!(family.theta_lower > 0.0)) fail("family: theta_l must be > 0");
    if (!(family.theta_upper > family.theta_lower)) {
      fail("family: theta_u must exceed theta_l");
    }
    if (!(family.epsilon >= 0.0)) fail("family: epsilon must be >= 0");
    if (!theta_in_family(family, family.theta_star)) {
      fail("family: theta_star must lie inside the theta interval");
    }
  }
  if (!theta_in_family(family, config.theta_true)) {
    fail("theta_true must lie inside the declared family");
  }
  if (config.detectors.empty()) fail("at least one detector is required");
  for (std::size_t i = 0; i < config.detectors.size(); ++i) {
    const auto& d = config.detectors[i].params;
    if (d.design_theta && !theta_in_family(family, *d.design_theta)) {
      fail("detectors[" + std::to_string(i) +
           "]: theta must lie inside the declared family");
    }
  }
  if (config.thresholds.empty()) fail("thresholds must be non-empty");
  for (std::size_t i = 0; i < config.thresholds.size(); ++i) {
    if (!std::isfinite(config.thresholds[i])) fail("thresholds must be finite");
    if (i > 0 && !(config.thresholds[i] > config.thresholds[i - 1])) {
      fail("thresholds must be strictly increasing");
    }
  }
  if (config.trials < 100) fail("trials must be >= 100");
  if (config.cadd_trials < 100) fail("cadd_trials must be >= 100");
  if (config.pdc_cycles < 100) fail("pdc_cycles must be >= 100");
  if (config.horizon < 1) fail("horizon must be >= 1");
  if (config.gamma_grid.empty()) fail("gamma_grid must be non-empty");
  for (const std::uint64_t g : config.gamma_grid) {
    if (g < 1) fail("gamma_grid entries must be >= 1");
    if (g > config.horizon) fail("gamma_grid entries must not exceed the horizon");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json document;
  try {
    document = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!document.is_object()) fail("config root must be a JSON object");
  require_keys(document, "config",
               {"family", "theta_true", "detectors", "thresholds", "trials",
                "cadd_trials", "pdc_cycles", "horizon", "gamma_grid", "seed",
                "output"});

  ExperimentConfig config;
  if (!document.contains("family")) fail("config: missing field 'family'");
  config.family = parse_family(document.at("family"));
  config.theta_true = get_number(document, "config", "theta_true");

  if (!document.contains("detectors") || !document.at("detectors").is_array() ||
      document.at("detectors").empty()) {
    fail("config: 'detectors' must be a non-empty array");
  }
  std::size_t index = 0;
  for (const auto& d : document.at("detectors")) {
    config.detectors.push_back(parse_detector(d, index++));
  }

  if (!document.contains("thresholds") ||
      !document.at("thresholds").is_array()) {
    fail("config: 'thresholds' must be an array");
  }
  for (const auto& t : document.at("thresholds")) {
    if (!t.is_number()) fail("config: 'thresholds' entries must be numbers");
    config.thresholds.push_back(t.get<double>());
  }

  config.trials = get_count(document, "config", "trials", config.trials);
  config.cadd_trials =
      get_count(document, "config", "cadd_trials", config.cadd_trials);
  config.pdc_cycles =
      get_count(document, "config", "pdc_cycles", config.pdc_cycles);
  config.horizon = get_count(document, "config", "horizon", config.horizon);
  if (document.contains("gamma_grid")) {
    if (!document.at("gamma_grid").is_array()) {
      fail("config: 'gamma_grid' must be an array");
    }
    config.gamma_grid.clear();
    for (const auto& g : document.at("gamma_grid")) {
      if (!g.is_number_unsigned()) {
        fail("config: 'gamma_grid' entries must be non-negative integers");
      }
      config.gamma_grid.push_back(g.get<std::uint64_t>());
    }
  }
  config.seed = get_count(document, "config", "seed", config.seed);
  if (document.contains("output")) {
    if (!document.at("output").is_string()) {
      fail("config: 'output' must be a string");
    }
    config.output = document.at("output").get<std::string>();
  }

  validate(config);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  json family;
  if (config.family.type == FamilyConfig::Type::kGaussianFinite) {
    family["type"] = "gaussian_finite";
    family["thetas"] = config.family.thetas;
  } else {
    family["type"] = "gaussian_expfam";
    family["theta_interval"] = {config.family.theta_lower,
                                config.family.theta_upper};
    family["epsilon"] = config.family.epsilon;
  }
  family["theta_star"] = config.family.theta_star;
  if (config.family.control_mean) {
    family["control"] = {{"mean", *config.family.control_mean}};
  }

  json detectors = json::array();
  for (const DetectorSpec& spec : config.detectors) {
    json d;
    d["type"] = std::string(detector_kind_name(spec.kind));
    if (spec.params.design_theta) d["theta"] = *spec.params.design_theta;
    if (spec.params.mu != 0.0) d["mu"] = spec.params.mu;
    if (spec.params.h != 0.0) {
      if (std::isinf(spec.params.h)) {
        d["h"] = "inf";
      } else {
        d["h"] = spec.params.h;
      }
    }
    if (spec.params.window) d["window"] = *spec.params.window;
    if (spec.params.skip_pattern) {
      if (spec.params.skip_pattern->kind == SkipPattern::Kind::kPeriod2) {
        d["pattern"] = "period2";
      } else {
        d["pattern"] = "bernoulli";
        d["beta"] = spec.params.skip_pattern->keep_probability;
      }
    }
    d["name"] = spec.name;
    detectors.push_back(std::move(d));
  }

  json document;
  document["family"] = std::move(family);
  document["theta_true"] = config.theta_true;
  document["detectors"] = std::move(detectors);
  document["thresholds"] = config.thresholds;
  document["trials"] = config.trials;
  document["cadd_trials"] = config.cadd_trials;
  document["pdc_cycles"] = config.pdc_cycles;
  document["horizon"] = config.horizon;
  document["gamma_grid"] = config.gamma_grid;
  document["seed"] = config.seed;
  document["output"] = config.output;
  return document.dump(2) + "\n";
}

FamilySpec build_family(const FamilyConfig& family) {
  const Density pre = Density::gaussian(0.0);
  std::optional<Density> control;
  if (family.control_mean) control = Density::gaussian(*family.control_mean);
  if (family.type == FamilyConfig::Type::kGaussianFinite) {
    std::vector<Density> members;
    members.reserve(family.thetas.size());
    for (const double t : family.thetas) members.push_back(Density::gaussian(t));
    const auto it = std::find(family.thetas.begin(), family.thetas.end(),
                              family.theta_star);
    if (it == family.thetas.end()) {
      fail("family: theta_star must equal one of the declared thetas");
    }
    return FamilySpec::finite(
        pre, family.thetas, std::move(members),
        static_cast<std::size_t>(it - family.thetas.begin()), control);
  }
  ExponentialFamilySpec fam(pre, std::make_shared<GaussianLogPartition>(),
                            family.theta_lower, family.theta_upper,
                            family.epsilon);
  return FamilySpec::exponential(std::move(fam), family.theta_star, control);
}

TradeoffSettings settings_from(const ExperimentConfig& config) {
  TradeoffSettings settings;
  settings.far_trials = config.trials;
  settings.cadd_trials = config.cadd_trials;
  settings.pdc_cycles = config.pdc_cycles;
  settings.horizon = config.horizon;
  settings.gamma_grid = config.gamma_grid;
  return settings;
}

}  // namespace qcd
