#include "excirec/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace excirec {

namespace {

using nlohmann::json;

enum class JType { boolean, unsigned_int, integer, number, string, array, object };

struct Field {
  const char* key;
  JType type;
  bool required = false;
};

const char* type_name(JType t) {
  switch (t) {
    case JType::boolean: return "boolean";
    case JType::unsigned_int: return "unsigned integer";
    case JType::integer: return "integer";
    case JType::number: return "number";
    case JType::string: return "string";
    case JType::array: return "array";
    case JType::object: return "object";
  }
  return "?";
}

bool type_matches(const json& v, JType t) {
  switch (t) {
    case JType::boolean: return v.is_boolean();
    case JType::unsigned_int:
      return v.is_number_unsigned() ||
             (v.is_number_integer() && v.get<long long>() >= 0);
    case JType::integer: return v.is_number_integer();
    case JType::number: return v.is_number();
    case JType::string: return v.is_string();
    case JType::array: return v.is_array();
    case JType::object: return v.is_object();
  }
  return false;
}

// Rejects unknown keys and wrong types, reporting JSON pointer paths.
void validate_object(const json& j, const std::string& path,
                     const std::vector<Field>& fields) {
  if (!j.is_object())
    throw config_error("expected an object at '" + (path.empty() ? "/" : path) +
                       "'");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const auto& f : fields)
      if (item.key() == f.key) {
        known = true;
        if (!type_matches(item.value(), f.type))
          throw config_error("expected " + std::string(type_name(f.type)) +
                             " at '" + path + "/" + f.key + "'");
        break;
      }
    if (!known)
      throw config_error("unknown key at '" + path + "/" + item.key() + "'");
  }
  for (const auto& f : fields)
    if (f.required && !j.contains(f.key))
      throw config_error("missing required key '" + path + "/" + f.key + "'");
}

std::vector<double> number_list(const json& arr, const std::string& path) {
  std::vector<double> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw config_error("expected number at '" + path + "/" +
                         std::to_string(i) + "'");
    out.push_back(arr[i].get<double>());
  }
  return out;
}

const std::vector<Field> kCommonFields = {
    {"schema_version", JType::integer, true},
    {"master_seed", JType::unsigned_int, true},
    {"output_dir", JType::string, false},
};

CommonConfig parse_common(const json& j) {
  if (!j.contains("schema_version"))
    throw config_error("missing required key '/schema_version'");
  if (!j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != kSchemaVersion) {
    std::ostringstream msg;
    msg << "unsupported value at '/schema_version' (pinned to "
        << kSchemaVersion << ")";
    throw config_error(msg.str());
  }
  CommonConfig c;
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.output_dir = j.value("output_dir", std::string("."));
  return c;
}

std::vector<Field> with_common(std::vector<Field> fields) {
  fields.insert(fields.end(), kCommonFields.begin(), kCommonFields.end());
  return fields;
}

GeometryConfig parse_geometry(const json& j) {
  validate_object(j, "/geometry",
                  {{"kind", JType::string, true},
                   {"n", JType::integer, false},
                   {"spacing", JType::number, false},
                   {"nx", JType::integer, false},
                   {"ny", JType::integer, false},
                   {"spacing_x", JType::number, false},
                   {"spacing_y", JType::number, false},
                   {"pattern", JType::string, false},
                   {"theta_deg", JType::number, false},
                   {"phi_deg", JType::number, false},
                   {"mu", JType::number, false}});
  GeometryConfig g;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "chain1d") {
    g.kind = GeometryKind::chain1d;
  } else if (kind == "array2d") {
    g.kind = GeometryKind::array2d;
  } else {
    throw config_error("unknown value at '/geometry/kind': '" + kind + "'");
  }
  g.n = j.value("n", g.n);
  g.spacing = j.value("spacing", g.spacing);
  g.nx = j.value("nx", g.nx);
  g.ny = j.value("ny", g.ny);
  g.spacing_x = j.value("spacing_x", g.spacing_x);
  g.spacing_y = j.value("spacing_y", g.spacing_y);
  if (j.contains("pattern")) {
    const std::string p = j["pattern"].get<std::string>();
    if (p == "chain_axis") {
      g.pattern = DipolePattern::chain_axis;
    } else if (p == "uniform_angle") {
      g.pattern = DipolePattern::uniform_angle;
    } else if (p == "alternating_columns") {
      g.pattern = DipolePattern::alternating_columns;
    } else {
      throw config_error("unknown value at '/geometry/pattern': '" + p + "'");
    }
  } else if (g.kind == GeometryKind::array2d) {
    g.pattern = DipolePattern::alternating_columns;
  }
  g.theta_deg = j.value("theta_deg", g.theta_deg);
  g.phi_deg = j.value("phi_deg", g.phi_deg);
  g.mu = j.value("mu", g.mu);
  return g;
}

nn::NetworkConfig parse_network(const json& j) {
  validate_object(j, "/network",
                  {{"input_shape", JType::array, false},
                   {"layers", JType::array, true}});
  nn::NetworkConfig cfg;
  if (j.contains("input_shape")) {
    const auto& shape = j["input_shape"];
    if (shape.size() != 3 || !shape[0].is_number_integer() ||
        !shape[1].is_number_integer() || !shape[2].is_number_integer())
      throw config_error(
          "expected [channels, height, width] at '/network/input_shape'");
    cfg.input = nn::Shape{shape[0].get<int>(), shape[1].get<int>(),
                          shape[2].get<int>()};
  }
  const auto& layers = j.at("layers");
  for (size_t i = 0; i < layers.size(); ++i) {
    const std::string path = "/network/layers/" + std::to_string(i);
    validate_object(layers[i], path,
                    {{"kind", JType::string, true},
                     {"kernel", JType::integer, false},
                     {"channels", JType::integer, false},
                     {"stride", JType::integer, false},
                     {"padding", JType::string, false},
                     {"width", JType::integer, false},
                     {"units", JType::integer, false}});
    const std::string kind = layers[i].at("kind").get<std::string>();
    nn::LayerSpec spec;
    if (kind == "conv") {
      spec = nn::conv_spec(layers[i].value("kernel", 3),
                           layers[i].value("channels", 1),
                           layers[i].value("stride", 1));
      const std::string padding = layers[i].value("padding", "same");
      if (padding == "same") {
        spec.padding = nn::Padding::same;
      } else if (padding == "valid") {
        spec.padding = nn::Padding::valid;
      } else {
        throw config_error("unknown value at '" + path + "/padding'");
      }
    } else if (kind == "relu") {
      spec = nn::relu_spec();
    } else if (kind == "avgpool") {
      spec = nn::avgpool_spec(layers[i].value("width", 2));
    } else if (kind == "flatten") {
      spec = nn::flatten_spec();
    } else if (kind == "dense") {
      if (!layers[i].contains("units"))
        throw config_error("missing required key '" + path + "/units'");
      spec = nn::dense_spec(layers[i]["units"].get<int>());
    } else {
      throw config_error("unknown value at '" + path + "/kind': '" + kind +
                         "'");
    }
    cfg.layers.push_back(spec);
  }
  return cfg;
}

TipModel parse_tip(const json& j) {
  validate_object(j, "/tip",
                  {{"a_r", JType::number, false},
                   {"eps_b", JType::number, false},
                   {"eps_env", JType::number, false},
                   {"omega_p", JType::number, false},
                   {"gamma_p", JType::number, false},
                   {"v_F", JType::number, false}});
  TipModel t;
  t.a_r = j.value("a_r", t.a_r);
  t.eps_b = j.value("eps_b", t.eps_b);
  t.eps_env = j.value("eps_env", t.eps_env);
  t.omega_p = j.value("omega_p", t.omega_p);
  t.gamma_p = j.value("gamma_p", t.gamma_p);
  t.v_F = j.value("v_F", t.v_F);
  return t;
}

}  // namespace

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw config_error("unparseable config " + path + ": " + e.what());
  }
}

GenerateConfig parse_generate_config(const json& j) {
  validate_object(j, "",
                  with_common({{"geometry", JType::object, true},
                               {"sigma_d", JType::array, false},
                               {"sigma_od", JType::array, false},
                               {"realizations_per_sigma", JType::integer, true},
                               {"n_tip", JType::integer, false},
                               {"scan_extent", JType::number, false},
                               {"z_dip", JType::number, false},
                               {"grid_nx", JType::integer, false},
                               {"grid_ny", JType::integer, false},
                               {"grid_margin", JType::number, false},
                               {"noise_sigma", JType::number, false},
                               {"split_fraction", JType::number, false},
                               {"train_file", JType::string, false},
                               {"test_file", JType::string, false},
                               {"manifest_file", JType::string, false}}));
  GenerateConfig c;
  c.common = parse_common(j);
  c.ensemble.geometry = parse_geometry(j.at("geometry"));
  if (j.contains("sigma_d"))
    c.ensemble.sigma_d_list = number_list(j["sigma_d"], "/sigma_d");
  if (j.contains("sigma_od"))
    c.ensemble.sigma_od_list = number_list(j["sigma_od"], "/sigma_od");
  c.ensemble.realizations_per_sigma = j.at("realizations_per_sigma").get<int>();
  c.ensemble.n_tip = j.value("n_tip", c.ensemble.n_tip);
  c.ensemble.scan_extent = j.value("scan_extent", c.ensemble.scan_extent);
  c.ensemble.z_dip = j.value("z_dip", c.ensemble.z_dip);
  c.ensemble.grid_nx = j.value("grid_nx", c.ensemble.grid_nx);
  c.ensemble.grid_ny = j.value("grid_ny", c.ensemble.grid_ny);
  c.ensemble.grid_margin = j.value("grid_margin", c.ensemble.grid_margin);
  c.ensemble.noise_sigma = j.value("noise_sigma", c.ensemble.noise_sigma);
  c.ensemble.split_fraction = j.value("split_fraction", c.ensemble.split_fraction);
  c.ensemble.master_seed = c.common.master_seed;
  c.train_file = j.value("train_file", c.train_file);
  c.test_file = j.value("test_file", c.test_file);
  c.manifest_file = j.value("manifest_file", c.manifest_file);
  return c;
}

TrainCommandConfig parse_train_config(const json& j) {
  validate_object(j, "",
                  with_common({{"train_file", JType::string, true},
                               {"val_file", JType::string, false},
                               {"val_fraction", JType::number, false},
                               {"network", JType::object, false},
                               {"epochs", JType::integer, false},
                               {"batch_size", JType::integer, false},
                               {"learning_rate", JType::number, false},
                               {"noise_sigma", JType::number, false},
                               {"verbose", JType::boolean, false},
                               {"checkpoint_file", JType::string, false},
                               {"history_file", JType::string, false}}));
  TrainCommandConfig c;
  c.common = parse_common(j);
  c.train_file = j.at("train_file").get<std::string>();
  c.val_file = j.value("val_file", c.val_file);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  if (j.contains("network")) c.network = parse_network(j["network"]);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.verbose = j.value("verbose", c.verbose);
  c.checkpoint_file = j.value("checkpoint_file", c.checkpoint_file);
  c.history_file = j.value("history_file", c.history_file);
  return c;
}

EvaluateConfig parse_evaluate_config(const json& j) {
  validate_object(j, "",
                  with_common({{"checkpoint_file", JType::string, true},
                               {"dataset_file", JType::string, true},
                               {"histogram_file", JType::string, false},
                               {"state_mean_file", JType::string, false},
                               {"svg", JType::boolean, false}}));
  EvaluateConfig c;
  c.common = parse_common(j);
  c.checkpoint_file = j.at("checkpoint_file").get<std::string>();
  c.dataset_file = j.at("dataset_file").get<std::string>();
  c.histogram_file = j.value("histogram_file", c.histogram_file);
  c.state_mean_file = j.value("state_mean_file", c.state_mean_file);
  c.svg = j.value("svg", c.svg);
  return c;
}

PredictConfig parse_predict_config(const json& j) {
  validate_object(j, "",
                  with_common({{"checkpoint_file", JType::string, true},
                               {"spectrum_file", JType::string, true},
                               {"coefficients_file", JType::string, false},
                               {"svg", JType::boolean, false}}));
  PredictConfig c;
  c.common = parse_common(j);
  c.checkpoint_file = j.at("checkpoint_file").get<std::string>();
  c.spectrum_file = j.at("spectrum_file").get<std::string>();
  c.coefficients_file = j.value("coefficients_file", c.coefficients_file);
  c.svg = j.value("svg", c.svg);
  return c;
}

LocalFieldCommandConfig parse_localfield_config(const json& j) {
  validate_object(j, "",
                  with_common({{"n", JType::integer, false},
                               {"spacing_nm", JType::number, false},
                               {"mu_debye", JType::number, false},
                               {"omega_m", JType::number, false},
                               {"gamma_m", JType::number, false},
                               {"tip", JType::object, false},
                               {"n_omega", JType::integer, false},
                               {"pad_gammas", JType::number, false},
                               {"n_tip", JType::integer, false},
                               {"extent_nm", JType::number, false},
                               {"z_nm", JType::number, false},
                               {"prominence_frac", JType::number, false},
                               {"min_separation", JType::integer, false},
                               {"predict", JType::boolean, false},
                               {"checkpoint_file", JType::string, false},
                               {"map_file", JType::string, false},
                               {"omegas_file", JType::string, false},
                               {"slices_file", JType::string, false},
                               {"predictions_file", JType::string, false},
                               {"svg", JType::boolean, false}}));
  LocalFieldCommandConfig c;
  c.common = parse_common(j);
  c.n = j.value("n", c.n);
  c.params.spacing_nm = j.value("spacing_nm", c.params.spacing_nm);
  c.params.mu_debye = j.value("mu_debye", c.params.mu_debye);
  c.params.omega_m = j.value("omega_m", c.params.omega_m);
  c.params.gamma_m = j.value("gamma_m", c.params.gamma_m);
  if (j.contains("tip")) c.params.tip = parse_tip(j["tip"]);
  c.n_omega = j.value("n_omega", c.n_omega);
  c.pad_gammas = j.value("pad_gammas", c.pad_gammas);
  c.n_tip = j.value("n_tip", c.n_tip);
  c.extent_nm = j.value("extent_nm", c.extent_nm);
  c.z_nm = j.value("z_nm", c.z_nm);
  c.prominence_frac = j.value("prominence_frac", c.prominence_frac);
  c.min_separation = j.value("min_separation", c.min_separation);
  c.predict = j.value("predict", c.predict);
  c.checkpoint_file = j.value("checkpoint_file", c.checkpoint_file);
  c.map_file = j.value("map_file", c.map_file);
  c.omegas_file = j.value("omegas_file", c.omegas_file);
  c.slices_file = j.value("slices_file", c.slices_file);
  c.predictions_file = j.value("predictions_file", c.predictions_file);
  c.svg = j.value("svg", c.svg);
  if (c.predict && c.checkpoint_file.empty())
    throw config_error(
        "'/checkpoint_file' is required: feeding peak slices to the network "
        "needs a trained checkpoint (set '/predict' to false for a map-only "
        "run)");
  return c;
}

BaselineCommandConfig parse_baseline_config(const json& j) {
  validate_object(j, "",
                  with_common({{"problem", JType::string, false},
                               {"n", JType::integer, false},
                               {"spacing", JType::number, false},
                               {"states", JType::array, false},
                               {"methods", JType::array, false},
                               {"n_tip", JType::integer, false},
                               {"scan_extent", JType::number, false},
                               {"z_dip", JType::number, false},
                               {"max_iterations", JType::integer, false},
                               {"target_cost", JType::number, false},
                               {"require_convergence", JType::boolean, false},
                               {"toy_minimum", JType::array, false},
                               {"results_file", JType::string, false}}));
  BaselineCommandConfig c;
  c.common = parse_common(j);
  c.problem = j.value("problem", c.problem);
  if (c.problem != "spectrum" && c.problem != "toy_quadratic")
    throw config_error("unknown value at '/problem': '" + c.problem + "'");
  c.n = j.value("n", c.n);
  c.spacing = j.value("spacing", c.spacing);
  if (j.contains("states")) {
    for (size_t i = 0; i < j["states"].size(); ++i) {
      if (!j["states"][i].is_number_integer())
        throw config_error("expected integer at '/states/" +
                           std::to_string(i) + "'");
      c.states.push_back(j["states"][i].get<int>());
    }
  }
  if (j.contains("methods")) {
    for (size_t i = 0; i < j["methods"].size(); ++i) {
      const std::string path = "/methods/" + std::to_string(i);
      if (!j["methods"][i].is_string())
        throw config_error("expected string at '" + path + "'");
      const std::string m = j["methods"][i].get<std::string>();
      if (m == "nelder_mead") {
        c.methods.push_back(baseline::Method::nelder_mead);
      } else if (m == "differential_evolution") {
        c.methods.push_back(baseline::Method::differential_evolution);
      } else if (m == "gp_surrogate") {
        c.methods.push_back(baseline::Method::gp_surrogate);
      } else {
        throw config_error("unknown value at '" + path + "': '" + m + "'");
      }
    }
  } else {
    c.methods = {baseline::Method::nelder_mead,
                 baseline::Method::differential_evolution,
                 baseline::Method::gp_surrogate};
  }
  c.n_tip = j.value("n_tip", c.n_tip);
  c.scan_extent = j.value("scan_extent", c.scan_extent);
  c.z_dip = j.value("z_dip", c.z_dip);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.target_cost = j.value("target_cost", c.target_cost);
  c.require_convergence = j.value("require_convergence", c.require_convergence);
  if (j.contains("toy_minimum"))
    c.toy_minimum = number_list(j["toy_minimum"], "/toy_minimum");
  c.results_file = j.value("results_file", c.results_file);
  if (c.problem == "toy_quadratic" && c.toy_minimum.empty())
    throw config_error(
        "missing required key '/toy_minimum' for the toy_quadratic problem");
  return c;
}

void apply_seed_override(CommonConfig& common) {
  const char* env = std::getenv("EXCIREC_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw config_error(std::string("EXCIREC_SEED is not an unsigned integer: '") +
                       env + "'");
  common.master_seed = static_cast<std::uint64_t>(v);
}

}  // namespace excirec
