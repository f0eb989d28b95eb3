#include "cli/config.hpp"

#include <swapfleet/error.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace swapfleet::cli {

namespace {

const std::set<std::string> kKeys{"model",  "n_scooters", "n_swappers", "gamma",
                                  "lambda", "mu",         "mu_usage",   "k_buckets",
                                  "k_threshold", "p",     "g",          "y0",
                                  "x0"};

double number(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
  return v.get<double>();
}

std::int64_t integer(const Json& j, const char* key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ConfigError(std::string(key) + " must be an integer");
  return v.get<std::int64_t>();
}

Vector vector_of(const Json& v, const char* key, int expect) {
  if (!v.is_array() || static_cast<int>(v.size()) != expect)
    throw ConfigError(std::string(key) + " must be an array of " + std::to_string(expect) +
                      " numbers");
  Vector out(expect);
  for (int i = 0; i < expect; ++i) {
    if (!v[i].is_number()) throw ConfigError(std::string(key) + " must hold numbers");
    out(i) = v[i].get<double>();
  }
  return out;
}

Matrix matrix_of(const Json& v, int k) {
  Matrix m(k, k);
  if (v.is_array() && static_cast<int>(v.size()) == k * k && (k == 0 || !v[0].is_array())) {
    const Vector flat = vector_of(v, "p", k * k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) m(i, j) = flat(i * k + j);
    return m;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != k)
    throw ConfigError("p must be \"uniform\", \"jump\", or a " + std::to_string(k) + "x" +
                      std::to_string(k) + " matrix");
  for (int i = 0; i < k; ++i) m.row(i) = vector_of(v[i], "p", k).transpose();
  return m;
}

}  // namespace

Json reference_config_json() {
  return Json{{"model", 1},    {"n_scooters", 100}, {"n_swappers", 50},   {"lambda", 1.0},
              {"mu", 1.0},     {"mu_usage", 1.0},   {"k_buckets", 5},     {"k_threshold", 1},
              {"p", "uniform"}, {"g", "constant"},  {"y0", "uniform"}};
}

FleetConfig parse_fleet_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");

  FleetConfig c;
  c.source = j;
  const auto model = integer(j, "model", 1);
  if (model != 1 && model != 2) throw ConfigError("model must be 1 or 2");
  c.model = model == 1 ? Model::kInstantUsage : Model::kTimedUsage;

  FleetParams p;
  p.k_buckets = static_cast<int>(integer(j, "k_buckets", 5));
  if (p.k_buckets < 1) throw ConfigError("k_buckets must be at least 1");
  const int k = p.k_buckets;
  p.k_threshold = static_cast<int>(integer(j, "k_threshold", 1));
  p.lambda = number(j, "lambda", 1.0);
  p.mu = number(j, "mu", 1.0);
  p.mu_usage = number(j, "mu_usage", 1.0);
  if (!j.contains("n_scooters") || !j.at("n_scooters").is_null())
    p.n_scooters = integer(j, "n_scooters", 100);
  if (j.contains("n_swappers")) p.n_swappers = integer(j, "n_swappers", 0);
  if (j.contains("gamma")) p.gamma = number(j, "gamma", 0.0);
  if (!p.n_swappers && !p.gamma) p.gamma = 0.5;
  if (!p.n_swappers && p.n_scooters) {
    const double n_star = *p.gamma * static_cast<double>(*p.n_scooters);
    if (std::abs(n_star - std::round(n_star)) < 1e-9) p.n_swappers = std::llround(n_star);
    else c.warnings.push_back("gamma * n_scooters is not an integer; simulation needs n_swappers");
  }

  const Json p_spec = j.value("p", Json("uniform"));
  if (p_spec == "uniform") {
    p.p_matrix = preset_uniform_p(k);
  } else if (p_spec == "jump") {
    if (k != 5) throw ConfigError("p = \"jump\" requires k_buckets = 5");
    p.p_matrix = preset_jump_p();
    p.p_rounded = true;
  } else if (p_spec.is_string()) {
    throw ConfigError("unknown p preset '" + p_spec.get<std::string>() + "'");
  } else {
    p.p_matrix = matrix_of(p_spec, k);
  }

  const Json g_spec = j.value("g", Json("constant"));
  if (g_spec == "constant") p.g_weights = constant_g(k);
  else if (g_spec == "linear") p.g_weights = linear_g(k);
  else if (g_spec.is_string())
    throw ConfigError("unknown g preset '" + g_spec.get<std::string>() + "'");
  else p.g_weights = vector_of(g_spec, "g", k);

  c.params = validate(p, &c.warnings);

  const Json y_spec = j.value("y0", Json("uniform"));
  if (y_spec == "uniform") c.init = uniform_state(k);
  else if (y_spec.is_string())
    throw ConfigError("unknown y0 preset '" + y_spec.get<std::string>() + "'");
  else c.init.y = vector_of(y_spec, "y0", k);
  if (c.model == Model::kTimedUsage) c.init.x = number(j, "x0", 0.0);
  else if (j.contains("x0")) throw ConfigError("x0 is only meaningful for model 2");
  check_state(c.init, k, 1e-9);
  return c;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const Json& config) { return hex64(fnv1a64(config.dump())); }

}  // namespace swapfleet::cli
