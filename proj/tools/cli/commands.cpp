#include "cli/commands.hpp"

#include <swapfleet/error.hpp>
#include <swapfleet/estimation.hpp>
#include <swapfleet/fclt.hpp>
#include <swapfleet/io.hpp>
#include <swapfleet/meanfield.hpp>
#include <swapfleet/simulator.hpp>
#include <swapfleet/staffing.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace swapfleet::cli {

namespace {

constexpr double kFllnTol = 0.01;
constexpr double kVarianceTol = 0.15;
constexpr double kMinSigma = 0.01;

const std::vector<double> kTableX{0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
const std::vector<double> kTableEps{0.01, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};

Json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-once run directory; records every file it writes.
class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    if (fs::exists(dir_) && !fs::is_empty(dir_, ec))
      throw ConfigError("output directory '" + dir + "' is not empty");
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    files_.push_back({{"path", name},
                      {"bytes", content.size()},
                      {"fnv1a64", hex64(fnv1a64(content))}});
  }

  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  const Json& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  Json files_ = Json::array();
};

template <typename F>
std::string render(F&& f) {
  std::ostringstream ss;
  f(ss);
  return ss.str();
}

std::vector<double> grid_of(const RunOptions& o) {
  if (!(o.step > 0.0)) throw ConfigError("--step must be positive");
  if (!(o.horizon > 0.0)) throw ConfigError("--horizon must be positive");
  return uniform_grid(o.horizon, o.step);
}

double ode_step(const RunOptions& o) { return std::min(meanfield::kDefaultStep, o.step); }

void require_paths(const RunOptions& o) {
  if (o.paths == 0) throw ConfigError("--paths must be at least 1");
}

void simulate(const RunOptions& o, const FleetConfig& c, Outputs& out) {
  require_paths(o);
  const auto grid = grid_of(o);
  sim::EnsembleOptions eo;
  eo.threads = o.threads;
  const auto m = sim::ensemble_moments(c.model, c.params, c.init, grid, o.paths, o.seed, eo);
  out.write("moments.csv", render([&](std::ostream& s) { io::write_moments_csv(s, m, c.model); }));
  const auto path = sim::simulate_path(c.model, c.params, c.init, grid, sub_seed(o.seed, 0));
  out.write("path.csv", render([&](std::ostream& s) { io::write_trajectory_csv(s, path, c.model); }));
}

void meanfield_cmd(const RunOptions& o, const FleetConfig& c, Outputs& out) {
  const auto sol = meanfield::solve(c.model, c.params, c.init, grid_of(o), ode_step(o));
  out.write("meanfield.csv", render([&](std::ostream& s) { io::write_trajectory_csv(s, sol, c.model); }));
  if (c.model != Model::kInstantUsage) return;
  Json eq;
  try {
    const auto e = meanfield::equilibrium_model1(c.params);
    eq = {{"y_bar", to_json(e.y_bar)}, {"residual", e.residual}, {"t_converged", e.t_converged}};
  } catch (const NumericError& e) {
    eq = {{"error", e.what()}, {"residual", e.residual()}};
  }
  out.write_json("equilibrium.json", eq);
}

void covariance_cmd(const RunOptions& o, const FleetConfig& c, Outputs& out) {
  const int dim = c.params.k_buckets + (c.model == Model::kTimedUsage ? 1 : 0);
  const auto joint = fclt::solve_joint(c.model, c.params, c.init, Matrix::Zero(dim, dim),
                                       grid_of(o), ode_step(o));
  out.write("meanfield.csv",
            render([&](std::ostream& s) { io::write_trajectory_csv(s, joint.meanfield, c.model); }));
  out.write("covariance.csv",
            render([&](std::ostream& s) { io::write_covariance_csv(s, joint.covariance); }));
  if (c.model != Model::kInstantUsage) return;
  const auto eq = fclt::equilibrium_covariance(c.params);
  out.write_json("equilibrium.json", {{"y_bar", to_json(eq.y_bar)},
                                      {"sigma_bar", to_json(eq.sigma_bar)},
                                      {"drift_residual", eq.drift_residual},
                                      {"sigma_residual", eq.sigma_residual},
                                      {"t_converged", eq.t_converged}});
}

void require_model1(const FleetConfig& c, const char* what) {
  if (c.model != Model::kInstantUsage)
    throw ConfigError(std::string(what) + " needs model 1 (the equilibrium covariance is "
                      "computed for the instant-usage model)");
}

std::int64_t staffing_n(const FleetConfig& c) { return c.params.n_scooters.value_or(100); }

void staff(const RunOptions& o, const FleetConfig& c, Outputs& out) {
  require_model1(c, "staff");
  if (o.x.size() > 1 || o.eps.size() > 1)
    throw ConfigError("staff takes a single --x and --eps; use staff-table for grids");
  staffing::ServiceConstraint sc;
  sc.x_threshold = o.x.empty() ? 0.1 : o.x.front();
  sc.epsilon = o.eps.empty() ? 0.1 : o.eps.front();
  sc.n_scooters = staffing_n(c);
  const auto r = staffing::find_gamma(sc, c.params);
  const Json j{{"gamma_star", r.gamma_star},
               {"bracket", {r.gamma_lo, r.gamma_hi}},
               {"f_bracket", {r.f_lo, r.f_hi}},
               {"f_star", r.f_star},
               {"y_bar", to_json(r.equilibrium.y_bar)},
               {"sigma00_bar", r.equilibrium.sigma_bar(0, 0)},
               {"iterations", r.iterations},
               {"doublings", r.doublings},
               {"satisfied_without_swappers", r.satisfied_without_swappers},
               {"x", sc.x_threshold},
               {"eps", sc.epsilon},
               {"n_scooters", sc.n_scooters}};
  out.write_json("staff.json", j);
  std::cout << "gamma_star " << io::format_double(r.gamma_star) << '\n';
}

void staff_table(const RunOptions& o, const FleetConfig& c, Outputs& out) {
  require_model1(c, "staff-table");
  const auto& xs = o.x.empty() ? kTableX : o.x;
  const auto& es = o.eps.empty() ? kTableEps : o.eps;
  const auto table = staffing::gamma_table(xs, es, c.params, staffing_n(c), {}, o.threads);
  out.write("gamma_table.csv", render([&](std::ostream& s) { io::write_gamma_table_csv(s, table); }));
  out.write("gamma_long.csv", render([&](std::ostream& s) { io::write_gamma_long_csv(s, table); }));
}

Json quantiles(const estimation::QuantileSummary& q) {
  if (!q.defined) return nullptr;
  return {{"q50", q.q50}, {"q80", q.q80}, {"q95", q.q95}};
}

Json regressions(const std::vector<estimation::TripRecord>& trips) {
  using estimation::Norm;
  std::vector<double> km, minutes, drop;
  for (const auto& t : trips) {
    km.push_back(t.distance / 1000.0);
    minutes.push_back(t.duration / 60.0);
    drop.push_back(static_cast<double>(t.end_battery - t.start_battery));
  }
  Json out = Json::array();
  const std::pair<const char*, const std::vector<double>*> features[] = {
      {"distance_km", &km}, {"duration_min", &minutes}};
  for (const auto& [name, xs] : features)
    for (Norm norm : {Norm::kL2, Norm::kL1})
      for (bool icpt : {false, true}) {
        const auto fit = estimation::fit_line(*xs, drop, norm, icpt);
        out.push_back({{"feature", name},
                       {"norm", norm == Norm::kL1 ? "L1" : "L2"},
                       {"intercept", fit.intercept},
                       {"slope", fit.slope},
                       {"with_intercept", icpt},
                       {"l1_objective", estimation::l1_objective(*xs, drop, fit.intercept, fit.slope)}});
      }
  return out;
}

void estimate(const RunOptions& o, Outputs& out) {
  using namespace estimation;
  if (o.trips.empty() == o.sightings.empty())
    throw ConfigError("estimate needs exactly one of --trips or --sightings");
  std::vector<TripRecord> trips;
  Json recon = nullptr;
  if (!o.sightings.empty()) {
    std::istringstream in(read_file(o.sightings));
    const auto sightings = read_sightings_csv(in);
    ReconstructionConfig rc;
    rc.utc_offset_s = std::llround(o.utc_offset_h * 3600.0);
    auto rec = reconstruct_trips(sightings, rc);
    trips = std::move(rec.trips);
    out.write("trips.csv", render([&](std::ostream& s) { write_trips_csv(s, trips); }));
    out.write("rejections.csv", render([&](std::ostream& s) {
                s << "bike_id,start_epoch,end_epoch,rule,detail\n";
                for (const auto& r : rec.rejections)
                  s << r.bike_id << ',' << r.start_epoch << ',' << r.end_epoch << ','
                    << rule_name(r.rule) << ",\"" << r.detail << "\"\n";
              }));
    recon = {{"sightings", sightings.size()},
             {"gaps", rec.gaps},
             {"trips", trips.size()},
             {"rejections", rec.rejections.size()}};
  } else {
    std::istringstream in(read_file(o.trips));
    trips = read_trips_csv(in);
  }
  if (trips.empty()) throw DataError("no trips to estimate from");

  const auto p = estimate_p_matrix(trips, o.k);
  const auto st = rate_statistics(trips, o.bin_s);
  out.write("rate_series.csv", render([&](std::ostream& s) { io::write_rate_series_csv(s, st); }));
  Json tally = p.transition_counts;
  Json j{{"p_matrix", to_json(p.p)},
         {"row_counts", p.row_counts},
         {"transition_counts", tally},
         {"rate_series_csv_path", "rate_series.csv"},
         {"bin_width_s", st.bin_width_s},
         {"quantiles",
          {{"duration_s", quantiles(st.duration)},
           {"distance_m", quantiles(st.distance)},
           {"battery_drop", quantiles(st.battery_drop)}}},
         {"regressions", trips.size() >= 2 ? regressions(trips) : Json::array()}};
  if (!recon.is_null()) j["reconstruction"] = recon;
  out.write_json("estimate.json", j);
}

void validate_cmd(const RunOptions& o, const FleetConfig& c, Outputs& out) {
  require_paths(o);
  if (o.paths < 2) throw ConfigError("validate needs --paths >= 2 for variances");
  const auto grid = grid_of(o);
  const double n = static_cast<double>(c.params.scooters());
  sim::EnsembleOptions eo;
  eo.threads = o.threads;
  const auto m = sim::ensemble_moments(c.model, c.params, c.init, grid, o.paths, o.seed, eo);
  const int dim = c.params.k_buckets + (c.model == Model::kTimedUsage ? 1 : 0);
  const auto joint = fclt::solve_joint(c.model, c.params, c.init, Matrix::Zero(dim, dim), grid,
                                       ode_step(o));

  double sup_dist = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    sup_dist = std::max(sup_dist,
                        (m.mean[i] - pack(joint.meanfield.states[i], c.model)).cwiseAbs().maxCoeff());

  // Variance ratios at a quarter of the horizon and at the end.
  Json checkpoints = Json::array();
  double worst = 0.0;
  for (double frac : {0.25, 1.0}) {
    const double t = frac * o.horizon;
    std::size_t i = 0;
    while (i + 1 < grid.size() && grid[i] < t - 1e-9) ++i;
    Json ratios = Json::array();
    for (int kk = 0; kk < dim; ++kk) {
      const double s = joint.covariance.sigmas[i](kk, kk);
      if (s <= kMinSigma) {
        ratios.push_back(nullptr);
        continue;
      }
      const double r = n * m.variance[i](kk) / s;
      worst = std::max(worst, std::abs(r - 1.0));
      ratios.push_back(r);
    }
    checkpoints.push_back({{"t", grid[i]}, {"variance_ratio", ratios}});
  }
  const bool flln_pass = sup_dist < kFllnTol;
  const bool fclt_pass = worst < kVarianceTol;
  const Json report{{"n_scooters", c.params.scooters()},
                    {"paths", o.paths},
                    {"meanfield",
                     {{"sup_distance", sup_dist}, {"threshold", kFllnTol}, {"pass", flln_pass}}},
                    {"variance",
                     {{"checkpoints", checkpoints},
                      {"max_relative_error", worst},
                      {"threshold", kVarianceTol},
                      {"min_sigma", kMinSigma},
                      {"pass", fclt_pass}}},
                    {"pass", flln_pass && fclt_pass}};
  out.write_json("validate.json", report);
  std::cout << "meanfield sup-distance " << io::format_double(sup_dist) << " ("
            << (flln_pass ? "pass" : "fail") << "), variance max relative error "
            << io::format_double(worst) << " (" << (fclt_pass ? "pass" : "fail") << ")\n";
}

Json options_json(const RunOptions& o) {
  Json j{{"command", o.command}, {"seed", o.seed},       {"paths", o.paths},
         {"horizon", o.horizon}, {"step", o.step},       {"x", o.x},
         {"eps", o.eps},         {"k", o.k},             {"bin_s", o.bin_s},
         {"utc_offset_h", o.utc_offset_h}};
  Json inputs = Json::array();
  for (const auto& [flag, path] : {std::pair{"trips", o.trips}, std::pair{"sightings", o.sightings}}) {
    if (path.empty()) continue;
    j[flag] = path;
    inputs.push_back({{"flag", flag}, {"path", path}, {"fnv1a64", hex64(fnv1a64(read_file(path)))}});
  }
  j["inputs"] = inputs;
  return j;
}

Json execute(const RunOptions& o, const Json& config) {
  const Json opts = options_json(o);
  Outputs out(o.out_dir);
  if (o.command == "estimate") {
    estimate(o, out);
  } else {
    const FleetConfig c = parse_fleet_config(config);
    for (const auto& w : c.warnings) std::cerr << "warning: " << w << '\n';
    if (o.command == "simulate") simulate(o, c, out);
    else if (o.command == "meanfield") meanfield_cmd(o, c, out);
    else if (o.command == "covariance") covariance_cmd(o, c, out);
    else if (o.command == "staff") staff(o, c, out);
    else if (o.command == "staff-table") staff_table(o, c, out);
    else if (o.command == "validate") validate_cmd(o, c, out);
    else throw ConfigError("unknown command '" + o.command + "'");
  }
  const Json manifest{{"tool", "swapfleet"},
                      {"command", o.command},
                      {"options", opts},
                      {"config", config},
                      {"config_hash", config_hash(config)},
                      {"seed", o.seed},
                      {"files", out.files()}};
  std::ofstream(out.dir() / "manifest.json") << manifest.dump(2) << '\n';
  return manifest;
}

void rerun(const RunOptions& o) {
  const Json m = read_json_file(o.manifest);
  try {
    if (config_hash(m.at("config")) != m.at("config_hash").get<std::string>())
      throw ConfigError("manifest config does not match its config_hash");
    const Json& opt = m.at("options");
    RunOptions r;
    r.command = opt.at("command").get<std::string>();
    r.out_dir = o.out_dir;
    r.seed = opt.at("seed").get<std::uint64_t>();
    r.paths = opt.at("paths").get<std::size_t>();
    r.horizon = opt.at("horizon").get<double>();
    r.step = opt.at("step").get<double>();
    r.x = opt.at("x").get<std::vector<double>>();
    r.eps = opt.at("eps").get<std::vector<double>>();
    r.k = opt.at("k").get<int>();
    r.bin_s = opt.at("bin_s").get<double>();
    r.utc_offset_h = opt.at("utc_offset_h").get<double>();
    r.trips = opt.value("trips", "");
    r.sightings = opt.value("sightings", "");
    r.threads = o.threads;
    for (const auto& in : opt.at("inputs"))
      if (hex64(fnv1a64(read_file(in.at("path").get<std::string>()))) !=
          in.at("fnv1a64").get<std::string>())
        throw DataError("input '" + in.at("path").get<std::string>() + "' changed since the run");

    const Json again = execute(r, m.at("config"));
    if (again.at("files") != m.at("files"))
      throw DataError("rerun outputs differ from " + o.manifest);
    std::cout << "reproduced " << m.at("files").size() << " files\n";
  } catch (const Json::exception& e) {
    throw ConfigError("malformed manifest '" + o.manifest + "': " + e.what());
  }
}

void common_options(CLI::App* sub, RunOptions& o) {
  sub->add_option("--config", o.config_path, "fleet configuration JSON")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out_dir, "output directory (must be empty or absent)");
  sub->add_option("--threads", o.threads, "worker threads, 0 for all cores");
}

void run_options(CLI::App* sub, RunOptions& o) {
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--horizon", o.horizon, "time horizon");
  sub->add_option("--step", o.step, "output grid spacing");
}

}  // namespace

void add_commands(CLI::App& app, RunOptions& o) {
  app.require_subcommand(1);
  struct Spec {
    const char* name;
    const char* help;
  };
  const Spec specs[] = {
      {"simulate", "exact simulation: ensemble moments and one sample path"},
      {"meanfield", "integrate the mean-field ODE"},
      {"covariance", "mean field plus the fluctuation covariance"},
      {"staff", "smallest swapper ratio meeting P(Y0 > x) <= eps"},
      {"staff-table", "optimal ratio over an (x, eps) grid"},
      {"estimate", "trip reconstruction and parameter estimates from data"},
      {"validate", "simulator against mean field and covariance"},
      {"rerun", "repeat a run from its manifest and compare outputs"},
  };
  for (const auto& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->callback([&o, name = std::string(s.name)] { o.command = name; });
    common_options(sub, o);
    const std::string n = s.name;
    if (n == "simulate" || n == "meanfield" || n == "covariance" || n == "validate")
      run_options(sub, o);
    if (n == "simulate" || n == "validate")
      sub->add_option("--paths", o.paths, "number of sample paths");
    if (n == "staff" || n == "staff-table") {
      sub->add_option("--x", o.x, "threshold on the empty-bucket share")->delimiter(',');
      sub->add_option("--eps", o.eps, "allowed tail probability")->delimiter(',');
    }
    if (n == "estimate") {
      sub->add_option("--trips", o.trips, "trip CSV")->check(CLI::ExistingFile);
      sub->add_option("--sightings", o.sightings, "vehicle sightings CSV")->check(CLI::ExistingFile);
      sub->add_option("--k", o.k, "battery buckets");
      sub->add_option("--bin", o.bin_s, "rate-series bin width in seconds");
      sub->add_option("--utc-offset", o.utc_offset_h, "local time offset from UTC in hours");
    }
    if (n == "rerun") sub->add_option("--manifest", o.manifest, "manifest.json")->required();
  }
}

void run(const RunOptions& o) {
  if (o.command == "rerun") return rerun(o);
  const Json config = o.config_path.empty() ? reference_config_json() : read_json_file(o.config_path);
  execute(o, config);
}

}  // namespace swapfleet::cli
