// lrdlab: command-line front end of the scaling laboratory.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lrdlab/asymptotics.hpp"
#include "lrdlab/config.hpp"
#include "lrdlab/io.hpp"
#include "lrdlab/scaling.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace lrd;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<json>> rows;
  std::vector<std::string> notes;
};

class Run {
 public:
  Run(std::string command, ExperimentConfig cfg) : command_(std::move(command)), cfg_(std::move(cfg)) {
    out_ = ensure_directory(cfg_.str("io.out"));
    start_ = std::chrono::steady_clock::now();
  }

  const ExperimentConfig& cfg() const { return cfg_; }
  const fs::path& out() const { return out_; }

  std::string manifest_line() const {
    return "config_hash=" + cfg_.hash() + " seed=" + std::to_string(cfg_.seed()) + " version=" + kVersion;
  }

  template <class F>
  auto stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      stages_[name] = seconds_since(t0);
    } else {
      auto r = f();
      stages_[name] = seconds_since(t0);
      return r;
    }
  }

  void warn(const std::string& w) {
    if (std::find(warnings_.begin(), warnings_.end(), w) != warnings_.end()) return;
    warnings_.push_back(w);
    std::cerr << "warning: " << w << "\n";
  }

  void emit(const Table& t) {
    if (cfg_.str("io.format") == "json") {
      json doc;
      doc["manifest"] = {{"config_hash", cfg_.hash()}, {"seed", cfg_.seed()}, {"version", kVersion}};
      doc["notes"] = t.notes;
      json rows = json::array();
      for (const auto& r : t.rows) {
        json o;
        for (std::size_t i = 0; i < t.header.size(); ++i) o[t.header[i]] = r[i];
        rows.push_back(o);
      }
      doc["rows"] = rows;
      write_json(t.name + ".json", doc);
      return;
    }
    CsvWriter w(out_ / (t.name + ".csv"), manifest_line(), t.header);
    for (const auto& n : t.notes) notes_.push_back(t.name + ".csv: " + n);
    for (const auto& r : t.rows) {
      std::vector<std::string> cells;
      for (const auto& c : r) cells.push_back(c.is_string() ? c.get<std::string>() : c.is_number_float() ? format_number(c.get<double>()) : c.dump());
      w.row_strings(cells);
    }
    files_.push_back(t.name + ".csv");
  }

  void write_json(const std::string& name, const json& doc) {
    std::ofstream f(out_ / name);
    if (!f) throw IoError("cannot write '" + (out_ / name).string() + "'");
    f << doc.dump(2) << "\n";
    files_.push_back(name);
  }

  void finish() {
    json m;
    m["command"] = command_;
    m["config_hash"] = cfg_.hash();
    m["seed"] = cfg_.seed();
    m["version"] = kVersion;
    m["threads"] = default_threads();
    m["wall_clock_seconds"] = seconds_since(start_);
    m["stages"] = stages_;
    m["warnings"] = warnings_;
    m["notes"] = notes_;
    m["files"] = files_;
    json config;
    for (const auto& [k, v] : cfg_.values()) config[k] = v;
    m["config"] = config;
    write_json(command_ + "_manifest.json", m);
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::string command_;
  ExperimentConfig cfg_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  json stages_ = json::object();
  std::vector<std::string> warnings_;
  std::vector<std::string> notes_;
  std::vector<std::string> files_;
};

ScanOptions scan_options(const ExperimentConfig& c) {
  ScanOptions o;
  o.x = c.num("scan.x");
  o.y = c.num("scan.y");
  o.mem_cap = c.mem_cap();
  return o;
}

ModelExponents exponents_of(const ModelSpec& m) {
  const auto e = m.exponents();
  if (!e) throw ValidationError("model family '" + to_string(m.family) + "' has no power-law exponents");
  return *e;
}

json regime_json(const ModelExponents& e, int k, double gamma, double tol) {
  json r;
  r["gamma"] = gamma;
  const Regime reg = classify_regime(e, SubordinationOrder(k), gamma, tol);
  r["regime"] = std::string(to_string(reg.tag));
  r["H"] = std::isnan(reg.H) ? json(nullptr) : json(reg.H);
  if (reg.hurst_pair) {
    r["hurst_pair"] = {{"H1", reg.hurst_pair->H1}, {"H2", reg.hurst_pair->H2}};
  } else {
    r["hurst_pair"] = nullptr;
  }
  return r;
}

void cmd_derive(Run& run) {
  const auto m = run.cfg().model();
  const auto e = exponents_of(m);
  const int k = m.order();
  json doc;
  doc["inputs"] = {{"q1", e.q1}, {"q2", e.q2}, {"k", k}, {"gamma", run.cfg().list("scan.gamma")}};
  doc["exponents"] = {{"Q", e.Q}, {"p1", e.p1}, {"p2", e.p2}, {"P", e.P}, {"gamma0", e.gamma0}};
  json regimes = json::array();
  for (double g : run.cfg().list("scan.gamma")) regimes.push_back(regime_json(e, k, g, run.cfg().num("numerics.boundary_tol")));
  doc["regimes"] = regimes;
  doc["manifest"] = {{"config_hash", run.cfg().hash()}, {"seed", run.cfg().seed()}};
  run.write_json("derive.json", doc);
  std::cout << doc.dump(2) << "\n";
}

void cmd_kernel(Run& run) {
  const auto m = run.cfg().model();
  const int M = static_cast<int>(run.cfg().integer("numerics.M"));
  const auto k = run.stage("build", [&] { return m.kernel(M); });
  Table t{"kernel", {"t", "s", "a"}, {}, {}};
  for (int i = -k.M; i <= k.M; ++i)
    for (int j = -k.M; j <= k.M; ++j) t.rows.push_back({i, j, k(i, j)});
  run.emit(t);
  json side;
  side["family"] = to_string(k.family);
  side["params"] = k.params;
  side["M"] = k.M;
  side["truncated_l2_tail"] = k.truncated_l2_tail;
  run.write_json("kernel_meta.json", side);
}

void cmd_simulate(Run& run, bool csv) {
  const auto m = run.cfg().model();
  const int nt = static_cast<int>(run.cfg().integer("simulate.nt"));
  const int ns = static_cast<int>(run.cfg().integer("simulate.ns"));
  if (nt < 1 || ns < 1) throw ValidationError("simulate.nt and simulate.ns must be positive");
  FieldGenerator gen(m, nt, ns, run.cfg().mem_cap());
  auto field = run.stage("synthesis", [&] { return gen.pair(nt, ns, derive_key(run.cfg().seed(), 0, 0)).first; });
  field.seed = run.cfg().seed();
  for (const auto& w : gen.warnings()) run.warn(w);
  run.stage("write", [&] { write_field_binary(run.out() / "field.bin", field); });
  json meta;
  meta["Nt"] = nt;
  meta["Ns"] = ns;
  meta["seed"] = field.seed;
  meta["model"] = to_string(m.family);
  meta["k"] = m.order();
  meta["noise"] = to_string(m.noise);
  meta["variance_Y"] = gen.variance_Y();
  meta["format"] = "32-byte header (magic LRDFLD01, N_t, N_s, seed as little-endian u64), then N_t*N_s little-endian float64, row-major";
  run.write_json("field.json", meta);
  if (csv) {
    Table t{"field", {"t", "s", "x"}, {}, {"cell (t, s) holds X(t + 1, s + 1)"}};
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < ns; ++j) t.rows.push_back({i, j, field.at(i, j)});
    run.emit(t);
  }
}

void cmd_scan(Run& run) {
  const auto& c = run.cfg();
  const auto m = c.model();
  const auto gammas = c.list("scan.gamma");
  const auto lambdas = c.list("scan.lambda");
  const int R = static_cast<int>(c.integer("scan.replicas"));
  const auto opt = scan_options(c);
  int max_nt = 0, max_ns = 0;
  for (double g : gammas) {
    const PartialSumRequest big{lambdas.back(), g, opt.x, opt.y};
    max_nt = std::max(max_nt, big.nt());
    max_ns = std::max(max_ns, big.ns());
  }
  FieldGenerator gen(m, max_nt, max_ns, opt.mem_cap);
  Table t{"scan", {"gamma", "lambda", "R", "var_hat", "se"}, {}, {}};
  json fits = json::array();
  for (double g : gammas) {
    const auto curve = run.stage("gamma=" + format_number(g), [&] { return variance_scan(gen, g, lambdas, R, c.seed(), opt); });
    for (std::size_t i = 0; i < curve.lambda_grid.size(); ++i)
      t.rows.push_back({g, curve.lambda_grid[i], R, curve.var_hat[i], curve.se[i]});
    for (const auto& w : curve.warnings) run.warn(w);
    const auto est = fit_H(curve);
    const auto [H, regime] = m.theory(g);
    fits.push_back({{"gamma", g}, {"H_hat", est.H_hat}, {"H_se", est.H_se}, {"H_theory", std::isnan(H) ? json(nullptr) : json(H)},
                    {"regime", regime}, {"r_squared", est.r_squared}});
  }
  run.emit(t);
  run.write_json("scan_fits.json", {{"fits", fits}, {"manifest", {{"config_hash", c.hash()}, {"seed", c.seed()}}}});
}

void cmd_transition(Run& run) {
  const auto& c = run.cfg();
  const auto m = c.model();
  const auto rep = run.stage("scan", [&] {
    return transition_scan(m, c.list("scan.gamma"), c.list("scan.lambda"), static_cast<int>(c.integer("scan.replicas")),
                           c.seed(), scan_options(c));
  });
  Table t{"transition", {"gamma", "H_hat", "H_se", "H_theory", "regime"}, {}, {}};
  for (const auto& r : rep.rows) {
    t.rows.push_back({r.estimate.gamma, r.estimate.H_hat, r.estimate.H_se, std::isnan(r.H_theory) ? json("nan") : json(r.H_theory),
                      r.regime});
    for (const auto& w : r.warnings) run.warn(w);
  }
  run.emit(t);
  json doc;
  doc["gamma0_hat"] = rep.gamma0_hat;
  doc["gamma0_theory"] = std::isnan(rep.gamma0_theory) ? json(nullptr) : json(rep.gamma0_theory);
  doc["kink_significance"] = rep.kink_significance;
  doc["kink_detected"] = rep.kink_detected;
  doc["kink_threshold"] = kKinkDetectionThreshold;
  doc["slope_left"] = rep.hinge.slope_left;
  doc["slope_right"] = rep.hinge.slope_right;
  doc["manifest"] = {{"config_hash", c.hash()}, {"seed", c.seed()}};
  run.write_json("transition.json", doc);
}

void cmd_convolve(Run& run) {
  const auto& c = run.cfg();
  const auto m = c.model();
  const auto e = exponents_of(m);
  const int k = m.order();
  const HomogeneousSpec a{e.q1, e.gamma0, m.angular()};
  const int nz = static_cast<int>(c.integer("convolve.z"));
  if (nz < 2) throw ValidationError("convolve.z must be >= 2");
  const double tol = c.num("numerics.rel_tol");
  std::vector<std::vector<json>> rows(static_cast<std::size_t>(nz));
  run.stage("L12", [&] {
    parallel_for(0, rows.size(), [&](std::size_t i) {
      const double z = -1.0 + 2.0 * static_cast<double>(i) / (nz - 1);
      const auto v = angular_L12(z, a, a, tol);
      rows[i] = {z, v.value, v.error};
    });
  });
  run.emit(Table{"convolve_L12", {"z", "L12", "err"}, rows, {}});
  const int intervals = static_cast<int>(c.integer("numerics.angular_intervals"));
  Table cases{"convolve_cases", {"gamma", "case", "Hcal", "Ccal", "err"}, {}, {"b = r_X = k! L12^k rho^{-k p1}"}};
  if (k < e.P) {
    const CovarianceAngular LX(e, k, m.angular(), intervals);
    for (double g : c.list("scan.gamma")) {
      try {
        const auto p = hc_prediction(k * e.p1, e.gamma0, g, LX.as_function(), c.num("numerics.boundary_tol"));
        cases.rows.push_back({g, to_string(p.which), p.Hcal, p.Ccal, p.quadrature_error});
      } catch (const BoundaryError& err) {
        run.warn("gamma = " + format_number(g) + ": " + err.what());
      }
    }
  } else {
    run.warn("k >= P: the covariance of X is summable and has no power-law limit constant");
  }
  run.emit(cases);
}

void cmd_covariance(Run& run) {
  const auto& c = run.cfg();
  const auto m = c.model();
  const int T = static_cast<int>(c.integer("covariance.T")), S = static_cast<int>(c.integer("covariance.S"));
  if (T < 7 || S < 7) throw ValidationError("covariance.T and covariance.S must be >= 7");
  const std::string mode = c.str("covariance.mode");
  CovarianceProfile prof;
  std::vector<std::string> notes;
  run.stage("profile", [&] {
    if (mode == "exact") {
      if (m.order() != 1) throw ValidationError("covariance.mode=exact gives r_Y; use mode=model or empirical for k > 1");
      prof = covariance_exact(m.kernel(m.M), T, S, c.mem_cap());
      notes.push_back("exact autocovariance of the kernel truncated at M = " + std::to_string(m.M));
    } else if (mode == "model") {
      if (!m.gaussian() || !m.hermite.empty()) throw ValidationError("covariance.mode=model needs Gaussian Appell subordination");
      FieldGenerator gen(m, 2, 2, c.mem_cap());
      prof = covariance_model(*gen.covariance(), m.k, T, S);
      notes.push_back("k! r_Y^k from the exact model covariance");
    } else {
      const int N = static_cast<int>(c.integer("covariance.N"));
      FieldGenerator gen(m, N, N, c.mem_cap());
      prof = covariance_empirical(gen, T, S, N, static_cast<int>(c.integer("covariance.replicas")), c.seed());
      for (const auto& w : gen.warnings()) run.warn(w);
      notes.push_back("empirical: sum over valid pairs divided by their number (N - |t|)(N - |s|)");
    }
  });
  Table t{"covariance", {"t", "s", "r", "se"}, {}, notes};
  for (int i = -T; i <= T; ++i)
    for (int j = -S; j <= S; ++j) t.rows.push_back({i, j, prof.at(i, j), prof.se_at(i, j)});
  run.emit(t);
  json doc;
  doc["mode"] = mode;
  if (const auto e = m.exponents()) {
    const int k = m.order();
    const auto radii = c.list("covariance.radii");
    const auto rays = c.list("covariance.rays");
    std::function<double(double)> LX = [](double) { return 1.0; };
    std::shared_ptr<CovarianceAngular> angular;
    if (k < e->P && k >= 1) {
      angular = std::make_shared<CovarianceAngular>(*e, k, m.angular(), static_cast<int>(c.integer("numerics.angular_intervals")));
      LX = [angular](double z) { return (*angular)(z); };
    }
    const auto chk = run.stage("diagnostics", [&] { return covariance_asymptote_check(prof, *e, k, LX, rays, radii); });
    json ray_rows = json::array(), slopes = json::object();
    for (double z : rays) {
      std::vector<double> x, y;
      for (const auto& r : chk.rays) {
        if (r.z_target != z) continue;
        ray_rows.push_back({{"z", r.z_target}, {"rho", r.rho_target}, {"t", r.t}, {"s", r.s}, {"ratio", r.ratio}});
        if (prof.at(r.t, r.s) > 0) {
          x.push_back(std::log(r.rho));
          y.push_back(std::log(prof.at(r.t, r.s)));
        }
      }
      if (x.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / x.size(), my += y[i] / x.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
        slopes[format_number(z)] = sxy / sxx;
      }
    }
    json verdicts = json::array();
    for (const auto& a : chk.axes) {
      if (a.divergent != a.expected_divergent) {
        run.warn("axis " + a.axis + ": summability verdict disagrees with theory; the lag window or kernel half-width may be too small");
      }
      verdicts.push_back({{"axis", a.axis}, {"exponent", a.exponent}, {"condensation_ratio", a.condensation_ratio},
                          {"growth_slope", a.growth_slope}, {"divergent", a.divergent}, {"expected_divergent", a.expected_divergent}});
    }
    doc["slope_per_ray"] = slopes;
    doc["expected_slope"] = -k * e->p1;
    doc["ray_ratios"] = ray_rows;
    doc["summability_verdicts"] = verdicts;
  }
  doc["manifest"] = {{"config_hash", c.hash()}, {"seed", c.seed()}};
  run.write_json("covariance.json", doc);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scaling laboratory for anisotropic long-range dependent random fields"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir, format;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int threads = -1;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--set", sets, "override one key (key=value), repeatable");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
  app.add_option("--out", out_dir, "output directory (created if missing)");
  app.add_option("--format", format, "csv | json");
  bool csv = false;
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print every configuration key with its default and exit");
  const char* names[] = {"derive", "kernel", "simulate", "scan", "transition", "convolve", "covariance"};
  const char* help[] = {"exponents and regimes of the model",
                        "truncated moving-average kernel as t,s,a",
                        "one realization of X as a binary field file",
                        "Monte Carlo variance curves over the lambda grid",
                        "H_hat(gamma) against theory and the kink estimate of gamma0",
                        "angular limit L12 and the lattice-sum constants",
                        "covariance profile with ray and summability diagnostics"};
  for (int i = 0; i < 7; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    if (std::string(names[i]) == "simulate") sub->add_flag("--csv", csv, "also write the field as CSV");
  }
  app.require_subcommand(0, 1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorFamily::Config);
  }
  if (list_keys) {
    for (const auto& k : config_keys()) std::cout << k.name << " = " << k.default_value << "    # " << k.help << "\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return static_cast<int>(ErrorFamily::Config);
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : parse_config(read_file(config_path), false);
    for (const auto& s : sets) cfg.set_assignment(s);
    if (seed_opt->count()) cfg.set("seed", std::to_string(seed));
    if (threads >= 0) cfg.set("threads", std::to_string(threads));
    if (!out_dir.empty()) cfg.set("io.out", out_dir);
    if (!format.empty()) cfg.set("io.format", format);
    cfg.validate();
    const int n = cfg.threads() > 0 ? cfg.threads() : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    set_default_threads(n);
    Run run(command, cfg);
    if (command == "derive") cmd_derive(run);
    else if (command == "kernel") cmd_kernel(run);
    else if (command == "simulate") cmd_simulate(run, csv);
    else if (command == "scan") cmd_scan(run);
    else if (command == "transition") cmd_transition(run);
    else if (command == "convolve") cmd_convolve(run);
    else if (command == "covariance") cmd_covariance(run);
    run.finish();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
