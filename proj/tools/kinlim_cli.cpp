#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "kinlim/collision.hpp"
#include "kinlim/config.hpp"
#include "kinlim/contact_wave.hpp"
#include "kinlim/diagnostics.hpp"
#include "kinlim/error.hpp"
#include "kinlim/fluid_solver.hpp"
#include "kinlim/io.hpp"
#include "kinlim/kinetic_solver.hpp"
#include "kinlim/scenario.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace kinlim;

namespace {

struct Options {
  std::string config_path;
  std::string out = "out";
  std::string in;  // report only
  std::uint64_t seed = 20240611;
  int threads = 0;
  std::vector<std::string> sets;
  std::optional<double> epsilon, t_final;
  std::optional<std::size_t> n_cells;
  std::optional<std::string> model;
};

// Everything an artifact needs to describe where it came from.
struct Context {
  RunConfig rc;
  fs::path out;
  json grid;           // velocity grid metadata of the run
  json certification;  // reference to the certification the run relies on

  json meta(json extra = json::object()) const {
    json m = {{"code_version", io::kCodeVersion},
              {"config_hash", rc.hash()},
              {"subcommand", rc.subcommand},
              {"seed", rc.seed},
              {"velocity_grid", grid},
              {"certification", certification}};
    m.update(extra);
    return m;
  }
};

std::string tag(double t) { return io::format_double(t); }

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;  // bare strings such as --set model.kind=bgk
  }
}

std::vector<std::pair<std::string, json>> overrides_of(const std::string& sub, const Options& o) {
  std::vector<std::pair<std::string, json>> out;
  const std::string block = sub == "certify" || sub == "report" ? "" : sub;
  auto add = [&](const char* key, const json& v) {
    require(!block.empty() && block != "sweep",
            std::string("--") + key + ": not available for the " + sub + " subcommand");
    out.emplace_back(block + "." + key, v);
  };
  if (o.epsilon) add("epsilon", *o.epsilon);
  if (o.t_final) add("t_final", *o.t_final);
  if (o.n_cells) add("n_cells", *o.n_cells);
  if (o.model) out.emplace_back("model.kind", *o.model);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    require(eq != std::string::npos && eq > 0, "--set: expected key=value, got \"" + s + "\"");
    out.emplace_back(s.substr(0, eq), parse_value(s.substr(eq + 1)));
  }
  return out;
}

// Hash of the certification results without the wall-clock time.
std::string certification_hash(const CertificationReport& rep) {
  json j = rep.to_json();
  j.erase("seconds");
  return io::hash_hex(io::fnv1a64(j.dump()));
}

// Certification at the far-field state on the run's velocity grid.
json certify_for_run(Context& ctx, const ContactScenario& sc, GridPtr grid) {
  const auto& c = ctx.rc.certify;
  const Primitive left{1.0 / sc.rc.v_minus, {0.0, 0.0, 0.0}, sc.rc.theta_minus};
  const auto rep = certify_operator_properties(ctx.rc.model, left, sc.mstar, c.trials, ctx.rc.seed,
                                               grid, c.q_trials);
  json j = rep.to_json();
  j["meta"] = ctx.meta();
  io::write_json(ctx.out / "certification.json", j);
  if (!rep.success) throw NumericalError("certification: " + rep.failure);
  return {{"file", "certification.json"},
          {"hash", certification_hash(rep)},
          {"kind", to_string(rep.kind)},
          {"sigma", rep.sigma},
          {"success", rep.success}};
}

json no_certification() {
  return {{"file", nullptr}, {"note", "fluid-level run; no collision certification required"}};
}

ContactScenario scenario_for(const RunConfig& rc, GridPtr grid) {
  return rc.make_scenario(rc.model.kind == CollisionKind::HardSphere ? grid : nullptr);
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// ---- wave ----

int run_wave(Context& ctx) {
  const auto& w = ctx.rc.wave;
  const auto grid = ctx.rc.grid.build();
  ctx.grid = json();  // the wave does not use a velocity grid unless HS coefficients are tabulated
  if (ctx.rc.model.kind == CollisionKind::HardSphere) ctx.grid = grid->metadata();
  ctx.certification = no_certification();
  const auto sc = scenario_for(ctx.rc, grid);
  const auto& p = sc.profile;

  io::CsvTable prof{{"eta", "theta_hat", "dtheta_hat"}, {}};
  for (std::size_t i = 0; i < p.eta.size(); ++i)
    prof.add({p.eta[i], p.theta_hat[i], p.dtheta_hat[i]});
  io::write_csv(ctx.out / "profile.csv", prof, ctx.meta({{"table", "self-similar profile"}}));

  std::vector<double> x(w.n_x);
  for (std::size_t i = 0; i < w.n_x; ++i)
    x[i] = -w.x_half + 2.0 * w.x_half * static_cast<double>(i) / static_cast<double>(w.n_x - 1);

  json times = json::array();
  for (double t : w.times) {
    auto field = build_wave(p, w.epsilon, t, x);
    wave_residuals(field, p, sc.coefficients.mu_fn(), sc.coefficients.lambda_fn());
    io::CsvTable tab{{"x", "vbar", "u1bar", "thetabar", "R1", "R2"}, {}};
    for (std::size_t i = 0; i < x.size(); ++i)
      tab.add({x[i], field.vbar[i], field.u1bar[i], field.thetabar[i], field.R1[i], field.R2[i]});
    const std::string name = "wave_t" + tag(t) + ".csv";
    io::write_csv(ctx.out / name, tab,
                  ctx.meta({{"table", "viscous contact wave"}, {"t", t}, {"epsilon", w.epsilon}}));
    const double r1 = max_abs(field.R1), r2 = max_abs(field.R2);
    times.push_back({{"t", t},
                     {"file", name},
                     {"max_R1", r1},
                     {"max_R2", r2},
                     {"R1_scaled", r1 * (1.0 + t) / w.epsilon},
                     {"R2_scaled", r2 * std::pow(1.0 + t, 1.5) / std::pow(w.epsilon, 1.5)}});
  }
  const auto tail = p.tail_fit();
  json rep = {{"meta", ctx.meta()},
              {"scenario", sc.to_json()},
              {"profile",
               {{"residual_norm", p.residual_norm},
                {"monotone", p.monotone},
                {"newton_iterations", p.newton_iterations},
                {"continuation_steps", p.continuation_steps},
                {"tail_c", tail.c},
                {"tail_c_left", tail.c_left},
                {"tail_c_right", tail.c_right},
                {"tail_ok", tail.ok}}},
              {"epsilon", w.epsilon},
              {"times", times}};
  io::write_json(ctx.out / "wave_report.json", rep);
  std::cout << "wave: profile residual " << p.residual_norm << ", " << w.times.size()
            << " wave files in " << ctx.out << "\n";
  return 0;
}

// ---- certify ----

int run_certify(Context& ctx) {
  const auto& c = ctx.rc.certify;
  const auto grid = c.grid.build();
  ctx.grid = grid->metadata();
  const Primitive mstar{c.rho_star, {0.0, 0.0, 0.0}, c.theta_star};
  const auto rep = certify_operator_properties(ctx.rc.model, c.state, mstar, c.trials, ctx.rc.seed,
                                               grid, c.q_trials);
  ctx.certification = {{"file", "certification.json"},
                       {"hash", certification_hash(rep)}};
  json j = rep.to_json();
  j["meta"] = ctx.meta();
  io::write_json(ctx.out / "certification.json", j);
  std::cout << "certify: " << to_string(rep.kind) << " sigma " << rep.sigma << " -> "
            << (rep.success ? "PASS" : "FAIL") << "\n";
  if (!rep.success) throw NumericalError("certification: " + rep.failure);
  return 0;
}

// ---- kinetic ----

int run_kinetic(Context& ctx) {
  const auto& k = ctx.rc.kinetic;
  const auto grid = ctx.rc.grid.build();
  ctx.grid = grid->metadata();
  const auto sc = scenario_for(ctx.rc, grid);
  ctx.certification = certify_for_run(ctx, sc, grid);

  KineticConfig c;
  c.epsilon = k.epsilon;
  c.grid = grid;
  c.n_cells = k.n_cells;
  c.x_half = k.x_half;
  c.model = ctx.rc.model;
  c.t_final = k.t_final;
  c.snapshots = k.snapshots;
  c.cfl = k.cfl;
  c.limiter = k.limiter;
  c.mstar = sc.mstar;
  const auto f0 = init_from_wave(sc.eulerian_wave(c.epsilon, 0.0, c.x_half), grid, c.x0(), c.dx(),
                                 c.n_cells);
  const auto run = kinetic_run(c, f0, sc.boundary);
  const auto inviscid = inviscid_reference(sc, grid, c.x0(), c.dx(), c.n_cells);

  json snaps = json::array();
  for (const auto& s : run.snapshots) {
    const auto viscous = init_from_wave(sc.eulerian_wave(c.epsilon, s.t, c.x_half), grid, c.x0(),
                                        c.dx(), c.n_cells);
    const auto e = pointwise_error_profile(s.f, inviscid, sc.mstar);
    const auto ev = pointwise_error_profile(s.f, viscous, sc.mstar);
    io::CsvTable tab{{"x", "rho", "u1", "u2", "u3", "theta", "error", "error_viscous"}, {}};
    std::vector<double> x(c.n_cells);
    for (std::size_t i = 0; i < c.n_cells; ++i) {
      x[i] = s.f.x(i);
      const auto& st = s.state[i];
      tab.add({x[i], st.rho, st.u[0], st.u[1], st.u[2], st.theta, std::sqrt(e[i]),
               std::sqrt(ev[i])});
    }
    const std::string name = "moments_t" + tag(s.t) + ".csv";
    io::write_csv(ctx.out / name, tab,
                  ctx.meta({{"table", "kinetic moments and pointwise errors"},
                            {"t", s.t},
                            {"epsilon", c.epsilon},
                            {"frame", "eulerian"}}));
    json entry = {{"t", s.t},
                  {"file", name},
                  {"sup_error_away", sup_error_away(x, e, k.h)},
                  {"max_error", std::sqrt(*std::max_element(e.begin(), e.end()))},
                  {"sup_error_viscous", std::sqrt(*std::max_element(ev.begin(), ev.end()))}};
    if (k.write_snapshots) {
      const std::string bin = "snapshot_t" + tag(s.t) + ".bin";
      io::write_snapshot(ctx.out / bin,
                         ctx.meta({{"t", s.t},
                                   {"epsilon", c.epsilon},
                                   {"n_cells", c.n_cells},
                                   {"n_velocities", grid->size()},
                                   {"x0", c.x0()},
                                   {"dx", c.dx()},
                                   {"left_mass_inflow", s.left_mass_inflow},
                                   {"layout", "f[cell][velocity], row-major"}}),
                         s.f.values);
      entry["snapshot"] = bin;
    }
    snaps.push_back(entry);
  }

  io::CsvTable trace{{"t", "micro_norm"}, {}};
  for (const auto& m : run.micro_trace) trace.add({m.t, m.micro_norm});
  io::write_csv(ctx.out / "micro_trace.csv", trace,
                ctx.meta({{"table", "microscopic norm of f - M[f]"}, {"epsilon", c.epsilon}}));

  json rep = {{"meta", ctx.meta()},
              {"scenario", sc.to_json()},
              {"epsilon", c.epsilon},
              {"h", k.h},
              {"steps", run.steps},
              {"dt", run.dt},
              {"max_negative", run.max_negative},
              {"seconds", run.seconds},
              {"snapshots", snaps},
              {"ledger", run.ledger_json()}};
  const bool has_zero = !run.snapshots.empty() && run.snapshots.front().t == 0.0;
  if (k.energy && has_zero) {
    const auto energy = energy_trace(run, c, sc);
    io::write_csv(ctx.out / "energy.csv", energy.to_csv(),
                  ctx.meta({{"table", "E6 trace"}, {"epsilon", c.epsilon}}));
    rep["energy"] = energy.to_json();
    rep["growth"] = growth_check(energy).to_json();
  } else if (k.energy) {
    rep["energy"] = "skipped: kinetic.snapshots must contain 0";
  }
  io::write_json(ctx.out / "kinetic_report.json", rep);
  std::cout << "kinetic: eps " << c.epsilon << ", " << run.steps << " steps, "
            << run.snapshots.size() << " snapshots in " << ctx.out << "\n";
  return 0;
}

// ---- fluid ----

int run_fluid(Context& ctx) {
  const auto& fb = ctx.rc.fluid;
  const auto grid = ctx.rc.grid.build();
  ctx.grid = ctx.rc.model.kind == CollisionKind::HardSphere ? grid->metadata() : json();
  ctx.certification = no_certification();
  const auto sc = scenario_for(ctx.rc, grid);

  const double dx = 2.0 * fb.x_half / static_cast<double>(fb.n_cells);
  std::vector<double> x(fb.n_cells);
  for (std::size_t i = 0; i < fb.n_cells; ++i) x[i] = -fb.x_half + (static_cast<double>(i) + 0.5) * dx;
  const auto wave = build_wave(sc.profile, fb.epsilon, 0.0, x);
  const auto s0 = fluid_from_wave(wave, sc.profile, sc.coefficients.mu_fn(),
                                  sc.coefficients.lambda_fn());
  FluidRunConfig cfg;
  cfg.t_final = fb.t_final;
  cfg.snapshots = fb.snapshots;
  cfg.cfl = fb.cfl;
  cfg.reference = &sc.profile;
  const auto run = ns_run(s0, cfg);

  json files = json::array();
  for (const auto& s : run.snapshots) {
    io::CsvTable tab{{"x", "v", "u1", "u2", "u3", "theta"}, {}};
    for (std::size_t i = 0; i < s.size(); ++i)
      tab.add({s.x[i], s.v[i], s.u1[i], s.u2[i], s.u3[i], s.theta[i]});
    const std::string name = "fluid_t" + tag(s.t) + ".csv";
    io::write_csv(ctx.out / name, tab,
                  ctx.meta({{"table", "Navier-Stokes snapshot"},
                            {"t", s.t},
                            {"epsilon", fb.epsilon},
                            {"frame", "lagrangian"}}));
    files.push_back({{"t", s.t}, {"file", name}});
  }
  io::CsvTable dev{{"t", "v", "u1", "theta", "max"}, {}};
  for (const auto& d : run.deviation) dev.add({d.t, d.v, d.u1, d.theta, d.max()});
  io::write_csv(ctx.out / "deviation.csv", dev,
                ctx.meta({{"table", "sup deviation from the viscous contact wave"}}));

  json rep = {{"meta", ctx.meta()},
              {"scenario", sc.to_json()},
              {"epsilon", fb.epsilon},
              {"n_cells", fb.n_cells},
              {"snapshots", files},
              {"ledger", run.ledger.to_json()}};
  io::write_json(ctx.out / "fluid_report.json", rep);
  std::cout << "fluid: eps " << fb.epsilon << ", " << run.ledger.steps << " steps, max step drift "
            << run.ledger.max_step_drift << "\n";
  return 0;
}

// ---- sweep ----

ContactScenario scenario_with_delta(const RunConfig& rc, double delta, GridPtr grid) {
  RunConfig low = rc;
  const double sign = rc.scenario.theta_plus >= rc.scenario.theta_minus ? 1.0 : -1.0;
  low.scenario.theta_plus = rc.scenario.theta_minus + sign * delta;
  auto sc = scenario_for(low, grid);
  // Same weight as the main run so the two E6 values are comparable.
  sc.mstar = scenario_for(rc, grid).mstar;
  return sc;
}

int run_sweep(Context& ctx) {
  auto options = ctx.rc.sweep;
  const auto grid = options.grid;
  ctx.grid = grid->metadata();
  const auto sc = scenario_for(ctx.rc, grid);
  ctx.certification = certify_for_run(ctx, sc, grid);
  options.certification = ctx.certification;

  const auto rep = convergence_sweep(options, sc, [](const SweepMember& m) {
    std::cerr << "sweep: eps " << m.epsilon << " sup error " << m.sup_over_time << " ("
              << m.steps << " steps, " << m.seconds << " s)\n";
  });
  json j = rep.to_json();
  j["meta"] = ctx.meta();

  const json members = j.at("members");
  for (std::size_t i = 0; i < rep.members.size(); ++i) {
    const auto& m = rep.members[i];
    const fs::path dir = ctx.out / ("eps_" + tag(m.epsilon));
    fs::create_directories(dir);
    json mj = members[i];
    mj["meta"] = ctx.meta({{"epsilon", m.epsilon}});
    io::write_json(dir / "member.json", mj);
    if (m.has_energy)
      io::write_csv(dir / "energy.csv", m.energy.to_csv(),
                    ctx.meta({{"table", "E6 trace"}, {"epsilon", m.epsilon}}));
  }

  bool growth_ok = true, exponent_ok = true;
  for (const auto& m : rep.members) {
    if (!m.has_energy) continue;
    growth_ok = growth_ok && m.growth.pass;
    exponent_ok = exponent_ok && (!m.growth.exponent_fitted || m.growth.exponent <= 0.6);
  }
  json criteria = {{"decreasing", rep.decreasing},
                   {"slope", rep.fit.slope},
                   {"slope_ok", !rep.degenerate && rep.fit.slope >= 0.2}};
  if (options.energy && !rep.members.empty()) {
    const auto low = scenario_with_delta(ctx.rc, ctx.rc.energy_delta_low, grid);
    const auto es = energy_scaling(rep, sc, low);
    j["energy_scaling"] = es.to_json();
    criteria["energy_delta_ok"] = es.delta_ok;
    criteria["energy_eps_ok"] = es.eps_ok;
    criteria["growth_ok"] = growth_ok;
    criteria["growth_exponent_ok"] = exponent_ok;
  }
  j["criteria"] = criteria;

  io::write_json(ctx.out / "convergence.json", j);
  io::write_csv(ctx.out / "convergence.csv", rep.to_csv(),
                ctx.meta({{"table", "sup error away from the contact per epsilon"}, {"h", rep.h}}));
  io::write_csv(ctx.out / "convergence_detail.csv", rep.detail_csv(),
                ctx.meta({{"table", "errors per epsilon and snapshot time"}, {"h", rep.h}}));
  std::cout << "sweep: slope " << rep.fit.slope << ", decreasing " << std::boolalpha
            << rep.decreasing << "\n"
            << criteria.dump() << "\n";
  return 0;
}

// ---- report ----

int run_report(Context& ctx, const fs::path& in) {
  require(fs::is_directory(in), "--in: not a directory: " + in.string());
  ctx.certification = no_certification();
  json summary = {{"meta", ctx.meta()}, {"source", in.string()}};
  json found = json::object();
  for (const char* name : {"certification.json", "wave_report.json", "kinetic_report.json",
                           "fluid_report.json", "convergence.json", "resolved_config.json"}) {
    if (!fs::exists(in / name)) continue;
    const auto j = io::read_json(in / name);
    json s;
    if (j.contains("meta")) s["config_hash"] = j["meta"].value("config_hash", "");
    const std::string n = name;
    if (n == "certification.json")
      s.update({{"model", j.at("model")}, {"sigma", j.at("sigma")}, {"success", j.at("success")}});
    else if (n == "wave_report.json")
      s.update({{"residual_norm", j.at("profile").at("residual_norm")},
                {"tail_c", j.at("profile").at("tail_c")}});
    else if (n == "kinetic_report.json") {
      s["steps"] = j.at("steps");
      json sup = json::array();
      for (const auto& e : j.at("snapshots")) sup.push_back({e.at("t"), e.at("sup_error_away")});
      s["sup_error_away"] = sup;
      if (j.contains("growth")) s["growth"] = j.at("growth");
    } else if (n == "fluid_report.json")
      s["ledger"] = {{"steps", j.at("ledger").at("steps")},
                     {"max_step_drift", j.at("ledger").at("max_step_drift")}};
    else if (n == "convergence.json") {
      s["criteria"] = j.value("criteria", json::object());
      if (j.contains("energy_scaling")) s["energy_scaling"] = j.at("energy_scaling");
    } else
      s["config_hash"] = io::config_hash(j);
    found[n] = s;
  }
  require(!found.empty(), "--in: no kinlim reports found in " + in.string());
  summary["reports"] = found;
  io::write_json(ctx.out / "summary.json", summary);
  std::cout << summary["reports"].dump(2) << "\n";
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const PreconditionError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 1;
}

const char* kind_for(const std::exception& e) {
  if (dynamic_cast<const PreconditionError*>(&e)) return "precondition";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
  return "internal";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic-fluid contact wave lab"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"wave", "self-similar profile and viscous contact wave with residuals"},
      {"certify", "measure coercivity and inverse bounds of the linearized operator"},
      {"kinetic", "kinetic solve from the wave Maxwellian with pointwise errors and E6"},
      {"fluid", "Navier-Stokes solve from the viscous contact wave"},
      {"sweep", "Knudsen sweep: error away from the contact and E6 checks"},
      {"report", "summarize the reports in an output directory"}};
  for (const auto& [name, help] : subs) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    s->add_option("--out", o.out, "output directory")->capture_default_str();
    s->add_option("--seed", o.seed, "seed for randomized trials")->capture_default_str();
    s->add_option("--threads", o.threads, "OpenMP threads (0 keeps the runtime default)");
    s->add_option("--set", o.sets, "override a configuration key: dotted.key=json");
    if (name == "report") s->add_option("--in", o.in, "directory to summarize")->required();
    if (name == "wave" || name == "kinetic" || name == "fluid") {
      s->add_option("--epsilon", o.epsilon, "Knudsen number");
    }
    if (name == "kinetic" || name == "fluid") {
      s->add_option("--t-final", o.t_final, "final time");
      s->add_option("--n-cells", o.n_cells, "spatial cells");
    }
    if (name != "report" && name != "wave") s->add_option("--model", o.model, "bgk or hard_sphere");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  Context ctx;
  ctx.out = o.out;
  try {
    fs::create_directories(ctx.out);
    fs::remove(ctx.out / "error.json");
    if (o.threads > 0) omp_set_num_threads(o.threads);
    const json file = o.config_path.empty() ? json() : io::read_json(o.config_path);
    ctx.rc = resolve_config(sub, file, overrides_of(sub, o), o.seed);
    io::write_json(ctx.out / "resolved_config.json", ctx.rc.resolved);
    if (sub == "wave") return run_wave(ctx);
    if (sub == "certify") return run_certify(ctx);
    if (sub == "kinetic") return run_kinetic(ctx);
    if (sub == "fluid") return run_fluid(ctx);
    if (sub == "sweep") return run_sweep(ctx);
    return run_report(ctx, o.in);
  } catch (const std::exception& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    const json err = {{"error",
                       {{"kind", kind_for(e)},
                        {"key", colon == std::string::npos ? "" : what.substr(0, colon)},
                        {"message", what}}},
                      {"subcommand", sub},
                      {"code_version", io::kCodeVersion}};
    std::cerr << err.dump() << "\n";
    try {
      io::write_json(ctx.out / "error.json", err);
    } catch (const std::exception&) {
      // stderr already carries the error
    }
    return exit_code_for(e);
  }
}
