#include "kinlim/config.hpp"

#include <sstream>

#include "kinlim/error.hpp"
#include "kinlim/io.hpp"
#include "kinlim/micromacro.hpp"

namespace kinlim {

namespace {

using json = nlohmann::json;

const char* const kSubcommands[] = {"wave", "certify", "kinetic", "fluid", "sweep", "report"};

json grid_json(const GridSpec& g) {
  return {{"counts", g.counts}, {"extent", g.extent}, {"theta_max", g.theta_max}};
}

// Overlay `src` on `dst`; every key of `src` must already exist in `dst`
// (null defaults accept any value).
void merge(json& dst, const json& src, const std::string& path) {
  require(src.is_object(), (path.empty() ? std::string("config") : path) + ": must be an object");
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    require(dst.contains(it.key()), key + ": unknown configuration key");
    json& d = dst[it.key()];
    if (d.is_object() && it->is_object())
      merge(d, *it, key);
    else
      d = *it;
  }
}

void set_dotted(json& doc, const std::string& dotted, const json& value) {
  json* node = &doc;
  std::stringstream ss(dotted);
  std::string part, seen;
  while (std::getline(ss, part, '.')) {
    seen = seen.empty() ? part : seen + "." + part;
    require(node->is_object() && node->contains(part), seen + ": unknown configuration key");
    node = &(*node)[part];
  }
  *node = value;
}

// Typed access that names the key on failure.
class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  const json& at(const std::string& dotted) const {
    const json* node = &root_;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) node = &node->at(part);
    return *node;
  }
  double num(const std::string& key) const {
    const auto& v = at(key);
    require(v.is_number(), key + ": must be a number");
    return v.get<double>();
  }
  double positive(const std::string& key) const {
    const double v = num(key);
    require(v > 0.0, key + ": must be positive");
    return v;
  }
  long integer(const std::string& key, long lo) const {
    const auto& v = at(key);
    require(v.is_number_integer(), key + ": must be an integer");
    const long x = v.get<long>();
    require(x >= lo, key + ": must be at least " + std::to_string(lo));
    return x;
  }
  bool flag(const std::string& key) const {
    const auto& v = at(key);
    require(v.is_boolean(), key + ": must be true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& key) const {
    const auto& v = at(key);
    require(v.is_string(), key + ": must be a string");
    return v.get<std::string>();
  }
  std::vector<double> list(const std::string& key) const {
    const auto& v = at(key);
    require(v.is_array(), key + ": must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      require(e.is_number(), key + ": must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  GridSpec grid(const std::string& key) const {
    GridSpec g;
    const auto& c = at(key + ".counts");
    require(c.is_array() && c.size() == 3, key + ".counts: must hold three integers");
    for (int a = 0; a < 3; ++a) {
      require(c[a].is_number_integer() && c[a].get<int>() >= 4,
              key + ".counts: each count must be an integer >= 4");
      g.counts[a] = c[a].get<int>();
    }
    g.extent = positive(key + ".extent");
    g.theta_max = positive(key + ".theta_max");
    return g;
  }
  kernels::Limiter limiter(const std::string& key) const {
    const auto s = text(key);
    if (s == "minmod") return kernels::Limiter::Minmod;
    if (s == "upwind") return kernels::Limiter::Upwind;
    throw PreconditionError(key + ": must be \"minmod\" or \"upwind\"");
  }

 private:
  const json& root_;
};

void check_times(const std::vector<double>& t, double t_final, const std::string& key) {
  for (double s : t) require(s >= 0.0 && s <= t_final, key + ": times must lie in [0, t_final]");
}

}  // namespace

GridPtr GridSpec::build() const { return VelocityGrid::build(counts, extent, theta_max); }

std::string RunConfig::hash() const { return io::config_hash(resolved); }

ContactScenario RunConfig::make_scenario(GridPtr grid) const {
  auto sc = make_contact_scenario(scenario, model, std::move(grid));
  if (explicit_mstar) sc.mstar = mstar;
  return sc;
}

json default_config() {
  const WaveBlock w;
  const CertifyBlock c;
  const KineticBlock k;
  const FluidBlock f;
  const SweepOptions s;
  const ScenarioOptions o;
  const CollisionModel m;
  return {
      {"physics", {{"v_minus", o.v_minus}, {"theta_minus", o.theta_minus}, {"theta_plus", o.theta_plus}}},
      {"profile", {{"L", o.L}, {"n_eta", o.n_eta}, {"tol", o.tol}}},
      {"mstar", {{"fraction", o.mstar_fraction}, {"theta", nullptr}, {"rho", nullptr}}},
      {"model",
       {{"kind", "bgk"}, {"nu0", m.nu0}, {"n_polar", m.n_polar}, {"n_azimuth", m.n_azimuth}}},
      {"velocity_grid", grid_json(GridSpec{})},
      {"wave", {{"epsilon", w.epsilon}, {"times", w.times}, {"x_half", w.x_half}, {"n_x", w.n_x}}},
      {"certify",
       {{"state", {{"rho", c.state.rho}, {"u", c.state.u}, {"theta", c.state.theta}}},
        {"mstar", {{"rho", c.rho_star}, {"theta", c.theta_star}}},
        {"trials", c.trials},
        {"q_trials", c.q_trials},
        {"velocity_grid", grid_json({{12, 12, 12}, 5.0, 1.2})}}},
      {"kinetic",
       {{"epsilon", k.epsilon},
        {"n_cells", k.n_cells},
        {"x_half", k.x_half},
        {"t_final", k.t_final},
        {"snapshots", k.snapshots},
        {"cfl", k.cfl},
        {"limiter", "minmod"},
        {"h", k.h},
        {"write_snapshots", k.write_snapshots},
        {"energy", k.energy}}},
      {"fluid",
       {{"epsilon", f.epsilon},
        {"n_cells", f.n_cells},
        {"x_half", f.x_half},
        {"t_final", f.t_final},
        {"snapshots", f.snapshots},
        {"cfl", f.cfl}}},
      {"sweep",
       {{"epsilons", s.epsilons},
        {"h", s.h},
        {"t_final", s.t_final},
        {"times", s.times},
        {"n_cells", s.n_cells},
        {"x_half", s.x_half},
        {"limiter", "minmod"},
        {"noise", s.noise},
        {"energy", s.energy},
        {"energy_delta_low", 0.1}}},
  };
}

RunConfig resolve_config(const std::string& subcommand, const json& file,
                         const std::vector<std::pair<std::string, json>>& overrides,
                         std::uint64_t seed) {
  bool known = false;
  for (const char* s : kSubcommands) known = known || subcommand == s;
  require(known, "subcommand: unknown subcommand \"" + subcommand + "\"");
  json doc = default_config();
  if (!file.is_null()) merge(doc, file, "");
  for (const auto& [key, value] : overrides) set_dotted(doc, key, value);

  RunConfig rc;
  rc.subcommand = subcommand;
  rc.seed = seed;
  const Reader r(doc);

  auto& o = rc.scenario;
  o.v_minus = r.positive("physics.v_minus");
  o.theta_minus = r.positive("physics.theta_minus");
  o.theta_plus = r.positive("physics.theta_plus");
  o.L = r.positive("profile.L");
  o.n_eta = static_cast<int>(r.integer("profile.n_eta", 11));
  o.tol = r.positive("profile.tol");
  o.mstar_fraction = r.positive("mstar.fraction");
  const double th_lo = std::min(o.theta_minus, o.theta_plus);
  const double th_hi = std::max(o.theta_minus, o.theta_plus);
  if (!r.at("mstar.theta").is_null()) {
    rc.explicit_mstar = true;
    rc.mstar.theta = r.positive("mstar.theta");
    const double rho_minus = 1.0 / o.v_minus;
    const double rho_plus = rho_minus * o.theta_minus / o.theta_plus;  // equal pressure
    rc.mstar.rho = r.at("mstar.rho").is_null() ? 0.5 * (rho_minus + rho_plus)
                                               : r.positive("mstar.rho");
    check_mstar_window(rc.mstar.theta, th_lo, th_hi, "mstar.theta");
  } else {
    require(r.at("mstar.rho").is_null(), "mstar.rho: only allowed together with mstar.theta");
    check_mstar_window(o.mstar_fraction * th_lo, th_lo, th_hi, "mstar.fraction");
  }

  auto& m = rc.model;
  try {
    m.kind = parse_collision_kind(r.text("model.kind"));
  } catch (const PreconditionError&) {
    throw PreconditionError("model.kind: must be \"bgk\" or \"hard_sphere\"");
  }
  m.nu0 = r.positive("model.nu0");
  m.n_polar = static_cast<int>(r.integer("model.n_polar", CollisionModel::kMinPolar));
  m.n_azimuth = static_cast<int>(r.integer("model.n_azimuth", CollisionModel::kMinAzimuth));
  rc.grid = r.grid("velocity_grid");
  require(rc.grid.theta_max >= th_hi,
          "velocity_grid.theta_max: must cover the largest temperature " + std::to_string(th_hi));

  auto& w = rc.wave;
  w.epsilon = r.positive("wave.epsilon");
  w.times = r.list("wave.times");
  for (double t : w.times) require(t >= 0.0, "wave.times: must be nonnegative");
  w.x_half = r.positive("wave.x_half");
  w.n_x = static_cast<std::size_t>(r.integer("wave.n_x", 3));

  auto& c = rc.certify;
  c.state.rho = r.positive("certify.state.rho");
  const auto& u = r.at("certify.state.u");
  require(u.is_array() && u.size() == 3, "certify.state.u: must hold three numbers");
  for (int a = 0; a < 3; ++a) {
    require(u[a].is_number(), "certify.state.u: must hold three numbers");
    c.state.u[a] = u[a].get<double>();
  }
  c.state.theta = r.positive("certify.state.theta");
  c.rho_star = r.positive("certify.mstar.rho");
  c.theta_star = r.positive("certify.mstar.theta");
  check_mstar_window(c.theta_star, c.state.theta, c.state.theta, "certify.mstar.theta");
  c.trials = static_cast<int>(r.integer("certify.trials", 1));
  c.q_trials = static_cast<int>(r.integer("certify.q_trials", 1));
  c.grid = r.grid("certify.velocity_grid");

  auto& k = rc.kinetic;
  k.epsilon = r.positive("kinetic.epsilon");
  k.n_cells = static_cast<std::size_t>(r.integer("kinetic.n_cells", 4));
  k.x_half = r.positive("kinetic.x_half");
  k.t_final = r.positive("kinetic.t_final");
  k.snapshots = r.list("kinetic.snapshots");
  check_times(k.snapshots, k.t_final, "kinetic.snapshots");
  k.cfl = r.positive("kinetic.cfl");
  require(k.cfl <= 1.0, "kinetic.cfl: must lie in (0, 1]");
  k.limiter = r.limiter("kinetic.limiter");
  k.h = r.positive("kinetic.h");
  require(k.h < k.x_half, "kinetic.h: must be smaller than kinetic.x_half");
  k.write_snapshots = r.flag("kinetic.write_snapshots");
  k.energy = r.flag("kinetic.energy");

  auto& f = rc.fluid;
  f.epsilon = r.positive("fluid.epsilon");
  f.n_cells = static_cast<std::size_t>(r.integer("fluid.n_cells", 4));
  f.x_half = r.positive("fluid.x_half");
  f.t_final = r.positive("fluid.t_final");
  f.snapshots = r.list("fluid.snapshots");
  check_times(f.snapshots, f.t_final, "fluid.snapshots");
  f.cfl = r.positive("fluid.cfl");
  require(f.cfl <= 1.0, "fluid.cfl: must lie in (0, 1]");

  auto& s = rc.sweep;
  s.epsilons = r.list("sweep.epsilons");
  s.h = r.positive("sweep.h");
  s.t_final = r.positive("sweep.t_final");
  s.times = r.list("sweep.times");
  s.n_cells = static_cast<std::size_t>(r.integer("sweep.n_cells", 4));
  s.x_half = r.positive("sweep.x_half");
  s.limiter = r.limiter("sweep.limiter");
  s.noise = r.num("sweep.noise");
  s.energy = r.flag("sweep.energy");
  s.model = m;
  rc.energy_delta_low = r.positive("sweep.energy_delta_low");
  s.grid = rc.grid.build();  // validated here so the error names the key
  s.validate();

  rc.resolved = doc;
  return rc;
}

}  // namespace kinlim
