#include "dipsim/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "dipsim/csvio.hpp"
#include "dipsim/rotor.hpp"
#include "dipsim/units.hpp"
#include "json.hpp"

namespace dipsim {

std::vector<double> SweepAxis::values() const {
  if (points < 1) throw std::invalid_argument("sweep needs at least 1 point");
  std::vector<double> v;
  v.reserve(points);
  if (points == 1) {
    v.push_back(start);
    return v;
  }
  if (log_scale) {
    if (!(start > 0.0) || !(stop > 0.0))
      throw std::invalid_argument("log sweep needs positive bounds");
    const double la = std::log(start), lb = std::log(stop);
    for (int i = 0; i < points; ++i)
      v.push_back(std::exp(la + (lb - la) * double(i) / double(points - 1)));
  } else {
    for (int i = 0; i < points; ++i)
      v.push_back(start + (stop - start) * double(i) / double(points - 1));
  }
  return v;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "stark_spectrum",   "two_molecule_trap", "chain_spectrum",
      "marker_local_modes", "pmi_two_molecule", "gate_map",
      "tweezer_window"};
  return names;
}

namespace {

const std::vector<std::string> kModelKeys = {
    "r_d",        "epsilon",     "b_over_a",    "omega_perp",
    "omega_long", "n_molecules", "boundary",    "delta_u_bar"};

double get_num(const KeyValues& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return std::stod(it->second);
}

int get_int(const KeyValues& kv, const std::string& key, int fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return std::stoi(it->second);
}

std::string get_str(const KeyValues& kv, const std::string& key,
                    const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

std::string sanitize_status(std::string msg) {
  for (char& c : msg)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return "error:" + msg;
}

std::string num_str(double v) {
  nlohmann::json j = v;  // shortest round-trip representation
  return j.dump();
}

}  // namespace

Scenario scenario_from_config(const KeyValues& kv) {
  Scenario s;
  s.params = ModelParams::from_config(kv);
  if (auto it = kv.find("scenario"); it != kv.end()) s.name = it->second;
  if (auto it = kv.find("out"); it != kv.end()) s.out_prefix = it->second;
  if (kv.count("sweep_variable")) {
    SweepAxis ax;
    ax.variable = kv.at("sweep_variable");
    ax.start = get_num(kv, "sweep_start", 0.0);
    ax.stop = get_num(kv, "sweep_stop", ax.start);
    ax.points = get_int(kv, "sweep_points", 1);
    const std::string scale = get_str(kv, "sweep_scale", "linear");
    if (scale != "linear" && scale != "log")
      throw std::invalid_argument("sweep_scale must be linear or log");
    ax.log_scale = scale == "log";
    s.sweep = ax;
  }
  static const std::vector<std::string> consumed = {
      "scenario",   "out",          "sweep_variable", "sweep_start",
      "sweep_stop", "sweep_points", "sweep_scale"};
  for (const auto& [k, v] : kv) {
    if (std::find(kModelKeys.begin(), kModelKeys.end(), k) != kModelKeys.end())
      continue;
    if (std::find(consumed.begin(), consumed.end(), k) != consumed.end())
      continue;
    s.extra[k] = v;
  }
  return s;
}

KeyValues load_config_or_manifest(const std::string& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const nlohmann::json j = nlohmann::json::parse(text);
    KeyValues kv;
    if (j.contains("params"))
      for (const auto& [k, v] : j.at("params").items())
        kv[k] = v.is_string() ? v.get<std::string>() : v.dump();
    if (j.contains("extra"))
      for (const auto& [k, v] : j.at("extra").items())
        kv[k] = v.is_string() ? v.get<std::string>() : v.dump();
    if (j.contains("scenario")) kv["scenario"] = j.at("scenario").get<std::string>();
    if (j.contains("out_prefix")) kv["out"] = j.at("out_prefix").get<std::string>();
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
      const auto& sw = j.at("sweep");
      kv["sweep_variable"] = sw.at("variable").get<std::string>();
      kv["sweep_start"] = sw.at("start").dump();
      kv["sweep_stop"] = sw.at("stop").dump();
      kv["sweep_points"] = sw.at("points").dump();
      kv["sweep_scale"] = sw.at("scale").get<std::string>();
    }
    return kv;
  }
  return parse_config_text(text);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DIPOLAR_SIM_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

// ---------------------------------------------------------------------------
// pipelines

TwoMoleculePipeline build_two_molecule_pipeline(const ModelParams& params) {
  params.validate();
  if (params.boundary != Boundary::harmonic || !params.omega_long)
    throw std::invalid_argument(
        "two-molecule scenarios require boundary=harmonic and omega_long");
  const TrapSpec trap = TrapSpec::from_params(params);
  const double nu_mech = params.mech_from_energy_freq(*params.omega_long);
  const double guess = std::pow(6.0 / (nu_mech * nu_mech), 0.2);
  TwoMoleculePipeline p;
  p.eq = minimize_equilibrium(two_molecule_geometry(guess), trap);
  p.spacing = p.eq.geometry.pair_delta(1, 0).norm();
  DynamicalMatrix dm = build_dynamical_matrix(p.eq, trap);
  p.spectrum = normal_modes(dm, params.r_d);
  classify_modes(p.spectrum, p.eq.geometry);
  p.table = spin_phonon_couplings(p.spectrum, p.eq, params);
  double best = -1.0;
  for (int k = 0; k < p.table.n_modes(); ++k) {
    const double c = p.table.lambda.row(k).cwiseAbs().maxCoeff();
    if (c > best) {
      best = c;
      p.breathing_mode = p.table.mode_index[k];
    }
  }
  return p;
}

MarkerPipeline build_marker_pipeline(const ModelParams& params) {
  params.require_crystalline();
  const TrapSpec trap = TrapSpec::from_params(params);
  const int site = params.n_molecules / 2;
  Geometry init = lattice_with_marker(params.n_molecules, params.b_over_a, site,
                                      params.boundary);
  MarkerPipeline p;
  p.eq = minimize_equilibrium(init, trap);
  p.marker = p.eq.geometry.marker_index();
  p.target = p.eq.geometry.marker_site;
  DynamicalMatrix dm = build_dynamical_matrix(p.eq, trap);
  p.spectrum = normal_modes(dm, params.r_d);
  p.locals = classify_modes(p.spectrum, p.eq.geometry);
  p.table = spin_phonon_couplings(p.spectrum, p.eq, params);
  return p;
}

GatePointResult evaluate_gate_point(const MarkerPipeline& pipe,
                                    const ModelParams& params,
                                    const std::string& sign) {
  const int mode_r = pipe.locals.unique(2);
  if (mode_r < 0)
    throw std::runtime_error("no unique local z mode to enhance");
  const DetuningResult det = optimize_detuning(
      pipe.table, pipe.spectrum, pipe.eq, params, mode_r, params.delta_u_bar);

  auto eval = [&](const DetuningSolution& sol) {
    CouplingTable t = pipe.table;
    t.set_drive(sol.omega0);
    const EffectiveSpinModel m = effective_spin_model(t, pipe.eq, params);
    const GateMetrics gm = gate_metrics(m, pipe.marker, pipe.target);
    GatePointResult r;
    r.summary = {gm.u0,      gm.u_res,    gm.ratio, sol.omega0,
                 sol.delta_r, sol.delta_u, m.e_p};
    r.rwa_ok = m.rwa_ok;
    return r;
  };

  if (sign == "below") return eval(det.below);
  if (sign == "above") return eval(det.above);
  const GatePointResult rb = eval(det.below);
  const GatePointResult ra = eval(det.above);
  const bool below_matched = std::abs(rb.summary.u0) >= std::abs(ra.summary.u0);
  if (sign == "matched") return below_matched ? rb : ra;
  if (sign == "opposed") return below_matched ? ra : rb;
  throw std::invalid_argument("gate sign must be matched|opposed|below|above");
}

// ---------------------------------------------------------------------------
// scenario runners

namespace {

struct OutputRecord {
  std::string path;
  std::string kind;
  std::vector<std::string> columns;
};

struct Emitter {
  std::string prefix;
  std::vector<OutputRecord> records;

  std::string csv(const std::string& suffix, const std::string& header,
                  const std::string& body) {
    const std::string path = prefix + "_" + suffix + ".csv";
    write_text_file(path, header + "\n" + body);
    std::vector<std::string> cols;
    std::istringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) cols.push_back(col);
    records.push_back({path, "csv", cols});
    return path;
  }

  std::string csv_full(const std::string& suffix, const std::string& text) {
    const auto nl = text.find('\n');
    return csv(suffix, text.substr(0, nl), text.substr(nl + 1));
  }

  std::string json(const std::string& suffix, const std::string& body) {
    const std::string path = prefix + "_" + suffix + ".json";
    write_text_file(path, body + "\n");
    records.push_back({path, "json", {}});
    return path;
  }
};

nlohmann::json params_json(const ModelParams& p) {
  nlohmann::json j;
  j["r_d"] = p.r_d;
  j["epsilon"] = p.epsilon;
  j["b_over_a"] = p.b_over_a;
  j["omega_perp"] = p.omega_perp_or_default();
  if (p.omega_long) j["omega_long"] = *p.omega_long;
  j["n_molecules"] = p.n_molecules;
  j["boundary"] = to_string(p.boundary);
  j["delta_u_bar"] = p.delta_u_bar;
  return j;
}

void write_manifest(const Scenario& s, const Emitter& em) {
  nlohmann::json j;
  j["schema"] = 1;
  j["scenario"] = s.name;
  j["out_prefix"] = s.out_prefix;
  j["params"] = params_json(s.params);
  nlohmann::json extra = nlohmann::json::object();
  for (const auto& [k, v] : s.extra) extra[k] = v;
  j["extra"] = extra;
  if (s.sweep) {
    j["sweep"] = {{"variable", s.sweep->variable},
                  {"start", s.sweep->start},
                  {"stop", s.sweep->stop},
                  {"points", s.sweep->points},
                  {"scale", s.sweep->log_scale ? "log" : "linear"}};
  } else {
    j["sweep"] = nullptr;
  }
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& r : em.records) {
    nlohmann::json o;
    o["path"] = r.path;
    o["kind"] = r.kind;
    if (!r.columns.empty()) o["columns"] = r.columns;
    outs.push_back(o);
  }
  j["outputs"] = outs;
  write_text_file(em.prefix + ".manifest.json", j.dump(2) + "\n");
}

RunOutput scenario_stark(const Scenario& s, int workers, Emitter& em) {
  StarkOptions opt;
  opt.n_max = get_int(s.extra, "stark_n_max", 20);
  opt.max_label_n = get_int(s.extra, "stark_max_label_n", 2);
  const double fmax = get_num(s.extra, "stark_field_max", 10.0);
  const int pts = get_int(s.extra, "stark_points", 201);
  if (pts < 1) throw std::invalid_argument("stark_points must be >= 1");

  std::vector<std::string> rows(pts);
  parallel_for(pts, workers, [&](int i) {
    const double x = pts == 1 ? fmax : fmax * double(i) / double(pts - 1);
    std::ostringstream os;
    for (const StarkLevel& lvl : stark_spectrum_scaled(x, opt))
      os << csv_num(x) << ',' << lvl.label_n << ',' << lvl.label_abs_m << ','
         << csv_num(lvl.energy) << ',' << csv_num(lvl.induced_dipole) << '\n';
    rows[i] = os.str();
  });
  std::string body;
  for (const auto& r : rows) body += r;
  em.csv("stark", "E_b,label_N,label_absM,energy,dipole", body);
  RunOutput out;
  out.rows_total = pts;
  return out;
}

// two-molecule mode table keyed by axis and COM/breathing character
struct TwoMoleculeModes {
  double com[3] = {0, 0, 0};
  double breath[3] = {0, 0, 0};
};

TwoMoleculeModes identify_two_molecule_modes(const PhononSpectrum& spec) {
  TwoMoleculeModes tm;
  for (int k = 0; k < spec.n_modes(); ++k) {
    for (int axis = 0; axis < 3; ++axis) {
      if (spec.axis_weight(k, axis) < 0.9) continue;
      const double c = spec.modes(axis, k) * spec.modes(3 + axis, k);
      (c > 0 ? tm.com[axis] : tm.breath[axis]) = spec.omega[k];
    }
  }
  return tm;
}

RunOutput scenario_two_molecule(const Scenario& s, int /*workers*/, Emitter& em) {
  const TwoMoleculePipeline p = build_two_molecule_pipeline(s.params);
  em.csv_full("geometry", geometry_csv(p.eq.geometry));
  em.csv_full("modes", spectrum_csv(p.spectrum));

  const TwoMoleculeModes tm = identify_two_molecule_modes(p.spectrum);
  CouplingTable far = p.table;
  far.set_drive(get_num(s.extra, "far_omega0", 1e12));
  const EffectiveSpinModel far_model = effective_spin_model(far, p.eq, s.params);

  const DetuningResult det =
      optimize_detuning(p.table, p.spectrum, p.eq, s.params, p.breathing_mode,
                        s.params.delta_u_bar);
  auto vpm = [&](const DetuningSolution& sol) {
    CouplingTable t = p.table;
    t.set_drive(sol.omega0);
    return effective_spin_model(t, p.eq, s.params).u_pm(0, 1);
  };

  em.csv_full("lambda", lambda_csv(far));
  em.csv_full("pairs", effective_model_csv(far_model, p.eq));

  nlohmann::json j;
  j["spacing"] = p.spacing;
  j["omega"] = {{"com_x", tm.com[0]},    {"breath_x", tm.breath[0]},
                {"com_y", tm.com[1]},    {"breath_y", tm.breath[1]},
                {"com_z", tm.com[2]},    {"breath_z", tm.breath[2]}};
  j["u12_far"] = far_model.u(0, 1);
  j["v_pm"] = {{"below", vpm(det.below)}, {"above", vpm(det.above)}};
  j["delta_r"] = {{"below", det.below.delta_r}, {"above", det.above.delta_r}};
  j["delta_u"] = {{"below", det.below.delta_u}, {"above", det.above.delta_u}};
  j["energy"] = p.eq.energy;
  em.json("summary", j.dump(2));
  RunOutput out;
  out.rows_total = 1;
  return out;
}

RunOutput scenario_chain(const Scenario& s, int /*workers*/, Emitter& em) {
  s.params.require_crystalline();
  const TrapSpec trap = TrapSpec::from_params(s.params);
  EquilibriumResult eq = minimize_equilibrium(
      chain_geometry(s.params.n_molecules, s.params.boundary), trap);
  DynamicalMatrix dm = build_dynamical_matrix(eq, trap);
  PhononSpectrum spec = normal_modes(dm, s.params.r_d);
  classify_modes(spec, eq.geometry);
  em.csv_full("geometry", geometry_csv(eq.geometry));
  em.csv_full("modes", spectrum_csv(spec));
  RunOutput out;
  out.rows_total = 1;
  return out;
}

RunOutput scenario_marker_modes(const Scenario& s, int /*workers*/, Emitter& em) {
  const MarkerPipeline p = build_marker_pipeline(s.params);
  em.csv_full("geometry", geometry_csv(p.eq.geometry));
  em.csv_full("modes", spectrum_csv(p.spectrum));
  if (get_int(s.extra, "dump_modefunctions", 1) != 0)
    em.csv_full("modefunctions", modefunction_csv(p.spectrum));

  nlohmann::json j;
  j["n_local"] = p.locals.count();
  const char* axis_name[3] = {"x", "y", "z"};
  for (int axis = 0; axis < 3; ++axis) {
    nlohmann::json arr = nlohmann::json::array();
    for (int k : p.locals.per_axis[axis]) {
      arr.push_back({{"mode", k},
                     {"omega", p.spectrum.omega[k]},
                     {"participation", p.spectrum.participation(k)},
                     {"weight_marker_target",
                      marker_target_weight(p.spectrum, p.eq.geometry, k)}});
    }
    j[axis_name[axis]] = arr;
  }
  em.json("local", j.dump(2));
  RunOutput out;
  out.rows_total = 1;
  return out;
}

RunOutput scenario_pmi(const Scenario& s, int workers, Emitter& em) {
  const TwoMoleculePipeline p = build_two_molecule_pipeline(s.params);
  const int pos = p.table.position_of(p.breathing_mode);
  const double omega_r = p.table.omega[pos];
  const double window = get_num(s.extra, "pmi_window", 0.4);
  const int pts = get_int(s.extra, "pmi_points", 401);
  if (pts < 1) throw std::invalid_argument("pmi_points must be >= 1");

  std::vector<std::string> rows(pts);
  std::vector<int> failed(pts, 0);
  parallel_for(pts, workers, [&](int i) {
    const double f = pts == 1 ? 0.0
                              : -window + 2.0 * window * double(i) / double(pts - 1);
    const double omega0 = omega_r * (1.0 + f);
    std::ostringstream os;
    os << csv_num(omega0) << ',' << csv_num(omega_r - omega0) << ',';
    try {
      CouplingTable t = p.table;
      t.set_drive(omega0);
      const EffectiveSpinModel m = effective_spin_model(t, p.eq, s.params);
      const double du = displacement_bound(t, p.spectrum, p.eq, s.params);
      os << csv_num(m.u_pm(0, 1)) << ',' << csv_num(du) << ','
         << (du <= s.params.delta_u_bar ? 1 : 0) << ",ok";
    } catch (const std::exception& e) {
      failed[i] = 1;
      os << "nan,nan,0," << sanitize_status(e.what());
    }
    rows[i] = os.str() + "\n";
  });
  std::string body;
  for (const auto& r : rows) body += r;
  em.csv("pmi", "omega0,delta_r,v_pm,delta_u,allowed,status", body);
  RunOutput out;
  out.rows_total = pts;
  for (int f : failed) out.rows_failed += f;
  return out;
}

RunOutput scenario_gate_map(const Scenario& s, int workers, Emitter& em) {
  const double e0 = get_num(s.extra, "gate_eps_start", 0.01);
  const double e1 = get_num(s.extra, "gate_eps_stop", 0.3);
  const int ne = get_int(s.extra, "gate_eps_points", 8);
  const double b0 = get_num(s.extra, "gate_b_start", 0.5);
  const double b1 = get_num(s.extra, "gate_b_stop", 1.0);
  const int nb = get_int(s.extra, "gate_b_points", 6);
  const std::string sign = get_str(s.extra, "gate_sign", "matched");
  if (ne < 1 || nb < 1) throw std::invalid_argument("gate grid needs >= 1 point");

  std::vector<double> eps(ne), bs(nb);
  for (int i = 0; i < ne; ++i)
    eps[i] = ne == 1 ? e0 : e0 + (e1 - e0) * double(i) / double(ne - 1);
  for (int i = 0; i < nb; ++i)
    bs[i] = nb == 1 ? b0 : b0 + (b1 - b0) * double(i) / double(nb - 1);

  std::vector<std::string> cells(size_t(ne) * nb);
  std::vector<int> failed(size_t(ne) * nb, 0);
  parallel_for(nb, workers, [&](int ib) {
    ModelParams base = s.params;
    base.b_over_a = bs[ib];
    MarkerPipeline pipe;
    std::string pipe_error;
    try {
      pipe = build_marker_pipeline(base);
    } catch (const std::exception& e) {
      pipe_error = e.what();
    }
    for (int ie = 0; ie < ne; ++ie) {
      const size_t cell = size_t(ie) * nb + ib;
      std::ostringstream os;
      os << csv_num(eps[ie]) << ',' << csv_num(bs[ib]) << ',';
      if (!pipe_error.empty()) {
        failed[cell] = 1;
        os << "nan,nan,nan,nan,nan,nan," << sanitize_status(pipe_error);
      } else {
        try {
          ModelParams pt = base;
          pt.epsilon = eps[ie];
          const GatePointResult r = evaluate_gate_point(pipe, pt, sign);
          os << csv_num(r.summary.u0) << ',' << csv_num(r.summary.u_res) << ','
             << csv_num(r.summary.ratio) << ',' << csv_num(r.summary.omega0)
             << ',' << csv_num(r.summary.delta_r) << ','
             << csv_num(r.summary.delta_u) << ','
             << (r.rwa_ok ? "ok" : "ok;rwa_flag");
        } catch (const std::exception& e) {
          failed[cell] = 1;
          os << "nan,nan,nan,nan,nan,nan," << sanitize_status(e.what());
        }
      }
      cells[cell] = os.str() + "\n";
    }
  });
  std::string body;
  for (const auto& c : cells) body += c;
  em.csv("gate_map",
         "epsilon,b_over_a,U0,U_res,ratio,omega0,delta_R,delta_u,status", body);

  // single-point grids double as a gate-point detail report
  if (ne == 1 && nb == 1 && failed[0] == 0) {
    ModelParams pt = s.params;
    pt.epsilon = eps[0];
    pt.b_over_a = bs[0];
    const MarkerPipeline pipe = build_marker_pipeline(pt);
    const GatePointResult r = evaluate_gate_point(pipe, pt, sign);
    CouplingTable t = pipe.table;
    t.set_drive(r.summary.omega0);
    const EffectiveSpinModel m = effective_spin_model(t, pipe.eq, pt);
    em.json("summary", gate_summary_json(r.summary));
    em.csv_full("geometry", geometry_csv(pipe.eq.geometry));
    em.csv_full("lambda", lambda_csv(t));
    em.csv_full("pairs", effective_model_csv(m, pipe.eq));
  }

  RunOutput out;
  out.rows_total = ne * nb;
  for (int f : failed) out.rows_failed += f;
  return out;
}

RunOutput scenario_tweezer(const Scenario& s, int /*workers*/, Emitter& em) {
  const PhysicalBinding binding =
      PhysicalBinding::by_name(get_str(s.extra, "binding", "LiCs"));
  const double safety = get_num(s.extra, "tweezer_safety", 10.0);
  const double s0 = get_num(s.extra, "tweezer_sigma_start", 0.5);
  const double s1 = get_num(s.extra, "tweezer_sigma_stop", 5.0);
  const int pts = get_int(s.extra, "tweezer_points", 10);
  if (pts < 1) throw std::invalid_argument("tweezer_points must be >= 1");

  std::ostringstream body;
  for (int i = 0; i < pts; ++i) {
    const double sigma =
        pts == 1 ? s0 : s0 + (s1 - s0) * double(i) / double(pts - 1);
    const TweezerWindow w = tweezer_constraints(s.params, sigma, binding, safety);
    body << csv_num(sigma) << ',' << csv_num(w.omega_min) << ','
         << csv_num(w.omega_max) << ',' << (w.feasible ? 1 : 0) << '\n';
  }
  em.csv("tweezer", "sigma_tw,omega_min,omega_max,feasible", body.str());
  RunOutput out;
  out.rows_total = pts;
  return out;
}

using ScenarioFn = RunOutput (*)(const Scenario&, int, Emitter&);

ScenarioFn scenario_fn(const std::string& name) {
  if (name == "stark_spectrum") return scenario_stark;
  if (name == "two_molecule_trap") return scenario_two_molecule;
  if (name == "chain_spectrum") return scenario_chain;
  if (name == "marker_local_modes") return scenario_marker_modes;
  if (name == "pmi_two_molecule") return scenario_pmi;
  if (name == "gate_map") return scenario_gate_map;
  if (name == "tweezer_window") return scenario_tweezer;
  throw std::invalid_argument("unknown scenario: " + name);
}

void ensure_parent_dir(const std::string& prefix) {
  const std::filesystem::path p(prefix);
  if (p.has_parent_path() && !p.parent_path().empty())
    std::filesystem::create_directories(p.parent_path());
}

}  // namespace

RunOutput run_scenario(const Scenario& s, int workers) {
  const ScenarioFn fn = scenario_fn(s.name);
  ensure_parent_dir(s.out_prefix);
  Emitter em;
  em.prefix = s.out_prefix;
  RunOutput out = fn(s, resolve_workers(workers), em);
  write_manifest(s, em);
  out.files.reserve(em.records.size() + 1);
  for (const auto& r : em.records) out.files.push_back(r.path);
  out.files.push_back(s.out_prefix + ".manifest.json");
  return out;
}

// ---------------------------------------------------------------------------
// generic sweep

namespace {

void set_sweep_variable(ModelParams& p, KeyValues& extra,
                        const std::string& var, double value) {
  if (var == "r_d") p.r_d = value;
  else if (var == "epsilon") p.epsilon = value;
  else if (var == "b_over_a") p.b_over_a = value;
  else if (var == "omega_perp") p.omega_perp = value;
  else if (var == "omega_long") p.omega_long = value;
  else if (var == "delta_u_bar") p.delta_u_bar = value;
  else if (var == "n_molecules") p.n_molecules = int(std::lround(value));
  else if (var == "omega0") extra["omega0"] = num_str(value);
  else
    throw std::invalid_argument("sweep variable must be a ModelParams or drive field: " + var);
  p.validate();
}

std::vector<std::string> summary_columns(const std::string& name) {
  if (name == "two_molecule_trap")
    return {"spacing", "omega_com_x", "omega_breath_x", "omega_breath_y",
            "omega_breath_z", "u12_far"};
  if (name == "marker_local_modes")
    return {"n_local", "omega_loc_x", "omega_loc_y", "omega_loc_z",
            "weight_x", "weight_y", "weight_z"};
  if (name == "chain_spectrum")
    return {"omega_x_max", "omega_y_min", "omega_y_max", "omega_z_min",
            "omega_z_max"};
  if (name == "gate_map")
    return {"U0", "U_res", "ratio", "omega0", "delta_R", "delta_u"};
  if (name == "pmi_two_molecule") return {"v_pm", "delta_u", "allowed"};
  if (name == "stark_spectrum") return {"ground_energy", "ground_dipole"};
  if (name == "tweezer_window") return {"omega_min", "omega_max", "feasible"};
  throw std::invalid_argument("unknown scenario: " + name);
}

std::vector<double> summarize(const std::string& name, const ModelParams& params,
                              const KeyValues& extra) {
  if (name == "two_molecule_trap") {
    const TwoMoleculePipeline p = build_two_molecule_pipeline(params);
    const TwoMoleculeModes tm = identify_two_molecule_modes(p.spectrum);
    CouplingTable far = p.table;
    far.set_drive(get_num(extra, "far_omega0", 1e12));
    const EffectiveSpinModel m = effective_spin_model(far, p.eq, params);
    return {p.spacing, tm.com[0], tm.breath[0], tm.breath[1], tm.breath[2],
            m.u(0, 1)};
  }
  if (name == "marker_local_modes") {
    const MarkerPipeline p = build_marker_pipeline(params);
    double omega[3] = {0, 0, 0}, weight[3] = {0, 0, 0};
    for (int axis = 0; axis < 3; ++axis) {
      const int k = p.locals.unique(axis);
      if (k >= 0) {
        omega[axis] = p.spectrum.omega[k];
        weight[axis] = marker_target_weight(p.spectrum, p.eq.geometry, k);
      }
    }
    return {double(p.locals.count()), omega[0], omega[1], omega[2],
            weight[0], weight[1], weight[2]};
  }
  if (name == "chain_spectrum") {
    params.require_crystalline();
    const TrapSpec trap = TrapSpec::from_params(params);
    EquilibriumResult eq = minimize_equilibrium(
        chain_geometry(params.n_molecules, params.boundary), trap);
    PhononSpectrum spec = normal_modes(build_dynamical_matrix(eq, trap), params.r_d);
    classify_modes(spec, eq.geometry);
    double xmax = 0, ymin = 0, ymax = 0, zmin = 0, zmax = 0;
    bool fy = true, fz = true;
    for (int k = 0; k < spec.n_modes(); ++k) {
      const double w = spec.omega[k];
      if (spec.branch[k] == Branch::acoustic_x) xmax = std::max(xmax, w);
      if (spec.branch[k] == Branch::optical_y) {
        ymin = fy ? w : std::min(ymin, w);
        ymax = std::max(ymax, w);
        fy = false;
      }
      if (spec.branch[k] == Branch::optical_z) {
        zmin = fz ? w : std::min(zmin, w);
        zmax = std::max(zmax, w);
        fz = false;
      }
    }
    return {xmax, ymin, ymax, zmin, zmax};
  }
  if (name == "gate_map") {
    const MarkerPipeline p = build_marker_pipeline(params);
    const GatePointResult r = evaluate_gate_point(p, params);
    return {r.summary.u0,     r.summary.u_res,  r.summary.ratio,
            r.summary.omega0, r.summary.delta_r, r.summary.delta_u};
  }
  if (name == "pmi_two_molecule") {
    const TwoMoleculePipeline p = build_two_molecule_pipeline(params);
    auto it = extra.find("omega0");
    if (it == extra.end())
      throw std::invalid_argument("pmi summary requires omega0 (set or swept)");
    CouplingTable t = p.table;
    t.set_drive(std::stod(it->second));
    const EffectiveSpinModel m = effective_spin_model(t, p.eq, params);
    const double du = displacement_bound(t, p.spectrum, p.eq, params);
    return {m.u_pm(0, 1), du, du <= params.delta_u_bar ? 1.0 : 0.0};
  }
  if (name == "stark_spectrum") {
    StarkOptions opt;
    opt.n_max = get_int(extra, "stark_n_max", 20);
    opt.max_label_n = get_int(extra, "stark_max_label_n", 2);
    const auto levels =
        stark_spectrum_scaled(get_num(extra, "stark_field_max", 10.0), opt);
    for (const auto& lvl : levels)
      if (lvl.label_n == 0 && lvl.label_abs_m == 0)
        return {lvl.energy, lvl.induced_dipole};
    throw std::runtime_error("ground level missing");
  }
  if (name == "tweezer_window") {
    const TweezerWindow w = tweezer_constraints(
        params, get_num(extra, "tweezer_sigma", 1.0),
        PhysicalBinding::by_name(get_str(extra, "binding", "LiCs")),
        get_num(extra, "tweezer_safety", 10.0));
    return {w.omega_min, w.omega_max, w.feasible ? 1.0 : 0.0};
  }
  throw std::invalid_argument("unknown scenario: " + name);
}

}  // namespace

RunOutput run_sweep(const Scenario& s, int workers) {
  if (!s.sweep) throw std::invalid_argument("run_sweep requires a sweep axis");
  const std::vector<double> values = s.sweep->values();
  const std::vector<std::string> cols = summary_columns(s.name);
  ensure_parent_dir(s.out_prefix);

  const int n = int(values.size());
  std::vector<std::string> rows(n);
  std::vector<int> failed(n, 0);
  parallel_for(n, resolve_workers(workers), [&](int i) {
    std::ostringstream os;
    os << csv_num(values[i]);
    try {
      ModelParams p = s.params;
      KeyValues extra = s.extra;
      set_sweep_variable(p, extra, s.sweep->variable, values[i]);
      const std::vector<double> vals = summarize(s.name, p, extra);
      for (double v : vals) os << ',' << csv_num(v);
      os << ",ok";
    } catch (const std::exception& e) {
      failed[i] = 1;
      for (size_t c = 0; c < cols.size(); ++c) os << ",nan";
      os << ',' << sanitize_status(e.what());
    }
    rows[i] = os.str() + "\n";
  });

  // deterministic row order: sorted by axis value
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] < values[b]; });

  std::string header = s.sweep->variable;
  for (const auto& c : cols) header += "," + c;
  header += ",status";
  std::string body;
  int nfail = 0;
  for (int i : order) {
    body += rows[i];
    nfail += failed[i];
  }

  Emitter em;
  em.prefix = s.out_prefix;
  em.csv("sweep", header, body);
  write_manifest(s, em);

  RunOutput out;
  for (const auto& r : em.records) out.files.push_back(r.path);
  out.files.push_back(s.out_prefix + ".manifest.json");
  out.rows_total = n;
  out.rows_failed = nfail;
  return out;
}

}  // namespace dipsim
