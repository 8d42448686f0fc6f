#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dipsim/coupling.hpp"
#include "dipsim/params.hpp"

namespace dipsim {

struct SweepAxis {
  std::string variable;  // ModelParams field or drive field (omega0)
  double start = 0.0;
  double stop = 0.0;
  int points = 1;
  bool log_scale = false;

  std::vector<double> values() const;
};

struct Scenario {
  std::string name;
  ModelParams params;
  std::optional<SweepAxis> sweep;
  std::string out_prefix = "out";
  KeyValues extra;  // scenario-specific knobs (stark_*, gate_*, pmi_*, ...)
};

const std::vector<std::string>& scenario_names();

// Builds a scenario from a key-value config; recognized ModelParams keys and
// sweep_{variable,start,stop,points,scale} are consumed, the rest lands in
// extra. The same loader accepts a previously written manifest (JSON).
Scenario scenario_from_config(const KeyValues& kv);
KeyValues load_config_or_manifest(const std::string& path);

struct RunOutput {
  std::vector<std::string> files;
  int rows_total = 0;
  int rows_failed = 0;
  bool ok(double max_failed_fraction = 0.1) const {
    return rows_total == 0 ||
           double(rows_failed) <= max_failed_fraction * double(rows_total);
  }
};

// Runs one named scenario, writing its data files and a JSON manifest
// (schema 1) listing every output and the fully resolved parameter set.
RunOutput run_scenario(const Scenario& s, int workers);

// Generic one-axis sweep: per grid point a scenario summary row; failures are
// recorded in a status column and the run continues.
RunOutput run_sweep(const Scenario& s, int workers);

// Worker count resolution: explicit value, else DIPOLAR_SIM_WORKERS, else 1.
int resolve_workers(int requested);

// Shared pipeline pieces (also used by the acceptance suite).
struct MarkerPipeline {
  EquilibriumResult eq;
  PhononSpectrum spectrum;
  LocalModeSummary locals;
  CouplingTable table;
  int marker = -1;
  int target = -1;
};

// chain + marker: build, relax, solve modes, classify, couple.
MarkerPipeline build_marker_pipeline(const ModelParams& params);

struct TwoMoleculePipeline {
  EquilibriumResult eq;
  PhononSpectrum spectrum;
  CouplingTable table;
  double spacing = 0.0;
  int breathing_mode = -1;  // spectrum index of the only coupled mode
};

TwoMoleculePipeline build_two_molecule_pipeline(const ModelParams& params);

struct GatePointResult {
  GateSummary summary;
  bool rwa_ok = true;
};

// Evaluates U0/U_res at the detuning meeting params.delta_u_bar around the
// local z mode; sign = "matched" (phonon term adds to the direct marker
// coupling), "opposed", "below" or "above".
GatePointResult evaluate_gate_point(const MarkerPipeline& pipe,
                                    const ModelParams& params,
                                    const std::string& sign = "matched");

}  // namespace dipsim
