#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "marker_slam/evaluation.hpp"
#include "marker_slam/factor_graph.hpp"
#include "marker_slam/map_store.hpp"
#include "marker_slam/sim_world.hpp"

namespace marker_slam {

// Defaults reproduce the full protocol: one 60 s mapping sequence plus seven
// 30 s evaluation sequences, all three modes, perturbations 0.0-0.5 m in
// 0.1 m steps.
struct ExperimentConfig {
  std::uint64_t master_seed = 1;

  int n_eval_sequences = 7;
  double mapping_duration_s = 60.0;
  double eval_duration_s = 30.0;
  double frame_rate_hz = 10.0;
  double mapping_target_length_m = 16.0;
  double eval_target_length_min_m = 8.05;
  double eval_target_length_max_m = 8.60;

  int n_markers = 5;
  Vector3d room_half_extents = Vector3d(3.0, 3.0, 1.5);

  NoiseConfig noise;
  SolverConfig solver;

  std::vector<double> perturbation_sweep = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<Mode> modes = {Mode::Slam, Mode::SlamWithPrior, Mode::Localization};

  int threads = 0;  // 0: hardware concurrency
};

// The generated dataset: the marker environment shared by all sequences, the
// mapping sequence (id 0) and the evaluation sequences (ids 1..n).
struct Dataset {
  Environment env;
  SimulatedSequence mapping;
  std::vector<SimulatedSequence> eval_sequences;
};

Dataset build_dataset(const ExperimentConfig& cfg);

// Runs Slam mode on the mapping sequence and extracts the final marker
// estimates. Throws, naming the marker, if any marker was never observed.
MarkerMap build_prior_map(const ExperimentConfig& cfg, const Dataset& dataset);
MarkerMap build_prior_map(const ExperimentConfig& cfg);

// Outcome of one (sequence, mode, perturbed-map) pipeline run.
struct SequenceRunResult {
  TrajectoryRecord trajectory;
  std::vector<OptimizationReport> reports;
  MarkerMap markers;  // final marker estimates
  int dropped_observations = 0;
  int skipped_leading_frames = 0;
};

// Feeds a sequence frame by frame through a freshly configured graph.
// prior_map must be null exactly for Slam mode.
SequenceRunResult run_sequence(const SimulatedSequence& seq, Mode mode,
                               const MarkerMap* prior_map,
                               const NoiseConfig& noise,
                               const SolverConfig& solver);

struct RunRow {
  int sequence = 0;
  double length_m = 0.0;
  Mode mode = Mode::Slam;
  double delta_p = 0.0;
  double ate_rmse_m = 0.0;
  double mean_runtime_ms = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

// Per-(mode, delta_p) column average over the sequences, mirroring the
// average row of the result tables.
struct ColumnAverage {
  Mode mode = Mode::Slam;
  double delta_p = 0.0;
  double length_m = 0.0;
  double ate_rmse_m = 0.0;
  double mean_runtime_ms = 0.0;
  int count = 0;
};

struct ResultTable {
  std::vector<RunRow> rows;  // sorted by (sequence, mode, delta_p)
  std::vector<ColumnAverage> averages;
};

// Recomputes the per-column averages from the rows (used both to build the
// table and to verify it).
std::vector<ColumnAverage> compute_averages(const std::vector<RunRow>& rows);

// The full sweep: every evaluation sequence x mode x perturbation, with the
// perturbation applied only to the prior-map modes (Slam runs once per
// sequence). Estimates are deterministic under the master seed; cell
// failures become row-level errors instead of aborting the sweep.
ResultTable run_matrix(const ExperimentConfig& cfg, const Dataset& dataset,
                       const MarkerMap& prior_map);
ResultTable run_matrix(const ExperimentConfig& cfg);

enum class TableFormat { Csv, Markdown };

// Wide tables mirroring the ATE and runtime layouts (one row per sequence,
// one column per mode/perturbation, plus the average row).
std::string render_ate_table(const ResultTable& table, TableFormat format);
std::string render_runtime_table(const ResultTable& table, TableFormat format);

// Long-form record: one line per run plus average lines.
std::string render_long_csv(const ResultTable& table);

// Both wide tables concatenated, for terminal output.
std::string render_tables(const ResultTable& table, TableFormat format);

}  // namespace marker_slam
