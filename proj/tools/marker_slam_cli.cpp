#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "marker_slam/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace marker_slam;

namespace {

NoiseConfig load_noise_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open noise profile '" + path + "'");
  json j = json::parse(in);
  NoiseConfig noise;
  noise.detection_sigma_trans_per_m =
      j.value("detection_sigma_trans_per_m", noise.detection_sigma_trans_per_m);
  noise.detection_sigma_rot_rad =
      j.value("detection_sigma_rot_rad", noise.detection_sigma_rot_rad);
  noise.odometry_sigma_trans_m =
      j.value("odometry_sigma_trans_m", noise.odometry_sigma_trans_m);
  noise.odometry_sigma_rot_rad =
      j.value("odometry_sigma_rot_rad", noise.odometry_sigma_rot_rad);
  return noise;
}

Mode parse_mode(const std::string& token) {
  if (token == "slam") return Mode::Slam;
  if (token == "slam-prior") return Mode::SlamWithPrior;
  if (token == "localization") return Mode::Localization;
  throw std::runtime_error("unknown mode '" + token +
                           "' (expected slam|slam-prior|localization)");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
}

void write_sequence_files(const SimulatedSequence& seq, const fs::path& dir,
                          const std::string& stem) {
  save_trajectory(seq.ground_truth, (dir / (stem + "_gt.traj")).string());
  std::ofstream det(dir / (stem + "_detections.txt"));
  save_detection_log(seq, det);
  std::ofstream odo(dir / (stem + "_odometry.txt"));
  save_odometry_log(seq, odo);
}

json noise_to_json(const NoiseConfig& n) {
  return json{{"detection_sigma_trans_per_m", n.detection_sigma_trans_per_m},
              {"detection_sigma_rot_rad", n.detection_sigma_rot_rad},
              {"odometry_sigma_trans_m", n.odometry_sigma_trans_m},
              {"odometry_sigma_rot_rad", n.odometry_sigma_rot_rad}};
}

void write_run_meta(const ExperimentConfig& cfg, const fs::path& dir) {
  json meta;
  meta["master_seed"] = cfg.master_seed;
  meta["noise"] = noise_to_json(cfg.noise);
  meta["perturbation_sweep_m"] = cfg.perturbation_sweep;
  meta["perturbation_model"] = "positions displaced along 3-d uniform random directions";
  meta["ate_alignment"] = "se3 umeyama, unit scale, translation rmse";
  meta["sequences"] = {{"mapping_duration_s", cfg.mapping_duration_s},
                       {"eval_duration_s", cfg.eval_duration_s},
                       {"count", cfg.n_eval_sequences},
                       {"frame_rate_hz", cfg.frame_rate_hz}};
  std::vector<std::string> mode_names;
  for (const Mode m : cfg.modes) mode_names.push_back(to_string(m));
  meta["modes"] = mode_names;
  write_text(dir / "run_meta.json", meta.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiducial-marker pose-graph SLAM: simulation, mapping, "
               "localization and the perturbation study"};
  app.require_subcommand(1);

  std::string out_dir;
  std::string noise_profile;
  std::string map_path;
  std::string format = "md";
  std::string mode_filter;
  std::uint64_t seed = 1;
  double delta = -1.0;
  int threads = 0;

  auto* simulate = app.add_subcommand("simulate", "Generate and write the dataset");
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--seed", seed, "Master seed");
  simulate->add_option("--noise-profile", noise_profile, "Noise profile JSON");

  auto* map_cmd = app.add_subcommand("map", "Build the prior map with SLAM mode");
  map_cmd->add_option("--out", out_dir, "Output directory")->required();
  map_cmd->add_option("--seed", seed, "Master seed");
  map_cmd->add_option("--noise-profile", noise_profile, "Noise profile JSON");

  auto* run = app.add_subcommand("run", "Run the mode x perturbation matrix");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--noise-profile", noise_profile, "Noise profile JSON");
  run->add_option("--format", format, "Stdout format: csv|md")
      ->check(CLI::IsMember({"csv", "md"}));
  run->add_option("--mode", mode_filter, "Restrict to one mode");
  run->add_option("--delta", delta, "Restrict the sweep to one perturbation [m]");
  run->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* eval = app.add_subcommand("eval", "ATE between two trajectory files");
  std::string est_path, ref_path;
  double max_dt = -1.0;
  eval->add_option("estimate", est_path, "Estimated trajectory (.traj)")->required();
  eval->add_option("reference", ref_path, "Reference trajectory (.traj)")->required();
  eval->add_option("--max-dt", max_dt, "Association window [s] (default: half the median frame period)");

  auto* perturb_cmd = app.add_subcommand("perturb", "Perturb a marker map");
  perturb_cmd->add_option("--map", map_path, "Input map (.mmap)")->required();
  perturb_cmd->add_option("--delta", delta, "Displacement magnitude [m]")->required();
  perturb_cmd->add_option("--seed", seed, "Perturbation seed");
  std::string out_map;
  perturb_cmd->add_option("--out", out_map, "Output map path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg;
    cfg.master_seed = seed;
    if (!noise_profile.empty()) cfg.noise = load_noise_profile(noise_profile);
    cfg.threads = threads;

    if (simulate->parsed()) {
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      const Dataset ds = build_dataset(cfg);
      save_map(ds.env.markers, (dir / "map_truth.mmap").string());
      write_sequence_files(ds.mapping, dir, "mapping");
      for (const auto& seq : ds.eval_sequences) {
        write_sequence_files(seq, dir, "seq" + std::to_string(seq.id));
      }
      std::printf("wrote 1 mapping + %zu evaluation sequences to %s\n",
                  ds.eval_sequences.size(), dir.string().c_str());
    } else if (map_cmd->parsed()) {
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      const Dataset ds = build_dataset(cfg);
      const MarkerMap prior = build_prior_map(cfg, ds);
      save_map(prior, (dir / "prior_map.mmap").string());
      save_map(ds.env.markers, (dir / "map_truth.mmap").string());
      std::printf("prior map with %zu markers -> %s\n", prior.size(),
                  (dir / "prior_map.mmap").string().c_str());
    } else if (run->parsed()) {
      if (!mode_filter.empty()) cfg.modes = {parse_mode(mode_filter)};
      if (delta >= 0.0) cfg.perturbation_sweep = {delta};
      const fs::path dir(out_dir);
      fs::create_directories(dir);

      const Dataset ds = build_dataset(cfg);
      const MarkerMap prior = build_prior_map(cfg, ds);
      save_map(prior, (dir / "prior_map.mmap").string());
      const ResultTable table = run_matrix(cfg, ds, prior);

      write_text(dir / "table_ate.csv", render_ate_table(table, TableFormat::Csv));
      write_text(dir / "table_ate.md", render_ate_table(table, TableFormat::Markdown));
      write_text(dir / "table_runtime.csv", render_runtime_table(table, TableFormat::Csv));
      write_text(dir / "table_runtime.md", render_runtime_table(table, TableFormat::Markdown));
      write_text(dir / "results.csv", render_long_csv(table));
      write_run_meta(cfg, dir);

      std::cout << render_tables(table, format == "csv" ? TableFormat::Csv
                                                        : TableFormat::Markdown);
      int failures = 0;
      for (const auto& row : table.rows) failures += row.ok() ? 0 : 1;
      if (failures > 0) {
        std::fprintf(stderr, "error: %d of %zu runs failed (see results.csv)\n",
                     failures, table.rows.size());
        return 1;
      }
    } else if (eval->parsed()) {
      const TrajectoryRecord est = load_trajectory(est_path);
      const TrajectoryRecord ref = load_trajectory(ref_path);
      if (max_dt <= 0.0) {
        std::vector<double> dts;
        for (std::size_t i = 1; i < ref.samples.size(); ++i) {
          dts.push_back(ref.samples[i].first - ref.samples[i - 1].first);
        }
        std::sort(dts.begin(), dts.end());
        max_dt = dts.empty() ? 0.05 : 0.5 * dts[dts.size() / 2];
      }
      const AteResult ate = ate_rmse(est, ref, max_dt);
      std::printf("ate_rmse_m %.9f\nmean_m %.9f\nmedian_m %.9f\nmax_m %.9f\npairs %d\n",
                  ate.rmse, ate.mean, ate.median, ate.max, ate.pair_count);
    } else if (perturb_cmd->parsed()) {
      const MarkerMap in = load_map(map_path);
      PerturbationConfig pcfg;
      pcfg.delta_p = delta;
      pcfg.seed = seed;
      const MarkerMap out = perturb(in, pcfg);
      save_map(out, out_map);
      std::printf("perturbed %zu markers by %.3f m -> %s\n", out.size(), delta,
                  out_map.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
