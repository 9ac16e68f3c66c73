#include "marker_slam/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "text_format.hpp"

namespace marker_slam {

namespace {

// Stream tags for deriving independent seeds from the master seed.
constexpr std::uint64_t kEnvStream = 0xE2F05EEDull;
constexpr std::uint64_t kLengthStream = 0x1E46B375ull;
constexpr std::uint64_t kSequenceStream = 0x5E90A1CEull;
constexpr std::uint64_t kPerturbStream = 0x9E27D0B1ull;

int mode_ordinal(Mode mode) { return static_cast<int>(mode); }

}  // namespace

Dataset build_dataset(const ExperimentConfig& cfg) {
  Dataset ds;
  ds.env = make_environment(cfg.n_markers, cfg.room_half_extents,
                            seed_mix(cfg.master_seed, kEnvStream));

  SequenceSpec mapping_spec;
  mapping_spec.duration_s = cfg.mapping_duration_s;
  mapping_spec.frame_rate_hz = cfg.frame_rate_hz;
  mapping_spec.target_path_length_m = cfg.mapping_target_length_m;
  mapping_spec.seed = seed_mix(cfg.master_seed, kSequenceStream, 0);
  ds.mapping = simulate_sequence(0, mapping_spec, ds.env, cfg.noise);

  Rng length_rng(seed_mix(cfg.master_seed, kLengthStream));
  for (int k = 1; k <= cfg.n_eval_sequences; ++k) {
    SequenceSpec spec;
    spec.duration_s = cfg.eval_duration_s;
    spec.frame_rate_hz = cfg.frame_rate_hz;
    spec.target_path_length_m =
        length_rng.uniform(cfg.eval_target_length_min_m, cfg.eval_target_length_max_m);
    spec.seed = seed_mix(cfg.master_seed, kSequenceStream, static_cast<std::uint64_t>(k));
    ds.eval_sequences.push_back(simulate_sequence(k, spec, ds.env, cfg.noise));
  }
  return ds;
}

SequenceRunResult run_sequence(const SimulatedSequence& seq, Mode mode,
                               const MarkerMap* prior_map,
                               const NoiseConfig& noise,
                               const SolverConfig& solver) {
  FactorGraph graph;
  graph.set_noise_model(noise);
  graph.configure_mode(mode, prior_map);

  SequenceRunResult result;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const std::optional<Posed>& odom =
        graph.num_keyframes() > 0 ? seq.odometry[i] : std::nullopt;
    try {
      result.reports.push_back(graph.process_frame(seq.frames[i], odom, solver));
    } catch (const FrameRejected&) {
      // Before the first keyframe exists there is nothing to attach a frame
      // to; wait for one with usable detections.
      if (graph.num_keyframes() == 0) {
        ++result.skipped_leading_frames;
        continue;
      }
      throw;
    }
  }
  result.trajectory = graph.trajectory();
  result.dropped_observations = graph.dropped_observations();
  result.markers = graph.marker_map(to_string(mode));
  return result;
}

MarkerMap build_prior_map(const ExperimentConfig& cfg, const Dataset& dataset) {
  const auto run = run_sequence(dataset.mapping, Mode::Slam, nullptr, cfg.noise,
                                cfg.solver);
  for (const auto& [id, pose] : dataset.env.markers.entries) {
    if (!run.markers.has(id)) {
      throw std::runtime_error("build_prior_map: marker " + std::to_string(id) +
                               " was never observed by the mapping sequence");
    }
  }
  MarkerMap map = run.markers;
  map.source_tag = "slam-mapping";
  return map;
}

MarkerMap build_prior_map(const ExperimentConfig& cfg) {
  return build_prior_map(cfg, build_dataset(cfg));
}

std::vector<ColumnAverage> compute_averages(const std::vector<RunRow>& rows) {
  // Column order: mode ordinal, then perturbation.
  std::vector<std::pair<int, double>> keys;
  for (const auto& row : rows) {
    const std::pair<int, double> key(mode_ordinal(row.mode), row.delta_p);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());

  std::vector<ColumnAverage> averages;
  for (const auto& [mode_ord, delta_p] : keys) {
    ColumnAverage avg;
    avg.mode = static_cast<Mode>(mode_ord);
    avg.delta_p = delta_p;
    for (const auto& row : rows) {
      if (mode_ordinal(row.mode) != mode_ord || row.delta_p != delta_p || !row.ok()) {
        continue;
      }
      avg.length_m += row.length_m;
      avg.ate_rmse_m += row.ate_rmse_m;
      avg.mean_runtime_ms += row.mean_runtime_ms;
      ++avg.count;
    }
    if (avg.count > 0) {
      avg.length_m /= avg.count;
      avg.ate_rmse_m /= avg.count;
      avg.mean_runtime_ms /= avg.count;
    }
    averages.push_back(avg);
  }
  return averages;
}

ResultTable run_matrix(const ExperimentConfig& cfg, const Dataset& dataset,
                       const MarkerMap& prior_map) {
  struct Cell {
    int seq_index;
    Mode mode;
    double delta_p;
    int dp_index;  // -1 for Slam
  };
  std::vector<Cell> cells;
  for (int s = 0; s < static_cast<int>(dataset.eval_sequences.size()); ++s) {
    for (const Mode mode : cfg.modes) {
      if (mode == Mode::Slam) {
        cells.push_back({s, mode, 0.0, -1});
        continue;
      }
      for (int d = 0; d < static_cast<int>(cfg.perturbation_sweep.size()); ++d) {
        cells.push_back({s, mode, cfg.perturbation_sweep[d], d});
      }
    }
  }

  std::vector<RunRow> rows(cells.size());
  std::atomic<std::size_t> next{0};

  const auto worker = [&]() {
    for (std::size_t c = next.fetch_add(1); c < cells.size(); c = next.fetch_add(1)) {
      const Cell& cell = cells[c];
      const SimulatedSequence& seq = dataset.eval_sequences[cell.seq_index];
      RunRow row;
      row.sequence = seq.id;
      row.length_m = seq.ground_truth.path_length();
      row.mode = cell.mode;
      row.delta_p = cell.delta_p;
      try {
        MarkerMap perturbed;
        const MarkerMap* map_used = nullptr;
        if (cell.mode != Mode::Slam) {
          PerturbationConfig pcfg;
          pcfg.delta_p = cell.delta_p;
          pcfg.seed = seed_mix(cfg.master_seed, kPerturbStream,
                               static_cast<std::uint64_t>(seq.id),
                               static_cast<std::uint64_t>(mode_ordinal(cell.mode)),
                               static_cast<std::uint64_t>(cell.dp_index));
          perturbed = perturb(prior_map, pcfg);
          map_used = &perturbed;
        }
        const auto run = run_sequence(seq, cell.mode, map_used, cfg.noise, cfg.solver);
        const double max_dt = 0.5 / cfg.frame_rate_hz;
        row.ate_rmse_m = ate_rmse(run.trajectory, seq.ground_truth, max_dt).rmse;
        row.mean_runtime_ms = runtime_stats(run.reports).mean_ms;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows[c] = row;
    }
  };

  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, cells.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(rows.begin(), rows.end(), [](const RunRow& a, const RunRow& b) {
    if (a.sequence != b.sequence) return a.sequence < b.sequence;
    if (a.mode != b.mode) return mode_ordinal(a.mode) < mode_ordinal(b.mode);
    return a.delta_p < b.delta_p;
  });

  ResultTable table;
  table.rows = std::move(rows);
  table.averages = compute_averages(table.rows);
  return table;
}

ResultTable run_matrix(const ExperimentConfig& cfg) {
  const Dataset dataset = build_dataset(cfg);
  const MarkerMap prior = build_prior_map(cfg, dataset);
  return run_matrix(cfg, dataset, prior);
}

namespace {

std::string column_label(Mode mode, double delta_p) {
  if (mode == Mode::Slam) return to_string(mode);
  char buf[16];
  std::snprintf(buf, sizeof(buf), ":%.2f", delta_p);
  return to_string(mode) + buf;
}

std::string fmt_fixed(double v, int decimals) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// One wide table (sequences x columns) in CSV or aligned-markdown form.
// value_of pulls the rendered quantity out of a row / average.
template <typename RowValue, typename AvgValue>
std::string render_wide(const ResultTable& table, TableFormat format,
                        bool with_length, int decimals, RowValue row_value,
                        AvgValue avg_value) {
  const bool md = format == TableFormat::Markdown;
  std::vector<int> sequences;
  for (const auto& row : table.rows) {
    if (sequences.empty() || sequences.back() != row.sequence) {
      if (std::find(sequences.begin(), sequences.end(), row.sequence) ==
          sequences.end()) {
        sequences.push_back(row.sequence);
      }
    }
  }
  std::sort(sequences.begin(), sequences.end());

  std::vector<std::string> header{"sequence"};
  if (with_length) header.push_back("length_m");
  for (const auto& avg : table.averages) {
    header.push_back(column_label(avg.mode, avg.delta_p));
  }

  std::vector<std::vector<std::string>> body;
  for (const int seq : sequences) {
    std::vector<std::string> line{std::to_string(seq)};
    double length = 0.0;
    std::vector<std::string> values;
    for (const auto& avg : table.averages) {
      std::string value;
      for (const auto& row : table.rows) {
        if (row.sequence != seq || mode_ordinal(row.mode) != mode_ordinal(avg.mode) ||
            row.delta_p != avg.delta_p) {
          continue;
        }
        length = row.length_m;
        value = row.ok() ? (md ? fmt_fixed(row_value(row), decimals)
                               : detail::fmt_g17(row_value(row)))
                         : std::string("error");
        break;
      }
      values.push_back(value);
    }
    if (with_length) {
      line.push_back(md ? fmt_fixed(length, 2) : detail::fmt_g17(length));
    }
    line.insert(line.end(), values.begin(), values.end());
    body.push_back(std::move(line));
  }

  std::vector<std::string> avg_line{"average"};
  if (with_length) {
    double len = 0.0;
    int cnt = 0;
    for (const auto& avg : table.averages) {
      if (avg.count > 0) {
        len += avg.length_m;
        ++cnt;
      }
    }
    const double mean_len = cnt > 0 ? len / cnt : 0.0;
    avg_line.push_back(md ? fmt_fixed(mean_len, 2) : detail::fmt_g17(mean_len));
  }
  for (const auto& avg : table.averages) {
    avg_line.push_back(avg.count > 0
                           ? (md ? fmt_fixed(avg_value(avg), decimals)
                                 : detail::fmt_g17(avg_value(avg)))
                           : std::string());
  }
  body.push_back(std::move(avg_line));

  std::ostringstream out;
  if (!md) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      out << (i ? "," : "") << header[i];
    }
    out << '\n';
    for (const auto& line : body) {
      for (std::size_t i = 0; i < line.size(); ++i) out << (i ? "," : "") << line[i];
      out << '\n';
    }
    return out.str();
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& line : body) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  const auto emit = [&](const std::vector<std::string>& line) {
    out << '|';
    for (std::size_t i = 0; i < line.size(); ++i) {
      out << ' ' << line[i] << std::string(width[i] - line[i].size(), ' ') << " |";
    }
    out << '\n';
  };
  emit(header);
  out << '|';
  for (const std::size_t w : width) out << ' ' << std::string(w, '-') << " |";
  out << '\n';
  for (const auto& line : body) emit(line);
  return out.str();
}

}  // namespace

std::string render_ate_table(const ResultTable& table, TableFormat format) {
  return render_wide(
      table, format, /*with_length=*/true, 4,
      [](const RunRow& r) { return r.ate_rmse_m; },
      [](const ColumnAverage& a) { return a.ate_rmse_m; });
}

std::string render_runtime_table(const ResultTable& table, TableFormat format) {
  return render_wide(
      table, format, /*with_length=*/false, 2,
      [](const RunRow& r) { return r.mean_runtime_ms; },
      [](const ColumnAverage& a) { return a.mean_runtime_ms; });
}

std::string render_long_csv(const ResultTable& table) {
  std::ostringstream out;
  out << "sequence,length_m,mode,delta_p,ate_rmse_m,mean_runtime_ms,error\n";
  const auto emit = [&](const std::string& seq, double length, Mode mode,
                        double delta_p, double ate, double runtime,
                        const std::string& error) {
    out << seq << ',' << detail::fmt_g17(length) << ',' << to_string(mode) << ','
        << fmt_fixed(delta_p, 2) << ',';
    if (error.empty()) {
      out << detail::fmt_g17(ate) << ',' << detail::fmt_g17(runtime) << ",\n";
    } else {
      out << ",," << error << '\n';
    }
  };
  for (const auto& row : table.rows) {
    emit(std::to_string(row.sequence), row.length_m, row.mode, row.delta_p,
         row.ate_rmse_m, row.mean_runtime_ms, row.error);
  }
  for (const auto& avg : table.averages) {
    emit("average", avg.length_m, avg.mode, avg.delta_p, avg.ate_rmse_m,
         avg.mean_runtime_ms, avg.count > 0 ? std::string() : std::string("no data"));
  }
  return out.str();
}

std::string render_tables(const ResultTable& table, TableFormat format) {
  std::string out;
  if (format == TableFormat::Markdown) {
    out += "### Absolute trajectory error [m]\n\n";
    out += render_ate_table(table, format);
    out += "\n### Mean per-frame optimization runtime [ms]\n\n";
    out += render_runtime_table(table, format);
  } else {
    out += render_ate_table(table, format);
    out += "\n";
    out += render_runtime_table(table, format);
  }
  return out;
}

}  // namespace marker_slam
