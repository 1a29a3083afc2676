#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saddleopt/optimizers.hpp"

namespace saddleopt {

// ---------------------------------------------------------------------------
// Experiment front end: JSON configs, seeded execution, CSV/JSONL traces,
// summaries and SVG plots.
// ---------------------------------------------------------------------------

/// Raised for malformed or inconsistent configuration (exit code 1); every
/// message is qualified with the config path that failed.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string problem_name;
  ProblemSpec problem;
  OptimizerKind optimizer = OptimizerKind::AmsgradEg;
  ScheduleSpec schedules;
  double delta = 1e-8;
  NoiseModel noise;
  SaddleVector start;
  long iterations = 1;
  std::vector<std::uint64_t> seeds;
  bool record_trajectory = false;
  ProbeReference probe;
  std::string output_dir = "out";
  long trace_every = 1;

  std::string canonical;  // normalized JSON with all defaults applied
  std::string config_hash;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

enum class TraceFormat { Csv, Jsonl };

// Writes the trace plus a `<path>.meta.json` sidecar (config hash, seed,
// library version). CSV prints 17 significant digits so values round-trip
// bit-exactly; JSONL uses the same field names.
void write_trace(const std::vector<TraceRow>& rows, const std::string& path,
                 TraceFormat format, const std::string& config_hash = "",
                 std::uint64_t seed = 0);

std::vector<TraceRow> read_trace_csv(const std::string& path);
std::vector<TraceRow> read_trace_jsonl(const std::string& path);

enum class PlotKind { GradNorms, Mvi, Rate };

// Standalone SVG figures: gradient-norm curves (log y), the three MVI probes
// with a zero line, or avg ||V||^2 against N on log-log axes with the fitted
// slope annotated.
void emit_plot(const std::vector<std::vector<TraceRow>>& traces, PlotKind kind,
               const std::string& path);

struct SeedOutcome {
  std::uint64_t seed = 0;
  long selected_index = 0;
  TraceRow final_row;
  double final_point_norm = 0.0;    // ||z_N||
  double final_point_norm_v = 0.0;  // ||V(z_N)||
  double final_point_norm_vx = 0.0;
  double max_norm_seen = 0.0;
  double momentum_max_norm = 0.0;
  double avg_sq_norm = 0.0;    // (1/N) sum ||V(z_t)||^2
  double avg_sq_norm_x = 0.0;
  std::string bound_audit_status;
  std::string trace_path;
};

struct Aggregate {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ExecuteSummary {
  std::vector<SeedOutcome> per_seed;
  Aggregate final_norm_v;
  Aggregate final_norm_vx;
  Aggregate final_avg_sq_norm;
  Aggregate final_point_norm;
  std::string summary_path;
};

struct ExecuteOptions {
  std::string out_override;  // empty keeps the config's output dir
  TraceFormat format = TraceFormat::Csv;
  bool write_files = true;
};

// One run per seed (parallel across seeds, capped by SADDLEOPT_MAX_WORKERS),
// per-seed trace files and a summary.json. Invariant-audit failures raise
// AuditError.
ExecuteSummary execute(const RunConfig& cfg, const ExecuteOptions& options = {});

struct SweepPoint {
  long iterations = 0;
  double avg_sq_norm = 0.0;    // mean over seeds
  double avg_sq_norm_x = 0.0;
  std::string trace_path;
};

struct SweepSummary {
  std::vector<SweepPoint> points;
  RateFit fit;    // log avg ||V||^2 against log N
  RateFit fit_x;  // same for the min block
  std::string summary_path;
};

SweepSummary sweep(const RunConfig& cfg, const std::vector<long>& iteration_counts,
                   const ExecuteOptions& options = {});

std::uint64_t fnv1a64(const std::string& text);

}  // namespace saddleopt
