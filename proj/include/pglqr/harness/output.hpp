#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pglqr/harness/monte_carlo.hpp"

#ifndef PGLQR_GIT_DESCRIBE
#define PGLQR_GIT_DESCRIBE "unknown"
#endif

namespace pglqr {

inline constexpr const char* kTraceHeader = "run_id,iteration,cost,rel_subopt,step_size,grad_norm,status";
inline constexpr const char* kAggregateHeader = "iteration,mean_rel_subopt,min_rel_subopt,max_rel_subopt,runs,diverged_count";

// 17 significant digits round-trip every double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

inline void write_trace_rows(std::ostream& os, const ConvergenceTrace& t) {
  for (const auto& r : t.records)
    os << t.run_id << ',' << r.i << ',' << format_double(r.cost) << ',' << format_double(r.rel_subopt) << ','
       << format_double(r.step) << ',' << format_double(r.grad_norm) << ',' << to_string(r.status) << '\n';
}

inline void write_traces_csv(std::ostream& os, const MonteCarloResult& mc) {
  os << kTraceHeader << '\n';
  for (const auto& run : mc.runs)
    if (run.trace) write_trace_rows(os, *run.trace);
}

struct AggregateRow {
  std::size_t iteration = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
  std::size_t runs = 0;            // runs contributing to the statistics at this index
  std::size_t diverged_count = 0;  // runs that have diverged at or before this index
};

struct TraceRow {
  std::uint64_t run_id = 0;
  std::size_t iteration = 0;
  double rel_subopt = 0.0;
  std::string status;
};

// A diverged run stops contributing to the statistics from its divergence index on and is
// counted in diverged_count for every later index present in any run.
inline std::vector<AggregateRow> aggregate_rows(const std::vector<TraceRow>& rows) {
  std::size_t last = 0;
  bool any = false;
  std::map<std::uint64_t, std::size_t> diverged_at;
  for (const auto& r : rows) {
    last = std::max(last, r.iteration);
    any = true;
    if (r.status == "diverged") {
      auto it = diverged_at.find(r.run_id);
      if (it == diverged_at.end() || r.iteration < it->second) diverged_at[r.run_id] = r.iteration;
    }
  }
  std::vector<AggregateRow> out;
  if (!any) return out;
  out.resize(last + 1);
  std::vector<double> sums(last + 1, 0.0);
  for (std::size_t i = 0; i <= last; ++i) out[i].iteration = i;
  for (const auto& r : rows) {
    auto it = diverged_at.find(r.run_id);
    if (it != diverged_at.end() && r.iteration >= it->second) continue;
    if (!std::isfinite(r.rel_subopt)) continue;
    AggregateRow& a = out[r.iteration];
    sums[r.iteration] += r.rel_subopt;
    a.min = a.runs == 0 ? r.rel_subopt : std::min(a.min, r.rel_subopt);
    a.max = a.runs == 0 ? r.rel_subopt : std::max(a.max, r.rel_subopt);
    ++a.runs;
  }
  for (std::size_t i = 0; i <= last; ++i) {
    if (out[i].runs > 0) out[i].mean = sums[i] / static_cast<double>(out[i].runs);
    for (const auto& [run, at] : diverged_at)
      if (at <= i) ++out[i].diverged_count;
  }
  return out;
}

inline std::vector<TraceRow> trace_rows(const MonteCarloResult& mc) {
  std::vector<TraceRow> rows;
  for (const auto& run : mc.runs) {
    if (!run.trace) continue;
    for (const auto& r : run.trace->records) rows.push_back({run.run_id, r.i, r.rel_subopt, to_string(r.status)});
  }
  return rows;
}

// Reads back a trace CSV written by write_traces_csv.
inline std::vector<TraceRow> read_trace_rows(std::istream& in) {
  std::vector<TraceRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw IoError("trace CSV header mismatch");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw IoError("trace CSV row has " + std::to_string(f.size()) + " fields");
    rows.push_back({std::stoull(f[0]), static_cast<std::size_t>(std::stoull(f[1])), parse_double(f[3]), f[6]});
  }
  return rows;
}

inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << kAggregateHeader << '\n';
  for (const auto& a : rows)
    os << a.iteration << ',' << format_double(a.mean) << ',' << format_double(a.min) << ',' << format_double(a.max)
       << ',' << a.runs << ',' << a.diverged_count << '\n';
}

inline Json manifest_json(const ExperimentConfig& cfg, const MonteCarloResult& mc, std::size_t threads) {
  Json m;
  m["label"] = mc.label;
  m["config"] = cfg.echo;
  m["master_seed"] = mc.master_seed;
  m["repetitions"] = mc.runs.size();
  m["threads"] = threads == 0 ? Json("auto") : Json(threads);
  m["build"] = PGLQR_GIT_DESCRIBE;
  m["optimal_cost"] = mc.optimum.C_star;
  m["wall_seconds"] = mc.wall_seconds;
  Json runs = Json::array();
  for (const auto& run : mc.runs) {
    Json r;
    r["run_id"] = run.run_id;
    if (run.trace) {
      r["terminal_reason"] = to_string(run.trace->reason);
      r["iterations"] = run.trace->records.size();
      r["final_rel_subopt"] = format_double(run.trace->last().rel_subopt);
    }
    if (run.failure) r["failure"] = *run.failure;
    runs.push_back(r);
  }
  m["runs"] = runs;
  return m;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

// Writes <label>_traces.csv, <label>_aggregate.csv and <label>_manifest.json into dir.
inline void write_bundle(const std::filesystem::path& dir, const ExperimentConfig& cfg, const MonteCarloResult& mc,
                         std::size_t threads) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    auto os = open_output(dir / (mc.label + "_traces.csv"));
    write_traces_csv(os, mc);
    if (!os) throw IoError("write failed for traces of " + mc.label);
  }
  {
    auto os = open_output(dir / (mc.label + "_aggregate.csv"));
    write_aggregate_csv(os, aggregate_rows(trace_rows(mc)));
    if (!os) throw IoError("write failed for aggregate of " + mc.label);
  }
  {
    auto os = open_output(dir / (mc.label + "_manifest.json"));
    os << manifest_json(cfg, mc, threads).dump(2) << '\n';
    if (!os) throw IoError("write failed for manifest of " + mc.label);
  }
}

}  // namespace pglqr
