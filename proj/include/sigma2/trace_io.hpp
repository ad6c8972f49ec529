#pragma once

// Plain-text outputs: continuation traces, key=value run summaries and
// per-quantity plot series.

#include "sigma2/solver.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sigma2 {

using Summary = std::vector<std::pair<std::string, std::string>>;

/// Shortest round-trip decimal form ("%.17g").
[[nodiscard]] std::string format_double(double v);

/// Comma-separated table, one row per accepted record, '#' comment header.
[[nodiscard]] std::string trace_table(const ContinuationTrace& trace);
void write_trace(const ContinuationTrace& trace, const std::filesystem::path& path);

void write_summary(const Summary& summary, const std::filesystem::path& path);
[[nodiscard]] Summary read_summary(const std::filesystem::path& path);

void append_monitor(Summary& summary, const std::string& prefix, const MonitorReport& r);
[[nodiscard]] Summary summarize(const EigenResult& result);

/// Writes residual.csv, sup_hess.csv, max_unn.csv and vol_conf.csv into dir
/// and returns their paths. An empty trace is an error.
std::vector<std::filesystem::path> emit_plot_data(const ContinuationTrace& trace, const std::filesystem::path& dir);

/// eps, Lambda_eps, mean u, iterations, sup_hess, max_unn.
void write_lambda_table(const EigenResult& result, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sigma2
