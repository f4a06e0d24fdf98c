#pragma once

#include "nsdd/coupling.hpp"

#include <array>
#include <string>
#include <vector>

namespace nsdd::report {

/// One metrics CSV row; the header is fixed:
/// mode,step,time,iterations,evaluations,J,grad_norm,err_u1,err_u2,err_p1,err_p2
struct MetricsRow {
    std::string mode;
    int step = 0;
    double time = 0.0;
    int iterations = 0;
    int evaluations = 0;
    double J = 0.0;
    double grad_norm = 0.0;
    double err_u1 = 0.0, err_u2 = 0.0, err_p1 = 0.0, err_p2 = 0.0;
};

extern const char* const kMetricsHeader;

MetricsRow to_row(const std::string& mode, const coupling::TimestepReport& rep);

/// Byte-deterministic CSV (numbers via %.12g). Throws std::runtime_error on
/// I/O failure.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

/// Per-step optimiser trace (accepted-iterate J values): columns iter,J.
void write_trace_csv(const std::string& path, const std::vector<double>& J_history);

struct Series {
    std::string label;
    std::vector<std::array<double, 2>> points;  // (x, y)
    bool dashed = false;
    std::string color;  // CSS color; empty = palette by series index
};

/// Minimal self-contained SVG line plot (log10 y-axis optional; non-positive
/// values are clamped just below the smallest positive datum).
void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel, bool log_y,
                     const std::vector<Series>& series);

/// The four comparison panels (iterations, J, velocity errors, pressure
/// errors vs time), built purely from rows read back out of the CSV so the
/// plots can never disagree with it. stagnated_modes are flagged in legends.
void write_comparison_plots(const std::string& out_dir, const std::string& csv_path,
                            const std::vector<std::string>& stagnated_modes);

}  // namespace nsdd::report
