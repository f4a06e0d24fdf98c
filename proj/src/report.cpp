#include "nsdd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nsdd::report {

const char* const kMetricsHeader =
    "mode,step,time,iterations,evaluations,J,grad_norm,err_u1,err_u2,err_p1,err_p2";

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out.push_back(c);
    }
    return out;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

MetricsRow to_row(const std::string& mode, const coupling::TimestepReport& rep) {
    MetricsRow r;
    r.mode = mode;
    r.step = rep.step;
    r.time = rep.time;
    r.iterations = rep.iterations;
    r.evaluations = rep.evaluations;
    r.J = rep.J;
    r.grad_norm = rep.grad_norm;
    r.err_u1 = rep.err_u1;
    r.err_u2 = rep.err_u2;
    r.err_p1 = rep.err_p1;
    r.err_p2 = rep.err_p2;
    return r;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open CSV for writing: " + path);
    os << kMetricsHeader << "\n";
    for (const auto& r : rows) {
        os << r.mode << "," << r.step << "," << fmt(r.time) << "," << r.iterations << ","
           << r.evaluations << "," << fmt(r.J) << "," << fmt(r.grad_norm) << "," << fmt(r.err_u1)
           << "," << fmt(r.err_u2) << "," << fmt(r.err_p1) << "," << fmt(r.err_p2) << "\n";
    }
    if (!os) throw std::runtime_error("CSV write failed: " + path);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open CSV: " + path);
    std::string line;
    if (!std::getline(is, line) || split_csv(line) != split_csv(kMetricsHeader))
        throw std::runtime_error("unexpected CSV header in " + path);
    std::vector<MetricsRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 11) throw std::runtime_error("malformed CSV row in " + path);
        MetricsRow r;
        r.mode = f[0];
        r.step = std::stoi(f[1]);
        r.time = std::stod(f[2]);
        r.iterations = std::stoi(f[3]);
        r.evaluations = std::stoi(f[4]);
        r.J = std::stod(f[5]);
        r.grad_norm = std::stod(f[6]);
        r.err_u1 = std::stod(f[7]);
        r.err_u2 = std::stod(f[8]);
        r.err_p1 = std::stod(f[9]);
        r.err_p2 = std::stod(f[10]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_trace_csv(const std::string& path, const std::vector<double>& J_history) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open CSV for writing: " + path);
    os << "iter,J\n";
    for (size_t i = 0; i < J_history.size(); ++i) os << i << "," << fmt(J_history[i]) << "\n";
    if (!os) throw std::runtime_error("CSV write failed: " + path);
}

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel, bool log_y,
                     const std::vector<Series>& series) {
    constexpr double W = 760, H = 440;
    constexpr double L = 78, R = 580, T = 46, B = 388;  // plot box

    double xmin = 0, xmax = 1, min_pos = 0;
    bool have = false;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            if (!have) {
                xmin = xmax = p[0];
                have = true;
            }
            xmin = std::min(xmin, p[0]);
            xmax = std::max(xmax, p[0]);
            if (p[1] > 0 && (min_pos == 0 || p[1] < min_pos)) min_pos = p[1];
        }
    if (xmax <= xmin) xmax = xmin + 1;
    if (min_pos == 0) min_pos = 1e-16;
    const double clamp = min_pos / 2;

    auto yval = [&](double y) {
        if (!log_y) return y;
        return std::log10(std::max(y, clamp));
    };
    double ymin = 0, ymax = 1;
    have = false;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            const double y = yval(p[1]);
            if (!have) {
                ymin = ymax = y;
                have = true;
            }
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (ymax <= ymin) {
        ymax = ymin + 1;
        ymin -= 1;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (R - L); };
    auto py = [&](double y) { return B - (yval(y) - ymin) / (ymax - ymin) * (B - T); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << (L + R) / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(title) << "</text>\n";

    // ticks + grid
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double x = xmin + (xmax - xmin) * i / 4.0;
        svg << "<line x1=\"" << px(x) << "\" y1=\"" << T << "\" x2=\"" << px(x) << "\" y2=\"" << B
            << "\" stroke=\"#e0e0e0\"/>\n";
        svg << "<text x=\"" << px(x) << "\" y=\"" << B + 16 << "\" text-anchor=\"middle\">"
            << fmt_tick(x) << "</text>\n";
    }
    if (log_y) {
        int d0 = static_cast<int>(std::floor(ymin));
        int d1 = static_cast<int>(std::ceil(ymax));
        int step = std::max(1, (d1 - d0 + 8) / 9);
        for (int d = d0; d <= d1; d += step) {
            if (d < ymin || d > ymax) continue;
            const double y = B - (d - ymin) / (ymax - ymin) * (B - T);
            svg << "<line x1=\"" << L << "\" y1=\"" << y << "\" x2=\"" << R << "\" y2=\"" << y
                << "\" stroke=\"#e0e0e0\"/>\n";
            svg << "<text x=\"" << L - 6 << "\" y=\"" << y + 4
                << "\" text-anchor=\"end\">1e" << d << "</text>\n";
        }
    } else {
        for (int i = 0; i <= 4; ++i) {
            const double v = ymin + (ymax - ymin) * i / 4.0;
            const double y = B - (v - ymin) / (ymax - ymin) * (B - T);
            svg << "<line x1=\"" << L << "\" y1=\"" << y << "\" x2=\"" << R << "\" y2=\"" << y
                << "\" stroke=\"#e0e0e0\"/>\n";
            svg << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
                << fmt_tick(v) << "</text>\n";
        }
    }
    svg << "</g>\n";
    svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << R - L << "\" height=\""
        << B - T << "\" fill=\"none\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << (L + R) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << xml_escape(xlabel) << "</text>\n";
    svg << "<text x=\"20\" y=\"" << (T + B) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 20 " << (T + B) / 2 << ")\">" << xml_escape(ylabel)
        << "</text>\n";

    for (size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const std::string color =
            s.color.empty() ? kPalette[i % (sizeof kPalette / sizeof *kPalette)] : s.color;
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
        if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
        svg << " points=\"";
        for (const auto& p : s.points) svg << px(p[0]) << "," << py(p[1]) << " ";
        svg << "\"/>\n";
        const double ly = T + 8 + 18.0 * static_cast<double>(i);
        svg << "<line x1=\"" << R + 10 << "\" y1=\"" << ly << "\" x2=\"" << R + 34 << "\" y2=\""
            << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.8\""
            << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        svg << "<text x=\"" << R + 40 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.label)
            << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open SVG for writing: " + path);
    os << svg.str();
    if (!os) throw std::runtime_error("SVG write failed: " + path);
}

void write_comparison_plots(const std::string& out_dir, const std::string& csv_path,
                            const std::vector<std::string>& stagnated_modes) {
    const std::vector<MetricsRow> rows = read_metrics_csv(csv_path);
    std::vector<std::string> modes;
    for (const auto& r : rows)
        if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);

    auto flagged = [&](const std::string& m) {
        const bool s =
            std::find(stagnated_modes.begin(), stagnated_modes.end(), m) != stagnated_modes.end();
        return s ? m + " (stagnated)" : m;
    };
    auto mode_color = [&](const std::string& m) {
        const size_t i = static_cast<size_t>(
            std::find(modes.begin(), modes.end(), m) - modes.begin());
        return std::string(kPalette[i % (sizeof kPalette / sizeof *kPalette)]);
    };
    auto series_of = [&](double MetricsRow::*field) {
        std::vector<Series> out;
        for (const auto& m : modes) {
            Series s;
            s.label = flagged(m);
            for (const auto& r : rows)
                if (r.mode == m) s.points.push_back({r.time, r.*field});
            out.push_back(std::move(s));
        }
        return out;
    };

    {
        std::vector<Series> its;
        for (const auto& m : modes) {
            Series s;
            s.label = flagged(m);
            for (const auto& r : rows)
                if (r.mode == m) s.points.push_back({r.time, static_cast<double>(r.iterations)});
            its.push_back(std::move(s));
        }
        write_line_plot(out_dir + "/iterations.svg", "Optimiser iterations per step", "time",
                        "iterations", false, its);
    }
    write_line_plot(out_dir + "/functional.svg", "Optimal functional value", "time", "J", true,
                    series_of(&MetricsRow::J));
    {
        std::vector<Series> v;
        for (const auto& m : modes) {
            Series s1, s2;
            s1.label = flagged(m) + " u1";
            s2.label = flagged(m) + " u2";
            s2.dashed = true;
            s1.color = s2.color = mode_color(m);
            for (const auto& r : rows)
                if (r.mode == m) {
                    s1.points.push_back({r.time, r.err_u1});
                    s2.points.push_back({r.time, r.err_u2});
                }
            v.push_back(std::move(s1));
            v.push_back(std::move(s2));
        }
        write_line_plot(out_dir + "/errors_velocity.svg",
                        "Relative velocity error vs monolithic", "time", "relative L2 error",
                        true, v);
    }
    {
        std::vector<Series> v;
        for (const auto& m : modes) {
            Series s1, s2;
            s1.label = flagged(m) + " p1";
            s2.label = flagged(m) + " p2";
            s2.dashed = true;
            s1.color = s2.color = mode_color(m);
            for (const auto& r : rows)
                if (r.mode == m) {
                    s1.points.push_back({r.time, r.err_p1});
                    s2.points.push_back({r.time, r.err_p2});
                }
            v.push_back(std::move(s1));
            v.push_back(std::move(s2));
        }
        write_line_plot(out_dir + "/errors_pressure.svg",
                        "Relative pressure error vs monolithic", "time", "relative L2 error",
                        true, v);
    }
}

}  // namespace nsdd::report
