#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "resilience/errors.hpp"
#include "resilience/resilience.hpp"
#include "resilience/stl.hpp"

namespace resilience {

namespace detail {

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

}  // namespace detail

// ---- CSV signals: header t,x1,...,xn ----

inline void write_signal_csv(std::ostream& out, const Signal& sig) {
    out << "t";
    for (std::size_t i = 1; i <= sig.state_dim(); ++i) out << ",x" << i;
    out << "\n";
    for (std::size_t k = 0; k < sig.size(); ++k) {
        out << detail::format_full(sig.time(k));
        for (double v : sig.samples[k]) out << "," << detail::format_full(v);
        out << "\n";
    }
}

inline void write_signal_csv(const std::string& path, const Signal& sig) {
    std::ofstream out(path);
    if (!out) throw CsvFormatError("cannot open '" + path + "' for writing");
    write_signal_csv(out, sig);
}

inline Signal read_signal_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CsvFormatError("empty CSV");
    if (line.rfind("t", 0) != 0) throw CsvFormatError("CSV header must start with 't'");

    Signal sig;
    std::vector<double> times;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw CsvFormatError("malformed CSV cell '" + cell + "'");
            }
        }
        if (values.size() < 2) throw CsvFormatError("CSV row needs a time and one state column");
        if (!sig.samples.empty() && values.size() - 1 != sig.state_dim()) {
            throw CsvFormatError("inconsistent CSV column count");
        }
        times.push_back(values.front());
        sig.samples.emplace_back(values.begin() + 1, values.end());
    }
    if (sig.samples.size() < 2) throw CsvFormatError("CSV needs at least two rows");
    sig.t0 = times.front();
    sig.dt = times[1] - times[0];
    if (sig.dt <= 0.0) throw CsvFormatError("CSV time column must increase");
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double expected = sig.t0 + sig.dt * static_cast<double>(k);
        if (std::abs(times[k] - expected) > 1e-6 * std::max(1.0, std::abs(expected))) {
            throw CsvFormatError("CSV time grid is not uniform");
        }
    }
    return sig;
}

inline Signal read_signal_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvFormatError("cannot open '" + path + "'");
    return read_signal_csv(in);
}

// ---- certificate / report JSON ----

inline nlohmann::json certificate_to_json(const ResilienceCertificate& c) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& step : c.trace) {
        trace.push_back({{"eps", step.eps}, {"certified", step.certified}});
    }
    return nlohmann::json{{"eps_star", c.eps_star},
                          {"eta_star", c.eta_star},
                          {"l_omega", c.l_omega},
                          {"delta", c.delta},
                          {"samples_used", c.samples_used},
                          {"method", to_string(c.method)},
                          {"trace", std::move(trace)},
                          {"status", to_string(c.status)},
                          {"rho_nominal", c.rho_nominal},
                          {"eps_star_linear", c.eps_star_linear},
                          {"delta_bar", c.delta_bar},
                          {"warnings", c.warnings}};
}

inline nlohmann::json report_to_json(const ViolationReport& r) {
    return nlohmann::json{{"trials", r.trials},
                          {"violations", r.violations},
                          {"worst_robustness", r.worst_robustness},
                          {"worst_seed", r.worst_seed},
                          {"eps", r.eps},
                          {"disturbance_kinds", r.kinds}};
}

// ---- SVG plots (plain SVG 1.1, one polyline per curve) ----

struct SvgCurve {
    std::vector<double> x;
    std::vector<double> y;
    std::string color;
    double width = 1.0;
};

struct SvgPanel {
    std::string title;
    std::vector<SvgCurve> curves;
    std::vector<double> hlines;  // horizontal guide lines (e.g. set boundaries)
};

namespace detail {

inline std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

/// Render stacked panels sharing the x axis. Deterministic bytes for
/// identical inputs.
inline std::string render_svg(const std::vector<SvgPanel>& panels) {
    constexpr double kWidth = 720.0;
    constexpr double kPanelHeight = 240.0;
    constexpr double kMargin = 48.0;

    const double total_height = kPanelHeight * static_cast<double>(panels.size());
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
        << "\" height=\"" << total_height << "\">\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const SvgPanel& panel = panels[p];
        const double top = kPanelHeight * static_cast<double>(p) + 24.0;
        const double bottom = kPanelHeight * static_cast<double>(p + 1) - 24.0;
        const double left = kMargin;
        const double right = kWidth - 16.0;

        double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
        bool have = false;
        for (const auto& c : panel.curves) {
            for (std::size_t i = 0; i < c.x.size(); ++i) {
                if (!have) {
                    x_min = x_max = c.x[i];
                    y_min = y_max = c.y[i];
                    have = true;
                } else {
                    x_min = std::min(x_min, c.x[i]);
                    x_max = std::max(x_max, c.x[i]);
                    y_min = std::min(y_min, c.y[i]);
                    y_max = std::max(y_max, c.y[i]);
                }
            }
        }
        for (double h : panel.hlines) {
            y_min = std::min(y_min, h);
            y_max = std::max(y_max, h);
        }
        if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
        if (y_max - y_min < 1e-12) y_max = y_min + 1.0;
        const double y_pad = 0.05 * (y_max - y_min);
        y_min -= y_pad;
        y_max += y_pad;

        auto map_x = [&](double v) { return left + (v - x_min) / (x_max - x_min) * (right - left); };
        auto map_y = [&](double v) { return bottom - (v - y_min) / (y_max - y_min) * (bottom - top); };

        out << "<text x=\"" << left << "\" y=\"" << (top - 8.0)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << panel.title << "</text>\n";
        out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << (right - left)
            << "\" height=\"" << (bottom - top) << "\" fill=\"none\" stroke=\"#888\"/>\n";
        out << "<text x=\"" << (left - 4.0) << "\" y=\"" << bottom
            << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
            << detail::format_coord(y_min + y_pad) << "</text>\n";
        out << "<text x=\"" << (left - 4.0) << "\" y=\"" << (top + 10.0)
            << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
            << detail::format_coord(y_max - y_pad) << "</text>\n";

        for (double h : panel.hlines) {
            out << "<line x1=\"" << left << "\" y1=\"" << detail::format_coord(map_y(h))
                << "\" x2=\"" << right << "\" y2=\"" << detail::format_coord(map_y(h))
                << "\" stroke=\"#2a2\" stroke-dasharray=\"4,3\"/>\n";
        }
        for (const auto& c : panel.curves) {
            out << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\""
                << c.width << "\" points=\"";
            for (std::size_t i = 0; i < c.x.size(); ++i) {
                if (i) out << " ";
                out << detail::format_coord(map_x(c.x[i])) << ","
                    << detail::format_coord(map_y(c.y[i]));
            }
            out << "\"/>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << content;
}

}  // namespace resilience
