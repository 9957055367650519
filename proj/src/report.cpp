#include "trafficast/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "trafficast/error.hpp"

namespace trafficast {
namespace {

using Json = nlohmann::ordered_json;

/// Shortest text that reads back as the same double.
std::string number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

void append_row(std::vector<ReportRow>& out, const std::string& label, const std::string& algorithm,
                const GroupMetrics& g) {
    out.push_back({label, g.group + 1, algorithm, g.train_mre, g.test_mre, g.gap, g.mare, g.mire});
}

}  // namespace

double ModelCount::reduction() const {
    if (segments == 0) {
        throw DataError("model count needs at least one segment");
    }
    return static_cast<double>(segments - groups) / static_cast<double>(segments);
}

std::vector<ReportRow> report_rows(std::span<const HorizonReport> horizons, std::int64_t step) {
    std::vector<ReportRow> out;
    for (const auto& h : horizons) {
        const std::string label = horizon_label(h.horizon, step);
        for (std::size_t g = 0; g < h.gm.groups.size(); ++g) {
            append_row(out, label, "GM", h.gm.groups[g]);
            if (h.im && g < h.im->groups.size()) {
                append_row(out, label, "IM", h.im->groups[g]);
            }
        }
    }
    return out;
}

std::string report_csv(std::span<const ReportRow> rows) {
    if (rows.empty()) {
        throw DataError("report has no rows");
    }
    std::string out;
    for (std::size_t i = 0; i < kReportColumns.size(); ++i) {
        out += (i ? "," : "") + kReportColumns[i];
    }
    out += "\n";
    for (const auto& r : rows) {
        out += r.horizon + "," + std::to_string(r.group) + "," + r.algorithm + "," + number(r.train_mre) + "," +
               number(r.test_mre) + "," + number(r.gap) + "," + number(r.mare) + "," + number(r.mire) + "\n";
    }
    return out;
}

std::string report_json(std::span<const ReportRow> rows, const ModelCount& models) {
    if (rows.empty()) {
        throw DataError("report has no rows");
    }
    Json table = Json::array();
    for (const auto& r : rows) {
        Json row;
        row[kReportColumns[0]] = r.horizon;
        row[kReportColumns[1]] = r.group;
        row[kReportColumns[2]] = r.algorithm;
        row[kReportColumns[3]] = r.train_mre;
        row[kReportColumns[4]] = r.test_mre;
        row[kReportColumns[5]] = r.gap;
        row[kReportColumns[6]] = r.mare;
        row[kReportColumns[7]] = r.mire;
        table.push_back(row);
    }
    Json doc;
    doc["columns"] = kReportColumns;
    doc["rows"] = table;
    doc["models"] = {{"segments", models.segments},
                     {"group_models", models.groups},
                     {"individual_models", models.segments},
                     {"reduction", models.reduction()}};
    return doc.dump(2) + "\n";
}

std::string mre_bar_svg(std::span<const ReportRow> rows, const std::string& horizon) {
    std::vector<const ReportRow*> chosen;
    for (const auto& r : rows) {
        if (r.horizon == horizon) {
            chosen.push_back(&r);
        }
    }
    if (chosen.empty()) {
        throw DataError("no report rows for horizon " + horizon);
    }
    double top = 0.0;
    for (const auto* r : chosen) {
        top = std::max({top, r->train_mre, r->test_mre, std::abs(r->gap)});
    }
    top = top > 0.0 ? top * 1.15 : 1.0;
    const double bar = 14.0;
    const double slot = bar * 3 + 16.0;
    const double left = 60.0;
    const double plot_h = 240.0;
    const double width = left + slot * static_cast<double>(chosen.size()) + 140.0;
    const double height = plot_h + 90.0;
    const double base = 30.0 + plot_h;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">MRE by group, " << escape_xml(horizon)
      << " horizon (%)</text>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << base << "\" x2=\"" << width - 130 << "\" y2=\"" << base
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"30\" x2=\"" << left << "\" y2=\"" << base << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = top * t / 4.0;
        const double y = base - plot_h * t / 4.0;
        s << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y + 4, 1) << "\" text-anchor=\"end\">"
          << fixed(100.0 * v, 1) << "</text>\n";
    }
    const char* names[] = {"train MRE", "test MRE", "gap"};
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const auto* r = chosen[i];
        const double values[] = {r->train_mre, r->test_mre, std::max(0.0, r->gap)};
        const double x0 = left + 8.0 + slot * static_cast<double>(i);
        for (int b = 0; b < 3; ++b) {
            const double h = plot_h * values[b] / top;
            s << "<rect x=\"" << fixed(x0 + bar * b, 1) << "\" y=\"" << fixed(base - h, 2) << "\" width=\"" << bar
              << "\" height=\"" << fixed(h, 2) << "\" fill=\"" << kPalette[b] << "\"/>\n";
        }
        s << "<text x=\"" << fixed(x0 + bar * 1.5, 1) << "\" y=\"" << base + 16 << "\" text-anchor=\"middle\">"
          << escape_xml(r->algorithm) << " " << r->group << "</text>\n";
    }
    for (int b = 0; b < 3; ++b) {
        const double y = 40.0 + 18.0 * b;
        s << "<rect x=\"" << width - 120 << "\" y=\"" << y - 10 << "\" width=\"10\" height=\"10\" fill=\""
          << kPalette[b] << "\"/><text x=\"" << width - 105 << "\" y=\"" << y << "\">" << names[b] << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string line_svg(std::span<const LineSeries> lines, const std::string& title, const std::string& x_label,
                     const std::string& y_label) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t n = 0;
    for (const auto& l : lines) {
        for (double v : l.values) {
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        n = std::max(n, l.values.size());
    }
    if (n == 0 || !std::isfinite(lo)) {
        throw DataError("line plot needs at least one finite value");
    }
    if (hi <= lo) {
        hi = lo + 1.0;
    }
    const double left = 60.0;
    const double top = 30.0;
    const double w = 640.0;
    const double h = 260.0;
    const auto px = [&](std::size_t i) { return left + (n > 1 ? w * static_cast<double>(i) / (n - 1) : w / 2); };
    const auto py = [&](double v) { return top + h * (hi - v) / (hi - lo); };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(left + w + 150, 0) << "\" height=\""
      << fixed(top + h + 50, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << escape_xml(title) << "</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<text x=\"" << left + w / 2 << "\" y=\"" << top + h + 34 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n";
    s << "<text x=\"14\" y=\"" << top + h / 2 << "\" transform=\"rotate(-90 14 " << top + h / 2
      << ")\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        s << "<text x=\"" << left - 6 << "\" y=\"" << fixed(py(v) + 4, 1) << "\" text-anchor=\"end\">"
          << fixed(v, 2) << "</text>\n";
    }
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto& l = lines[k];
        s << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << kPalette[k % 6] << "\" points=\"";
        for (std::size_t i = 0; i < l.values.size(); ++i) {
            if (std::isfinite(l.values[i])) {
                s << fixed(px(i), 2) << "," << fixed(py(l.values[i]), 2) << " ";
            }
        }
        s << "\"/>\n";
        const double y = top + 10.0 + 18.0 * static_cast<double>(k);
        s << "<rect x=\"" << left + w + 12 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
          << kPalette[k % 6] << "\"/><text x=\"" << left + w + 27 << "\" y=\"" << y << "\">"
          << escape_xml(l.name) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void emit_report(std::span<const HorizonReport> horizons, const ModelCount& models,
                 const std::filesystem::path& dir, std::int64_t step) {
    if (horizons.empty()) {
        throw DataError("nothing to report");
    }
    const auto rows = report_rows(horizons, step);
    write_text(dir / "report.json", report_json(rows, models));
    write_text(dir / "report.csv", report_csv(rows));
    for (const auto& h : horizons) {
        const std::string label = horizon_label(h.horizon, step);
        write_text(dir / ("mre_" + label + ".svg"), mre_bar_svg(rows, label));
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace trafficast
