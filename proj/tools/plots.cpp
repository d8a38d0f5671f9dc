#include "plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "osca/errors.hpp"

namespace osca::cli {

namespace {

constexpr double kWidth = 640, kHeight = 400, kMargin = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

class Svg {
public:
    Svg() {
        out_ << std::fixed << std::setprecision(2);
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
        out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    }
    void text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 11) {
        out_ << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor << "\" font-size=\"" << size
             << "\">" << escape(s) << "</text>\n";
    }
    void line(double x1, double y1, double x2, double y2, const char* stroke = "black") {
        out_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2 << "\" stroke=\""
             << stroke << "\"/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill) {
        out_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h << "\" fill=\""
             << fill << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke) {
        out_ << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << stroke << "\" points=\"";
        for (auto [x, y] : pts) out_ << x << "," << y << " ";
        out_ << "\"/>\n";
    }
    void save(const std::filesystem::path& path) {
        out_ << "</svg>\n";
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw IoError("cannot write " + path.string());
        f << out_.str();
    }

private:
    std::ostringstream out_;
};

std::string short_number(double v) {
    std::ostringstream o;
    o << std::setprecision(3) << v;
    return o.str();
}

void axes(Svg& svg, double x0, double x1, double y0, double y1, const std::string& title) {
    svg.text(kWidth / 2, 24, title, "middle", 14);
    svg.line(kMargin, kHeight - kMargin, kWidth - kMargin, kHeight - kMargin);
    svg.line(kMargin, kMargin, kMargin, kHeight - kMargin);
    for (int i = 0; i <= 4; ++i) {
        const double f = i / 4.0;
        const double py = kHeight - kMargin - f * (kHeight - 2 * kMargin);
        svg.text(kMargin - 6, py + 4, short_number(y0 + f * (y1 - y0)), "end");
        const double px = kMargin + f * (kWidth - 2 * kMargin);
        if (x1 > x0) svg.text(px, kHeight - kMargin + 16, short_number(x0 + f * (x1 - x0)));
    }
}

std::string heat_colour(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(255 - 224 * t), g = static_cast<int>(255 - 136 * t), b = static_cast<int>(255 - 75 * t);
    std::ostringstream o;
    o << "rgb(" << r << "," << g << "," << b << ")";
    return o.str();
}

}  // namespace

int CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError("csv has no column '" + name + "'");
    return static_cast<int>(it - header.begin());
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
    const auto c = static_cast<std::size_t>(column(name));
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(c < r.size() && !r[c].empty() ? std::stod(r[c]) : std::nan(""));
    return out;
}

std::vector<std::string> CsvTable::strings(const std::string& name) const {
    const auto c = static_cast<std::size_t>(column(name));
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(c < r.size() ? r[c] : "");
    return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (std::getline(in, line)) t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (!line.empty()) t.rows.push_back(split_csv_line(line));
    }
    return t;
}

void plot_lines(const std::filesystem::path& csv, const std::string& x_column, const std::vector<std::string>& y_columns,
                const std::string& title, const std::filesystem::path& svg_path) {
    const CsvTable t = read_csv(csv);
    const auto xs = t.numbers(x_column);
    std::vector<std::vector<double>> ys;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& c : y_columns) {
        ys.push_back(t.numbers(c));
        for (double v : ys.back()) {
            if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
        }
    }
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi == lo) hi = lo + 1;
    const double x0 = xs.empty() ? 0 : *std::min_element(xs.begin(), xs.end());
    double x1 = xs.empty() ? 1 : *std::max_element(xs.begin(), xs.end());
    if (x1 == x0) x1 = x0 + 1;

    Svg svg;
    axes(svg, x0, x1, lo, hi, title);
    svg.text(kWidth / 2, kHeight - 20, x_column);
    for (std::size_t s = 0; s < ys.size(); ++s) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(ys[s][i])) continue;
            pts.emplace_back(kMargin + (xs[i] - x0) / (x1 - x0) * (kWidth - 2 * kMargin),
                             kHeight - kMargin - (ys[s][i] - lo) / (hi - lo) * (kHeight - 2 * kMargin));
        }
        const char* colour = kPalette[s % std::size(kPalette)];
        svg.polyline(pts, colour);
        svg.rect(kWidth - kMargin + 4, kMargin + 16.0 * static_cast<double>(s), 10, 10, colour);
        svg.text(kWidth - kMargin + 18, kMargin + 9 + 16.0 * static_cast<double>(s), y_columns[s], "start", 9);
    }
    svg.save(svg_path);
}

void plot_heatmap(const std::filesystem::path& csv, const std::string& title, const std::filesystem::path& svg_path) {
    const CsvTable t = read_csv(csv);
    const std::size_t nr = t.rows.size();
    const std::size_t nc = t.header.size() > 0 ? t.header.size() - 1 : 0;
    double hi = 0;
    for (const auto& r : t.rows) {
        for (std::size_t c = 1; c < r.size(); ++c) {
            if (!r[c].empty()) hi = std::max(hi, std::stod(r[c]));
        }
    }
    if (hi <= 0) hi = 1;
    const double left = 90, top = 50;
    const double cw = nc ? (kWidth - left - 20) / static_cast<double>(nc) : 0;
    const double ch = nr ? (kHeight - top - 40) / static_cast<double>(nr) : 0;

    Svg svg;
    svg.text(kWidth / 2, 24, title, "middle", 14);
    for (std::size_t c = 0; c < nc; ++c) {
        svg.text(left + (static_cast<double>(c) + 0.5) * cw, top - 6, t.header[c + 1], "middle", 8);
    }
    for (std::size_t r = 0; r < nr; ++r) {
        const double y = top + static_cast<double>(r) * ch;
        svg.text(left - 4, y + ch / 2 + 3, t.rows[r].empty() ? "" : t.rows[r][0], "end", 9);
        for (std::size_t c = 0; c < nc; ++c) {
            const std::string& cell = c + 1 < t.rows[r].size() ? t.rows[r][c + 1] : "";
            const double v = cell.empty() ? 0 : std::stod(cell);
            svg.rect(left + static_cast<double>(c) * cw, y, cw - 1, ch - 1, heat_colour(v / hi));
            if (!cell.empty()) svg.text(left + (static_cast<double>(c) + 0.5) * cw, y + ch / 2 + 3, short_number(v), "middle", 8);
        }
    }
    svg.save(svg_path);
}

void plot_bars(const std::filesystem::path& csv, const std::string& label_column, const std::string& value_column,
               const std::string& title, const std::filesystem::path& svg_path) {
    const CsvTable t = read_csv(csv);
    const auto labels = t.strings(label_column);
    const auto values = t.numbers(value_column);
    double hi = 0;
    for (double v : values) {
        if (std::isfinite(v)) hi = std::max(hi, v);
    }
    if (hi <= 0) hi = 1;

    Svg svg;
    axes(svg, 0, 0, 0, hi, title);
    const double slot = values.empty() ? 0 : (kWidth - 2 * kMargin) / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = std::isfinite(values[i]) ? values[i] : 0;
        const double h = v / hi * (kHeight - 2 * kMargin);
        const double x = kMargin + static_cast<double>(i) * slot;
        svg.rect(x + slot * 0.1, kHeight - kMargin - h, slot * 0.8, h, kPalette[0]);
        svg.text(x + slot / 2, kHeight - kMargin + 14, labels[i], "middle", 8);
    }
    svg.save(svg_path);
}

}  // namespace osca::cli
