#include "ribe/plot.hpp"

#include "ribe/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace ribe {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick_label(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

struct Series {
    std::map<double, std::pair<double, std::size_t>> y;    // x -> (sum, count)
    std::map<double, std::pair<double, std::size_t>> band; // x -> (sum, count)
};

} // namespace

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::InvalidArgument, "CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty CSV");
    table.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != table.header.size()) throw Error(ErrorCode::Io, "ragged CSV row: " + line);
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_svg_plot(std::ostream& out, const CsvTable& table, const PlotOptions& o) {
    const std::size_t xc = table.column(o.x), yc = table.column(o.y);
    const std::size_t gc = o.group.empty() ? table.header.size() : table.column(o.group);
    const std::size_t bc = o.band.empty() ? table.header.size() : table.column(o.band);

    std::vector<std::string> order;
    std::map<std::string, Series> series;
    for (const auto& row : table.rows) {
        const std::string key = gc < row.size() ? row[gc] : o.y;
        const double x = std::stod(row[xc]), y = std::stod(row[yc]);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if ((o.log_x && x <= 0.0) || (o.log_y && y <= 0.0)) continue;
        if (!series.count(key)) order.push_back(key);
        auto& s = series[key];
        s.y[x].first += y;
        ++s.y[x].second;
        if (bc < row.size()) {
            const double b = std::stod(row[bc]);
            if (std::isfinite(b)) {
                s.band[x].first += b;
                ++s.band[x].second;
            }
        }
    }

    auto tx = [&](double x) { return o.log_x ? std::log10(x) : x; };
    auto ty = [&](double y) { return o.log_y ? std::log10(std::max(y, 1e-300)) : y; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& [key, s] : series)
        for (const auto& [x, acc] : s.y) {
            const double y = acc.first / static_cast<double>(acc.second);
            double b = 0.0;
            if (auto it = s.band.find(x); it != s.band.end())
                b = it->second.first / static_cast<double>(it->second.second);
            x0 = std::min(x0, tx(x));
            x1 = std::max(x1, tx(x));
            y0 = std::min(y0, ty(o.log_y ? std::max(y - b, y * 0.5) : y - b));
            y1 = std::max(y1, ty(y + b));
        }
    if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;

    const double left = 70, right = 170, top = 40, bottom = 50;
    const double w = o.width - left - right, h = o.height - top - bottom;
    auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * w; };
    auto py = [&](double y) { return top + h - (ty(y) - y0) / (y1 - y0) * h; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!o.title.empty())
        out << "<text x=\"" << fmt(left + w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
            << o.title << "</text>\n";
    out << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(w) << "\" height=\""
        << fmt(h) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        const double vx = o.log_x ? std::pow(10.0, fx) : fx, vy = o.log_y ? std::pow(10.0, fy) : fy;
        const double gx = left + w * i / 4.0, gy = top + h - h * i / 4.0;
        out << "<line x1=\"" << fmt(gx) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(gx) << "\" y2=\""
            << fmt(top + h) << "\" stroke=\"#eee\"/>\n";
        out << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(gy) << "\" x2=\"" << fmt(left + w)
            << "\" y2=\"" << fmt(gy) << "\" stroke=\"#eee\"/>\n";
        out << "<text x=\"" << fmt(gx) << "\" y=\"" << fmt(top + h + 16) << "\" text-anchor=\"middle\">"
            << tick_label(vx) << "</text>\n";
        out << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(gy + 4) << "\" text-anchor=\"end\">"
            << tick_label(vy) << "</text>\n";
    }
    out << "<text x=\"" << fmt(left + w / 2) << "\" y=\"" << fmt(o.height - 10.0)
        << "\" text-anchor=\"middle\">" << o.x << "</text>\n";
    out << "<text x=\"16\" y=\"" << fmt(top + h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << fmt(top + h / 2) << ")\">" << o.y << "</text>\n";

    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& s = series[order[k]];
        const char* color = kPalette[k % std::size(kPalette)];
        if (!s.band.empty()) {
            std::string upper, lower;
            for (const auto& [x, acc] : s.y) {
                const double y = acc.first / static_cast<double>(acc.second);
                double b = 0.0;
                if (auto it = s.band.find(x); it != s.band.end())
                    b = it->second.first / static_cast<double>(it->second.second);
                const double lo = o.log_y ? std::max(y - b, y * 0.5) : y - b;
                upper += fmt(px(x)) + "," + fmt(py(y + b)) + " ";
                lower = fmt(px(x)) + "," + fmt(py(lo)) + " " + lower;
            }
            out << "<polygon points=\"" << upper << lower << "\" fill=\"" << color
                << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, acc] : s.y)
            out << fmt(px(x)) << ',' << fmt(py(acc.first / static_cast<double>(acc.second))) << ' ';
        out << "\"/>\n";
        const double ly = top + 14.0 + 18.0 * static_cast<double>(k);
        out << "<line x1=\"" << fmt(left + w + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(left + w + 32)
            << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << fmt(left + w + 38) << "\" y=\"" << fmt(ly + 4) << "\">" << order[k]
            << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace ribe
