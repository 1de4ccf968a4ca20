#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ribe {

/// Header plus string cells; no quoting support (the harness never emits commas in fields).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index; throws InvalidArgument when absent.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);

struct PlotOptions {
    std::string x;
    std::string y;
    std::string group;    ///< optional series column
    std::string band;     ///< optional half-width column drawn as a shaded band
    bool log_x = true;
    bool log_y = false;
    std::string title;
    int width = 720;
    int height = 440;
};

/// Line chart of mean y per (group, x), with optional bands, as standalone SVG.
void write_svg_plot(std::ostream& out, const CsvTable& table, const PlotOptions& options);

} // namespace ribe
