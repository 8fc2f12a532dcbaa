#include "ppgroup/court.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ppgroup {

void Domain::validate() const
{
    if (!(x_min < x_max) || !(y_min < y_max))
        throw InputError("domain: require x_min < x_max and y_min < y_max");
}

void GridSpec::validate() const
{
    domain.validate();
    if (nx <= 0 || ny <= 0)
        throw InputError("grid: cell counts must be positive");
}

int GridSpec::cell_index(const Point& p) const
{
    if (!domain.contains(p))
        throw InputError("point (" + format_double(p.x) + ", " + format_double(p.y) +
                         ") lies outside the domain");
    int ix = static_cast<int>(std::floor((p.x - domain.x_min) / dx()));
    int iy = static_cast<int>(std::floor((p.y - domain.y_min) / dy()));
    ix = std::min(ix, nx - 1); // max edge belongs to the last cell
    iy = std::min(iy, ny - 1);
    return iy * nx + ix;
}

Point GridSpec::cell_center(int c) const
{
    const int ix = c % nx;
    const int iy = c / nx;
    return {domain.x_min + (ix + 0.5) * dx(), domain.y_min + (iy + 0.5) * dy()};
}

long CountGrid::total() const
{
    long t = 0;
    for (long c : counts) t += c;
    return t;
}

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

// Splits on commas; no quoting in this schema.
std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_number(const std::string& s, double& out)
{
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc() && res.ptr == e && b != e;
}

} // namespace

ShotCsvResult parse_shot_csv(const std::string& path, const Domain& domain,
                             long min_attempts)
{
    domain.validate();
    std::ifstream in(path);
    if (!in) throw InputError("cannot open shot CSV: " + path);

    ShotCsvResult result;
    std::string line;
    long line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!saw_header) { // first line is the header
            saw_header = true;
            continue;
        }
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() < 3)
            throw InputError(path + ":" + std::to_string(line_no) +
                             ": expected at least 3 fields (label,x,y)");
        Point p;
        if (!parse_number(fields[1], p.x) || !parse_number(fields[2], p.y))
            throw InputError(path + ":" + std::to_string(line_no) +
                             ": non-numeric coordinate");
        if (!domain.contains(p)) {
            ++result.rejected;
            continue;
        }
        auto& pat = result.patterns[fields[0]];
        pat.label = fields[0];
        pat.points.push_back(p);
    }

    if (min_attempts > 0) {
        for (auto it = result.patterns.begin(); it != result.patterns.end();) {
            if (static_cast<long>(it->second.size()) < min_attempts)
                it = result.patterns.erase(it);
            else
                ++it;
        }
    }
    return result;
}

void write_shot_csv(const std::string& path,
                    const std::vector<PointPattern>& patterns)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write shot CSV: " + path);
    out << "label,x,y\n";
    for (const auto& pat : patterns)
        for (const auto& p : pat.points)
            out << pat.label << ',' << format_double(p.x) << ','
                << format_double(p.y) << '\n';
    if (!out) throw InputError("write failed: " + path);
}

CountGrid bin_counts(const PointPattern& pattern, const GridSpec& spec)
{
    spec.validate();
    CountGrid grid{spec, std::vector<long>(spec.cells(), 0)};
    for (const auto& p : pattern.points)
        ++grid.counts[spec.cell_index(p)];
    return grid;
}

} // namespace ppgroup
