#include "ppgroup/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ppgroup {

namespace {

double parse_double(const std::string& s, const std::string& path, long line)
{
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError(path + ":" + std::to_string(line) +
                         ": expected a number, got '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    return out;
}

} // namespace

void write_intensity_csv(const std::string& path, const IntensityGrid& grid)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write intensity file: " + path);
    const GridSpec& s = grid.spec;
    out << "# nx=" << s.nx << " ny=" << s.ny << " x_min="
        << format_double(s.domain.x_min) << " y_min="
        << format_double(s.domain.y_min) << " x_max="
        << format_double(s.domain.x_max) << " y_max="
        << format_double(s.domain.y_max) << '\n';
    for (int c = 0; c < s.cells(); ++c)
        out << c << ',' << format_double(grid.lambda[c]) << ','
            << format_double(grid.z[c]) << '\n';
    if (!out) throw InputError("write failed: " + path);
}

IntensityGrid read_intensity_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open intensity file: " + path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("# ", 0) != 0)
        throw InputError(path + ": missing grid header line");

    GridSpec spec;
    {
        std::stringstream ss(header.substr(2));
        std::string token;
        while (ss >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos)
                throw InputError(path + ": malformed header token '" + token + "'");
            const std::string key = token.substr(0, eq);
            const std::string val = token.substr(eq + 1);
            if (key == "nx")
                spec.nx = static_cast<int>(parse_double(val, path, 1));
            else if (key == "ny")
                spec.ny = static_cast<int>(parse_double(val, path, 1));
            else if (key == "x_min")
                spec.domain.x_min = parse_double(val, path, 1);
            else if (key == "y_min")
                spec.domain.y_min = parse_double(val, path, 1);
            else if (key == "x_max")
                spec.domain.x_max = parse_double(val, path, 1);
            else if (key == "y_max")
                spec.domain.y_max = parse_double(val, path, 1);
            else
                throw InputError(path + ": unknown header key '" + key + "'");
        }
    }
    spec.validate();

    Eigen::VectorXd lambda(spec.cells()), z(spec.cells());
    std::string line;
    long line_no = 1;
    int rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 3)
            throw InputError(path + ":" + std::to_string(line_no) +
                             ": expected cell_index,lambda,z");
        const int c = static_cast<int>(parse_double(fields[0], path, line_no));
        if (c < 0 || c >= spec.cells())
            throw InputError(path + ":" + std::to_string(line_no) +
                             ": cell index out of range");
        lambda[c] = parse_double(fields[1], path, line_no);
        z[c] = parse_double(fields[2], path, line_no);
        ++rows;
    }
    if (rows != spec.cells())
        throw InputError(path + ": expected " + std::to_string(spec.cells()) +
                         " cells, found " + std::to_string(rows));
    IntensityGrid grid;
    grid.spec = spec;
    grid.lambda = std::move(lambda);
    grid.z = std::move(z);
    return grid;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write matrix file: " + path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw InputError("write failed: " + path);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open matrix file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_double(f, path, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError(path + ":" + std::to_string(line_no) +
                             ": ragged matrix row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(path + ": empty matrix");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
    return m;
}

void write_labels_csv(const std::string& path,
                      const std::vector<std::string>& labels)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write label file: " + path);
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << i << ',' << labels[i] << '\n';
    if (!out) throw InputError("write failed: " + path);
}

std::vector<std::string> read_labels_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open label file: " + path);
    std::vector<std::string> labels;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw InputError(path + ":" + std::to_string(line_no) +
                             ": expected index,label");
        labels.push_back(line.substr(comma + 1));
    }
    return labels;
}

void write_draws_csv(const std::string& path, const PosteriorDraws& draws)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write draws file: " + path);
    const int n =
        draws.partitions.empty() ? 0 : static_cast<int>(draws.partitions[0].size());
    out << "iter,k";
    for (int i = 1; i <= n; ++i) out << ",z_" << i;
    out << '\n';
    for (int l = 0; l < draws.draws(); ++l) {
        out << draws.burnin + l + 1 << ',' << draws.k_per_draw[l];
        for (int v : draws.partitions[l]) out << ',' << v;
        out << '\n';
    }
    if (!out) throw InputError("write failed: " + path);
}

} // namespace ppgroup
