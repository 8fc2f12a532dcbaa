#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppgroup/intensity.hpp"
#include "ppgroup/mfm.hpp"

namespace ppgroup {

/// Intensity file: `# nx=.. ny=.. x_min=.. y_min=.. x_max=.. y_max=..` then
/// row-major `cell_index,lambda,z` lines.
void write_intensity_csv(const std::string& path, const IntensityGrid& grid);
IntensityGrid read_intensity_csv(const std::string& path);

/// Headerless n rows of n comma-separated values.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

/// Sidecar mapping row index to pattern label, one `index,label` line per row.
void write_labels_csv(const std::string& path,
                      const std::vector<std::string>& labels);
std::vector<std::string> read_labels_csv(const std::string& path);

/// Retained draws: header `iter,k,z_1,...,z_n`, then one row per iteration.
void write_draws_csv(const std::string& path, const PosteriorDraws& draws);

} // namespace ppgroup
