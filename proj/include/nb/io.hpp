#pragma once

// Shared helpers for the binary file formats (basis and kernel dumps).

#include "nb/types.hpp"

#include <Eigen/Core>

#include <istream>
#include <ostream>
#include <string>

namespace nb::io {

void write_header(std::ostream& out, const char (&magic)[9], const std::string& header);
std::string read_header(std::istream& in, const char (&magic)[9]);
void write_doubles(std::ostream& out, const double* data, std::size_t count);
void read_doubles(std::istream& in, double* data, std::size_t count);
void write_row_major(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_row_major(std::istream& in, Index rows, Index cols);

}  // namespace nb::io
