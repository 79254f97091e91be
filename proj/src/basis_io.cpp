#include "nb/basis.hpp"
#include "nb/io.hpp"

#include <json.hpp>

#include <bit>
#include <fstream>

namespace nb {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

namespace io {

void write_header(std::ostream& out, const char (&magic)[9], const std::string& header) {
  out.write(magic, 8);
  const std::uint64_t length = header.size();
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
}

std::string read_header(std::istream& in, const char (&magic)[9]) {
  char tag[8];
  in.read(tag, 8);
  require(in.good() && std::equal(tag, tag + 8, magic), "file has the wrong magic number");
  std::uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  require(in.good() && length < (1ULL << 32), "corrupt header length");
  std::string header(length, '\0');
  in.read(header.data(), static_cast<std::streamsize>(length));
  require(in.good(), "truncated header");
  return header;
}

void write_doubles(std::ostream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::istream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  require(in.good(), "truncated data block");
}

void write_row_major(std::ostream& out, const Eigen::MatrixXd& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = m;
  write_doubles(out, r.data(), static_cast<std::size_t>(r.size()));
}

Eigen::MatrixXd read_row_major(std::istream& in, Index rows, Index cols) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r(rows, cols);
  read_doubles(in, r.data(), static_cast<std::size_t>(r.size()));
  return r;
}

}  // namespace io

namespace {

constexpr char kBasisMagic[9] = "NBBASIS1";

nlohmann::json domain_json(const Domain& d) {
  nlohmann::json j;
  j["shape"] = to_string(d.shape());
  if (d.shape() == Shape::polygon) {
    nlohmann::json vertices = nlohmann::json::array();
    for (const auto& v : d.vertices()) vertices.push_back({v.x(), v.y()});
    j["vertices"] = vertices;
  } else {
    j["lengths"] = nlohmann::json::array();
    for (int a = 0; a < d.dim(); ++a) j["lengths"].push_back(d.length(a));
  }
  return j;
}

Domain domain_from_json(const nlohmann::json& j) {
  const Shape shape = shape_from_string(j.at("shape").get<std::string>());
  if (shape == Shape::interval) return Domain::interval(j.at("lengths").at(0).get<double>());
  if (shape == Shape::rectangle)
    return Domain::rectangle(j.at("lengths").at(0).get<double>(), j.at("lengths").at(1).get<double>());
  std::vector<Eigen::Vector2d> vertices;
  for (const auto& v : j.at("vertices")) vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
  return Domain::polygon(std::move(vertices));
}

}  // namespace

void save_basis(const EigenBasis& basis, const std::filesystem::path& path) {
  const BasisData& d = basis.data();
  const Grid& g = d.grid;
  nlohmann::json header;
  header["format"] = "nb-basis";
  header["version"] = 1;
  header["domain"] = domain_json(d.domain);
  header["dim"] = g.dim;
  header["N"] = g.size();
  header["K"] = basis.size();
  header["h"] = g.h();
  header["analytic"] = d.analytic;
  header["extent"] = {g.extent.x(), g.extent.y()};
  header["layout"] = "scalars[5], eigenvalues[K], weights[N], nodes[N][dim], modes[N][K], "
                     "gradient_modes[dim][N][K] (analytic), cells[N][dim], mode_indices[K][dim] (analytic)";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot open basis file for writing: " + path.string());
  io::write_header(out, kBasisMagic, header.dump());
  const double scalars[5] = {d.lambda_max, g.spacing.x(), g.spacing.y(), g.origin.x(), g.origin.y()};
  io::write_doubles(out, scalars, 5);
  io::write_doubles(out, d.eigenvalues.data(), static_cast<std::size_t>(d.eigenvalues.size()));
  io::write_doubles(out, g.weights.data(), static_cast<std::size_t>(g.weights.size()));
  io::write_row_major(out, g.nodes);
  io::write_row_major(out, d.modes);
  if (d.analytic)
    for (const auto& m : d.gradient_modes) io::write_row_major(out, m);
  io::write_row_major(out, g.cells.cast<double>());
  if (d.analytic) io::write_row_major(out, d.mode_indices.cast<double>());
  require(out.good(), "failed writing basis file: " + path.string());
}

EigenBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open basis file: " + path.string());
  const auto header = nlohmann::json::parse(io::read_header(in, kBasisMagic));
  require(header.at("format") == "nb-basis", "not a basis file");

  BasisData d;
  d.domain = domain_from_json(header.at("domain"));
  const int dim = header.at("dim").get<int>();
  const Index n = header.at("N").get<Index>();
  const Index k = header.at("K").get<Index>();
  d.analytic = header.at("analytic").get<bool>();
  double scalars[5];
  io::read_doubles(in, scalars, 5);
  d.lambda_max = scalars[0];
  Grid& g = d.grid;
  g.dim = dim;
  g.spacing = {scalars[1], scalars[2]};
  g.origin = {scalars[3], scalars[4]};
  g.extent = {header.at("extent").at(0).get<int>(), header.at("extent").at(1).get<int>()};
  d.eigenvalues.resize(k);
  io::read_doubles(in, d.eigenvalues.data(), static_cast<std::size_t>(k));
  g.weights.resize(n);
  io::read_doubles(in, g.weights.data(), static_cast<std::size_t>(n));
  g.nodes = io::read_row_major(in, n, dim);
  d.modes = io::read_row_major(in, n, k);
  if (d.analytic)
    for (int a = 0; a < dim; ++a) d.gradient_modes.push_back(io::read_row_major(in, n, k));
  g.cells = io::read_row_major(in, n, dim).cast<int>();
  if (d.analytic) d.mode_indices = io::read_row_major(in, k, dim).cast<int>();
  return EigenBasis(std::move(d));
}

}  // namespace nb
