#include "chaoscope/io.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace chaoscope {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open " + path);
  return in;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string at_line(int lineno) { return "line " + std::to_string(lineno) + ": "; }

std::vector<double> parse_row(const std::string& line, int lineno) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::stringstream cs(cell);
    double x;
    std::string rest;
    require(static_cast<bool>(cs >> x) && !(cs >> rest), ErrorCode::parse_error,
            at_line(lineno) + "bad number '" + cell + "'");
    row.push_back(x);
  }
  return row;
}

// Non-blank rows with their 1-based line numbers.
std::vector<std::pair<int, std::vector<double>>> read_rows(std::istream& in) {
  std::vector<std::pair<int, std::vector<double>>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.emplace_back(lineno, parse_row(line, lineno));
  }
  return rows;
}

}  // namespace

InteractionMatrix read_matrix_json(std::istream& in) {
  nlohmann::json j;
  Index n = 0;
  std::vector<Eigen::Triplet<double>> t;
  try {
    in >> j;
    require(j.contains("n") && j.contains("entries"), ErrorCode::parse_error, "matrix JSON needs n and entries");
    require(j.value("format", "coo") == "coo", ErrorCode::parse_error, "only coo format is supported");
    n = j.at("n").get<Index>();
    std::size_t k = 0;
    for (const auto& e : j.at("entries")) {
      require(e.is_array() && e.size() == 3, ErrorCode::parse_error,
              "entry " + std::to_string(k) + " must be [i, j, value]");
      t.emplace_back(e[0].get<Index>(), e[1].get<Index>(), e[2].get<double>());
      ++k;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, e.what());
  }
  require(n >= 1, ErrorCode::invalid_size, "n must be positive");
  return InteractionMatrix::from_triplets(n, t);
}

void write_matrix_json(std::ostream& out, const InteractionMatrix& xi) {
  nlohmann::json j;
  j["n"] = xi.size();
  j["format"] = "coo";
  j["entries"] = nlohmann::json::array();
  for (const auto& t : xi.triplets()) j["entries"].push_back({t.row(), t.col(), t.value()});
  out << j.dump() << '\n';
}

InteractionMatrix read_matrix_csv(std::istream& in) {
  const auto rows = read_rows(in);
  require(!rows.empty(), ErrorCode::parse_error, "empty matrix CSV");
  const auto n = static_cast<Index>(rows.size());
  Mat m(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto& [lineno, row] = rows[static_cast<std::size_t>(i)];
    require(static_cast<Index>(row.size()) == n, ErrorCode::parse_error,
            at_line(lineno) + "expected " + std::to_string(n) + " columns, got " + std::to_string(row.size()));
    for (Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return InteractionMatrix::from_dense(m);
}

void write_matrix_csv(std::ostream& out, const InteractionMatrix& xi) {
  const Mat m = xi.dense();
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

InteractionMatrix load_matrix(const std::string& path) {
  auto in = open_in(path);
  if (ends_with(path, ".json")) return read_matrix_json(in);
  if (ends_with(path, ".csv")) return read_matrix_csv(in);
  throw Error(ErrorCode::invalid_argument, "matrix file must end in .json or .csv: " + path);
}

void save_matrix(const std::string& path, const InteractionMatrix& xi) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write " + path);
  if (ends_with(path, ".csv"))
    write_matrix_csv(out, xi);
  else
    write_matrix_json(out, xi);
}

Graph read_graph(std::istream& in, int n) {
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int top = -1, lineno = 0, header_n = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) {
      std::stringstream hs(line.substr(h + 1));
      std::string key;
      int value;
      if (hs >> key >> value && key == "n") header_n = value;
      line.resize(h);
    }
    std::stringstream ss(line);
    int u, v;
    std::string rest;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    require(static_cast<bool>(ss >> u >> v) && !(ss >> rest), ErrorCode::parse_error,
            at_line(lineno) + "expected two vertex indices, got '" + line + "'");
    edges.emplace_back(u, v);
    top = std::max({top, u, v});
  }
  if (n < 0) n = header_n >= 0 ? header_n : top + 1;
  return Graph(n, std::move(edges));
}

Graph load_graph(const std::string& path, int n) {
  auto in = open_in(path);
  return read_graph(in, n);
}

void write_graph(std::ostream& out, const Graph& g) {
  out << "# n " << g.size() << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

Vec read_vector(std::istream& in) {
  std::vector<double> all;
  for (const auto& [lineno, r] : read_rows(in)) all.insert(all.end(), r.begin(), r.end());
  return Eigen::Map<Vec>(all.data(), static_cast<Index>(all.size()));
}

Vec load_vector(const std::string& path) {
  auto in = open_in(path);
  return read_vector(in);
}

Mat load_dense(const std::string& path) {
  auto in = open_in(path);
  const auto rows = read_rows(in);
  require(!rows.empty(), ErrorCode::parse_error, "empty CSV " + path);
  const std::size_t width = rows[0].second.size();
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [lineno, row] = rows[i];
    require(row.size() == width, ErrorCode::parse_error, path + ": " + at_line(lineno) + "ragged row");
    for (std::size_t j = 0; j < width; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = row[j];
  }
  return m;
}

}  // namespace chaoscope
