#pragma once

#include "chaoscope/matrix_core.hpp"

#include <iosfwd>
#include <string>

namespace chaoscope {

// JSON: {"n": N, "format": "coo", "entries": [[i, j, value], ...]} with 0-based indices.
InteractionMatrix read_matrix_json(std::istream& in);
void write_matrix_json(std::ostream& out, const InteractionMatrix& xi);

// Dense CSV, one row per line.
InteractionMatrix read_matrix_csv(std::istream& in);
void write_matrix_csv(std::ostream& out, const InteractionMatrix& xi);

// Dispatches on extension (.json or .csv).
InteractionMatrix load_matrix(const std::string& path);
void save_matrix(const std::string& path, const InteractionMatrix& xi);

// Edge list: one "u v" pair per line, '#' starts a comment. The vertex count is
// n if given, else one more than the largest index seen.
Graph read_graph(std::istream& in, int n = -1);
Graph load_graph(const std::string& path, int n = -1);
void write_graph(std::ostream& out, const Graph& g);

Vec read_vector(std::istream& in);
Vec load_vector(const std::string& path);
Mat load_dense(const std::string& path);

}  // namespace chaoscope
