#pragma once

// Text formats for datasets and labelings.
//
// Edge file:
//     # csbm-edges v1 n=<n>
//     i j w            (0-indexed, i < j, whitespace separated, one per line)
//
// Attribute file: CSV, row i holds the attributes of node i. An optional
// header names the columns; a final column named "label" carries the ground
// truth.
//
// Label file: one integer per line.

#include <filesystem>
#include <string>

#include "csbm/model.hpp"

namespace csbm {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

void write_edges(const Dataset& ds, const std::filesystem::path& path);
void write_attributes(const Dataset& ds, const std::filesystem::path& path);
void write_labels(const Labels& z, const std::filesystem::path& path);

Labels read_labels(const std::filesystem::path& path);

/// Reads an edge file and an attribute file into a validated Dataset. An
/// empty attribute path means no attributes. Networks whose weights are all 1
/// load as binary.
Dataset load_dataset(const std::filesystem::path& edges, const std::filesystem::path& attributes);

/// Writes <dir>/edges.txt and <dir>/attributes.csv.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace csbm
