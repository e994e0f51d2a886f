#include "csbm/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "csbm/errors.hpp"

namespace csbm {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(const std::string& tok, T& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("cannot format double");
  return std::string(buf, ptr);
}

void write_edges(const Dataset& ds, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# csbm-edges v1 n=" << ds.n() << '\n';
  for (const Edge& e : ds.edges()) out << e.i << ' ' << e.j << ' ' << format_double(e.w) << '\n';
  if (!out) throw ValidationError("write failed: " + path.string());
}

void write_attributes(const Dataset& ds, const std::filesystem::path& path) {
  auto out = open_out(path);
  const int d = ds.attr_dim();
  const bool with_labels = ds.labels().has_value();
  std::string header;
  for (int k = 0; k < d; ++k) header += (k ? ",y" : "y") + std::to_string(k);
  if (with_labels) header += d ? ",label" : "label";
  out << header << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (int k = 0; k < d; ++k) {
      if (k) out << ',';
      out << format_double(ds.attributes()(static_cast<Eigen::Index>(i), k));
    }
    if (with_labels) out << (d ? "," : "") << (*ds.labels())[i];
    out << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path.string());
}

void write_labels(const Labels& z, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (int zi : z) out << zi << '\n';
  if (!out) throw ValidationError("write failed: " + path.string());
}

Labels read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  Labels z;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    int v = 0;
    if (!parse_number(t, v) || v < 0) throw ParseError(path.string(), lineno, "expected a nonnegative integer label");
    z.push_back(v);
  }
  return z;
}

Dataset load_dataset(const std::filesystem::path& edges_path, const std::filesystem::path& attributes_path) {
  auto in = open_in(edges_path);
  std::string line;
  std::size_t lineno = 0;
  std::size_t n = 0;
  bool have_header = false;
  // Unordered pair -> weight; mirrored listings must agree.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<double, bool>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (!have_header) {
        std::istringstream hs(t);
        std::string hash, magic, version, nfield;
        hs >> hash >> magic >> version >> nfield;
        if (magic != "csbm-edges" || version != "v1" || nfield.rfind("n=", 0) != 0 ||
            !parse_number(nfield.substr(2), n)) {
          throw ParseError(edges_path.string(), lineno, "expected header \"# csbm-edges v1 n=<n>\"");
        }
        have_header = true;
      }
      continue;
    }
    if (!have_header) throw ParseError(edges_path.string(), lineno, "missing \"# csbm-edges v1 n=<n>\" header");
    std::istringstream ls(t);
    std::string si, sj, sw, extra;
    ls >> si >> sj >> sw >> extra;
    std::uint32_t i = 0, j = 0;
    double w = 0.0;
    if (sw.empty() || !extra.empty() || !parse_number(si, i) || !parse_number(sj, j) || !parse_number(sw, w)) {
      throw ParseError(edges_path.string(), lineno, "expected \"i j w\"");
    }
    if (i == j) throw ParseError(edges_path.string(), lineno, "self-loop on node " + si);
    if (i >= n || j >= n) throw ParseError(edges_path.string(), lineno, "node index out of range");
    if (w == 0.0) throw ParseError(edges_path.string(), lineno, "zero weight listed as an edge");
    const bool upper = i < j;
    const auto key = upper ? std::make_pair(i, j) : std::make_pair(j, i);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, std::make_pair(w, upper));
    } else if (it->second.second == upper) {
      throw ParseError(edges_path.string(), lineno, "duplicate edge");
    } else if (it->second.first != w) {
      throw ParseError(edges_path.string(), lineno, "asymmetric edge list: weights of (i,j) and (j,i) differ");
    }
  }
  if (!have_header) throw ParseError(edges_path.string(), lineno, "empty edge file");

  std::vector<Edge> edges;
  edges.reserve(seen.size());
  bool binary = true;
  for (const auto& [key, val] : seen) {
    edges.push_back({key.first, key.second, val.first});
    if (val.first != 1.0) binary = false;
  }

  Eigen::MatrixXd Y(static_cast<Eigen::Index>(n), 0);
  std::optional<Labels> labels;
  if (!attributes_path.empty()) {
    auto ain = open_in(attributes_path);
    std::vector<std::vector<double>> rows;
    Labels lab;
    int label_col = -1;
    int ncols = -1;
    lineno = 0;
    bool first = true;
    while (std::getline(ain, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      auto cells = split(t, ',');
      if (first) {
        first = false;
        double probe = 0.0;
        bool header = false;
        for (const auto& c : cells) header = header || !parse_number(c, probe);
        if (header) {
          ncols = static_cast<int>(cells.size());
          if (!cells.empty() && cells.back() == "label") label_col = ncols - 1;
          continue;
        }
      }
      if (ncols < 0) ncols = static_cast<int>(cells.size());
      if (static_cast<int>(cells.size()) != ncols) {
        throw ParseError(attributes_path.string(), lineno, "expected " + std::to_string(ncols) + " columns");
      }
      std::vector<double> row;
      for (int c = 0; c < ncols; ++c) {
        if (c == label_col) {
          int z = 0;
          if (!parse_number(cells[static_cast<std::size_t>(c)], z) || z < 0) {
            throw ParseError(attributes_path.string(), lineno, "bad label");
          }
          lab.push_back(z);
        } else {
          double v = 0.0;
          if (!parse_number(cells[static_cast<std::size_t>(c)], v)) {
            throw ParseError(attributes_path.string(), lineno, "bad number \"" + cells[static_cast<std::size_t>(c)] + "\"");
          }
          row.push_back(v);
        }
      }
      rows.push_back(std::move(row));
    }
    if (rows.size() != n) {
      throw ValidationError(attributes_path.string() + ": " + std::to_string(rows.size()) +
                            " attribute rows for n=" + std::to_string(n) + " nodes");
    }
    const int d = ncols < 0 ? 0 : ncols - (label_col >= 0 ? 1 : 0);
    Y.resize(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) Y(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
    }
    if (label_col >= 0) labels = std::move(lab);
  }
  return Dataset(n, std::move(edges), std::move(Y), std::move(labels), binary);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_edges(ds, dir / "edges.txt");
  if (ds.attr_dim() > 0 || ds.labels()) write_attributes(ds, dir / "attributes.csv");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto attributes = dir / "attributes.csv";
  return load_dataset(dir / "edges.txt", std::filesystem::exists(attributes) ? attributes : std::filesystem::path{});
}

}  // namespace csbm
