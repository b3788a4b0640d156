#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcal/io.hpp"

namespace mcal {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    cells.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, std::size_t row, std::size_t col) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
    throw std::runtime_error("row " + std::to_string(row) + ", column " + std::to_string(col) +
                             ": not a number: '" + s + "'");
  return v;
}

}  // namespace

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = split_csv(line);
  const bool has_label = !header.empty() && header.back() == "label";
  const std::size_t d = header.size() - (has_label ? 1 : 0);
  if (d < 1) throw std::runtime_error(path.string() + ": no feature columns");
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != "f" + std::to_string(j))
      throw std::runtime_error(path.string() + ": header column " + std::to_string(j) + " should be f" +
                               std::to_string(j));

  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " + std::to_string(header.size()));
    for (std::size_t j = 0; j < d; ++j) values.push_back(parse_number(cells[j], row, j));
    if (has_label) {
      const double v = parse_number(cells[d], row, d);
      if (v != static_cast<double>(static_cast<Label>(v)))
        throw std::runtime_error(path.string() + ": row " + std::to_string(row) + ": label is not an integer");
      labels.push_back(static_cast<Label>(v));
    }
  }
  const Index n = static_cast<Index>(values.size() / d);
  Dataset data;
  data.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, static_cast<Index>(d));
  if (has_label) {
    const std::set<Label> distinct(labels.begin(), labels.end());
    bool pm = true;
    for (Label l : distinct) pm = pm && (l == 1 || l == -1);
    if (pm && distinct.count(-1)) {
      data.binary = true;
      data.n_classes = 2;
    } else {
      data.binary = false;
      data.n_classes = distinct.empty() ? 1 : *distinct.rbegin();
      if (!distinct.empty() && *distinct.begin() < 1)
        throw std::runtime_error(path.string() + ": multiclass labels must be 1..n_c");
    }
    data.ground_truth = std::move(labels);
  }
  data.validate();
  return data;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (Index j = 0; j < data.dim(); ++j) std::fprintf(f, "%sf%ld", j ? "," : "", static_cast<long>(j));
  if (data.ground_truth) std::fprintf(f, ",label");
  std::fprintf(f, "\n");
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) std::fprintf(f, "%s%.17g", j ? "," : "", data.features(i, j));
    if (data.ground_truth) std::fprintf(f, ",%d", (*data.ground_truth)[static_cast<std::size_t>(i)]);
    std::fprintf(f, "\n");
  }
  if (std::fclose(f) != 0) throw std::runtime_error("error writing " + path.string());
}

}  // namespace mcal
