#include "knockoff/hiv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace knockoff::hiv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, '\t')) out.push_back(cur);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

int mutation_position(const std::string& label) {
  std::size_t i = 0;
  while (i < label.size() && std::isdigit(static_cast<unsigned char>(label[i]))) ++i;
  if (i == 0) throw ParseError("mutation label without leading position: " + label);
  return std::stoi(label.substr(0, i));
}

MutationDataset load(const std::filesystem::path& mutations_file,
                     const std::filesystem::path& susceptibility_file,
                     const std::filesystem::path& tsm_file, Index min_occurrence) {
  MutationDataset ds;
  ds.min_occurrence = min_occurrence;

  // Mutation matrix.
  auto lines = read_lines(mutations_file);
  std::size_t lineno = 0;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  for (const std::string& line : lines) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (!have_header) {
      if (fields.size() < 2)
        throw ParseError(mutations_file.string() + ":" + std::to_string(lineno) +
                         ": header needs patient_id plus mutation labels");
      labels.assign(fields.begin() + 1, fields.end());
      std::set<std::string> seen;
      for (const auto& l : labels) {
        mutation_position(l);  // validates the label shape
        if (!seen.insert(l).second)
          throw ParseError("duplicate mutation label: " + l);
      }
      have_header = true;
      continue;
    }
    if (fields.size() != labels.size() + 1)
      throw ParseError(mutations_file.string() + ":" + std::to_string(lineno) +
                       ": expected " + std::to_string(labels.size() + 1) +
                       " fields, got " + std::to_string(fields.size()));
    ds.patients.push_back(fields[0]);
    std::vector<double> row(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const std::string& f = fields[j + 1];
      if (f == "0")
        row[j] = 0.0;
      else if (f == "1")
        row[j] = 1.0;
      else
        throw ParseError(mutations_file.string() + ":" + std::to_string(lineno) +
                         ": mutation entries must be 0/1, got '" + f + "'");
    }
    rows.push_back(std::move(row));
  }
  if (!have_header || rows.empty())
    throw ParseError("empty mutation file: " + mutations_file.string());

  const Index n = static_cast<Index>(rows.size());
  // Global occurrence filter.
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    double count = 0.0;
    for (const auto& r : rows) count += r[j];
    if (count >= static_cast<double>(min_occurrence)) kept.push_back(j);
  }
  ds.matrix.resize(n, static_cast<Index>(kept.size()));
  for (std::size_t jj = 0; jj < kept.size(); ++jj) {
    ds.mutations.push_back(labels[kept[jj]]);
    for (Index i = 0; i < n; ++i)
      ds.matrix(i, static_cast<Index>(jj)) = rows[static_cast<std::size_t>(i)][kept[jj]];
  }

  // Susceptibility table, matched by patient id.
  auto slines = read_lines(susceptibility_file);
  lineno = 0;
  bool sheader = false;
  std::map<std::string, std::vector<double>> by_patient;
  for (const std::string& line : slines) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (!sheader) {
      if (fields.size() < 2)
        throw ParseError(susceptibility_file.string() + ":" +
                         std::to_string(lineno) + ": header needs drug columns");
      ds.drugs.assign(fields.begin() + 1, fields.end());
      sheader = true;
      continue;
    }
    if (fields.size() != ds.drugs.size() + 1)
      throw ParseError(susceptibility_file.string() + ":" + std::to_string(lineno) +
                       ": wrong field count");
    std::vector<double> vals(ds.drugs.size(), kNaN);
    for (std::size_t j = 0; j < ds.drugs.size(); ++j) {
      const std::string& f = fields[j + 1];
      if (f == "NA" || f.empty()) continue;
      try {
        std::size_t used = 0;
        vals[j] = std::stod(f, &used);
        if (used != f.size()) throw std::invalid_argument(f);
      } catch (const std::exception&) {
        throw ParseError(susceptibility_file.string() + ":" +
                         std::to_string(lineno) + ": bad value '" + f + "'");
      }
    }
    by_patient[fields[0]] = std::move(vals);
  }
  if (!sheader)
    throw ParseError("empty susceptibility file: " + susceptibility_file.string());
  ds.susceptibility =
      Matrix::Constant(n, static_cast<Index>(ds.drugs.size()), kNaN);
  for (Index i = 0; i < n; ++i) {
    auto it = by_patient.find(ds.patients[static_cast<std::size_t>(i)]);
    if (it == by_patient.end()) continue;
    for (std::size_t j = 0; j < ds.drugs.size(); ++j)
      ds.susceptibility(i, static_cast<Index>(j)) = it->second[j];
  }

  // TSM positions.
  for (const std::string& line : read_lines(tsm_file)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    int pos;
    while (ss >> pos) ds.tsm_positions.insert(pos);
  }
  return ds;
}

MutationDataset load_dir(const std::filesystem::path& dir, Index min_occurrence) {
  return load(dir / "mutations.tsv", dir / "susceptibility.tsv", dir / "tsm.txt",
              min_occurrence);
}

DrugView per_drug_view(const MutationDataset& dataset, const std::string& drug,
                       Index min_occurrence) {
  auto it = std::find(dataset.drugs.begin(), dataset.drugs.end(), drug);
  if (it == dataset.drugs.end()) {
    std::string avail;
    for (const auto& d : dataset.drugs) avail += (avail.empty() ? "" : ", ") + d;
    throw Error("unknown drug '" + drug + "'; available: " + avail);
  }
  const Index dj = static_cast<Index>(it - dataset.drugs.begin());

  DrugView view;
  std::vector<double> ys;
  for (Index i = 0; i < dataset.matrix.rows(); ++i) {
    const double v = dataset.susceptibility(i, dj);
    if (std::isnan(v)) continue;
    if (v <= 0.0) {
      ++view.dropped_nonpositive;
      continue;
    }
    view.kept_rows.push_back(i);
    ys.push_back(std::log(v));
  }
  if (view.kept_rows.empty())
    throw Error("drug " + drug + " has no usable (observed, positive) outcomes");

  const Index nr = static_cast<Index>(view.kept_rows.size());
  for (Index j = 0; j < dataset.matrix.cols(); ++j) {
    double count = 0.0;
    for (Index i : view.kept_rows) count += dataset.matrix(i, j);
    if (count >= static_cast<double>(min_occurrence)) {
      view.kept_columns.push_back(j);
      view.kept_mutations.push_back(dataset.mutations[static_cast<std::size_t>(j)]);
    }
  }
  view.x.resize(nr, static_cast<Index>(view.kept_columns.size()));
  view.y.resize(nr);
  for (Index r = 0; r < nr; ++r) {
    view.y(r) = ys[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < view.kept_columns.size(); ++c)
      view.x(r, static_cast<Index>(c)) =
          dataset.matrix(view.kept_rows[static_cast<std::size_t>(r)],
                         view.kept_columns[c]);
  }
  return view;
}

TsmOverlap tsm_overlap(const std::vector<std::string>& selected_mutations,
                       const std::set<int>& tsm_positions) {
  TsmOverlap o;
  o.selected = static_cast<Index>(selected_mutations.size());
  for (const auto& label : selected_mutations)
    if (tsm_positions.count(mutation_position(label))) ++o.matched;
  return o;
}

}  // namespace knockoff::hiv
