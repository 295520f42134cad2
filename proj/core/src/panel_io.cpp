#include "fcausal/panel_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fcausal/error.hpp"

namespace fcausal {
namespace fs = std::filesystem;

namespace {

struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& col) const {
    auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) throw Error(ErrorKind::Io, name + ": missing column '" + col + "'");
    return static_cast<int>(it - header.begin());
  }
};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  CsvTable t;
  t.name = path.filename().string();
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, t.name + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_line(line);
    if (fields.size() != t.header.size()) {
      throw Error(ErrorKind::Io, t.name + ": row has " + std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string> ordered_ids(const std::set<std::string>& ids) {
  std::vector<std::string> out(ids.begin(), ids.end());
  const bool numeric = std::all_of(out.begin(), out.end(), [](const auto& s) { return parse_int(s).has_value(); });
  if (numeric) {
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return *parse_int(a) < *parse_int(b); });
  }
  return out;
}

std::unordered_map<std::string, int> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, int> m;
  for (std::size_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], static_cast<int>(i));
  return m;
}

std::string cell_name(const std::string& file, const std::string& unit, const std::string& time) {
  return file + " (unit " + unit + ", time " + time + ")";
}

// Fills one N x T matrix per value column from a long-format table.
std::vector<Matrix> fill_grid(const CsvTable& t, const CsvSchema& schema, const std::vector<int>& value_cols,
                              const std::vector<std::string>& units, const std::vector<std::string>& times) {
  const auto ui = index_of(units);
  const auto ti = index_of(times);
  const int uc = t.column(schema.unit_col);
  const int tc = t.column(schema.time_col);
  const auto n = static_cast<Eigen::Index>(units.size());
  const auto tt = static_cast<Eigen::Index>(times.size());
  std::vector<Matrix> out(value_cols.size(), Matrix::Zero(n, tt));
  std::vector<char> seen(static_cast<std::size_t>(n * tt), 0);
  for (const auto& row : t.rows) {
    const auto& u = row[static_cast<std::size_t>(uc)];
    const auto& tm = row[static_cast<std::size_t>(tc)];
    auto uit = ui.find(u);
    auto tit = ti.find(tm);
    if (uit == ui.end() || tit == ti.end()) {
      throw Error(ErrorKind::MissingCell, cell_name(t.name, u, tm) + " uses an id absent from the exposure file");
    }
    const auto flat = static_cast<std::size_t>(uit->second * tt + tit->second);
    if (seen[flat]) throw Error(ErrorKind::DuplicateCell, cell_name(t.name, u, tm) + " appears more than once");
    seen[flat] = 1;
    for (std::size_t k = 0; k < value_cols.size(); ++k) {
      const auto& text = row[static_cast<std::size_t>(value_cols[k])];
      auto v = parse_double(text);
      if (!v) {
        throw Error(ErrorKind::NonNumericValue,
                    cell_name(t.name, u, tm) + " has non-numeric value '" + text + "'");
      }
      out[k](uit->second, tit->second) = *v;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < tt; ++j)
      if (!seen[static_cast<std::size_t>(i * tt + j)]) {
        throw Error(ErrorKind::MissingCell,
                    cell_name(t.name, units[static_cast<std::size_t>(i)], times[static_cast<std::size_t>(j)]) +
                        " is missing");
      }
  return out;
}

std::vector<int> value_columns(const CsvTable& t, const std::vector<std::string>& wanted,
                               const std::vector<std::string>& id_cols) {
  std::vector<int> cols;
  if (!wanted.empty()) {
    for (const auto& w : wanted) cols.push_back(t.column(w));
    return cols;
  }
  for (std::size_t k = 0; k < t.header.size(); ++k)
    if (std::find(id_cols.begin(), id_cols.end(), t.header[k]) == id_cols.end()) cols.push_back(static_cast<int>(k));
  return cols;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorKind::Io, "failed to format number");
  return std::string(buf, ptr);
}

PanelData load_panel(const PanelPaths& paths, const CsvSchema& schema) {
  const CsvTable exposure = read_csv(paths.exposure);
  const CsvTable outcome = read_csv(paths.outcome);

  std::set<std::string> unit_set, time_set;
  const int uc = exposure.column(schema.unit_col);
  const int tc = exposure.column(schema.time_col);
  for (const auto& row : exposure.rows) {
    unit_set.insert(row[static_cast<std::size_t>(uc)]);
    time_set.insert(row[static_cast<std::size_t>(tc)]);
  }
  if (unit_set.empty()) throw Error(ErrorKind::Io, exposure.name + ": no data rows");
  const auto units = ordered_ids(unit_set);
  const auto times = ordered_ids(time_set);

  Matrix d = fill_grid(exposure, schema, {exposure.column(schema.value_col)}, units, times)[0];
  Matrix y = fill_grid(outcome, schema, {outcome.column(schema.value_col)}, units, times)[0];

  std::vector<Matrix> covariates;
  for (const auto& path : paths.covariates) {
    const CsvTable t = read_csv(path);
    auto cols = value_columns(t, schema.covariate_cols, {schema.unit_col, schema.time_col});
    for (auto& m : fill_grid(t, schema, cols, units, times)) covariates.push_back(std::move(m));
  }

  Matrix coords = Matrix::Zero(static_cast<Eigen::Index>(units.size()), 0);
  if (!paths.coords.empty()) {
    const CsvTable t = read_csv(paths.coords);
    const auto ui = index_of(units);
    const int cu = t.column(schema.unit_col);
    auto cols = value_columns(t, schema.coord_cols, {schema.unit_col});
    coords = Matrix::Zero(static_cast<Eigen::Index>(units.size()), static_cast<Eigen::Index>(cols.size()));
    std::vector<char> seen(units.size(), 0);
    for (const auto& row : t.rows) {
      const auto& u = row[static_cast<std::size_t>(cu)];
      auto it = ui.find(u);
      if (it == ui.end()) throw Error(ErrorKind::MissingCell, t.name + ": unknown unit " + u);
      if (seen[static_cast<std::size_t>(it->second)]) throw Error(ErrorKind::DuplicateCell, t.name + ": unit " + u + " repeated");
      seen[static_cast<std::size_t>(it->second)] = 1;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const auto& text = row[static_cast<std::size_t>(cols[k])];
        auto v = parse_double(text);
        if (!v) throw Error(ErrorKind::NonNumericValue, t.name + ": unit " + u + " has non-numeric value '" + text + "'");
        coords(it->second, static_cast<Eigen::Index>(k)) = *v;
      }
    }
    for (std::size_t i = 0; i < units.size(); ++i)
      if (!seen[i]) throw Error(ErrorKind::MissingCell, t.name + ": unit " + units[i] + " has no coordinates");
  }
  return PanelData(std::move(d), std::move(y), std::move(covariates), std::move(coords), units, times);
}

PanelPaths panel_dir_paths(const fs::path& dir) {
  PanelPaths p;
  p.exposure = dir / "exposure.csv";
  p.outcome = dir / "outcome.csv";
  if (fs::exists(dir / "covariates.csv")) p.covariates.push_back(dir / "covariates.csv");
  if (fs::exists(dir / "coords.csv")) p.coords = dir / "coords.csv";
  return p;
}

PanelData load_panel_dir(const fs::path& dir, const CsvSchema& schema) {
  return load_panel(panel_dir_paths(dir), schema);
}

void write_panel_dir(const fs::path& dir, const PanelData& input) {
  fs::create_directories(dir);
  const PanelData panel = orient(input, Orientation::ReplicateOverTime);
  const auto& units = panel.unit_ids();
  const auto& times = panel.time_ids();

  auto write_values = [&](const fs::path& path, const Matrix& m) {
    auto out = open_out(path);
    out << "unit_id,time_id,value\n";
    for (int i = 0; i < panel.rows(); ++i)
      for (int t = 0; t < panel.replicates(); ++t)
        out << units[static_cast<std::size_t>(i)] << ',' << times[static_cast<std::size_t>(t)] << ','
            << format_double(m(i, t)) << '\n';
  };
  write_values(dir / "exposure.csv", panel.exposures());
  write_values(dir / "outcome.csv", panel.outcomes());

  if (panel.num_covariates() > 0) {
    auto out = open_out(dir / "covariates.csv");
    out << "unit_id,time_id";
    for (int k = 0; k < panel.num_covariates(); ++k) out << ",x" << (k + 1);
    out << '\n';
    for (int i = 0; i < panel.rows(); ++i)
      for (int t = 0; t < panel.replicates(); ++t) {
        out << units[static_cast<std::size_t>(i)] << ',' << times[static_cast<std::size_t>(t)];
        for (const auto& x : panel.covariates()) out << ',' << format_double(x(i, t));
        out << '\n';
      }
  }
  if (panel.coords().cols() > 0) {
    auto out = open_out(dir / "coords.csv");
    out << "unit_id";
    for (Eigen::Index k = 0; k < panel.coords().cols(); ++k) out << ",s" << (k + 1);
    out << '\n';
    for (int i = 0; i < panel.num_units(); ++i) {
      out << units[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < panel.coords().cols(); ++k) out << ',' << format_double(panel.coords()(i, k));
      out << '\n';
    }
  }
}

void write_neighbors(const fs::path& file, const NeighborhoodSpec& spec, const std::vector<std::string>& unit_ids) {
  auto out = open_out(file);
  out << "unit_id,neighbor_id\n";
  for (int i = 0; i < spec.size(); ++i)
    for (int j : spec.members[static_cast<std::size_t>(i)])
      if (j != i) out << unit_ids[static_cast<std::size_t>(i)] << ',' << unit_ids[static_cast<std::size_t>(j)] << '\n';
}

NeighborhoodSpec load_neighbors(const fs::path& file, const std::vector<std::string>& unit_ids) {
  const CsvTable t = read_csv(file);
  const int uc = t.column("unit_id");
  const int nc = t.column("neighbor_id");
  const auto ui = index_of(unit_ids);
  std::vector<std::vector<int>> lists(unit_ids.size());
  for (const auto& row : t.rows) {
    auto a = ui.find(row[static_cast<std::size_t>(uc)]);
    auto b = ui.find(row[static_cast<std::size_t>(nc)]);
    if (a == ui.end() || b == ui.end()) {
      throw Error(ErrorKind::InvalidArgument, t.name + ": unknown unit in neighbor pair");
    }
    lists[static_cast<std::size_t>(a->second)].push_back(b->second);
  }
  return explicit_neighborhoods(std::move(lists));
}

}  // namespace fcausal
