#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/errors.hpp"

namespace hetreg {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& cell, std::size_t file_row, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("cannot parse '" + cell + "' as a number (row " +
                    std::to_string(file_row) + ", column '" + column + "')");
  }
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("file '" + path + "' is empty");
  std::vector<std::string> header = split_line(line);

  std::unordered_map<std::string, int> column_of;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (column_of.count(header[i])) {
      throw DataError("duplicate column '" + header[i] + "' in '" + path + "'");
    }
    column_of[header[i]] = static_cast<int>(i);
  }

  auto require = [&](const std::string& name) {
    auto it = column_of.find(name);
    if (it == column_of.end()) {
      throw DataError("column '" + name + "' not found in '" + path + "'");
    }
    return it->second;
  };

  int agent_col = require(schema.agent_column);
  int decision_col = require(schema.decision_column);
  if (agent_col == decision_col) {
    throw DataError("agent and decision columns must differ");
  }

  std::vector<std::string> feature_names;
  std::vector<int> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      int col = static_cast<int>(i);
      if (col != agent_col && col != decision_col) {
        feature_names.push_back(header[i]);
        feature_cols.push_back(col);
      }
    }
  } else {
    for (const std::string& name : schema.feature_columns) {
      int col = require(name);
      if (col == agent_col || col == decision_col) {
        throw DataError("column '" + name + "' is already used as agent or decision");
      }
      feature_names.push_back(name);
      feature_cols.push_back(col);
    }
  }

  Dataset d;
  d.feature_names = feature_names;
  std::unordered_map<std::string, int> agent_of;
  std::vector<double> values;

  std::size_t file_row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++file_row;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(file_row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }

    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      values.push_back(parse_double(fields[feature_cols[j]], file_row, feature_names[j]));
    }

    double y = parse_double(fields[decision_col], file_row, schema.decision_column);
    if (y != 0.0 && y != 1.0) {
      throw DataError("decision must be 0 or 1, got '" + fields[decision_col] +
                      "' (row " + std::to_string(file_row) + ")");
    }
    d.decisions.push_back(static_cast<std::uint8_t>(y));

    const std::string& agent = fields[agent_col];
    auto [it, inserted] = agent_of.try_emplace(agent, static_cast<int>(d.agent_names.size()));
    if (inserted) d.agent_names.push_back(agent);
    d.agent_index.push_back(it->second);
  }

  if (d.decisions.empty()) throw DataError("file '" + path + "' has no data rows");

  d.features.rows = d.decisions.size();
  d.features.cols = feature_names.size();
  d.features.data = std::move(values);
  validate_dataset(d);
  return d;
}

void write_csv(const std::string& path, const Dataset& d, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file '" + path + "' for writing");

  for (const std::string& name : d.feature_names) out << name << ',';
  out << schema.agent_column << ',' << schema.decision_column << '\n';

  char buf[64];
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    for (std::size_t c = 0; c < d.n_features(); ++c) {
      // Shortest representation that round-trips exactly.
      auto res = std::to_chars(buf, buf + sizeof(buf), d.features.at(r, c));
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << d.agent_names[static_cast<std::size_t>(d.agent_index[r])] << ','
        << static_cast<int>(d.decisions[r]) << '\n';
  }
  if (!out) throw DataError("failed while writing '" + path + "'");
}

}  // namespace hetreg
