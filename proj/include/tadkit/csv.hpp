#pragma once

// CSV ingestion and export.
//
// Wire format: UTF-8, comma-separated, header `timestamp,<ch1>,...,<chN>[,label]`.
// Timestamps are decimal seconds, labels 0/1. Empty value cells are treated
// as gaps and forward-filled (leading gaps back-filled). Doubles are written
// with shortest round-trip formatting so save -> load is lossless.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/timeseries.hpp"

namespace tadkit {

struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::string label_column = "label";
  // Empty: every non-timestamp, non-label column is a value channel.
  std::vector<std::string> value_columns;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  return cells;
}

inline double parse_double(const std::string& cell, std::size_t line_no, const std::string& what) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw Error("csv: line " + std::to_string(line_no) + ": malformed " + what + " '" + cell + "'");
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline TimeSeries load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("csv: empty file '" + path + "'");
  const auto header = detail::split_csv_line(line);

  std::ptrdiff_t ts_col = -1, label_col = -1;
  std::vector<std::size_t> value_cols;
  std::vector<std::string> value_names;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == schema.timestamp_column) {
      ts_col = static_cast<std::ptrdiff_t>(i);
    } else if (header[i] == schema.label_column) {
      label_col = static_cast<std::ptrdiff_t>(i);
    } else if (schema.value_columns.empty()) {
      value_cols.push_back(i);
      value_names.push_back(header[i]);
    }
  }
  if (!schema.value_columns.empty()) {
    for (const auto& name : schema.value_columns) {
      bool found = false;
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
          value_cols.push_back(i);
          value_names.push_back(name);
          found = true;
          break;
        }
      }
      if (!found) throw Error("csv: value column '" + name + "' not in header");
    }
  }
  if (ts_col < 0) throw Error("csv: header lacks timestamp column '" + schema.timestamp_column + "'");
  if (value_cols.empty()) throw Error("csv: no value columns in '" + path + "'");

  struct Row {
    double t;
    std::vector<std::optional<double>> vals;
    std::uint8_t label;
    std::size_t line_no;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error("csv: line " + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
    Row row;
    row.line_no = line_no;
    row.t = detail::parse_double(cells[ts_col], line_no, "timestamp");
    row.vals.reserve(value_cols.size());
    for (std::size_t vc : value_cols) {
      if (cells[vc].empty()) {
        row.vals.push_back(std::nullopt);
      } else {
        row.vals.push_back(detail::parse_double(cells[vc], line_no, "value"));
      }
    }
    row.label = 0;
    if (label_col >= 0 && !cells[label_col].empty()) {
      const double l = detail::parse_double(cells[label_col], line_no, "label");
      if (l != 0.0 && l != 1.0)
        throw Error("csv: line " + std::to_string(line_no) + ": label must be 0 or 1");
      row.label = static_cast<std::uint8_t>(l);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("csv: no data rows in '" + path + "'");

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].t == rows[i - 1].t)
      throw Error("csv: line " + std::to_string(rows[i].line_no) + ": duplicate timestamp " +
                  detail::format_double(rows[i].t));
  }

  TimeSeries series;
  series.channel_names = value_names;
  const std::size_t nc = value_cols.size();
  series.timestamps.reserve(rows.size());
  series.labels.reserve(rows.size());
  series.values.resize(rows.size() * nc);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    series.timestamps.push_back(rows[i].t);
    series.labels.push_back(rows[i].label);
  }
  // Per-channel forward fill; a leading gap borrows the first defined value.
  for (std::size_t c = 0; c < nc; ++c) {
    std::size_t first_defined = rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].vals[c].has_value()) {
        first_defined = i;
        break;
      }
    }
    if (first_defined == rows.size())
      throw Error("csv: channel '" + value_names[c] + "' has no values");
    double last = *rows[first_defined].vals[c];
    for (std::size_t i = 0; i < first_defined; ++i) series.at(i, c) = last;
    for (std::size_t i = first_defined; i < rows.size(); ++i) {
      if (rows[i].vals[c].has_value()) last = *rows[i].vals[c];
      series.at(i, c) = last;
    }
  }
  series.validate();
  return series;
}

inline void save_csv(const TimeSeries& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("csv: cannot write '" + path + "'");
  out << "timestamp";
  for (const auto& name : series.channel_names) out << ',' << name;
  out << ",label\n";
  for (std::size_t i = 0; i < series.n_points(); ++i) {
    out << detail::format_double(series.timestamps[i]);
    for (std::size_t c = 0; c < series.n_channels(); ++c)
      out << ',' << detail::format_double(series.at(i, c));
    out << ',' << static_cast<int>(series.labels[i]) << '\n';
  }
  if (!out) throw Error("csv: write failed for '" + path + "'");
}

}  // namespace tadkit
