// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/data_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mktdiff {

std::vector<std::string> parse_csv_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch == '\r' && i + 1 == line.size()) {
      // trailing CR from CRLF files
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

namespace {

double parse_number(const std::string& field, int row, int col) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  while (ptr != last && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
  if (ec != std::errc{} || ptr != last)
    throw DataError("non-numeric cell '" + field + "' at row " +
                    std::to_string(row) + ", column " + std::to_string(col));
  return value;
}

}  // namespace

PriceTable load_prices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open price file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty price file: " + path);
  std::vector<std::string> header = parse_csv_record(line);
  if (header.size() < 2 || header[0] != "date")
    throw DataError("expected header 'date,<tickers...>' in " + path);

  PriceTable pt;
  pt.tickers.assign(header.begin() + 1, header.end());
  const std::size_t d = pt.tickers.size();

  std::vector<std::pair<std::string, std::vector<double>>> rows;
  int row_no = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::vector<std::string> f = parse_csv_record(line);
    if (f.size() != d + 1)
      throw DataError("row " + std::to_string(row_no) + " has " +
                      std::to_string(f.size()) + " fields, expected " +
                      std::to_string(d + 1));
    std::vector<double> vals(d);
    for (std::size_t k = 0; k < d; ++k) {
      vals[k] = parse_number(f[k + 1], row_no, static_cast<int>(k + 2));
      if (!(vals[k] > 0.0) || !std::isfinite(vals[k]))
        throw DataError("non-positive price at row " + std::to_string(row_no) +
                        ", column " + std::to_string(k + 2));
    }
    rows.emplace_back(std::move(f[0]), std::move(vals));
  }
  if (rows.size() < 2)
    throw DataError("price table needs at least 2 rows, got " +
                    std::to_string(rows.size()));

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].first == rows[i - 1].first)
      throw DataError("duplicate date '" + rows[i].first + "'");

  pt.dates.reserve(rows.size());
  pt.prices.reserve(rows.size() * d);
  for (auto& [date, vals] : rows) {
    pt.dates.push_back(std::move(date));
    pt.prices.insert(pt.prices.end(), vals.begin(), vals.end());
  }
  return pt;
}

ReturnsDataset to_returns(const PriceTable& pt, bool log_returns) {
  const int T = pt.rows();
  const int d = pt.cols();
  ReturnsDataset ds;
  ds.tickers = pt.tickers;
  ds.dates.assign(pt.dates.begin() + 1, pt.dates.end());
  ds.returns.resize(static_cast<std::size_t>(T - 1) * d);
  for (int i = 0; i + 1 < T; ++i)
    for (int k = 0; k < d; ++k) {
      const double prev = pt.at(i, k);
      const double next = pt.at(i + 1, k);
      ds.returns[static_cast<std::size_t>(i) * d + k] =
          log_returns ? std::log(next / prev) : (next - prev) / prev;
    }
  return ds;
}

ReturnsDataset select_window(const ReturnsDataset& ds, int start, int length) {
  if (start < 0 || length < 0 || start + length > ds.n())
    throw std::out_of_range("select_window: [" + std::to_string(start) + ", " +
                            std::to_string(start + length) +
                            ") outside dataset of n = " +
                            std::to_string(ds.n()));
  ReturnsDataset out;
  out.tickers = ds.tickers;
  out.dates.assign(ds.dates.begin() + start, ds.dates.begin() + start + length);
  const std::size_t d = ds.tickers.size();
  out.returns.assign(ds.returns.begin() + static_cast<std::size_t>(start) * d,
                     ds.returns.begin() +
                         static_cast<std::size_t>(start + length) * d);
  return out;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += '"';
  return out;
}

}  // namespace

void write_returns_csv(const std::string& path, const ReturnsDataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << "date";
  for (const auto& t : ds.tickers) out << ',' << csv_escape(t);
  out << '\n';
  out.precision(17);
  for (int i = 0; i < ds.n(); ++i) {
    out << csv_escape(ds.dates[i]);
    for (int k = 0; k < ds.d(); ++k) out << ',' << ds.at(i, k);
    out << '\n';
  }
}

ReturnsDataset read_returns_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open returns file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty returns file: " + path);
  std::vector<std::string> header = parse_csv_record(line);
  if (header.size() < 2 || header[0] != "date")
    throw DataError("expected header 'date,<tickers...>' in " + path);

  ReturnsDataset ds;
  ds.tickers.assign(header.begin() + 1, header.end());
  const std::size_t d = ds.tickers.size();
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::vector<std::string> f = parse_csv_record(line);
    if (f.size() != d + 1)
      throw DataError("row " + std::to_string(row_no) + " has " +
                      std::to_string(f.size()) + " fields, expected " +
                      std::to_string(d + 1));
    ds.dates.push_back(f[0]);
    for (std::size_t k = 0; k < d; ++k) {
      const double v = parse_number(f[k + 1], row_no, static_cast<int>(k + 2));
      if (!std::isfinite(v))
        throw DataError("non-finite return at row " + std::to_string(row_no));
      ds.returns.push_back(v);
    }
  }
  return ds;
}

}  // namespace mktdiff
