// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_DATA_INGEST_HPP
#define MKTDIFF_DATA_INGEST_HPP

/**
 * @file data_ingest.hpp
 * @brief Price CSV loading, simple-return conversion, and window slicing.
 *
 * Input CSV: header `date,<ticker1>,...,<tickerd>`, RFC-4180 quoting, UTF-8.
 * Dates are opaque labels once parsed; rows are sorted by date string, so
 * ISO-8601 style dates are expected.  Missing cells are rejected rather than
 * imputed.
 */

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mktdiff {

/// Errors attributable to user-supplied data files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raw daily closing prices: T x d, strictly positive.
struct PriceTable {
  std::vector<std::string> dates;    // T, strictly increasing
  std::vector<std::string> tickers;  // d
  std::vector<double> prices;        // T x d row-major

  int rows() const { return static_cast<int>(dates.size()); }
  int cols() const { return static_cast<int>(tickers.size()); }
  double at(int t, int k) const {
    return prices[static_cast<std::size_t>(t) * tickers.size() + k];
  }
};

/// The training set: n x d simple returns with labels.
struct ReturnsDataset {
  std::vector<std::string> tickers;  // d
  std::vector<std::string> dates;    // n
  std::vector<double> returns;       // n x d row-major

  int n() const { return static_cast<int>(dates.size()); }
  int d() const { return static_cast<int>(tickers.size()); }
  double at(int i, int k) const {
    return returns[static_cast<std::size_t>(i) * tickers.size() + k];
  }
  std::span<const double> row(int i) const {
    return {returns.data() + static_cast<std::size_t>(i) * tickers.size(),
            tickers.size()};
  }
};

/// Parse a price CSV.  Throws DataError with row/column location on missing
/// file, non-numeric cell, non-positive price, or duplicate date.
PriceTable load_prices(const std::string& path);

/// returns[i][k] = (prices[i+1][k] - prices[i][k]) / prices[i][k]; n = T-1.
/// Log returns are available behind the flag but are never the default.
ReturnsDataset to_returns(const PriceTable& pt, bool log_returns = false);

/// Contiguous row slice [start, start+length).
ReturnsDataset select_window(const ReturnsDataset& ds, int start, int length);

void write_returns_csv(const std::string& path, const ReturnsDataset& ds);
ReturnsDataset read_returns_csv(const std::string& path);

/// One RFC-4180 record (used by the scenario CSV reader as well).
std::vector<std::string> parse_csv_record(const std::string& line);

}  // namespace mktdiff

#endif  // MKTDIFF_DATA_INGEST_HPP
