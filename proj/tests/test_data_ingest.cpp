// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/data_ingest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"

using namespace mktdiff;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/mktdiff_test_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_prices parses a small table") {
  const auto path = write_temp("prices_ok.csv",
                               "date,A,B\n"
                               "2020-01-02,100,50\n"
                               "2020-01-03,110,51\n"
                               "2020-01-06,99,49.5\n");
  const PriceTable pt = load_prices(path);
  CHECK(pt.rows() == 3);
  CHECK(pt.cols() == 2);
  CHECK(pt.tickers[0] == "A");
  CHECK(pt.at(1, 0) == 110.0);
  std::remove(path.c_str());
}

TEST_CASE("load_prices rejects bad input with location info") {
  const auto zero = write_temp("prices_zero.csv",
                               "date,A\n2020-01-02,100\n2020-01-03,0.0\n");
  CHECK_THROWS_WITH_AS(load_prices(zero), doctest::Contains("non-positive"),
                       DataError);

  const auto text = write_temp("prices_text.csv",
                               "date,A\n2020-01-02,100\n2020-01-03,oops\n");
  CHECK_THROWS_WITH_AS(load_prices(text), doctest::Contains("non-numeric"),
                       DataError);

  const auto dup = write_temp("prices_dup.csv",
                              "date,A\n2020-01-02,100\n2020-01-02,101\n");
  CHECK_THROWS_WITH_AS(load_prices(dup), doctest::Contains("duplicate"),
                       DataError);

  CHECK_THROWS_AS(load_prices("/nonexistent/prices.csv"), DataError);
  std::remove(zero.c_str());
  std::remove(text.c_str());
  std::remove(dup.c_str());
}

TEST_CASE("load_prices sorts rows and honors RFC-4180 quoting") {
  const auto path = write_temp("prices_unsorted.csv",
                               "date,\"T,X\"\n"
                               "2020-01-03,110\n"
                               "2020-01-02,100\n");
  const PriceTable pt = load_prices(path);
  CHECK(pt.tickers[0] == "T,X");
  CHECK(pt.dates.front() == "2020-01-02");
  CHECK(pt.at(0, 0) == 100.0);
  std::remove(path.c_str());
}

TEST_CASE("to_returns implements the simple-return definition") {
  PriceTable pt;
  pt.tickers = {"A"};
  pt.dates = {"d1", "d2", "d3"};
  pt.prices = {100.0, 110.0, 99.0};
  const ReturnsDataset ds = to_returns(pt);
  CHECK(ds.n() == 2);
  CHECK(ds.at(0, 0) == doctest::Approx(0.10).epsilon(1e-14));
  CHECK(ds.at(1, 0) == doctest::Approx(-0.10).epsilon(1e-14));

  PriceTable flat;
  flat.tickers = {"A"};
  flat.dates = {"d1", "d2", "d3"};
  flat.prices = {42.0, 42.0, 42.0};
  for (double r : to_returns(flat).returns) CHECK(r == 0.0);
}

TEST_CASE("returns reconstruct the price table") {
  PriceTable pt;
  pt.tickers = {"A", "B"};
  pt.dates = {"d1", "d2", "d3", "d4"};
  pt.prices = {100, 50, 103.5, 48.75, 101.2, 51.3, 99.9, 52.0};
  const ReturnsDataset ds = to_returns(pt);
  for (int k = 0; k < 2; ++k) {
    double price = pt.at(0, k);
    for (int i = 0; i < ds.n(); ++i) {
      price *= 1.0 + ds.at(i, k);
      CHECK(price == doctest::Approx(pt.at(i + 1, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("select_window slices exactly") {
  ReturnsDataset ds;
  ds.tickers = {"A"};
  for (int i = 0; i < 10; ++i) {
    ds.dates.push_back("d" + std::to_string(i));
    ds.returns.push_back(0.01 * i);
  }
  const ReturnsDataset win = select_window(ds, 3, 4);
  CHECK(win.n() == 4);
  for (int i = 0; i < 4; ++i) CHECK(win.at(i, 0) == ds.at(3 + i, 0));

  const ReturnsDataset all = select_window(ds, 0, 10);
  CHECK(all.returns == ds.returns);

  CHECK_THROWS_AS(select_window(ds, 8, 5), std::out_of_range);
}

TEST_CASE("returns csv round-trips") {
  ReturnsDataset ds;
  ds.tickers = {"A", "B"};
  ds.dates = {"2020-01-03", "2020-01-06"};
  ds.returns = {0.1, -0.02, 0.003, 0.0004};
  const auto path = write_temp("returns_rt.csv", "");
  write_returns_csv(path, ds);
  const ReturnsDataset back = read_returns_csv(path);
  CHECK(back.tickers == ds.tickers);
  CHECK(back.dates == ds.dates);
  REQUIRE(back.returns.size() == ds.returns.size());
  for (std::size_t i = 0; i < ds.returns.size(); ++i)
    CHECK(back.returns[i] == ds.returns[i]);
  std::remove(path.c_str());
}
