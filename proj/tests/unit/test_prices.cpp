#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bop/errors.hpp"
#include "bop/prices.hpp"

using namespace bop;

TEST_CASE("price CSV parsing") {
  std::istringstream good("date,ticker,adj_close\n2020-01-02,B,10.5\r\n\n2020-01-02,A,20\n");
  const auto rows = read_price_csv(good);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ticker == "B");
  CHECK(rows[0].adj_close == 10.5);

  std::istringstream bad_date("date,ticker,adj_close\n2020-01-02,A,1\n2020-13-02,A,1\n");
  try {
    read_price_csv(bad_date, "p.csv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("p.csv line 3") != std::string::npos);
  }

  std::istringstream bad_header("date,symbol,adj_close\n");
  CHECK_THROWS_AS(read_price_csv(bad_header), DataError);
  std::istringstream bad_number("date,ticker,adj_close\n2020-01-02,A,1e\n");
  CHECK_THROWS_AS(read_price_csv(bad_number), DataError);
  std::istringstream negative("date,ticker,adj_close\n2020-01-02,A,-1\n");
  CHECK_THROWS_AS(read_price_csv(negative), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_price_csv(empty), DataError);

  std::istringstream rate("date,rate\n2020-01-02,-0.0001\n");
  CHECK(read_rate_csv(rate).front().value == -0.0001);
  std::istringstream level("date,level\n2020-01-02,0\n");
  CHECK_THROWS_AS(read_level_csv(level), DataError);
  CHECK_THROWS_AS(read_price_file("/nonexistent/prices.csv"), DataError);
}

TEST_CASE("ISO dates") {
  CHECK(is_iso_date("2020-02-29"));
  CHECK_FALSE(is_iso_date("2019-02-29"));
  CHECK_FALSE(is_iso_date("1900-02-29"));
  CHECK(is_iso_date("2000-02-29"));
  CHECK_FALSE(is_iso_date("2020-04-31"));
  CHECK_FALSE(is_iso_date("2020/01/01"));
  CHECK_FALSE(is_iso_date("20-01-01"));
}

TEST_CASE("assemble_panel aligns everything on the benchmark calendar") {
  const std::vector<PriceRow> prices{{"2020-01-03", "ZZ", 2.0}, {"2020-01-02", "ZZ", 1.0},
                                     {"2020-01-03", "AA", 5.0}, {"2020-01-04", "AA", 9.0}};
  const std::vector<LevelRow> bench{{"2020-01-03", 101.0}, {"2020-01-02", 100.0}};
  const std::vector<LevelRow> factor{{"2020-01-02", 7.0}, {"2020-01-03", 8.0}};
  const std::vector<LevelRow> rf{{"2020-01-03", 0.001}};
  const auto panel = assemble_panel(prices, bench, {factor}, rf);

  CHECK(panel.dates == std::vector<std::string>{"2020-01-02", "2020-01-03"});
  CHECK(panel.tickers == std::vector<std::string>{"AA", "ZZ"});
  CHECK(std::isnan(panel.adjusted_close(0, 0)));
  CHECK(panel.adjusted_close(1, 0) == 5.0);
  CHECK(panel.adjusted_close(0, 1) == 1.0);
  CHECK(panel.risk_free[0] == 0.0);
  CHECK(panel.risk_free[1] == 0.001);
  CHECK(panel.factor_series.at(0)[1] == 8.0);

  const Matrix r = simple_returns(panel.adjusted_close);
  CHECK(std::isnan(r(0, 1)));
  CHECK(std::isnan(r(1, 0)));
  CHECK(r(1, 1) == 1.0);

  const auto cut = panel.truncated("2020-01-02");
  CHECK(cut.days() == 1);
  CHECK(cut.benchmark.size() == 1);
  CHECK(cut.factor_series.at(0).size() == 1);

  const std::vector<LevelRow> short_factor{{"2020-01-02", 7.0}};
  CHECK_THROWS_AS(assemble_panel(prices, bench, {short_factor}), DataError);
  auto dup = prices;
  dup.push_back({"2020-01-02", "ZZ", 1.5});
  CHECK_THROWS_AS(assemble_panel(dup, bench), DataError);
  auto dup_bench = bench;
  dup_bench.push_back({"2020-01-02", 99.0});
  CHECK_THROWS_AS(assemble_panel(prices, dup_bench), DataError);
}
