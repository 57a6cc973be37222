#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bop/linalg.hpp"

namespace bop {

struct PriceRow {
  std::string date;
  std::string ticker;
  double adj_close = 0.0;
};

struct LevelRow {
  std::string date;
  double value = 0.0;
};

// Readers throw DataError naming the source and 1-based line number.
std::vector<PriceRow> read_price_csv(std::istream& is, const std::string& source = "prices");
std::vector<LevelRow> read_level_csv(std::istream& is, const std::string& source = "levels");
// Header date,rate; rate is a daily decimal rate.
std::vector<LevelRow> read_rate_csv(std::istream& is, const std::string& source = "risk_free");

std::vector<PriceRow> read_price_file(const std::string& path);
std::vector<LevelRow> read_level_file(const std::string& path);
std::vector<LevelRow> read_rate_file(const std::string& path);

// True for a valid ISO-8601 calendar date YYYY-MM-DD.
bool is_iso_date(const std::string& s);

// Daily price panel on the benchmark calendar. Missing prices are NaN.
struct PricePanel {
  std::vector<std::string> dates;
  std::vector<std::string> tickers;
  Matrix adjusted_close;  // days x assets
  Vector benchmark;
  std::vector<Vector> factor_series;
  Vector risk_free;  // daily rate per date

  Eigen::Index days() const { return static_cast<Eigen::Index>(dates.size()); }
  Eigen::Index assets() const { return static_cast<Eigen::Index>(tickers.size()); }
  // Throws DataError on any broken invariant.
  void validate() const;
  // Copy holding only the rows dated on or before last_date.
  PricePanel truncated(const std::string& last_date) const;
};

// Builds a panel on the benchmark calendar with tickers sorted. Prices on
// dates outside the calendar are dropped. Each factor must cover every
// calendar date. Risk-free gaps carry the last known rate forward (0 before
// the first observation).
PricePanel assemble_panel(const std::vector<PriceRow>& prices, const std::vector<LevelRow>& benchmark,
                          const std::vector<std::vector<LevelRow>>& factors = {},
                          const std::vector<LevelRow>& risk_free = {});

// Simple return at row t from row t-1; NaN where either price is missing.
// Row 0 is NaN.
Matrix simple_returns(const Matrix& levels);
Vector simple_returns(const Vector& levels);

}  // namespace bop
