#include "bop/prices.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "bop/errors.hpp"

namespace bop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(const std::string& source, long line, const std::string& what) {
  throw DataError(source + " line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& s, const std::string& source, long line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(source, line, "bad number '" + s + "'");
  }
  return v;
}

// Calls row(fields, line) for every data line after checking the header.
template <typename F>
void read_csv(std::istream& is, const std::string& source, const std::vector<std::string>& header,
              F&& row) {
  std::string line;
  long number = 0;
  bool seen_header = false;
  while (std::getline(is, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (!seen_header) {
      if (fields != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        fail(source, number, "expected header '" + want + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      fail(source, number, "expected " + std::to_string(header.size()) + " fields");
    }
    if (!is_iso_date(fields[0])) fail(source, number, "bad date '" + fields[0] + "'");
    row(fields, number);
  }
  if (!seen_header) fail(source, number, "missing header");
}

std::vector<LevelRow> read_series(std::istream& is, const std::string& source, const char* column,
                                  bool positive) {
  std::vector<LevelRow> out;
  read_csv(is, source, {"date", column}, [&](const std::vector<std::string>& f, long line) {
    const double v = parse_number(f[1], source, line);
    if (positive && !(v > 0.0)) fail(source, line, "level must be positive");
    out.push_back({f[0], v});
  });
  return out;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

// Sorted by date; duplicates rejected.
std::map<std::string, double> by_date(const std::vector<LevelRow>& rows, const std::string& what) {
  std::map<std::string, double> out;
  for (const auto& r : rows) {
    if (!out.emplace(r.date, r.value).second) throw DataError(what + ": duplicate date " + r.date);
  }
  return out;
}

}  // namespace

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int y = std::stoi(s.substr(0, 4));
  const int m = std::stoi(s.substr(5, 2));
  const int d = std::stoi(s.substr(8, 2));
  if (m < 1 || m > 12 || d < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return d <= kDays[m - 1] + (m == 2 && leap ? 1 : 0);
}

std::vector<PriceRow> read_price_csv(std::istream& is, const std::string& source) {
  std::vector<PriceRow> out;
  read_csv(is, source, {"date", "ticker", "adj_close"},
           [&](const std::vector<std::string>& f, long line) {
             if (f[1].empty()) fail(source, line, "empty ticker");
             const double v = parse_number(f[2], source, line);
             if (!(v > 0.0)) fail(source, line, "price must be positive");
             out.push_back({f[0], f[1], v});
           });
  return out;
}

std::vector<LevelRow> read_level_csv(std::istream& is, const std::string& source) {
  return read_series(is, source, "level", true);
}

std::vector<LevelRow> read_rate_csv(std::istream& is, const std::string& source) {
  return read_series(is, source, "rate", false);
}

std::vector<PriceRow> read_price_file(const std::string& path) {
  auto in = open(path);
  return read_price_csv(in, path);
}

std::vector<LevelRow> read_level_file(const std::string& path) {
  auto in = open(path);
  return read_level_csv(in, path);
}

std::vector<LevelRow> read_rate_file(const std::string& path) {
  auto in = open(path);
  return read_rate_csv(in, path);
}

void PricePanel::validate() const {
  const Eigen::Index n = days();
  if (n == 0) throw DataError("price panel: no dates");
  for (Eigen::Index t = 1; t < n; ++t) {
    if (!(dates[t - 1] < dates[t])) throw DataError("price panel: dates not strictly increasing at " + dates[t]);
  }
  if (adjusted_close.rows() != n || adjusted_close.cols() != assets()) {
    throw DataError("price panel: price matrix shape mismatch");
  }
  if (benchmark.size() != n || risk_free.size() != n) throw DataError("price panel: series length mismatch");
  for (const auto& f : factor_series) {
    if (f.size() != n) throw DataError("price panel: factor length mismatch");
    if (!(f.array() > 0.0).all()) throw DataError("price panel: factor levels must be positive");
  }
  if (!(benchmark.array() > 0.0).all()) throw DataError("price panel: benchmark levels must be positive");
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < assets(); ++j) {
      const double v = adjusted_close(t, j);
      if (!std::isnan(v) && !(v > 0.0)) throw DataError("price panel: non-positive price");
    }
  }
}

PricePanel PricePanel::truncated(const std::string& last_date) const {
  const auto end = std::upper_bound(dates.begin(), dates.end(), last_date);
  const Eigen::Index n = end - dates.begin();
  PricePanel out;
  out.dates.assign(dates.begin(), end);
  out.tickers = tickers;
  out.adjusted_close = adjusted_close.topRows(n);
  out.benchmark = benchmark.head(n);
  for (const auto& f : factor_series) out.factor_series.push_back(f.head(n));
  out.risk_free = risk_free.head(n);
  return out;
}

PricePanel assemble_panel(const std::vector<PriceRow>& prices, const std::vector<LevelRow>& benchmark,
                          const std::vector<std::vector<LevelRow>>& factors,
                          const std::vector<LevelRow>& risk_free) {
  const auto bench = by_date(benchmark, "benchmark");
  if (bench.empty()) throw DataError("benchmark: no observations");

  PricePanel panel;
  std::unordered_map<std::string, Eigen::Index> row_of;
  panel.benchmark.resize(static_cast<Eigen::Index>(bench.size()));
  for (const auto& [date, level] : bench) {
    row_of.emplace(date, static_cast<Eigen::Index>(panel.dates.size()));
    panel.benchmark[static_cast<Eigen::Index>(panel.dates.size())] = level;
    panel.dates.push_back(date);
  }
  const Eigen::Index n = panel.days();

  for (std::size_t f = 0; f < factors.size(); ++f) {
    const auto series = by_date(factors[f], "factor " + std::to_string(f + 1));
    Vector v(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto it = series.find(panel.dates[t]);
      if (it == series.end()) {
        throw DataError("factor " + std::to_string(f + 1) + ": missing date " + panel.dates[t]);
      }
      v[t] = it->second;
    }
    panel.factor_series.push_back(std::move(v));
  }

  const auto rf = by_date(risk_free, "risk_free");
  panel.risk_free = Vector::Zero(n);
  double last = 0.0;
  auto next = rf.begin();
  for (Eigen::Index t = 0; t < n; ++t) {
    while (next != rf.end() && next->first <= panel.dates[t]) last = (next++)->second;
    panel.risk_free[t] = last;
  }

  std::map<std::string, Eigen::Index> col_of;
  for (const auto& p : prices) col_of.emplace(p.ticker, 0);
  for (auto& [ticker, col] : col_of) {
    col = static_cast<Eigen::Index>(panel.tickers.size());
    panel.tickers.push_back(ticker);
  }
  panel.adjusted_close = Matrix::Constant(n, panel.assets(), kNaN);
  for (const auto& p : prices) {
    const auto it = row_of.find(p.date);
    if (it == row_of.end()) continue;
    double& cell = panel.adjusted_close(it->second, col_of[p.ticker]);
    if (!std::isnan(cell)) throw DataError("prices: duplicate row for " + p.ticker + " on " + p.date);
    cell = p.adj_close;
  }
  panel.validate();
  return panel;
}

Matrix simple_returns(const Matrix& levels) {
  Matrix r = Matrix::Constant(levels.rows(), levels.cols(), kNaN);
  for (Eigen::Index t = 1; t < levels.rows(); ++t) {
    r.row(t) = levels.row(t).array() / levels.row(t - 1).array() - 1.0;
  }
  return r;
}

Vector simple_returns(const Vector& levels) {
  Matrix m = simple_returns(Matrix(levels));
  return m.col(0);
}

}  // namespace bop
