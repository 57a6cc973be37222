#pragma once

#include <stdexcept>
#include <string>

namespace bop {

// Failure categories. Each maps onto one CLI exit code (see exit_code()).
enum class ErrorKind {
  RankDeficient,
  WeightSum,
  IntegrationFailure,
  NumericalRange,
  Infeasible,
  InsufficientDraws,
  InsufficientAssets,
  InsufficientData,
  NonConvergence,
  Config,
  Data,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct RankDeficient : Error {
  explicit RankDeficient(const std::string& w) : Error(ErrorKind::RankDeficient, w) {}
};
struct WeightSum : Error {
  explicit WeightSum(const std::string& w) : Error(ErrorKind::WeightSum, w) {}
};
struct IntegrationFailure : Error {
  explicit IntegrationFailure(const std::string& w)
      : Error(ErrorKind::IntegrationFailure, w) {}
};
struct NumericalRange : Error {
  explicit NumericalRange(const std::string& w) : Error(ErrorKind::NumericalRange, w) {}
};
struct Infeasible : Error {
  explicit Infeasible(const std::string& w) : Error(ErrorKind::Infeasible, w) {}
};
struct InsufficientDraws : Error {
  explicit InsufficientDraws(const std::string& w)
      : Error(ErrorKind::InsufficientDraws, w) {}
};
struct InsufficientAssets : Error {
  explicit InsufficientAssets(const std::string& w)
      : Error(ErrorKind::InsufficientAssets, w) {}
};
struct InsufficientData : Error {
  explicit InsufficientData(const std::string& w) : Error(ErrorKind::InsufficientData, w) {}
};
struct NonConvergence : Error {
  explicit NonConvergence(const std::string& w) : Error(ErrorKind::NonConvergence, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::Data, w) {}
};

// 2 config, 3 data, 4 numerical.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Data:
    case ErrorKind::InsufficientData:
    case ErrorKind::InsufficientAssets:
      return 3;
    default:
      return 4;
  }
}

}  // namespace bop
