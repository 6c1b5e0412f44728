#ifndef SCOS_TYPES_HPP
#define SCOS_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scos {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Orthonormal column bases of the input views, one N x M_k block each.
using ViewList = std::vector<Matrix>;

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  LengthMismatch,
  RankDeficient,
  InfeasibleConfig,
  EmptyCluster,
  NonFiniteValue,
  MissingGroundTruth,
  FileNotFound,
  FormatError,
  ShapeMismatch,
  IoError,
  Internal,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) raise(code, message);
}

}  // namespace scos

#endif
