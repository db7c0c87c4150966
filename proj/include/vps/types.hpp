#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace vps {

/// Largest supported torus dimension m. States on T x T^m carry 1 + m entries.
inline constexpr int kMaxDim = 7;

/// Small fixed-capacity vectors and matrices; never touch the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim + 1, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim + 1, kMaxDim + 1>;

enum class ErrorKind {
  InvalidPoint,
  DimensionMismatch,
  Resource,
  InvalidMap,
  UnsupportedIsotopy,
  InvalidField,
  Domain,
  BlowUp,
  NoReturn,
  Precondition,
  Inversion,
  ConstructionFailure,
  Schema,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string stage = {})
      : std::runtime_error(what), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Pipeline stage that raised the error ("normalize", "transport", "density", ...), may be empty.
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(kind_, what(), std::move(stage)); }

 private:
  ErrorKind kind_;
  std::string stage_;
};

}  // namespace vps
