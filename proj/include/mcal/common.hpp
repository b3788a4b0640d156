#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mcal {

using Index = Eigen::Index;

// Observed class label. Binary problems use {+1, -1}; multiclass problems use
// 1..n_classes.
using Label = int;

// Thrown when an iterative solver stops before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace mcal
