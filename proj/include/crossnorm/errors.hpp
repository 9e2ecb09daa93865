#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace crossnorm {

/// Input outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Requested evaluation route is not available for the given inputs.
class capability_error : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Iterative solver hit its cap. Carries the best iterate seen.
class convergence_error : public std::runtime_error {
  public:
    convergence_error(const std::string& what, std::vector<double> best_point,
                      double best_value)
        : std::runtime_error(what), best_point_(std::move(best_point)),
          best_value_(best_value) {}

    const std::vector<double>& best_point() const noexcept { return best_point_; }
    double best_value() const noexcept { return best_value_; }

  private:
    std::vector<double> best_point_;
    double best_value_;
};

/// A sign-change search found no bracket in its search interval.
class detection_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace crossnorm
