#pragma once

#include <mutex>
#include <optional>

#include "mkv/common.hpp"

namespace mkv {

enum class ScheduleKind { power_law, constant, table };

/// Deterministic step-size sequence (gamma_k)_{k>=1}.
/// power_law: gamma_k = gamma0 * k^-a with a in (0,1], so gamma_k -> 0 and
/// the partial sums diverge. constant: gamma_k = gamma0. table: explicit
/// finite list, exhausted indices are an error.
class StepSchedule {
 public:
  static StepSchedule power_law(double gamma0, double exponent);
  static StepSchedule constant(double gamma0);
  static StepSchedule table(std::vector<double> steps);

  double gamma(std::size_t k) const;  // k >= 1

  ScheduleKind kind() const { return kind_; }
  double gamma0() const { return gamma0_; }
  double exponent() const { return exponent_; }
  const std::vector<double>& steps() const { return table_; }
  bool divergent() const { return kind_ != ScheduleKind::table; }
  std::string describe() const;

 private:
  StepSchedule() = default;
  ScheduleKind kind_ = ScheduleKind::constant;
  double gamma0_ = 0.0;
  double exponent_ = 0.0;
  std::vector<double> table_;
};

/// Algorithmic time tau_k = sum_{j<=k} gamma_j, accumulated with compensated
/// summation so million-step grids stay accurate. The prefix cache grows on
/// demand behind a mutex; cached values never change.
class TimeGrid {
 public:
  explicit TimeGrid(StepSchedule schedule);

  double tau(std::size_t k) const;

  /// k_of_t(t) = inf{k : tau_k >= t} for t > 0, and 0 for t = 0 (the k=0
  /// boundary is the initial state by convention).
  std::size_t k_of_t(double t) const;

  const StepSchedule& schedule() const { return schedule_; }

 private:
  void extend(std::size_t k) const;

  StepSchedule schedule_;
  mutable std::vector<double> taus_;  // taus_[k] = tau_k, taus_[0] = 0
  mutable std::vector<double> comp_;  // Kahan carry after step k
  mutable std::mutex mutex_;
};

}  // namespace mkv
