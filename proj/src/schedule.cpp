#include "mkv/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mkv {

StepSchedule StepSchedule::power_law(double gamma0, double exponent) {
  if (!(gamma0 > 0.0)) throw Error(cat("power_law schedule needs gamma0 > 0, got ", gamma0));
  if (!(exponent > 0.0 && exponent <= 1.0))
    throw Error(cat("power_law exponent must lie in (0,1] so the partial sums diverge, got ",
                    exponent));
  StepSchedule s;
  s.kind_ = ScheduleKind::power_law;
  s.gamma0_ = gamma0;
  s.exponent_ = exponent;
  return s;
}

StepSchedule StepSchedule::constant(double gamma0) {
  if (!(gamma0 > 0.0)) throw Error(cat("constant schedule needs gamma0 > 0, got ", gamma0));
  StepSchedule s;
  s.kind_ = ScheduleKind::constant;
  s.gamma0_ = gamma0;
  return s;
}

StepSchedule StepSchedule::table(std::vector<double> steps) {
  if (steps.empty()) throw Error("table schedule needs at least one step");
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (!(steps[i] > 0.0) || !std::isfinite(steps[i]))
      throw Error(cat("table schedule entry ", i + 1, " must be a positive real, got ", steps[i]));
  StepSchedule s;
  s.kind_ = ScheduleKind::table;
  s.table_ = std::move(steps);
  s.gamma0_ = s.table_.front();
  return s;
}

double StepSchedule::gamma(std::size_t k) const {
  if (k == 0) throw IndexError("gamma is defined for k >= 1");
  switch (kind_) {
    case ScheduleKind::power_law:
      return gamma0_ * std::pow(static_cast<double>(k), -exponent_);
    case ScheduleKind::constant:
      return gamma0_;
    case ScheduleKind::table:
      if (k > table_.size())
        throw IndexError(cat("table schedule exhausted: k=", k, " > ", table_.size(), " entries"));
      return table_[k - 1];
  }
  throw Error("unreachable");
}

std::string StepSchedule::describe() const {
  switch (kind_) {
    case ScheduleKind::power_law:
      return cat("power_law(gamma0=", gamma0_, ", a=", exponent_, ")");
    case ScheduleKind::constant:
      return cat("constant(gamma0=", gamma0_, ")");
    case ScheduleKind::table:
      return cat("table(", table_.size(), " entries)");
  }
  return "?";
}

TimeGrid::TimeGrid(StepSchedule schedule) : schedule_(std::move(schedule)) {
  taus_.push_back(0.0);
  comp_.push_back(0.0);
}

void TimeGrid::extend(std::size_t k) const {
  // caller holds mutex_
  while (taus_.size() <= k) {
    const std::size_t j = taus_.size();  // next step index
    const double g = schedule_.gamma(j);
    // Kahan update of the running sum
    const double sum = taus_.back();
    const double y = g - comp_.back();
    const double t = sum + y;
    taus_.push_back(t);
    comp_.push_back((t - sum) - y);
  }
}

double TimeGrid::tau(std::size_t k) const {
  std::lock_guard<std::mutex> lock(mutex_);
  extend(k);
  return taus_[k];
}

std::size_t TimeGrid::k_of_t(double t) const {
  if (!(t >= 0.0)) throw Error(cat("k_of_t needs t >= 0, got ", t));
  if (t == 0.0) return 0;  // boundary convention
  std::lock_guard<std::mutex> lock(mutex_);
  while (taus_.back() < t) {
    std::size_t target = 2 * taus_.size();
    if (schedule_.kind() == ScheduleKind::table) {
      const std::size_t last = schedule_.steps().size();
      if (taus_.size() > last)
        throw UnreachableTimeError(
            cat("table schedule sums to ", taus_.back(), " and never reaches t=", t));
      target = std::min(target, last);
    }
    extend(target);
  }
  auto it = std::lower_bound(taus_.begin(), taus_.end(), t);
  return static_cast<std::size_t>(it - taus_.begin());
}

}  // namespace mkv
