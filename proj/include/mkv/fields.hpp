#pragma once

#include <functional>
#include <optional>

#include "mkv/ensemble.hpp"
#include "mkv/measure.hpp"

namespace mkv {

/// Confinement potentials V: quadratic lambda*||x||^2/2 or the quartic
/// double well ||x||^4/4 - ||x||^2/2, plus a black-box escape hatch.
enum class ConfinementKind { zero, quadratic, double_well, custom };

/// Interaction potentials U (even): quadratic alpha*||x||^2/2 or the
/// attractive Gaussian kernel -exp(-||x||^2 / 2 w^2).
enum class InteractionKind { none, quadratic, gaussian_kernel, custom };

struct ScalarField {
  std::function<double(ConstSpan)> value;
  std::function<void(ConstSpan, MutSpan)> gradient;
};

class ConfinementPotential {
 public:
  static ConfinementPotential zero();
  static ConfinementPotential quadratic(double lambda);
  static ConfinementPotential double_well();
  static ConfinementPotential custom(ScalarField f);

  double operator()(ConstSpan x) const;
  void gradient(ConstSpan x, MutSpan out) const;

  ConfinementKind kind() const { return kind_; }
  double lambda() const { return lambda_; }

 private:
  ConfinementKind kind_ = ConfinementKind::zero;
  double lambda_ = 0.0;
  ScalarField field_;
};

class InteractionPotential {
 public:
  static InteractionPotential none();
  static InteractionPotential quadratic(double alpha);
  static InteractionPotential gaussian_kernel(double width);
  static InteractionPotential custom(ScalarField f);  // caller guarantees evenness

  double operator()(ConstSpan x) const;
  void gradient(ConstSpan x, MutSpan out) const;

  InteractionKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double width() const { return width_; }

 private:
  InteractionKind kind_ = InteractionKind::none;
  double alpha_ = 0.0;
  double width_ = 1.0;
  ScalarField field_;
};

/// Measure-dependent drift/diffusion pair with its growth metadata:
/// ||b(x,mu)|| <= C (1 + ||x|| + int ||y|| dmu) and ||sigma|| <= bound.
struct MeanFieldModel {
  std::size_t d = 0;
  std::size_t d_prime = 0;
  std::function<void(ConstSpan, const WeightedSampleMeasure&, MutSpan)> drift;
  /// Column-major d x d_prime factor written into out.
  std::function<void(ConstSpan, const WeightedSampleMeasure&, MutSpan)> diffusion;
  double growth_constant = 0.0;
  double diffusion_bound = 0.0;
};

/// Drift -grad V(x) - grad U * mu(x) with constant scalar noise intensity.
struct GranularMediaModel {
  std::size_t d = 0;
  ConfinementPotential V;
  InteractionPotential U;
  double sigma = 0.0;
  // dissipativity / growth metadata: <x,gradV> >= lambda|x|^2 - C,
  // <x,gradU> >= -C, gradient growth C(1+|x|), Hoelder constant beta
  double lambda = 0.0;
  double C = 0.0;
  double beta = 1.0;

  MeanFieldModel as_mean_field() const;
  std::string describe() const;
};

GranularMediaModel quadratic_model(double lambda, double alpha, double sigma, std::size_t d);
GranularMediaModel double_well_model(double alpha, double sigma, std::size_t d);
GranularMediaModel gaussian_attraction_model(double lambda, double width, double sigma,
                                             std::size_t d);

/// Lexicographically sorted copy of the ensemble positions. Pairwise
/// interaction sums run in this order, which makes them exactly invariant
/// under particle relabeling.
Vec sorted_positions(const ParticleEnsemble& ensemble);

/// -grad V(x) - (1/n) sum_j grad U(x - X_j), exact pairwise sum over the
/// sorted particle order.
Vec drift_granular(const GranularMediaModel& model, ConstSpan x, const ParticleEnsemble& ensemble);

/// Same sum against an explicit sorted position buffer (n x d); the stepping
/// loop sorts once per step and reuses the buffer for every query point.
void granular_drift_into(const GranularMediaModel& model, ConstSpan x, ConstSpan sorted, MutSpan out);

/// Weighted variant used by the MeanFieldModel adapter: gradients summed in
/// atom order with their weights (quadratic kernels collapse to the mean).
void granular_drift_weighted(const GranularMediaModel& model, ConstSpan x,
                             const WeightedSampleMeasure& mu, MutSpan out);

/// C_c^2 test function with explicit gradient and Hessian. The canonical
/// family is the radial bump exp(1 - 1/(1 - ||(x-c)/r||^2)) inside the
/// support ball and 0 outside.
struct TestFunctionBundle {
  std::size_t d = 0;
  Vec center;
  double support_radius = 0.0;
  std::function<double(ConstSpan)> phi;
  std::function<void(ConstSpan, MutSpan)> grad;
  std::function<void(ConstSpan, MutSpan)> hess;  // d x d row-major

  static TestFunctionBundle radial_bump(Vec center, double radius);
  /// a*f + b*g with merged support metadata; keeps the family closed under
  /// the linear combinations the generator is tested against.
  static TestFunctionBundle combine(double a, const TestFunctionBundle& f, double b,
                                    const TestFunctionBundle& g);
};

/// L(mu)(phi)(x) = <b(x,mu), grad phi(x)> + tr(sigma^T H_phi sigma).
double generator_apply(const TestFunctionBundle& phi, ConstSpan x, const WeightedSampleMeasure& mu,
                       const MeanFieldModel& model);

struct DissipativityRow {
  double D1 = 0.0;  // int <x, b(x,mu)> dmu
  double D2 = 0.0;  // int <x, b(x,mu)> |x|^2 dmu
  double kappa2 = 0.0;
  double kappa4 = 0.0;
};

/// Probe report for the moment-drift inequalities
///   D1 <= -c k2 + C          and
///   D2 <= -c k4 + C (1+k2)(1+sqrt(k4)).
/// Constants are fitted over the probe set: C = max(0, sup positive part),
/// c = least slope compatible with that C. A probe set admitting no c > 0
/// is flagged.
struct DissipativityReport {
  std::vector<DissipativityRow> rows;
  double c1 = 0.0, C1 = 0.0;
  double c2 = 0.0, C2 = 0.0;
  bool dis1_ok = false;
  bool dis2_ok = false;
};

DissipativityReport dissipativity_probe(const GranularMediaModel& model,
                                        const std::vector<WeightedSampleMeasure>& probes);

/// Spot-checks of the model contract on random probe points: evenness of
/// grad U, the dissipativity lower bounds, and linear gradient growth.
/// Returns human-readable violation messages (empty = all probes pass).
std::vector<std::string> probe_assumptions(const GranularMediaModel& model, std::uint64_t seed,
                                           std::size_t n_probes, double box_halfwidth = 5.0);

}  // namespace mkv
