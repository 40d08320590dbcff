#pragma once

#include <limits>
#include <vector>

#include "landscape/freeconv.hpp"
#include "landscape/measure.hpp"
#include "landscape/potential.hpp"

namespace landscape {

inline constexpr double kNoTruncation = std::numeric_limits<double>::infinity();

enum class LogPotentialMethod {
  Subordination,  // exact identity at the origin
  Quadrature,  // density on a lambda grid, then log-potential quadrature; the fixed
               // grid loses the bulk once the atoms spread over hundreds of units
};

struct FunctionalConfig {
  LogPotentialMethod method = LogPotentialMethod::Subordination;
  FreeConvConfig freeconv{};
  double reduction_tolerance = 1e-6;
};

struct PhiValue {
  double phi1;
  double phi2;
  double phi3;
  double total() const { return phi1 - phi2 + phi3; }
};

struct FunctionalValue {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;
  double kl = 0.0;
  double radial_term = 0.0;
  double total = 0.0;
  double t = 0.0;
  double K = kNoTruncation;
};

/// Log-potential of nu boxplus semicircle with the configured method.
double semicircle_log_potential(const DiscreteMeasure& nu, const FunctionalConfig& config = {});

/// phi_1, phi_2, phi_{3,K} at (t, mu), with V' and V'' evaluated at t x.
/// t = 0 gives (0, 0, -1/2).
PhiValue phi(double t, const GridMeasure& mu, const Potential& potential, double K = kNoTruncation,
             const FunctionalConfig& config = {});

/// I_K(t, mu) = log(p-1)/2 + 1/2 + phi_K(t, mu) - KL(mu); no radial term.
FunctionalValue functional_IK(double t, const GridMeasure& mu, const Potential& potential,
                              double K = kNoTruncation, const FunctionalConfig& config = {});

/// I(t, mu) with the unscaled argument: V'(X), V''(X) weighted by powers of t,
/// minus KL(mu) and the radial term (1 - t^2 + 2 log t)/2.
FunctionalValue functional_I_t(double t, const GridMeasure& mu, const Potential& potential,
                               const FunctionalConfig& config = {});

/// I(mu) = I(t, mu) with t^2 the second moment of the cell density. Also
/// evaluates I_inf(t, S_{1/t} mu) and throws std::logic_error if the two
/// disagree by more than config.reduction_tolerance.
FunctionalValue complexity_I(const GridMeasure& mu, const Potential& potential, const FunctionalConfig& config = {});

/// I(mu) and its derivative with respect to each weight, along the simplex
/// (each component is defined up to a common additive constant; zero-weight
/// nodes get 0). Uses the subordination identity for the log-potential term;
/// `guess` is an optional warm start for G(0).
struct FunctionalGradient {
  FunctionalValue value;
  std::vector<double> gradient;
  Complex origin_G;
};
FunctionalGradient complexity_I_with_gradient(const GridMeasure& mu, const Potential& potential,
                                              const FunctionalConfig& config = {}, Complex guess = {});

/// Per-node integrand p^{-1} x V'(x) - V(x).
double constraint_integrand(const Potential& potential, double x);
/// E_mu[p^{-1} X V'(X) - V(X)].
double constraint_value(const GridMeasure& mu, const Potential& potential);
/// E_mu[p^{-1} t X V'(tX) - V(tX)].
double scaled_constraint_value(double t, const GridMeasure& mu, const Potential& potential);

/// psi(t, x) = p t^{2-2p} V'(tx)^2 / (2p^2); 0 at t = 0.
double psi(double t, double x, const Potential& potential);

/// w(x) = -x/(2 c^2 p^2) + log(8 c^2 x / (p(p-1)) + 4)/2 with c = c_bound.
double w_bound(double x, const Potential& potential);
double w_bound_sup(const Potential& potential);
/// t^{2-2p} (m_{2q1-2}(mu) + m_{2q2-2}(mu)) with t^2 the cell second moment.
double w_bound_argument(const GridMeasure& mu, const Potential& potential);
/// Upper bound on I over all measures: log(p-1)/2 + 1/2 + sup w.
double functional_upper_cap(const Potential& potential);

}  // namespace landscape
