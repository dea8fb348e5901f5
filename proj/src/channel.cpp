#include "lqlab/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lqlab/errors.hpp"

namespace lqlab {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;

// Rational approximations from W. J. Cody, "Rational Chebyshev
// approximations for the error function", Math. Comp. 23 (1969).
constexpr double kA[5] = {3.16112374387056560e00, 1.13864154151050156e02,
                          3.77485237685302021e02, 3.20937758913846947e03,
                          1.85777706184603153e-1};
constexpr double kB[4] = {2.36012909523441209e01, 2.44024637934444173e02,
                          1.28261652607737228e03, 2.84423683343917062e03};
constexpr double kC[9] = {5.64188496988670089e-1, 8.88314979438837594e00,
                          6.61191906371416295e01, 2.98635138197400131e02,
                          8.81952221241769090e02, 1.71204761263407058e03,
                          2.05107837782607147e03, 1.23033935479799725e03,
                          2.15311535474403846e-8};
constexpr double kD[8] = {1.57449261107098347e01, 1.17693950891312499e02,
                          5.37181101862009858e02, 1.62138957456669019e03,
                          3.29079923573345963e03, 4.36261909014324716e03,
                          3.43936767414372164e03, 1.23033935480374942e03};
constexpr double kP[6] = {3.05326634961232344e-1, 3.60344899949804439e-1,
                          1.25781726111229246e-1, 1.60837851487422766e-2,
                          6.58749161529837803e-4, 1.63153871373020978e-2};
constexpr double kQ[5] = {2.56852019228982242e00, 1.87295284992346047e00,
                          5.27905102951428412e-1, 6.05183413124413191e-2,
                          2.33520497626869185e-3};

// erf(x) for |x| <= 0.46875.
double erf_small(double x) {
  const double y = std::fabs(x);
  const double ysq = y > 1.11e-16 ? y * y : 0.0;
  double num = kA[4] * ysq;
  double den = ysq;
  for (int i = 0; i < 3; ++i) {
    num = (num + kA[i]) * ysq;
    den = (den + kB[i]) * ysq;
  }
  return x * (num + kA[3]) / (den + kB[3]);
}

// exp(-y^2) split to keep the argument exact in its high part.
double scaled_gauss(double y) {
  const double ysq = std::trunc(y * 16.0) / 16.0;
  const double del = (y - ysq) * (y + ysq);
  return std::exp(-ysq * ysq) * std::exp(-del);
}

// erfc(y) for y > 0.46875.
double erfc_large(double y) {
  if (y <= 4.0) {
    double num = kC[8] * y;
    double den = y;
    for (int i = 0; i < 7; ++i) {
      num = (num + kC[i]) * y;
      den = (den + kD[i]) * y;
    }
    return scaled_gauss(y) * (num + kC[7]) / (den + kD[7]);
  }
  if (y >= 26.543) return 0.0;
  const double ysq = 1.0 / (y * y);
  double num = kP[5] * ysq;
  double den = ysq;
  for (int i = 0; i < 4; ++i) {
    num = (num + kP[i]) * ysq;
    den = (den + kQ[i]) * ysq;
  }
  double r = ysq * (num + kP[4]) / (den + kQ[4]);
  r = (kInvSqrtPi - r) / y;
  return scaled_gauss(y) * r;
}

void require_positive_distance(double d_m) {
  if (!(d_m > 0.0) || !std::isfinite(d_m))
    throw std::domain_error("distance must be positive and finite, got " +
                            std::to_string(d_m));
}

}  // namespace

double erf(double x) {
  if (std::isnan(x)) return x;
  const double y = std::fabs(x);
  if (y <= 0.46875) return erf_small(x);
  const double r = 1.0 - erfc_large(y);
  return x < 0.0 ? -r : r;
}

double erfc(double x) {
  if (std::isnan(x)) return x;
  const double y = std::fabs(x);
  if (y <= 0.46875) return 1.0 - erf_small(x);
  const double r = erfc_large(y);
  return x < 0.0 ? 2.0 - r : r;
}

void ChannelParams::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(alpha)) throw ConfigError("alpha must be > 0");
  if (!positive(sigma)) throw ConfigError("sigma must be > 0");
  if (!positive(beta_th_db)) throw ConfigError("beta_th_db must be > 0");
  if (!std::isfinite(pt_dbm)) throw ConfigError("pt_dbm must be finite");
  const double r0 = r_zero(*this);
  if (!positive(r0)) throw ConfigError("derived r0 is not finite");
}

double deterministic_attenuation(double d_m, const ChannelParams& params) {
  require_positive_distance(d_m);
  return params.alpha * 10.0 * std::log10(d_m);
}

LinkDraw draw_link(double d_m, const ChannelParams& params, Rng& rng) {
  std::normal_distribution<double> shadow(0.0, params.sigma);
  LinkDraw draw;
  draw.beta_db = deterministic_attenuation(d_m, params) + shadow(rng);
  draw.rssi_dbm = params.pt_dbm - draw.beta_db;
  draw.received = draw.beta_db < params.beta_th_db;
  return draw;
}

double delivery_rate(double d_m, const ChannelParams& params) {
  require_positive_distance(d_m);
  const double scale = 10.0 * params.alpha / (std::sqrt(2.0) * params.sigma);
  const double z = scale * std::log10(d_m / r_zero(params));
  return 0.5 * lqlab::erfc(z);
}

double r_zero(const ChannelParams& params) {
  return std::pow(10.0, params.beta_th_db / (10.0 * params.alpha));
}

double distance_for_rate(double rate, const ChannelParams& params) {
  if (!(rate > 0.0 && rate < 1.0))
    throw std::domain_error("rate must lie in (0, 1)");
  // erfc is decreasing; bisect erfc(z) = 2 rate on a bracket covering
  // every representable rate.
  const double target = 2.0 * rate;
  double lo = -27.0, hi = 27.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (lqlab::erfc(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  const double z = 0.5 * (lo + hi);
  const double scale = 10.0 * params.alpha / (std::sqrt(2.0) * params.sigma);
  return r_zero(params) * std::pow(10.0, z / scale);
}

}  // namespace lqlab
