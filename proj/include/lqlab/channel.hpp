#ifndef LQLAB_CHANNEL_HPP
#define LQLAB_CHANNEL_HPP

#include "lqlab/random.hpp"

namespace lqlab {

// Error function, Cody's rational Chebyshev approximations (|error| well
// below 1e-15 in double). Implemented here so delivery-rate curves do not
// depend on the platform libm.
double erf(double x);
double erfc(double x);

// Physical constants of one log-normal shadowing link.
struct ChannelParams {
  double alpha = 3.0;         // path-loss exponent
  double sigma = 4.0;         // shadowing standard deviation, dB
  double pt_dbm = 16.98970004336019;  // 50 mW
  double beta_th_db = 90.0;   // threshold attenuation, dB

  // Throws ConfigError when alpha, sigma or beta_th_db is not positive and
  // finite, or when r0 overflows.
  void validate() const;

  // Weakest RSSI a receiver can observe: pt - beta_th.
  double min_received_rssi_dbm() const { return pt_dbm - beta_th_db; }
};

struct LinkDraw {
  double beta_db = 0.0;
  double rssi_dbm = 0.0;
  bool received = false;
};

// Geometric path loss alpha * 10 * log10(d / 1 m). Throws std::domain_error
// for d <= 0.
double deterministic_attenuation(double d_m, const ChannelParams& params);

// One shadowing draw: beta = path loss + N(0, sigma^2).
LinkDraw draw_link(double d_m, const ChannelParams& params, Rng& rng);

// p(d) = 1/2 - 1/2 erf(10 alpha / (sqrt(2) sigma) * log10(d / r0)).
double delivery_rate(double d_m, const ChannelParams& params);

// Distance at which p(d) = 0.5.
double r_zero(const ChannelParams& params);

// Inverse of delivery_rate: the distance d with p(d) = rate, rate in (0, 1).
double distance_for_rate(double rate, const ChannelParams& params);

}  // namespace lqlab

#endif  // LQLAB_CHANNEL_HPP
