#include "saa/cgf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "detail/exp_sums.hpp"

namespace saa {

CgfDomainError::CgfDomainError(double theta, const std::string& what)
    : std::domain_error(what), theta_(theta) {}

void Cgf::check_domain(double theta) const {
  if (!std::isfinite(theta)) {
    throw CgfDomainError(theta, "CGF argument is not finite");
  }
  const Interval dom = domain();
  if (!dom.contains(theta)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "CGF undefined at theta=" << theta << " (domain is (" << dom.lo << ", " << dom.hi
        << "))";
    throw CgfDomainError(theta, msg.str());
  }
}

GaussianCgf::GaussianCgf(double mean, double variance) : mean_(mean), variance_(variance) {
  if (!std::isfinite(mean) || !(variance > 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("Gaussian loss needs finite mean and positive variance");
  }
}

double GaussianCgf::value(double theta) const {
  check_domain(theta);
  return theta * (mean_ + 0.5 * variance_ * theta);
}

CgfPoint GaussianCgf::eval(double theta) const {
  return {value(theta), mean_ + variance_ * theta, variance_};
}

BinomialCgf::BinomialCgf(double p, int trials) : p_(p), trials_(trials) {
  if (!(p > 0.0 && p < 1.0) || trials < 1) {
    throw std::invalid_argument("binomial loss needs 0 < p < 1 and trials >= 1");
  }
}

CgfPoint BinomialCgf::eval(double theta) const {
  check_domain(theta);
  CgfPoint out;
  // log(1 - p + p e^t) without overflow on either side.
  if (theta > 0.0) {
    out.value = trials_ * (theta + std::log(p_ + (1.0 - p_) * std::exp(-theta)));
    const double s = p_ / (p_ + (1.0 - p_) * std::exp(-theta));
    out.slope = trials_ * s;
    out.curvature = trials_ * s * (1.0 - s);
  } else {
    out.value = trials_ * std::log1p(p_ * std::expm1(theta));
    const double e = std::exp(theta);
    const double s = p_ * e / (1.0 - p_ + p_ * e);
    out.slope = trials_ * s;
    out.curvature = trials_ * s * (1.0 - s);
  }
  return out;
}

SquaredGaussianCgf::SquaredGaussianCgf(double offset, double noise_variance)
    : offset_sq_(offset * offset), s2_(noise_variance) {
  if (!std::isfinite(offset) || !(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("squared-error loss needs positive noise variance");
  }
}

Interval SquaredGaussianCgf::domain() const {
  return {-std::numeric_limits<double>::infinity(), 1.0 / (2.0 * s2_)};
}

CgfPoint SquaredGaussianCgf::eval(double theta) const {
  check_domain(theta);
  const double u = 1.0 - 2.0 * s2_ * theta;
  CgfPoint out;
  out.value = -0.5 * std::log(u) + offset_sq_ * theta / u;
  out.slope = s2_ / u + offset_sq_ / (u * u);
  out.curvature = 2.0 * s2_ * s2_ / (u * u) + 4.0 * s2_ * offset_sq_ / (u * u * u);
  return out;
}

EmpiricalCgf::EmpiricalCgf(std::vector<double> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) {
    throw std::invalid_argument("empirical CGF needs at least one sample");
  }
  const auto [lo, hi] = std::minmax_element(samples_.begin(), samples_.end());
  min_ = *lo;
  max_ = *hi;
  mean_ = std::accumulate(samples_.begin(), samples_.end(), 0.0) /
          static_cast<double>(samples_.size());
}

double EmpiricalCgf::value(double theta) const {
  if (!std::isfinite(theta)) {
    throw CgfDomainError(theta, "CGF argument is not finite");
  }
  const double shift = theta * (theta > 0.0 ? max_ : min_);
  const double sum = detail::exp_sum(samples_.data(), samples_.size(), theta, shift);
  return std::log(sum / static_cast<double>(samples_.size())) + shift;
}

CgfPoint EmpiricalCgf::eval(double theta) const {
  if (!std::isfinite(theta)) {
    throw CgfDomainError(theta, "CGF argument is not finite");
  }
  const double shift = theta * (theta > 0.0 ? max_ : min_);
  // Moments are accumulated about the sample mean to limit cancellation in
  // the tilted variance.
  const auto [s0, s1, s2] =
      detail::exp_moments(samples_.data(), samples_.size(), theta, shift, mean_);
  const double m1 = s1 / s0;
  CgfPoint out;
  out.value = std::log(s0 / static_cast<double>(samples_.size())) + shift;
  out.slope = mean_ + m1;
  out.curvature = std::max(0.0, s2 / s0 - m1 * m1);
  return out;
}

double empirical_cgf(std::span<const double> samples, double theta) {
  if (samples.empty()) {
    throw std::invalid_argument("empirical CGF needs at least one sample");
  }
  if (!std::isfinite(theta)) {
    throw CgfDomainError(theta, "CGF argument is not finite");
  }
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  const double shift = theta * (theta > 0.0 ? *hi : *lo);
  const double sum = detail::exp_sum(samples.data(), samples.size(), theta, shift);
  return std::log(sum / static_cast<double>(samples.size())) + shift;
}

}  // namespace saa
