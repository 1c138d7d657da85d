#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace saa {

/// Open interval (lo, hi); infinite ends allowed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x > lo && x < hi; }
};

/// Raised when a cumulant generating function is evaluated outside the set
/// where it is finite.
class CgfDomainError : public std::domain_error {
 public:
  CgfDomainError(double theta, const std::string& what);
  double theta() const { return theta_; }

 private:
  double theta_;
};

/// CGF value with its first two derivatives in theta.
struct CgfPoint {
  double value = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
};

/// Cumulant generating function theta -> log E[exp(theta * L)] of one loss
/// distribution. Implementations are immutable and thread-safe.
class Cgf {
 public:
  virtual ~Cgf() = default;

  virtual CgfPoint eval(double theta) const = 0;
  virtual double value(double theta) const { return eval(theta).value; }
  virtual Interval domain() const { return {}; }

 protected:
  void check_domain(double theta) const;
};

/// N(mean, variance).
class GaussianCgf final : public Cgf {
 public:
  GaussianCgf(double mean, double variance);
  CgfPoint eval(double theta) const override;
  double value(double theta) const override;

 private:
  double mean_;
  double variance_;
};

/// Bin(trials, p): trials * log(1 - p + p e^theta).
class BinomialCgf final : public Cgf {
 public:
  BinomialCgf(double p, int trials);
  CgfPoint eval(double theta) const override;

 private:
  double p_;
  double trials_;
};

/// Law of (x - xi)^2 with xi ~ N(mu, s2): a noncentral chi-square with one
/// degree of freedom scaled by s2. Finite only for theta < 1 / (2 s2).
class SquaredGaussianCgf final : public Cgf {
 public:
  /// `offset` is x - mu.
  SquaredGaussianCgf(double offset, double noise_variance);
  CgfPoint eval(double theta) const override;
  Interval domain() const override;

 private:
  double offset_sq_;
  double s2_;
};

/// Empirical CGF of a fixed sample: log((1/m) sum_i exp(theta L_i)),
/// evaluated in log-sum-exp form.
class EmpiricalCgf final : public Cgf {
 public:
  explicit EmpiricalCgf(std::vector<double> samples);
  CgfPoint eval(double theta) const override;
  double value(double theta) const override;

  std::size_t size() const { return samples_.size(); }
  double mean() const { return mean_; }

 private:
  std::vector<double> samples_;
  double min_;
  double max_;
  double mean_;
};

/// log((1/m) sum_i exp(theta * samples[i])). Throws on an empty sample.
double empirical_cgf(std::span<const double> samples, double theta);

}  // namespace saa
