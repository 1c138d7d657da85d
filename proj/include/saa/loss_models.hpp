#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "saa/cgf.hpp"
#include "saa/grid.hpp"
#include "saa/rng.hpp"

namespace saa {

/// L(x_i, xi) ~ N(mean[i], variance[i]).
struct GaussianLoss {
  std::vector<double> mean;
  std::vector<double> variance;
};

/// L(x_i, xi) ~ Bin(trials, mean[i] / trials).
struct BinomialLoss {
  std::vector<double> mean;
  int trials = 1;
};

/// L(x_i, xi) = (x_i - xi)^2 with xi ~ N(noise_mean, noise_variance).
struct SquaredErrorLoss {
  std::vector<double> points;
  double noise_mean = 0.0;
  double noise_variance = 1.0;
};

/// Externally supplied losses, one column of observations per design point.
/// Sampling resamples a column uniformly with replacement.
struct TableLoss {
  std::vector<std::vector<double>> columns;
};

enum class LossKind { gaussian, binomial, squared_error, table };

/// Loss distributions at every design point of a grid. Parameters are
/// validated at construction; a constructed model never fails to sample.
class LossModel {
 public:
  explicit LossModel(GaussianLoss spec);
  explicit LossModel(BinomialLoss spec);
  explicit LossModel(SquaredErrorLoss spec);
  explicit LossModel(TableLoss spec);

  /// Squared-error loss on the points of `grid`.
  static LossModel squared_error(const DesignGrid& grid, double noise_mean,
                                 double noise_variance);

  LossKind kind() const;
  std::size_t size() const { return size_; }

  /// f(x_i) = E[L(x_i, xi)].
  double mean(std::size_t i) const;
  /// Var[L(x_i, xi)].
  double variance(std::size_t i) const;
  std::vector<double> means() const;

  /// Binomial trial count; 0 for other kinds.
  int trials() const;

  bool has_analytic_cgf() const { return kind() != LossKind::table; }
  /// Closed-form CGF at point i. Throws std::logic_error for table models.
  std::shared_ptr<const Cgf> cgf(std::size_t i) const;

  /// Appends `count` i.i.d. draws of L(x_i, xi) to `out`.
  void sample_into(std::size_t i, std::size_t count, Engine& rng,
                   std::vector<double>& out) const;

  const std::variant<GaussianLoss, BinomialLoss, SquaredErrorLoss, TableLoss>& spec() const {
    return spec_;
  }

 private:
  void check_index(std::size_t i) const;

  std::variant<GaussianLoss, BinomialLoss, SquaredErrorLoss, TableLoss> spec_;
  std::size_t size_ = 0;
  std::vector<std::shared_ptr<const Cgf>> cgfs_;
};

/// `count` i.i.d. draws at design point `point_index`.
std::vector<double> sample(const LossModel& model, std::size_t point_index, std::size_t count,
                           Engine& rng);

/// Closed-form CGF value; throws CgfDomainError outside the finite domain.
double analytic_cgf(const LossModel& model, std::size_t point_index, double theta);

/// Reads a table CSV: header row of point indices, one column per point.
/// Empty cells are allowed so columns may have different lengths.
TableLoss read_table_csv(std::istream& in);
TableLoss read_table_csv(const std::string& path);

/// Append-only per-point sample buffers.
class SampleStore {
 public:
  explicit SampleStore(std::size_t points) : buffers_(points) {}

  std::size_t points() const { return buffers_.size(); }
  std::size_t count(std::size_t i) const { return buffers_.at(i).size(); }
  std::size_t total() const { return total_; }
  std::vector<std::size_t> counts() const;

  std::span<const double> samples(std::size_t i) const { return buffers_.at(i); }

  /// Draws `count` new samples at point i from `model` and appends them.
  void draw(const LossModel& model, std::size_t i, std::size_t count, Engine& rng);
  void append(std::size_t i, std::span<const double> values);

  double mean(std::size_t i) const;
  /// Unbiased sample variance; needs at least two samples.
  double variance(std::size_t i) const;

 private:
  std::vector<std::vector<double>> buffers_;
  std::size_t total_ = 0;
};

}  // namespace saa
