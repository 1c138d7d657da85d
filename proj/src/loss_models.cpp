#include "saa/loss_models.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace saa {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double column_mean(const std::vector<double>& c) {
  return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

}  // namespace

LossModel::LossModel(GaussianLoss spec) {
  require(spec.mean.size() >= 2, "Gaussian loss needs at least two design points");
  require(spec.mean.size() == spec.variance.size(),
          "Gaussian loss: mean and variance lengths differ");
  for (std::size_t i = 0; i < spec.mean.size(); ++i) {
    require(std::isfinite(spec.mean[i]), "Gaussian loss: mean must be finite");
    require(spec.variance[i] > 0.0 && std::isfinite(spec.variance[i]),
            "Gaussian loss: variance must be positive at point " + std::to_string(i));
    cgfs_.push_back(std::make_shared<GaussianCgf>(spec.mean[i], spec.variance[i]));
  }
  size_ = spec.mean.size();
  spec_ = std::move(spec);
}

LossModel::LossModel(BinomialLoss spec) {
  require(spec.mean.size() >= 2, "binomial loss needs at least two design points");
  require(spec.trials >= 1, "binomial loss needs at least one trial");
  for (std::size_t i = 0; i < spec.mean.size(); ++i) {
    require(spec.mean[i] > 0.0 && spec.mean[i] < spec.trials,
            "binomial loss: need 0 < f(x) < m at point " + std::to_string(i));
    cgfs_.push_back(std::make_shared<BinomialCgf>(spec.mean[i] / spec.trials, spec.trials));
  }
  size_ = spec.mean.size();
  spec_ = std::move(spec);
}

LossModel::LossModel(SquaredErrorLoss spec) {
  require(spec.points.size() >= 2, "squared-error loss needs at least two design points");
  require(spec.noise_variance > 0.0 && std::isfinite(spec.noise_variance),
          "squared-error loss: noise variance must be positive");
  require(std::isfinite(spec.noise_mean), "squared-error loss: noise mean must be finite");
  for (double x : spec.points) {
    cgfs_.push_back(std::make_shared<SquaredGaussianCgf>(x - spec.noise_mean, spec.noise_variance));
  }
  size_ = spec.points.size();
  spec_ = std::move(spec);
}

LossModel::LossModel(TableLoss spec) {
  require(spec.columns.size() >= 2, "table loss needs at least two columns");
  for (std::size_t i = 0; i < spec.columns.size(); ++i) {
    require(!spec.columns[i].empty(), "table loss: column " + std::to_string(i) + " is empty");
    bool varies = false;
    for (double v : spec.columns[i]) {
      require(std::isfinite(v), "table loss: non-finite value in column " + std::to_string(i));
      varies = varies || v != spec.columns[i].front();
    }
    require(varies, "table loss: column " + std::to_string(i) + " is a point mass");
  }
  size_ = spec.columns.size();
  spec_ = std::move(spec);
}

LossModel LossModel::squared_error(const DesignGrid& grid, double noise_mean,
                                   double noise_variance) {
  return LossModel(SquaredErrorLoss{{grid.points().begin(), grid.points().end()},
                                    noise_mean,
                                    noise_variance});
}

LossKind LossModel::kind() const {
  return static_cast<LossKind>(spec_.index());
}

void LossModel::check_index(std::size_t i) const {
  if (i >= size_) {
    throw std::out_of_range("design point index " + std::to_string(i) + " out of range");
  }
}

double LossModel::mean(std::size_t i) const {
  check_index(i);
  return std::visit(
      Overloaded{
          [&](const GaussianLoss& s) { return s.mean[i]; },
          [&](const BinomialLoss& s) { return s.mean[i]; },
          [&](const SquaredErrorLoss& s) {
            const double d = s.points[i] - s.noise_mean;
            return d * d + s.noise_variance;
          },
          [&](const TableLoss& s) { return column_mean(s.columns[i]); },
      },
      spec_);
}

double LossModel::variance(std::size_t i) const {
  check_index(i);
  return std::visit(
      Overloaded{
          [&](const GaussianLoss& s) { return s.variance[i]; },
          [&](const BinomialLoss& s) {
            const double p = s.mean[i] / s.trials;
            return s.trials * p * (1.0 - p);
          },
          [&](const SquaredErrorLoss& s) {
            const double d = s.points[i] - s.noise_mean;
            const double s2 = s.noise_variance;
            return 2.0 * s2 * s2 + 4.0 * s2 * d * d;
          },
          [&](const TableLoss& s) {
            const auto& c = s.columns[i];
            const double m = column_mean(c);
            double ss = 0.0;
            for (double v : c) ss += (v - m) * (v - m);
            return ss / static_cast<double>(c.size());
          },
      },
      spec_);
}

std::vector<double> LossModel::means() const {
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = mean(i);
  return out;
}

int LossModel::trials() const {
  if (const auto* b = std::get_if<BinomialLoss>(&spec_)) return b->trials;
  return 0;
}

std::shared_ptr<const Cgf> LossModel::cgf(std::size_t i) const {
  check_index(i);
  if (!has_analytic_cgf()) {
    throw std::logic_error("table loss model has no closed-form CGF");
  }
  return cgfs_[i];
}

void LossModel::sample_into(std::size_t i, std::size_t count, Engine& rng,
                            std::vector<double>& out) const {
  check_index(i);
  out.reserve(out.size() + count);
  std::visit(
      Overloaded{
          [&](const GaussianLoss& s) {
            std::normal_distribution<double> dist(s.mean[i], std::sqrt(s.variance[i]));
            for (std::size_t j = 0; j < count; ++j) out.push_back(dist(rng));
          },
          [&](const BinomialLoss& s) {
            std::binomial_distribution<int> dist(s.trials, s.mean[i] / s.trials);
            for (std::size_t j = 0; j < count; ++j) out.push_back(dist(rng));
          },
          [&](const SquaredErrorLoss& s) {
            std::normal_distribution<double> dist(s.noise_mean, std::sqrt(s.noise_variance));
            for (std::size_t j = 0; j < count; ++j) {
              const double d = s.points[i] - dist(rng);
              out.push_back(d * d);
            }
          },
          [&](const TableLoss& s) {
            const auto& c = s.columns[i];
            std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
            for (std::size_t j = 0; j < count; ++j) out.push_back(c[pick(rng)]);
          },
      },
      spec_);
}

std::vector<double> sample(const LossModel& model, std::size_t point_index, std::size_t count,
                           Engine& rng) {
  std::vector<double> out;
  model.sample_into(point_index, count, rng, out);
  return out;
}

double analytic_cgf(const LossModel& model, std::size_t point_index, double theta) {
  return model.cgf(point_index)->value(theta);
}

TableLoss read_table_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };

  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("table CSV is empty");
  const auto header = split(line);
  const std::size_t d = header.size();
  std::vector<std::size_t> order(d);
  std::vector<bool> seen(d, false);
  for (std::size_t c = 0; c < d; ++c) {
    const std::string h = trim(header[c]);
    std::size_t idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoul(h, &used);
      if (used != h.size()) throw std::invalid_argument(h);
    } catch (const std::exception&) {
      throw std::invalid_argument("table CSV header cell '" + h + "' is not a point index");
    }
    if (idx >= d || seen[idx]) {
      throw std::invalid_argument("table CSV header must be a permutation of 0..d-1");
    }
    seen[idx] = true;
    order[c] = idx;
  }

  TableLoss table;
  table.columns.resize(d);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() > d) {
      throw std::invalid_argument("table CSV row " + std::to_string(row) + " has too many cells");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string v = trim(cells[c]);
      if (v.empty()) continue;
      try {
        table.columns[order[c]].push_back(std::stod(v));
      } catch (const std::exception&) {
        throw std::invalid_argument("table CSV row " + std::to_string(row) + ": bad number '" +
                                    v + "'");
      }
    }
  }
  return table;
}

TableLoss read_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open table CSV " + path);
  return read_table_csv(in);
}

std::vector<std::size_t> SampleStore::counts() const {
  std::vector<std::size_t> out(buffers_.size());
  for (std::size_t i = 0; i < buffers_.size(); ++i) out[i] = buffers_[i].size();
  return out;
}

void SampleStore::draw(const LossModel& model, std::size_t i, std::size_t count, Engine& rng) {
  auto& buf = buffers_.at(i);
  model.sample_into(i, count, rng, buf);
  total_ += count;
}

void SampleStore::append(std::size_t i, std::span<const double> values) {
  auto& buf = buffers_.at(i);
  buf.insert(buf.end(), values.begin(), values.end());
  total_ += values.size();
}

double SampleStore::mean(std::size_t i) const {
  const auto& b = buffers_.at(i);
  if (b.empty()) throw std::logic_error("no samples at point " + std::to_string(i));
  return column_mean(b);
}

double SampleStore::variance(std::size_t i) const {
  const auto& b = buffers_.at(i);
  if (b.size() < 2) {
    throw std::invalid_argument("sample variance at point " + std::to_string(i) +
                                " needs at least two samples");
  }
  const double m = column_mean(b);
  double ss = 0.0;
  for (double v : b) ss += (v - m) * (v - m);
  return ss / static_cast<double>(b.size() - 1);
}

}  // namespace saa
