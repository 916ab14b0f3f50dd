#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nlisa/kg.hpp"

namespace nlisa {

enum class TNormKind { Godel, Product, Lukasiewicz };

inline std::string_view to_string(TNormKind kind) {
  switch (kind) {
    case TNormKind::Godel: return "godel";
    case TNormKind::Product: return "product";
    case TNormKind::Lukasiewicz: return "lukasiewicz";
  }
  return "?";
}

inline TNormKind parse_tnorm(std::string_view name) {
  if (name == "godel" || name == "Godel" || name == "min") return TNormKind::Godel;
  if (name == "product" || name == "Product" || name == "prod") return TNormKind::Product;
  if (name == "lukasiewicz" || name == "Lukasiewicz" || name == "luk") return TNormKind::Lukasiewicz;
  throw std::invalid_argument("unknown t-norm '" + std::string(name) + "'");
}

namespace detail {
inline void check_truth(double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw std::domain_error("truth value outside [0,1]: " + std::to_string(a));
}
}  // namespace detail

// Unchecked kernels for hot loops; inputs must already lie in [0,1].
inline double tnorm_unchecked(double a, double b, TNormKind kind) {
  switch (kind) {
    case TNormKind::Godel: return a < b ? a : b;
    case TNormKind::Product: return a * b;
    case TNormKind::Lukasiewicz: {
      double v = a + b - 1.0;
      return v > 0.0 ? v : 0.0;
    }
  }
  return 0.0;
}

inline double tconorm_unchecked(double a, double b, TNormKind kind) {
  return 1.0 - tnorm_unchecked(1.0 - a, 1.0 - b, kind);
}

inline double tnorm(double a, double b, TNormKind kind) {
  detail::check_truth(a);
  detail::check_truth(b);
  return tnorm_unchecked(a, b, kind);
}

// De Morgan dual of tnorm.
inline double tconorm(double a, double b, TNormKind kind) {
  detail::check_truth(a);
  detail::check_truth(b);
  return std::clamp(tconorm_unchecked(a, b, kind), 0.0, 1.0);
}

inline double negate(double a) {
  detail::check_truth(a);
  return 1.0 - a;
}

// Membership values over a variable's reduced domain. The domain is strictly
// ascending; a fresh vector is all ones.
struct FuzzyVector {
  std::vector<EntityId> domain;
  std::vector<double> values;

  FuzzyVector() = default;
  explicit FuzzyVector(std::vector<EntityId> dom) : domain(std::move(dom)), values(domain.size(), 1.0) {
    if (!std::is_sorted(domain.begin(), domain.end()) ||
        std::adjacent_find(domain.begin(), domain.end()) != domain.end())
      throw std::invalid_argument("fuzzy vector domain must be strictly ascending");
  }
  FuzzyVector(std::vector<EntityId> dom, std::vector<double> vals) : FuzzyVector(std::move(dom)) {
    if (vals.size() != domain.size()) throw std::invalid_argument("fuzzy vector size mismatch");
    for (double v : vals) detail::check_truth(v);
    values = std::move(vals);
  }

  std::size_t size() const { return domain.size(); }

  // Index of e in the domain, or npos.
  std::size_t index_of(EntityId e) const {
    auto it = std::lower_bound(domain.begin(), domain.end(), e);
    return (it != domain.end() && *it == e) ? static_cast<std::size_t>(it - domain.begin()) : npos;
  }

  // Elementwise t-norm with an aligned vector of truth values.
  void conjoin(const std::vector<double>& other, TNormKind kind) {
    if (other.size() != values.size()) throw std::invalid_argument("fuzzy vector size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = tnorm_unchecked(values[i], other[i], kind);
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Dense row-major truth values over row_domain x col_domain.
struct ScoreMatrix {
  std::vector<EntityId> row_domain;
  std::vector<EntityId> col_domain;
  std::vector<double> values;

  ScoreMatrix() = default;
  ScoreMatrix(std::vector<EntityId> rows, std::vector<EntityId> cols, double fill = 0.0)
      : row_domain(std::move(rows)), col_domain(std::move(cols)), values(row_domain.size() * col_domain.size(), fill) {}

  std::size_t rows() const { return row_domain.size(); }
  std::size_t cols() const { return col_domain.size(); }
  double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
  double* row(std::size_t i) { return values.data() + i * cols(); }
  const double* row(std::size_t i) const { return values.data() + i * cols(); }

  // Elementwise t-norm with a same-shaped matrix.
  void conjoin(const ScoreMatrix& other, TNormKind kind) {
    if (other.rows() != rows() || other.cols() != cols()) throw std::invalid_argument("score matrix shape mismatch");
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = tnorm_unchecked(values[k], other.values[k], kind);
  }
};

enum class Axis { rows, cols };

struct MaxReduction {
  FuzzyVector vector;
  std::vector<std::size_t> argmax;  // index along the reduced axis; first maximum wins
};

// Axis::cols reduces across columns, giving one value per row (over
// row_domain). Axis::rows reduces across rows, giving one value per column.
inline MaxReduction max_reduce(const ScoreMatrix& m, Axis axis) {
  if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("max_reduce of an empty matrix");
  MaxReduction out;
  if (axis == Axis::cols) {
    std::vector<double> vals(m.rows());
    out.argmax.assign(m.rows(), 0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double* row = m.row(i);
      std::size_t best = 0;
      for (std::size_t j = 1; j < m.cols(); ++j)
        if (row[j] > row[best]) best = j;
      vals[i] = row[best];
      out.argmax[i] = best;
    }
    out.vector.domain = m.row_domain;
    out.vector.values = std::move(vals);
  } else {
    std::vector<double> vals(m.row(0), m.row(0) + m.cols());
    out.argmax.assign(m.cols(), 0);
    for (std::size_t i = 1; i < m.rows(); ++i) {
      const double* row = m.row(i);
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (row[j] > vals[j]) {
          vals[j] = row[j];
          out.argmax[j] = i;
        }
    }
    out.vector.domain = m.col_domain;
    out.vector.values = std::move(vals);
  }
  return out;
}

}  // namespace nlisa
