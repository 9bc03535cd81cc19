#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace segad {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  // Rows selected by index, in the given order (duplicates allowed).
  Matrix select_rows(std::span<const std::size_t> idx) const;
  Matrix select_cols(std::span<const std::size_t> idx) const;
  // Horizontal concatenation; row counts must match.
  static Matrix hstack(const Matrix& a, const Matrix& b);
  static Matrix from_columns(const std::vector<std::vector<double>>& columns);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Column-wise z-scoring; zero-variance columns map to 0.
struct ColumnScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static ColumnScaler fit(const Matrix& x);
  Matrix transform(const Matrix& x) const;
  friend bool operator==(const ColumnScaler&, const ColumnScaler&) = default;
};

}  // namespace segad
