#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace aqicast::models {

/// Dense row-major feature matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

  Matrix take_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Ordered feature names a model was trained on.
struct FeatureSchema {
  std::vector<std::string> names;

  /// FNV-1a over the names and their order.
  std::uint64_t fingerprint() const;
  std::string fingerprint_hex() const;

  /// Throws SchemaError naming missing/extra columns, or an ordering mismatch.
  void check_compatible(const FeatureSchema& other) const;
};

struct FeatureFrame {
  FeatureSchema schema;
  Matrix X;
};

/// Rejects empty data, size mismatches and non-finite values.
void check_training_data(const Matrix& X, std::span<const double> y);

}  // namespace aqicast::models
