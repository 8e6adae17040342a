#include "aqicast/models/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "aqicast/error.hpp"

namespace aqicast::models {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw DataError("matrix data size does not match its shape");
}

Matrix Matrix::take_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(rows[i] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }
  return out;
}

std::uint64_t FeatureSchema::fingerprint() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& name : names) {
    for (unsigned char c : name) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
    h ^= 0x1F;  // unit separator, so ["ab"] and ["a", "b"] differ
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string FeatureSchema::fingerprint_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fingerprint()));
  return buf;
}

void FeatureSchema::check_compatible(const FeatureSchema& other) const {
  if (names == other.names) return;
  std::set<std::string> mine(names.begin(), names.end()), theirs(other.names.begin(), other.names.end());
  std::string missing, extra;
  for (const auto& n : mine) {
    if (!theirs.count(n)) missing += (missing.empty() ? "" : ", ") + n;
  }
  for (const auto& n : theirs) {
    if (!mine.count(n)) extra += (extra.empty() ? "" : ", ") + n;
  }
  std::string msg = "feature schema mismatch";
  if (!missing.empty()) msg += "; missing columns: " + missing;
  if (!extra.empty()) msg += "; extra columns: " + extra;
  if (missing.empty() && extra.empty()) msg += "; same columns in a different order";
  throw SchemaError(msg);
}

void check_training_data(const Matrix& X, std::span<const double> y) {
  if (X.rows() == 0 || y.empty()) throw DataError("cannot fit on empty data");
  if (X.rows() != y.size()) throw DataError("feature rows and targets differ in length");
  if (X.cols() == 0) throw DataError("no feature columns");
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("non-finite target value");
  }
}

}  // namespace aqicast::models
