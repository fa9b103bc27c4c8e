#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace botaclip {

using Vector = std::vector<double>;

// Dense row-major matrix of 64-bit floats.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  void fill(double v);
  bool all_finite() const noexcept;

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---- matrix arithmetic -----------------------------------------------------

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// out += a^T * b
void add_matmul_tn(Matrix& out, const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

// out[i][j] == dot(a.row(i), b.row(j)).
Matrix gram(const Matrix& a, const Matrix& b);

void add_inplace(Matrix& dst, const Matrix& src, double scale = 1.0);
Matrix scaled(const Matrix& m, double s);
void add_row_vector(Matrix& m, std::span<const double> v);
Vector column_sums(const Matrix& m);
Vector row_norms(const Matrix& m);
Matrix select_rows(const Matrix& m, std::span<const std::size_t> idx);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Each output row has unit Euclidean norm. Throws ZeroRow when a row norm is
// at or below 1e-12.
Matrix l2_normalize_rows(const Matrix& m);

// Vector-Jacobian product of l2_normalize_rows: given the normalized rows y,
// the pre-normalization row norms and the upstream gradient, returns the
// gradient with respect to the unnormalized input.
Matrix l2_normalize_rows_backward(const Matrix& y, std::span<const double> norms,
                                  const Matrix& upstream);

// ---- scalar functions -------------------------------------------------------

double gelu(double x);
double gelu_derivative(double x);
double sigmoid(double x);
double log_sigmoid(double x);
// log(1 + e^x), stable over the whole range.
double softplus(double x);

// Central differences, one coordinate at a time. Throws NonFinite if any
// evaluation is not finite.
using ScalarFunction = std::function<double(std::span<const double>)>;
Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> x, double h = 1e-5);

// ---- random numbers ----------------------------------------------------------

// Counter-based generator: every draw is a pure function of (key, counter).
// substream() derives statistically independent keys for a purpose/index pair
// so callers never share sequence state.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  Rng substream(std::string_view purpose, std::uint64_t index = 0) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits.
  double uniform();
  double normal();
  std::uint64_t uniform_index(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t key() const noexcept { return key_; }

private:
  Rng(std::uint64_t key, int) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash_string(std::string_view s) noexcept;

}  // namespace botaclip
