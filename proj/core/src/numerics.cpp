#include "botaclip/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

ConstMapMat view(const Matrix& m) {
  return ConstMapMat(m.values().data(), static_cast<Eigen::Index>(m.rows()),
                     static_cast<Eigen::Index>(m.cols()));
}

MapMat view(Matrix& m) {
  return MapMat(m.values().data(), static_cast<Eigen::Index>(m.rows()),
                static_cast<Eigen::Index>(m.cols()));
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw Error(ErrorKind::ShapeMismatch,
              std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                  " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

constexpr double kNormFloor = 1e-12;

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::ShapeMismatch, "matrix payload does not match rows*cols");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorKind::ShapeMismatch, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_error("matmul_nt", a, b);
  Matrix out(a.rows(), b.rows());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) shape_error("matmul_tn", a, b);
  Matrix out(a.cols(), b.cols());
  if (out.empty() || a.rows() == 0) return out;
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

void add_matmul_tn(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    shape_error("add_matmul_tn", a, b);
  }
  if (out.empty() || a.rows() == 0) return;
  view(out).noalias() += view(a).transpose() * view(b);
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

// Entry-wise row dots rather than a blocked product, so that
// gram(a, b) == transpose(gram(b, a)) holds bit for bit.
Matrix gram(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_error("gram", a, b);
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

void add_inplace(Matrix& dst, const Matrix& src, double scale) {
  if (dst.rows() != src.rows() || dst.cols() != src.cols()) shape_error("add", dst, src);
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

Matrix scaled(const Matrix& m, double s) {
  Matrix out = m;
  for (double& v : out.values()) v *= s;
  return out;
}

void add_row_vector(Matrix& m, std::span<const double> v) {
  if (v.size() != m.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "row vector length does not match matrix width");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < v.size(); ++c) row[c] += v[c];
  }
}

Vector column_sums(const Matrix& m) {
  Vector out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c];
  }
  return out;
}

Vector row_norms(const Matrix& m) {
  Vector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = norm(m.row(r));
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// Four running sums in a fixed order: vectorizes, and dot(a, b) == dot(b, a).
double dot(std::span<const double> a, std::span<const double> b) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("max_abs_diff", a, b);
  double m = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double n = norm(m.row(r));
    if (!(n > kNormFloor)) {
      throw Error(ErrorKind::ZeroRow, "row " + std::to_string(r) + " has norm " + std::to_string(n));
    }
    for (double& v : out.row(r)) v /= n;
  }
  return out;
}

Matrix l2_normalize_rows_backward(const Matrix& y, std::span<const double> norms,
                                  const Matrix& upstream) {
  if (y.rows() != upstream.rows() || y.cols() != upstream.cols() || norms.size() != y.rows()) {
    shape_error("l2_normalize_rows_backward", y, upstream);
  }
  Matrix out(y.rows(), y.cols());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto yr = y.row(r);
    auto gr = upstream.row(r);
    double proj = dot(yr, gr);
    auto o = out.row(r);
    for (std::size_t c = 0; c < y.cols(); ++c) o[c] = (gr[c] - yr[c] * proj) / norms[r];
  }
  return out;
}

double gelu(double x) { return 0.5 * x * std::erfc(-x / std::numbers::sqrt2); }

double gelu_derivative(double x) {
  double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  // log sigma(x) = -softplus(-x)
  return -softplus(-x);
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> x, double h) {
  Vector point(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    double saved = point[k];
    point[k] = saved + h;
    double up = f(point);
    point[k] = saved - h;
    double down = f(point);
    point[k] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorKind::NonFinite,
                  "non-finite evaluation at coordinate " + std::to_string(k));
    }
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed + 0x9e3779b97f4a7c15ULL)) {}

Rng Rng::substream(std::string_view purpose, std::uint64_t index) const {
  std::uint64_t k = mix64(key_ ^ hash_string(purpose));
  k = mix64(k + 0x9e3779b97f4a7c15ULL * (index + 1));
  return Rng(k, 0);
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(key_ ^ mix64(counter_ * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n <= 1) return 0;
  // Rejection keeps the draw unbiased.
  std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

}  // namespace botaclip
