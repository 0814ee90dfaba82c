#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace procams {

using Vec3 = std::array<double, 3>;

// Row-major 3x3 matrix, just enough linear algebra for channel mixing.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity() {
    Mat3 r;
    r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    return r;
  }

  double operator()(int r, int c) const { return m[3 * r + c]; }
  double& operator()(int r, int c) { return m[3 * r + c]; }

  Vec3 mul(const Vec3& v) const {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
  }

  // v^T * M, i.e. multiply by the transpose
  Vec3 tmul(const Vec3& v) const {
    return {m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
            m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
            m[2] * v[0] + m[5] * v[1] + m[8] * v[2]};
  }

  Mat3 matmul(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  Mat3 inverse() const {
    const double d = det();
    if (std::abs(d) < 1e-30) throw std::invalid_argument("singular 3x3 matrix");
    const double id = 1.0 / d;
    Mat3 r;
    r.m = {(m[4] * m[8] - m[5] * m[7]) * id, (m[2] * m[7] - m[1] * m[8]) * id,
           (m[1] * m[5] - m[2] * m[4]) * id, (m[5] * m[6] - m[3] * m[8]) * id,
           (m[0] * m[8] - m[2] * m[6]) * id, (m[2] * m[3] - m[0] * m[5]) * id,
           (m[3] * m[7] - m[4] * m[6]) * id, (m[1] * m[6] - m[0] * m[7]) * id,
           (m[0] * m[4] - m[1] * m[3]) * id};
    return r;
  }

  // 1-norm condition estimate, cheap and adequate for validity checks
  double cond1() const {
    auto norm1 = [](const Mat3& a) {
      double best = 0.0;
      for (int c = 0; c < 3; ++c) {
        double s = std::abs(a(0, c)) + std::abs(a(1, c)) + std::abs(a(2, c));
        if (s > best) best = s;
      }
      return best;
    };
    return norm1(*this) * norm1(inverse());
  }
};

}  // namespace procams
