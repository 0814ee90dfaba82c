#include "procams/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace procams {

namespace {

void check_same_size(const ImageRGB& a, const ImageRGB& b, const char* op) {
  if (!a.same_size(b))
    throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

double mse(const ImageRGB& a, const ImageRGB& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& gaussian_kernel() {
  static const std::vector<double> k = [] {
    std::vector<double> v(kWin);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - (kWin - 1) / 2.0;
      v[i] = std::exp(-d * d / (2.0 * sigma * sigma));
      sum += v[i];
    }
    for (double& x : v) x /= sum;
    return v;
  }();
  return k;
}

using Plane = std::vector<double>;

// valid-mode separable filter: (h x w) -> (h-10 x w-10)
Plane filter_valid(const Plane& in, int h, int w) {
  const auto& k = gaussian_kernel();
  const int wv = w - kWin + 1;
  const int hv = h - kWin + 1;
  Plane tmp(static_cast<std::size_t>(h) * wv, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wv; ++x) {
      double s = 0.0;
      for (int u = 0; u < kWin; ++u) s += k[u] * in[y * w + x + u];
      tmp[y * wv + x] = s;
    }
  Plane out(static_cast<std::size_t>(hv) * wv, 0.0);
  for (int y = 0; y < hv; ++y)
    for (int x = 0; x < wv; ++x) {
      double s = 0.0;
      for (int u = 0; u < kWin; ++u) s += k[u] * tmp[(y + u) * wv + x];
      out[y * wv + x] = s;
    }
  return out;
}

// transpose of filter_valid: scatters a (hv x wv) map back onto (h x w)
Plane filter_scatter(const Plane& map, int hv, int wv) {
  const auto& k = gaussian_kernel();
  const int h = hv + kWin - 1;
  const int w = wv + kWin - 1;
  Plane tmp(static_cast<std::size_t>(h) * wv, 0.0);
  for (int y = 0; y < hv; ++y)
    for (int x = 0; x < wv; ++x) {
      const double g = map[y * wv + x];
      if (g == 0.0) continue;
      for (int u = 0; u < kWin; ++u) tmp[(y + u) * wv + x] += k[u] * g;
    }
  Plane out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wv; ++x) {
      const double g = tmp[y * wv + x];
      if (g == 0.0) continue;
      for (int u = 0; u < kWin; ++u) out[y * w + x + u] += k[u] * g;
    }
  return out;
}

Plane channel_plane(const ImageRGB& img, int c) {
  Plane p(static_cast<std::size_t>(img.height) * img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p[y * img.width + x] = img.at(y, x, c);
  return p;
}

struct SsimChannel {
  double mean = 0.0;
  // per-window terms needed for the gradient
  Plane l, cs, b1, b2, mu_x, mu_y;
  int hv = 0, wv = 0;
};

SsimChannel ssim_channel(const Plane& x, const Plane& y, int h, int w,
                         bool keep_terms) {
  const int n = h * w;
  Plane x2(n), y2(n), xy(n);
  for (int i = 0; i < n; ++i) {
    x2[i] = x[i] * x[i];
    y2[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  SsimChannel r;
  r.hv = h - kWin + 1;
  r.wv = w - kWin + 1;
  Plane mu_x = filter_valid(x, h, w);
  Plane mu_y = filter_valid(y, h, w);
  Plane m_x2 = filter_valid(x2, h, w);
  Plane m_y2 = filter_valid(y2, h, w);
  Plane m_xy = filter_valid(xy, h, w);

  const std::size_t nv = mu_x.size();
  if (keep_terms) {
    r.l.resize(nv);
    r.cs.resize(nv);
    r.b1.resize(nv);
    r.b2.resize(nv);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < nv; ++i) {
    const double sx = m_x2[i] - mu_x[i] * mu_x[i];
    const double sy = m_y2[i] - mu_y[i] * mu_y[i];
    const double sxy = m_xy[i] - mu_x[i] * mu_y[i];
    const double a1 = 2.0 * mu_x[i] * mu_y[i] + kC1;
    const double a2 = 2.0 * sxy + kC2;
    const double b1 = mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1;
    const double b2 = sx + sy + kC2;
    const double l = a1 / b1;
    const double cs = a2 / b2;
    acc += l * cs;
    if (keep_terms) {
      r.l[i] = l;
      r.cs[i] = cs;
      r.b1[i] = b1;
      r.b2[i] = b2;
    }
  }
  r.mean = acc / static_cast<double>(nv);
  if (keep_terms) {
    r.mu_x = std::move(mu_x);
    r.mu_y = std::move(mu_y);
  }
  return r;
}

void check_ssim_pre(const ImageRGB& a, const ImageRGB& b) {
  check_same_size(a, b, "ssim");
  if (a.height < kWin || a.width < kWin)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
}

}  // namespace

double rmse(const ImageRGB& a, const ImageRGB& b) {
  check_same_size(a, b, "rmse");
  return std::sqrt(mse(a, b));
}

double psnr(const ImageRGB& a, const ImageRGB& b) {
  check_same_size(a, b, "psnr");
  const double m = mse(a, b);
  if (m < 1e-12) return 99.0;
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const ImageRGB& a, const ImageRGB& b) {
  check_ssim_pre(a, b);
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    acc += ssim_channel(channel_plane(a, c), channel_plane(b, c), a.height,
                        a.width, false)
               .mean;
  }
  return acc / 3.0;
}

MetricsTriple compute_metrics(const ImageRGB& a, const ImageRGB& b) {
  MetricsTriple t;
  t.rmse = rmse(a, b);
  t.psnr = psnr(a, b);
  t.ssim = ssim(a, b);
  return t;
}

double ssim_with_grad(const ImageRGB& a, const ImageRGB& b, ImageRGB& grad_a) {
  check_ssim_pre(a, b);
  grad_a = ImageRGB(a.height, a.width, 0.0);
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    Plane x = channel_plane(a, c);
    Plane y = channel_plane(b, c);
    SsimChannel s = ssim_channel(x, y, a.height, a.width, true);
    acc += s.mean;

    // dSSIM(window)/dx(q) = w(q) * (t1 + x(q)*t2 + y(q)*t3), with the window
    // terms scattered back through the transposed filter.
    const std::size_t nv = s.l.size();
    Plane t1(nv), t2(nv), t3(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      const double l = s.l[i], cs = s.cs[i];
      const double v2 = -2.0 * l * cs / s.b2[i];
      const double v3 = 2.0 * l / s.b2[i];
      t2[i] = v2;
      t3[i] = v3;
      t1[i] = 2.0 * cs * (s.mu_y[i] - l * s.mu_x[i]) / s.b1[i] -
              s.mu_y[i] * v3 - s.mu_x[i] * v2;
    }
    Plane g1 = filter_scatter(t1, s.hv, s.wv);
    Plane g2 = filter_scatter(t2, s.hv, s.wv);
    Plane g3 = filter_scatter(t3, s.hv, s.wv);
    const double scale = 1.0 / (3.0 * static_cast<double>(nv));
    for (int yy = 0; yy < a.height; ++yy)
      for (int xx = 0; xx < a.width; ++xx) {
        const std::size_t i = static_cast<std::size_t>(yy) * a.width + xx;
        grad_a.at(yy, xx, c) = scale * (g1[i] + x[i] * g2[i] + y[i] * g3[i]);
      }
  }
  return acc / 3.0;
}

}  // namespace procams
