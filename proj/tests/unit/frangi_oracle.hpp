#pragma once

// Straightforward Frangi vesselness written from the textbook definition,
// kept separate from the library code it checks.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using Image = std::vector<std::vector<double>>;

inline int mirror(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

inline Image gaussian_d2(double sigma, int radius, int which) {
  Image k(2 * radius + 1, std::vector<double>(2 * radius + 1));
  for (int y = -radius; y <= radius; ++y) {
    for (int x = -radius; x <= radius; ++x) {
      const double g = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma)) / (2.0 * M_PI * sigma * sigma);
      const double s4 = std::pow(sigma, 4.0);
      double v = 0.0;
      if (which == 0) v = (x * x - sigma * sigma) / s4 * g;
      if (which == 1) v = x * y / s4 * g;
      if (which == 2) v = (y * y - sigma * sigma) / s4 * g;
      k[y + radius][x + radius] = v;
    }
  }
  return k;
}

inline Image convolve(const Image& img, const Image& k) {
  const int h = static_cast<int>(img.size()), w = static_cast<int>(img[0].size());
  const int r = static_cast<int>(k.size()) / 2;
  Image out(h, std::vector<double>(w, 0.0));
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int u = -r; u <= r; ++u) {
        for (int v = -r; v <= r; ++v) s += k[r - u][r - v] * img[mirror(i - u, h)][mirror(j - v, w)];
      }
      out[i][j] = s;
    }
  }
  return out;
}

struct FrangiSetup {
  std::vector<double> sigmas;
  double half_width = 3.0;
  double beta = 0.5;
  double c = -1.0;  // negative: half the largest Hessian Frobenius norm
  bool dark = true;
};

inline Image frangi(Image img, const FrangiSetup& s) {
  const int h = static_cast<int>(img.size()), w = static_cast<int>(img[0].size());
  double mean = 0.0, var = 0.0;
  for (const auto& row : img)
    for (double v : row) mean += v;
  mean /= h * w;
  for (const auto& row : img)
    for (double v : row) var += (v - mean) * (v - mean);
  var /= h * w;
  for (auto& row : img)
    for (double& v : row) v = var > 0.0 ? (v - mean) / std::sqrt(var) : 0.0;

  std::vector<Image> hxx, hxy, hyy;
  double frob = 0.0;
  for (double sigma : s.sigmas) {
    int size = static_cast<int>(std::ceil(2.0 * s.half_width * sigma - 1e-9));
    if (size % 2 == 0) ++size;
    const int r = size / 2;
    hxx.push_back(convolve(img, gaussian_d2(sigma, r, 0)));
    hxy.push_back(convolve(img, gaussian_d2(sigma, r, 1)));
    hyy.push_back(convolve(img, gaussian_d2(sigma, r, 2)));
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double& a = hxx.back()[i][j];
        double& b = hxy.back()[i][j];
        double& c = hyy.back()[i][j];
        a *= sigma * sigma;
        b *= sigma * sigma;
        c *= sigma * sigma;
        frob = std::max(frob, std::sqrt(a * a + 2 * b * b + c * c));
      }
    }
  }
  const double c = s.c > 0.0 ? s.c : 0.5 * frob;
  Image out(h, std::vector<double>(w, 0.0));
  if (!(c > 0.0)) return out;
  for (std::size_t k = 0; k < s.sigmas.size(); ++k) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const double a = hxx[k][i][j], b = hxy[k][i][j], d = hyy[k][i][j];
        const double mid = 0.5 * (a + d), rad = std::hypot(0.5 * (a - d), b);
        double l1 = mid - rad, l2 = mid + rad;
        if (std::fabs(l1) > std::fabs(l2)) std::swap(l1, l2);
        if (std::fabs(l2) < 1e-12) continue;
        if (s.dark ? l2 < 0 : l2 > 0) continue;
        const double rb = l1 / l2;
        const double ss = l1 * l1 + l2 * l2;
        const double v = std::exp(-rb * rb / (2 * s.beta * s.beta)) * (1 - std::exp(-ss / (2 * c * c)));
        out[i][j] = std::max(out[i][j], v);
      }
    }
  }
  return out;
}

}  // namespace oracle
