#include "kol/frangi.hpp"

#include <algorithm>
#include <cmath>

#include "kol/errors.hpp"
#include "kol/ops.hpp"
#include "kol/tensor_ops.hpp"

namespace kol {

namespace {

constexpr double kEigenGuard = 1e-12;

using Inputs = std::span<const Tensor* const>;

std::size_t reflect(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - i);
}

void check_image(const Tensor& img) {
  if (img.rank() != 2 || img.is_complex()) throw ArgumentError("expected a real 2-D image, got " + shape_string(img.shape()));
}

void check_field(const Tensor& h, std::size_t channels, const char* what) {
  if (h.rank() != 3 || h.dim(0) != channels || h.is_complex()) {
    throw ArgumentError(std::string(what) + ": expected (" + std::to_string(channels) + ", H, W), got " +
                        shape_string(h.shape()));
  }
}

/// Image padded by r on every side with mirror reflection.
std::vector<double> pad(const Tensor& img, std::size_t r) {
  const long h = static_cast<long>(img.dim(0)), w = static_cast<long>(img.dim(1));
  const long pw = w + 2 * static_cast<long>(r);
  std::vector<double> out(static_cast<std::size_t>((h + 2 * static_cast<long>(r)) * pw));
  for (long i = 0; i < h + 2 * static_cast<long>(r); ++i) {
    const std::size_t si = reflect(i - static_cast<long>(r), h);
    for (long j = 0; j < pw; ++j) {
      out[static_cast<std::size_t>(i * pw + j)] = img[si * static_cast<std::size_t>(w) + reflect(j - static_cast<long>(r), w)];
    }
  }
  return out;
}

/// Adds a padded-domain gradient back onto the image it was padded from.
Tensor unpad_adjoint(const std::vector<double>& gpad, std::size_t h, std::size_t w, std::size_t r) {
  Tensor out({h, w});
  const std::size_t pw = w + 2 * r;
  for (std::size_t i = 0; i < h + 2 * r; ++i) {
    const std::size_t si = reflect(static_cast<long>(i) - static_cast<long>(r), static_cast<long>(h));
    for (std::size_t j = 0; j < pw; ++j) {
      out[si * w + reflect(static_cast<long>(j) - static_cast<long>(r), static_cast<long>(w))] += gpad[i * pw + j];
    }
  }
  return out;
}

/// Three kernels of equal odd size applied to one image.
Tensor convolve3(const Tensor& img, const Tensor& kxx, const Tensor& kxy, const Tensor& kyy, double gain) {
  check_image(img);
  const std::size_t k = kxx.dim(0), r = k / 2;
  const std::size_t h = img.dim(0), w = img.dim(1), pw = w + 2 * r;
  const auto p = pad(img, r);
  Tensor out({3, h, w});
  auto o = out.values();
  const auto a = kxx.values(), b = kxy.values(), c = kyy.values();
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (std::size_t u = 0; u < k; ++u) {
        const double* row = &p[(i + u) * pw + j];
        const std::size_t base = u * k;
        for (std::size_t v = 0; v < k; ++v) {
          sxx += a[base + v] * row[v];
          sxy += b[base + v] * row[v];
          syy += c[base + v] * row[v];
        }
      }
      o[i * w + j] = gain * sxx;
      o[(h + i) * w + j] = gain * sxy;
      o[(2 * h + i) * w + j] = gain * syy;
    }
  }
  return out;
}

class HessianOp final : public Operator {
 public:
  explicit HessianOp(double sigma) : gain_(sigma * sigma) {}
  std::string name() const override { return "hessian"; }
  nlohmann::json describe() const override { return {{"op", name()}, {"gain", gain_}}; }

  Tensor forward(Inputs in) const override {
    if (in.size() != 4) throw ArgumentError("hessian expects (image, kxx, kxy, kyy)");
    const Tensor& k0 = *in[1];
    for (std::size_t c = 1; c < 4; ++c) {
      const Tensor& kc = *in[c];
      if (kc.rank() != 2 || kc.dim(0) != kc.dim(1) || kc.dim(0) % 2 == 0 || kc.shape() != k0.shape()) {
        throw ArgumentError("hessian kernels must be square, odd and of equal size");
      }
    }
    return convolve3(*in[0], *in[1], *in[2], *in[3], gain_);
  }

  std::vector<Tensor> backward(Inputs in, const Tensor& out, const Tensor& g) const override {
    return backward_needed(in, out, g, {true, true, true, true});
  }

  std::vector<Tensor> backward_needed(Inputs in, const Tensor&, const Tensor& g,
                                      const std::vector<bool>& needed) const override {
    const Tensor& img = *in[0];
    const std::size_t k = in[1]->dim(0), r = k / 2;
    const std::size_t h = img.dim(0), w = img.dim(1), pw = w + 2 * r;
    const auto gv = g.values();
    const double* gc[3] = {&gv[0], &gv[h * w], &gv[2 * h * w]};
    std::vector<Tensor> grads{Tensor(), Tensor({k, k}), Tensor({k, k}), Tensor({k, k})};

    if (needed[1] || needed[2] || needed[3]) {
      const auto p = pad(img, r);
      for (std::size_t c = 0; c < 3; ++c) {
        if (!needed[c + 1]) continue;
        auto gk = grads[c + 1].values();
        for (std::size_t u = 0; u < k; ++u) {
          for (std::size_t v = 0; v < k; ++v) {
            double s = 0.0;
            for (std::size_t i = 0; i < h; ++i) {
              const double* row = &p[(i + u) * pw + v];
              const double* gr = gc[c] + i * w;
              for (std::size_t j = 0; j < w; ++j) s += gr[j] * row[j];
            }
            gk[u * k + v] = gain_ * s;
          }
        }
      }
    }
    if (needed[0]) {
      std::vector<double> gpad((h + 2 * r) * pw, 0.0);
      for (std::size_t c = 0; c < 3; ++c) {
        const auto kv = in[c + 1]->values();
        for (std::size_t i = 0; i < h; ++i) {
          for (std::size_t j = 0; j < w; ++j) {
            const double gij = gain_ * gc[c][i * w + j];
            if (gij == 0.0) continue;
            for (std::size_t u = 0; u < k; ++u) {
              double* row = &gpad[(i + u) * pw + j];
              for (std::size_t v = 0; v < k; ++v) row[v] += kv[u * k + v] * gij;
            }
          }
        }
      }
      grads[0] = unpad_adjoint(gpad, h, w, r);
    }
    return grads;
  }

 private:
  double gain_;
};

struct EigenPoint {
  double l1, l2;
  // d(l1)/d(a, b, c) and d(l2)/d(a, b, c) for the matrix [[a, b], [b, c]].
  double d1[3], d2[3];
};

EigenPoint eigen_point(double a, double b, double c) {
  const double half_tr = 0.5 * (a + c), d = a - c;
  const double r = std::sqrt(0.25 * d * d + b * b);
  const double lp = half_tr + r, lm = half_tr - r;
  double dr[3] = {0.0, 0.0, 0.0};
  if (r > 0.0) {
    dr[0] = 0.25 * d / r;
    dr[1] = b / r;
    dr[2] = -0.25 * d / r;
  }
  const double dh[3] = {0.5, 0.0, 0.5};
  EigenPoint e{};
  // trace >= 0 makes l+ the larger magnitude; at trace 0 it is also the larger value.
  const bool plus_is_l2 = half_tr >= 0.0;
  e.l2 = plus_is_l2 ? lp : lm;
  e.l1 = plus_is_l2 ? lm : lp;
  const double s2 = plus_is_l2 ? 1.0 : -1.0;
  for (int q = 0; q < 3; ++q) {
    e.d2[q] = dh[q] + s2 * dr[q];
    e.d1[q] = dh[q] - s2 * dr[q];
  }
  return e;
}

class Eig2x2Op final : public Operator {
 public:
  std::string name() const override { return "eig2x2"; }

  Tensor forward(Inputs in) const override {
    if (in.size() != 1) throw ArgumentError("eig2x2 expects one input");
    check_field(*in[0], 3, "eig2x2");
    const std::size_t n = in[0]->size() / 3;
    const auto h = in[0]->values();
    Tensor out({2, in[0]->dim(1), in[0]->dim(2)});
    auto o = out.values();
    for (std::size_t i = 0; i < n; ++i) {
      const EigenPoint e = eigen_point(h[i], h[n + i], h[2 * n + i]);
      o[i] = e.l1;
      o[n + i] = e.l2;
    }
    return out;
  }

  std::vector<Tensor> backward(Inputs in, const Tensor&, const Tensor& g) const override {
    const std::size_t n = in[0]->size() / 3;
    const auto h = in[0]->values();
    const auto gv = g.values();
    Tensor dh(in[0]->shape());
    auto d = dh.values();
    for (std::size_t i = 0; i < n; ++i) {
      const EigenPoint e = eigen_point(h[i], h[n + i], h[2 * n + i]);
      for (std::size_t q = 0; q < 3; ++q) d[q * n + i] = gv[i] * e.d1[q] + gv[n + i] * e.d2[q];
    }
    return {dh};
  }
};

class MaxFrobeniusOp final : public Operator {
 public:
  std::string name() const override { return "max_frobenius"; }

  Tensor forward(Inputs in) const override {
    if (in.size() != 1) throw ArgumentError("max_frobenius expects one input");
    check_field(*in[0], 3, "max_frobenius");
    return Tensor::scalar(max_frobenius(*in[0]));
  }

  std::vector<Tensor> backward(Inputs in, const Tensor& out, const Tensor& g) const override {
    const std::size_t n = in[0]->size() / 3;
    const auto h = in[0]->values();
    Tensor dh(in[0]->shape());
    const double m = out.item();
    if (m == 0.0) return {dh};
    for (std::size_t i = 0; i < n; ++i) {
      const double f = std::sqrt(h[i] * h[i] + 2.0 * h[n + i] * h[n + i] + h[2 * n + i] * h[2 * n + i]);
      if (f == m) {
        const double s = g.item() / m;
        dh[i] = s * h[i];
        dh[n + i] = 2.0 * s * h[n + i];
        dh[2 * n + i] = s * h[2 * n + i];
        break;
      }
    }
    return {dh};
  }
};

struct VesselPoint {
  double v = 0.0;
  double dl1 = 0.0, dl2 = 0.0, dbeta = 0.0, dc = 0.0;
};

VesselPoint vessel_point(double l1, double l2, double beta, double c, Polarity pol) {
  VesselPoint p;
  if (std::abs(l2) < kEigenGuard || c == 0.0) return p;
  if (pol == Polarity::dark ? l2 < 0.0 : l2 > 0.0) return p;
  const double a2 = std::abs(l2);
  const double rb = std::abs(l1) / a2;
  const double s2 = l1 * l1 + l2 * l2;
  const double er = std::exp(-rb * rb / (2.0 * beta * beta));
  const double es = std::exp(-s2 / (2.0 * c * c));
  p.v = er * (1.0 - es);
  const double sgn1 = l1 > 0.0 ? 1.0 : (l1 < 0.0 ? -1.0 : 0.0);
  const double sgn2 = l2 > 0.0 ? 1.0 : -1.0;
  const double drb_dl1 = sgn1 / a2;
  const double drb_dl2 = -rb * sgn2 / a2;
  const double dv_drb = -(rb / (beta * beta)) * p.v;
  p.dl1 = dv_drb * drb_dl1 + er * es * l1 / (c * c);
  p.dl2 = dv_drb * drb_dl2 + er * es * l2 / (c * c);
  p.dbeta = p.v * rb * rb / (beta * beta * beta);
  p.dc = -er * es * s2 / (c * c * c);
  return p;
}

class VesselnessOp final : public Operator {
 public:
  explicit VesselnessOp(Polarity p) : polarity_(p) {}
  std::string name() const override { return "vesselness"; }
  nlohmann::json describe() const override { return {{"op", name()}, {"polarity", to_string(polarity_)}}; }

  Tensor forward(Inputs in) const override {
    check(in);
    const std::size_t n = in[0]->size() / 2;
    const auto l = in[0]->values();
    const double beta = in[1]->item(), c = in[2]->item();
    Tensor out({in[0]->dim(1), in[0]->dim(2)});
    for (std::size_t i = 0; i < n; ++i) out[i] = vessel_point(l[i], l[n + i], beta, c, polarity_).v;
    return out;
  }

  std::vector<Tensor> backward(Inputs in, const Tensor&, const Tensor& g) const override {
    const std::size_t n = in[0]->size() / 2;
    const auto l = in[0]->values();
    const double beta = in[1]->item(), c = in[2]->item();
    Tensor dl(in[0]->shape());
    double db = 0.0, dc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const VesselPoint p = vessel_point(l[i], l[n + i], beta, c, polarity_);
      dl[i] = g[i] * p.dl1;
      dl[n + i] = g[i] * p.dl2;
      db += g[i] * p.dbeta;
      dc += g[i] * p.dc;
    }
    return {dl, Tensor::scalar(db), Tensor::scalar(dc)};
  }

 private:
  void check(Inputs in) const {
    if (in.size() != 3) throw ArgumentError("vesselness expects (eigenvalues, beta, c)");
    check_field(*in[0], 2, "vesselness");
    if (in[1]->size() != 1 || in[2]->size() != 1) throw ArgumentError("vesselness: beta and c must be scalars");
    // c is 0 only for an image without any structure, where the response is 0.
    if (!(in[1]->item() > 0.0) || !(in[2]->item() >= 0.0)) {
      throw NumericalError("vesselness: beta must stay positive and c non-negative");
    }
  }

  Polarity polarity_;
};

Tensor gaussian_derivative(double sigma, std::size_t size, int which) {
  Tensor k({size, size});
  const long r = static_cast<long>(size / 2);
  const double s2 = sigma * sigma, s4 = s2 * s2;
  for (long a = -r; a <= r; ++a) {
    for (long b = -r; b <= r; ++b) {
      const double y = static_cast<double>(a), x = static_cast<double>(b);
      const double g = std::exp(-(x * x + y * y) / (2.0 * s2)) / (2.0 * M_PI * s2);
      double v = 0.0;
      switch (which) {
        case 0: v = (x * x / s4 - 1.0 / s2) * g; break;
        case 1: v = x * y / s4 * g; break;
        default: v = (y * y / s4 - 1.0 / s2) * g; break;
      }
      k[static_cast<std::size_t>((a + r) * static_cast<long>(size) + (b + r))] = v;
    }
  }
  return k;
}

}  // namespace

void ScaleBank::validate() const {
  if (sigmas.empty()) throw ArgumentError("scale bank is empty");
  if (kxx.size() != sigmas.size() || kxy.size() != sigmas.size() || kyy.size() != sigmas.size()) {
    throw ArgumentError("scale bank needs three kernels per scale");
  }
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0)) throw ArgumentError("scales must be positive");
    const Shape& s = kxx[i].shape();
    if (s.size() != 2 || s[0] != s[1] || s[0] % 2 == 0 || kxy[i].shape() != s || kyy[i].shape() != s) {
      throw ArgumentError("scale bank kernels must be square, odd and of equal size per scale");
    }
  }
}

std::size_t gaussian_kernel_size(double sigma, double half_width_sigmas) {
  if (!(sigma > 0.0) || !(half_width_sigmas > 0.0)) throw ArgumentError("kernel size needs positive sigma and width");
  auto n = static_cast<std::size_t>(std::ceil(2.0 * half_width_sigmas * sigma - 1e-9));
  if (n % 2 == 0) ++n;
  return n;
}

ScaleBank gaussian_bank(const std::vector<double>& sigmas, double half_width_sigmas, bool trainable) {
  ScaleBank bank;
  bank.trainable = trainable;
  for (double s : sigmas) {
    const std::size_t n = gaussian_kernel_size(s, half_width_sigmas);
    bank.sigmas.push_back(s);
    bank.kxx.push_back(gaussian_derivative(s, n, 0));
    bank.kxy.push_back(gaussian_derivative(s, n, 1));
    bank.kyy.push_back(gaussian_derivative(s, n, 2));
  }
  bank.validate();
  return bank;
}

ScaleBank geometric_bank(std::size_t count, double sigma_min, double sigma_max, double half_width_sigmas,
                         bool trainable) {
  if (count == 0 || !(sigma_min > 0.0) || sigma_max < sigma_min) throw ArgumentError("invalid scale range");
  std::vector<double> s(count, sigma_min);
  for (std::size_t i = 1; i < count; ++i) {
    s[i] = sigma_min * std::pow(sigma_max / sigma_min, static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return gaussian_bank(s, half_width_sigmas, trainable);
}

Polarity polarity_from_string(const std::string& s) {
  if (s == "dark") return Polarity::dark;
  if (s == "bright") return Polarity::bright;
  throw ArgumentError("unknown polarity '" + s + "'");
}

std::string to_string(Polarity p) { return p == Polarity::dark ? "dark" : "bright"; }

void FrangiParams::validate() const {
  if (!(beta > 0.0)) throw ArgumentError("beta must be positive");
  if (c && !(*c > 0.0)) throw ArgumentError("c must be positive");
}

Tensor normalize_image(const Tensor& img) {
  check_image(img);
  const double m = mean(img);
  double var = 0.0;
  for (double v : img.values()) var += (v - m) * (v - m);
  var /= static_cast<double>(img.size());
  Tensor out(img.shape());
  if (var == 0.0) return out;
  const double inv = 1.0 / std::sqrt(var);
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = (img[i] - m) * inv;
  return out;
}

Tensor hessian(const Tensor& img, const ScaleBank& bank, std::size_t scale_index) {
  if (scale_index >= bank.size()) throw ArgumentError("scale index " + std::to_string(scale_index) + " out of range");
  const double s = bank.sigmas[scale_index];
  return convolve3(img, bank.kxx[scale_index], bank.kxy[scale_index], bank.kyy[scale_index], s * s);
}

std::pair<Tensor, Tensor> eig2x2(const Tensor& h) {
  check_field(h, 3, "eig2x2");
  const Tensor* args[] = {&h};
  const Tensor l = Eig2x2Op().forward(args);
  const std::size_t n = l.size() / 2;
  const Shape s{h.dim(1), h.dim(2)};
  const auto lv = l.values();
  return {Tensor(s, std::vector<double>(lv.begin(), lv.begin() + static_cast<long>(n))),
          Tensor(s, std::vector<double>(lv.begin() + static_cast<long>(n), lv.end()))};
}

Tensor vesselness(const Tensor& l1, const Tensor& l2, const FrangiParams& params, double c) {
  params.validate();
  if (!l1.same_shape(l2)) throw ArgumentError("vesselness: eigenvalue shapes differ");
  if (!(c > 0.0)) throw ArgumentError("vesselness: c must be positive");
  Tensor out(l1.shape());
  for (std::size_t i = 0; i < l1.size(); ++i) out[i] = vessel_point(l1[i], l2[i], params.beta, c, params.polarity).v;
  return out;
}

double max_frobenius(const Tensor& h) {
  check_field(h, 3, "max_frobenius");
  const std::size_t n = h.size() / 3;
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m = std::max(m, std::sqrt(h[i] * h[i] + 2.0 * h[n + i] * h[n + i] + h[2 * n + i] * h[2 * n + i]));
  }
  return m;
}

Tensor frangi_multiscale(const Tensor& img, const ScaleBank& bank, const FrangiParams& params) {
  bank.validate();
  params.validate();
  const Tensor x = normalize_image(img);
  std::vector<Tensor> hs;
  double c = 0.0;
  for (std::size_t s = 0; s < bank.size(); ++s) {
    hs.push_back(hessian(x, bank, s));
    c = std::max(c, max_frobenius(hs.back()));
  }
  c = params.c ? *params.c : 0.5 * c;
  Tensor out(img.shape());
  if (!(c > 0.0)) return out;
  for (const auto& h : hs) {
    const auto [l1, l2] = eig2x2(h);
    out = maximum(out, vesselness(l1, l2, params, c));
  }
  return out;
}

OperatorPtr hessian_op(double sigma) { return std::make_shared<HessianOp>(sigma); }
OperatorPtr eig2x2_op() { return std::make_shared<Eig2x2Op>(); }
OperatorPtr max_frobenius_op() { return std::make_shared<MaxFrobeniusOp>(); }
OperatorPtr vesselness_op(Polarity polarity) { return std::make_shared<VesselnessOp>(polarity); }

std::string FrangiNetwork::kernel_name(const char* which, std::size_t scale) {
  return std::string("k") + which + "_" + std::to_string(scale);
}

FrangiNetwork frangi_network(const ScaleBank& bank, const FrangiParams& params, bool head_trainable) {
  bank.validate();
  params.validate();
  if (head_trainable && !params.c) throw ArgumentError("a trainable head needs an initial c");
  FrangiNetwork net;
  net.sigmas = bank.sigmas;
  net.params = params;
  Graph& g = net.graph;
  const NodeId x = g.input(FrangiNetwork::kInput);
  std::vector<NodeId> hs, frob;
  for (std::size_t s = 0; s < bank.size(); ++s) {
    const NodeId kxx = g.parameter(FrangiNetwork::kernel_name("xx", s), bank.kxx[s], bank.trainable);
    const NodeId kxy = g.parameter(FrangiNetwork::kernel_name("xy", s), bank.kxy[s], bank.trainable);
    const NodeId kyy = g.parameter(FrangiNetwork::kernel_name("yy", s), bank.kyy[s], bank.trainable);
    hs.push_back(g.apply(hessian_op(bank.sigmas[s]), {x, kxx, kxy, kyy}, "hessian_" + std::to_string(s)));
    if (!params.c) frob.push_back(g.apply(max_frobenius_op(), {hs.back()}, "frobenius_" + std::to_string(s)));
  }
  const NodeId beta = g.parameter("beta", Tensor::scalar(params.beta), head_trainable);
  NodeId c;
  if (params.c) {
    c = g.parameter("c", Tensor::scalar(*params.c), head_trainable);
  } else {
    c = g.apply(ops::constant_scale(0.5), {g.apply(ops::max(), frob, "max_frobenius")}, "c");
  }
  std::vector<NodeId> vs;
  for (std::size_t s = 0; s < bank.size(); ++s) {
    const NodeId l = g.apply(eig2x2_op(), {hs[s]}, "eig_" + std::to_string(s));
    vs.push_back(g.apply(vesselness_op(params.polarity), {l, beta, c}, "vesselness_" + std::to_string(s)));
  }
  g.apply(ops::max(), vs, "response");
  return net;
}

Bindings FrangiNetwork::bind(const Tensor& img) const { return {{kInput, normalize_image(img)}}; }

Tensor FrangiNetwork::predict(const Tensor& img) const { return graph.evaluate(bind(img)); }

ScaleBank FrangiNetwork::bank() const {
  ScaleBank b;
  b.sigmas = sigmas;
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    b.kxx.push_back(graph.parameter_value(kernel_name("xx", s)));
    b.kxy.push_back(graph.parameter_value(kernel_name("xy", s)));
    b.kyy.push_back(graph.parameter_value(kernel_name("yy", s)));
  }
  b.trainable = graph.is_trainable(kernel_name("xx", 0));
  return b;
}

std::size_t frangi_param_count(const ScaleBank& bank, bool head_trainable) {
  bank.validate();
  std::size_t n = 0;
  if (bank.trainable) {
    for (std::size_t s = 0; s < bank.size(); ++s) n += 3 * bank.kxx[s].size();
  }
  return n + (head_trainable ? 2 : 0);
}

}  // namespace kol
