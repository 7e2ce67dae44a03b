#include "kol/ops.hpp"

#include <cmath>

#include "kol/errors.hpp"
#include "kol/tensor_ops.hpp"

namespace kol::ops {

namespace {

using Inputs = std::span<const Tensor* const>;

void expect_arity(Inputs in, std::size_t n, const char* op) {
  if (in.size() != n) {
    throw ArgumentError(std::string(op) + " expects " + std::to_string(n) + " inputs, got " +
                        std::to_string(in.size()));
  }
}

void expect_same(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ArgumentError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                        shape_string(b.shape()));
  }
}

/// Pointwise op with a derivative expressed through (x, y).
class Pointwise final : public Operator {
 public:
  using Fn = double (*)(double);
  using Dfn = double (*)(double x, double y);
  Pointwise(std::string name, Fn f, Dfn df) : name_(std::move(name)), f_(f), df_(df) {}

  std::string name() const override { return name_; }

  Tensor forward(Inputs in) const override {
    expect_arity(in, 1, name_.c_str());
    const auto x = in[0]->values();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = f_(x[i]);
    return Tensor(in[0]->shape(), std::move(y));
  }

  std::vector<Tensor> backward(Inputs in, const Tensor& out, const Tensor& g) const override {
    const auto x = in[0]->values();
    const auto y = out.values();
    const auto gv = g.values();
    std::vector<double> dx(x.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = gv[i] * df_(x[i], y[i]);
    return {Tensor(in[0]->shape(), std::move(dx))};
  }

 private:
  std::string name_;
  Fn f_;
  Dfn df_;
};

class Binary final : public Operator {
 public:
  enum class Kind { add, sub, mul };
  explicit Binary(Kind k) : kind_(k) {}

  std::string name() const override {
    switch (kind_) {
      case Kind::add: return "add";
      case Kind::sub: return "sub";
      case Kind::mul: return "mul";
    }
    return "?";
  }

  Tensor forward(Inputs in) const override {
    expect_arity(in, 2, "binary op");
    expect_same(*in[0], *in[1], name().c_str());
    switch (kind_) {
      case Kind::add: return kol::add(*in[0], *in[1]);
      case Kind::sub: return kol::sub(*in[0], *in[1]);
      case Kind::mul: return kol::mul(*in[0], *in[1]);
    }
    return {};
  }

  std::vector<Tensor> backward(Inputs in, const Tensor&, const Tensor& g) const override {
    switch (kind_) {
      case Kind::add: return {g, g};
      case Kind::sub: return {g, kol::scale(g, -1.0)};
      case Kind::mul: return {kol::mul(g, *in[1]), kol::mul(g, *in[0])};
    }
    return {};
  }

 private:
  Kind kind_;
};

class ScaleBy final : public Operator {
 public:
  std::string name() const override { return "scale_by"; }
  Tensor forward(Inputs in) const override {
    expect_arity(in, 2, "scale_by");
    if (in[1]->size() != 1) throw ArgumentError("scale_by: second input must be a scalar");
    return kol::scale(*in[0], in[1]->item());
  }
  std::vector<Tensor> backward(Inputs in, const Tensor&, const Tensor& g) const override {
    return {kol::scale(g, in[1]->item()), Tensor(in[1]->shape(), kol::dot(g, *in[0]))};
  }
};

class ConstantScale final : public Operator {
 public:
  explicit ConstantScale(double f) : factor_(f) {}
  std::string name() const override { return "constant_scale"; }
  nlohmann::json describe() const override { return {{"op", name()}, {"factor", factor_}}; }
  Tensor forward(Inputs in) const override {
    expect_arity(in, 1, "constant_scale");
    return kol::scale(*in[0], factor_);
  }
  std::vector<Tensor> backward(Inputs, const Tensor&, const Tensor& g) const override {
    return {kol::scale(g, factor_)};
  }

 private:
  double factor_;
};

class Identity final : public Operator {
 public:
  std::string name() const override { return "identity"; }
  Tensor forward(Inputs in) const override {
    expect_arity(in, 1, "identity");
    return *in[0];
  }
  std::vector<Tensor> backward(Inputs, const Tensor&, const Tensor& g) const override { return {g}; }
};

class Max final : public Operator {
 public:
  std::string name() const override { return "max"; }
  Tensor forward(Inputs in) const override {
    if (in.empty()) throw ArgumentError("max needs at least one input");
    Tensor out = *in[0];
    for (std::size_t k = 1; k < in.size(); ++k) {
      expect_same(*in[0], *in[k], "max");
      out = kol::maximum(out, *in[k]);
    }
    return out;
  }
  std::vector<Tensor> backward(Inputs in, const Tensor& out, const Tensor& g) const override {
    std::vector<Tensor> grads;
    grads.reserve(in.size());
    for (std::size_t k = 0; k < in.size(); ++k) grads.push_back(Tensor::zeros(in[k]->shape()));
    const auto y = out.values();
    const auto gv = g.values();
    for (std::size_t i = 0; i < y.size(); ++i) {
      for (std::size_t k = 0; k < in.size(); ++k) {
        if ((*in[k])[i] == y[i]) {
          grads[k][i] = gv[i];
          break;
        }
      }
    }
    return grads;
  }
};

class Sum final : public Operator {
 public:
  std::string name() const override { return "sum"; }
  Tensor forward(Inputs in) const override {
    expect_arity(in, 1, "sum");
    return Tensor::scalar(kol::sum(*in[0]));
  }
  std::vector<Tensor> backward(Inputs in, const Tensor&, const Tensor& g) const override {
    return {Tensor(in[0]->shape(), g.item())};
  }
};

class MatMul final : public Operator {
 public:
  std::string name() const override { return "matmul"; }
  Tensor forward(Inputs in) const override {
    expect_arity(in, 2, "matmul");
    const Tensor& a = *in[0];
    const Tensor& b = *in[1];
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
      throw ArgumentError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                          shape_string(b.shape()));
    }
    return product(a, false, b, false);
  }
  std::vector<Tensor> backward(Inputs in, const Tensor&, const Tensor& g) const override {
    return {product(g, false, *in[1], true), product(*in[0], true, g, false)};
  }

 private:
  static Tensor product(const Tensor& a, bool ta, const Tensor& b, bool tb) {
    const std::size_t m = ta ? a.dim(1) : a.dim(0);
    const std::size_t k = ta ? a.dim(0) : a.dim(1);
    const std::size_t n = tb ? b.dim(0) : b.dim(1);
    const std::size_t lda = a.dim(1);
    const std::size_t ldb = b.dim(1);
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ta ? av[p * lda + i] : av[i * lda + p];
        if (aip == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          c[i * n + j] += aip * (tb ? bv[j * ldb + p] : bv[p * ldb + j]);
        }
      }
    }
    return Tensor(Shape{m, n}, std::move(c));
  }
};

class Linear final : public Operator {
 public:
  explicit Linear(LinearMap map) : map_(std::move(map)) {}
  std::string name() const override { return map_.name; }
  nlohmann::json describe() const override {
    return {{"op", map_.name}, {"linear", true}, {"in_shape", map_.in_shape}, {"out_shape", map_.out_shape}};
  }
  Tensor forward(Inputs in) const override {
    expect_arity(in, 1, map_.name.c_str());
    if (in[0]->shape() != map_.in_shape) {
      throw ArgumentError("expected input shape " + shape_string(map_.in_shape) + ", got " +
                          shape_string(in[0]->shape()));
    }
    return map_.apply(*in[0]);
  }
  std::vector<Tensor> backward(Inputs, const Tensor&, const Tensor& g) const override {
    return {map_.adjoint(g)};
  }

 private:
  LinearMap map_;
};

std::vector<Complex> padded_spectrum_row(std::span<const double> row, std::size_t length) {
  std::vector<Complex> line(length);
  for (std::size_t j = 0; j < row.size(); ++j) line[j] = row[j];
  dft_line(line, false);
  return line;
}

class RowFilter final : public Operator {
 public:
  RowFilter(std::size_t n, std::size_t length) : n_(n), length_(length) {
    if (length_ < n_) throw ArgumentError("row_filter: spectrum length shorter than the row");
  }
  std::string name() const override { return "row_filter"; }
  nlohmann::json describe() const override {
    return {{"op", name()}, {"row_length", n_}, {"spectrum_length", length_}};
  }

  Tensor forward(Inputs in) const override {
    expect_arity(in, 2, "row_filter");
    check(*in[0], *in[1]);
    return apply_row_filter(*in[0], halfcomplex_to_spectrum(in[1]->values()));
  }

  std::vector<Tensor> backward(Inputs in, const Tensor&, const Tensor& g) const override {
    const auto c = halfcomplex_to_spectrum(in[1]->values());
    std::vector<Complex> cc(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) cc[k] = std::conj(c[k]);
    Tensor dx = apply_row_filter(g, cc);

    const std::size_t rows = in[0]->dim(0);
    std::vector<double> gr(length_, 0.0), gi(length_, 0.0);
    const auto xv = in[0]->values();
    const auto gv = g.values();
    for (std::size_t r = 0; r < rows; ++r) {
      const auto xs = padded_spectrum_row(xv.subspan(r * n_, n_), length_);
      const auto gs = padded_spectrum_row(gv.subspan(r * n_, n_), length_);
      for (std::size_t k = 0; k < length_; ++k) {
        const Complex a = std::conj(gs[k]) * xs[k];
        gr[k] += a.real();
        gi[k] -= a.imag();
      }
    }
    return {std::move(dx), Tensor(Shape{length_}, halfcomplex_pullback(gr, gi))};
  }

 private:
  void check(const Tensor& x, const Tensor& p) const {
    if (x.rank() != 2 || x.dim(1) != n_) {
      throw ArgumentError("row_filter expects (rows x " + std::to_string(n_) + "), got " + shape_string(x.shape()));
    }
    if (p.size() != length_) throw ArgumentError("row_filter: parameter length mismatch");
  }
  std::size_t n_;
  std::size_t length_;
};

class SpectralRowFilter final : public Operator {
 public:
  explicit SpectralRowFilter(std::size_t n) : n_(n) {}
  std::string name() const override { return "spectral_row_filter"; }
  nlohmann::json describe() const override { return {{"op", name()}, {"row_length", n_}}; }

  Tensor forward(Inputs in) const override {
    expect_arity(in, 2, "spectral_row_filter");
    const Tensor& x = *in[0];
    if (!x.is_complex() || x.rank() != 2 || x.dim(1) != n_) {
      throw ArgumentError("spectral_row_filter expects complex (rows x " + std::to_string(n_) + "), got " +
                          shape_string(x.shape()));
    }
    if (in[1]->size() != n_) throw ArgumentError("spectral_row_filter: parameter length mismatch");
    const auto c = halfcomplex_to_spectrum(in[1]->values());
    const std::size_t rows = x.dim(0);
    const auto xv = x.cvalues();
    std::vector<double> out(rows * n_);
    std::vector<Complex> line(n_);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < n_; ++k) line[k] = c[k] * xv[r * n_ + k];
      dft_line(line, true);
      for (std::size_t k = 0; k < n_; ++k) out[r * n_ + k] = line[k].real();
    }
    return Tensor(Shape{rows, n_}, std::move(out));
  }

  std::vector<Tensor> backward(Inputs in, const Tensor&, const Tensor& g) const override {
    const Tensor& x = *in[0];
    const auto c = halfcomplex_to_spectrum(in[1]->values());
    const std::size_t rows = x.dim(0);
    const auto xv = x.cvalues();
    const auto gv = g.values();
    std::vector<Complex> dx(rows * n_);
    std::vector<double> gr(n_, 0.0), gi(n_, 0.0);
    std::vector<Complex> line(n_);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < n_; ++k) line[k] = gv[r * n_ + k];
      dft_line(line, false);
      for (std::size_t k = 0; k < n_; ++k) {
        dx[r * n_ + k] = std::conj(c[k]) * line[k];
        const Complex a = std::conj(line[k]) * xv[r * n_ + k];
        gr[k] += a.real();
        gi[k] -= a.imag();
      }
    }
    return {Tensor(x.shape(), std::move(dx)), Tensor(Shape{n_}, halfcomplex_pullback(gr, gi))};
  }

 private:
  std::size_t n_;
};

double sigmoid_fn(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor apply_row_filter(const Tensor& rows, std::span<const Complex> spectrum) {
  if (rows.rank() != 2) throw ArgumentError("row filter expects a 2-D tensor");
  const std::size_t r = rows.dim(0);
  const std::size_t n = rows.dim(1);
  const std::size_t length = spectrum.size();
  if (length < n) throw ArgumentError("row filter spectrum shorter than the rows");
  const auto xv = rows.values();
  std::vector<double> out(r * n);
  for (std::size_t i = 0; i < r; ++i) {
    auto line = padded_spectrum_row(xv.subspan(i * n, n), length);
    for (std::size_t k = 0; k < length; ++k) line[k] *= spectrum[k];
    dft_line(line, true);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = line[j].real();
  }
  return Tensor(rows.shape(), std::move(out));
}

OperatorPtr add() { return std::make_shared<Binary>(Binary::Kind::add); }
OperatorPtr sub() { return std::make_shared<Binary>(Binary::Kind::sub); }
OperatorPtr mul() { return std::make_shared<Binary>(Binary::Kind::mul); }
OperatorPtr scale_by() { return std::make_shared<ScaleBy>(); }
OperatorPtr constant_scale(double factor) { return std::make_shared<ConstantScale>(factor); }
OperatorPtr identity() { return std::make_shared<Identity>(); }
OperatorPtr max() { return std::make_shared<Max>(); }
OperatorPtr sum() { return std::make_shared<Sum>(); }
OperatorPtr matmul() { return std::make_shared<MatMul>(); }
OperatorPtr linear(LinearMap map) { return std::make_shared<Linear>(std::move(map)); }
OperatorPtr row_filter(std::size_t n, std::size_t length) { return std::make_shared<RowFilter>(n, length); }
OperatorPtr spectral_row_filter(std::size_t n) { return std::make_shared<SpectralRowFilter>(n); }

OperatorPtr relu() {
  return std::make_shared<Pointwise>(
      "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

OperatorPtr exp() {
  return std::make_shared<Pointwise>(
      "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

OperatorPtr sigmoid() {
  return std::make_shared<Pointwise>("sigmoid", sigmoid_fn, [](double, double y) { return y * (1.0 - y); });
}

OperatorPtr tanh() {
  return std::make_shared<Pointwise>(
      "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

OperatorPtr square() {
  return std::make_shared<Pointwise>(
      "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

}  // namespace kol::ops
