#pragma once

#include <optional>

#include "kol/tensor.hpp"

namespace kol {

enum class Elementwise { add, sub, mul, relu, exp, abs, max };
enum class NormKind { l1, l2, inf };

/// Pointwise application of `op`. Binary ops (add, sub, mul, max) require `b`
/// with the same shape as `a`. add/sub/mul accept complex operands; abs maps
/// complex to real magnitude; relu, exp and max are real-only.
Tensor elementwise(Elementwise op, const Tensor& a, const std::optional<Tensor>& b = std::nullopt);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor scale(const Tensor& a, Complex s);
/// a + s * b
Tensor axpy(const Tensor& a, double s, const Tensor& b);

/// Vector p-norm over every entry (complex entries contribute |z|).
double norm(const Tensor& t, NormKind p);
/// Real inner product: sum of Re(conj(a_i) * b_i).
double dot(const Tensor& a, const Tensor& b);
double sum(const Tensor& t);
double mean(const Tensor& t);
double max_value(const Tensor& t);
double min_value(const Tensor& t);

}  // namespace kol
