#include "mvbridge/tape.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace mvbridge {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLayerNormEps = 1e-5;

std::int64_t prod(std::span<const std::int64_t> dims) {
  std::int64_t p = 1;
  for (std::int64_t d : dims) p *= d;
  return p;
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(op + ": shapes " + a.shape_str() + " and " + b.shape_str() + " not conformable");
}

// rhs broadcasts over lhs when its shape equals the trailing dims of lhs.
bool is_suffix(const std::vector<std::int64_t>& small, const std::vector<std::int64_t>& big) {
  if (small.size() > big.size()) return false;
  const std::size_t off = big.size() - small.size();
  for (std::size_t i = 0; i < small.size(); ++i)
    if (small[i] != big[off + i]) return false;
  return true;
}

}  // namespace

Tape::Id Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (ta.rank() < 2 || tb.rank() < 2) shape_error("matmul", ta, tb);
  const std::int64_t m = ta.shape()[ta.rank() - 2];
  const std::int64_t k = ta.shape()[ta.rank() - 1];
  const std::int64_t kb = tb.shape()[tb.rank() - 2];
  const std::int64_t n = tb.shape()[tb.rank() - 1];
  if (k != kb) shape_error("matmul", ta, tb);

  std::vector<std::int64_t> batch(ta.shape().begin(), ta.shape().end() - 2);
  const bool shared_rhs = tb.rank() == 2;
  if (!shared_rhs) {
    std::vector<std::int64_t> batch_b(tb.shape().begin(), tb.shape().end() - 2);
    if (batch != batch_b) shape_error("matmul", ta, tb);
  }
  const std::int64_t nbatch = prod(batch);

  std::vector<std::int64_t> out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor out(out_shape);
  for (std::int64_t i = 0; i < nbatch; ++i) {
    CMap A(ta.data() + i * m * k, m, k);
    CMap B(tb.data() + (shared_rhs ? 0 : i * k * n), k, n);
    MMap C(out.data() + i * m * n, m, n);
    C.noalias() = A * B;
  }

  Node node;
  node.op = Op::kMatMul;
  node.inputs = {a, b};
  node.value = std::move(out);
  node.needs_grad = needs(a) || needs(b);
  node.aux = {nbatch, m, k, n, shared_rhs ? 1 : 0};
  return push(std::move(node));
}

Tape::Id Tape::add(Id a, Id b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!is_suffix(tb.shape(), ta.shape())) shape_error("add", ta, tb);
  Tensor out(ta.shape());
  const std::int64_t nb = tb.size();
  for (std::int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] + tb[i % nb];
  Node node;
  node.op = Op::kAdd;
  node.inputs = {a, b};
  node.value = std::move(out);
  node.needs_grad = needs(a) || needs(b);
  return push(std::move(node));
}

Tape::Id Tape::mul(Id a, Id b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!is_suffix(tb.shape(), ta.shape())) shape_error("mul", ta, tb);
  Tensor out(ta.shape());
  const std::int64_t nb = tb.size();
  for (std::int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * tb[i % nb];
  Node node;
  node.op = Op::kMul;
  node.inputs = {a, b};
  node.value = std::move(out);
  node.needs_grad = needs(a) || needs(b);
  return push(std::move(node));
}

Tape::Id Tape::scale(Id a, double factor) {
  const Tensor& ta = val(a);
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * factor;
  Node node;
  node.op = Op::kScale;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = needs(a);
  node.scalar = factor;
  return push(std::move(node));
}

Tape::Id Tape::sum(Id a) {
  const Tensor& ta = val(a);
  double acc = 0.0;
  for (std::int64_t i = 0; i < ta.size(); ++i) acc += ta[i];
  Node node;
  node.op = Op::kSum;
  node.inputs = {a};
  node.value = Tensor::scalar(acc);
  node.needs_grad = needs(a);
  return push(std::move(node));
}

Tape::Id Tape::mean(Id a) {
  const Tensor& ta = val(a);
  double acc = 0.0;
  for (std::int64_t i = 0; i < ta.size(); ++i) acc += ta[i];
  Node node;
  node.op = Op::kMean;
  node.inputs = {a};
  node.value = Tensor::scalar(acc / static_cast<double>(ta.size()));
  node.needs_grad = needs(a);
  return push(std::move(node));
}

Tape::Id Tape::relu(Id a) {
  const Tensor& ta = val(a);
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] > 0.0 ? ta[i] : 0.0;
  Node node;
  node.op = Op::kRelu;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = needs(a);
  return push(std::move(node));
}

Tape::Id Tape::gelu(Id a) {
  const Tensor& ta = val(a);
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.size(); ++i) {
    const double x = ta[i];
    out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  Node node;
  node.op = Op::kGelu;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = needs(a);
  return push(std::move(node));
}

Tape::Id Tape::softmax(Id a) {
  const Tensor& ta = val(a);
  if (ta.rank() < 1) throw std::invalid_argument("softmax: rank-0 input");
  const std::int64_t n = ta.shape().back();
  const std::int64_t rows = ta.size() / n;
  Tensor out(ta.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    Eigen::Map<const Eigen::ArrayXd> x(ta.data() + r * n, n);
    Eigen::Map<Eigen::ArrayXd> y(out.data() + r * n, n);
    y = (x - x.maxCoeff()).exp();
    y *= 1.0 / y.sum();
  }
  Node node;
  node.op = Op::kSoftmax;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = needs(a);
  return push(std::move(node));
}

Tape::Id Tape::layer_norm(Id a) {
  const Tensor& ta = val(a);
  if (ta.rank() < 1) throw std::invalid_argument("layer_norm: rank-0 input");
  const std::int64_t n = ta.shape().back();
  const std::int64_t rows = ta.size() / n;
  Tensor out(ta.shape());
  Tensor inv_std({rows});
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* x = ta.data() + r * n;
    double* y = out.data() + r * n;
    double mu = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mu += x[i];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::int64_t i = 0; i < n; ++i) var += (x[i] - mu) * (x[i] - mu);
    var /= static_cast<double>(n);
    // eps floor keeps constant rows at exactly zero output.
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[r] = is;
    for (std::int64_t i = 0; i < n; ++i) y[i] = (x[i] - mu) * is;
  }
  Node node;
  node.op = Op::kLayerNorm;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = needs(a);
  node.saved = std::move(inv_std);
  return push(std::move(node));
}

Tape::Id Tape::reshape(Id a, std::vector<std::int64_t> shape) {
  const Tensor& ta = val(a);
  if (shape_numel(shape) != ta.size())
    throw std::invalid_argument("reshape: cannot view " + ta.shape_str() + " as " + shape_to_string(shape));
  Tensor out(std::move(shape), TensorStorage(ta.data(), ta.data() + ta.size()));
  Node node;
  node.op = Op::kReshape;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = needs(a);
  return push(std::move(node));
}

Tape::Id Tape::concat(const std::vector<Id>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Tensor& first = val(parts[0]);
  const std::size_t rank = first.rank();
  if (axis < 0 || static_cast<std::size_t>(axis) >= rank) throw std::invalid_argument("concat: axis out of range");

  std::vector<std::int64_t> out_shape = first.shape();
  out_shape[static_cast<std::size_t>(axis)] = 0;
  bool any_grad = false;
  for (Id p : parts) {
    const Tensor& tp = val(p);
    if (tp.rank() != rank) shape_error("concat", first, tp);
    for (std::size_t d = 0; d < rank; ++d)
      if (d != static_cast<std::size_t>(axis) && tp.shape()[d] != first.shape()[d]) shape_error("concat", first, tp);
    out_shape[static_cast<std::size_t>(axis)] += tp.shape()[static_cast<std::size_t>(axis)];
    any_grad = any_grad || needs(p);
  }

  const std::int64_t outer = prod({out_shape.data(), static_cast<std::size_t>(axis)});
  const std::int64_t inner = prod({out_shape.data() + axis + 1, rank - static_cast<std::size_t>(axis) - 1});
  Tensor out(out_shape);
  const std::int64_t out_axis = out_shape[static_cast<std::size_t>(axis)];
  std::int64_t offset = 0;
  for (Id p : parts) {
    const Tensor& tp = val(p);
    const std::int64_t len = tp.shape()[static_cast<std::size_t>(axis)];
    for (std::int64_t o = 0; o < outer; ++o) {
      const double* src = tp.data() + o * len * inner;
      double* dst = out.data() + (o * out_axis + offset) * inner;
      std::copy(src, src + len * inner, dst);
    }
    offset += len;
  }

  Node node;
  node.op = Op::kConcat;
  node.inputs = parts;
  node.value = std::move(out);
  node.needs_grad = any_grad;
  node.aux = {axis, outer, inner};
  return push(std::move(node));
}

Tape::Id Tape::slice(Id a, int axis, std::int64_t start, std::int64_t stop, std::int64_t step) {
  const Tensor& ta = val(a);
  if (axis < 0 || static_cast<std::size_t>(axis) >= ta.rank()) throw std::invalid_argument("slice: axis out of range");
  const std::int64_t dim = ta.shape()[static_cast<std::size_t>(axis)];
  if (step < 1 || start < 0 || stop > dim || start >= stop)
    throw std::invalid_argument("slice: bad range [" + std::to_string(start) + "," + std::to_string(stop) + ") step " +
                                std::to_string(step) + " on " + ta.shape_str());
  const std::int64_t len = (stop - start + step - 1) / step;

  std::vector<std::int64_t> out_shape = ta.shape();
  out_shape[static_cast<std::size_t>(axis)] = len;
  const std::int64_t outer = prod({ta.shape().data(), static_cast<std::size_t>(axis)});
  const std::int64_t inner = prod({ta.shape().data() + axis + 1, ta.rank() - static_cast<std::size_t>(axis) - 1});

  Tensor out(out_shape);
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t j = 0; j < len; ++j) {
      const double* src = ta.data() + (o * dim + start + j * step) * inner;
      std::copy(src, src + inner, out.data() + (o * len + j) * inner);
    }

  Node node;
  node.op = Op::kSlice;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = needs(a);
  node.aux = {axis, start, step, dim, outer, inner, len};
  return push(std::move(node));
}

Tape::Id Tape::transpose(Id a, std::vector<int> perm) {
  const Tensor& ta = val(a);
  if (perm.size() != ta.rank()) throw std::invalid_argument("transpose: perm size does not match rank of " + ta.shape_str());
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || seen[static_cast<std::size_t>(p)])
      throw std::invalid_argument("transpose: invalid permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }

  const std::size_t rank = ta.rank();
  std::vector<std::int64_t> out_shape(rank);
  for (std::size_t d = 0; d < rank; ++d) out_shape[d] = ta.shape()[static_cast<std::size_t>(perm[d])];

  std::vector<std::int64_t> in_strides(rank, 1);
  for (std::size_t d = rank - 1; d > 0; --d) in_strides[d - 1] = in_strides[d] * ta.shape()[d];
  // stride of the output index d in the input layout
  std::vector<std::int64_t> gather(rank);
  for (std::size_t d = 0; d < rank; ++d) gather[d] = in_strides[static_cast<std::size_t>(perm[d])];

  Tensor out(out_shape);
  std::vector<std::int64_t> idx(rank, 0);
  const std::int64_t total = ta.size();
  std::int64_t src = 0;
  for (std::int64_t flat = 0; flat < total; ++flat) {
    out[flat] = ta[src];
    for (std::size_t d = rank; d-- > 0;) {
      idx[d]++;
      src += gather[d];
      if (idx[d] < out_shape[d]) break;
      src -= gather[d] * out_shape[d];
      idx[d] = 0;
    }
  }

  Node node;
  node.op = Op::kTranspose;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = needs(a);
  node.aux.assign(perm.begin(), perm.end());
  return push(std::move(node));
}

std::vector<Tensor> Tape::backward(Id loss, std::span<const Id> wrt) {
  const Tensor& lv = val(loss);
  if (lv.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " + lv.shape_str());

  std::vector<Tensor> grads(nodes_.size());
  std::vector<bool> grad_set(nodes_.size(), false);
  grads[static_cast<std::size_t>(loss)] = Tensor::full({1}, 1.0);
  grad_set[static_cast<std::size_t>(loss)] = true;

  for (std::size_t idx = static_cast<std::size_t>(loss) + 1; idx-- > 0;) {
    if (!grad_set[idx] || !nodes_[idx].needs_grad) continue;
    if (nodes_[idx].op == Op::kLeaf) continue;
    backward_node(idx, grads[idx], grads, grad_set);
    // Keep leaf grads (the caller may ask for them); interior grads can go.
    if (static_cast<std::size_t>(loss) != idx) {
      bool wanted = false;
      for (Id w : wrt) wanted = wanted || static_cast<std::size_t>(w) == idx;
      if (!wanted) {
        grads[idx] = Tensor();
        grad_set[idx] = false;
      }
    }
  }

  std::vector<Tensor> result;
  result.reserve(wrt.size());
  for (Id w : wrt) {
    if (grad_set[static_cast<std::size_t>(w)])
      result.push_back(std::move(grads[static_cast<std::size_t>(w)]));
    else
      result.push_back(Tensor::zeros(val(w).shape()));
  }
  return result;
}

void Tape::backward_node(std::size_t idx, const Tensor& g, std::vector<Tensor>& grads, std::vector<bool>& grad_set) {
  Node& node = nodes_[idx];
  auto ensure = [&](Id in) -> Tensor& {
    if (!grad_set[static_cast<std::size_t>(in)]) {
      grads[static_cast<std::size_t>(in)] = Tensor::zeros(val(in).shape());
      grad_set[static_cast<std::size_t>(in)] = true;
    }
    return grads[static_cast<std::size_t>(in)];
  };

  switch (node.op) {
    case Op::kLeaf:
      break;
    case Op::kMatMul: {
      const Id a = node.inputs[0], b = node.inputs[1];
      const std::int64_t nbatch = node.aux[0], m = node.aux[1], k = node.aux[2], n = node.aux[3];
      const bool shared_rhs = node.aux[4] != 0;
      const Tensor& ta = val(a);
      const Tensor& tb = val(b);
      if (needs(a)) {
        Tensor& da = ensure(a);
        for (std::int64_t i = 0; i < nbatch; ++i) {
          CMap G(g.data() + i * m * n, m, n);
          CMap B(tb.data() + (shared_rhs ? 0 : i * k * n), k, n);
          MMap D(da.data() + i * m * k, m, k);
          D.noalias() += G * B.transpose();
        }
      }
      if (needs(b)) {
        Tensor& db = ensure(b);
        for (std::int64_t i = 0; i < nbatch; ++i) {
          CMap G(g.data() + i * m * n, m, n);
          CMap A(ta.data() + i * m * k, m, k);
          MMap D(db.data() + (shared_rhs ? 0 : i * k * n), k, n);
          D.noalias() += A.transpose() * G;
        }
      }
      break;
    }
    case Op::kAdd: {
      const Id a = node.inputs[0], b = node.inputs[1];
      if (needs(a)) {
        Tensor& da = ensure(a);
        for (std::int64_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (needs(b)) {
        Tensor& db = ensure(b);
        const std::int64_t nb = db.size();
        for (std::int64_t i = 0; i < g.size(); ++i) db[i % nb] += g[i];
      }
      break;
    }
    case Op::kMul: {
      const Id a = node.inputs[0], b = node.inputs[1];
      const Tensor& ta = val(a);
      const Tensor& tb = val(b);
      const std::int64_t nb = tb.size();
      if (needs(a)) {
        Tensor& da = ensure(a);
        for (std::int64_t i = 0; i < g.size(); ++i) da[i] += g[i] * tb[i % nb];
      }
      if (needs(b)) {
        Tensor& db = ensure(b);
        for (std::int64_t i = 0; i < g.size(); ++i) db[i % nb] += g[i] * ta[i];
      }
      break;
    }
    case Op::kScale: {
      const Id a = node.inputs[0];
      Tensor& da = ensure(a);
      for (std::int64_t i = 0; i < g.size(); ++i) da[i] += g[i] * node.scalar;
      break;
    }
    case Op::kSum: {
      const Id a = node.inputs[0];
      Tensor& da = ensure(a);
      const double gv = g[0];
      for (std::int64_t i = 0; i < da.size(); ++i) da[i] += gv;
      break;
    }
    case Op::kMean: {
      const Id a = node.inputs[0];
      Tensor& da = ensure(a);
      const double gv = g[0] / static_cast<double>(da.size());
      for (std::int64_t i = 0; i < da.size(); ++i) da[i] += gv;
      break;
    }
    case Op::kRelu: {
      const Id a = node.inputs[0];
      const Tensor& ta = val(a);
      Tensor& da = ensure(a);
      for (std::int64_t i = 0; i < g.size(); ++i) da[i] += ta[i] > 0.0 ? g[i] : 0.0;
      break;
    }
    case Op::kGelu: {
      const Id a = node.inputs[0];
      const Tensor& ta = val(a);
      Tensor& da = ensure(a);
      for (std::int64_t i = 0; i < g.size(); ++i) {
        const double x = ta[i];
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        da[i] += g[i] * (cdf + x * pdf);
      }
      break;
    }
    case Op::kSoftmax: {
      const Id a = node.inputs[0];
      const Tensor& y = node.value;
      Tensor& da = ensure(a);
      const std::int64_t n = y.shape().back();
      const std::int64_t rows = y.size() / n;
      for (std::int64_t r = 0; r < rows; ++r) {
        Eigen::Map<const Eigen::ArrayXd> yr(y.data() + r * n, n);
        Eigen::Map<const Eigen::ArrayXd> gr(g.data() + r * n, n);
        Eigen::Map<Eigen::ArrayXd> dr(da.data() + r * n, n);
        const double dot = (gr * yr).sum();
        dr += yr * (gr - dot);
      }
      break;
    }
    case Op::kLayerNorm: {
      const Id a = node.inputs[0];
      const Tensor& y = node.value;
      const Tensor& inv_std = node.saved;
      Tensor& da = ensure(a);
      const std::int64_t n = y.shape().back();
      const std::int64_t rows = y.size() / n;
      for (std::int64_t r = 0; r < rows; ++r) {
        const double* yr = y.data() + r * n;
        const double* gr = g.data() + r * n;
        double* dr = da.data() + r * n;
        double gsum = 0.0, gydot = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
          gsum += gr[i];
          gydot += gr[i] * yr[i];
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        const double is = inv_std[r];
        for (std::int64_t i = 0; i < n; ++i)
          dr[i] += is * (gr[i] - gsum * inv_n - yr[i] * gydot * inv_n);
      }
      break;
    }
    case Op::kReshape: {
      const Id a = node.inputs[0];
      Tensor& da = ensure(a);
      for (std::int64_t i = 0; i < g.size(); ++i) da[i] += g[i];
      break;
    }
    case Op::kConcat: {
      const std::int64_t axis = node.aux[0], outer = node.aux[1], inner = node.aux[2];
      const std::int64_t out_axis = node.value.shape()[static_cast<std::size_t>(axis)];
      std::int64_t offset = 0;
      for (Id p : node.inputs) {
        const std::int64_t len = val(p).shape()[static_cast<std::size_t>(axis)];
        if (needs(p)) {
          Tensor& dp = ensure(p);
          for (std::int64_t o = 0; o < outer; ++o) {
            const double* src = g.data() + (o * out_axis + offset) * inner;
            double* dst = dp.data() + o * len * inner;
            for (std::int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
          }
        }
        offset += len;
      }
      break;
    }
    case Op::kSlice: {
      const Id a = node.inputs[0];
      const std::int64_t start = node.aux[1], step = node.aux[2], dim = node.aux[3];
      const std::int64_t outer = node.aux[4], inner = node.aux[5], len = node.aux[6];
      Tensor& da = ensure(a);
      for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t j = 0; j < len; ++j) {
          const double* src = g.data() + (o * len + j) * inner;
          double* dst = da.data() + (o * dim + start + j * step) * inner;
          for (std::int64_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
      break;
    }
    case Op::kTranspose: {
      const Id a = node.inputs[0];
      const std::size_t rank = node.aux.size();
      std::vector<int> inverse(rank);
      for (std::size_t d = 0; d < rank; ++d) inverse[static_cast<std::size_t>(node.aux[d])] = static_cast<int>(d);

      const Tensor& ta = val(a);
      Tensor& da = ensure(a);
      // walk grad (output layout) and scatter into input layout
      std::vector<std::int64_t> in_strides(rank, 1);
      for (std::size_t d = rank - 1; d > 0; --d) in_strides[d - 1] = in_strides[d] * ta.shape()[d];
      std::vector<std::int64_t> gather(rank);
      for (std::size_t d = 0; d < rank; ++d) gather[d] = in_strides[static_cast<std::size_t>(node.aux[d])];

      const auto& out_shape = node.value.shape();
      std::vector<std::int64_t> idx(rank, 0);
      std::int64_t src = 0;
      for (std::int64_t flat = 0; flat < g.size(); ++flat) {
        da[src] += g[flat];
        for (std::size_t d = rank; d-- > 0;) {
          idx[d]++;
          src += gather[d];
          if (idx[d] < out_shape[d]) break;
          src -= gather[d] * out_shape[d];
          idx[d] = 0;
        }
      }
      break;
    }
  }
}

}  // namespace mvbridge
