// Copyright 2026 The PreferGrow Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "prefergrow/errors.hpp"

namespace prefergrow::autodiff {

/// Define-by-run reverse-mode tape over dense matrices. Nodes are created in
/// topological order, so one reverse sweep over the node list propagates
/// gradients. Scalars are 1x1 matrices; binary elementwise ops broadcast a
/// 1x1 operand.
template <typename Real>
class Tape {
 public:
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> backprop;
  };

  int leaf(Mat value) { return push(std::move(value), {}); }

  int scalar(Real v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return leaf(std::move(m));
  }

  const Mat& value(int id) const { return nodes_[id].value; }
  Real scalar_value(int id) const { return nodes_[id].value(0, 0); }
  Mat& grad(int id) { return nodes_[id].grad; }

  int matmul(int a, int b) {
    return push(value(a) * value(b), [a, b, out = next_id()](Tape& t) {
      t.grad(a).noalias() += t.grad(out) * t.value(b).transpose();
      t.grad(b).noalias() += t.value(a).transpose() * t.grad(out);
    });
  }

  /// a * b^T without a transpose node.
  int matmul_nt(int a, int b) {
    return push(value(a) * value(b).transpose(),
                [a, b, out = next_id()](Tape& t) {
                  t.grad(a).noalias() += t.grad(out) * t.value(b);
                  t.grad(b).noalias() += t.grad(out).transpose() * t.value(a);
                });
  }

  int add(int a, int b) { return binary(a, b, std::plus<Real>{}, Real(1), Real(1)); }
  int sub(int a, int b) { return binary(a, b, std::minus<Real>{}, Real(1), Real(-1)); }

  /// a (n x d) plus a row vector b (1 x d) broadcast over the rows of a.
  int add_rowvec(int a, int b) {
    const Mat& va = value(a);
    const Mat& vb = value(b);
    if (vb.rows() != 1 || vb.cols() != va.cols())
      throw DimensionError("row-broadcast operand must be 1 x cols(a)");
    Mat v = va.rowwise() + vb.row(0);
    return push(std::move(v), [a, b, out = next_id()](Tape& t) {
      const Mat& g = t.grad(out);
      t.grad(a).noalias() += g;
      t.grad(b).row(0) += g.colwise().sum();
    });
  }

  int mul(int a, int b) {
    const Mat& va = value(a);
    const Mat& vb = value(b);
    Mat v;
    if (is_scalar(b))
      v = va * vb(0, 0);
    else if (is_scalar(a))
      v = vb * va(0, 0);
    else
      v = va.cwiseProduct(vb);
    return push(std::move(v), [a, b, out = next_id()](Tape& t) {
      const Mat& g = t.grad(out);
      if (t.is_scalar(b) && !t.is_scalar(a)) {
        t.grad(a).noalias() += g * t.value(b)(0, 0);
        t.grad(b)(0, 0) += g.cwiseProduct(t.value(a)).sum();
      } else if (t.is_scalar(a) && !t.is_scalar(b)) {
        t.grad(b).noalias() += g * t.value(a)(0, 0);
        t.grad(a)(0, 0) += g.cwiseProduct(t.value(b)).sum();
      } else {
        t.grad(a).noalias() += g.cwiseProduct(t.value(b));
        t.grad(b).noalias() += g.cwiseProduct(t.value(a));
      }
    });
  }

  /// Elementwise a / b; b must be 1x1 or match a's shape.
  int div(int a, int b) {
    const Mat& va = value(a);
    const Mat& vb = value(b);
    Mat v = is_scalar(b) ? Mat(va / vb(0, 0)) : Mat(va.cwiseQuotient(vb));
    return push(std::move(v), [a, b, out = next_id()](Tape& t) {
      const Mat& g = t.grad(out);
      if (t.is_scalar(b)) {
        const Real d = t.value(b)(0, 0);
        t.grad(a).noalias() += g / d;
        t.grad(b)(0, 0) -= g.cwiseProduct(t.value(a)).sum() / (d * d);
      } else {
        t.grad(a).noalias() += g.cwiseQuotient(t.value(b));
        t.grad(b).noalias() -= g.cwiseProduct(t.value(a)).cwiseQuotient(
            t.value(b).cwiseProduct(t.value(b)));
      }
    });
  }

  int scale(int a, Real c) {
    return push(value(a) * c, [a, c, out = next_id()](Tape& t) {
      t.grad(a).noalias() += t.grad(out) * c;
    });
  }

  int add_const(int a, Real c) {
    return push(value(a).array() + c, [a, out = next_id()](Tape& t) {
      t.grad(a).noalias() += t.grad(out);
    });
  }

  int exp(int a) {
    return push(value(a).array().exp(), [a, out = next_id()](Tape& t) {
      t.grad(a).noalias() += t.grad(out).cwiseProduct(t.value(out));
    });
  }

  int log(int a) {
    return push(value(a).array().log(), [a, out = next_id()](Tape& t) {
      t.grad(a).noalias() += t.grad(out).cwiseQuotient(t.value(a));
    });
  }

  /// Exact GELU x * Phi(x) with the Gaussian CDF via erf.
  int gelu(int a) {
    const Mat& x = value(a);
    Mat v(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const Real xi = x.data()[i];
      v.data()[i] = xi * gauss_cdf(xi);
    }
    return push(std::move(v), [a, out = next_id()](Tape& t) {
      const Mat& x = t.value(a);
      Mat& ga = t.grad(a);
      const Mat& g = t.grad(out);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const Real xi = x.data()[i];
        ga.data()[i] += g.data()[i] * (gauss_cdf(xi) + xi * gauss_pdf(xi));
      }
    });
  }

  int sum(int a) {
    Mat v(1, 1);
    v(0, 0) = value(a).sum();
    return push(std::move(v), [a, out = next_id()](Tape& t) {
      t.grad(a).array() += t.grad(out)(0, 0);
    });
  }

  int pick(int a, int r, int c) {
    Mat v(1, 1);
    v(0, 0) = value(a)(r, c);
    return push(std::move(v), [a, r, c, out = next_id()](Tape& t) {
      t.grad(a)(r, c) += t.grad(out)(0, 0);
    });
  }

  int dot(int a, int b) {
    Mat v(1, 1);
    v(0, 0) = value(a).cwiseProduct(value(b)).sum();
    return push(std::move(v), [a, b, out = next_id()](Tape& t) {
      const Real g = t.grad(out)(0, 0);
      t.grad(a).noalias() += g * t.value(b);
      t.grad(b).noalias() += g * t.value(a);
    });
  }

  int gather_rows(int a, std::vector<int> rows) {
    const Mat& src = value(a);
    Mat v(static_cast<Eigen::Index>(rows.size()), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) v.row(i) = src.row(rows[i]);
    return push(std::move(v),
                [a, rows = std::move(rows), out = next_id()](Tape& t) {
                  for (std::size_t i = 0; i < rows.size(); ++i)
                    t.grad(a).row(rows[i]) += t.grad(out).row(i);
                });
  }

  int row(int a, int r) { return gather_rows(a, {r}); }

  int hconcat(const std::vector<int>& parts) {
    Eigen::Index cols = 0;
    for (int p : parts) cols += value(p).cols();
    Mat v(1, cols);
    Eigen::Index at = 0;
    for (int p : parts) {
      v.block(0, at, 1, value(p).cols()) = value(p);
      at += value(p).cols();
    }
    return push(std::move(v), [parts, out = next_id()](Tape& t) {
      Eigen::Index at = 0;
      for (int p : parts) {
        const Eigen::Index c = t.value(p).cols();
        t.grad(p).noalias() += t.grad(out).block(0, at, 1, c);
        at += c;
      }
    });
  }

  /// Zero out one entry of a column vector; its gradient is discarded.
  int pin_zero(int a, int index) {
    Mat v = value(a);
    v(index, 0) = Real(0);
    return push(std::move(v), [a, index, out = next_id()](Tape& t) {
      Mat g = t.grad(out);
      g(index, 0) = Real(0);
      t.grad(a).noalias() += g;
    });
  }

  /// Softmax of a column vector.
  int softmax_col(int a) {
    const Mat& x = value(a);
    Mat v = (x.array() - x.maxCoeff()).exp();
    v /= v.sum();
    return push(std::move(v), [a, out = next_id()](Tape& t) {
      const Mat& y = t.value(out);
      const Mat& g = t.grad(out);
      const Real inner = g.cwiseProduct(y).sum();
      t.grad(a).noalias() += y.cwiseProduct(g.array().matrix() -
                                            Mat::Constant(y.rows(), 1, inner));
    });
  }

  /// Row-wise softmax of a square score matrix where row i only attends to
  /// columns j <= i; masked entries are exactly zero.
  int causal_softmax(int a) {
    const Mat& x = value(a);
    Mat v = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Real mx = x(i, 0);
      for (Eigen::Index j = 1; j <= i; ++j) mx = std::max(mx, x(i, j));
      Real denom = 0;
      for (Eigen::Index j = 0; j <= i; ++j) {
        v(i, j) = std::exp(x(i, j) - mx);
        denom += v(i, j);
      }
      for (Eigen::Index j = 0; j <= i; ++j) v(i, j) /= denom;
    }
    return push(std::move(v), [a, out = next_id()](Tape& t) {
      const Mat& y = t.value(out);
      const Mat& g = t.grad(out);
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        Real inner = 0;
        for (Eigen::Index j = 0; j <= i; ++j) inner += g(i, j) * y(i, j);
        for (Eigen::Index j = 0; j <= i; ++j)
          t.grad(a)(i, j) += y(i, j) * (g(i, j) - inner);
      }
    });
  }

  /// Rotary position mixing: row m has its feature pairs (2k, 2k+1) rotated
  /// by m * base^{-2k/d}. A pure rotation, so the backward pass rotates the
  /// gradient the other way.
  int rope(int a, Real base = Real(10000)) {
    const Mat& x = value(a);
    Mat v = rotate(x, base, Real(1));
    return push(std::move(v), [a, base, out = next_id()](Tape& t) {
      t.grad(a).noalias() += rotate(t.grad(out), base, Real(-1));
    });
  }

  /// Reverse sweep from a scalar root.
  void backward(int root) {
    if (value(root).size() != 1)
      throw DimensionError("backward needs a scalar root");
    for (auto& node : nodes_)
      node.grad = Mat::Zero(node.value.rows(), node.value.cols());
    nodes_[root].grad(0, 0) = Real(1);
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id)
      if (nodes_[id].backprop) nodes_[id].backprop(*this);
  }

  int size() const { return static_cast<int>(nodes_.size()); }

  bool is_scalar(int id) const { return nodes_[id].value.size() == 1; }

 private:
  static Real gauss_cdf(Real x) {
    return Real(0.5) * (Real(1) + std::erf(x * Real(M_SQRT1_2)));
  }
  static Real gauss_pdf(Real x) {
    return std::exp(Real(-0.5) * x * x) * Real(0.3989422804014327);
  }

  static Mat rotate(const Mat& x, Real base, Real sign) {
    Mat v(x.rows(), x.cols());
    const Eigen::Index d = x.cols();
    for (Eigen::Index m = 0; m < x.rows(); ++m) {
      for (Eigen::Index k = 0; 2 * k + 1 < d; ++k) {
        const Real theta =
            sign * Real(m) *
            std::pow(base, Real(-2) * Real(k) / Real(d));
        const Real c = std::cos(theta), s = std::sin(theta);
        const Real x0 = x(m, 2 * k), x1 = x(m, 2 * k + 1);
        v(m, 2 * k) = c * x0 - s * x1;
        v(m, 2 * k + 1) = s * x0 + c * x1;
      }
      if (d % 2 == 1) v(m, d - 1) = x(m, d - 1);
    }
    return v;
  }

  int next_id() const { return static_cast<int>(nodes_.size()); }

  int push(Mat value, std::function<void(Tape&)> backprop) {
    nodes_.push_back(Node{std::move(value), Mat(), std::move(backprop)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(int a, int b, std::function<Real(Real, Real)> op, Real da, Real db) {
    const Mat& va = value(a);
    const Mat& vb = value(b);
    Mat v;
    if (is_scalar(b) && !is_scalar(a)) {
      v = va.unaryExpr([&](Real x) { return op(x, vb(0, 0)); });
    } else if (is_scalar(a) && !is_scalar(b)) {
      v = vb.unaryExpr([&](Real x) { return op(va(0, 0), x); });
    } else {
      if (va.rows() != vb.rows() || va.cols() != vb.cols())
        throw DimensionError("elementwise operands differ in shape");
      v = va.binaryExpr(vb, op);
    }
    return push(std::move(v), [a, b, da, db, out = next_id()](Tape& t) {
      const Mat& g = t.grad(out);
      if (t.is_scalar(a) && !t.is_scalar(b)) {
        t.grad(a)(0, 0) += da * g.sum();
        t.grad(b).noalias() += db * g;
      } else if (t.is_scalar(b) && !t.is_scalar(a)) {
        t.grad(a).noalias() += da * g;
        t.grad(b)(0, 0) += db * g.sum();
      } else {
        t.grad(a).noalias() += da * g;
        t.grad(b).noalias() += db * g;
      }
    });
  }

  std::vector<Node> nodes_;
};

}  // namespace prefergrow::autodiff
