// Copyright 2026 The stiffdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stiffdiff/ad/tape.hpp"

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <sstream>

namespace stiffdiff::ad {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const EMat>;
using MapM = Eigen::Map<EMat>;

inline MapC cmap(const std::vector<double>& v, int r, int c) {
  return MapC(v.data(), r, c);
}
inline MapM mmap(std::vector<double>& v, int r, int c) {
  return MapM(v.data(), r, c);
}

inline double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double stable_softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream ss;
  ss << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) ss << ',';
    ss << s[i];
  }
  ss << ']';
  return ss.str();
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::check_rank2(Var v, const char* op) const {
  if (nodes_[v.id].shape.size() > 2)
    throw ShapeMismatch(op, nodes_[v.id].shape, {});
}

double Tape::scalar(Var v) const {
  const Node& n = nodes_[v.id];
  assert(numel(n.shape) == 1);
  return n.value[0];
}

Var Tape::leaf(Shape shape, std::span<const double> values) {
  Node n;
  n.shape = std::move(shape);
  assert(static_cast<int64_t>(values.size()) == numel(n.shape));
  n.value.assign(values.begin(), values.end());
  return Var{push(std::move(n))};
}

Var Tape::leaf_zeros(Shape shape) {
  Node n;
  n.value.assign(static_cast<size_t>(numel(shape)), 0.0);
  n.shape = std::move(shape);
  return Var{push(std::move(n))};
}

Var Tape::param(Tensor& t) {
  Node n;
  n.shape = t.shape;
  n.value = t.value;
  n.bound = &t;
  n.needs_grad = t.requires_grad();
  n.backprop = [](Tape&, Node& self) {
    if (self.bound && self.bound->requires_grad()) {
      for (size_t i = 0; i < self.grad.size(); ++i)
        self.bound->grad[i] += self.grad[i];
    }
  };
  return Var{push(std::move(n))};
}

Var Tape::matmul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.shape.size() != 2 || nb.shape.size() != 2 ||
      na.shape[1] != nb.shape[0])
    throw ShapeMismatch("matmul", na.shape, nb.shape);
  const int m = na.shape[0], k = na.shape[1], n = nb.shape[1];
  Node out;
  out.shape = {m, n};
  out.value.resize(static_cast<size_t>(m) * n);
  mmap(out.value, m, n).noalias() = cmap(na.value, m, k) * cmap(nb.value, k, n);
  out.inputs = {a.id, b.id};
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.backprop = [m, k, n](Tape& t, Node& self) {
    const int ia = self.inputs[0], ib = self.inputs[1];
    MapC g(self.grad.data(), m, n);
    if (t.nodes_[ia].needs_grad) {
      MapM da(t.grad_buffer(ia).data(), m, k);
      da.noalias() += g * cmap(t.nodes_[ib].value, k, n).transpose();
    }
    if (t.nodes_[ib].needs_grad) {
      MapM db(t.grad_buffer(ib).data(), k, n);
      db.noalias() += cmap(t.nodes_[ia].value, m, k).transpose() * g;
    }
  };
  return Var{push(std::move(out))};
}

Var Tape::add(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  const bool same = na.shape == nb.shape;
  // broadcast case: [m,n] + [1,n] (bias row over rows)
  const bool bcast = na.shape.size() == 2 && nb.shape.size() == 2 &&
                     nb.shape[0] == 1 && nb.shape[1] == na.shape[1];
  if (!same && !bcast) throw ShapeMismatch("add", na.shape, nb.shape);
  Node out;
  out.shape = na.shape;
  out.value = na.value;
  const int n = na.shape.back();
  if (same) {
    for (size_t i = 0; i < out.value.size(); ++i) out.value[i] += nb.value[i];
  } else {
    for (size_t i = 0; i < out.value.size(); ++i)
      out.value[i] += nb.value[i % static_cast<size_t>(n)];
  }
  out.inputs = {a.id, b.id};
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.backprop = [same, n](Tape& t, Node& self) {
    const int ia = self.inputs[0], ib = self.inputs[1];
    if (t.nodes_[ia].needs_grad) {
      auto& da = t.grad_buffer(ia);
      for (size_t i = 0; i < self.grad.size(); ++i) da[i] += self.grad[i];
    }
    if (t.nodes_[ib].needs_grad) {
      auto& db = t.grad_buffer(ib);
      if (same) {
        for (size_t i = 0; i < self.grad.size(); ++i) db[i] += self.grad[i];
      } else {
        for (size_t i = 0; i < self.grad.size(); ++i)
          db[i % static_cast<size_t>(n)] += self.grad[i];
      }
    }
  };
  return Var{push(std::move(out))};
}

Var Tape::sub(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.shape != nb.shape) throw ShapeMismatch("sub", na.shape, nb.shape);
  Node out;
  out.shape = na.shape;
  out.value.resize(na.value.size());
  for (size_t i = 0; i < out.value.size(); ++i)
    out.value[i] = na.value[i] - nb.value[i];
  out.inputs = {a.id, b.id};
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.backprop = [](Tape& t, Node& self) {
    const int ia = self.inputs[0], ib = self.inputs[1];
    if (t.nodes_[ia].needs_grad) {
      auto& da = t.grad_buffer(ia);
      for (size_t i = 0; i < self.grad.size(); ++i) da[i] += self.grad[i];
    }
    if (t.nodes_[ib].needs_grad) {
      auto& db = t.grad_buffer(ib);
      for (size_t i = 0; i < self.grad.size(); ++i) db[i] -= self.grad[i];
    }
  };
  return Var{push(std::move(out))};
}

Var Tape::mul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.shape != nb.shape) throw ShapeMismatch("mul", na.shape, nb.shape);
  Node out;
  out.shape = na.shape;
  out.value.resize(na.value.size());
  for (size_t i = 0; i < out.value.size(); ++i)
    out.value[i] = na.value[i] * nb.value[i];
  out.inputs = {a.id, b.id};
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.backprop = [](Tape& t, Node& self) {
    const int ia = self.inputs[0], ib = self.inputs[1];
    if (t.nodes_[ia].needs_grad) {
      auto& da = t.grad_buffer(ia);
      const auto& vb = t.nodes_[ib].value;
      for (size_t i = 0; i < self.grad.size(); ++i)
        da[i] += self.grad[i] * vb[i];
    }
    if (t.nodes_[ib].needs_grad) {
      auto& db = t.grad_buffer(ib);
      const auto& va = t.nodes_[ia].value;
      for (size_t i = 0; i < self.grad.size(); ++i)
        db[i] += self.grad[i] * va[i];
    }
  };
  return Var{push(std::move(out))};
}

Var Tape::scale(Var a, double s) {
  const Node& na = node(a);
  Node out;
  out.shape = na.shape;
  out.value.resize(na.value.size());
  for (size_t i = 0; i < out.value.size(); ++i) out.value[i] = na.value[i] * s;
  out.inputs = {a.id};
  out.needs_grad = na.needs_grad;
  out.backprop = [s](Tape& t, Node& self) {
    const int ia = self.inputs[0];
    if (!t.nodes_[ia].needs_grad) return;
    auto& da = t.grad_buffer(ia);
    for (size_t i = 0; i < self.grad.size(); ++i) da[i] += self.grad[i] * s;
  };
  return Var{push(std::move(out))};
}

Var Tape::sigmoid(Var a) {
  const Node& na = node(a);
  Node out;
  out.shape = na.shape;
  out.value.resize(na.value.size());
  for (size_t i = 0; i < out.value.size(); ++i)
    out.value[i] = stable_sigmoid(na.value[i]);
  out.inputs = {a.id};
  out.needs_grad = na.needs_grad;
  out.backprop = [](Tape& t, Node& self) {
    const int ia = self.inputs[0];
    if (!t.nodes_[ia].needs_grad) return;
    auto& da = t.grad_buffer(ia);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.value[i];
      da[i] += self.grad[i] * y * (1.0 - y);
    }
  };
  return Var{push(std::move(out))};
}

Var Tape::tanh(Var a) {
  const Node& na = node(a);
  Node out;
  out.shape = na.shape;
  out.value.resize(na.value.size());
  for (size_t i = 0; i < out.value.size(); ++i)
    out.value[i] = std::tanh(na.value[i]);
  out.inputs = {a.id};
  out.needs_grad = na.needs_grad;
  out.backprop = [](Tape& t, Node& self) {
    const int ia = self.inputs[0];
    if (!t.nodes_[ia].needs_grad) return;
    auto& da = t.grad_buffer(ia);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.value[i];
      da[i] += self.grad[i] * (1.0 - y * y);
    }
  };
  return Var{push(std::move(out))};
}

Var Tape::softplus(Var a) {
  const Node& na = node(a);
  Node out;
  out.shape = na.shape;
  out.value.resize(na.value.size());
  for (size_t i = 0; i < out.value.size(); ++i)
    out.value[i] = stable_softplus(na.value[i]);
  out.inputs = {a.id};
  out.needs_grad = na.needs_grad;
  out.backprop = [](Tape& t, Node& self) {
    const int ia = self.inputs[0];
    if (!t.nodes_[ia].needs_grad) return;
    auto& da = t.grad_buffer(ia);
    const auto& va = t.nodes_[ia].value;
    for (size_t i = 0; i < self.grad.size(); ++i)
      da[i] += self.grad[i] * stable_sigmoid(va[i]);
  };
  return Var{push(std::move(out))};
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  assert(!parts.empty());
  const int m = node(parts[0]).shape.size() == 2 ? node(parts[0]).shape[0] : 1;
  int total = 0;
  for (Var p : parts) {
    const Node& np = node(p);
    const int pm = np.shape.size() == 2 ? np.shape[0] : 1;
    if (pm != m) throw ShapeMismatch("concat_cols", node(parts[0]).shape, np.shape);
    total += np.shape.back();
  }
  Node out;
  out.shape = {m, total};
  out.value.resize(static_cast<size_t>(m) * total);
  int off = 0;
  for (Var p : parts) {
    const Node& np = node(p);
    const int c = np.shape.back();
    for (int r = 0; r < m; ++r)
      for (int j = 0; j < c; ++j)
        out.value[static_cast<size_t>(r) * total + off + j] =
            np.value[static_cast<size_t>(r) * c + j];
    off += c;
    out.inputs.push_back(p.id);
    out.needs_grad = out.needs_grad || np.needs_grad;
  }
  out.backprop = [m, total](Tape& t, Node& self) {
    int off2 = 0;
    for (int ia : self.inputs) {
      const int c = t.nodes_[ia].shape.back();
      if (t.nodes_[ia].needs_grad) {
        auto& da = t.grad_buffer(ia);
        for (int r = 0; r < m; ++r)
          for (int j = 0; j < c; ++j)
            da[static_cast<size_t>(r) * c + j] +=
                self.grad[static_cast<size_t>(r) * total + off2 + j];
      }
      off2 += c;
    }
  };
  return Var{push(std::move(out))};
}

Var Tape::slice_cols(Var a, int begin, int len) {
  const Node& na = node(a);
  const int m = na.shape.size() == 2 ? na.shape[0] : 1;
  const int c = na.shape.back();
  if (begin < 0 || len < 1 || begin + len > c)
    throw ShapeMismatch("slice_cols", na.shape, {begin, len});
  Node out;
  out.shape = {m, len};
  out.value.resize(static_cast<size_t>(m) * len);
  for (int r = 0; r < m; ++r)
    for (int j = 0; j < len; ++j)
      out.value[static_cast<size_t>(r) * len + j] =
          na.value[static_cast<size_t>(r) * c + begin + j];
  out.inputs = {a.id};
  out.needs_grad = na.needs_grad;
  out.backprop = [m, c, begin, len](Tape& t, Node& self) {
    const int ia = self.inputs[0];
    if (!t.nodes_[ia].needs_grad) return;
    auto& da = t.grad_buffer(ia);
    for (int r = 0; r < m; ++r)
      for (int j = 0; j < len; ++j)
        da[static_cast<size_t>(r) * c + begin + j] +=
            self.grad[static_cast<size_t>(r) * len + j];
  };
  return Var{push(std::move(out))};
}

Var Tape::sum(Var a) {
  const Node& na = node(a);
  Node out;
  out.shape = {1, 1};
  double s = 0.0;
  for (double v : na.value) s += v;
  out.value = {s};
  out.inputs = {a.id};
  out.needs_grad = na.needs_grad;
  out.backprop = [](Tape& t, Node& self) {
    const int ia = self.inputs[0];
    if (!t.nodes_[ia].needs_grad) return;
    auto& da = t.grad_buffer(ia);
    for (double& g : da) g += self.grad[0];
  };
  return Var{push(std::move(out))};
}

Var Tape::mean_squared_error(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.shape != nb.shape)
    throw ShapeMismatch("mean_squared_error", na.shape, nb.shape);
  Node out;
  out.shape = {1, 1};
  const size_t n = na.value.size();
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = na.value[i] - nb.value[i];
    s += d * d;
  }
  out.value = {s / static_cast<double>(n)};
  out.inputs = {a.id, b.id};
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.backprop = [n](Tape& t, Node& self) {
    const int ia = self.inputs[0], ib = self.inputs[1];
    const double coef = 2.0 * self.grad[0] / static_cast<double>(n);
    const auto& va = t.nodes_[ia].value;
    const auto& vb = t.nodes_[ib].value;
    if (t.nodes_[ia].needs_grad) {
      auto& da = t.grad_buffer(ia);
      for (size_t i = 0; i < n; ++i) da[i] += coef * (va[i] - vb[i]);
    }
    if (t.nodes_[ib].needs_grad) {
      auto& db = t.grad_buffer(ib);
      for (size_t i = 0; i < n; ++i) db[i] -= coef * (va[i] - vb[i]);
    }
  };
  return Var{push(std::move(out))};
}

namespace {

// gates = x*wx + bx + h*wh + bh, evaluated as two GEMMs with bias rows.
void gate_preactivations(const std::vector<double>& x, int B, int I,
                         const std::vector<double>& wx,
                         const std::vector<double>& bx,
                         const std::vector<double>& h, int H,
                         const std::vector<double>& wh,
                         const std::vector<double>& bh, int G,
                         std::vector<double>& out) {
  out.resize(static_cast<size_t>(B) * G);
  MapM o(out.data(), B, G);
  o.noalias() = cmap(x, B, I) * cmap(wx, I, G);
  o.noalias() += cmap(h, B, H) * cmap(wh, H, G);
  const MapC bxm(bx.data(), 1, G), bhm(bh.data(), 1, G);
  o.rowwise() += bxm.row(0) + bhm.row(0);
}

}  // namespace

Var Tape::gru_cell(Var x, Var h, Var wx, Var wh, Var bx, Var bh) {
  const Node& nx = node(x);
  const Node& nh = node(h);
  const Node& nwx = node(wx);
  const Node& nwh = node(wh);
  const int B = nx.shape[0], I = nx.shape[1], H = nh.shape[1];
  if (nh.shape[0] != B || nwx.shape[0] != I || nwx.shape[1] != 3 * H ||
      nwh.shape[0] != H || nwh.shape[1] != 3 * H)
    throw ShapeMismatch("gru_cell", nx.shape, nwx.shape);

  std::vector<double> gates;
  gate_preactivations(nx.value, B, I, nwx.value, node(bx).value, nh.value, H,
                      nwh.value, node(bh).value, 3 * H, gates);
  // The candidate's h-side preactivation must stay un-summed: recompute it
  // so n = tanh(gx_n + r .* a) with a = h*wh_n + bh_n.
  std::vector<double> a(static_cast<size_t>(B) * H);
  {
    MapM am(a.data(), B, H);
    am.noalias() = cmap(nh.value, B, H) *
                   cmap(nwh.value, H, 3 * H).middleCols(2 * H, H);
    am.rowwise() += MapC(node(bh).value.data(), 1, 3 * H).row(0).segment(2 * H, H);
  }

  Node out;
  out.shape = {B, H};
  out.value.resize(static_cast<size_t>(B) * H);
  std::vector<double> r(static_cast<size_t>(B) * H), z(r), n(r);
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < H; ++j) {
      const size_t ij = static_cast<size_t>(b) * H + j;
      const size_t g0 = static_cast<size_t>(b) * 3 * H;
      r[ij] = stable_sigmoid(gates[g0 + j]);
      z[ij] = stable_sigmoid(gates[g0 + H + j]);
      // candidate block of `gates` holds gx_n + a; peel a back off
      const double gx_n = gates[g0 + 2 * H + j] - a[ij];
      n[ij] = std::tanh(gx_n + r[ij] * a[ij]);
      out.value[ij] = (1.0 - z[ij]) * n[ij] + z[ij] * nh.value[ij];
    }
  }
  out.inputs = {x.id, h.id, wx.id, wh.id, bx.id, bh.id};
  out.needs_grad = nx.needs_grad || nh.needs_grad || nwx.needs_grad ||
                   nwh.needs_grad || node(bx).needs_grad || node(bh).needs_grad;
  out.saved = {std::move(r), std::move(z), std::move(n), std::move(a)};
  out.backprop = [B, I, H](Tape& t, Node& self) {
    const auto& r = self.saved[0];
    const auto& z = self.saved[1];
    const auto& n = self.saved[2];
    const auto& a = self.saved[3];
    const int ix = self.inputs[0], ih = self.inputs[1], iwx = self.inputs[2],
              iwh = self.inputs[3], ibx = self.inputs[4], ibh = self.inputs[5];
    const auto& hv = t.nodes_[ih].value;
    const size_t BH = static_cast<size_t>(B) * H;
    std::vector<double> dgx(static_cast<size_t>(B) * 3 * H, 0.0);
    std::vector<double> dgh(static_cast<size_t>(B) * 3 * H, 0.0);
    std::vector<double> dh_direct(BH, 0.0);
    for (int b = 0; b < B; ++b) {
      for (int j = 0; j < H; ++j) {
        const size_t ij = static_cast<size_t>(b) * H + j;
        const size_t g0 = static_cast<size_t>(b) * 3 * H;
        const double go = self.grad[ij];
        const double dn = go * (1.0 - z[ij]);
        const double dz = go * (hv[ij] - n[ij]);
        dh_direct[ij] = go * z[ij];
        const double dpre_n = dn * (1.0 - n[ij] * n[ij]);
        const double dr = dpre_n * a[ij];
        const double da = dpre_n * r[ij];
        dgx[g0 + j] = dr * r[ij] * (1.0 - r[ij]);
        dgx[g0 + H + j] = dz * z[ij] * (1.0 - z[ij]);
        dgx[g0 + 2 * H + j] = dpre_n;
        dgh[g0 + j] = dgx[g0 + j];
        dgh[g0 + H + j] = dgx[g0 + H + j];
        dgh[g0 + 2 * H + j] = da;
      }
    }
    const MapC dgxm(dgx.data(), B, 3 * H), dghm(dgh.data(), B, 3 * H);
    if (t.nodes_[ix].needs_grad) {
      MapM dxm(t.grad_buffer(ix).data(), B, I);
      dxm.noalias() += dgxm * cmap(t.nodes_[iwx].value, I, 3 * H).transpose();
    }
    if (t.nodes_[ih].needs_grad) {
      MapM dhm(t.grad_buffer(ih).data(), B, H);
      dhm.noalias() += dghm * cmap(t.nodes_[iwh].value, H, 3 * H).transpose();
      auto& dh = t.grad_buffer(ih);
      for (size_t i = 0; i < BH; ++i) dh[i] += dh_direct[i];
    }
    if (t.nodes_[iwx].needs_grad) {
      MapM dwxm(t.grad_buffer(iwx).data(), I, 3 * H);
      dwxm.noalias() += cmap(t.nodes_[ix].value, B, I).transpose() * dgxm;
    }
    if (t.nodes_[iwh].needs_grad) {
      MapM dwhm(t.grad_buffer(iwh).data(), H, 3 * H);
      dwhm.noalias() += cmap(hv, B, H).transpose() * dghm;
    }
    if (t.nodes_[ibx].needs_grad) {
      MapM dbxm(t.grad_buffer(ibx).data(), 1, 3 * H);
      dbxm.noalias() += dgxm.colwise().sum();
    }
    if (t.nodes_[ibh].needs_grad) {
      MapM dbhm(t.grad_buffer(ibh).data(), 1, 3 * H);
      dbhm.noalias() += dghm.colwise().sum();
    }
  };
  return Var{push(std::move(out))};
}

Var Tape::lstm_cell(Var x, Var hc, Var wx, Var wh, Var bx, Var bh) {
  const Node& nx = node(x);
  const Node& nhc = node(hc);
  const Node& nwx = node(wx);
  const Node& nwh = node(wh);
  const int B = nx.shape[0], I = nx.shape[1];
  const int H = nhc.shape[1] / 2;
  if (nhc.shape[0] != B || nhc.shape[1] != 2 * H || nwx.shape[0] != I ||
      nwx.shape[1] != 4 * H || nwh.shape[0] != H || nwh.shape[1] != 4 * H)
    throw ShapeMismatch("lstm_cell", nx.shape, nwx.shape);

  // split state
  std::vector<double> h(static_cast<size_t>(B) * H), c(h);
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < H; ++j) {
      h[static_cast<size_t>(b) * H + j] =
          nhc.value[static_cast<size_t>(b) * 2 * H + j];
      c[static_cast<size_t>(b) * H + j] =
          nhc.value[static_cast<size_t>(b) * 2 * H + H + j];
    }
  std::vector<double> gates;
  gate_preactivations(nx.value, B, I, nwx.value, node(bx).value, h, H,
                      nwh.value, node(bh).value, 4 * H, gates);

  Node out;
  out.shape = {B, 2 * H};
  out.value.resize(static_cast<size_t>(B) * 2 * H);
  std::vector<double> gi(static_cast<size_t>(B) * H), gf(gi), gg(gi), go(gi),
      cn(gi);
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < H; ++j) {
      const size_t ij = static_cast<size_t>(b) * H + j;
      const size_t g0 = static_cast<size_t>(b) * 4 * H;
      gi[ij] = stable_sigmoid(gates[g0 + j]);
      gf[ij] = stable_sigmoid(gates[g0 + H + j]);
      gg[ij] = std::tanh(gates[g0 + 2 * H + j]);
      go[ij] = stable_sigmoid(gates[g0 + 3 * H + j]);
      cn[ij] = gf[ij] * c[ij] + gi[ij] * gg[ij];
      out.value[static_cast<size_t>(b) * 2 * H + j] = go[ij] * std::tanh(cn[ij]);
      out.value[static_cast<size_t>(b) * 2 * H + H + j] = cn[ij];
    }
  }
  out.inputs = {x.id, hc.id, wx.id, wh.id, bx.id, bh.id};
  out.needs_grad = nx.needs_grad || nhc.needs_grad || nwx.needs_grad ||
                   nwh.needs_grad || node(bx).needs_grad || node(bh).needs_grad;
  out.saved = {std::move(gi), std::move(gf), std::move(gg), std::move(go),
               std::move(cn), std::move(c), std::move(h)};
  out.backprop = [B, I, H](Tape& t, Node& self) {
    const auto& gi = self.saved[0];
    const auto& gf = self.saved[1];
    const auto& gg = self.saved[2];
    const auto& go = self.saved[3];
    const auto& cn = self.saved[4];
    const auto& c = self.saved[5];
    const auto& h = self.saved[6];
    const int ix = self.inputs[0], ihc = self.inputs[1], iwx = self.inputs[2],
              iwh = self.inputs[3], ibx = self.inputs[4], ibh = self.inputs[5];
    std::vector<double> dg(static_cast<size_t>(B) * 4 * H, 0.0);
    std::vector<double> dh_state(static_cast<size_t>(B) * H, 0.0);
    std::vector<double> dc_state(static_cast<size_t>(B) * H, 0.0);
    for (int b = 0; b < B; ++b) {
      for (int j = 0; j < H; ++j) {
        const size_t ij = static_cast<size_t>(b) * H + j;
        const size_t g0 = static_cast<size_t>(b) * 4 * H;
        const double dh = self.grad[static_cast<size_t>(b) * 2 * H + j];
        const double dc_ext = self.grad[static_cast<size_t>(b) * 2 * H + H + j];
        const double tc = std::tanh(cn[ij]);
        const double dcn = dc_ext + dh * go[ij] * (1.0 - tc * tc);
        const double dgo = dh * tc;
        const double dgf = dcn * c[ij];
        const double dgi = dcn * gg[ij];
        const double dgg = dcn * gi[ij];
        dc_state[ij] = dcn * gf[ij];
        dg[g0 + j] = dgi * gi[ij] * (1.0 - gi[ij]);
        dg[g0 + H + j] = dgf * gf[ij] * (1.0 - gf[ij]);
        dg[g0 + 2 * H + j] = dgg * (1.0 - gg[ij] * gg[ij]);
        dg[g0 + 3 * H + j] = dgo * go[ij] * (1.0 - go[ij]);
      }
    }
    const MapC dgm(dg.data(), B, 4 * H);
    if (t.nodes_[ix].needs_grad) {
      MapM dxm(t.grad_buffer(ix).data(), B, I);
      dxm.noalias() += dgm * cmap(t.nodes_[iwx].value, I, 4 * H).transpose();
    }
    if (t.nodes_[ihc].needs_grad) {
      MapM dhm(dh_state.data(), B, H);
      dhm.noalias() += dgm * cmap(t.nodes_[iwh].value, H, 4 * H).transpose();
      auto& dhc = t.grad_buffer(ihc);
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < H; ++j) {
          dhc[static_cast<size_t>(b) * 2 * H + j] +=
              dh_state[static_cast<size_t>(b) * H + j];
          dhc[static_cast<size_t>(b) * 2 * H + H + j] +=
              dc_state[static_cast<size_t>(b) * H + j];
        }
    }
    if (t.nodes_[iwx].needs_grad) {
      MapM dwxm(t.grad_buffer(iwx).data(), I, 4 * H);
      dwxm.noalias() += cmap(t.nodes_[ix].value, B, I).transpose() * dgm;
    }
    if (t.nodes_[iwh].needs_grad) {
      MapM dwhm(t.grad_buffer(iwh).data(), H, 4 * H);
      dwhm.noalias() += cmap(h, B, H).transpose() * dgm;
    }
    if (t.nodes_[ibx].needs_grad) {
      MapM dbxm(t.grad_buffer(ibx).data(), 1, 4 * H);
      dbxm.noalias() += dgm.colwise().sum();
    }
    if (t.nodes_[ibh].needs_grad) {
      MapM dbhm(t.grad_buffer(ibh).data(), 1, 4 * H);
      dbhm.noalias() += dgm.colwise().sum();
    }
  };
  return Var{push(std::move(out))};
}

void Tape::backward(Var loss) {
  Node& ln = nodes_[loss.id];
  if (numel(ln.shape) != 1)
    throw ShapeMismatch("backward expects scalar loss", ln.shape, {1, 1});
  grad_buffer(loss.id)[0] += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backprop || !n.needs_grad) continue;
    n.backprop(*this, n);
  }
}

void Tape::backward(Var loss, std::span<Tensor* const> required) {
  backward(loss);
  for (size_t k = 0; k < required.size(); ++k) {
    bool touched = false;
    for (const Node& n : nodes_) {
      if (n.bound == required[k] && !n.grad.empty()) {
        touched = true;
        break;
      }
    }
    if (!touched) throw DisconnectedGraph("parameter #" + std::to_string(k));
  }
}

}  // namespace stiffdiff::ad
