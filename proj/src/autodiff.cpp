#include "clarity/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "clarity/errors.hpp"

namespace clarity {

Tensor& Node::ensure_grad() {
  if (grad.numel() != val.numel()) grad = Tensor(val.shape());
  return grad;
}

Var make_leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->val = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

Var make_const(Tensor value) { return make_leaf(std::move(value), false); }

void backward(const Var& root) {
  if (!root) throw ValueError("backward on null var");
  if (root->val.numel() != 1) throw ShapeError("backward root must be scalar");
  if (!root->requires_grad) return;

  // Iterative post-order topological sort over grad-requiring nodes.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->back) n->back(*n);
  }
}

void zero_grad(const std::vector<Var>& vars) {
  for (const auto& v : vars) {
    if (v->grad.numel() != v->val.numel()) v->grad = Tensor(v->val.shape());
    else v->grad.fill(0.0);
  }
}

namespace ops {
namespace {

Var nnode(Tensor val, std::vector<Var> parents, std::function<void(Node&)> back) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  for (const auto& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->back = std::move(back);
  }
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* what) {
  if (!a->val.same_shape(b->val))
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a->val.shape()) +
                     " vs " + shape_str(b->val.shape()));
}

// Reflect-101 index mapping for borders (pad must be < extent).
inline int reflect_index(int j, int extent) {
  if (extent == 1) return 0;
  if (j < 0) return -j;
  if (j >= extent) return 2 * extent - 2 - j;
  return j;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out(a->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->val[i] + b->val[i];
  return nnode(std::move(out), {a, b}, [a, b](Node& self) {
    const int64_t n = self.val.numel();
    if (a->requires_grad) {
      Tensor& ga = a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) ga[i] += self.grad[i];
    }
    if (b->requires_grad) {
      Tensor& gb = b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) gb[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->val[i] - b->val[i];
  return nnode(std::move(out), {a, b}, [a, b](Node& self) {
    const int64_t n = self.val.numel();
    if (a->requires_grad) {
      Tensor& ga = a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) ga[i] += self.grad[i];
    }
    if (b->requires_grad) {
      Tensor& gb = b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) gb[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->val[i] * b->val[i];
  return nnode(std::move(out), {a, b}, [a, b](Node& self) {
    const int64_t n = self.val.numel();
    if (a->requires_grad) {
      Tensor& ga = a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) ga[i] += self.grad[i] * b->val[i];
    }
    if (b->requires_grad) {
      Tensor& gb = b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) gb[i] += self.grad[i] * a->val[i];
    }
  });
}

Var divide(const Var& a, const Var& b) {
  check_same_shape(a, b, "divide");
  Tensor out(a->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->val[i] / b->val[i];
  return nnode(std::move(out), {a, b}, [a, b](Node& self) {
    const int64_t n = self.val.numel();
    if (a->requires_grad) {
      Tensor& ga = a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) ga[i] += self.grad[i] / b->val[i];
    }
    if (b->requires_grad) {
      Tensor& gb = b->ensure_grad();
      for (int64_t i = 0; i < n; ++i)
        gb[i] -= self.grad[i] * a->val[i] / (b->val[i] * b->val[i]);
    }
  });
}

Var sadd(const Var& a, double c) {
  Tensor out(a->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->val[i] + c;
  return nnode(std::move(out), {a}, [a](Node& self) {
    Tensor& ga = a->ensure_grad();
    const int64_t n = self.val.numel();
    for (int64_t i = 0; i < n; ++i) ga[i] += self.grad[i];
  });
}

Var smul(const Var& a, double c) {
  Tensor out(a->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->val[i] * c;
  return nnode(std::move(out), {a}, [a, c](Node& self) {
    Tensor& ga = a->ensure_grad();
    const int64_t n = self.val.numel();
    for (int64_t i = 0; i < n; ++i) ga[i] += self.grad[i] * c;
  });
}

Var silu(const Var& x) {
  Tensor out(x->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-x->val[i]));
    out[i] = x->val[i] * s;
  }
  return nnode(std::move(out), {x}, [x](Node& self) {
    Tensor& gx = x->ensure_grad();
    const int64_t n = self.val.numel();
    for (int64_t i = 0; i < n; ++i) {
      const double s = 1.0 / (1.0 + std::exp(-x->val[i]));
      gx[i] += self.grad[i] * s * (1.0 + x->val[i] * (1.0 - s));
    }
  });
}

Var leaky_relu(const Var& x, double slope) {
  Tensor out(x->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i)
    out[i] = x->val[i] >= 0.0 ? x->val[i] : slope * x->val[i];
  return nnode(std::move(out), {x}, [x, slope](Node& self) {
    Tensor& gx = x->ensure_grad();
    const int64_t n = self.val.numel();
    for (int64_t i = 0; i < n; ++i)
      gx[i] += self.grad[i] * (x->val[i] >= 0.0 ? 1.0 : slope);
  });
}

Var clamp(const Var& x, double lo, double hi) {
  Tensor out(x->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = std::min(hi, std::max(lo, x->val[i]));
  return nnode(std::move(out), {x}, [x, lo, hi](Node& self) {
    Tensor& gx = x->ensure_grad();
    const int64_t n = self.val.numel();
    for (int64_t i = 0; i < n; ++i)
      if (x->val[i] >= lo && x->val[i] <= hi) gx[i] += self.grad[i];
  });
}

Var vsqrt(const Var& x) {
  Tensor out(x->val.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = std::sqrt(x->val[i]);
  return nnode(std::move(out), {x}, [x](Node& self) {
    Tensor& gx = x->ensure_grad();
    const int64_t n = self.val.numel();
    for (int64_t i = 0; i < n; ++i) gx[i] += self.grad[i] * 0.5 / self.val[i];
  });
}

Var mean_all(const Var& x) {
  const int64_t n = x->val.numel();
  if (n == 0) throw ShapeError("mean_all of empty tensor");
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += x->val[i];
  return nnode(Tensor::scalar(s / static_cast<double>(n)), {x}, [x](Node& self) {
    Tensor& gx = x->ensure_grad();
    const int64_t n = x->val.numel();
    const double g = self.grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) gx[i] += g;
  });
}

Var mean_abs_diff(const Var& a, const Var& b) {
  check_same_shape(a, b, "mean_abs_diff");
  const int64_t n = a->val.numel();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += std::abs(a->val[i] - b->val[i]);
  return nnode(Tensor::scalar(s / static_cast<double>(n)), {a, b}, [a, b](Node& self) {
    const int64_t n = a->val.numel();
    const double g = self.grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
      const double d = a->val[i] - b->val[i];
      const double sg = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      if (a->requires_grad) a->ensure_grad()[i] += g * sg;
      if (b->requires_grad) b->ensure_grad()[i] -= g * sg;
    }
  });
}

Var mean_sq_gap(const Var& x, double target) {
  const int64_t n = x->val.numel();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = x->val[i] - target;
    s += d * d;
  }
  return nnode(Tensor::scalar(s / static_cast<double>(n)), {x}, [x, target](Node& self) {
    Tensor& gx = x->ensure_grad();
    const int64_t n = x->val.numel();
    const double g = 2.0 * self.grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) gx[i] += g * (x->val[i] - target);
  });
}

Var gap2d(const Var& x) {
  if (x->val.ndim() != 4) throw ShapeError("gap2d expects (N,C,H,W)");
  const int N = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
  const int64_t hw = static_cast<int64_t>(H) * W;
  Tensor out({N, C});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* p = x->val.data() + ((static_cast<int64_t>(n) * C + c) * hw);
      double s = 0.0;
      for (int64_t i = 0; i < hw; ++i) s += p[i];
      out[static_cast<int64_t>(n) * C + c] = s / static_cast<double>(hw);
    }
  return nnode(std::move(out), {x}, [x, N, C, hw](Node& self) {
    Tensor& gx = x->ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const double g = self.grad[static_cast<int64_t>(n) * C + c] / static_cast<double>(hw);
        double* p = gx.data() + ((static_cast<int64_t>(n) * C + c) * hw);
        for (int64_t i = 0; i < hw; ++i) p[i] += g;
      }
  });
}

Var row(const Var& x, int i) {
  if (x->val.ndim() != 2) throw ShapeError("row expects (N,C)");
  const int N = x->val.dim(0), C = x->val.dim(1);
  if (i < 0 || i >= N) throw ValueError("row index out of range");
  Tensor out({C});
  const double* p = x->val.data() + static_cast<int64_t>(i) * C;
  for (int c = 0; c < C; ++c) out[c] = p[c];
  return nnode(std::move(out), {x}, [x, i, C](Node& self) {
    Tensor& gx = x->ensure_grad();
    double* p = gx.data() + static_cast<int64_t>(i) * C;
    for (int c = 0; c < C; ++c) p[c] += self.grad[c];
  });
}

Var dot(const Var& u, const Var& v) {
  check_same_shape(u, v, "dot");
  const int64_t n = u->val.numel();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += u->val[i] * v->val[i];
  return nnode(Tensor::scalar(s), {u, v}, [u, v](Node& self) {
    const int64_t n = u->val.numel();
    const double g = self.grad[0];
    if (u->requires_grad) {
      Tensor& gu = u->ensure_grad();
      for (int64_t i = 0; i < n; ++i) gu[i] += g * v->val[i];
    }
    if (v->requires_grad) {
      Tensor& gv = v->ensure_grad();
      for (int64_t i = 0; i < n; ++i) gv[i] += g * u->val[i];
    }
  });
}

Var stack_scalars(const std::vector<Var>& xs) {
  if (xs.empty()) throw ValueError("stack_scalars of empty list");
  Tensor out({static_cast<int>(xs.size())});
  for (size_t i = 0; i < xs.size(); ++i) {
    if (xs[i]->val.numel() != 1) throw ShapeError("stack_scalars expects scalars");
    out[static_cast<int64_t>(i)] = xs[i]->val[0];
  }
  return nnode(std::move(out), xs, [xs](Node& self) {
    for (size_t i = 0; i < xs.size(); ++i)
      if (xs[i]->requires_grad)
        xs[i]->ensure_grad()[0] += self.grad[static_cast<int64_t>(i)];
  });
}

Var logsumexp(const Var& x) {
  if (x->val.ndim() != 1 || x->val.numel() == 0)
    throw ShapeError("logsumexp expects non-empty 1-D tensor");
  const int64_t n = x->val.numel();
  const double m = x->val.max();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += std::exp(x->val[i] - m);
  const double out = m + std::log(s);
  return nnode(Tensor::scalar(out), {x}, [x, out](Node& self) {
    Tensor& gx = x->ensure_grad();
    const int64_t n = x->val.numel();
    const double g = self.grad[0];
    for (int64_t i = 0; i < n; ++i) gx[i] += g * std::exp(x->val[i] - out);
  });
}

namespace {

Tensor pad_nchw(const Tensor& x, int pad, PadMode mode) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Hp = H + 2 * pad, Wp = W + 2 * pad;
  Tensor out({N, C, Hp, Wp});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* src = x.data() + ((static_cast<int64_t>(n) * C + c) * H) * W;
      double* dst = out.data() + ((static_cast<int64_t>(n) * C + c) * Hp) * Wp;
      for (int y = 0; y < Hp; ++y) {
        const int sy = mode == PadMode::Reflect ? reflect_index(y - pad, H)
                                                : y - pad;
        for (int xw = 0; xw < Wp; ++xw) {
          const int sx = mode == PadMode::Reflect ? reflect_index(xw - pad, W)
                                                  : xw - pad;
          double v = 0.0;
          if (mode == PadMode::Reflect) {
            v = src[static_cast<int64_t>(sy) * W + sx];
          } else if (sy >= 0 && sy < H && sx >= 0 && sx < W) {
            v = src[static_cast<int64_t>(sy) * W + sx];
          }
          dst[static_cast<int64_t>(y) * Wp + xw] = v;
        }
      }
    }
  return out;
}

// Scatter gradients of the padded tensor back onto the unpadded one,
// honoring the reflect mapping used during padding.
void unpad_accumulate(const Tensor& gpad, Tensor& gx, int pad, PadMode mode) {
  const int N = gx.dim(0), C = gx.dim(1), H = gx.dim(2), W = gx.dim(3);
  const int Hp = H + 2 * pad, Wp = W + 2 * pad;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* src = gpad.data() + ((static_cast<int64_t>(n) * C + c) * Hp) * Wp;
      double* dst = gx.data() + ((static_cast<int64_t>(n) * C + c) * H) * W;
      for (int y = 0; y < Hp; ++y) {
        const int sy = mode == PadMode::Reflect ? reflect_index(y - pad, H) : y - pad;
        if (sy < 0 || sy >= H) continue;
        for (int xw = 0; xw < Wp; ++xw) {
          const int sx = mode == PadMode::Reflect ? reflect_index(xw - pad, W) : xw - pad;
          if (sx < 0 || sx >= W) continue;
          dst[static_cast<int64_t>(sy) * W + sx] += src[static_cast<int64_t>(y) * Wp + xw];
        }
      }
    }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad,
           PadMode mode) {
  if (x->val.ndim() != 4) throw ShapeError("conv2d input must be (N,C,H,W)");
  if (w->val.ndim() != 4) throw ShapeError("conv2d weight must be (Co,Ci,kh,kw)");
  const int N = x->val.dim(0), Ci = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
  const int Co = w->val.dim(0), kh = w->val.dim(2), kw = w->val.dim(3);
  if (w->val.dim(1) != Ci) throw ShapeError("conv2d channel mismatch");
  if (b->val.numel() != Co) throw ShapeError("conv2d bias size mismatch");
  if (mode == PadMode::Reflect && pad >= std::min(H, W) && pad > 0)
    throw ShapeError("reflect padding larger than image");
  const int Hp = H + 2 * pad, Wp = W + 2 * pad;
  const int Ho = (Hp - kh) / stride + 1, Wo = (Wp - kw) / stride + 1;
  if (Ho < 1 || Wo < 1) throw ShapeError("conv2d output would be empty");

  auto pin = std::make_shared<Tensor>(pad_nchw(x->val, pad, mode));
  Tensor out({N, Co, Ho, Wo});
  const double* wd = w->val.data();
  for (int n = 0; n < N; ++n) {
    for (int co = 0; co < Co; ++co) {
      double* op = out.data() + ((static_cast<int64_t>(n) * Co + co) * Ho) * Wo;
      const double bias = b->val[co];
      for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) op[i] = bias;
      for (int ci = 0; ci < Ci; ++ci) {
        const double* ip = pin->data() + ((static_cast<int64_t>(n) * Ci + ci) * Hp) * Wp;
        const double* wp = wd + ((static_cast<int64_t>(co) * Ci + ci) * kh) * kw;
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const double wv = wp[static_cast<int64_t>(ky) * kw + kx];
            for (int oy = 0; oy < Ho; ++oy) {
              const double* irow = ip + static_cast<int64_t>(oy * stride + ky) * Wp + kx;
              double* orow = op + static_cast<int64_t>(oy) * Wo;
              if (stride == 1) {
                for (int ox = 0; ox < Wo; ++ox) orow[ox] += wv * irow[ox];
              } else {
                for (int ox = 0; ox < Wo; ++ox) orow[ox] += wv * irow[static_cast<int64_t>(ox) * stride];
              }
            }
          }
        }
      }
    }
  }

  return nnode(std::move(out), {x, w, b},
               [x, w, b, pin, stride, pad, mode, N, Ci, H, W, Co, kh, kw, Hp, Wp, Ho, Wo](Node& self) {
    const Tensor& g = self.grad;
    if (b->requires_grad) {
      Tensor& gb = b->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int co = 0; co < Co; ++co) {
          const double* gp = g.data() + ((static_cast<int64_t>(n) * Co + co) * Ho) * Wo;
          double s = 0.0;
          for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) s += gp[i];
          gb[co] += s;
        }
    }
    if (w->requires_grad) {
      Tensor& gw = w->ensure_grad();
      for (int co = 0; co < Co; ++co) {
        for (int ci = 0; ci < Ci; ++ci) {
          double* gwp = gw.data() + ((static_cast<int64_t>(co) * Ci + ci) * kh) * kw;
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              double acc = 0.0;
              for (int n = 0; n < N; ++n) {
                const double* gp = g.data() + ((static_cast<int64_t>(n) * Co + co) * Ho) * Wo;
                const double* ip = pin->data() + ((static_cast<int64_t>(n) * Ci + ci) * Hp) * Wp;
                for (int oy = 0; oy < Ho; ++oy) {
                  const double* grow = gp + static_cast<int64_t>(oy) * Wo;
                  const double* irow = ip + static_cast<int64_t>(oy * stride + ky) * Wp + kx;
                  if (stride == 1) {
                    for (int ox = 0; ox < Wo; ++ox) acc += grow[ox] * irow[ox];
                  } else {
                    for (int ox = 0; ox < Wo; ++ox) acc += grow[ox] * irow[static_cast<int64_t>(ox) * stride];
                  }
                }
              }
              gwp[static_cast<int64_t>(ky) * kw + kx] += acc;
            }
          }
        }
      }
    }
    if (x->requires_grad) {
      Tensor gpad({N, Ci, Hp, Wp});
      const double* wd = w->val.data();
      for (int n = 0; n < N; ++n) {
        for (int co = 0; co < Co; ++co) {
          const double* gp = g.data() + ((static_cast<int64_t>(n) * Co + co) * Ho) * Wo;
          for (int ci = 0; ci < Ci; ++ci) {
            double* pp = gpad.data() + ((static_cast<int64_t>(n) * Ci + ci) * Hp) * Wp;
            const double* wp = wd + ((static_cast<int64_t>(co) * Ci + ci) * kh) * kw;
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const double wv = wp[static_cast<int64_t>(ky) * kw + kx];
                for (int oy = 0; oy < Ho; ++oy) {
                  const double* grow = gp + static_cast<int64_t>(oy) * Wo;
                  double* prow = pp + static_cast<int64_t>(oy * stride + ky) * Wp + kx;
                  if (stride == 1) {
                    for (int ox = 0; ox < Wo; ++ox) prow[ox] += wv * grow[ox];
                  } else {
                    for (int ox = 0; ox < Wo; ++ox) prow[static_cast<int64_t>(ox) * stride] += wv * grow[ox];
                  }
                }
              }
            }
          }
        }
      }
      Tensor& gx = x->ensure_grad();
      unpad_accumulate(gpad, gx, pad, mode);
    }
  });
}

Var upsample2x(const Var& x) {
  if (x->val.ndim() != 4) throw ShapeError("upsample2x expects (N,C,H,W)");
  const int N = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
  Tensor out({N, C, 2 * H, 2 * W});
  for (int nc = 0; nc < N * C; ++nc) {
    const double* ip = x->val.data() + static_cast<int64_t>(nc) * H * W;
    double* op = out.data() + static_cast<int64_t>(nc) * 4 * H * W;
    for (int y = 0; y < H; ++y)
      for (int xw = 0; xw < W; ++xw) {
        const double v = ip[static_cast<int64_t>(y) * W + xw];
        double* o0 = op + static_cast<int64_t>(2 * y) * 2 * W + 2 * xw;
        o0[0] = v;
        o0[1] = v;
        o0[2 * W] = v;
        o0[2 * W + 1] = v;
      }
  }
  return nnode(std::move(out), {x}, [x, N, C, H, W](Node& self) {
    Tensor& gx = x->ensure_grad();
    for (int nc = 0; nc < N * C; ++nc) {
      double* gp = gx.data() + static_cast<int64_t>(nc) * H * W;
      const double* sp = self.grad.data() + static_cast<int64_t>(nc) * 4 * H * W;
      for (int y = 0; y < H; ++y)
        for (int xw = 0; xw < W; ++xw) {
          const double* s0 = sp + static_cast<int64_t>(2 * y) * 2 * W + 2 * xw;
          gp[static_cast<int64_t>(y) * W + xw] += s0[0] + s0[1] + s0[2 * W] + s0[2 * W + 1];
        }
    }
  });
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  if (x->val.ndim() != 4) throw ShapeError("instance_norm expects (N,C,H,W)");
  const int N = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
  if (gamma->val.numel() != C || beta->val.numel() != C)
    throw ShapeError("instance_norm affine size mismatch");
  const int64_t hw = static_cast<int64_t>(H) * W;
  auto mu = std::make_shared<std::vector<double>>(static_cast<size_t>(N) * C);
  auto istd = std::make_shared<std::vector<double>>(static_cast<size_t>(N) * C);
  Tensor out(x->val.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* p = x->val.data() + (static_cast<int64_t>(n) * C + c) * hw;
      double m = 0.0;
      for (int64_t i = 0; i < hw; ++i) m += p[i];
      m /= static_cast<double>(hw);
      double v = 0.0;
      for (int64_t i = 0; i < hw; ++i) {
        const double d = p[i] - m;
        v += d * d;
      }
      v /= static_cast<double>(hw);
      const double is = 1.0 / std::sqrt(v + eps);
      (*mu)[static_cast<size_t>(n) * C + c] = m;
      (*istd)[static_cast<size_t>(n) * C + c] = is;
      const double gsc = gamma->val[c], bsc = beta->val[c];
      double* o = out.data() + (static_cast<int64_t>(n) * C + c) * hw;
      for (int64_t i = 0; i < hw; ++i) o[i] = gsc * (p[i] - m) * is + bsc;
    }
  return nnode(std::move(out), {x, gamma, beta},
               [x, gamma, beta, mu, istd, N, C, hw](Node& self) {
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const double m = (*mu)[static_cast<size_t>(n) * C + c];
        const double is = (*istd)[static_cast<size_t>(n) * C + c];
        const double* p = x->val.data() + (static_cast<int64_t>(n) * C + c) * hw;
        const double* g = self.grad.data() + (static_cast<int64_t>(n) * C + c) * hw;
        double sum_g = 0.0, sum_gx = 0.0;
        for (int64_t i = 0; i < hw; ++i) {
          const double xh = (p[i] - m) * is;
          sum_g += g[i];
          sum_gx += g[i] * xh;
        }
        if (gamma->requires_grad) gamma->ensure_grad()[c] += sum_gx;
        if (beta->requires_grad) beta->ensure_grad()[c] += sum_g;
        if (x->requires_grad) {
          Tensor& gx = x->ensure_grad();
          double* gp = gx.data() + (static_cast<int64_t>(n) * C + c) * hw;
          const double gsc = gamma->val[c];
          const double mg = sum_g / static_cast<double>(hw);
          const double mgx = sum_gx / static_cast<double>(hw);
          for (int64_t i = 0; i < hw; ++i) {
            const double xh = (p[i] - m) * is;
            gp[i] += gsc * is * (g[i] - mg - xh * mgx);
          }
        }
      }
  });
}

}  // namespace ops
}  // namespace clarity
