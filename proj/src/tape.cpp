#include "archtx/tape.hpp"

#include <algorithm>
#include <cmath>

namespace archtx {

VarId Tape::fresh(Tensor v) {
    slots_.push_back(Slot{std::move(v), Tensor{}});
    return static_cast<VarId>(slots_.size() - 1);
}

Tensor& Tape::grad_slot(VarId v) {
    Slot& s = slots_[static_cast<size_t>(v)];
    if (s.grad.data.empty() && !s.val.data.empty()) {
        s.grad = Tensor::zeros(s.val.shape);
    }
    return s.grad;
}

VarId Tape::constant(Tensor v) {
    return fresh(std::move(v));
}

VarId Tape::watch(Parameter& p) {
    auto it = watch_index_.find(&p);
    if (it != watch_index_.end()) {
        return it->second;
    }
    VarId v = fresh(p.value);
    watched_.emplace_back(&p, v);
    watch_index_.emplace(&p, v);
    return v;
}

VarId Tape::zeros(Shape s) {
    return fresh(Tensor::zeros(std::move(s)));
}

// ---------------------------------------------------------------------------

VarId Tape::conv2d(VarId xv, VarId wv, VarId bv, int stride) {
    const Tensor& x = value(xv);
    const Tensor& w = value(wv);
    const Tensor& b = value(bv);
    if (x.shape.size() != 4 || w.shape.size() != 4 || b.shape.size() != 1) {
        throw ShapeError("conv2d expects x:(N,C,H,W) w:(OC,C,K,K) b:(OC)");
    }
    const int n = x.shape[0], c = x.shape[1], h = x.shape[2], ww = x.shape[3];
    const int oc = w.shape[0], k = w.shape[2];
    if (w.shape[1] != c || w.shape[3] != k || b.shape[0] != oc) {
        throw ShapeError("conv2d shape mismatch: x " + shape_str(x.shape) + " w " + shape_str(w.shape));
    }
    const int pad = k / 2;
    const int oh = h / stride, ow = ww / stride;

    Tensor out = Tensor::zeros({n, oc, oh, ow});
    const double* xd = x.data.data();
    const double* wd = w.data.data();
    double* od = out.data.data();
    for (int in = 0; in < n; ++in) {
        for (int o = 0; o < oc; ++o) {
            const double bias = b.data[static_cast<size_t>(o)];
            for (int y = 0; y < oh; ++y) {
                for (int xo = 0; xo < ow; ++xo) {
                    double acc = bias;
                    for (int ic = 0; ic < c; ++ic) {
                        const double* xp = xd + ((static_cast<int64_t>(in) * c + ic) * h) * ww;
                        const double* wp = wd + ((static_cast<int64_t>(o) * c + ic) * k) * k;
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = y * stride + ky - pad;
                            if (iy < 0 || iy >= h) continue;
                            const double* xr = xp + static_cast<int64_t>(iy) * ww;
                            const double* wr = wp + static_cast<int64_t>(ky) * k;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = xo * stride + kx - pad;
                                if (ix < 0 || ix >= ww) continue;
                                acc += xr[ix] * wr[kx];
                            }
                        }
                    }
                    od[((static_cast<int64_t>(in) * oc + o) * oh + y) * ow + xo] = acc;
                }
            }
        }
    }
    VarId ov = fresh(std::move(out));
    if (record_) {
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            const Tensor& xt = t.value(xv);
            const Tensor& wt = t.value(wv);
            Tensor& gx = t.grad_slot(xv);
            Tensor& gw = t.grad_slot(wv);
            Tensor& gb = t.grad_slot(bv);
            for (int in = 0; in < n; ++in) {
                for (int o = 0; o < oc; ++o) {
                    for (int y = 0; y < oh; ++y) {
                        for (int xo = 0; xo < ow; ++xo) {
                            const double g = gy.data[static_cast<size_t>(((static_cast<int64_t>(in) * oc + o) * oh + y) * ow + xo)];
                            if (g == 0.0) continue;
                            gb.data[static_cast<size_t>(o)] += g;
                            for (int ic = 0; ic < c; ++ic) {
                                for (int ky = 0; ky < k; ++ky) {
                                    const int iy = y * stride + ky - pad;
                                    if (iy < 0 || iy >= h) continue;
                                    for (int kx = 0; kx < k; ++kx) {
                                        const int ix = xo * stride + kx - pad;
                                        if (ix < 0 || ix >= ww) continue;
                                        const int64_t xi = ((static_cast<int64_t>(in) * c + ic) * h + iy) * ww + ix;
                                        const int64_t wi = ((static_cast<int64_t>(o) * c + ic) * k + ky) * k + kx;
                                        gx.data[static_cast<size_t>(xi)] += g * wt.data[static_cast<size_t>(wi)];
                                        gw.data[static_cast<size_t>(wi)] += g * xt.data[static_cast<size_t>(xi)];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return ov;
}

VarId Tape::dense(VarId xv, VarId wv, VarId bv) {
    const Tensor& x = value(xv);
    const Tensor& w = value(wv);
    const Tensor& b = value(bv);
    if (x.shape.size() != 2 || w.shape.size() != 2 || b.shape.size() != 1) {
        throw ShapeError("dense expects x:(N,F) w:(O,F) b:(O)");
    }
    const int n = x.shape[0], f = x.shape[1], o = w.shape[0];
    if (w.shape[1] != f || b.shape[0] != o) {
        throw ShapeError("dense shape mismatch: x " + shape_str(x.shape) + " w " + shape_str(w.shape));
    }
    Tensor out = Tensor::zeros({n, o});
    for (int in = 0; in < n; ++in) {
        const double* xr = x.data.data() + static_cast<int64_t>(in) * f;
        for (int j = 0; j < o; ++j) {
            const double* wr = w.data.data() + static_cast<int64_t>(j) * f;
            double acc = b.data[static_cast<size_t>(j)];
            for (int i = 0; i < f; ++i) {
                acc += xr[i] * wr[i];
            }
            out.data[static_cast<size_t>(static_cast<int64_t>(in) * o + j)] = acc;
        }
    }
    VarId ov = fresh(std::move(out));
    if (record_) {
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            const Tensor& xt = t.value(xv);
            const Tensor& wt = t.value(wv);
            Tensor& gx = t.grad_slot(xv);
            Tensor& gw = t.grad_slot(wv);
            Tensor& gb = t.grad_slot(bv);
            for (int in = 0; in < n; ++in) {
                for (int j = 0; j < o; ++j) {
                    const double g = gy.data[static_cast<size_t>(static_cast<int64_t>(in) * o + j)];
                    if (g == 0.0) continue;
                    gb.data[static_cast<size_t>(j)] += g;
                    for (int i = 0; i < f; ++i) {
                        gx.data[static_cast<size_t>(static_cast<int64_t>(in) * f + i)] += g * wt.data[static_cast<size_t>(static_cast<int64_t>(j) * f + i)];
                        gw.data[static_cast<size_t>(static_cast<int64_t>(j) * f + i)] += g * xt.data[static_cast<size_t>(static_cast<int64_t>(in) * f + i)];
                    }
                }
            }
        });
    }
    return ov;
}

VarId Tape::relu(VarId xv) {
    const Tensor& x = value(xv);
    Tensor out = x;
    for (auto& v : out.data) {
        if (v < 0.0 || v == 0.0) v = 0.0;  // adjoint at exactly 0 is defined as 0
    }
    VarId ov = fresh(std::move(out));
    if (record_) {
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            const Tensor& xt = t.value(xv);
            Tensor& gx = t.grad_slot(xv);
            for (size_t i = 0; i < gx.data.size(); ++i) {
                if (xt.data[i] > 0.0) gx.data[i] += gy.data[i];
            }
        });
    }
    return ov;
}

VarId Tape::avgpool2x2(VarId xv) {
    const Tensor& x = value(xv);
    if (x.shape.size() != 4) {
        throw ShapeError("avgpool2x2 expects (N,C,H,W)");
    }
    const int n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    const int oh = h / 2, ow = w / 2;
    Tensor out = Tensor::zeros({n, c, oh, ow});
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const double* xp = x.data.data() + (static_cast<int64_t>(in) * c + ic) * h * w;
            double* op = out.data.data() + (static_cast<int64_t>(in) * c + ic) * oh * ow;
            for (int y = 0; y < oh; ++y) {
                for (int xo = 0; xo < ow; ++xo) {
                    const double* r0 = xp + static_cast<int64_t>(2 * y) * w + 2 * xo;
                    const double* r1 = r0 + w;
                    op[static_cast<int64_t>(y) * ow + xo] = (r0[0] + r0[1] + r1[0] + r1[1]) * 0.25;
                }
            }
        }
    }
    VarId ov = fresh(std::move(out));
    if (record_) {
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            Tensor& gx = t.grad_slot(xv);
            for (int in = 0; in < n; ++in) {
                for (int ic = 0; ic < c; ++ic) {
                    const double* gp = gy.data.data() + (static_cast<int64_t>(in) * c + ic) * oh * ow;
                    double* xp = gx.data.data() + (static_cast<int64_t>(in) * c + ic) * h * w;
                    for (int y = 0; y < oh; ++y) {
                        for (int xo = 0; xo < ow; ++xo) {
                            const double g = gp[static_cast<int64_t>(y) * ow + xo] * 0.25;
                            double* r0 = xp + static_cast<int64_t>(2 * y) * w + 2 * xo;
                            double* r1 = r0 + w;
                            r0[0] += g;
                            r0[1] += g;
                            r1[0] += g;
                            r1[1] += g;
                        }
                    }
                }
            }
        });
    }
    return ov;
}

VarId Tape::add(VarId av, VarId bv) {
    const Tensor& a = value(av);
    const Tensor& b = value(bv);
    if (a.shape != b.shape) {
        throw ShapeError("add shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    }
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] += b.data[i];
    }
    VarId ov = fresh(std::move(out));
    if (record_) {
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            Tensor& ga = t.grad_slot(av);
            Tensor& gb = t.grad_slot(bv);
            for (size_t i = 0; i < gy.data.size(); ++i) {
                ga.data[i] += gy.data[i];
                gb.data[i] += gy.data[i];
            }
        });
    }
    return ov;
}

VarId Tape::scale_by_scalar(VarId xv, VarId sv) {
    const Tensor& x = value(xv);
    const Tensor& s = value(sv);
    if (s.size() != 1) {
        throw ShapeError("scale_by_scalar: scale must have exactly one element");
    }
    const double sc = s.data[0];
    Tensor out = x;
    for (auto& v : out.data) v *= sc;
    VarId ov = fresh(std::move(out));
    if (record_) {
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            const Tensor& xt = t.value(xv);
            Tensor& gx = t.grad_slot(xv);
            Tensor& gs = t.grad_slot(sv);
            double acc = 0.0;
            for (size_t i = 0; i < gy.data.size(); ++i) {
                gx.data[i] += sc * gy.data[i];
                acc += gy.data[i] * xt.data[i];
            }
            gs.data[0] += acc;  // d loss / d s = <d loss / d out, x>
        });
    }
    return ov;
}

VarId Tape::global_avg_pool(VarId xv) {
    const Tensor& x = value(xv);
    if (x.shape.size() != 4) {
        throw ShapeError("global_avg_pool expects (N,C,H,W)");
    }
    const int n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    const double inv = 1.0 / (static_cast<double>(h) * w);
    Tensor out = Tensor::zeros({n, c});
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const double* xp = x.data.data() + (static_cast<int64_t>(in) * c + ic) * h * w;
            double acc = 0.0;
            for (int i = 0; i < h * w; ++i) acc += xp[i];
            out.data[static_cast<size_t>(static_cast<int64_t>(in) * c + ic)] = acc * inv;
        }
    }
    VarId ov = fresh(std::move(out));
    if (record_) {
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            Tensor& gx = t.grad_slot(xv);
            for (int in = 0; in < n; ++in) {
                for (int ic = 0; ic < c; ++ic) {
                    const double g = gy.data[static_cast<size_t>(static_cast<int64_t>(in) * c + ic)] * inv;
                    double* xp = gx.data.data() + (static_cast<int64_t>(in) * c + ic) * h * w;
                    for (int i = 0; i < h * w; ++i) xp[i] += g;
                }
            }
        });
    }
    return ov;
}

VarId Tape::softmax_cross_entropy(VarId lv, const std::vector<int>& labels) {
    const Tensor& logits = value(lv);
    if (logits.shape.size() != 2 || logits.shape[0] != static_cast<int>(labels.size())) {
        throw ShapeError("softmax_cross_entropy expects logits:(N,K) with N labels");
    }
    const int n = logits.shape[0], k = logits.shape[1];
    // probs are saved for the adjoint
    auto probs = std::make_shared<Tensor>(Tensor::zeros({n, k}));
    double loss = 0.0;
    for (int in = 0; in < n; ++in) {
        const double* row = logits.data.data() + static_cast<int64_t>(in) * k;
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
        const double log_denom = std::log(denom);
        for (int j = 0; j < k; ++j) {
            probs->data[static_cast<size_t>(static_cast<int64_t>(in) * k + j)] = std::exp(row[j] - mx) / denom;
        }
        loss -= (row[labels[static_cast<size_t>(in)]] - mx - log_denom);
    }
    loss /= n;
    VarId ov = fresh(Tensor::scalar(loss));
    if (record_) {
        auto lab = labels;
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            const double g = gy.data[0] / n;
            Tensor& gl = t.grad_slot(lv);
            for (int in = 0; in < n; ++in) {
                for (int j = 0; j < k; ++j) {
                    const int64_t i = static_cast<int64_t>(in) * k + j;
                    double p = probs->data[static_cast<size_t>(i)];
                    if (j == lab[static_cast<size_t>(in)]) p -= 1.0;
                    gl.data[static_cast<size_t>(i)] += g * p;
                }
            }
        });
    }
    return ov;
}

VarId Tape::softmax_masked(VarId xv, const std::vector<bool>& active) {
    const Tensor& x = value(xv);
    if (x.shape.size() != 1 || x.shape[0] != static_cast<int>(active.size())) {
        throw ShapeError("softmax_masked expects a 1-D input matching the mask");
    }
    const int n = x.shape[0];
    double mx = -1e300;
    for (int i = 0; i < n; ++i) {
        if (active[static_cast<size_t>(i)]) mx = std::max(mx, x.data[static_cast<size_t>(i)]);
    }
    Tensor out = Tensor::zeros({n});
    double denom = 0.0;
    for (int i = 0; i < n; ++i) {
        if (active[static_cast<size_t>(i)]) {
            out.data[static_cast<size_t>(i)] = std::exp(x.data[static_cast<size_t>(i)] - mx);
            denom += out.data[static_cast<size_t>(i)];
        }
    }
    for (int i = 0; i < n; ++i) out.data[static_cast<size_t>(i)] /= denom;
    VarId ov = fresh(std::move(out));
    if (record_) {
        auto act = active;
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            const Tensor& y = t.value(ov);
            Tensor& gx = t.grad_slot(xv);
            double dot = 0.0;
            for (int i = 0; i < n; ++i) {
                if (act[static_cast<size_t>(i)]) dot += gy.data[static_cast<size_t>(i)] * y.data[static_cast<size_t>(i)];
            }
            for (int i = 0; i < n; ++i) {
                if (act[static_cast<size_t>(i)]) {
                    gx.data[static_cast<size_t>(i)] += y.data[static_cast<size_t>(i)] * (gy.data[static_cast<size_t>(i)] - dot);
                }
            }
        });
    }
    return ov;
}

VarId Tape::pick(VarId xv, int index) {
    const Tensor& x = value(xv);
    if (index < 0 || index >= x.size()) {
        throw ShapeError("pick index out of range");
    }
    VarId ov = fresh(Tensor::scalar(x.data[static_cast<size_t>(index)]));
    if (record_) {
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            t.grad_slot(xv).data[static_cast<size_t>(index)] += gy.data[0];
        });
    }
    return ov;
}

VarId Tape::reshape(VarId xv, Shape target) {
    const Tensor& x = value(xv);
    if (numel(target) != x.size()) {
        throw ShapeError("reshape element count mismatch: " + shape_str(x.shape) + " -> " + shape_str(target));
    }
    Tensor out;
    out.shape = target;
    out.data = x.data;
    VarId ov = fresh(std::move(out));
    if (record_) {
        adjoints_.push_back([=](Tape& t) {
            const Tensor& gy = t.slots_[static_cast<size_t>(ov)].grad;
            if (gy.data.empty()) return;
            Tensor& gx = t.grad_slot(xv);
            for (size_t i = 0; i < gy.data.size(); ++i) gx.data[i] += gy.data[i];
        });
    }
    return ov;
}

void Tape::backward(VarId loss) {
    if (!record_) {
        throw Error("backward called on a non-recording tape");
    }
    if (consumed_) {
        throw Error("backward called twice on the same tape");
    }
    if (value(loss).size() != 1) {
        throw ShapeError("backward requires a scalar loss");
    }
    consumed_ = true;
    for (auto& [p, v] : watched_) {
        p->grad.fill(0.0);
    }
    grad_slot(loss).data[0] = 1.0;
    for (size_t i = adjoints_.size(); i-- > 0;) {
        adjoints_[i](*this);
    }
    for (auto& [p, v] : watched_) {
        const Tensor& g = slots_[static_cast<size_t>(v)].grad;
        if (!g.data.empty()) {
            p->grad.data = g.data;
        }
    }
}

}  // namespace archtx
