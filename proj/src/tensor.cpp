#include "gatlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gatlab {

namespace {

using NodePtr = std::shared_ptr<detail::TensorNode>;

void check_same_tape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.tape() != b.tape()) {
        throw ContractError(std::string(op) + ": operands live on different tapes");
    }
}

// Accumulate g (full broadcast shape) into the gradient of a node whose
// value may have size-1 dims.
void accumulate_broadcast(detail::TensorNode& n, const Matrix& g) {
    Matrix& acc = n.ensure_grad();
    const int r = acc.rows(), c = acc.cols();
    if (r == g.rows() && c == g.cols()) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += g.data()[i];
        return;
    }
    for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) {
            acc(r == 1 ? 0 : i, c == 1 ? 0 : j) += g(i, j);
        }
    }
}

struct BroadcastShape {
    int rows, cols;
};

BroadcastShape broadcast_shape(const Matrix& a, const Matrix& b, const char* op) {
    const bool rows_ok = a.rows() == b.rows() || a.rows() == 1 || b.rows() == 1;
    const bool cols_ok = a.cols() == b.cols() || a.cols() == 1 || b.cols() == 1;
    if (!rows_ok || !cols_ok) {
        throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    return {std::max(a.rows(), b.rows()), std::max(a.cols(), b.cols())};
}

// Elementwise binary op with broadcasting. fwd(a,b) -> value,
// dfa/dfb(a,b) -> local partials.
template <typename Fwd, typename Dfa, typename Dfb>
Tensor binary_op(const Tensor& ta, const Tensor& tb, const char* name, Fwd fwd, Dfa dfa,
                 Dfb dfb) {
    check_same_tape(ta, tb, name);
    const Matrix& a = ta.value();
    const Matrix& b = tb.value();
    const auto [R, C] = broadcast_shape(a, b, name);
    Matrix out(R, C);
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < C; ++j) {
            out(i, j) = fwd(a(a.rows() == 1 ? 0 : i, a.cols() == 1 ? 0 : j),
                            b(b.rows() == 1 ? 0 : i, b.cols() == 1 ? 0 : j));
        }
    }
    Tape& tape = *ta.tape();
    const bool rg = ta.requires_grad() || tb.requires_grad();
    Tensor tout = tape.make(std::move(out), rg);
    if (rg) {
        NodePtr an = ta.node(), bn = tb.node(), on = tout.node();
        tape.record([an, bn, on, dfa, dfb] {
            if (!on->has_grad) return;
            const Matrix& g = on->grad;
            const Matrix& a = an->value;
            const Matrix& b = bn->value;
            auto pick = [](const Matrix& m, int i, int j) {
                return m(m.rows() == 1 ? 0 : i, m.cols() == 1 ? 0 : j);
            };
            if (an->requires_grad) {
                Matrix ga(g.rows(), g.cols());
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j)
                        ga(i, j) = g(i, j) * dfa(pick(a, i, j), pick(b, i, j));
                accumulate_broadcast(*an, ga);
            }
            if (bn->requires_grad) {
                Matrix gb(g.rows(), g.cols());
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j)
                        gb(i, j) = g(i, j) * dfb(pick(a, i, j), pick(b, i, j));
                accumulate_broadcast(*bn, gb);
            }
        });
    }
    return tout;
}

// Elementwise unary op. fwd(x) -> value, dfx(x) -> local partial.
template <typename Fwd, typename Dfx>
Tensor unary_op(const Tensor& tx, Fwd fwd, Dfx dfx) {
    const Matrix& x = tx.value();
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = fwd(x.data()[i]);
    Tape& tape = *tx.tape();
    Tensor tout = tape.make(std::move(out), tx.requires_grad());
    if (tx.requires_grad()) {
        NodePtr xn = tx.node(), on = tout.node();
        tape.record([xn, on, dfx] {
            if (!on->has_grad) return;
            Matrix& acc = xn->ensure_grad();
            const Matrix& g = on->grad;
            const Matrix& x = xn->value;
            for (std::size_t i = 0; i < x.size(); ++i)
                acc.data()[i] += g.data()[i] * dfx(x.data()[i]);
        });
    }
    return tout;
}

}  // namespace

Tensor Tape::leaf(Matrix value, bool requires_grad) {
    return make(std::move(value), requires_grad);
}

Tensor Tape::make(Matrix value, bool requires_grad) {
    auto n = std::make_shared<detail::TensorNode>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->tape_id = next_id_++;
    return Tensor(std::move(n), this);
}

void Tape::backward(const Tensor& loss) {
    if (loss.tape() != this) {
        throw ContractError("Tape::backward: loss lives on another tape");
    }
    if (loss.rows() != 1 || loss.cols() != 1) {
        throw ContractError("Tape::backward: loss must be scalar, got " +
                            loss.value().shape_str());
    }
    loss.node()->ensure_grad()(0, 0) += 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

Tensor matmul(const Tensor& ta, const Tensor& tb) {
    check_same_tape(ta, tb, "matmul");
    Matrix out = matmul_nn(ta.value(), tb.value());
    Tape& tape = *ta.tape();
    const bool rg = ta.requires_grad() || tb.requires_grad();
    Tensor tout = tape.make(std::move(out), rg);
    if (rg) {
        NodePtr an = ta.node(), bn = tb.node(), on = tout.node();
        tape.record([an, bn, on] {
            if (!on->has_grad) return;
            const Matrix& g = on->grad;
            if (an->requires_grad) gemm_nt_acc(g, bn->value, an->ensure_grad());
            if (bn->requires_grad) gemm_tn_acc(an->value, g, bn->ensure_grad());
        });
    }
    return tout;
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double c) {
    return unary_op(x, [c](double v) { return c * v; }, [c](double) { return c; });
}

Tensor add_scalar(const Tensor& x, double c) {
    return unary_op(x, [c](double v) { return v + c; }, [](double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
    return unary_op(x, [](double v) { return v > 0.0 ? v : 0.0; },
                    [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
    if (!(slope > 0.0 && slope < 1.0)) {
        throw ContractError("leaky_relu: slope must be in (0,1), got " +
                            std::to_string(slope));
    }
    // Subgradient at 0 is defined as the negative slope.
    return unary_op(x, [slope](double v) { return v > 0.0 ? v : slope * v; },
                    [slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

Tensor elu(const Tensor& x) {
    return unary_op(x, [](double v) { return v > 0.0 ? v : std::expm1(v); },
                    [](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
}

Tensor transpose(const Tensor& tx) {
    Tape& tape = *tx.tape();
    Tensor tout = tape.make(tx.value().transposed(), tx.requires_grad());
    if (tx.requires_grad()) {
        NodePtr xn = tx.node(), on = tout.node();
        tape.record([xn, on] {
            if (!on->has_grad) return;
            accumulate_broadcast(*xn, on->grad.transposed());
        });
    }
    return tout;
}

Tensor reshape(const Tensor& tx, int rows, int cols) {
    const Matrix& x = tx.value();
    if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != x.size()) {
        throw DimensionError("reshape: " + x.shape_str() + " has wrong size for [" +
                             std::to_string(rows) + "x" + std::to_string(cols) + "]");
    }
    Matrix out(rows, cols);
    std::copy(x.data(), x.data() + x.size(), out.data());
    Tape& tape = *tx.tape();
    Tensor tout = tape.make(std::move(out), tx.requires_grad());
    if (tx.requires_grad()) {
        NodePtr xn = tx.node(), on = tout.node();
        tape.record([xn, on] {
            if (!on->has_grad) return;
            Matrix& acc = xn->ensure_grad();
            const Matrix& g = on->grad;
            for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += g.data()[i];
        });
    }
    return tout;
}

Tensor sum(const Tensor& tx) {
    const Matrix& x = tx.value();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
    Tape& tape = *tx.tape();
    Tensor tout = tape.make(Matrix(1, 1, {s}), tx.requires_grad());
    if (tx.requires_grad()) {
        NodePtr xn = tx.node(), on = tout.node();
        tape.record([xn, on] {
            if (!on->has_grad) return;
            const double g = on->grad(0, 0);
            Matrix& acc = xn->ensure_grad();
            for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += g;
        });
    }
    return tout;
}

Tensor concat_rows(const Tensor& ta, const Tensor& tb) {
    check_same_tape(ta, tb, "concat_rows");
    const Matrix& a = ta.value();
    const Matrix& b = tb.value();
    if (a.rows() != b.rows()) {
        throw DimensionError("concat_rows: row counts differ, " + a.shape_str() + " vs " +
                             b.shape_str());
    }
    Matrix out(a.rows(), a.cols() + b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        std::copy(a.row_ptr(i), a.row_ptr(i) + a.cols(), out.row_ptr(i));
        std::copy(b.row_ptr(i), b.row_ptr(i) + b.cols(), out.row_ptr(i) + a.cols());
    }
    Tape& tape = *ta.tape();
    const bool rg = ta.requires_grad() || tb.requires_grad();
    Tensor tout = tape.make(std::move(out), rg);
    if (rg) {
        NodePtr an = ta.node(), bn = tb.node(), on = tout.node();
        tape.record([an, bn, on] {
            if (!on->has_grad) return;
            const Matrix& g = on->grad;
            const int ac = an->value.cols();
            if (an->requires_grad) {
                Matrix& acc = an->ensure_grad();
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < ac; ++j) acc(i, j) += g(i, j);
            }
            if (bn->requires_grad) {
                Matrix& acc = bn->ensure_grad();
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < acc.cols(); ++j) acc(i, j) += g(i, ac + j);
            }
        });
    }
    return tout;
}

Tensor stack_rows(const Tensor& ta, const Tensor& tb) {
    check_same_tape(ta, tb, "stack_rows");
    const Matrix& a = ta.value();
    const Matrix& b = tb.value();
    if (a.cols() != b.cols()) {
        throw DimensionError("stack_rows: column counts differ, " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    Matrix out(a.rows() + b.rows(), a.cols());
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    Tape& tape = *ta.tape();
    const bool rg = ta.requires_grad() || tb.requires_grad();
    Tensor tout = tape.make(std::move(out), rg);
    if (rg) {
        NodePtr an = ta.node(), bn = tb.node(), on = tout.node();
        tape.record([an, bn, on] {
            if (!on->has_grad) return;
            const Matrix& g = on->grad;
            if (an->requires_grad) {
                Matrix& acc = an->ensure_grad();
                for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += g.data()[i];
            }
            if (bn->requires_grad) {
                Matrix& acc = bn->ensure_grad();
                const double* gb = g.data() + an->value.size();
                for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += gb[i];
            }
        });
    }
    return tout;
}

Tensor gather_rows(const Tensor& tx, std::span<const int> ids) {
    const Matrix& x = tx.value();
    for (int id : ids) {
        if (id < 0 || id >= x.rows()) {
            throw DimensionError("gather_rows: row id " + std::to_string(id) +
                                 " out of range for " + x.shape_str());
        }
    }
    Matrix out(static_cast<int>(ids.size()), x.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::copy(x.row_ptr(ids[i]), x.row_ptr(ids[i]) + x.cols(),
                  out.row_ptr(static_cast<int>(i)));
    }
    Tape& tape = *tx.tape();
    Tensor tout = tape.make(std::move(out), tx.requires_grad());
    if (tx.requires_grad()) {
        NodePtr xn = tx.node(), on = tout.node();
        std::vector<int> ids_copy(ids.begin(), ids.end());
        tape.record([xn, on, ids_copy = std::move(ids_copy)] {
            if (!on->has_grad) return;
            Matrix& acc = xn->ensure_grad();
            const Matrix& g = on->grad;
            for (std::size_t i = 0; i < ids_copy.size(); ++i) {
                double* dst = acc.row_ptr(ids_copy[i]);
                const double* src = g.row_ptr(static_cast<int>(i));
                for (int j = 0; j < g.cols(); ++j) dst[j] += src[j];
            }
        });
    }
    return tout;
}

Tensor scatter_add_rows(const Tensor& tx, std::span<const int> dst, int num_rows) {
    const Matrix& x = tx.value();
    if (static_cast<int>(dst.size()) != x.rows()) {
        throw DimensionError("scatter_add_rows: " + std::to_string(dst.size()) +
                             " destinations for " + x.shape_str());
    }
    for (int id : dst) {
        if (id < 0 || id >= num_rows) {
            throw DimensionError("scatter_add_rows: destination " + std::to_string(id) +
                                 " out of range [0," + std::to_string(num_rows) + ")");
        }
    }
    Matrix out(num_rows, x.cols());
    for (int i = 0; i < x.rows(); ++i) {
        double* d = out.row_ptr(dst[static_cast<std::size_t>(i)]);
        const double* s = x.row_ptr(i);
        for (int j = 0; j < x.cols(); ++j) d[j] += s[j];
    }
    Tape& tape = *tx.tape();
    Tensor tout = tape.make(std::move(out), tx.requires_grad());
    if (tx.requires_grad()) {
        NodePtr xn = tx.node(), on = tout.node();
        std::vector<int> dst_copy(dst.begin(), dst.end());
        tape.record([xn, on, dst_copy = std::move(dst_copy)] {
            if (!on->has_grad) return;
            Matrix& acc = xn->ensure_grad();
            const Matrix& g = on->grad;
            for (std::size_t i = 0; i < dst_copy.size(); ++i) {
                double* d = acc.row_ptr(static_cast<int>(i));
                const double* s = g.row_ptr(dst_copy[i]);
                for (int j = 0; j < g.cols(); ++j) d[j] += s[j];
            }
        });
    }
    return tout;
}

Tensor segment_softmax(const Tensor& tscores, std::span<const int> segments,
                       int num_segments) {
    const Matrix& s = tscores.value();
    if (s.cols() != 1) {
        throw DimensionError("segment_softmax: scores must be [Ex1], got " + s.shape_str());
    }
    if (static_cast<int>(segments.size()) != s.rows()) {
        throw DimensionError("segment_softmax: " + std::to_string(segments.size()) +
                             " segment ids for " + s.shape_str());
    }
    std::vector<int> count(static_cast<std::size_t>(num_segments), 0);
    for (int seg : segments) {
        if (seg < 0 || seg >= num_segments) {
            throw DimensionError("segment_softmax: segment id " + std::to_string(seg) +
                                 " out of range [0," + std::to_string(num_segments) + ")");
        }
        ++count[static_cast<std::size_t>(seg)];
    }
    for (int k = 0; k < num_segments; ++k) {
        if (count[static_cast<std::size_t>(k)] == 0) {
            throw DegenerateNeighborhoodError("segment_softmax: segment " +
                                              std::to_string(k) + " is empty");
        }
    }

    const int e = s.rows();
    // Max-subtraction within each segment keeps the exponentials bounded.
    std::vector<double> segmax(static_cast<std::size_t>(num_segments),
                               -std::numeric_limits<double>::infinity());
    for (int i = 0; i < e; ++i) {
        auto k = static_cast<std::size_t>(segments[static_cast<std::size_t>(i)]);
        segmax[k] = std::max(segmax[k], s(i, 0));
    }
    Matrix out(e, 1);
    std::vector<double> segsum(static_cast<std::size_t>(num_segments), 0.0);
    for (int i = 0; i < e; ++i) {
        auto k = static_cast<std::size_t>(segments[static_cast<std::size_t>(i)]);
        out(i, 0) = std::exp(s(i, 0) - segmax[k]);
        segsum[k] += out(i, 0);
    }
    for (int i = 0; i < e; ++i) {
        out(i, 0) /= segsum[static_cast<std::size_t>(segments[static_cast<std::size_t>(i)])];
    }

    Tape& tape = *tscores.tape();
    Tensor tout = tape.make(std::move(out), tscores.requires_grad());
    if (tscores.requires_grad()) {
        NodePtr sn = tscores.node(), on = tout.node();
        std::vector<int> seg_copy(segments.begin(), segments.end());
        tape.record([sn, on, seg_copy = std::move(seg_copy), num_segments] {
            if (!on->has_grad) return;
            const Matrix& g = on->grad;
            const Matrix& alpha = on->value;
            // d/ds_e = alpha_e * (g_e - sum_{e' in segment} g_e' alpha_e')
            std::vector<double> dot(static_cast<std::size_t>(num_segments), 0.0);
            for (std::size_t i = 0; i < seg_copy.size(); ++i) {
                dot[static_cast<std::size_t>(seg_copy[i])] +=
                    g(static_cast<int>(i), 0) * alpha(static_cast<int>(i), 0);
            }
            Matrix& acc = sn->ensure_grad();
            for (std::size_t i = 0; i < seg_copy.size(); ++i) {
                const int r = static_cast<int>(i);
                acc(r, 0) += alpha(r, 0) *
                             (g(r, 0) - dot[static_cast<std::size_t>(seg_copy[i])]);
            }
        });
    }
    return tout;
}

Tensor softmax_cross_entropy(const Tensor& tlogits, std::span<const int> labels) {
    const Matrix& z = tlogits.value();
    if (static_cast<int>(labels.size()) != z.rows()) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                             " labels for " + z.shape_str());
    }
    const int m = z.rows(), k = z.cols();
    for (int lab : labels) {
        if (lab < 0 || lab >= k) {
            throw DimensionError("softmax_cross_entropy: label " + std::to_string(lab) +
                                 " out of range [0," + std::to_string(k) + ")");
        }
    }
    Matrix probs(m, k);
    double nll = 0.0;
    for (int i = 0; i < m; ++i) {
        const double* zi = z.row_ptr(i);
        double zmax = zi[0];
        for (int j = 1; j < k; ++j) zmax = std::max(zmax, zi[j]);
        double sum = 0.0;
        double* pi = probs.row_ptr(i);
        for (int j = 0; j < k; ++j) {
            pi[j] = std::exp(zi[j] - zmax);
            sum += pi[j];
        }
        for (int j = 0; j < k; ++j) pi[j] /= sum;
        nll -= std::log(pi[labels[static_cast<std::size_t>(i)]]);
    }
    Tape& tape = *tlogits.tape();
    Tensor tout = tape.make(Matrix(1, 1, {nll / m}), tlogits.requires_grad());
    if (tlogits.requires_grad()) {
        NodePtr zn = tlogits.node(), on = tout.node();
        std::vector<int> lab_copy(labels.begin(), labels.end());
        tape.record([zn, on, probs = std::move(probs), lab_copy = std::move(lab_copy)] {
            if (!on->has_grad) return;
            const double g = on->grad(0, 0);
            Matrix& acc = zn->ensure_grad();
            const int m = acc.rows(), k = acc.cols();
            for (int i = 0; i < m; ++i) {
                const double* pi = probs.row_ptr(i);
                double* ai = acc.row_ptr(i);
                for (int j = 0; j < k; ++j) ai[j] += g * pi[j] / m;
                ai[lab_copy[static_cast<std::size_t>(i)]] -= g / m;
            }
        });
    }
    return tout;
}

double grad_check(const TensorFn& f, const Matrix& x, double eps) {
    Tape tape;
    Tensor tx = tape.leaf(x, /*requires_grad=*/true);
    Tensor loss = f(tape, tx);
    if (loss.rows() != 1 || loss.cols() != 1) {
        throw ContractError("grad_check: objective must be scalar, got " +
                            loss.value().shape_str());
    }
    tape.backward(loss);
    const Matrix& analytic = tx.grad();

    auto eval = [&f](const Matrix& pt) {
        Tape t;
        Tensor leaf = t.leaf(pt, /*requires_grad=*/false);
        return f(t, leaf).item();
    };

    double max_rel = 0.0;
    Matrix probe = x;
    for (int i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < x.cols(); ++j) {
            const double orig = probe(i, j);
            probe(i, j) = orig + eps;
            const double fp = eval(probe);
            probe(i, j) = orig - eps;
            const double fm = eval(probe);
            probe(i, j) = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double an = analytic(i, j);
            max_rel = std::max(max_rel, std::abs(an - numeric) / std::max(1.0, std::abs(an)));
        }
    }
    return max_rel;
}

}  // namespace gatlab
