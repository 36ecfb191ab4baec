#include "tabx/autodiff.hpp"

#include <cmath>

namespace tabx::nn {

void Tape::backward(Var loss) {
    if (!recording) throw std::logic_error("autodiff: backward on a non-recording tape");
    if (loss.rows() != 1 || loss.cols() != 1) throw std::logic_error("autodiff: loss must be 1x1");
    nodes[loss.idx].grad(0, 0) = 1.0;
    for (int k = loss.idx; k >= 0; --k)
        if (nodes[k].back) nodes[k].back(*this, nodes[k].grad);
}

namespace {

void shape_check(bool ok, const char* what) {
    if (!ok) throw std::logic_error(std::string("autodiff: shape mismatch in ") + what);
}

} // namespace

Var matmul(Var a, Var b) {
    shape_check(a.cols() == b.rows(), "matmul");
    Tape& T = *a.tape;
    Mat v = a.val() * b.val();
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx, ib = b.idx;
        T.nodes[out.idx].back = [ia, ib](Tape& t, const Mat& g) {
            t.nodes[ia].grad.noalias() += g * t.nodes[ib].val.transpose();
            t.nodes[ib].grad.noalias() += t.nodes[ia].val.transpose() * g;
        };
    }
    return out;
}

Var add(Var a, Var b) {
    shape_check(a.rows() == b.rows() && a.cols() == b.cols(), "add");
    Tape& T = *a.tape;
    Mat v = a.val() + b.val();
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx, ib = b.idx;
        T.nodes[out.idx].back = [ia, ib](Tape& t, const Mat& g) {
            t.nodes[ia].grad += g;
            t.nodes[ib].grad += g;
        };
    }
    return out;
}

Var add_colvec(Var a, Var b) {
    shape_check(b.cols() == 1 && a.rows() == b.rows(), "add_colvec");
    Tape& T = *a.tape;
    Mat v = a.val().colwise() + Eigen::VectorXd(b.val().col(0));
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx, ib = b.idx;
        T.nodes[out.idx].back = [ia, ib](Tape& t, const Mat& g) {
            t.nodes[ia].grad += g;
            t.nodes[ib].grad += g.rowwise().sum();
        };
    }
    return out;
}

Var mul(Var a, Var b) {
    shape_check(a.rows() == b.rows() && a.cols() == b.cols(), "mul");
    Tape& T = *a.tape;
    Mat v = a.val().cwiseProduct(b.val());
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx, ib = b.idx;
        T.nodes[out.idx].back = [ia, ib](Tape& t, const Mat& g) {
            t.nodes[ia].grad += g.cwiseProduct(t.nodes[ib].val);
            t.nodes[ib].grad += g.cwiseProduct(t.nodes[ia].val);
        };
    }
    return out;
}

Var scale(Var a, double s) {
    Tape& T = *a.tape;
    Mat v = a.val() * s;
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx;
        T.nodes[out.idx].back = [ia, s](Tape& t, const Mat& g) { t.nodes[ia].grad += g * s; };
    }
    return out;
}

Var sigmoid(Var a) {
    Tape& T = *a.tape;
    Mat v = a.val().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx, self = out.idx;
        T.nodes[out.idx].back = [ia, self](Tape& t, const Mat& g) {
            const Mat& y = t.nodes[self].val;
            t.nodes[ia].grad.array() += g.array() * y.array() * (1.0 - y.array());
        };
    }
    return out;
}

Var tanh_v(Var a) {
    Tape& T = *a.tape;
    Mat v = a.val().array().tanh().matrix();
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx, self = out.idx;
        T.nodes[out.idx].back = [ia, self](Tape& t, const Mat& g) {
            const Mat& y = t.nodes[self].val;
            t.nodes[ia].grad.array() += g.array() * (1.0 - y.array().square());
        };
    }
    return out;
}

Var relu(Var a) {
    Tape& T = *a.tape;
    Mat v = a.val().cwiseMax(0.0);
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx;
        T.nodes[out.idx].back = [ia](Tape& t, const Mat& g) {
            t.nodes[ia].grad.array() += g.array() * (t.nodes[ia].val.array() > 0.0).cast<double>();
        };
    }
    return out;
}

Var transpose(Var a) {
    Tape& T = *a.tape;
    Mat v = a.val().transpose();
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx;
        T.nodes[out.idx].back = [ia](Tape& t, const Mat& g) { t.nodes[ia].grad += g.transpose(); };
    }
    return out;
}

Var slice_rows(Var a, int r0, int len) {
    shape_check(r0 >= 0 && len > 0 && r0 + len <= a.rows(), "slice_rows");
    Tape& T = *a.tape;
    Mat v = a.val().middleRows(r0, len);
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx;
        T.nodes[out.idx].back = [ia, r0, len](Tape& t, const Mat& g) {
            t.nodes[ia].grad.middleRows(r0, len) += g;
        };
    }
    return out;
}

Var slice_cols(Var a, int c0, int len) {
    shape_check(c0 >= 0 && len > 0 && c0 + len <= a.cols(), "slice_cols");
    Tape& T = *a.tape;
    Mat v = a.val().middleCols(c0, len);
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx;
        T.nodes[out.idx].back = [ia, c0, len](Tape& t, const Mat& g) {
            t.nodes[ia].grad.middleCols(c0, len) += g;
        };
    }
    return out;
}

Var concat_rows(const std::vector<Var>& xs) {
    shape_check(!xs.empty(), "concat_rows");
    Tape& T = *xs[0].tape;
    int cols = xs[0].cols(), rows = 0;
    for (const auto& x : xs) {
        shape_check(x.cols() == cols, "concat_rows");
        rows += x.rows();
    }
    Mat v(rows, cols);
    int r = 0;
    std::vector<std::pair<int, int>> spans; // (idx, rows)
    for (const auto& x : xs) {
        v.middleRows(r, x.rows()) = x.val();
        spans.emplace_back(x.idx, x.rows());
        r += x.rows();
    }
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        T.nodes[out.idx].back = [spans](Tape& t, const Mat& g) {
            int r = 0;
            for (const auto& [idx, n] : spans) {
                t.nodes[idx].grad += g.middleRows(r, n);
                r += n;
            }
        };
    }
    return out;
}

Var concat_cols(const std::vector<Var>& xs) {
    shape_check(!xs.empty(), "concat_cols");
    Tape& T = *xs[0].tape;
    int rows = xs[0].rows(), cols = 0;
    for (const auto& x : xs) {
        shape_check(x.rows() == rows, "concat_cols");
        cols += x.cols();
    }
    Mat v(rows, cols);
    int c = 0;
    std::vector<std::pair<int, int>> spans;
    for (const auto& x : xs) {
        v.middleCols(c, x.cols()) = x.val();
        spans.emplace_back(x.idx, x.cols());
        c += x.cols();
    }
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        T.nodes[out.idx].back = [spans](Tape& t, const Mat& g) {
            int c = 0;
            for (const auto& [idx, n] : spans) {
                t.nodes[idx].grad += g.middleCols(c, n);
                c += n;
            }
        };
    }
    return out;
}

Var softmax_rows(Var a) {
    Tape& T = *a.tape;
    Mat v = a.val();
    for (int i = 0; i < v.rows(); ++i) {
        double m = v.row(i).maxCoeff();
        v.row(i) = (v.row(i).array() - m).exp();
        v.row(i) /= v.row(i).sum();
    }
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx, self = out.idx;
        T.nodes[out.idx].back = [ia, self](Tape& t, const Mat& g) {
            const Mat& y = t.nodes[self].val;
            for (int i = 0; i < y.rows(); ++i) {
                double dot = g.row(i).cwiseProduct(y.row(i)).sum();
                t.nodes[ia].grad.row(i).array() += (g.row(i).array() - dot) * y.row(i).array();
            }
        };
    }
    return out;
}

Var layernorm_cols(Var x, Var gamma, Var beta, double eps) {
    shape_check(gamma.cols() == 1 && beta.cols() == 1 && gamma.rows() == x.rows() && beta.rows() == x.rows(),
                "layernorm_cols");
    Tape& T = *x.tape;
    const Mat& xv = x.val();
    const int d = int(xv.rows()), n = int(xv.cols());
    Mat xhat(d, n);
    Eigen::VectorXd inv_std(n);
    for (int j = 0; j < n; ++j) {
        double mu = xv.col(j).mean();
        double var = (xv.col(j).array() - mu).square().sum() / double(d);
        double is = 1.0 / std::sqrt(var + eps);
        inv_std(j) = is;
        xhat.col(j) = (xv.col(j).array() - mu) * is;
    }
    Mat v = ((xhat.array().colwise() * gamma.val().col(0).array()).colwise() +
             beta.val().col(0).array())
                .matrix();
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ix = x.idx, ig = gamma.idx, ib = beta.idx;
        T.nodes[out.idx].back = [ix, ig, ib, xhat, inv_std, d](Tape& t, const Mat& g) {
            t.nodes[ib].grad += g.rowwise().sum();
            t.nodes[ig].grad += g.cwiseProduct(xhat).rowwise().sum();
            Mat dxhat = (g.array().colwise() * t.nodes[ig].val.col(0).array()).matrix();
            Mat& dx = t.nodes[ix].grad;
            for (int j = 0; j < g.cols(); ++j) {
                double m1 = dxhat.col(j).mean();
                double m2 = dxhat.col(j).cwiseProduct(xhat.col(j)).mean();
                dx.col(j).array() +=
                    (dxhat.col(j).array() - m1 - xhat.col(j).array() * m2) * inv_std(j);
            }
            (void)d;
        };
    }
    return out;
}

Var sum_all(Var a) {
    Tape& T = *a.tape;
    Mat v(1, 1);
    v(0, 0) = a.val().sum();
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int ia = a.idx;
        T.nodes[out.idx].back = [ia](Tape& t, const Mat& g) {
            t.nodes[ia].grad.array() += g(0, 0);
        };
    }
    return out;
}

Var bce_with_logits(Var z, const std::vector<int>& y) {
    shape_check(z.rows() == 1, "bce_with_logits");
    if (size_t(z.cols()) != y.size()) throw InputError("bce_with_logits: label length mismatch");
    Tape& T = *z.tape;
    const Mat& zv = z.val();
    const int n = int(y.size());
    double loss = 0.0;
    for (int j = 0; j < n; ++j) {
        double zj = zv(0, j);
        // softplus(z) - y*z, computed without overflow
        loss += std::max(zj, 0.0) - double(y[j]) * zj + std::log1p(std::exp(-std::abs(zj)));
    }
    loss /= double(n);
    if (!std::isfinite(loss)) throw std::runtime_error("nn: non-finite loss");
    Mat v(1, 1);
    v(0, 0) = loss;
    Var out = T.alloc(std::move(v));
    if (T.recording) {
        int iz = z.idx;
        std::vector<int> yy = y;
        T.nodes[out.idx].back = [iz, yy, n](Tape& t, const Mat& g) {
            const Mat& zval = t.nodes[iz].val;
            double s = g(0, 0) / double(n);
            for (int j = 0; j < n; ++j) {
                double p = 1.0 / (1.0 + std::exp(-zval(0, j)));
                t.nodes[iz].grad(0, j) += s * (p - double(yy[j]));
            }
        };
    }
    return out;
}

} // namespace tabx::nn
