#pragma once
#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "tabx/error.hpp"

namespace tabx::nn {

using Mat = Eigen::MatrixXd;

class Tape;

// Lightweight handle into the tape. Indices stay valid; references returned by
// val()/grad() must not be held across an op call (the node vector may reallocate).
struct Var {
    Tape* tape = nullptr;
    int idx = -1;

    const Mat& val() const;
    Mat& grad() const;
    int rows() const;
    int cols() const;
};

// Reverse-mode tape over dense matrices. With recording off, ops compute values
// only — no gradients, no backward closures — which is what inference and the
// finite-difference oracle run on.
class Tape {
public:
    bool recording = true;

    struct Node {
        Mat val;
        Mat grad;
        std::function<void(Tape&, const Mat&)> back;
    };
    std::vector<Node> nodes;

    Var alloc(Mat v) {
        nodes.emplace_back();
        Node& n = nodes.back();
        n.val = std::move(v);
        if (recording) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
        return Var{this, int(nodes.size()) - 1};
    }

    // parameter leaf: gradient read back after backward()
    Var leaf(const Mat& v) { return alloc(v); }

    // input data: gradient slot exists while recording but is never consumed
    Var constant(Mat v) { return alloc(std::move(v)); }

    void backward(Var loss);

    void reset() { nodes.clear(); }
};

inline const Mat& Var::val() const { return tape->nodes[idx].val; }
inline Mat& Var::grad() const { return tape->nodes[idx].grad; }
inline int Var::rows() const { return int(tape->nodes[idx].val.rows()); }
inline int Var::cols() const { return int(tape->nodes[idx].val.cols()); }

Var matmul(Var a, Var b);
Var add(Var a, Var b);        // same shape
Var add_colvec(Var a, Var b); // b is (r,1), broadcast across a's columns
Var mul(Var a, Var b);        // elementwise
Var scale(Var a, double s);
Var sigmoid(Var a);
Var tanh_v(Var a);
Var relu(Var a);
Var transpose(Var a);
Var slice_rows(Var a, int r0, int len);
Var slice_cols(Var a, int c0, int len);
Var concat_rows(const std::vector<Var>& xs);
Var concat_cols(const std::vector<Var>& xs);
Var softmax_rows(Var a); // softmax across the columns of each row
Var layernorm_cols(Var x, Var gamma, Var beta, double eps = 1e-5); // normalize each column
Var sum_all(Var a);      // 1x1

// Mean binary cross-entropy computed stably from logits z (1,T); y in {0,1}.
Var bce_with_logits(Var z, const std::vector<int>& y);

} // namespace tabx::nn
