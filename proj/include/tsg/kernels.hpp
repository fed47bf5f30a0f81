#pragma once

#include <cstddef>

namespace tsg::kernels {

// Dense inner loops behind the autodiff ops. Each kernel exists twice:
// `serial` is the reference implementation, `par` the OpenMP one. The
// parallel versions split work so that every output element is written by
// exactly one thread running the same scalar loop body, which makes them
// bitwise identical to the serial reference for any thread count — that
// property is load-bearing for the project's determinism guarantees and is
// asserted by tests.
//
// The `accumulate` flag switches between out = expr and out += expr; the
// backward pass uses the accumulating form.

namespace serial {

// C[m x p] = A[m x n] * B[n x p]
void mm_nn(const double* a, const double* b, double* out, int m, int n, int p, bool accumulate);
// C[m x n] = A[m x p] * B[n x p]^T
void mm_nt(const double* a, const double* b, double* out, int m, int n, int p, bool accumulate);
// C[n x p] = A[m x n]^T * B[m x p]
void mm_tn(const double* a, const double* b, double* out, int m, int n, int p, bool accumulate);
// y[m] = A[m x n] * x[n]
void mv(const double* a, const double* x, double* out, int m, int n, bool accumulate);
// y[n] = A[m x n]^T * x[m]
void mv_t(const double* a, const double* x, double* out, int m, int n, bool accumulate);
// A[m x n] (+)= u[m] * v[n]^T
void outer(const double* u, const double* v, double* out, int m, int n, bool accumulate);

void add(const double* a, const double* b, double* out, int n);
void sub(const double* a, const double* b, double* out, int n);
void mul(const double* a, const double* b, double* out, int n);
void scale(const double* a, double c, double* out, int n);
void sigmoid(const double* x, double* out, int n);
void tanh_(const double* x, double* out, int n);
// out (+)= g * s'(y) given y = s(x); used by sigmoid/tanh backward.
void sigmoid_bwd(const double* y, const double* g, double* out, int n);
void tanh_bwd(const double* y, const double* g, double* out, int n);
void axpy(double c, const double* x, double* out, int n);  // out += c*x

}  // namespace serial

namespace par {

void mm_nn(const double* a, const double* b, double* out, int m, int n, int p, bool accumulate);
void mm_nt(const double* a, const double* b, double* out, int m, int n, int p, bool accumulate);
void mm_tn(const double* a, const double* b, double* out, int m, int n, int p, bool accumulate);
void mv(const double* a, const double* x, double* out, int m, int n, bool accumulate);
void mv_t(const double* a, const double* x, double* out, int m, int n, bool accumulate);
void outer(const double* u, const double* v, double* out, int m, int n, bool accumulate);

void add(const double* a, const double* b, double* out, int n);
void sub(const double* a, const double* b, double* out, int n);
void mul(const double* a, const double* b, double* out, int n);
void scale(const double* a, double c, double* out, int n);
void sigmoid(const double* x, double* out, int n);
void tanh_(const double* x, double* out, int n);
void sigmoid_bwd(const double* y, const double* g, double* out, int n);
void tanh_bwd(const double* y, const double* g, double* out, int n);
void axpy(double c, const double* x, double* out, int n);

}  // namespace par

// Work-size threshold above which the dispatching wrappers pick the OpenMP
// path. Depends only on operand shapes, never on thread count, so the choice
// itself is deterministic.
inline constexpr long long kParGrain = 1 << 15;

void mm_nn(const double* a, const double* b, double* out, int m, int n, int p, bool accumulate = false);
void mm_nt(const double* a, const double* b, double* out, int m, int n, int p, bool accumulate = false);
void mm_tn(const double* a, const double* b, double* out, int m, int n, int p, bool accumulate = false);
void mv(const double* a, const double* x, double* out, int m, int n, bool accumulate = false);
void mv_t(const double* a, const double* x, double* out, int m, int n, bool accumulate = false);
void outer(const double* u, const double* v, double* out, int m, int n, bool accumulate = false);
void add(const double* a, const double* b, double* out, int n);
void sub(const double* a, const double* b, double* out, int n);
void mul(const double* a, const double* b, double* out, int n);
void scale(const double* a, double c, double* out, int n);
void sigmoid(const double* x, double* out, int n);
void tanh_(const double* x, double* out, int n);
void sigmoid_bwd(const double* y, const double* g, double* out, int n);
void tanh_bwd(const double* y, const double* g, double* out, int n);
void axpy(double c, const double* x, double* out, int n);

}  // namespace tsg::kernels
