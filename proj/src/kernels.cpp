#include "tsg/kernels.hpp"

#include <cmath>

namespace tsg::kernels {

// Single-row / single-element bodies shared verbatim by the serial and
// OpenMP paths. Keeping one body per kernel is what guarantees bitwise
// equality between the two: no reassociation, same instruction stream.
namespace detail {

inline void mm_nn_row(const double* a, const double* b, double* out, int i, int n, int p, bool acc) {
  const double* ai = a + static_cast<std::size_t>(i) * n;
  double* oi = out + static_cast<std::size_t>(i) * p;
  for (int j = 0; j < p; ++j) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += ai[k] * b[static_cast<std::size_t>(k) * p + j];
    oi[j] = acc ? oi[j] + s : s;
  }
}

inline void mm_nt_row(const double* a, const double* b, double* out, int i, int n, int p, bool acc) {
  const double* ai = a + static_cast<std::size_t>(i) * p;
  double* oi = out + static_cast<std::size_t>(i) * n;
  for (int j = 0; j < n; ++j) {
    const double* bj = b + static_cast<std::size_t>(j) * p;
    double s = 0.0;
    for (int k = 0; k < p; ++k) s += ai[k] * bj[k];
    oi[j] = acc ? oi[j] + s : s;
  }
}

inline void mm_tn_row(const double* a, const double* b, double* out, int i, int m, int n, int p, bool acc) {
  // out row i (of n) = sum_k a[k][i] * b[k][:]
  double* oi = out + static_cast<std::size_t>(i) * p;
  for (int j = 0; j < p; ++j) {
    double s = 0.0;
    for (int k = 0; k < m; ++k)
      s += a[static_cast<std::size_t>(k) * n + i] * b[static_cast<std::size_t>(k) * p + j];
    oi[j] = acc ? oi[j] + s : s;
  }
}

inline void mv_row(const double* a, const double* x, double* out, int i, int n, bool acc) {
  const double* ai = a + static_cast<std::size_t>(i) * n;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += ai[k] * x[k];
  out[i] = acc ? out[i] + s : s;
}

inline void mv_t_col(const double* a, const double* x, double* out, int j, int m, int n, bool acc) {
  double s = 0.0;
  for (int k = 0; k < m; ++k) s += a[static_cast<std::size_t>(k) * n + j] * x[k];
  out[j] = acc ? out[j] + s : s;
}

inline void outer_row(const double* u, const double* v, double* out, int i, int n, bool acc) {
  double* oi = out + static_cast<std::size_t>(i) * n;
  const double ui = u[i];
  if (acc) {
    for (int j = 0; j < n; ++j) oi[j] += ui * v[j];
  } else {
    for (int j = 0; j < n; ++j) oi[j] = ui * v[j];
  }
}

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

// ---------------------------------------------------------------- serial --

namespace serial {

void mm_nn(const double* a, const double* b, double* out, int m, int n, int p, bool acc) {
  for (int i = 0; i < m; ++i) detail::mm_nn_row(a, b, out, i, n, p, acc);
}
void mm_nt(const double* a, const double* b, double* out, int m, int n, int p, bool acc) {
  for (int i = 0; i < m; ++i) detail::mm_nt_row(a, b, out, i, n, p, acc);
}
void mm_tn(const double* a, const double* b, double* out, int m, int n, int p, bool acc) {
  for (int i = 0; i < n; ++i) detail::mm_tn_row(a, b, out, i, m, n, p, acc);
}
void mv(const double* a, const double* x, double* out, int m, int n, bool acc) {
  for (int i = 0; i < m; ++i) detail::mv_row(a, x, out, i, n, acc);
}
void mv_t(const double* a, const double* x, double* out, int m, int n, bool acc) {
  for (int j = 0; j < n; ++j) detail::mv_t_col(a, x, out, j, m, n, acc);
}
void outer(const double* u, const double* v, double* out, int m, int n, bool acc) {
  for (int i = 0; i < m; ++i) detail::outer_row(u, v, out, i, n, acc);
}

void add(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void sub(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void mul(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void scale(const double* a, double c, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = c * a[i];
}
void sigmoid(const double* x, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = detail::sigm(x[i]);
}
void tanh_(const double* x, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}
void sigmoid_bwd(const double* y, const double* g, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] += g[i] * y[i] * (1.0 - y[i]);
}
void tanh_bwd(const double* y, const double* g, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] += g[i] * (1.0 - y[i] * y[i]);
}
void axpy(double c, const double* x, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] += c * x[i];
}

}  // namespace serial

// ------------------------------------------------------------------- par --

namespace par {

void mm_nn(const double* a, const double* b, double* out, int m, int n, int p, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) detail::mm_nn_row(a, b, out, i, n, p, acc);
}
void mm_nt(const double* a, const double* b, double* out, int m, int n, int p, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) detail::mm_nt_row(a, b, out, i, n, p, acc);
}
void mm_tn(const double* a, const double* b, double* out, int m, int n, int p, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) detail::mm_tn_row(a, b, out, i, m, n, p, acc);
}
void mv(const double* a, const double* x, double* out, int m, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) detail::mv_row(a, x, out, i, n, acc);
}
void mv_t(const double* a, const double* x, double* out, int m, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) detail::mv_t_col(a, x, out, j, m, n, acc);
}
void outer(const double* u, const double* v, double* out, int m, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) detail::outer_row(u, v, out, i, n, acc);
}

void add(const double* a, const double* b, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void sub(const double* a, const double* b, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void mul(const double* a, const double* b, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void scale(const double* a, double c, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = c * a[i];
}
void sigmoid(const double* x, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = detail::sigm(x[i]);
}
void tanh_(const double* x, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}
void sigmoid_bwd(const double* y, const double* g, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] += g[i] * y[i] * (1.0 - y[i]);
}
void tanh_bwd(const double* y, const double* g, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] += g[i] * (1.0 - y[i] * y[i]);
}
void axpy(double c, const double* x, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] += c * x[i];
}

}  // namespace par

// ------------------------------------------------------------- dispatch --

namespace {
inline bool big(long long work) { return work >= kParGrain; }
}  // namespace

void mm_nn(const double* a, const double* b, double* out, int m, int n, int p, bool acc) {
  if (big(1LL * m * n * p)) par::mm_nn(a, b, out, m, n, p, acc);
  else serial::mm_nn(a, b, out, m, n, p, acc);
}
void mm_nt(const double* a, const double* b, double* out, int m, int n, int p, bool acc) {
  if (big(1LL * m * n * p)) par::mm_nt(a, b, out, m, n, p, acc);
  else serial::mm_nt(a, b, out, m, n, p, acc);
}
void mm_tn(const double* a, const double* b, double* out, int m, int n, int p, bool acc) {
  if (big(1LL * m * n * p)) par::mm_tn(a, b, out, m, n, p, acc);
  else serial::mm_tn(a, b, out, m, n, p, acc);
}
void mv(const double* a, const double* x, double* out, int m, int n, bool acc) {
  if (big(1LL * m * n)) par::mv(a, x, out, m, n, acc);
  else serial::mv(a, x, out, m, n, acc);
}
void mv_t(const double* a, const double* x, double* out, int m, int n, bool acc) {
  if (big(1LL * m * n)) par::mv_t(a, x, out, m, n, acc);
  else serial::mv_t(a, x, out, m, n, acc);
}
void outer(const double* u, const double* v, double* out, int m, int n, bool acc) {
  if (big(1LL * m * n)) par::outer(u, v, out, m, n, acc);
  else serial::outer(u, v, out, m, n, acc);
}
void add(const double* a, const double* b, double* out, int n) {
  if (big(n)) par::add(a, b, out, n);
  else serial::add(a, b, out, n);
}
void sub(const double* a, const double* b, double* out, int n) {
  if (big(n)) par::sub(a, b, out, n);
  else serial::sub(a, b, out, n);
}
void mul(const double* a, const double* b, double* out, int n) {
  if (big(n)) par::mul(a, b, out, n);
  else serial::mul(a, b, out, n);
}
void scale(const double* a, double c, double* out, int n) {
  if (big(n)) par::scale(a, c, out, n);
  else serial::scale(a, c, out, n);
}
void sigmoid(const double* x, double* out, int n) {
  if (big(4LL * n)) par::sigmoid(x, out, n);
  else serial::sigmoid(x, out, n);
}
void tanh_(const double* x, double* out, int n) {
  if (big(4LL * n)) par::tanh_(x, out, n);
  else serial::tanh_(x, out, n);
}
void sigmoid_bwd(const double* y, const double* g, double* out, int n) {
  if (big(n)) par::sigmoid_bwd(y, g, out, n);
  else serial::sigmoid_bwd(y, g, out, n);
}
void tanh_bwd(const double* y, const double* g, double* out, int n) {
  if (big(n)) par::tanh_bwd(y, g, out, n);
  else serial::tanh_bwd(y, g, out, n);
}
void axpy(double c, const double* x, double* out, int n) {
  if (big(n)) par::axpy(c, x, out, n);
  else serial::axpy(c, x, out, n);
}

}  // namespace tsg::kernels
