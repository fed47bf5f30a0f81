#include <doctest.h>

#include <cstring>
#include <vector>

#include "tsg/kernels.hpp"
#include "tsg/rng.hpp"

using namespace tsg;

namespace {

std::vector<double> rand_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

// The OpenMP kernels must be bitwise identical to the serial reference for
// any shape; checkpoint determinism rests on this.
TEST_CASE("parallel kernels match serial reference bitwise") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 1 + static_cast<int>(rng.next_below(33));
    const int n = 1 + static_cast<int>(rng.next_below(33));
    const int p = 1 + static_cast<int>(rng.next_below(33));
    const auto a = rand_vec(static_cast<std::size_t>(m) * n, rng);
    const auto b = rand_vec(static_cast<std::size_t>(n) * p, rng);
    const auto g = rand_vec(static_cast<std::size_t>(m) * p, rng);
    const bool acc = trial % 2 == 0;

    std::vector<double> s(static_cast<std::size_t>(m) * p, 0.5), q(s);
    kernels::serial::mm_nn(a.data(), b.data(), s.data(), m, n, p, acc);
    kernels::par::mm_nn(a.data(), b.data(), q.data(), m, n, p, acc);
    CHECK(bitwise_equal(s, q));

    std::vector<double> s2(static_cast<std::size_t>(m) * n, 0.5), q2(s2);
    kernels::serial::mm_nt(g.data(), b.data(), s2.data(), m, n, p, acc);
    kernels::par::mm_nt(g.data(), b.data(), q2.data(), m, n, p, acc);
    CHECK(bitwise_equal(s2, q2));

    std::vector<double> s3(static_cast<std::size_t>(n) * p, 0.5), q3(s3);
    kernels::serial::mm_tn(a.data(), g.data(), s3.data(), m, n, p, acc);
    kernels::par::mm_tn(a.data(), g.data(), q3.data(), m, n, p, acc);
    CHECK(bitwise_equal(s3, q3));

    const auto x = rand_vec(static_cast<std::size_t>(n), rng);
    std::vector<double> s4(static_cast<std::size_t>(m), 0.5), q4(s4);
    kernels::serial::mv(a.data(), x.data(), s4.data(), m, n, acc);
    kernels::par::mv(a.data(), x.data(), q4.data(), m, n, acc);
    CHECK(bitwise_equal(s4, q4));

    const auto y = rand_vec(static_cast<std::size_t>(m), rng);
    std::vector<double> s5(static_cast<std::size_t>(n), 0.5), q5(s5);
    kernels::serial::mv_t(a.data(), y.data(), s5.data(), m, n, acc);
    kernels::par::mv_t(a.data(), y.data(), q5.data(), m, n, acc);
    CHECK(bitwise_equal(s5, q5));

    std::vector<double> s6(static_cast<std::size_t>(m) * n, 0.5), q6(s6);
    kernels::serial::outer(y.data(), x.data(), s6.data(), m, n, acc);
    kernels::par::outer(y.data(), x.data(), q6.data(), m, n, acc);
    CHECK(bitwise_equal(s6, q6));
  }
}

TEST_CASE("elementwise kernels: serial and parallel agree bitwise") {
  Rng rng(11);
  for (int n : {1, 3, 127, 1024, 40000}) {
    const auto a = rand_vec(static_cast<std::size_t>(n), rng);
    const auto b = rand_vec(static_cast<std::size_t>(n), rng);
    std::vector<double> s(static_cast<std::size_t>(n)), q(s);

    kernels::serial::sigmoid(a.data(), s.data(), n);
    kernels::par::sigmoid(a.data(), q.data(), n);
    CHECK(bitwise_equal(s, q));

    kernels::serial::tanh_(a.data(), s.data(), n);
    kernels::par::tanh_(a.data(), q.data(), n);
    CHECK(bitwise_equal(s, q));

    kernels::serial::mul(a.data(), b.data(), s.data(), n);
    kernels::par::mul(a.data(), b.data(), q.data(), n);
    CHECK(bitwise_equal(s, q));

    std::vector<double> s2(static_cast<std::size_t>(n), 0.25), q2(s2);
    kernels::serial::sigmoid_bwd(a.data(), b.data(), s2.data(), n);
    kernels::par::sigmoid_bwd(a.data(), b.data(), q2.data(), n);
    CHECK(bitwise_equal(s2, q2));
  }
}

TEST_CASE("dispatching wrappers match the serial reference") {
  Rng rng(13);
  // Sizes straddling the parallel grain so both paths get exercised.
  for (int n : {8, 64, 256}) {
    const auto a = rand_vec(static_cast<std::size_t>(n) * n, rng);
    const auto b = rand_vec(static_cast<std::size_t>(n) * n, rng);
    std::vector<double> s(static_cast<std::size_t>(n) * n), q(s);
    kernels::serial::mm_nn(a.data(), b.data(), s.data(), n, n, n, false);
    kernels::mm_nn(a.data(), b.data(), q.data(), n, n, n, false);
    CHECK(bitwise_equal(s, q));
  }
}
