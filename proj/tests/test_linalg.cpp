#include "support.hpp"

#include "hase/error.hpp"

#include <doctest.h>

using namespace hase;

TEST_CASE("fuse lowers the trace and matches the covariance form") {
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + k % 2;
    const Matrix a = test::random_spd(n, rng, 0.1, 10.0);
    const Matrix b = test::random_spd(n, rng, 0.1, 10.0);
    const Matrix f = fuse(a, b);
    CHECK(f.trace() < a.trace());
    const Matrix direct = a - a * (a + b).inverse() * a;
    CHECK((f - direct).cwiseAbs().maxCoeff() < 1e-9 * a.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("spd_inverse rejects singular and asymmetric input") {
  Matrix m(2, 2);
  m << 1, 1, 1, 1;
  CHECK_THROWS_AS(spd_inverse(m, "t"), DomainError);
  m << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(spd_inverse(m, "t"), DomainError);
}

TEST_CASE("psd_sqrt squares back") {
  Rng rng(2);
  const Matrix a = test::random_spd(3, rng, 0.01, 5.0);
  const Matrix r = psd_sqrt(a);
  CHECK((r * r - a).norm() < 1e-10);
}

TEST_CASE("symmetric_eigen is sign-normalised and ascending") {
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  const auto e = symmetric_eigen(a);
  CHECK(e.values(0) == doctest::Approx(1.0));
  CHECK(e.values(1) == doctest::Approx(3.0));
  CHECK(e.principal()(0) > 0.0);
}
