#include <cmath>
#include <sstream>

#include "csr/de_op.hpp"
#include "csr/errors.hpp"
#include "csr/resample.hpp"
#include "csr/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("de_forward branch examples") {
  // Identity: block already averages to the target.
  csr::Block id;
  id.hr = {-0.25, 0.75, 0.25, -0.75};
  id.lr = 0.0;
  const csr::DEResult rid = csr::de_forward(id);
  CHECK(rid.branch == csr::DeBranch::identity);
  CHECK(rid.correction_l1 == 0.0);
  CHECK(rid.y == id.hr);

  // Full saturation upward: alpha = 1 pushes everything to +1.
  csr::Block up;
  up.hr = {-0.5, 0.5, -0.5, 0.5};
  up.lr = 1.0;
  const csr::DEResult rup = csr::de_forward(up);
  CHECK(rup.branch == csr::DeBranch::raise);
  for (double v : rup.y) CHECK(v == 1.0);

  // Two-sample block, alpha = 0.5: hand-evaluated correction.
  csr::Block half;
  half.hr = {-0.5, 0.5};
  half.lr = 0.5;
  const csr::DEResult rh = csr::de_forward(half);
  CHECK(rh.y[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(rh.y[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(mean_of(rh.y) == doctest::Approx(0.5).epsilon(1e-15));

  // Full saturation downward.
  csr::Block down;
  down.hr = {0.2, 0.4, 0.6, 0.8};
  down.lr = -1.0;
  const csr::DEResult rdn = csr::de_forward(down);
  CHECK(rdn.branch == csr::DeBranch::lower);
  for (double v : rdn.y) CHECK(v == -1.0);
}

TEST_CASE("de_forward rejects out-of-range input") {
  csr::Block bad;
  bad.hr = {0.0, 1.5};
  bad.lr = 0.0;
  CHECK_THROWS_AS(csr::de_forward(bad), csr::OutOfRange);
  bad.hr = {0.0, 0.5};
  bad.lr = -1.5;
  CHECK_THROWS_AS(csr::de_forward(bad), csr::OutOfRange);
}

TEST_CASE("conservation, range, order over random blocks") {
  csr::Rng rng(101);
  for (int n : {2, 4, 8, 16}) {
    const std::size_t m = static_cast<std::size_t>(n) * n;
    const double tol = 4.0 * 2.220446049250313e-16 * static_cast<double>(m);
    for (int trial = 0; trial < 2000; ++trial) {
      const csr::Block b = oracle::random_block(rng, m);
      const csr::DEResult r = csr::de_forward(b);
      CHECK(std::abs(csr::pairwise_mean(r.y.data(), r.y.size()) - b.lr) <=
            tol);
      for (double v : r.y) {
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
      }
      for (std::size_t i = 1; i < m; ++i)
        for (std::size_t j = 0; j < i; ++j)
          if (b.hr[i] > b.hr[j])
            CHECK(r.y[i] >= r.y[j]);
          else if (b.hr[j] > b.hr[i])
            CHECK(r.y[j] >= r.y[i]);
    }
  }
}

TEST_CASE("de_forward is idempotent") {
  csr::Rng rng(102);
  for (int trial = 0; trial < 200; ++trial) {
    csr::Block b = oracle::random_block(rng, 16);
    const csr::DEResult once = csr::de_forward(b);
    csr::Block again;
    again.hr = once.y;
    again.lr = b.lr;
    const csr::DEResult twice = csr::de_forward(again);
    // Conservation puts the corrected block within the boundary window, but
    // fp roundoff in the mean can still pick a non-identity branch; the
    // output must be unchanged either way.
    for (std::size_t i = 0; i < once.y.size(); ++i)
      CHECK(twice.y[i] == doctest::Approx(once.y[i]).epsilon(1e-14));
  }
}

TEST_CASE("branch continuity: correction vanishes linearly toward the boundary") {
  csr::Rng rng(103);
  csr::Block b = oracle::random_block(rng, 16);
  const double mean = csr::pairwise_mean(b.hr.data(), b.hr.size());
  double prev = 1.0;
  for (int k = 3; k <= 9; ++k) {
    const double delta = std::pow(10.0, -k);
    for (double sign : {1.0, -1.0}) {
      b.lr = mean + sign * delta;
      const csr::DEResult r = csr::de_forward(b);
      double worst = 0.0;
      for (std::size_t i = 0; i < r.y.size(); ++i)
        worst = std::max(worst, std::abs(r.y[i] - b.hr[i]));
      CHECK(worst <= 4.0 * delta);  // linear decay in |P - mean|
      if (sign > 0) {
        CHECK(worst < prev);
        prev = worst;
      }
    }
  }
}

TEST_CASE("de_vjp: identity branch passes the cotangent through") {
  csr::Block b;
  b.hr = {0.5, -0.5, 0.25, -0.25};
  b.lr = 0.0;
  const std::vector<double> upstream = {1.0, 2.0, 3.0, 4.0};
  const csr::BlockVjp g = csr::de_vjp(b, upstream);
  CHECK(g.dx == upstream);
  CHECK(g.dp == 0.0);
}

TEST_CASE("de_vjp diagonal matches the closed-form derivative") {
  csr::Rng rng(104);
  for (int trial = 0; trial < 300; ++trial) {
    csr::Block b = oracle::random_block(rng, 16);
    const double mean = csr::pairwise_mean(b.hr.data(), b.hr.size());
    if (std::abs(mean - b.lr) < 1e-3) continue;
    for (std::size_t i : {std::size_t(0), std::size_t(7), std::size_t(15)}) {
      std::vector<double> unit(16, 0.0);
      unit[i] = 1.0;
      const csr::BlockVjp g = csr::de_vjp(b, unit);
      const double expected =
          oracle::de_diagonal_closed_form(b.hr[i], mean, b.lr, 16);
      CHECK(g.dx[i] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("de_vjp agrees with the finite-difference Jacobian") {
  csr::Rng rng(105);
  const double h = 1e-6;
  int tested = 0;
  while (tested < 60) {
    csr::Block b = oracle::random_block(rng, 16);
    // Keep the finite-difference stencil away from the branch boundary and
    // the domain edge.
    const double mean = csr::pairwise_mean(b.hr.data(), b.hr.size());
    if (std::abs(mean - b.lr) < 1e-3) continue;
    bool interior = std::abs(b.lr) < 0.999;
    for (double v : b.hr) interior = interior && std::abs(v) < 0.999;
    if (!interior) continue;
    ++tested;

    std::vector<double> upstream(16);
    for (double& u : upstream) u = rng.uniform(-1.0, 1.0);
    const csr::BlockVjp g = csr::de_vjp(b, upstream);

    const auto jac = oracle::de_jacobian_fd(b, h);
    for (std::size_t j = 0; j < 16; ++j) {
      double fd = 0.0;
      for (std::size_t i = 0; i < 16; ++i) fd += upstream[i] * jac[i][j];
      CHECK(g.dx[j] == doctest::Approx(fd).epsilon(1e-6));
    }
    double fd_p = 0.0;
    for (std::size_t i = 0; i < 16; ++i) fd_p += upstream[i] * jac[i][16];
    CHECK(g.dp == doctest::Approx(fd_p).epsilon(1e-6));
  }
}

TEST_CASE("de_forward_grid applies blockwise and conserves") {
  csr::Rng rng(106);

  // Constant blocks hit the identity branch everywhere.
  const csr::Grid lr = oracle::random_grid(rng, 3, 5, 2);
  const csr::Grid hr_id = csr::upsample_nearest(lr, 4);
  const csr::Grid out_id = csr::de_forward_grid(hr_id, lr, 4);
  CHECK(out_id.data == hr_id.data);

  // Random pair: downsampling the output reproduces the LR grid.
  const csr::Grid hr = oracle::random_grid(rng, 12, 20, 2);
  const csr::Grid out = csr::de_forward_grid(hr, lr, 4);
  const csr::Grid down = csr::downsample_avg(out, 4);
  for (std::size_t i = 0; i < down.data.size(); ++i)
    CHECK(down.data[i] == doctest::Approx(lr.data[i]).epsilon(1e-12));

  // Channels are processed independently.
  for (int c = 0; c < 2; ++c) {
    csr::Grid hr_c(12, 20, 1), lr_c(3, 5, 1);
    hr_c.normalized = lr_c.normalized = true;
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 20; ++x) hr_c.at(y, x, 0) = hr.at(y, x, c);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 5; ++x) lr_c.at(y, x, 0) = lr.at(y, x, c);
    const csr::Grid out_c = csr::de_forward_grid(hr_c, lr_c, 4);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 20; ++x)
        CHECK(out_c.at(y, x, 0) == out.at(y, x, c));
  }

  const csr::Grid hr_bad = oracle::random_grid(rng, 13, 20, 2);
  CHECK_THROWS_AS(csr::de_forward_grid(hr_bad, lr, 4), csr::ShapeMismatch);
}

TEST_CASE("correction_magnitude examples") {
  csr::Rng rng(107);
  const csr::Grid lr = oracle::random_grid(rng, 4, 4, 1);
  const csr::Grid conserving = csr::upsample_nearest(lr, 2);
  CHECK(csr::correction_magnitude(conserving, lr, 2) == 0.0);

  csr::Grid all_low(8, 8, 1, -1.0);
  all_low.normalized = true;
  csr::Grid all_high(4, 4, 1, 1.0);
  all_high.normalized = true;
  CHECK(csr::correction_magnitude(all_low, all_high, 2) ==
        doctest::Approx(2.0).epsilon(1e-15));

  csr::Grid zeros(8, 8, 1, 0.0);
  zeros.normalized = true;
  csr::Grid halves(4, 4, 1, 0.5);
  halves.normalized = true;
  CHECK(csr::correction_magnitude(zeros, halves, 2) ==
        doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("correction_surface: saturation rows and monotonicity") {
  std::vector<double> x(16);
  for (int i = 0; i < 16; ++i) x[i] = (2.0 * i - 15.0) / 15.0;

  const std::vector<double> ps = {-1.0, -0.5, 0.0, 0.25, 1.0};
  const auto table = csr::correction_surface(x, ps);
  REQUIRE(table.size() == 16 * ps.size());

  for (const csr::CorrectionSample& s : table) {
    if (s.p == 0.0) CHECK(s.correction == 0.0);  // mean is exactly zero
    if (s.p == 1.0)
      CHECK(s.correction == doctest::Approx(1.0 - s.x_i).epsilon(1e-12));
    if (s.p == -1.0)
      CHECK(s.correction == doctest::Approx(-(1.0 + s.x_i)).epsilon(1e-12));
  }

  // Monotone nondecreasing in P for each fixed sample index.
  for (int i = 0; i < 16; ++i) {
    double prev = -10.0;
    for (std::size_t k = 0; k < ps.size(); ++k) {
      const double corr = table[k * 16 + i].correction;
      CHECK(corr >= prev - 1e-12);
      prev = corr;
    }
  }
}

TEST_CASE("correction CSV format") {
  std::vector<double> x = {-0.5, 0.5};
  std::vector<double> ps = {0.25};
  const auto table = csr::correction_surface(x, ps);
  std::ostringstream out;
  csr::write_correction_csv(table, out);
  CHECK(out.str() ==
        "P,i,x_i,correction\n"
        "0.25,0,-0.5,0.375\n"
        "0.25,1,0.5,0.125\n");
}
