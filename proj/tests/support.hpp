#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "regmdp/envs.hpp"
#include "regmdp/mdp.hpp"
#include "regmdp/probability.hpp"
#include "regmdp/regularizer.hpp"

namespace regmdp::test {

inline TabularMdp single_state(std::vector<double> reward, double gamma) {
  TabularMdp m;
  m.n_states = 1;
  m.n_actions = reward.size();
  m.transition = Matrix(reward.size(), 1, 1.0);
  m.p0 = {1.0};
  m.gamma = gamma;
  m.reward = Matrix::from_rows({reward});
  return m;
}

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n, double floor = 0.02) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (auto& x : p) sum += (x = u(rng) + floor);
  for (auto& x : p) x /= sum;
  return p;
}

inline void check_rows_close(const Matrix& a, const Matrix& b, double tol) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      INFO("entry (" << i << ", " << j << ")");
      CHECK(std::abs(a(i, j) - b(i, j)) <= tol);
    }
  }
}

}  // namespace regmdp::test
