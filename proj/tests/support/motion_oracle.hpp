#pragma once

#include <Eigen/Dense>

#include "roadrl/dynamics.hpp"
#include "roadrl/rng.hpp"

namespace roadrl::oracle {

// Direct evaluation of z' = A z + B a in extended precision, with the
// matrices written exactly as in the model definition (B1 keeps its
// unsimplified cubic form).
inline Eigen::Vector2d oracle_step(double p, double p_prev, double a, const VehicleProps& v,
                            const PhysConstants& k) {
  using L = long double;
  using M = Eigen::Matrix<L, 2, 2>;
  using V = Eigen::Matrix<L, 2, 1>;
  const L m = v.mass, eta = v.eta, T = k.T;
  M A;
  V B;
  if (a >= 0.0) {
    A << (eta * T + 2 * m) / (eta * T + m), -m / (eta * T + m), 1, 0;
    B << -(L(v.f_max) * T * T * T) / (-eta * T * T - m * T), 0;
  } else {
    A << (2 * m + eta * T) / (m + eta * T), -m / (m + eta * T), 1, 0;
    B << (T * T * L(k.g0) * L(k.kappa) * L(v.tau) * m) / (m + eta * T), 0;
  }
  const V z(p, p_prev);
  V out = A * z + B * L(a);
  if (out(0) < L(p)) out = V(p, p);
  return Eigen::Vector2d(static_cast<double>(out(0)), static_cast<double>(out(1)));
}

inline VehicleProps random_props(Rng& rng) {
  VehicleProps v;
  v.mass = rng.uniform(900, 1600);
  v.f_max = rng.uniform(3000, 8000);
  v.eta = rng.uniform(30, 70);
  v.tau = rng.uniform(0.8, 1.2);
  v.length = rng.uniform(3.5, 5.0);
  return v;
}

}  // namespace roadrl::oracle
