#pragma once

#include <random>

#include "tfd/model.hpp"

namespace fixture {

// Random parameter set inside the biological ranges; orders drawn from [0.2, 1].
inline tfd::ModelParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto in = [&](double lo, double hi) { return lo + (hi - lo) * U(rng); };
    tfd::ModelParams p;
    p.alpha = in(0.2, 1.0);
    p.beta = in(0.2, 1.0);
    p.p = in(p.beta, 1.0);
    p.b = in(1.7, 7.0);
    p.beta_VH = in(0.001, 0.999);
    p.beta_HV = in(0.001, 0.999);
    p.delta = in(1.0, 5.0);
    p.mu_V = in(0.14, 1.75);
    return p;
}

// Rescales beta_VH so that r0 hits the requested value (r0 scales with sqrt(beta_VH)).
inline bool set_r0(tfd::ModelParams& p, double target) {
    const double r = tfd::r0(p);
    const double v = p.beta_VH * (target / r) * (target / r);
    if (!(v > 0.0 && v < 1.0)) return false;
    p.beta_VH = v;
    return true;
}

}  // namespace fixture
