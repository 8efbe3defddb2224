#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mcg/autograd.hpp"

namespace mcg::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = nd(rng);
    return t;
}

/// Worst relative error between analytic and central-difference gradients of
/// `fn` (which must return a scalar Var) with respect to every input.
inline double gradcheck(const std::function<ad::Var(const std::vector<ad::Var>&)>& fn,
                        const std::vector<Tensor>& inputs, double h = 1e-6) {
    std::vector<ad::Var> vars;
    for (const Tensor& t : inputs) vars.push_back(ad::leaf(t));
    ad::Var out = fn(vars);
    ad::backward(out);

    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Tensor analytic = vars[k].grad();
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            auto eval = [&](double delta) {
                std::vector<ad::Var> probe;
                for (std::size_t j = 0; j < inputs.size(); ++j) {
                    Tensor t = inputs[j];
                    if (j == k) t[i] += delta;
                    probe.push_back(ad::constant(std::move(t)));
                }
                return fn(probe).value()[0];
            };
            const double numeric = (eval(h) - eval(-h)) / (2.0 * h);
            const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
            worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
        }
    }
    return worst;
}

}  // namespace mcg::testing
