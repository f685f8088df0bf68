#pragma once

// Test-side oracles, written independently of the library code paths they
// check: a per-scalar forward evaluator, a finite-difference gradient, and a
// brute-force assignment solver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "wsaug/core.hpp"
#include "wsaug/fit.hpp"

namespace oracles {

// Forward evaluation as plain index loops over a flattened parameter vector.
// Parameters are doubles so the same routine serves as the 64-bit shadow for
// finite differences.
inline std::vector<double> flat_params(const wsaug::WeightSpaceElement& e) {
    std::vector<float> f = wsaug::flatten(e);
    return std::vector<double>(f.begin(), f.end());
}

inline std::vector<double> forward_scalar(const wsaug::NetworkSpec& spec,
                                          const std::vector<double>& params,
                                          const std::vector<double>& x,
                                          std::vector<double>* min_abs_relu_z = nullptr) {
    std::vector<double> a = x;
    std::size_t off = 0;
    for (int l = 0; l < spec.num_layers(); ++l) {
        const int rows = spec.dims[l + 1], cols = spec.dims[l];
        std::vector<double> z(rows);
        for (int i = 0; i < rows; ++i) {
            double acc = 0.0;
            for (int j = 0; j < cols; ++j) acc += params[off + (std::size_t)i * cols + j] * a[j];
            z[i] = acc + params[off + (std::size_t)rows * cols + i];
        }
        off += (std::size_t)rows * cols + rows;
        for (int i = 0; i < rows; ++i) {
            switch (spec.activations[l]) {
                case wsaug::Activation::relu:
                    if (min_abs_relu_z) min_abs_relu_z->push_back(std::abs(z[i]));
                    z[i] = z[i] > 0.0 ? z[i] : 0.0;
                    break;
                case wsaug::Activation::sine: z[i] = std::sin(z[i]); break;
                case wsaug::Activation::identity: break;
            }
        }
        a = std::move(z);
    }
    return a;
}

inline std::vector<double> forward_scalar(const wsaug::WeightSpaceElement& e,
                                          const std::vector<double>& x) {
    return forward_scalar(e.spec, flat_params(e), x);
}

// Mean-squared error over the task, evaluated entirely on the 64-bit shadow.
inline double loss_shadow(const wsaug::NetworkSpec& spec, const std::vector<double>& params,
                          const wsaug::SignalTask& task) {
    double acc = 0.0;
    const int n = task.inputs.rows, d = task.targets.cols;
    for (int s = 0; s < n; ++s) {
        std::vector<double> x(task.inputs.cols);
        for (int j = 0; j < task.inputs.cols; ++j) x[j] = task.inputs(s, j);
        const std::vector<double> y = forward_scalar(spec, params, x);
        for (int o = 0; o < d; ++o) {
            const double r = y[o] - (double)task.targets(s, o);
            acc += r * r;
        }
    }
    return acc / ((double)n * d);
}

inline std::vector<double> fd_gradient(const wsaug::WeightSpaceElement& e,
                                       const wsaug::SignalTask& task, double h) {
    std::vector<double> p = flat_params(e);
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        const double up = loss_shadow(e.spec, p, task);
        p[i] = keep - h;
        const double dn = loss_shadow(e.spec, p, task);
        p[i] = keep;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

// Relative-error comparison between an analytic gradient and its
// finite-difference estimate. Coordinates are compared against the larger of
// the two magnitudes with an absolute floor tied to the gradient's scale, so
// near-zero coordinates do not blow up the ratio.
inline double gradient_rel_error(const std::vector<double>& analytic,
                                 const std::vector<double>& fd) {
    double max_fd = 0.0;
    for (double v : fd) max_fd = std::max(max_fd, std::abs(v));
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
        const double denom =
            std::max({std::abs(fd[i]), std::abs(analytic[i]), 1e-3 * max_fd, 1e-12});
        worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
    }
    return worst;
}

// A ReLU net whose pre-activations sit within reach of the finite-difference
// step can flip the kink between the +h and -h evaluations, which makes the
// central difference meaningless at that coordinate. Callers resample such
// nets; this reports the smallest |z| seen over the task.
inline double min_relu_preactivation(const wsaug::WeightSpaceElement& e,
                                     const wsaug::SignalTask& task) {
    const std::vector<double> params = flat_params(e);
    double min_abs = std::numeric_limits<double>::infinity();
    for (int s = 0; s < task.inputs.rows; ++s) {
        std::vector<double> x(task.inputs.cols);
        for (int j = 0; j < task.inputs.cols; ++j) x[j] = task.inputs(s, j);
        std::vector<double> zs;
        forward_scalar(e.spec, params, x, &zs);
        for (double v : zs) min_abs = std::min(min_abs, v);
    }
    return min_abs;
}

// Exhaustive linear assignment: tries every permutation in lexicographic
// order and keeps the first one attaining the maximum.
struct BruteLap {
    std::vector<int> assignment;
    double value = 0.0;
};

inline BruteLap brute_force_lap(const wsaug::MatrixD& score) {
    const int n = score.rows;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    BruteLap best;
    best.value = -std::numeric_limits<double>::infinity();
    do {
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += score(i, perm[i]);
        if (v > best.value) {
            best.value = v;
            best.assignment = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace oracles
