#pragma once

#include <optional>
#include <utility>

#include "wsaug/core.hpp"

namespace wsaug {

// INR fitting: reverse-mode gradients of the mean-squared error, Adam/AdamW,
// and the view generator. Parameters are stored in float32; all training
// arithmetic (forward, backward, optimizer state) runs in double.

// ---------------------------------------------------------------------------
// Loss and PSNR
// ---------------------------------------------------------------------------

/// 10 log10(1 / mse), the peak signal-to-noise ratio for signals in [0,1].
/// mse = 0 maps to the +infinity sentinel.
inline double psnr_from_mse(double mse) {
    if (!(mse >= 0.0)) throw ValidationError("mse must be >= 0");
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

inline double mse(const MatrixF& a, const MatrixF& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw ValidationError("mse requires grids of identical shape");
    if (a.data.empty()) throw ValidationError("mse of empty grids");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

inline double psnr(const MatrixF& reconstruction, const MatrixF& target) {
    return psnr_from_mse(mse(reconstruction, target));
}

namespace detail {

inline void check_task_shapes(const NetworkSpec& spec, const SignalTask& task) {
    if (task.inputs.cols != spec.input_dim())
        throw ValidationError("task inputs have " + std::to_string(task.inputs.cols) +
                              " columns, spec expects " + std::to_string(spec.input_dim()));
    if (task.targets.cols != spec.output_dim())
        throw ValidationError("task targets have " + std::to_string(task.targets.cols) +
                              " columns, spec expects " + std::to_string(spec.output_dim()));
}

} // namespace detail

/// Mean-squared error of elem on the task: mean over all N*d_M scalar
/// entries, evaluated entirely in double (the quantity gradient()
/// differentiates and fit_inr() early-stops on).
inline double task_loss(const WeightSpaceElement& elem, const SignalTask& task) {
    task.validate();
    detail::check_task_shapes(elem.spec, task);
    const int n = task.inputs.rows;
    const int dm = elem.spec.output_dim();
    std::vector<double> a(detail::max_width(elem.spec)), z(detail::max_width(elem.spec));
    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
        const float* xr = task.inputs.row_ptr(s);
        for (int j = 0; j < task.inputs.cols; ++j) a[j] = static_cast<double>(xr[j]);
        detail::forward_one(elem, a, z);
        const float* tr = task.targets.row_ptr(s);
        for (int o = 0; o < dm; ++o) {
            const double d = a[o] - static_cast<double>(tr[o]);
            acc += d * d;
        }
    }
    return acc / (static_cast<double>(n) * static_cast<double>(dm));
}

// ---------------------------------------------------------------------------
// Gradient
// ---------------------------------------------------------------------------

namespace detail {

inline double dactivate(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::sine: return std::cos(z);
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

/// Double-precision gradient accumulators plus per-sample scratch, reusable
/// across steps to avoid reallocation.
struct GradBuffers {
    std::vector<MatrixD> gw;
    std::vector<std::vector<double>> gb;
    std::vector<std::vector<double>> acts; // acts[l], l = 0..M (acts[0] = input)
    std::vector<std::vector<double>> zs;   // zs[l] = pre-activations of layer l
    std::vector<double> delta, delta_next;

    void reset(const NetworkSpec& spec) {
        const int m = spec.num_layers();
        gw.resize(m);
        gb.resize(m);
        acts.resize(m + 1);
        zs.resize(m);
        for (int l = 0; l < m; ++l) {
            if (gw[l].rows != spec.dims[l + 1] || gw[l].cols != spec.dims[l])
                gw[l] = MatrixD(spec.dims[l + 1], spec.dims[l]);
            else
                std::fill(gw[l].data.begin(), gw[l].data.end(), 0.0);
            gb[l].assign(spec.dims[l + 1], 0.0);
            zs[l].resize(spec.dims[l + 1]);
            acts[l + 1].resize(spec.dims[l + 1]);
        }
        acts[0].resize(spec.dims[0]);
        delta.resize(max_width(spec));
        delta_next.resize(max_width(spec));
    }
};

/// Accumulates the exact reverse-mode gradient of task_loss into g and
/// returns the loss. ReLU uses subgradient 0 at z = 0.
inline double gradient_accumulate(const WeightSpaceElement& e, const SignalTask& task,
                                  GradBuffers& g) {
    check_task_shapes(e.spec, task);
    g.reset(e.spec);
    const int m = e.spec.num_layers();
    const int n = task.inputs.rows;
    const int dm = e.spec.output_dim();
    const double inv = 1.0 / (static_cast<double>(n) * static_cast<double>(dm));
    double loss = 0.0;

    for (int s = 0; s < n; ++s) {
        const float* xr = task.inputs.row_ptr(s);
        for (int j = 0; j < task.inputs.cols; ++j) g.acts[0][j] = static_cast<double>(xr[j]);
        for (int l = 0; l < m; ++l) {
            const MatrixF& w = e.weights[l];
            const Activation act = e.spec.activations[l];
            const std::vector<double>& ain = g.acts[l];
            for (int i = 0; i < w.rows; ++i) {
                const float* wr = w.row_ptr(i);
                double acc = static_cast<double>(e.biases[l][i]);
                for (int j = 0; j < w.cols; ++j) acc += static_cast<double>(wr[j]) * ain[j];
                if (!std::isfinite(acc))
                    throw NumericError("non-finite pre-activation at layer " + std::to_string(l));
                g.zs[l][i] = acc;
                g.acts[l + 1][i] = activate(act, acc);
            }
        }

        const float* tr = task.targets.row_ptr(s);
        for (int o = 0; o < dm; ++o) {
            const double d = g.acts[m][o] - static_cast<double>(tr[o]);
            loss += d * d;
            g.delta[o] = 2.0 * d * inv;
        }

        for (int l = m - 1; l >= 0; --l) {
            const MatrixF& w = e.weights[l];
            const Activation act = e.spec.activations[l];
            const std::vector<double>& ain = g.acts[l];
            for (int i = 0; i < w.rows; ++i) g.delta[i] *= dactivate(act, g.zs[l][i]);
            for (int i = 0; i < w.rows; ++i) {
                const double d = g.delta[i];
                g.gb[l][i] += d;
                double* gwr = &g.gw[l].data[static_cast<std::size_t>(i) * w.cols];
                for (int j = 0; j < w.cols; ++j) gwr[j] += d * ain[j];
            }
            if (l > 0) {
                for (int j = 0; j < w.cols; ++j) g.delta_next[j] = 0.0;
                for (int i = 0; i < w.rows; ++i) {
                    const float* wr = w.row_ptr(i);
                    const double d = g.delta[i];
                    for (int j = 0; j < w.cols; ++j)
                        g.delta_next[j] += static_cast<double>(wr[j]) * d;
                }
                std::swap(g.delta, g.delta_next);
            }
        }
    }
    return loss * inv;
}

} // namespace detail

/// Exact gradient of task_loss w.r.t. every weight and bias, rounded to
/// float32 in the same layout as elem.
inline WeightSpaceElement gradient(const WeightSpaceElement& elem, const SignalTask& task) {
    elem.validate();
    task.validate();
    detail::GradBuffers g;
    detail::gradient_accumulate(elem, task, g);
    WeightSpaceElement out = zero_element(elem.spec);
    for (int l = 0; l < elem.spec.num_layers(); ++l) {
        for (std::size_t i = 0; i < g.gw[l].data.size(); ++i)
            out.weights[l].data[i] = static_cast<float>(g.gw[l].data[i]);
        for (std::size_t i = 0; i < g.gb[l].size(); ++i)
            out.biases[l][i] = static_cast<float>(g.gb[l][i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

enum class OptKind { adam, adamw };

inline const char* to_string(OptKind k) { return k == OptKind::adam ? "adam" : "adamw"; }

inline OptKind opt_kind_from_string(const std::string& s) {
    if (s == "adam") return OptKind::adam;
    if (s == "adamw") return OptKind::adamw;
    throw ValidationError("unknown optimizer: " + s);
}

struct OptimizerConfig {
    OptKind kind = OptKind::adam;
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01; // adamw only
    int steps = 1000;
    std::optional<double> early_stop_psnr;

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw ValidationError("learning_rate must be positive and finite");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ValidationError("betas must lie in [0,1)");
        if (!(eps > 0.0)) throw ValidationError("eps must be positive");
        if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
        if (steps < 1) throw ValidationError("steps must be >= 1");
        if (early_stop_psnr && !std::isfinite(*early_stop_psnr))
            throw ValidationError("early_stop_psnr must be finite");
    }
};

struct FitReport {
    double final_loss = 0.0;
    std::optional<double> final_psnr;
    int steps_used = 0;
    bool stopped_early = false;
};

namespace detail {

/// First/second moment state plus the update rule. Parameters round-trip
/// through double for each update; m, v, and bias correction stay in double
/// across steps.
struct AdamState {
    std::vector<double> m, v;
    int t = 0;

    void init(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        t = 0;
    }

    void step(WeightSpaceElement& elem, const GradBuffers& g, const OptimizerConfig& opt) {
        ++t;
        const double bc1 = 1.0 - std::pow(opt.beta1, t);
        const double bc2 = 1.0 - std::pow(opt.beta2, t);
        std::size_t idx = 0;
        auto update_span = [&](float* params, const double* grads, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i, ++idx) {
                const double gr = grads[i];
                m[idx] = opt.beta1 * m[idx] + (1.0 - opt.beta1) * gr;
                v[idx] = opt.beta2 * v[idx] + (1.0 - opt.beta2) * gr * gr;
                const double mhat = m[idx] / bc1;
                const double vhat = v[idx] / bc2;
                double p = static_cast<double>(params[i]);
                double delta = mhat / (std::sqrt(vhat) + opt.eps);
                if (opt.kind == OptKind::adamw) delta += opt.weight_decay * p;
                p -= opt.learning_rate * delta;
                params[i] = static_cast<float>(p);
            }
        };
        for (int l = 0; l < elem.spec.num_layers(); ++l) {
            update_span(elem.weights[l].data.data(), g.gw[l].data.data(),
                        elem.weights[l].data.size());
            update_span(elem.biases[l].data(), g.gb[l].data(), elem.biases[l].size());
        }
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

/// Initializes per the spec's activations (SIREN scheme when the hidden
/// layers are sine, Kaiming-style otherwise) and runs opt.steps optimizer
/// updates on the task mse. When early_stop_psnr is set, training stops
/// before the update whose pre-update loss already meets the threshold.
/// Deterministic given (spec, task, opt, seed, omega0). Divergence (non-finite
/// loss) raises NumericError naming the step.
inline std::pair<WeightSpaceElement, FitReport> fit_inr(const NetworkSpec& spec,
                                                        const SignalTask& task,
                                                        const OptimizerConfig& opt,
                                                        std::uint64_t seed, double omega0 = 30.0) {
    spec.validate();
    task.validate();
    opt.validate();
    detail::check_task_shapes(spec, task);

    WeightSpaceElement elem = spec.has_hidden(Activation::sine) ? init_siren(spec, omega0, seed)
                                                                : init_relu(spec, seed);
    detail::GradBuffers g;
    detail::AdamState state;
    state.init(flat_size(spec));

    FitReport report;
    for (int step = 1; step <= opt.steps; ++step) {
        double loss;
        try {
            loss = detail::gradient_accumulate(elem, task, g);
        } catch (const NumericError& e) {
            throw NumericError("fit diverged at step " + std::to_string(step) + ": " + e.what());
        }
        if (!std::isfinite(loss))
            throw NumericError("fit diverged at step " + std::to_string(step) +
                               ": non-finite loss");
        if (opt.early_stop_psnr && psnr_from_mse(loss) >= *opt.early_stop_psnr) {
            report.stopped_early = true;
            report.steps_used = step - 1;
            break;
        }
        state.step(elem, g, opt);
        report.steps_used = step;
    }

    report.final_loss = task_loss(elem, task);
    if (task.kind == SignalKind::image2d || opt.early_stop_psnr)
        report.final_psnr = psnr_from_mse(report.final_loss);
    return {std::move(elem), report};
}

/// k independent fits seeded base_seed .. base_seed + k - 1.
inline std::vector<std::pair<WeightSpaceElement, FitReport>> make_views_with_reports(
    const NetworkSpec& spec, const SignalTask& task, const OptimizerConfig& opt, int k,
    std::uint64_t base_seed, double omega0 = 30.0) {
    if (k < 1) throw ValidationError("view count must be >= 1");
    std::vector<std::pair<WeightSpaceElement, FitReport>> views;
    views.reserve(k);
    for (int i = 0; i < k; ++i) {
        try {
            views.push_back(fit_inr(spec, task, opt, base_seed + static_cast<std::uint64_t>(i),
                                    omega0));
        } catch (const NumericError& e) {
            throw NumericError("view " + std::to_string(i) + ": " + e.what());
        }
    }
    return views;
}

inline std::vector<WeightSpaceElement> make_views(const NetworkSpec& spec, const SignalTask& task,
                                                  const OptimizerConfig& opt, int k,
                                                  std::uint64_t base_seed, double omega0 = 30.0) {
    std::vector<WeightSpaceElement> out;
    for (auto& [elem, report] : make_views_with_reports(spec, task, opt, k, base_seed, omega0))
        out.push_back(std::move(elem));
    return out;
}

} // namespace wsaug
