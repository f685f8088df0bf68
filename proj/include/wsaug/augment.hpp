#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "wsaug/core.hpp"
#include "wsaug/symmetry.hpp"

namespace wsaug {

// Input-space and generic augmentations, plus the stochastic pipeline that
// composes them with the exact symmetries. Input-space transforms touch only
// layer-1 parameters and obey pullback laws (f'(x) = f(Tx)); generic
// transforms perturb the weights and change the represented function.

// ---------------------------------------------------------------------------
// Input-space transforms
// ---------------------------------------------------------------------------

/// x |-> A x + t over the input domain; the map T with f'(x) = f(T(x)).
struct AffineInputMap {
    MatrixD a;
    std::vector<double> t;

    std::vector<float> operator()(const std::vector<float>& x) const {
        std::vector<float> y(t.size());
        for (int i = 0; i < a.rows; ++i) {
            double acc = t[i];
            for (int j = 0; j < a.cols; ++j) acc += a(i, j) * static_cast<double>(x[j]);
            y[i] = static_cast<float>(acc);
        }
        return y;
    }
};

inline MatrixD identity_matrix(int n) {
    MatrixD m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

inline void check_orthogonal(const MatrixD& r) {
    if (r.rows != r.cols) throw ValidationError("rotation matrix must be square");
    for (int i = 0; i < r.rows; ++i)
        for (int j = 0; j < r.cols; ++j) {
            double dot = 0.0;
            for (int k = 0; k < r.rows; ++k) dot += r(k, i) * r(k, j);
            const double target = (i == j) ? 1.0 : 0.0;
            if (!std::isfinite(dot) || std::abs(dot - target) > 1e-5)
                throw ValidationError("matrix is not orthogonal within 1e-5");
        }
}

/// Absorbs an input rotation into the first layer: W'_1 = W_1 R, so
/// f'(x) = f(Rx). All other tensors are untouched.
inline WeightSpaceElement rotate_input(const WeightSpaceElement& elem, const MatrixD& r) {
    const int d0 = elem.spec.input_dim();
    if (r.rows != d0 || r.cols != d0)
        throw ValidationError("rotation matrix must be " + std::to_string(d0) + "x" +
                              std::to_string(d0));
    check_orthogonal(r);
    WeightSpaceElement out = elem;
    const MatrixF& w = elem.weights[0];
    MatrixF& wo = out.weights[0];
    for (int i = 0; i < w.rows; ++i)
        for (int j = 0; j < d0; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d0; ++k) acc += static_cast<double>(w(i, k)) * r(k, j);
            wo(i, j) = static_cast<float>(acc);
        }
    return out;
}

/// Absorbs a coordinate scaling: W'_1 = s W_1, so f'(x) = f(sx).
inline WeightSpaceElement scale_input(const WeightSpaceElement& elem, double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("scale must be positive and finite");
    WeightSpaceElement out = elem;
    for (float& v : out.weights[0].data) v = static_cast<float>(static_cast<double>(v) * s);
    return out;
}

/// Absorbs a coordinate translation into the first bias: b'_1 = W_1 t + b_1,
/// so f'(x) = f(x + t).
inline WeightSpaceElement translate_input(const WeightSpaceElement& elem,
                                          const std::vector<double>& t) {
    const int d0 = elem.spec.input_dim();
    if (static_cast<int>(t.size()) != d0)
        throw ValidationError("translation must have length " + std::to_string(d0));
    for (double v : t)
        if (!std::isfinite(v)) throw ValidationError("translation must be finite");
    WeightSpaceElement out = elem;
    const MatrixF& w = elem.weights[0];
    for (int i = 0; i < w.rows; ++i) {
        double acc = static_cast<double>(elem.biases[0][i]);
        for (int j = 0; j < d0; ++j) acc += static_cast<double>(w(i, j)) * t[j];
        out.biases[0][i] = static_cast<float>(acc);
    }
    return out;
}

/// Uniform random rotation: angle parametrization in 2-D, QR of a Gaussian
/// matrix with the sign fix (Mezzadri 2007) in higher dimensions, reflected
/// onto det +1.
inline MatrixD random_rotation(int dim, std::mt19937_64& rng) {
    if (dim < 1) throw ValidationError("rotation dimension must be >= 1");
    if (dim == 1) return identity_matrix(1);
    if (dim == 2) {
        const double a = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
        MatrixD r(2, 2);
        r(0, 0) = std::cos(a);
        r(0, 1) = -std::sin(a);
        r(1, 0) = std::sin(a);
        r(1, 1) = std::cos(a);
        return r;
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixD q(dim, dim);
    for (double& v : q.data) v = gauss(rng);
    // Gram-Schmidt columns, then orient each by the R diagonal sign.
    for (int j = 0; j < dim; ++j) {
        for (int k = 0; k < j; ++k) {
            double dot = 0.0;
            for (int i = 0; i < dim; ++i) dot += q(i, k) * q(i, j);
            for (int i = 0; i < dim; ++i) q(i, j) -= dot * q(i, k);
        }
        double norm = 0.0;
        for (int i = 0; i < dim; ++i) norm += q(i, j) * q(i, j);
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw NumericError("degenerate Gaussian draw while sampling rotation");
        for (int i = 0; i < dim; ++i) q(i, j) /= norm;
    }
    // Force det +1 by flipping the last column if needed.
    double det = 0.0;
    {
        MatrixD lu = q;
        det = 1.0;
        std::vector<int> piv(dim);
        for (int c = 0; c < dim; ++c) {
            int p = c;
            for (int r2 = c + 1; r2 < dim; ++r2)
                if (std::abs(lu(r2, c)) > std::abs(lu(p, c))) p = r2;
            if (p != c) {
                for (int k = 0; k < dim; ++k) std::swap(lu(c, k), lu(p, k));
                det = -det;
            }
            det *= lu(c, c);
            if (lu(c, c) == 0.0) break;
            for (int r2 = c + 1; r2 < dim; ++r2) {
                const double f = lu(r2, c) / lu(c, c);
                for (int k = c; k < dim; ++k) lu(r2, k) -= f * lu(c, k);
            }
        }
    }
    if (det < 0.0)
        for (int i = 0; i < dim; ++i) q(i, dim - 1) = -q(i, dim - 1);
    return q;
}

// ---------------------------------------------------------------------------
// Generic (non-preserving) augmentations
// ---------------------------------------------------------------------------

namespace detail {

inline double tensor_std(const float* v, std::size_t n) {
    if (n == 0) return 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += static_cast<double>(v[i]);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(v[i]) - mean;
        var += d * d;
    }
    return std::sqrt(var / static_cast<double>(n));
}

template <class Fn>
void for_each_tensor(WeightSpaceElement& elem, Fn&& fn) {
    for (int l = 0; l < elem.spec.num_layers(); ++l) {
        fn(elem.weights[l].data.data(), elem.weights[l].data.size());
        fn(elem.biases[l].data(), elem.biases[l].size());
    }
}

} // namespace detail

/// Adds i.i.d. Gaussian noise to every parameter; the noise std is
/// sigma_rel times the empirical std of that parameter's tensor (each weight
/// matrix and each bias vector separately). Constant tensors stay unchanged.
inline WeightSpaceElement gaussian_noise(const WeightSpaceElement& elem, double sigma_rel,
                                         std::uint64_t seed) {
    if (!(sigma_rel >= 0.0) || !std::isfinite(sigma_rel))
        throw ValidationError("sigma_rel must be >= 0 and finite");
    WeightSpaceElement out = elem;
    if (sigma_rel == 0.0) return out;
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0x4e4f495345)); // "NOISE"
    std::normal_distribution<double> gauss(0.0, 1.0);
    detail::for_each_tensor(out, [&](float* v, std::size_t n) {
        const double sigma = sigma_rel * detail::tensor_std(v, n);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = gauss(rng);
            if (sigma > 0.0) v[i] = static_cast<float>(static_cast<double>(v[i]) + sigma * z);
        }
    });
    return out;
}

/// Independently zeroes each scalar parameter with probability p_drop.
/// Survivors are not rescaled.
inline WeightSpaceElement dropout(const WeightSpaceElement& elem, double p_drop,
                                  std::uint64_t seed) {
    if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw ValidationError("p_drop must be in [0,1]");
    WeightSpaceElement out = elem;
    if (p_drop == 0.0) return out;
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0x44524f50)); // "DROP"
    detail::for_each_tensor(out, [&](float* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i)
            if (uniform_real(rng, 0.0, 1.0) < p_drop) v[i] = 0.0f;
    });
    return out;
}

/// Per tensor, zeroes the floor(q*n) entries of smallest absolute value,
/// breaking ties by index order. Deterministic, takes no seed.
inline WeightSpaceElement quantile_dropout(const WeightSpaceElement& elem, double q) {
    if (!(q >= 0.0 && q < 1.0)) throw ValidationError("q must be in [0,1)");
    WeightSpaceElement out = elem;
    detail::for_each_tensor(out, [&](float* v, std::size_t n) {
        const std::size_t m = static_cast<std::size_t>(q * static_cast<double>(n) + 1e-9);
        if (m == 0) return;
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(v[a]) < std::abs(v[b]);
        });
        for (std::size_t i = 0; i < m; ++i) v[idx[i]] = 0.0f;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

enum class AugKind {
    rotate_input,
    scale_input,
    translate_input,
    gaussian_noise,
    dropout,
    quantile_dropout,
    relu_scaling,
    siren_negation,
    siren_bias,
    permute,
};

inline std::string to_string(AugKind k) {
    switch (k) {
        case AugKind::rotate_input: return "rotate_input";
        case AugKind::scale_input: return "scale_input";
        case AugKind::translate_input: return "translate_input";
        case AugKind::gaussian_noise: return "gaussian_noise";
        case AugKind::dropout: return "dropout";
        case AugKind::quantile_dropout: return "quantile_dropout";
        case AugKind::relu_scaling: return "relu_scaling";
        case AugKind::siren_negation: return "siren_negation";
        case AugKind::siren_bias: return "siren_bias";
        case AugKind::permute: return "permute";
    }
    throw ValidationError("unknown augmentation kind");
}

inline AugKind aug_kind_from_string(const std::string& s) {
    if (s == "rotate_input") return AugKind::rotate_input;
    if (s == "scale_input") return AugKind::scale_input;
    if (s == "translate_input") return AugKind::translate_input;
    if (s == "gaussian_noise") return AugKind::gaussian_noise;
    if (s == "dropout") return AugKind::dropout;
    if (s == "quantile_dropout") return AugKind::quantile_dropout;
    if (s == "relu_scaling") return AugKind::relu_scaling;
    if (s == "siren_negation") return AugKind::siren_negation;
    if (s == "siren_bias") return AugKind::siren_bias;
    if (s == "permute") return AugKind::permute;
    throw ValidationError("unknown augmentation kind: " + s);
}

inline bool is_function_preserving(AugKind k) {
    return k == AugKind::relu_scaling || k == AugKind::siren_negation ||
           k == AugKind::siren_bias || k == AugKind::permute;
}

inline bool is_input_space(AugKind k) {
    return k == AugKind::rotate_input || k == AugKind::scale_input ||
           k == AugKind::translate_input;
}

/// Kind-specific sampling ranges. Only the fields a kind reads are
/// meaningful for it: scale_input draws log-uniform from
/// [scale_min, scale_max], translate_input per-coordinate uniform from
/// [-max_offset, max_offset], relu_scaling log-uniform from [1/c_max, c_max],
/// siren_bias integer k from [-k_max, k_max].
struct AugParams {
    double scale_min = 0.5;
    double scale_max = 2.0;
    double max_offset = 0.25;
    double sigma_rel = 0.02;
    double p_drop = 0.05;
    double q = 0.1;
    double c_max = 4.0;
    int k_max = 2;
};

struct AugmentationDescriptor {
    AugKind kind = AugKind::permute;
    double probability = 1.0;
    AugParams params;

    void validate(const NetworkSpec& spec) const {
        if (!(probability >= 0.0 && probability <= 1.0))
            throw ValidationError("probability must be in [0,1]");
        switch (kind) {
            case AugKind::scale_input:
                if (!(params.scale_min > 0.0) || !(params.scale_max >= params.scale_min))
                    throw ValidationError("scale_input needs 0 < scale_min <= scale_max");
                break;
            case AugKind::translate_input:
                if (!(params.max_offset >= 0.0))
                    throw ValidationError("translate_input needs max_offset >= 0");
                break;
            case AugKind::gaussian_noise:
                if (!(params.sigma_rel >= 0.0))
                    throw ValidationError("gaussian_noise needs sigma_rel >= 0");
                break;
            case AugKind::dropout:
                if (!(params.p_drop >= 0.0 && params.p_drop <= 1.0))
                    throw ValidationError("dropout needs p_drop in [0,1]");
                break;
            case AugKind::quantile_dropout:
                if (!(params.q >= 0.0 && params.q < 1.0))
                    throw ValidationError("quantile_dropout needs q in [0,1)");
                break;
            case AugKind::relu_scaling:
                if (!(params.c_max >= 1.0))
                    throw ValidationError("relu_scaling needs c_max >= 1");
                if (!spec.has_hidden(Activation::relu))
                    throw ValidationError("relu_scaling step requires a relu hidden layer");
                break;
            case AugKind::siren_negation:
                if (!spec.has_hidden(Activation::sine))
                    throw ValidationError("siren_negation step requires a sine hidden layer");
                break;
            case AugKind::siren_bias:
                if (params.k_max < 0) throw ValidationError("siren_bias needs k_max >= 0");
                if (!spec.has_hidden(Activation::sine))
                    throw ValidationError("siren_bias step requires a sine hidden layer");
                break;
            case AugKind::rotate_input:
            case AugKind::permute:
                break;
        }
    }
};

/// Result of one sampled augmentation: the transformed element plus, for
/// input-space kinds, the map T with f'(x) = f(T(x)).
struct AppliedAugmentation {
    WeightSpaceElement element;
    std::optional<AffineInputMap> input_map;
};

/// Draws kind-specific parameters from rng and applies the augmentation.
inline AppliedAugmentation sample_augmentation(const WeightSpaceElement& elem,
                                               const AugmentationDescriptor& d,
                                               std::mt19937_64& rng) {
    d.validate(elem.spec);
    const int d0 = elem.spec.input_dim();
    AppliedAugmentation out;
    switch (d.kind) {
        case AugKind::rotate_input: {
            const MatrixD r = random_rotation(d0, rng);
            out.element = rotate_input(elem, r);
            out.input_map = AffineInputMap{r, std::vector<double>(d0, 0.0)};
            return out;
        }
        case AugKind::scale_input: {
            const double s = log_uniform(rng, d.params.scale_min, d.params.scale_max);
            out.element = scale_input(elem, s);
            MatrixD a = identity_matrix(d0);
            for (int i = 0; i < d0; ++i) a(i, i) = s;
            out.input_map = AffineInputMap{std::move(a), std::vector<double>(d0, 0.0)};
            return out;
        }
        case AugKind::translate_input: {
            std::vector<double> t(d0);
            for (double& v : t) v = uniform_real(rng, -d.params.max_offset, d.params.max_offset);
            out.element = translate_input(elem, t);
            out.input_map = AffineInputMap{identity_matrix(d0), std::move(t)};
            return out;
        }
        case AugKind::gaussian_noise:
            out.element = gaussian_noise(elem, d.params.sigma_rel, rng());
            return out;
        case AugKind::dropout:
            out.element = dropout(elem, d.params.p_drop, rng());
            return out;
        case AugKind::quantile_dropout:
            out.element = quantile_dropout(elem, d.params.q);
            return out;
        case AugKind::permute:
            out.element = apply_permutation(elem, sample_permutation_sequence(elem.spec, rng));
            return out;
        case AugKind::relu_scaling: {
            out.element = elem;
            for (int h = 0; h < elem.spec.num_hidden(); ++h) {
                if (elem.spec.activations[h] != Activation::relu) continue;
                PositiveScales s;
                s.layer = h;
                s.c.resize(elem.spec.hidden_dim(h));
                for (double& c : s.c) c = log_uniform(rng, 1.0 / d.params.c_max, d.params.c_max);
                out.element = relu_scaling(out.element, s);
            }
            return out;
        }
        case AugKind::siren_negation: {
            out.element = elem;
            for (int h = 0; h < elem.spec.num_hidden(); ++h) {
                if (elem.spec.activations[h] != Activation::sine) continue;
                NeuronSigns g;
                g.layer = h;
                g.signs.resize(elem.spec.hidden_dim(h));
                for (int& v : g.signs) v = uniform_int(rng, 0, 1) ? 1 : -1;
                out.element = siren_negation(out.element, g);
            }
            return out;
        }
        case AugKind::siren_bias: {
            out.element = elem;
            for (int h = 0; h < elem.spec.num_hidden(); ++h) {
                if (elem.spec.activations[h] != Activation::sine) continue;
                PhaseShifts ph;
                ph.layer = h;
                ph.k.resize(elem.spec.hidden_dim(h));
                for (int& k : ph.k) k = uniform_int(rng, -d.params.k_max, d.params.k_max);
                out.element = siren_bias(out.element, ph);
            }
            return out;
        }
    }
    throw ValidationError("unknown augmentation kind");
}

struct AugmentationPipeline {
    std::vector<AugmentationDescriptor> steps;

    void validate(const NetworkSpec& spec) const {
        for (const auto& s : steps) s.validate(spec);
    }
};

/// Applies the pipeline steps in order. Step i fires independently with its
/// probability; all of its randomness comes from a seed derived from
/// (base_seed, sample_id, epoch, i), so the mapping is deterministic and
/// samples can be processed in any order or in parallel.
inline WeightSpaceElement apply_pipeline(const WeightSpaceElement& elem,
                                         const AugmentationPipeline& pipeline,
                                         std::uint64_t sample_id, std::uint64_t epoch,
                                         std::uint64_t base_seed) {
    pipeline.validate(elem.spec);
    WeightSpaceElement out = elem;
    for (std::size_t i = 0; i < pipeline.steps.size(); ++i) {
        const auto& step = pipeline.steps[i];
        std::mt19937_64 rng = make_rng(derive_seed(base_seed, sample_id, epoch, i));
        if (uniform_real(rng, 0.0, 1.0) >= step.probability) continue;
        out = sample_augmentation(out, step, rng).element;
    }
    return out;
}

} // namespace wsaug
