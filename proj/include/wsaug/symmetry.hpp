#pragma once

#include <numbers>

#include "wsaug/core.hpp"

namespace wsaug {

// Exact, function-preserving weight-space symmetries. Hidden layers are
// indexed 0..M-2; hidden layer h is the activation output of weights[h] and
// has width dims[h+1]. A transform on hidden layer h touches weights[h]
// (rows), biases[h], and weights[h+1] (columns), nothing else.

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// One permutation per hidden layer; perms[h][j] is the new position of
/// neuron j in hidden layer h. The group element of the weight-space
/// permutation symmetry.
struct PermutationSequence {
    std::vector<std::vector<int>> perms;

    bool operator==(const PermutationSequence&) const = default;

    void validate(const NetworkSpec& spec) const {
        if (static_cast<int>(perms.size()) != spec.num_hidden())
            throw ValidationError("permutation sequence needs exactly one permutation per hidden layer");
        for (int h = 0; h < spec.num_hidden(); ++h) {
            const int d = spec.hidden_dim(h);
            if (static_cast<int>(perms[h].size()) != d)
                throw ValidationError("permutation at hidden layer " + std::to_string(h) +
                                      " has wrong length");
            std::vector<char> seen(d, 0);
            for (int v : perms[h]) {
                if (v < 0 || v >= d || seen[v])
                    throw ValidationError("permutation at hidden layer " + std::to_string(h) +
                                          " is not a bijection");
                seen[v] = 1;
            }
        }
    }
};

/// Per-neuron signs for the sine oddness symmetry.
struct NeuronSigns {
    int layer = 0; // hidden layer index
    std::vector<int> signs;
};

/// Per-neuron integer phase shifts (multiples of pi) for the sine phase symmetry.
struct PhaseShifts {
    int layer = 0;
    std::vector<int> k;
};

/// Per-neuron positive scales for the ReLU homogeneity symmetry.
struct PositiveScales {
    int layer = 0;
    std::vector<double> c;
};

// ---------------------------------------------------------------------------
// Permutation group plumbing
// ---------------------------------------------------------------------------

inline PermutationSequence identity_permutation(const NetworkSpec& spec) {
    PermutationSequence p;
    p.perms.resize(spec.num_hidden());
    for (int h = 0; h < spec.num_hidden(); ++h) {
        p.perms[h].resize(spec.hidden_dim(h));
        for (int j = 0; j < spec.hidden_dim(h); ++j) p.perms[h][j] = j;
    }
    return p;
}

/// Composition "apply p, then q": result[h][j] = q[h][p[h][j]].
inline PermutationSequence compose(const PermutationSequence& p, const PermutationSequence& q) {
    if (p.perms.size() != q.perms.size())
        throw ValidationError("cannot compose permutation sequences of different lengths");
    PermutationSequence r;
    r.perms.resize(p.perms.size());
    for (std::size_t h = 0; h < p.perms.size(); ++h) {
        if (p.perms[h].size() != q.perms[h].size())
            throw ValidationError("cannot compose permutations of different widths");
        r.perms[h].resize(p.perms[h].size());
        for (std::size_t j = 0; j < p.perms[h].size(); ++j)
            r.perms[h][j] = q.perms[h][p.perms[h][j]];
    }
    return r;
}

inline PermutationSequence inverse(const PermutationSequence& p) {
    PermutationSequence r;
    r.perms.resize(p.perms.size());
    for (std::size_t h = 0; h < p.perms.size(); ++h) {
        r.perms[h].resize(p.perms[h].size());
        for (std::size_t j = 0; j < p.perms[h].size(); ++j)
            r.perms[h][p.perms[h][j]] = static_cast<int>(j);
    }
    return r;
}

inline PermutationSequence sample_permutation_sequence(const NetworkSpec& spec,
                                                       std::mt19937_64& rng) {
    PermutationSequence p;
    p.perms.resize(spec.num_hidden());
    for (int h = 0; h < spec.num_hidden(); ++h)
        p.perms[h] = random_permutation(spec.hidden_dim(h), rng);
    return p;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Relabels hidden neurons: rows of weights[h] and biases[h] move to their
/// permuted positions and the columns of weights[h+1] follow. Pure index
/// moves, so entries are preserved bit for bit and the represented function
/// is unchanged for any element-wise activation.
inline WeightSpaceElement apply_permutation(const WeightSpaceElement& elem,
                                            const PermutationSequence& p) {
    p.validate(elem.spec);
    const int m = elem.spec.num_layers();
    WeightSpaceElement out = zero_element(elem.spec);
    for (int l = 0; l < m; ++l) {
        const MatrixF& w = elem.weights[l];
        MatrixF& wo = out.weights[l];
        const std::vector<int>* rp = (l <= m - 2) ? &p.perms[l] : nullptr;
        const std::vector<int>* cp = (l >= 1) ? &p.perms[l - 1] : nullptr;
        for (int i = 0; i < w.rows; ++i) {
            const int ri = rp ? (*rp)[i] : i;
            for (int j = 0; j < w.cols; ++j) wo(ri, cp ? (*cp)[j] : j) = w(i, j);
        }
        for (int i = 0; i < w.rows; ++i)
            out.biases[l][rp ? (*rp)[i] : i] = elem.biases[l][i];
    }
    return out;
}

/// ReLU positive homogeneity: scales row j of weights[h] and biases[h][j] by
/// c_j > 0 and divides column j of weights[h+1] by c_j.
inline WeightSpaceElement relu_scaling(const WeightSpaceElement& elem, const PositiveScales& s) {
    const int nh = elem.spec.num_hidden();
    if (s.layer < 0 || s.layer >= nh)
        throw ValidationError("relu_scaling layer index out of range");
    if (elem.spec.activations[s.layer] != Activation::relu)
        throw ValidationError("relu_scaling requires a relu layer");
    const int d = elem.spec.hidden_dim(s.layer);
    if (static_cast<int>(s.c.size()) != d)
        throw ValidationError("relu_scaling scale vector has wrong length");
    for (double c : s.c)
        if (!(c > 0.0) || !std::isfinite(c))
            throw ValidationError("relu_scaling scales must be positive and finite");

    WeightSpaceElement out = elem;
    MatrixF& wi = out.weights[s.layer];
    MatrixF& wn = out.weights[s.layer + 1];
    for (int j = 0; j < d; ++j) {
        const double c = s.c[j];
        for (int k = 0; k < wi.cols; ++k)
            wi(j, k) = static_cast<float>(static_cast<double>(wi(j, k)) * c);
        out.biases[s.layer][j] =
            static_cast<float>(static_cast<double>(out.biases[s.layer][j]) * c);
        for (int i = 0; i < wn.rows; ++i)
            wn(i, j) = static_cast<float>(static_cast<double>(wn(i, j)) / c);
    }
    return out;
}

/// Sine oddness: flips the sign of row j of weights[h], biases[h][j], and
/// column j of weights[h+1] wherever signs[j] = -1. Exact in float arithmetic.
inline WeightSpaceElement siren_negation(const WeightSpaceElement& elem, const NeuronSigns& g) {
    const int nh = elem.spec.num_hidden();
    if (g.layer < 0 || g.layer >= nh)
        throw ValidationError("siren_negation layer index out of range");
    if (elem.spec.activations[g.layer] != Activation::sine)
        throw ValidationError("siren_negation requires a sine layer");
    const int d = elem.spec.hidden_dim(g.layer);
    if (static_cast<int>(g.signs.size()) != d)
        throw ValidationError("siren_negation sign vector has wrong length");
    for (int v : g.signs)
        if (v != 1 && v != -1) throw ValidationError("signs must be +1 or -1");

    WeightSpaceElement out = elem;
    MatrixF& wi = out.weights[g.layer];
    MatrixF& wn = out.weights[g.layer + 1];
    for (int j = 0; j < d; ++j) {
        if (g.signs[j] == 1) continue;
        for (int k = 0; k < wi.cols; ++k) wi(j, k) = -wi(j, k);
        out.biases[g.layer][j] = -out.biases[g.layer][j];
        for (int i = 0; i < wn.rows; ++i) wn(i, j) = -wn(i, j);
    }
    return out;
}

/// Sine phase symmetry: biases[h][j] shifts by k_j * pi and column j of
/// weights[h+1] flips sign when k_j is odd (sin(z + k pi) = (-1)^k sin z).
inline WeightSpaceElement siren_bias(const WeightSpaceElement& elem, const PhaseShifts& ph) {
    const int nh = elem.spec.num_hidden();
    if (ph.layer < 0 || ph.layer >= nh)
        throw ValidationError("siren_bias layer index out of range");
    if (elem.spec.activations[ph.layer] != Activation::sine)
        throw ValidationError("siren_bias requires a sine layer");
    const int d = elem.spec.hidden_dim(ph.layer);
    if (static_cast<int>(ph.k.size()) != d)
        throw ValidationError("siren_bias phase vector has wrong length");

    WeightSpaceElement out = elem;
    MatrixF& wn = out.weights[ph.layer + 1];
    for (int j = 0; j < d; ++j) {
        const int k = ph.k[j];
        out.biases[ph.layer][j] = static_cast<float>(
            static_cast<double>(out.biases[ph.layer][j]) + k * std::numbers::pi);
        if (k % 2 != 0)
            for (int i = 0; i < wn.rows; ++i) wn(i, j) = -wn(i, j);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random composition
// ---------------------------------------------------------------------------

/// Which symmetry families random_symmetry draws from, and their parameter
/// ranges: phase shifts k ~ U{-phase_k_max..phase_k_max}, scales
/// c ~ log-uniform [1/scale_max, scale_max].
struct SymmetryConfig {
    bool permute = true;
    bool relu_scale = false;
    bool siren_negate = false;
    bool siren_phase = false;
    int phase_k_max = 2;
    double scale_max = 4.0;

    void validate(const NetworkSpec& spec) const {
        if (phase_k_max < 0) throw ValidationError("phase_k_max must be >= 0");
        if (!(scale_max >= 1.0)) throw ValidationError("scale_max must be >= 1");
        if (relu_scale && !spec.has_hidden(Activation::relu))
            throw ValidationError("relu_scale enabled but the spec has no relu hidden layer");
        if ((siren_negate || siren_phase) && !spec.has_hidden(Activation::sine))
            throw ValidationError("siren symmetries enabled but the spec has no sine hidden layer");
    }
};

/// Samples parameters for every enabled family and applies them in a fixed
/// order (permute, scale, negate, phase) to every compatible hidden layer.
/// Deterministic under the seed; disabling every family returns the element
/// unchanged.
inline WeightSpaceElement random_symmetry(const WeightSpaceElement& elem,
                                          const SymmetryConfig& cfg, std::uint64_t seed) {
    cfg.validate(elem.spec);
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0x53594d)); // "SYM"
    WeightSpaceElement out = elem;
    const int nh = elem.spec.num_hidden();

    if (cfg.permute)
        out = apply_permutation(out, sample_permutation_sequence(elem.spec, rng));
    if (cfg.relu_scale)
        for (int h = 0; h < nh; ++h) {
            if (elem.spec.activations[h] != Activation::relu) continue;
            PositiveScales s;
            s.layer = h;
            s.c.resize(elem.spec.hidden_dim(h));
            for (double& c : s.c) c = log_uniform(rng, 1.0 / cfg.scale_max, cfg.scale_max);
            out = relu_scaling(out, s);
        }
    if (cfg.siren_negate)
        for (int h = 0; h < nh; ++h) {
            if (elem.spec.activations[h] != Activation::sine) continue;
            NeuronSigns g;
            g.layer = h;
            g.signs.resize(elem.spec.hidden_dim(h));
            for (int& v : g.signs) v = uniform_int(rng, 0, 1) ? 1 : -1;
            out = siren_negation(out, g);
        }
    if (cfg.siren_phase)
        for (int h = 0; h < nh; ++h) {
            if (elem.spec.activations[h] != Activation::sine) continue;
            PhaseShifts ph;
            ph.layer = h;
            ph.k.resize(elem.spec.hidden_dim(h));
            for (int& k : ph.k) k = uniform_int(rng, -cfg.phase_k_max, cfg.phase_k_max);
            out = siren_bias(out, ph);
        }
    return out;
}

} // namespace wsaug
