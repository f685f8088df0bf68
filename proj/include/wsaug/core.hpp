#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsaug/rng.hpp"

namespace wsaug {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Bad arguments, malformed configuration, shape mismatches.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Non-finite values showing up where finite math was expected.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed serialized data. byte_offset() is meaningful for syntax errors
/// and 0 for structural ones (the message then names the offending field).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg, std::size_t byte_offset = 0)
        : std::runtime_error(msg), byte_offset_(byte_offset) {}
    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Row-major float32 matrix. Parameter storage is always 32-bit; arithmetic
/// on the contents is done in double by the routines that consume it.
struct MatrixF {
    int rows = 0;
    int cols = 0;
    std::vector<float> data; // row-major

    MatrixF() = default;
    MatrixF(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}

    float& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    float operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    const float* row_ptr(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
    float* row_ptr(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    std::size_t size() const { return data.size(); }

    bool operator==(const MatrixF&) const = default;
};

/// Row-major double matrix; used for transforms that need full precision
/// (rotation matrices, LAP score matrices).
struct MatrixD {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    MatrixD() = default;
    MatrixD(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    bool operator==(const MatrixD&) const = default;
};

// ---------------------------------------------------------------------------
// Network description
// ---------------------------------------------------------------------------

enum class Activation { relu, sine, identity };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sine: return "sine";
        case Activation::identity: return "identity";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "sine") return Activation::sine;
    if (s == "identity") return Activation::identity;
    throw ValidationError("unknown activation '" + s + "'");
}

/// Fully connected architecture: layer widths d0..dM plus one activation per
/// layer. Layer l (0-based) maps width dims[l] to dims[l+1] and applies
/// activations[l]. Sine layers evaluate plain sin(z); any SIREN frequency
/// factor is folded into the stored weights at initialization.
struct NetworkSpec {
    std::vector<int> dims;               // d0, d1, ..., dM
    std::vector<Activation> activations; // one per layer, size M

    int num_layers() const { return static_cast<int>(activations.size()); }
    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
    /// Number of hidden layers (= number of permutable neuron groups).
    int num_hidden() const { return num_layers() - 1; }
    int hidden_dim(int h) const { return dims[h + 1]; }

    bool operator==(const NetworkSpec&) const = default;

    void validate() const {
        if (dims.size() < 3)
            throw ValidationError("spec needs at least one hidden layer (dims size >= 3)");
        for (int d : dims)
            if (d < 1) throw ValidationError("all layer widths must be >= 1");
        if (activations.size() != dims.size() - 1)
            throw ValidationError("spec needs exactly one activation per layer");
        for (std::size_t l = 0; l + 1 < activations.size(); ++l)
            if (activations[l] == Activation::identity)
                throw ValidationError("identity activation is only legal on the final layer");
    }

    bool has_hidden(Activation a) const {
        for (int l = 0; l < num_hidden(); ++l)
            if (activations[l] == a) return true;
        return false;
    }
};

inline NetworkSpec make_spec(std::vector<int> dims, Activation hidden, Activation final_act = Activation::identity) {
    NetworkSpec s;
    s.dims = std::move(dims);
    s.activations.assign(s.dims.size() - 1, hidden);
    s.activations.back() = final_act;
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Weight-space element
// ---------------------------------------------------------------------------

/// The object every augmentation acts on: one weight matrix and one bias
/// vector per layer; weights[l] has shape dims[l+1] x dims[l]. Elements are
/// value types; no operation in this library mutates its input.
struct WeightSpaceElement {
    NetworkSpec spec;
    std::vector<MatrixF> weights;
    std::vector<std::vector<float>> biases;

    bool operator==(const WeightSpaceElement&) const = default;

    void validate() const {
        spec.validate();
        const int m = spec.num_layers();
        if (static_cast<int>(weights.size()) != m)
            throw ValidationError("element has " + std::to_string(weights.size()) +
                                  " weight matrices, spec requires " + std::to_string(m));
        if (static_cast<int>(biases.size()) != m)
            throw ValidationError("element has " + std::to_string(biases.size()) +
                                  " bias vectors, spec requires " + std::to_string(m));
        for (int l = 0; l < m; ++l) {
            if (weights[l].rows != spec.dims[l + 1] || weights[l].cols != spec.dims[l])
                throw ValidationError("weight matrix of layer " + std::to_string(l + 1) +
                                      " has wrong shape");
            if (static_cast<int>(biases[l].size()) != spec.dims[l + 1])
                throw ValidationError("bias vector of layer " + std::to_string(l + 1) +
                                      " has wrong length");
            for (float v : weights[l].data)
                if (!std::isfinite(v))
                    throw ValidationError("non-finite weight in layer " + std::to_string(l + 1));
            for (float v : biases[l])
                if (!std::isfinite(v))
                    throw ValidationError("non-finite bias in layer " + std::to_string(l + 1));
        }
    }
};

inline WeightSpaceElement zero_element(const NetworkSpec& spec) {
    spec.validate();
    WeightSpaceElement e;
    e.spec = spec;
    const int m = spec.num_layers();
    e.weights.reserve(m);
    e.biases.reserve(m);
    for (int l = 0; l < m; ++l) {
        e.weights.emplace_back(spec.dims[l + 1], spec.dims[l]);
        e.biases.emplace_back(spec.dims[l + 1], 0.0f);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Signal tasks
// ---------------------------------------------------------------------------

enum class SignalKind { image2d, sdf3d, generic };

/// Supervised regression target. inputs is N x d0, targets is N x dM.
/// The only supported loss is mean squared error, averaged over every scalar
/// entry of the target matrix.
struct SignalTask {
    MatrixF inputs;
    MatrixF targets;
    SignalKind kind = SignalKind::generic;
    int grid_h = 0; // image tasks only
    int grid_w = 0;

    int num_samples() const { return inputs.rows; }

    void validate() const {
        if (inputs.rows < 1) throw ValidationError("task needs at least one sample");
        if (targets.rows != inputs.rows)
            throw ValidationError("task inputs and targets disagree on sample count");
        for (float v : inputs.data)
            if (!std::isfinite(v)) throw ValidationError("non-finite task input");
        for (float v : targets.data)
            if (!std::isfinite(v)) throw ValidationError("non-finite task target");
        if (kind == SignalKind::image2d && grid_h * grid_w != inputs.rows)
            throw ValidationError("image task grid dims do not match sample count");
    }
};

// ---------------------------------------------------------------------------
// Forward evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline double activate(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::sine: return std::sin(z);
        case Activation::identity: return z;
    }
    return z;
}

// One sample through the network. in/out are double scratch buffers of at
// least max-width length; the input must already be loaded into `a`.
inline void forward_one(const WeightSpaceElement& e, std::vector<double>& a,
                        std::vector<double>& z) {
    const int m = e.spec.num_layers();
    for (int l = 0; l < m; ++l) {
        const MatrixF& w = e.weights[l];
        const std::vector<float>& b = e.biases[l];
        const Activation act = e.spec.activations[l];
        for (int i = 0; i < w.rows; ++i) {
            const float* wr = w.row_ptr(i);
            double acc = static_cast<double>(b[i]);
            for (int j = 0; j < w.cols; ++j) acc += static_cast<double>(wr[j]) * a[j];
            z[i] = activate(act, acc);
        }
        std::swap(a, z);
    }
}

inline int max_width(const NetworkSpec& spec) {
    int w = 0;
    for (int d : spec.dims) w = std::max(w, d);
    return w;
}

} // namespace detail

/// Batch forward pass. Row i of the result is the network output for row i of
/// x; a batch is evaluated row by row, so batch and per-row evaluation agree
/// bit for bit. Arithmetic is double internally; outputs round to float32.
inline MatrixF forward_eval(const WeightSpaceElement& elem, const MatrixF& x) {
    if (x.cols != elem.spec.input_dim())
        throw ValidationError("forward input has " + std::to_string(x.cols) +
                              " columns, spec expects " + std::to_string(elem.spec.input_dim()));
    for (float v : x.data)
        if (!std::isfinite(v)) throw ValidationError("non-finite forward input");
    const int n = x.rows;
    const int dm = elem.spec.output_dim();
    MatrixF out(n, dm);
    std::vector<double> a(detail::max_width(elem.spec)), z(detail::max_width(elem.spec));
    for (int s = 0; s < n; ++s) {
        const float* xr = x.row_ptr(s);
        for (int j = 0; j < x.cols; ++j) a[j] = static_cast<double>(xr[j]);
        detail::forward_one(elem, a, z);
        float* outr = out.row_ptr(s);
        for (int k = 0; k < dm; ++k) outr[k] = static_cast<float>(a[k]);
    }
    return out;
}

inline std::vector<float> forward_eval(const WeightSpaceElement& elem, const std::vector<float>& x) {
    MatrixF xm(1, static_cast<int>(x.size()));
    xm.data = x;
    MatrixF out = forward_eval(elem, xm);
    return out.data;
}

// ---------------------------------------------------------------------------
// Flatten / unflatten
// ---------------------------------------------------------------------------

// Canonical flat ordering: layers in order; per layer the weight matrix in
// row-major order followed by the bias vector. Distances between flattened
// elements are comparable across implementations that honor this ordering.

inline std::size_t flat_size(const NetworkSpec& spec) {
    std::size_t n = 0;
    for (int l = 0; l < spec.num_layers(); ++l)
        n += static_cast<std::size_t>(spec.dims[l + 1]) * spec.dims[l] + spec.dims[l + 1];
    return n;
}

inline std::vector<float> flatten(const WeightSpaceElement& e) {
    std::vector<float> flat;
    flat.reserve(flat_size(e.spec));
    for (int l = 0; l < e.spec.num_layers(); ++l) {
        flat.insert(flat.end(), e.weights[l].data.begin(), e.weights[l].data.end());
        flat.insert(flat.end(), e.biases[l].begin(), e.biases[l].end());
    }
    return flat;
}

inline WeightSpaceElement unflatten(const NetworkSpec& spec, const std::vector<float>& flat) {
    spec.validate();
    if (flat.size() != flat_size(spec))
        throw ValidationError("flat vector has length " + std::to_string(flat.size()) +
                              ", spec requires " + std::to_string(flat_size(spec)));
    WeightSpaceElement e = zero_element(spec);
    std::size_t pos = 0;
    for (int l = 0; l < spec.num_layers(); ++l) {
        std::copy(flat.begin() + pos, flat.begin() + pos + e.weights[l].size(),
                  e.weights[l].data.begin());
        pos += e.weights[l].size();
        std::copy(flat.begin() + pos, flat.begin() + pos + e.biases[l].size(),
                  e.biases[l].begin());
        pos += e.biases[l].size();
    }
    return e;
}

/// Euclidean distance between the canonical flattenings, accumulated in double.
inline double flat_distance(const WeightSpaceElement& a, const WeightSpaceElement& b) {
    if (a.spec != b.spec) throw ValidationError("flat_distance requires identical specs");
    std::vector<float> fa = flatten(a), fb = flatten(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        double d = static_cast<double>(fa[i]) - static_cast<double>(fb[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// SIREN initialization with the frequency factor omega0 folded into the
/// stored parameters, so the activation is plain sin(z). In the unfolded
/// scheme every sine pre-activation is multiplied by omega0; folding that
/// factor into the parameters gives
///   layer 1:      W ~ U(-1/d0, 1/d0) * omega0,        b ~ U(-1/sqrt(d0), 1/sqrt(d0)) * omega0
///   sine hidden:  W ~ U(-sqrt(6/fan), sqrt(6/fan)),   b ~ U(-1/sqrt(fan), 1/sqrt(fan)) * omega0
///   final:        W ~ U(-sqrt(6/fan)/omega0, ...),    b ~ U(-1/sqrt(fan), 1/sqrt(fan))
/// (hidden weights U(+-sqrt(6/fan)/omega0) times the folded omega0 cancel).
/// Per layer, the weight matrix is drawn row-major, then the bias. Pure
/// function of (spec, omega0, seed).
inline WeightSpaceElement init_siren(const NetworkSpec& spec, double omega0, std::uint64_t seed) {
    spec.validate();
    if (!(omega0 > 0.0) || !std::isfinite(omega0))
        throw ValidationError("omega0 must be positive and finite");
    for (int l = 0; l < spec.num_hidden(); ++l)
        if (spec.activations[l] != Activation::sine)
            throw ValidationError("init_siren requires sine hidden activations");

    WeightSpaceElement e = zero_element(spec);
    std::mt19937_64 rng = make_rng(seed);
    const int m = spec.num_layers();
    for (int l = 0; l < m; ++l) {
        const int fan_in = spec.dims[l];
        double w_bound, w_scale = 1.0, b_scale = 1.0;
        if (l == 0) {
            w_bound = 1.0 / fan_in;
            w_scale = omega0;
            b_scale = omega0;
        } else if (l < m - 1) {
            w_bound = std::sqrt(6.0 / fan_in);
            b_scale = omega0;
        } else {
            w_bound = std::sqrt(6.0 / fan_in) / omega0;
        }
        const double b_bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (float& v : e.weights[l].data)
            v = static_cast<float>(uniform_real(rng, -w_bound, w_bound) * w_scale);
        for (float& v : e.biases[l])
            v = static_cast<float>(uniform_real(rng, -b_bound, b_bound) * b_scale);
    }
    return e;
}

/// Kaiming-style uniform init for ReLU nets: W ~ U(-sqrt(6/fan), sqrt(6/fan)),
/// b ~ U(-1/sqrt(fan), 1/sqrt(fan)). Pure function of (spec, seed).
inline WeightSpaceElement init_relu(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    WeightSpaceElement e = zero_element(spec);
    std::mt19937_64 rng = make_rng(seed);
    for (int l = 0; l < spec.num_layers(); ++l) {
        const int fan_in = spec.dims[l];
        const double w_bound = std::sqrt(6.0 / fan_in);
        const double b_bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (float& v : e.weights[l].data)
            v = static_cast<float>(uniform_real(rng, -w_bound, w_bound));
        for (float& v : e.biases[l])
            v = static_cast<float>(uniform_real(rng, -b_bound, b_bound));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

/// Max absolute difference between two elements' outputs on a set of points.
inline double max_output_deviation(const WeightSpaceElement& a, const WeightSpaceElement& b,
                                   const MatrixF& points) {
    MatrixF ya = forward_eval(a, points);
    MatrixF yb = forward_eval(b, points);
    double worst = 0.0;
    for (std::size_t i = 0; i < ya.data.size(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(ya.data[i]) - static_cast<double>(yb.data[i])));
    return worst;
}

/// n points uniform over [-1,1]^dim, the domain every task in this library
/// normalizes to.
inline MatrixF sample_domain_points(int n, int dim, std::uint64_t seed) {
    MatrixF pts(n, dim);
    std::mt19937_64 rng = make_rng(seed);
    for (float& v : pts.data) v = static_cast<float>(uniform_real(rng, -1.0, 1.0));
    return pts;
}

} // namespace wsaug
