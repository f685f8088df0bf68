#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>

#include "helpers.hpp"
#include "wsaug/augment.hpp"
#include "wsaug/core.hpp"
#include "wsaug/pipeline_io.hpp"

using namespace wsaug;
using testutil::random_element;

namespace {

double determinant(MatrixD m) {
    const int n = m.rows;
    double d = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
        if (m(piv, c) == 0.0) return 0.0;
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(m(c, k), m(piv, k));
            d = -d;
        }
        d *= m(c, c);
        for (int r = c + 1; r < n; ++r) {
            const double f = m(r, c) / m(c, c);
            for (int k = c; k < n; ++k) m(r, k) -= f * m(c, k);
        }
    }
    return d;
}

/// Worst |f'(x) - f(T x)| over sampled points, the input-space pullback law.
double pullback_error(const WeightSpaceElement& orig, const WeightSpaceElement& aug,
                      const AffineInputMap& map, std::uint64_t seed, int n = 1024) {
    MatrixF pts = sample_domain_points(n, orig.spec.input_dim(), seed);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<float> x(pts.row_ptr(i), pts.row_ptr(i) + pts.cols);
        std::vector<float> lhs = forward_eval(aug, x);
        std::vector<float> rhs = forward_eval(orig, map(x));
        for (std::size_t k = 0; k < lhs.size(); ++k)
            worst = std::max(worst, std::abs(static_cast<double>(lhs[k]) - rhs[k]));
    }
    return worst;
}

std::size_t count_zeros(const WeightSpaceElement& e) {
    std::size_t z = 0;
    for (const auto& w : e.weights)
        for (float v : w.data) z += (v == 0.0f);
    for (const auto& b : e.biases)
        for (float v : b) z += (v == 0.0f);
    return z;
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "wsaug_augment_test";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

// ---------------------------------------------------------------------------
// Input-space transformations
// ---------------------------------------------------------------------------

TEST_CASE("rotate_input: network equals original composed with the rotation") {
    for (int dim : {2, 3}) {
        std::vector<int> dims = {dim, 8, 8, 1};
        NetworkSpec spec = make_spec(dims, Activation::sine);
        WeightSpaceElement e = random_element(spec, 40 + dim);
        std::mt19937_64 rng = make_rng(41);
        for (int t = 0; t < 5; ++t) {
            MatrixD r = random_rotation(dim, rng);
            WeightSpaceElement out = rotate_input(e, r);
            AffineInputMap map{r, std::vector<double>(dim, 0.0)};
            CHECK(pullback_error(e, out, map, 50 + t) < 1e-5);

            CHECK(out.weights[1] == e.weights[1]);
            CHECK(out.weights[2] == e.weights[2]);
            CHECK(out.biases == e.biases);
        }
    }
}

TEST_CASE("rotate_input rejects non-orthogonal and mis-sized matrices") {
    NetworkSpec spec = make_spec({2, 4, 1}, Activation::relu);
    WeightSpaceElement e = random_element(spec, 42);

    MatrixD skew(2, 2);
    skew(0, 0) = 1.0;
    skew(0, 1) = 0.5;
    skew(1, 1) = 1.0;
    CHECK_THROWS_AS(rotate_input(e, skew), ValidationError);

    CHECK_THROWS_AS(rotate_input(e, identity_matrix(3)), ValidationError);
}

TEST_CASE("scale_input: network equals original evaluated at s*x") {
    NetworkSpec spec = make_spec({2, 8, 1}, Activation::sine);
    WeightSpaceElement e = random_element(spec, 43);
    for (double s : {0.5, 1.0, 1.7, 3.0}) {
        WeightSpaceElement out = scale_input(e, s);
        MatrixD a = identity_matrix(2);
        a(0, 0) = a(1, 1) = s;
        AffineInputMap map{a, {0.0, 0.0}};
        CHECK(pullback_error(e, out, map, 60) < 1e-5);
        CHECK(out.biases == e.biases);
        CHECK(out.weights[1] == e.weights[1]);
    }
    CHECK_THROWS_AS(scale_input(e, 0.0), ValidationError);
    CHECK_THROWS_AS(scale_input(e, -1.0), ValidationError);
    CHECK_THROWS_AS(scale_input(e, std::numeric_limits<double>::infinity()), ValidationError);
}

TEST_CASE("translate_input: network equals original evaluated at x + t") {
    NetworkSpec spec = make_spec({3, 8, 2}, Activation::relu);
    WeightSpaceElement e = random_element(spec, 44);
    std::vector<double> t = {0.2, -0.15, 0.05};
    WeightSpaceElement out = translate_input(e, t);
    AffineInputMap map{identity_matrix(3), t};
    CHECK(pullback_error(e, out, map, 61) < 1e-5);

    CHECK(out.weights == e.weights);
    CHECK(out.biases[1] == e.biases[1]);

    CHECK_THROWS_AS(translate_input(e, std::vector<double>{0.1, 0.2}), ValidationError);
    CHECK_THROWS_AS(translate_input(e, std::vector<double>{0.1, 0.2, 1e308 * 10}),
                    ValidationError);
}

TEST_CASE("random_rotation produces orthogonal matrices with determinant +1") {
    std::mt19937_64 rng = make_rng(45);
    for (int dim : {1, 2, 3, 5}) {
        for (int t = 0; t < 20; ++t) {
            MatrixD r = random_rotation(dim, rng);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) {
                    double dot = 0.0;
                    for (int k = 0; k < dim; ++k) dot += r(k, i) * r(k, j);
                    CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-10);
                }
            CHECK(std::abs(determinant(r) - 1.0) < 1e-9);
        }
    }
    CHECK_THROWS_AS(random_rotation(0, rng), ValidationError);
}

// ---------------------------------------------------------------------------
// Noise and dropout
// ---------------------------------------------------------------------------

TEST_CASE("gaussian_noise: sigma 0 is the identity bit for bit") {
    NetworkSpec spec = make_spec({2, 8, 1}, Activation::sine);
    WeightSpaceElement e = random_element(spec, 46);
    CHECK(gaussian_noise(e, 0.0, 123) == e);
}

TEST_CASE("gaussian_noise: empirical deviation matches the per-tensor scale") {
    NetworkSpec spec = make_spec({100, 100, 1}, Activation::relu);
    WeightSpaceElement e = random_element(spec, 47);
    const double sigma_rel = 0.1;
    WeightSpaceElement out = gaussian_noise(e, sigma_rel, 99);

    const auto& w0 = e.weights[0].data;
    const auto& w1 = out.weights[0].data;
    double mean = 0.0;
    std::vector<double> delta(w0.size());
    for (std::size_t i = 0; i < w0.size(); ++i) {
        delta[i] = static_cast<double>(w1[i]) - w0[i];
        mean += delta[i];
    }
    mean /= static_cast<double>(delta.size());
    double var = 0.0;
    for (double d : delta) var += (d - mean) * (d - mean);
    const double got = std::sqrt(var / static_cast<double>(delta.size()));
    const double want = sigma_rel * detail::tensor_std(w0.data(), w0.size());
    CHECK(got > 0.95 * want);
    CHECK(got < 1.05 * want);
}

TEST_CASE("gaussian_noise: a constant tensor has zero spread and stays put") {
    NetworkSpec spec = make_spec({4, 8, 1}, Activation::relu);
    WeightSpaceElement e = zero_element(spec);
    for (auto& w : e.weights)
        for (float& v : w.data) v = 0.75f;
    for (auto& b : e.biases)
        for (float& v : b) v = -0.25f;
    CHECK(gaussian_noise(e, 0.5, 7) == e);
}

TEST_CASE("gaussian_noise: deterministic in the seed, rejects bad sigma") {
    NetworkSpec spec = make_spec({2, 8, 1}, Activation::sine);
    WeightSpaceElement e = random_element(spec, 48);
    CHECK(gaussian_noise(e, 0.05, 5) == gaussian_noise(e, 0.05, 5));
    CHECK_FALSE(gaussian_noise(e, 0.05, 5) == gaussian_noise(e, 0.05, 6));
    CHECK_THROWS_AS(gaussian_noise(e, -0.1, 5), ValidationError);
    CHECK_THROWS_AS(gaussian_noise(e, std::numeric_limits<double>::quiet_NaN(), 5),
                    ValidationError);
}

TEST_CASE("dropout: endpoints, empirical rate and determinism") {
    NetworkSpec spec = make_spec({100, 100, 1}, Activation::relu);
    WeightSpaceElement e = random_element(spec, 49, 0.5f, 1.0f);

    CHECK(dropout(e, 0.0, 11) == e);

    WeightSpaceElement all = dropout(e, 1.0, 11);
    CHECK(count_zeros(all) == flat_size(spec));

    WeightSpaceElement some = dropout(e, 0.3, 11);
    const auto& w = some.weights[0].data;
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0f) ++zeros;
        else CHECK(w[i] == e.weights[0].data[i]);
    }
    const double rate = static_cast<double>(zeros) / static_cast<double>(w.size());
    CHECK(rate > 0.27);
    CHECK(rate < 0.33);

    CHECK(dropout(e, 0.3, 11) == some);
    CHECK_FALSE(dropout(e, 0.3, 12) == some);
    CHECK_THROWS_AS(dropout(e, -0.01, 1), ValidationError);
    CHECK_THROWS_AS(dropout(e, 1.01, 1), ValidationError);
}

TEST_CASE("quantile_dropout zeroes the smallest-magnitude entries per tensor") {
    NetworkSpec spec = make_spec({4, 1, 1}, Activation::relu);
    WeightSpaceElement e = zero_element(spec);
    e.weights[0](0, 0) = 0.1f;
    e.weights[0](0, 1) = -0.5f;
    e.weights[0](0, 2) = 2.0f;
    e.weights[0](0, 3) = -0.05f;
    e.biases[0][0] = 0.7f;

    WeightSpaceElement out = quantile_dropout(e, 0.5);
    CHECK(out.weights[0](0, 0) == 0.0f);
    CHECK(out.weights[0](0, 1) == -0.5f);
    CHECK(out.weights[0](0, 2) == 2.0f);
    CHECK(out.weights[0](0, 3) == 0.0f);
    // single-entry tensors fall below the quantile count and stay put
    CHECK(out.biases[0][0] == 0.7f);
}

TEST_CASE("quantile_dropout: exact count, monotonicity and validation") {
    NetworkSpec spec = make_spec({8, 1, 1}, Activation::relu);
    WeightSpaceElement e = random_element(spec, 50, 0.1f, 1.0f);
    e.weights[0](0, 3) = -0.01f;

    CHECK(quantile_dropout(e, 0.0) == e);

    WeightSpaceElement q25 = quantile_dropout(e, 0.25);
    std::size_t zeros = 0;
    for (float v : q25.weights[0].data) zeros += (v == 0.0f);
    CHECK(zeros == 2);

    WeightSpaceElement q50 = quantile_dropout(e, 0.5);
    for (int j = 0; j < 8; ++j) {
        if (q25.weights[0](0, j) == 0.0f) CHECK(q50.weights[0](0, j) == 0.0f);
        if (q50.weights[0](0, j) != 0.0f) CHECK(q50.weights[0](0, j) == e.weights[0](0, j));
    }

    CHECK_THROWS_AS(quantile_dropout(e, -0.1), ValidationError);
    CHECK_THROWS_AS(quantile_dropout(e, 1.0), ValidationError);
}

// ---------------------------------------------------------------------------
// Descriptors and pipeline
// ---------------------------------------------------------------------------

TEST_CASE("sample_augmentation reports the input map it applied") {
    NetworkSpec spec = make_spec({2, 8, 1}, Activation::sine);
    WeightSpaceElement e = random_element(spec, 51);
    std::mt19937_64 rng = make_rng(52);

    for (AugKind kind : {AugKind::rotate_input, AugKind::scale_input, AugKind::translate_input}) {
        AugmentationDescriptor d;
        d.kind = kind;
        AppliedAugmentation applied = sample_augmentation(e, d, rng);
        REQUIRE(applied.input_map.has_value());
        CHECK(pullback_error(e, applied.element, *applied.input_map, 70) < 1e-5);
    }

    AugmentationDescriptor noise;
    noise.kind = AugKind::gaussian_noise;
    CHECK_FALSE(sample_augmentation(e, noise, rng).input_map.has_value());
}

TEST_CASE("kind predicates and name round trip") {
    for (AugKind k : {AugKind::rotate_input, AugKind::scale_input, AugKind::translate_input,
                      AugKind::gaussian_noise, AugKind::dropout, AugKind::quantile_dropout,
                      AugKind::relu_scaling, AugKind::siren_negation, AugKind::siren_bias,
                      AugKind::permute}) {
        CHECK(aug_kind_from_string(to_string(k)) == k);
        CHECK(is_function_preserving(k) ==
              (k == AugKind::relu_scaling || k == AugKind::siren_negation ||
               k == AugKind::siren_bias || k == AugKind::permute));
        CHECK(is_input_space(k) == (k == AugKind::rotate_input || k == AugKind::scale_input ||
                                    k == AugKind::translate_input));
    }
    CHECK_THROWS_AS(aug_kind_from_string("bogus"), ValidationError);
}

TEST_CASE("descriptor validation catches incompatible and out-of-range settings") {
    NetworkSpec sine = make_spec({2, 4, 1}, Activation::sine);
    NetworkSpec relu = make_spec({2, 4, 1}, Activation::relu);

    AugmentationDescriptor d;
    d.kind = AugKind::relu_scaling;
    CHECK_THROWS_AS(d.validate(sine), ValidationError);
    CHECK_NOTHROW(d.validate(relu));

    d.kind = AugKind::siren_negation;
    CHECK_THROWS_AS(d.validate(relu), ValidationError);
    CHECK_NOTHROW(d.validate(sine));

    d.kind = AugKind::dropout;
    d.probability = 1.5;
    CHECK_THROWS_AS(d.validate(relu), ValidationError);
    d.probability = 0.5;
    d.params.p_drop = 2.0;
    CHECK_THROWS_AS(d.validate(relu), ValidationError);

    d = AugmentationDescriptor{};
    d.kind = AugKind::scale_input;
    d.params.scale_min = 2.0;
    d.params.scale_max = 1.0;
    CHECK_THROWS_AS(d.validate(relu), ValidationError);
}

TEST_CASE("apply_pipeline: empty pipeline and zero-probability steps change nothing") {
    NetworkSpec spec = make_spec({2, 8, 1}, Activation::sine);
    WeightSpaceElement e = random_element(spec, 53);

    CHECK(apply_pipeline(e, AugmentationPipeline{}, 0, 0, 1) == e);

    AugmentationPipeline never;
    AugmentationDescriptor d;
    d.kind = AugKind::gaussian_noise;
    d.probability = 0.0;
    never.steps = {d};
    for (std::uint64_t sid = 0; sid < 20; ++sid)
        CHECK(apply_pipeline(e, never, sid, 0, 1) == e);
}

TEST_CASE("apply_pipeline: symmetry-only pipelines preserve the function") {
    NetworkSpec spec = make_spec({2, 16, 16, 1}, Activation::sine);
    WeightSpaceElement e = random_element(spec, 54, -2.0f, 2.0f);

    AugmentationPipeline p;
    for (AugKind k : {AugKind::permute, AugKind::siren_negation, AugKind::siren_bias}) {
        AugmentationDescriptor d;
        d.kind = k;
        p.steps.push_back(d);
    }
    for (std::uint64_t sid = 0; sid < 10; ++sid) {
        WeightSpaceElement out = apply_pipeline(e, p, sid, 0, 7);
        MatrixF pts = sample_domain_points(1024, 2, 500 + sid);
        CHECK(max_output_deviation(e, out, pts) < 1e-4);
    }
}

TEST_CASE("apply_pipeline is deterministic in (sample, epoch, seed)") {
    NetworkSpec spec = make_spec({2, 8, 1}, Activation::relu);
    WeightSpaceElement e = random_element(spec, 55);

    AugmentationPipeline p;
    for (AugKind k : {AugKind::permute, AugKind::gaussian_noise, AugKind::dropout}) {
        AugmentationDescriptor d;
        d.kind = k;
        d.probability = 0.8;
        p.steps.push_back(d);
    }

    WeightSpaceElement a = apply_pipeline(e, p, 3, 1, 9);
    CHECK(apply_pipeline(e, p, 3, 1, 9) == a);
    CHECK_FALSE(apply_pipeline(e, p, 4, 1, 9) == a);
    CHECK_FALSE(apply_pipeline(e, p, 3, 2, 9) == a);
    CHECK_FALSE(apply_pipeline(e, p, 3, 1, 10) == a);
}

TEST_CASE("apply_pipeline validates steps against the element spec") {
    NetworkSpec sine = make_spec({2, 8, 1}, Activation::sine);
    WeightSpaceElement e = random_element(sine, 56);
    AugmentationPipeline p;
    AugmentationDescriptor d;
    d.kind = AugKind::relu_scaling;
    p.steps = {d};
    CHECK_THROWS_AS(apply_pipeline(e, p, 0, 0, 1), ValidationError);
}

// ---------------------------------------------------------------------------
// Pipeline JSON
// ---------------------------------------------------------------------------

TEST_CASE("pipeline JSON round trip preserves kinds, probabilities and parameters") {
    AugmentationPipeline p;
    {
        AugmentationDescriptor d;
        d.kind = AugKind::scale_input;
        d.probability = 0.4;
        d.params.scale_min = 0.7;
        d.params.scale_max = 1.6;
        p.steps.push_back(d);
    }
    {
        AugmentationDescriptor d;
        d.kind = AugKind::gaussian_noise;
        d.probability = 0.9;
        d.params.sigma_rel = 0.05;
        p.steps.push_back(d);
    }
    {
        AugmentationDescriptor d;
        d.kind = AugKind::siren_bias;
        d.params.k_max = 1;
        p.steps.push_back(d);
    }
    {
        AugmentationDescriptor d;
        d.kind = AugKind::permute;
        p.steps.push_back(d);
    }

    AugmentationPipeline q = pipeline_from_json(pipeline_to_json(p));
    REQUIRE(q.steps.size() == 4);
    CHECK(q.steps[0].kind == AugKind::scale_input);
    CHECK(q.steps[0].probability == 0.4);
    CHECK(q.steps[0].params.scale_min == 0.7);
    CHECK(q.steps[0].params.scale_max == 1.6);
    CHECK(q.steps[1].kind == AugKind::gaussian_noise);
    CHECK(q.steps[1].params.sigma_rel == 0.05);
    CHECK(q.steps[2].kind == AugKind::siren_bias);
    CHECK(q.steps[2].params.k_max == 1);
    CHECK(q.steps[3].kind == AugKind::permute);

    NetworkSpec spec = make_spec({2, 8, 1}, Activation::sine);
    WeightSpaceElement e = random_element(spec, 57);
    CHECK(apply_pipeline(e, p, 1, 2, 3) == apply_pipeline(e, q, 1, 2, 3));
}

TEST_CASE("pipeline JSON rejects unknown keys, bad kinds and bad shapes") {
    CHECK_THROWS_AS(pipeline_from_json(R"({"kind":"dropout"})"), ValidationError);
    CHECK_THROWS_AS(pipeline_from_json(R"([{"kind":"bogus"}])"), ValidationError);
    CHECK_THROWS_AS(pipeline_from_json(R"([{"kind":"dropout","extra":1}])"), ValidationError);
    CHECK_THROWS_AS(pipeline_from_json(R"([{"kind":"dropout","params":{"bogus":1}}])"),
                    ValidationError);
    CHECK_THROWS_AS(pipeline_from_json(R"([{"kind":"dropout","p":"half"}])"), ValidationError);
    CHECK_THROWS_AS(pipeline_from_json(R"([{"kind":"siren_bias","params":{"k_max":1.5}}])"),
                    ValidationError);
    CHECK_THROWS_AS(pipeline_from_json(R"([{"kind":"dropout","params":{"p_drop":1e999}}])"),
                    ParseError);
    CHECK_THROWS_AS(pipeline_from_json("[1,2]"), ValidationError);

    try {
        pipeline_from_json("[{\"kind\": ");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.byte_offset() > 0);
    }
}

TEST_CASE("pipeline save and load round trip through a file") {
    const auto dir = temp_dir();
    const std::string path = (dir / "pipe.json").string();

    AugmentationPipeline p;
    AugmentationDescriptor d;
    d.kind = AugKind::dropout;
    d.probability = 0.25;
    d.params.p_drop = 0.1;
    p.steps = {d};

    save_pipeline(path, p);
    AugmentationPipeline q = load_pipeline(path);
    REQUIRE(q.steps.size() == 1);
    CHECK(q.steps[0].kind == AugKind::dropout);
    CHECK(q.steps[0].probability == 0.25);
    CHECK(q.steps[0].params.p_drop == 0.1);

    CHECK_THROWS_AS(load_pipeline((dir / "missing.json").string()), IoError);
}
