#pragma once

#include <cmath>
#include <limits>

#include "wsaug/core.hpp"
#include "wsaug/fit.hpp"
#include "wsaug/symmetry.hpp"

namespace wsaug {

// Weight matching (coordinate descent over per-layer linear assignment
// problems), the three mixup variants, and loss barriers along linear
// interpolation paths.

// ---------------------------------------------------------------------------
// Linear assignment
// ---------------------------------------------------------------------------

/// Exact solver for the assignment maximizing sum_i score[i, pi(i)].
/// Augmenting-path Hungarian method with potentials, O(n^3); rows are
/// processed in order and columns scanned by ascending index, so ties break
/// deterministically.
inline std::vector<int> solve_lap(const MatrixD& score) {
    if (score.rows != score.cols) throw ValidationError("solve_lap needs a square matrix");
    const int n = score.rows;
    if (n == 0) throw ValidationError("solve_lap needs a non-empty matrix");
    for (double v : score.data)
        if (!std::isfinite(v)) throw ValidationError("solve_lap needs finite scores");

    const double inf = std::numeric_limits<double>::infinity();
    // Minimize cost = -score, 1-indexed with a sentinel column 0.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = -score(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
    return assignment;
}

// ---------------------------------------------------------------------------
// Weight matching
// ---------------------------------------------------------------------------

struct AlignmentResult {
    PermutationSequence perms;
    double objective = 0.0; // squared flat distance between x1 and the aligned x2
    int iterations = 0;     // full coordinate-descent passes executed
    bool converged = false; // a full pass changed no permutation
};

namespace detail {

/// Assignment score for hidden layer h given the current permutations of the
/// neighboring layers. score[i][a] is the gain of mapping x2's neuron a onto
/// x1's slot i:
///   W1[h] P_prev W2[h]^T + W1[h+1]^T P_next W2[h+1] + b1[h] b2[h]^T
/// where boundary permutations are identities. sigma arrays follow the
/// library convention sigma[old] = new.
inline MatrixD matching_score(const WeightSpaceElement& x1, const WeightSpaceElement& x2,
                              const PermutationSequence& perms, int h,
                              bool include_next = true) {
    const NetworkSpec& spec = x1.spec;
    const int n = spec.hidden_dim(h);
    const MatrixF& w1 = x1.weights[h];
    const MatrixF& w2 = x2.weights[h];
    const MatrixF& w1n = x1.weights[h + 1];
    const MatrixF& w2n = x2.weights[h + 1];

    std::vector<int> sprev(w1.cols), snext_of(w1n.rows);
    if (h > 0) {
        sprev = perms.perms[h - 1];
    } else {
        for (int j = 0; j < w1.cols; ++j) sprev[j] = j;
    }
    if (h + 1 < spec.num_hidden()) {
        snext_of = perms.perms[h + 1];
    } else {
        for (int j = 0; j < w1n.rows; ++j) snext_of[j] = j;
    }

    MatrixD score(n, n);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
            double acc = static_cast<double>(x1.biases[h][i]) *
                         static_cast<double>(x2.biases[h][a]);
            for (int c = 0; c < w1.cols; ++c)
                acc += static_cast<double>(w1(i, sprev[c])) * static_cast<double>(w2(a, c));
            if (include_next)
                for (int k = 0; k < w2n.rows; ++k)
                    acc += static_cast<double>(w1n(snext_of[k], i)) *
                           static_cast<double>(w2n(k, a));
            score(i, a) = acc;
        }
    return score;
}

/// Forward warm start: align each hidden layer in turn against the already
/// aligned previous side only (incoming rows plus bias). When x2 is an exact
/// permuted copy of x1 this sweep recovers the planted permutation layer by
/// layer: the restricted score is the Gram matrix of x1's (row, bias)
/// profiles against a reordering of themselves, whose assignment optimum is
/// the reordering itself (Cauchy-Schwarz plus rearrangement), uniquely so for
/// generic weights.
inline PermutationSequence forward_warm_start(const WeightSpaceElement& x1,
                                              const WeightSpaceElement& x2) {
    PermutationSequence perms = identity_permutation(x1.spec);
    for (int h = 0; h < x1.spec.num_hidden(); ++h) {
        const MatrixD score = matching_score(x1, x2, perms, h, false);
        const std::vector<int> pi = solve_lap(score);
        std::vector<int> sigma(pi.size());
        for (std::size_t i = 0; i < pi.size(); ++i) sigma[pi[i]] = static_cast<int>(i);
        perms.perms[h] = std::move(sigma);
    }
    return perms;
}

inline double assignment_value(const MatrixD& score, const std::vector<int>& sigma) {
    // sigma[a] = i; the assignment selects score[sigma[a], a].
    double acc = 0.0;
    for (std::size_t a = 0; a < sigma.size(); ++a)
        acc += score(sigma[a], static_cast<int>(a));
    return acc;
}

} // namespace detail

/// Squared flat distance between x1 and apply_permutation(x2, perms), the
/// quantity weight_matching minimizes.
inline double alignment_objective(const WeightSpaceElement& x1, const WeightSpaceElement& x2,
                                  const PermutationSequence& perms) {
    const double d = flat_distance(x1, apply_permutation(x2, perms));
    return d * d;
}

namespace detail {

/// One coordinate-descent run from the identity alignment: re-solve one
/// hidden layer's assignment at a time (layer order shuffled per pass by the
/// seed) until a full pass changes nothing or max_passes is reached. An
/// update is accepted only if it strictly improves the layer score, so the
/// distance objective is strictly decreasing across accepted updates.
inline AlignmentResult matching_descent(const WeightSpaceElement& x1,
                                        const WeightSpaceElement& x2, int max_passes,
                                        std::uint64_t descent_seed,
                                        PermutationSequence init) {
    const int nh = x1.spec.num_hidden();

    AlignmentResult result;
    result.perms = std::move(init);
    std::mt19937_64 rng = make_rng(descent_seed);

    std::vector<int> order(nh);
    for (int h = 0; h < nh; ++h) order[h] = h;

    for (int pass = 1; pass <= max_passes; ++pass) {
        result.iterations = pass;
        std::shuffle(order.begin(), order.end(), rng);
        bool changed = false;
        for (int h : order) {
            const MatrixD score = matching_score(x1, x2, result.perms, h);
            const std::vector<int> pi = solve_lap(score);
            std::vector<int> sigma(pi.size());
            for (std::size_t i = 0; i < pi.size(); ++i) sigma[pi[i]] = static_cast<int>(i);
            if (sigma == result.perms.perms[h]) continue;
            const double gain = assignment_value(score, sigma) -
                                assignment_value(score, result.perms.perms[h]);
            if (gain > 0.0) {
                result.perms.perms[h] = std::move(sigma);
                changed = true;
            }
        }
        if (!changed) {
            result.converged = true;
            break;
        }
    }
    result.objective = alignment_objective(x1, x2, result.perms);
    return result;
}

} // namespace detail

/// Git Re-Basin style weight matching. The per-layer coordinate descent only
/// sees low-rank score signal when the input and output boundaries are thin
/// (an image INR has two inputs and one output), so a descent from the
/// identity often stalls in a local optimum. The first descent therefore
/// starts from the forward warm start, which is exact on permuted copies;
/// the remaining restarts descend from the identity with derived shuffle
/// seeds, and the best objective wins. Deterministic given seed.
inline AlignmentResult weight_matching(const WeightSpaceElement& x1, const WeightSpaceElement& x2,
                                       int max_passes = 50, std::uint64_t seed = 0,
                                       int restarts = 4) {
    if (x1.spec != x2.spec) throw ValidationError("weight_matching requires identical specs");
    if (max_passes < 1) throw ValidationError("max_passes must be >= 1");
    if (restarts < 1) throw ValidationError("restarts must be >= 1");

    const std::uint64_t base = derive_seed(seed, 0x4d415443); // "MATC"
    AlignmentResult best;
    for (int r = 0; r < restarts; ++r) {
        PermutationSequence init = identity_permutation(x1.spec);
        if (r == 0) {
            // descents never worsen their starting objective, so taking the
            // better of warm start and identity keeps the result at or below
            // the identity objective even with a single restart
            PermutationSequence warm = detail::forward_warm_start(x1, x2);
            if (alignment_objective(x1, x2, warm) < alignment_objective(x1, x2, init))
                init = std::move(warm);
        }
        AlignmentResult cur =
            detail::matching_descent(x1, x2, max_passes,
                                     derive_seed(base, static_cast<std::uint64_t>(r)),
                                     std::move(init));
        if (r == 0 || cur.objective < best.objective) best = std::move(cur);
        if (best.objective == 0.0) break;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Mixup
// ---------------------------------------------------------------------------

struct MixupSample {
    WeightSpaceElement element;
    std::vector<double> label; // empty when no labels were supplied
    double lambda = 0.0;
};

/// Entrywise convex combination lambda * x1 + (1 - lambda) * x2, computed in
/// double and rounded to float32; lambda in {0,1} recovers an endpoint to
/// within one rounding.
inline MixupSample mixup_naive(const WeightSpaceElement& x1, const WeightSpaceElement& x2,
                               double lambda) {
    if (x1.spec != x2.spec) throw ValidationError("mixup requires identical specs");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must be in [0,1]");
    MixupSample out;
    out.lambda = lambda;
    out.element = zero_element(x1.spec);
    for (int l = 0; l < x1.spec.num_layers(); ++l) {
        for (std::size_t i = 0; i < x1.weights[l].data.size(); ++i)
            out.element.weights[l].data[i] = static_cast<float>(
                lambda * static_cast<double>(x1.weights[l].data[i]) +
                (1.0 - lambda) * static_cast<double>(x2.weights[l].data[i]));
        for (std::size_t i = 0; i < x1.biases[l].size(); ++i)
            out.element.biases[l][i] =
                static_cast<float>(lambda * static_cast<double>(x1.biases[l][i]) +
                                   (1.0 - lambda) * static_cast<double>(x2.biases[l][i]));
    }
    return out;
}

/// Applies a uniformly random permutation sequence to x2 before the naive
/// mix. Deterministic under the seed.
inline MixupSample mixup_randperm(const WeightSpaceElement& x1, const WeightSpaceElement& x2,
                                  double lambda, std::uint64_t seed) {
    if (x1.spec != x2.spec) throw ValidationError("mixup requires identical specs");
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0x4d495850)); // "MIXP"
    const PermutationSequence p = sample_permutation_sequence(x2.spec, rng);
    return mixup_naive(x1, apply_permutation(x2, p), lambda);
}

struct MatchingConfig {
    int max_passes = 50;
    std::uint64_t seed = 0;
};

/// Aligns x2 onto x1 via weight matching, then mixes.
inline MixupSample mixup_aligned(const WeightSpaceElement& x1, const WeightSpaceElement& x2,
                                 double lambda, const MatchingConfig& cfg = {}) {
    const AlignmentResult align = weight_matching(x1, x2, cfg.max_passes, cfg.seed);
    return mixup_naive(x1, apply_permutation(x2, align.perms), lambda);
}

/// Convex combination of probability vectors, renormalized so the result
/// sums to exactly 1.0 in double (the largest entry absorbs the residual).
inline std::vector<double> mix_labels(const std::vector<double>& y1,
                                      const std::vector<double>& y2, double lambda) {
    if (y1.size() != y2.size()) throw ValidationError("label vectors differ in length");
    if (y1.empty()) throw ValidationError("label vectors must be non-empty");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must be in [0,1]");
    auto check = [](const std::vector<double>& y) {
        double s = 0.0;
        for (double v : y) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("labels must be non-negative and finite");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6)
            throw ValidationError("label vector must sum to 1 within 1e-6");
    };
    check(y1);
    check(y2);
    std::vector<double> r(y1.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = lambda * y1[i] + (1.0 - lambda) * y2[i];
    const std::size_t n = r.size();
    auto total = [&r] {
        double s = 0.0;
        for (double v : r) s += v;
        return s;
    };

    // Bulk correction into the largest entry keeps every coordinate
    // non-negative; it cannot close the sum exactly because the left-to-right
    // accumulation re-rounds after the adjusted entry.
    std::size_t k = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (r[i] > r[k]) k = i;
    r[k] += 1.0 - total();
    if (r[k] < 0.0) r[k] = 0.0;

    // Close the sum at the last summand: for prefix in [0, 2], 1 - prefix
    // rounds so that prefix + (1 - prefix) == 1 exactly (Sterbenz for
    // prefix >= 0.5, a sub-half-ulp error otherwise). If the prefix overshot
    // 1 while the last entry is ~0, shave ulps off its largest entry first.
    auto prefix_sum = [&r, n] {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) s += r[i];
        return s;
    };
    double prefix = prefix_sum();
    if (1.0 - prefix < 0.0 && n > 1) {
        std::size_t kp = 0;
        for (std::size_t i = 1; i + 1 < n; ++i)
            if (r[i] > r[kp]) kp = i;
        for (int rounds = 0; rounds < 1000 && 1.0 - prefix < 0.0; ++rounds) {
            r[kp] = std::nextafter(r[kp], 0.0);
            prefix = prefix_sum();
        }
    }
    r[n - 1] = 1.0 - prefix;
    if (total() != 1.0) throw NumericError("label renormalization did not converge");
    return r;
}

// ---------------------------------------------------------------------------
// Loss barrier
// ---------------------------------------------------------------------------

enum class AlignMode { none, random, matched };

inline const char* to_string(AlignMode m) {
    switch (m) {
        case AlignMode::none: return "none";
        case AlignMode::random: return "random";
        case AlignMode::matched: return "matched";
    }
    return "none";
}

inline AlignMode align_mode_from_string(const std::string& s) {
    if (s == "none") return AlignMode::none;
    if (s == "random") return AlignMode::random;
    if (s == "matched") return AlignMode::matched;
    throw ValidationError("unknown align mode: " + s);
}

struct BarrierProfile {
    std::vector<double> lambdas;
    std::vector<double> losses;
    double barrier = 0.0; // max over the grid of loss minus the endpoint chord
};

/// Task loss along the straight line between x1 and (optionally permuted) x2,
/// on the uniform lambda grid; lambda = 1 is the x1 endpoint. The barrier is
/// the maximum excess over the linear interpolation of the endpoint losses.
inline BarrierProfile loss_barrier(const WeightSpaceElement& x1, const WeightSpaceElement& x2,
                                   const SignalTask& task, int grid_size, AlignMode mode,
                                   std::uint64_t seed = 0, int max_passes = 50) {
    if (x1.spec != x2.spec) throw ValidationError("loss_barrier requires identical specs");
    if (grid_size < 3) throw ValidationError("grid_size must be >= 3");
    task.validate();

    WeightSpaceElement x2a = x2;
    if (mode == AlignMode::random) {
        std::mt19937_64 rng = make_rng(derive_seed(seed, 0x42415252)); // "BARR"
        x2a = apply_permutation(x2, sample_permutation_sequence(x2.spec, rng));
    } else if (mode == AlignMode::matched) {
        x2a = apply_permutation(x2, weight_matching(x1, x2, max_passes, seed).perms);
    }

    BarrierProfile profile;
    profile.lambdas.resize(grid_size);
    profile.losses.resize(grid_size);
    for (int i = 0; i < grid_size; ++i) {
        const double lambda = static_cast<double>(i) / static_cast<double>(grid_size - 1);
        profile.lambdas[i] = lambda;
        profile.losses[i] = task_loss(mixup_naive(x1, x2a, lambda).element, task);
    }
    const double l0 = profile.losses.front();
    const double l1 = profile.losses.back();
    profile.barrier = 0.0;
    for (int i = 0; i < grid_size; ++i) {
        // (1-l)*l0 + l*l1 can round one ulp away from a flat profile, which
        // would report a spurious positive barrier for identical endpoints
        const double chord =
            l0 == l1 ? l0 : (1.0 - profile.lambdas[i]) * l0 + profile.lambdas[i] * l1;
        profile.barrier = std::max(profile.barrier, profile.losses[i] - chord);
    }
    return profile;
}

} // namespace wsaug
