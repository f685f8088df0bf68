#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "wsaug/core.hpp"

namespace wsaug {

// Procedural signal corpus: four smooth 2-D image classes plus analytic 3-D
// SDFs. Every signal is band-limited on purpose so a width-32 SIREN can fit
// it to high PSNR within a 1000-step budget.

// ---------------------------------------------------------------------------
// Image grids
// ---------------------------------------------------------------------------

// Grid convention: pixel (r,c) of an HxW grid maps to
//   x = -1 + 2c/(W-1),  y = -1 + 2r/(H-1)
// and occupies sample row r*W + c of the task's input matrix.

inline double grid_coord(int index, int extent) {
    if (extent < 2) throw ValidationError("grid extent must be >= 2");
    return -1.0 + 2.0 * static_cast<double>(index) / static_cast<double>(extent - 1);
}

namespace detail {

template <class Fn>
MatrixF grid_from_fn(int h, int w, Fn&& fn) {
    if (h < 2 || w < 2) throw ValidationError("grid must be at least 2x2");
    MatrixF g(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double v = fn(grid_coord(c, w), grid_coord(r, h));
            g(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    return g;
}

} // namespace detail

namespace detail {

inline void check_level(double base, double amp) {
    if (!std::isfinite(base) || !std::isfinite(amp))
        throw ValidationError("base and amp must be finite");
}

} // namespace detail

/// Smooth checkerboard: a product of sines with `cells` half-cycles per axis,
/// offset by (offset_x, offset_y) and mapped to base +- amp.
inline MatrixF checkerboard_grid(int h, int w, int cells, double offset_x = 0.0,
                                 double offset_y = 0.0, double base = 0.33, double amp = 0.16) {
    if (cells < 1) throw ValidationError("cells must be >= 1");
    detail::check_level(base, amp);
    const double k = std::numbers::pi * cells / 2.0;
    return detail::grid_from_fn(h, w, [&](double x, double y) {
        return base + amp * std::sin(k * (x - offset_x)) * std::sin(k * (y - offset_y));
    });
}

/// Gaussian intensity blob of height amp over a base level, centered at
/// (cx, cy).
inline MatrixF radial_gradient_grid(int h, int w, double cx = 0.0, double cy = 0.0,
                                    double sigma = 0.5, double base = 0.33, double amp = 0.16) {
    if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
    detail::check_level(base, amp);
    return detail::grid_from_fn(h, w, [&](double x, double y) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        return base + amp * std::exp(-d2 / (2.0 * sigma * sigma));
    });
}

/// Sinusoidal stripes: frequency in half-cycles across the domain, direction
/// given by angle, mapped to base +- amp.
inline MatrixF stripes_grid(int h, int w, double freq = 2.0, double angle = 0.0,
                            double phase = 0.0, double base = 0.33, double amp = 0.16) {
    if (!(freq > 0.0)) throw ValidationError("freq must be positive");
    detail::check_level(base, amp);
    const double ux = std::cos(angle), uy = std::sin(angle);
    return detail::grid_from_fn(h, w, [&](double x, double y) {
        return base + amp * std::sin(std::numbers::pi * freq * (ux * x + uy * y) + phase);
    });
}

/// Disk of the given radius, amp brighter than the base level, with a
/// tanh-smoothed edge.
inline MatrixF disk_grid(int h, int w, double cx = 0.0, double cy = 0.0, double radius = 0.5,
                         double edge = 0.3, double base = 0.33, double amp = 0.16) {
    if (!(radius > 0.0) || !(edge > 0.0))
        throw ValidationError("radius and edge must be positive");
    detail::check_level(base, amp);
    return detail::grid_from_fn(h, w, [&](double x, double y) {
        const double d = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
        return base + amp * (0.5 - 0.5 * std::tanh((d - radius) / edge));
    });
}

/// Wraps an image grid as a regression task over the normalized [-1,1]^2
/// coordinate grid.
inline SignalTask image_task(const MatrixF& grid) {
    const int h = grid.rows, w = grid.cols;
    if (h < 2 || w < 2) throw ValidationError("grid must be at least 2x2");
    SignalTask task;
    task.kind = SignalKind::image2d;
    task.grid_h = h;
    task.grid_w = w;
    task.inputs = MatrixF(h * w, 2);
    task.targets = MatrixF(h * w, 1);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int s = r * w + c;
            task.inputs(s, 0) = static_cast<float>(grid_coord(c, w));
            task.inputs(s, 1) = static_cast<float>(grid_coord(r, h));
            task.targets(s, 0) = grid(r, c);
        }
    task.validate();
    return task;
}

/// Reshapes N x 1 predictions over the image grid back to an HxW grid.
inline MatrixF grid_from_flat(const MatrixF& flat, int h, int w) {
    if (flat.rows != h * w || flat.cols != 1)
        throw ValidationError("flat values do not match the grid shape");
    MatrixF g(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) g(r, c) = flat(r * w + c, 0);
    return g;
}

// ---------------------------------------------------------------------------
// Signal classes (the generated corpus)
// ---------------------------------------------------------------------------

enum class SignalClass { checkerboard, radial_gradient, stripes, disk };

inline const std::vector<std::string>& signal_class_names() {
    static const std::vector<std::string> names = {"checkerboard", "radial_gradient", "stripes",
                                                   "disk"};
    return names;
}

inline std::string to_string(SignalClass c) {
    return signal_class_names()[static_cast<int>(c)];
}

inline SignalClass signal_class_from_string(const std::string& s) {
    const auto& names = signal_class_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == s) return static_cast<SignalClass>(i);
    throw ValidationError("unknown signal class: " + s);
}

/// Draws parameters from the seed and renders the signal. The base level and
/// amplitude are drawn first (shared across classes), then the class-specific
/// parameters, in the order listed. Ranges keep every instance band-limited
/// enough to fit to PSNR >= 40 within the 1000-step budget.
inline MatrixF sample_signal_grid(SignalClass cls, int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0x534947)); // "SIG"
    const double base = uniform_real(rng, 0.28, 0.38);
    const double amp = uniform_real(rng, 0.12, 0.20);
    switch (cls) {
        case SignalClass::checkerboard: {
            const int cells = uniform_int(rng, 1, 3);
            const double ox = uniform_real(rng, -0.25, 0.25);
            const double oy = uniform_real(rng, -0.25, 0.25);
            return checkerboard_grid(h, w, cells, ox, oy, base, amp);
        }
        case SignalClass::radial_gradient: {
            const double cx = uniform_real(rng, -0.4, 0.4);
            const double cy = uniform_real(rng, -0.4, 0.4);
            const double sigma = uniform_real(rng, 0.3, 0.7);
            return radial_gradient_grid(h, w, cx, cy, sigma, base, amp);
        }
        case SignalClass::stripes: {
            const double freq = uniform_real(rng, 1.0, 2.0);
            const double angle = uniform_real(rng, 0.0, std::numbers::pi);
            const double phase = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
            return stripes_grid(h, w, freq, angle, phase, base, amp);
        }
        case SignalClass::disk: {
            const double cx = uniform_real(rng, -0.3, 0.3);
            const double cy = uniform_real(rng, -0.3, 0.3);
            const double radius = uniform_real(rng, 0.35, 0.6);
            const double edge = uniform_real(rng, 0.25, 0.4);
            return disk_grid(h, w, cx, cy, radius, edge, base, amp);
        }
    }
    throw ValidationError("unknown signal class");
}

// ---------------------------------------------------------------------------
// SDF tasks
// ---------------------------------------------------------------------------

inline double sphere_sdf_value(double x, double y, double z, double radius) {
    return std::sqrt(x * x + y * y + z * z) - radius;
}

inline double box_sdf_value(double x, double y, double z, double bx, double by, double bz) {
    const double qx = std::abs(x) - bx, qy = std::abs(y) - by, qz = std::abs(z) - bz;
    const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0), oz = std::max(qz, 0.0);
    const double outside = std::sqrt(ox * ox + oy * oy + oz * oz);
    const double inside = std::min(std::max(qx, std::max(qy, qz)), 0.0);
    return outside + inside;
}

/// Point budget and placement for SDF regression: near_count points sampled
/// as surface point + isotropic Gaussian jitter of std band, uniform_count
/// points uniform over [-domain, domain]^3.
struct SdfSampling {
    int near_count = 3072;
    int uniform_count = 1024;
    double band = 0.1;
    double domain = 1.25;

    void validate() const {
        if (near_count < 0 || uniform_count < 0)
            throw ValidationError("point counts must be >= 0");
        if (near_count + uniform_count < 1) throw ValidationError("need at least one point");
        if (!(band > 0.0)) throw ValidationError("band must be positive");
        if (!(domain > 0.0)) throw ValidationError("domain must be positive");
    }
};

namespace detail {

template <class Surface, class Sdf>
SignalTask sdf_task_from(const SdfSampling& s, std::uint64_t seed, Surface&& surface_point,
                         Sdf&& sdf) {
    s.validate();
    const int n = s.near_count + s.uniform_count;
    SignalTask task;
    task.kind = SignalKind::sdf3d;
    task.inputs = MatrixF(n, 3);
    task.targets = MatrixF(n, 1);
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0x534446)); // "SDF"
    std::normal_distribution<double> gauss(0.0, 1.0);
    double p[3];
    for (int i = 0; i < n; ++i) {
        if (i < s.near_count) {
            surface_point(rng, p);
            for (int k = 0; k < 3; ++k) p[k] += s.band * gauss(rng);
        } else {
            for (int k = 0; k < 3; ++k) p[k] = uniform_real(rng, -s.domain, s.domain);
        }
        for (int k = 0; k < 3; ++k) task.inputs(i, k) = static_cast<float>(p[k]);
        task.targets(i, 0) = static_cast<float>(
            sdf(static_cast<double>(task.inputs(i, 0)), static_cast<double>(task.inputs(i, 1)),
                static_cast<double>(task.inputs(i, 2))));
    }
    task.validate();
    return task;
}

} // namespace detail

/// Regression task for the SDF of an origin-centered sphere.
inline SignalTask sphere_sdf_task(double radius, const SdfSampling& s, std::uint64_t seed) {
    if (!(radius > 0.0)) throw ValidationError("radius must be positive");
    std::normal_distribution<double> gauss(0.0, 1.0);
    return detail::sdf_task_from(
        s, seed,
        [&](std::mt19937_64& rng, double* p) {
            double norm = 0.0;
            do {
                for (int k = 0; k < 3; ++k) p[k] = gauss(rng);
                norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            } while (norm < 1e-9);
            for (int k = 0; k < 3; ++k) p[k] *= radius / norm;
        },
        [&](double x, double y, double z) { return sphere_sdf_value(x, y, z, radius); });
}

/// Regression task for the SDF of an origin-centered axis-aligned box with
/// the given half extents; surface points are drawn face-area weighted.
inline SignalTask box_sdf_task(double bx, double by, double bz, const SdfSampling& s,
                               std::uint64_t seed) {
    if (!(bx > 0.0 && by > 0.0 && bz > 0.0))
        throw ValidationError("box half extents must be positive");
    const double areas[3] = {by * bz, bx * bz, bx * by}; // faces normal to x, y, z
    const double total = areas[0] + areas[1] + areas[2];
    return detail::sdf_task_from(
        s, seed,
        [&](std::mt19937_64& rng, double* p) {
            const double u = uniform_real(rng, 0.0, total);
            const int axis = u < areas[0] ? 0 : (u < areas[0] + areas[1] ? 1 : 2);
            const double half[3] = {bx, by, bz};
            p[0] = uniform_real(rng, -bx, bx);
            p[1] = uniform_real(rng, -by, by);
            p[2] = uniform_real(rng, -bz, bz);
            p[axis] = uniform_int(rng, 0, 1) ? half[axis] : -half[axis];
        },
        [&](double x, double y, double z) { return box_sdf_value(x, y, z, bx, by, bz); });
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// Loads an SDF point cloud from CSV with columns x,y,z,sdf. A first line
/// that does not parse as numbers is treated as a header.
inline SignalTask load_sdf_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV: " + path);
    std::vector<float> values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<float> row;
        bool numeric = true;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                const float v = std::stof(cell, &used);
                while (used < cell.size() &&
                       (cell[used] == ' ' || cell[used] == '\r' || cell[used] == '\t'))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (lineno == 1) continue; // header
            throw ParseError("CSV line " + std::to_string(lineno) + " is not numeric", 0);
        }
        if (row.size() != 4)
            throw ParseError("CSV line " + std::to_string(lineno) + " has " +
                                 std::to_string(row.size()) + " columns, expected 4 (x,y,z,sdf)",
                             0);
        values.insert(values.end(), row.begin(), row.end());
    }
    const int n = static_cast<int>(values.size() / 4);
    if (n == 0) throw ParseError("CSV has no data rows", 0);
    SignalTask task;
    task.kind = SignalKind::sdf3d;
    task.inputs = MatrixF(n, 3);
    task.targets = MatrixF(n, 1);
    for (int i = 0; i < n; ++i) {
        task.inputs(i, 0) = values[4 * i + 0];
        task.inputs(i, 1) = values[4 * i + 1];
        task.inputs(i, 2) = values[4 * i + 2];
        task.targets(i, 0) = values[4 * i + 3];
    }
    task.validate();
    return task;
}

inline void save_sdf_csv(const std::string& path, const SignalTask& task) {
    if (task.kind != SignalKind::sdf3d || task.inputs.cols != 3 || task.targets.cols != 1)
        throw ValidationError("save_sdf_csv expects a 3-D SDF task");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write CSV: " + path);
    out << std::setprecision(std::numeric_limits<float>::max_digits10);
    out << "x,y,z,sdf\n";
    for (int i = 0; i < task.inputs.rows; ++i)
        out << task.inputs(i, 0) << ',' << task.inputs(i, 1) << ',' << task.inputs(i, 2) << ','
            << task.targets(i, 0) << '\n';
    if (!out) throw IoError("failed writing CSV: " + path);
}

} // namespace wsaug
