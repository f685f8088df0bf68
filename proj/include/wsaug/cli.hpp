#pragma once

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wsaug/alignmix.hpp"
#include "wsaug/augment.hpp"
#include "wsaug/core.hpp"
#include "wsaug/fit.hpp"
#include "wsaug/harness.hpp"
#include "wsaug/pgm.hpp"
#include "wsaug/pipeline_io.hpp"
#include "wsaug/serialize.hpp"
#include "wsaug/signals.hpp"

namespace wsaug {

// Command-line front end. Exit codes: 0 success, 1 validation/usage error,
// 2 numeric failure (divergence, non-finite values, failed verification).

namespace cli_detail {

inline std::vector<double> parse_csv_doubles(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::istringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw ValidationError(what + ": '" + cell + "' is not a number");
        }
    }
    if (out.empty()) throw ValidationError(what + ": empty list");
    return out;
}

inline std::vector<int> parse_csv_ints(const std::string& s, const std::string& what) {
    std::vector<int> out;
    for (double v : parse_csv_doubles(s, what)) {
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v) throw ValidationError(what + " must be integers");
        out.push_back(i);
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Shared task-source flags for fit and barrier: a procedural class, a PGM
/// image, an analytic SDF, or an SDF point CSV.
struct TaskOptions {
    std::string signal;
    std::uint64_t signal_seed = 0;
    int grid = 32;
    std::string image;
    std::string sdf;
    double radius = 1.0;
    std::string extent = "0.6,0.6,0.6";
    std::string sdf_csv;
    int sdf_near = 3072;
    int sdf_uniform = 1024;
    double sdf_band = 0.1;
    double sdf_domain = 1.25;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--signal", signal,
                        "procedural image class: checkerboard, radial_gradient, stripes, disk");
        cmd->add_option("--signal-seed", signal_seed, "seed for the signal's parameter draw");
        cmd->add_option("--grid", grid, "image grid size (pixels per side)");
        cmd->add_option("--image", image, "target image (PGM P5, maxval 255)");
        cmd->add_option("--sdf", sdf, "analytic SDF: sphere or box");
        cmd->add_option("--radius", radius, "sphere radius");
        cmd->add_option("--extent", extent, "box half extents hx,hy,hz");
        cmd->add_option("--sdf-csv", sdf_csv, "SDF point cloud CSV with columns x,y,z,sdf");
        cmd->add_option("--sdf-near", sdf_near, "near-surface sample count");
        cmd->add_option("--sdf-uniform", sdf_uniform, "uniform sample count");
        cmd->add_option("--sdf-band", sdf_band, "near-surface jitter std");
        cmd->add_option("--sdf-domain", sdf_domain, "uniform sampling half-extent");
    }

    SignalTask build() const {
        const int sources = (!signal.empty()) + (!image.empty()) + (!sdf.empty()) +
                            (!sdf_csv.empty());
        if (sources != 1)
            throw ValidationError(
                "choose exactly one task source: --signal, --image, --sdf, or --sdf-csv");
        if (!signal.empty())
            return image_task(
                sample_signal_grid(signal_class_from_string(signal), grid, grid, signal_seed));
        if (!image.empty()) return image_task(read_pgm(image));
        if (!sdf_csv.empty()) return load_sdf_csv(sdf_csv);
        SdfSampling s;
        s.near_count = sdf_near;
        s.uniform_count = sdf_uniform;
        s.band = sdf_band;
        s.domain = sdf_domain;
        if (sdf == "sphere") return sphere_sdf_task(radius, s, signal_seed);
        if (sdf == "box") {
            const std::vector<double> h = parse_csv_doubles(extent, "--extent");
            if (h.size() != 3) throw ValidationError("--extent needs three values");
            return box_sdf_task(h[0], h[1], h[2], s, signal_seed);
        }
        throw ValidationError("unknown --sdf kind: " + sdf);
    }

    bool is_image() const { return !signal.empty() || !image.empty(); }
};

inline nlohmann::json alignment_json(const AlignmentResult& r) {
    return {{"perms", r.perms.perms},
            {"objective", r.objective},
            {"iterations", r.iterations},
            {"converged", r.converged}};
}

inline std::vector<double> load_label_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open labels: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("labels: ") + e.what(), e.byte);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("labels: ") + e.what(), 1);
    }
    if (!j.is_array()) throw ValidationError("labels must be a JSON array: " + path);
    std::vector<double> y;
    for (const auto& v : j) {
        if (!v.is_number()) throw ValidationError("labels must be numbers: " + path);
        y.push_back(v.get<double>());
    }
    return y;
}

} // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
    using cli_detail::format_double;
    CLI::App app{"wsaug: weight-space augmentation toolkit for MLP/SIREN INRs"};
    app.require_subcommand(1);

    // fit ------------------------------------------------------------------
    auto* fit_cmd = app.add_subcommand("fit", "fit an INR to a signal and write a WSE file");
    cli_detail::TaskOptions fit_task;
    fit_task.add_flags(fit_cmd);
    std::string fit_dims, fit_act = "sine", fit_opt = "adam", fit_out, fit_report_path;
    double fit_lr = 5e-4, fit_wd = 0.01, fit_omega0 = 30.0, fit_early = 0.0;
    int fit_steps = 1000;
    std::uint64_t fit_seed = 0;
    fit_cmd->add_option("--dims", fit_dims, "layer widths, e.g. 2,32,32,1 (default per task)");
    fit_cmd->add_option("--activation", fit_act, "hidden activation: sine or relu");
    fit_cmd->add_option("--opt", fit_opt, "optimizer: adam or adamw");
    fit_cmd->add_option("--lr", fit_lr, "learning rate");
    fit_cmd->add_option("--weight-decay", fit_wd, "adamw decoupled weight decay");
    fit_cmd->add_option("--steps", fit_steps, "max optimizer steps");
    auto* fit_early_opt =
        fit_cmd->add_option("--early-stop-psnr", fit_early, "stop once training PSNR reaches this");
    auto* fit_omega_opt =
        fit_cmd->add_option("--omega0", fit_omega0, "SIREN frequency factor (default 12 image, 4 sdf)");
    fit_cmd->add_option("--seed", fit_seed, "initialization seed");
    fit_cmd->add_option("--out", fit_out, "output WSE path")->required();
    fit_cmd->add_option("--report", fit_report_path, "also write the fit report JSON here");

    // gen-dataset ----------------------------------------------------------
    auto* gen_cmd = app.add_subcommand("gen-dataset", "fit the procedural corpus and a manifest");
    GenConfig gen_cfg;
    std::string gen_dims;
    gen_cmd->add_option("--out", gen_cfg.out_dir, "output directory")->required();
    gen_cmd->add_option("--signals-per-class", gen_cfg.signals_per_class, "signals per class");
    gen_cmd->add_option("--views", gen_cfg.views, "independently fitted views per signal");
    gen_cmd->add_option("--grid", gen_cfg.grid, "image grid size");
    gen_cmd->add_option("--dims", gen_dims, "layer widths, e.g. 2,32,32,1");
    gen_cmd->add_option("--omega0", gen_cfg.omega0, "SIREN frequency factor");
    gen_cmd->add_option("--lr", gen_cfg.opt.learning_rate, "learning rate");
    gen_cmd->add_option("--steps", gen_cfg.opt.steps, "max optimizer steps per fit");
    double gen_early = 40.0;
    gen_cmd->add_option("--early-stop-psnr", gen_early, "per-fit early-stop PSNR (0 disables)");
    gen_cmd->add_option("--seed", gen_cfg.base_seed, "base seed");
    gen_cmd->add_option("--threads", gen_cfg.threads, "worker threads (0 = auto)");

    // augment ----------------------------------------------------------------
    auto* aug_cmd = app.add_subcommand("augment", "apply a pipeline or a single augmentation");
    std::string aug_in, aug_out, aug_pipeline, aug_kind, aug_offset;
    std::uint64_t aug_seed = 0, aug_sample_id = 0, aug_epoch = 0;
    double aug_angle = 0.0, aug_scale = 1.0, aug_sigma = 0.02, aug_pdrop = 0.05, aug_q = 0.1;
    double aug_cmax = 4.0;
    int aug_kmax = 2;
    aug_cmd->add_option("--in", aug_in, "input WSE")->required();
    aug_cmd->add_option("--out", aug_out, "output WSE")->required();
    aug_cmd->add_option("--pipeline", aug_pipeline, "pipeline config JSON");
    aug_cmd->add_option("--sample-id", aug_sample_id, "pipeline sample id");
    aug_cmd->add_option("--epoch", aug_epoch, "pipeline epoch");
    aug_cmd->add_option("--kind", aug_kind, "single augmentation kind");
    auto* aug_angle_opt =
        aug_cmd->add_option("--angle", aug_angle, "rotation angle in degrees (2-D rotate_input)");
    auto* aug_scale_opt = aug_cmd->add_option("--scale", aug_scale, "scale_input factor");
    auto* aug_offset_opt =
        aug_cmd->add_option("--offset", aug_offset, "translate_input offset t1,t2,...");
    aug_cmd->add_option("--sigma-rel", aug_sigma, "gaussian_noise relative std");
    aug_cmd->add_option("--p-drop", aug_pdrop, "dropout probability");
    aug_cmd->add_option("--q", aug_q, "quantile_dropout quantile");
    aug_cmd->add_option("--c-max", aug_cmax, "relu_scaling max scale");
    aug_cmd->add_option("--k-max", aug_kmax, "siren_bias max |k|");
    aug_cmd->add_option("--seed", aug_seed, "seed for stochastic kinds / the pipeline");

    // align ------------------------------------------------------------------
    auto* align_cmd = app.add_subcommand("align", "weight matching between two WSE files");
    std::string align_a, align_b, align_out;
    int align_passes = 50;
    std::uint64_t align_seed = 0;
    align_cmd->add_option("--a", align_a, "reference WSE")->required();
    align_cmd->add_option("--b", align_b, "WSE to align onto --a")->required();
    align_cmd->add_option("--out", align_out, "write the alignment JSON here (default stdout)");
    align_cmd->add_option("--max-passes", align_passes, "coordinate-descent pass limit");
    align_cmd->add_option("--seed", align_seed, "layer-order shuffle seed");

    // mixup ------------------------------------------------------------------
    auto* mix_cmd = app.add_subcommand("mixup", "mix two WSE files");
    std::string mix_mode = "naive", mix_a, mix_b, mix_out, mix_la, mix_lb, mix_lout;
    double mix_lambda = 0.5;
    int mix_passes = 50;
    std::uint64_t mix_seed = 0;
    mix_cmd->add_option("--mode", mix_mode, "naive, randperm, or aligned");
    mix_cmd->add_option("--a", mix_a, "first WSE (the lambda endpoint)")->required();
    mix_cmd->add_option("--b", mix_b, "second WSE")->required();
    auto* mix_lambda_opt =
        mix_cmd->add_option("--lambda", mix_lambda, "mixing weight (default: U(0,1) from --seed)");
    mix_cmd->add_option("--out", mix_out, "output WSE")->required();
    mix_cmd->add_option("--labels-a", mix_la, "JSON label vector for --a");
    mix_cmd->add_option("--labels-b", mix_lb, "JSON label vector for --b");
    mix_cmd->add_option("--labels-out", mix_lout, "write the mixed label vector here");
    mix_cmd->add_option("--max-passes", mix_passes, "weight-matching pass limit (aligned mode)");
    mix_cmd->add_option("--seed", mix_seed, "seed for randperm / lambda sampling");

    // barrier ----------------------------------------------------------------
    auto* bar_cmd = app.add_subcommand("barrier", "loss along the interpolation path");
    cli_detail::TaskOptions bar_task;
    bar_task.add_flags(bar_cmd);
    std::string bar_a, bar_b, bar_align = "none", bar_out;
    int bar_grid_size = 11, bar_passes = 50;
    std::uint64_t bar_seed = 0;
    bar_cmd->add_option("--a", bar_a, "first WSE")->required();
    bar_cmd->add_option("--b", bar_b, "second WSE")->required();
    bar_cmd->add_option("--align", bar_align, "none, random, or matched");
    bar_cmd->add_option("--grid-size", bar_grid_size, "lambda grid size (>= 3)");
    bar_cmd->add_option("--out", bar_out, "output CSV path (header lambda,loss)")->required();
    bar_cmd->add_option("--max-passes", bar_passes, "weight-matching pass limit");
    bar_cmd->add_option("--seed", bar_seed, "seed for random/matched alignment");

    // verify -----------------------------------------------------------------
    auto* ver_cmd = app.add_subcommand("verify", "check function preservation / pullback laws");
    std::string ver_kind = "all", ver_in, ver_manifest;
    int ver_points = 1024, ver_limit = 0;
    double ver_tol = 0.0;
    std::uint64_t ver_seed = 0;
    ver_cmd->add_option("--kind", ver_kind, "augmentation kind, or 'all' verifiable kinds");
    ver_cmd->add_option("--in", ver_in, "WSE file to verify");
    ver_cmd->add_option("--manifest", ver_manifest, "verify every entry of a dataset manifest");
    ver_cmd->add_option("--limit", ver_limit, "verify at most this many manifest entries");
    ver_cmd->add_option("--points", ver_points, "domain points per check");
    auto* ver_tol_opt = ver_cmd->add_option("--tol", ver_tol, "tolerance (default per kind)");
    ver_cmd->add_option("--seed", ver_seed, "transform sampling seed");

    // render -----------------------------------------------------------------
    auto* ren_cmd = app.add_subcommand("render", "render a 2-D INR to a PGM image");
    std::string ren_in, ren_out;
    int ren_w = 32, ren_h = 0;
    ren_cmd->add_option("--in", ren_in, "input WSE")->required();
    ren_cmd->add_option("--out", ren_out, "output PGM")->required();
    ren_cmd->add_option("--width", ren_w, "render width");
    ren_cmd->add_option("--height", ren_h, "render height (default: width)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*fit_cmd) {
            const SignalTask task = fit_task.build();
            std::vector<int> dims;
            if (!fit_dims.empty()) {
                dims = cli_detail::parse_csv_ints(fit_dims, "--dims");
            } else if (fit_task.is_image()) {
                dims = {2, 32, 32, 1};
            } else {
                dims = {3, 32, 32, 32, 32, 1};
            }
            const Activation hidden = activation_from_string(fit_act);
            if (hidden == Activation::identity)
                throw ValidationError("hidden activation must be sine or relu");
            const NetworkSpec spec = make_spec(dims, hidden);
            OptimizerConfig opt;
            opt.kind = opt_kind_from_string(fit_opt);
            opt.learning_rate = fit_lr;
            opt.weight_decay = fit_wd;
            opt.steps = fit_steps;
            if (fit_early_opt->count()) opt.early_stop_psnr = fit_early;
            if (!fit_omega_opt->count()) fit_omega0 = fit_task.is_image() ? 12.0 : 4.0;
            auto [elem, report] = fit_inr(spec, task, opt, fit_seed, fit_omega0);
            save_wse(fit_out, elem, hidden == Activation::sine
                                        ? std::optional<double>(fit_omega0)
                                        : std::nullopt);
            const nlohmann::json rj = detail::fit_report_json(report);
            std::cout << rj.dump() << "\n";
            if (!fit_report_path.empty())
                detail::atomic_write_text(fit_report_path, rj.dump(2) + "\n");
            return 0;
        }

        if (*gen_cmd) {
            if (!gen_dims.empty()) gen_cfg.dims = cli_detail::parse_csv_ints(gen_dims, "--dims");
            if (gen_early > 0.0)
                gen_cfg.opt.early_stop_psnr = gen_early;
            else
                gen_cfg.opt.early_stop_psnr.reset();
            const DatasetManifest manifest = gen_dataset(gen_cfg);
            int failures = 0;
            for (const auto& e : manifest.entries) failures += e.failed ? 1 : 0;
            std::cout << "entries " << manifest.entries.size() << " failures " << failures
                      << "\n";
            if (failures > 0) {
                for (const auto& e : manifest.entries)
                    if (e.failed)
                        std::cerr << "failed: " << e.wse_path << ": " << e.error << "\n";
                return 2;
            }
            return 0;
        }

        if (*aug_cmd) {
            const LoadedWse loaded = load_wse(aug_in);
            WeightSpaceElement out;
            if (!aug_pipeline.empty()) {
                if (!aug_kind.empty())
                    throw ValidationError("use either --pipeline or --kind, not both");
                const AugmentationPipeline pipeline = load_pipeline(aug_pipeline);
                out = apply_pipeline(loaded.elem, pipeline, aug_sample_id, aug_epoch, aug_seed);
            } else if (!aug_kind.empty()) {
                const AugKind kind = aug_kind_from_string(aug_kind);
                if (kind == AugKind::rotate_input && aug_angle_opt->count()) {
                    if (loaded.elem.spec.input_dim() != 2)
                        throw ValidationError("--angle requires a 2-D input element");
                    const double rad = aug_angle * std::numbers::pi / 180.0;
                    MatrixD r(2, 2);
                    r(0, 0) = std::cos(rad);
                    r(0, 1) = -std::sin(rad);
                    r(1, 0) = std::sin(rad);
                    r(1, 1) = std::cos(rad);
                    out = rotate_input(loaded.elem, r);
                } else if (kind == AugKind::scale_input && aug_scale_opt->count()) {
                    out = scale_input(loaded.elem, aug_scale);
                } else if (kind == AugKind::translate_input && aug_offset_opt->count()) {
                    out = translate_input(loaded.elem,
                                          cli_detail::parse_csv_doubles(aug_offset, "--offset"));
                } else {
                    AugmentationDescriptor d;
                    d.kind = kind;
                    d.params.sigma_rel = aug_sigma;
                    d.params.p_drop = aug_pdrop;
                    d.params.q = aug_q;
                    d.params.c_max = aug_cmax;
                    d.params.k_max = aug_kmax;
                    d.params.scale_min = aug_scale;
                    d.params.scale_max = aug_scale;
                    std::mt19937_64 rng = make_rng(derive_seed(aug_seed, 0x434c49)); // "CLI"
                    out = sample_augmentation(loaded.elem, d, rng).element;
                }
            } else {
                throw ValidationError("augment needs --pipeline or --kind");
            }
            save_wse(aug_out, out, loaded.omega0);
            return 0;
        }

        if (*align_cmd) {
            const LoadedWse a = load_wse(align_a), b = load_wse(align_b);
            const AlignmentResult result =
                weight_matching(a.elem, b.elem, align_passes, align_seed);
            const std::string text = cli_detail::alignment_json(result).dump(2) + "\n";
            if (align_out.empty())
                std::cout << text;
            else
                detail::atomic_write_text(align_out, text);
            return 0;
        }

        if (*mix_cmd) {
            const LoadedWse a = load_wse(mix_a), b = load_wse(mix_b);
            double lambda = mix_lambda;
            if (!mix_lambda_opt->count()) {
                std::mt19937_64 rng = make_rng(derive_seed(mix_seed, 0x4c414d)); // "LAM"
                lambda = uniform_real(rng, 0.0, 1.0);
            }
            MixupSample sample;
            if (mix_mode == "naive") {
                sample = mixup_naive(a.elem, b.elem, lambda);
            } else if (mix_mode == "randperm") {
                sample = mixup_randperm(a.elem, b.elem, lambda, mix_seed);
            } else if (mix_mode == "aligned") {
                MatchingConfig cfg;
                cfg.max_passes = mix_passes;
                cfg.seed = mix_seed;
                sample = mixup_aligned(a.elem, b.elem, lambda, cfg);
            } else {
                throw ValidationError("unknown mixup mode: " + mix_mode);
            }
            save_wse(mix_out, sample.element, a.omega0);
            std::cout << "lambda " << format_double(lambda) << "\n";
            if (!mix_la.empty() || !mix_lb.empty()) {
                if (mix_la.empty() || mix_lb.empty() || mix_lout.empty())
                    throw ValidationError(
                        "label mixing needs --labels-a, --labels-b, and --labels-out");
                const std::vector<double> y = mix_labels(cli_detail::load_label_json(mix_la),
                                                         cli_detail::load_label_json(mix_lb),
                                                         lambda);
                detail::atomic_write_text(mix_lout, nlohmann::json(y).dump() + "\n");
            }
            return 0;
        }

        if (*bar_cmd) {
            const LoadedWse a = load_wse(bar_a), b = load_wse(bar_b);
            const SignalTask task = bar_task.build();
            const BarrierProfile profile =
                loss_barrier(a.elem, b.elem, task, bar_grid_size,
                             align_mode_from_string(bar_align), bar_seed, bar_passes);
            std::string csv = "lambda,loss\n";
            for (std::size_t i = 0; i < profile.lambdas.size(); ++i)
                csv += format_double(profile.lambdas[i]) + "," +
                       format_double(profile.losses[i]) + "\n";
            detail::atomic_write_text(bar_out, csv);
            std::cout << "barrier " << format_double(profile.barrier) << "\n";
            return 0;
        }

        if (*ver_cmd) {
            if (ver_in.empty() == ver_manifest.empty())
                throw ValidationError("verify needs exactly one of --in or --manifest");
            std::vector<std::string> paths;
            if (!ver_in.empty()) {
                paths.push_back(ver_in);
            } else {
                const DatasetManifest m = load_manifest(ver_manifest);
                const auto dir = std::filesystem::path(ver_manifest).parent_path();
                for (const auto& e : m.entries) {
                    if (e.failed) continue;
                    paths.push_back((dir / e.wse_path).string());
                    if (ver_limit > 0 && static_cast<int>(paths.size()) >= ver_limit) break;
                }
            }
            bool all_pass = true;
            for (std::size_t pi = 0; pi < paths.size(); ++pi) {
                const LoadedWse loaded = load_wse(paths[pi]);
                std::vector<VerificationReport> reports;
                const std::uint64_t seed = derive_seed(ver_seed, pi);
                if (ver_kind == "all") {
                    reports = verify_suite(loaded.elem, ver_points, seed);
                } else {
                    AugmentationDescriptor d;
                    d.kind = aug_kind_from_string(ver_kind);
                    const double tol =
                        ver_tol_opt->count()
                            ? ver_tol
                            : default_verify_tolerance(d.kind, loaded.elem.spec);
                    reports.push_back(
                        verify_preservation(loaded.elem, d, ver_points, tol, seed));
                }
                for (const auto& r : reports) {
                    nlohmann::json j = verification_report_json(r);
                    j["file"] = paths[pi];
                    std::cout << j.dump() << "\n";
                    all_pass = all_pass && r.pass;
                }
            }
            return all_pass ? 0 : 2;
        }

        if (*ren_cmd) {
            const LoadedWse loaded = load_wse(ren_in);
            if (ren_h == 0) ren_h = ren_w;
            render_inr(loaded.elem, ren_h, ren_w, ren_out);
            return 0;
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace wsaug
