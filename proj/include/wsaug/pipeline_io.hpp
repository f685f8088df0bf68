#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "wsaug/augment.hpp"
#include "wsaug/core.hpp"

namespace wsaug {

// JSON round-trip for augmentation pipelines. The on-disk shape is a list of
// descriptors: [{"kind": "...", "p": 0.5, "params": {...}}, ...]. Only the
// parameters a kind reads are emitted; unknown parameter keys are rejected
// on load.

namespace detail {

inline double number_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number()) throw ValidationError(where + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError(where + " must be finite");
    return v;
}

} // namespace detail

inline std::string pipeline_to_json(const AugmentationPipeline& pipeline) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& step : pipeline.steps) {
        nlohmann::json p = nlohmann::json::object();
        switch (step.kind) {
            case AugKind::scale_input:
                p["scale_min"] = step.params.scale_min;
                p["scale_max"] = step.params.scale_max;
                break;
            case AugKind::translate_input: p["max_offset"] = step.params.max_offset; break;
            case AugKind::gaussian_noise: p["sigma_rel"] = step.params.sigma_rel; break;
            case AugKind::dropout: p["p_drop"] = step.params.p_drop; break;
            case AugKind::quantile_dropout: p["q"] = step.params.q; break;
            case AugKind::relu_scaling: p["c_max"] = step.params.c_max; break;
            case AugKind::siren_bias: p["k_max"] = step.params.k_max; break;
            case AugKind::rotate_input:
            case AugKind::siren_negation:
            case AugKind::permute: break;
        }
        arr.push_back({{"kind", to_string(step.kind)}, {"p", step.probability}, {"params", p}});
    }
    return arr.dump(2) + "\n";
}

inline AugmentationPipeline pipeline_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("pipeline config: ") + e.what(), e.byte);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("pipeline config: ") + e.what(), 1);
    }
    if (!j.is_array()) throw ValidationError("pipeline config must be a JSON array");
    AugmentationPipeline pipeline;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& sj = j[i];
        const std::string where = "pipeline step " + std::to_string(i);
        if (!sj.is_object()) throw ValidationError(where + " must be an object");
        for (const auto& [key, value] : sj.items()) {
            (void)value;
            if (key != "kind" && key != "p" && key != "params")
                throw ValidationError(where + " has unknown key '" + key + "'");
        }
        if (!sj.contains("kind") || !sj["kind"].is_string())
            throw ValidationError(where + " needs a string 'kind'");
        AugmentationDescriptor d;
        d.kind = aug_kind_from_string(sj["kind"].get<std::string>());
        if (sj.contains("p")) d.probability = detail::number_from_json(sj["p"], where + " p");
        if (sj.contains("params")) {
            const auto& pj = sj["params"];
            if (!pj.is_object()) throw ValidationError(where + " params must be an object");
            for (const auto& [key, value] : pj.items()) {
                const std::string pw = where + " params." + key;
                if (key == "scale_min") d.params.scale_min = detail::number_from_json(value, pw);
                else if (key == "scale_max") d.params.scale_max = detail::number_from_json(value, pw);
                else if (key == "max_offset") d.params.max_offset = detail::number_from_json(value, pw);
                else if (key == "sigma_rel") d.params.sigma_rel = detail::number_from_json(value, pw);
                else if (key == "p_drop") d.params.p_drop = detail::number_from_json(value, pw);
                else if (key == "q") d.params.q = detail::number_from_json(value, pw);
                else if (key == "c_max") d.params.c_max = detail::number_from_json(value, pw);
                else if (key == "k_max") {
                    if (!value.is_number_integer())
                        throw ValidationError(pw + " must be an integer");
                    d.params.k_max = value.get<int>();
                } else {
                    throw ValidationError(pw + " is not a recognized parameter");
                }
            }
        }
        pipeline.steps.push_back(std::move(d));
    }
    return pipeline;
}

inline AugmentationPipeline load_pipeline(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open pipeline config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return pipeline_from_json(text);
}

inline void save_pipeline(const std::string& path, const AugmentationPipeline& pipeline) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write pipeline config: " + path);
    out << pipeline_to_json(pipeline);
    if (!out) throw IoError("failed writing pipeline config: " + path);
}

} // namespace wsaug
