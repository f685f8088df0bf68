#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "wsaug/core.hpp"

namespace wsaug {

// The "wse-json v1" file format:
//
//   {"format":"wse-json","version":1,
//    "spec":{"dims":[...],"activations":["sine",...]},
//    "omega0":30.0 | null,
//    "weights":[[[...row...],[...row...]], ...],   one list-of-rows per layer
//    "biases":[[...], ...]}
//
// Every parameter is written with the shortest decimal that parses back to
// the same 32-bit float, so a write/read round trip is bit-exact.

namespace detail {

inline void append_float32(std::string& out, float v) {
    // negative zero must be written with a decimal point: JSON parsers take
    // the bare "-0" through their integer path and drop the sign bit
    if (v == 0.0f && std::signbit(v)) {
        out += "-0.0";
        return;
    }
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline void append_double(std::string& out, double v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline float float_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number())
        throw ParseError("non-numeric entry in " + where);
    const double d = j.get<double>();
    const float f = static_cast<float>(d);
    if (!std::isfinite(f))
        throw ParseError("non-finite value in " + where);
    return f;
}

} // namespace detail

inline std::string to_wse_json(const WeightSpaceElement& elem,
                               std::optional<double> omega0 = std::nullopt) {
    elem.validate();
    std::string out;
    out.reserve(64 + flat_size(elem.spec) * 14);
    out += "{\"format\":\"wse-json\",\"version\":1,\"spec\":{\"dims\":[";
    for (std::size_t i = 0; i < elem.spec.dims.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(elem.spec.dims[i]);
    }
    out += "],\"activations\":[";
    for (std::size_t i = 0; i < elem.spec.activations.size(); ++i) {
        if (i) out += ',';
        out += '"';
        out += to_string(elem.spec.activations[i]);
        out += '"';
    }
    out += "]},\"omega0\":";
    if (omega0)
        detail::append_double(out, *omega0);
    else
        out += "null";
    out += ",\"weights\":[";
    for (int l = 0; l < elem.spec.num_layers(); ++l) {
        if (l) out += ',';
        out += '[';
        const MatrixF& w = elem.weights[l];
        for (int r = 0; r < w.rows; ++r) {
            if (r) out += ',';
            out += '[';
            for (int c = 0; c < w.cols; ++c) {
                if (c) out += ',';
                detail::append_float32(out, w(r, c));
            }
            out += ']';
        }
        out += ']';
    }
    out += "],\"biases\":[";
    for (int l = 0; l < elem.spec.num_layers(); ++l) {
        if (l) out += ',';
        out += '[';
        const std::vector<float>& b = elem.biases[l];
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (i) out += ',';
            detail::append_float32(out, b[i]);
        }
        out += ']';
    }
    out += "]}";
    return out;
}

struct LoadedWse {
    WeightSpaceElement elem;
    std::optional<double> omega0;
};

inline LoadedWse parse_wse_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("wse-json syntax error: ") + e.what(), e.byte);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("wse-json: ") + e.what(), 1);
    }
    if (!doc.is_object()) throw ParseError("wse-json document must be an object");
    if (!doc.contains("format") || doc["format"] != "wse-json")
        throw ParseError("missing or wrong 'format' field (expected \"wse-json\")");
    if (!doc.contains("version") || !doc["version"].is_number_integer() ||
        doc["version"].get<int>() != 1)
        throw ParseError("unsupported wse-json version");
    if (!doc.contains("spec") || !doc["spec"].is_object())
        throw ParseError("missing 'spec' object");

    const nlohmann::json& jspec = doc["spec"];
    NetworkSpec spec;
    if (!jspec.contains("dims") || !jspec["dims"].is_array())
        throw ParseError("missing 'spec.dims' array");
    for (const auto& d : jspec["dims"]) {
        if (!d.is_number_integer()) throw ParseError("non-integer entry in 'spec.dims'");
        spec.dims.push_back(d.get<int>());
    }
    if (!jspec.contains("activations") || !jspec["activations"].is_array())
        throw ParseError("missing 'spec.activations' array");
    for (const auto& a : jspec["activations"]) {
        if (!a.is_string()) throw ParseError("non-string entry in 'spec.activations'");
        try {
            spec.activations.push_back(activation_from_string(a.get<std::string>()));
        } catch (const ValidationError& e) {
            throw ParseError(std::string("spec.activations: ") + e.what());
        }
    }
    try {
        spec.validate();
    } catch (const ValidationError& e) {
        throw ParseError(std::string("invalid spec: ") + e.what());
    }

    std::optional<double> omega0;
    if (doc.contains("omega0") && !doc["omega0"].is_null()) {
        if (!doc["omega0"].is_number()) throw ParseError("'omega0' must be a number or null");
        omega0 = doc["omega0"].get<double>();
    }

    const int m = spec.num_layers();
    if (!doc.contains("weights") || !doc["weights"].is_array())
        throw ParseError("missing 'weights' array");
    if (!doc.contains("biases") || !doc["biases"].is_array())
        throw ParseError("missing 'biases' array");
    const nlohmann::json& jw = doc["weights"];
    const nlohmann::json& jb = doc["biases"];
    if (static_cast<int>(jw.size()) != m)
        throw ParseError("weights array holds " + std::to_string(jw.size()) +
                         " layers, spec requires " + std::to_string(m) +
                         " (layer " + std::to_string(jw.size() + 1) + " missing)");
    if (static_cast<int>(jb.size()) != m)
        throw ParseError("biases array holds " + std::to_string(jb.size()) +
                         " layers, spec requires " + std::to_string(m) +
                         " (layer " + std::to_string(jb.size() + 1) + " missing)");

    WeightSpaceElement elem = zero_element(spec);
    for (int l = 0; l < m; ++l) {
        const std::string wl = "weights[" + std::to_string(l) + "]";
        const nlohmann::json& mat = jw[l];
        if (!mat.is_array() || static_cast<int>(mat.size()) != spec.dims[l + 1])
            throw ParseError(wl + " must hold " + std::to_string(spec.dims[l + 1]) + " rows");
        for (int r = 0; r < spec.dims[l + 1]; ++r) {
            const nlohmann::json& row = mat[r];
            if (!row.is_array() || static_cast<int>(row.size()) != spec.dims[l])
                throw ParseError(wl + " row " + std::to_string(r) + " must hold " +
                                 std::to_string(spec.dims[l]) + " entries");
            for (int c = 0; c < spec.dims[l]; ++c)
                elem.weights[l](r, c) = detail::float_from_json(row[c], wl);
        }
        const std::string bl = "biases[" + std::to_string(l) + "]";
        const nlohmann::json& vec = jb[l];
        if (!vec.is_array() || static_cast<int>(vec.size()) != spec.dims[l + 1])
            throw ParseError(bl + " must hold " + std::to_string(spec.dims[l + 1]) + " entries");
        for (int i = 0; i < spec.dims[l + 1]; ++i)
            elem.biases[l][i] = detail::float_from_json(vec[i], bl);
    }
    return LoadedWse{std::move(elem), omega0};
}

inline void save_wse(const std::string& path, const WeightSpaceElement& elem,
                     std::optional<double> omega0 = std::nullopt) {
    const std::string text = to_wse_json(elem, omega0);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open '" + tmp + "' for writing");
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!f) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

inline LoadedWse load_wse(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_wse_json(ss.str());
}

} // namespace wsaug
