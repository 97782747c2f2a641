#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdmforge/io_error.hpp"
#include "sdmforge/pointwise.hpp"
#include "sdmforge/surrogate.hpp"

namespace sdmforge {

inline constexpr int kModelFileVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "model payloads are little-endian; big-endian hosts need byte swaps");

inline nlohmann::json grid_to_json(const GridSpec& g) {
    return {{"origin", {g.origin.x, g.origin.y, g.origin.z}},
            {"spacing", g.spacing},
            {"dims", {g.nx, g.ny, g.nz}}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
    GridSpec g;
    g.origin = {j.at("origin")[0], j.at("origin")[1], j.at("origin")[2]};
    g.spacing = j.at("spacing");
    g.nx = j.at("dims")[0];
    g.ny = j.at("dims")[1];
    g.nz = j.at("dims")[2];
    return g;
}

inline nlohmann::json layers_to_json(const std::vector<LayerSpec>& layers) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LayerSpec& l : layers)
        arr.push_back({{"name", l.name},
                       {"shape", l.shape},
                       {"offset", l.offset},
                       {"count", l.count}});
    return arr;
}

// <base>.json manifest + <base>.bin payload.
inline std::pair<std::string, std::string> model_paths(const std::string& out) {
    std::string base = out;
    if (base.size() > 5 && base.ends_with(".json")) base = base.substr(0, base.size() - 5);
    return {base + ".json", base + ".bin"};
}

inline void write_payload(const std::string& path, const std::vector<float>& w) {
    std::string bytes(reinterpret_cast<const char*>(w.data()), w.size() * sizeof(float));
    atomic_write_file(path, bytes);
}

inline std::vector<float> read_payload(const std::string& path, std::size_t expected) {
    const std::string bytes = read_file(path);
    if (bytes.size() != expected * sizeof(float))
        throw IoError("model payload " + path + " has " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expected * sizeof(float)));
    std::vector<float> w(expected);
    std::memcpy(w.data(), bytes.data(), bytes.size());
    return w;
}

inline nlohmann::json load_manifest(const std::string& path, const std::string& want_kind) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse model manifest " + path + ": " + e.what());
    }
    if (!j.contains("version")) throw IoError("model manifest missing version field: " + path);
    if (j.at("version").get<int>() != kModelFileVersion)
        throw IoError("unsupported model file version in " + path);
    if (j.at("kind").get<std::string>() != want_kind)
        throw IoError("model " + path + " is a '" + j.at("kind").get<std::string>() +
                      "' model, expected '" + want_kind + "'");
    return j;
}

inline std::string payload_path_for(const nlohmann::json& j, const std::string& manifest_path) {
    const std::string file = j.at("payload").at("file");
    return (std::filesystem::path(manifest_path).parent_path() / file).string();
}

}  // namespace detail

inline void save_model(const SurrogateModel& m, const std::string& out) {
    const auto [manifest_path, payload_path] = detail::model_paths(out);
    nlohmann::json j;
    j["version"] = kModelFileVersion;
    j["kind"] = "grid_decoder";
    j["arch"] = {{"coarse", m.arch.coarse},
                 {"coarse_ch", m.arch.coarse_ch},
                 {"embed", m.arch.embed},
                 {"stage_dims", m.arch.stage_dims},
                 {"stage_ch", m.arch.stage_ch}};
    j["grid"] = detail::grid_to_json(m.grid);
    j["normalization"] = {{"lo", m.norm_lo}, {"hi", m.norm_hi}};
    j["training"] = {{"seed", m.meta.seed}, {"steps", m.meta.steps},
                     {"final_loss", m.meta.final_loss}};
    j["payload"] = {{"file", std::filesystem::path(payload_path).filename().string()},
                    {"dtype", "float32-le"},
                    {"count", m.weights.size()}};
    j["layers"] = detail::layers_to_json(decoder_layers(m.arch));
    detail::write_payload(payload_path, m.weights);
    atomic_write_file(manifest_path, j.dump(2) + "\n");
}

inline SurrogateModel load_model(const std::string& path) {
    const auto [manifest_path, ignored] = detail::model_paths(path);
    const nlohmann::json j = detail::load_manifest(manifest_path, "grid_decoder");
    SurrogateModel m;
    const auto& a = j.at("arch");
    m.arch.coarse = a.at("coarse");
    m.arch.coarse_ch = a.at("coarse_ch");
    m.arch.embed = a.at("embed");
    m.arch.stage_dims = a.at("stage_dims");
    m.arch.stage_ch = a.at("stage_ch");
    m.grid = detail::grid_from_json(j.at("grid"));
    m.norm_lo = j.at("normalization").at("lo");
    m.norm_hi = j.at("normalization").at("hi");
    m.meta.seed = j.at("training").at("seed");
    m.meta.steps = j.at("training").at("steps");
    m.meta.final_loss = j.at("training").at("final_loss");
    const std::size_t count = j.at("payload").at("count");
    if (count != decoder_weight_count(m.arch))
        throw IoError("model manifest weight count does not match architecture: " +
                      manifest_path);
    m.weights = detail::read_payload(detail::payload_path_for(j, manifest_path), count);
    return m;
}

inline void save_model(const PointwiseModel& m, const std::string& out) {
    const auto [manifest_path, payload_path] = detail::model_paths(out);
    nlohmann::json j;
    j["version"] = kModelFileVersion;
    j["kind"] = "pointwise";
    j["arch"] = {{"width", m.arch.width}, {"hidden_layers", m.arch.hidden_layers}};
    j["grid"] = detail::grid_to_json(m.grid);
    j["normalization"] = {{"lo", m.norm_lo}, {"hi", m.norm_hi}};
    j["clamp_delta"] = m.clamp_delta;
    j["training"] = {{"seed", m.meta.seed}, {"steps", m.meta.steps},
                     {"final_loss", m.meta.final_loss}};
    j["payload"] = {{"file", std::filesystem::path(payload_path).filename().string()},
                    {"dtype", "float32-le"},
                    {"count", m.weights.size()}};
    j["layers"] = detail::layers_to_json(pointwise_layers(m.arch));
    detail::write_payload(payload_path, m.weights);
    atomic_write_file(manifest_path, j.dump(2) + "\n");
}

inline PointwiseModel load_pointwise_model(const std::string& path) {
    const auto [manifest_path, ignored] = detail::model_paths(path);
    const nlohmann::json j = detail::load_manifest(manifest_path, "pointwise");
    PointwiseModel m;
    m.arch.width = j.at("arch").at("width");
    m.arch.hidden_layers = j.at("arch").at("hidden_layers");
    m.grid = detail::grid_from_json(j.at("grid"));
    m.norm_lo = j.at("normalization").at("lo");
    m.norm_hi = j.at("normalization").at("hi");
    m.clamp_delta = j.at("clamp_delta");
    m.meta.seed = j.at("training").at("seed");
    m.meta.steps = j.at("training").at("steps");
    m.meta.final_loss = j.at("training").at("final_loss");
    const std::size_t count = j.at("payload").at("count");
    if (count != pointwise_weight_count(m.arch))
        throw IoError("model manifest weight count does not match architecture: " +
                      manifest_path);
    m.weights = detail::read_payload(detail::payload_path_for(j, manifest_path), count);
    return m;
}

}  // namespace sdmforge
