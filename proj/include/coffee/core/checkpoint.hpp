#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "coffee/core/parameters.hpp"

namespace coffee {

// Parameter checkpoint, JSON text:
//
//   {
//     "format": "coffee-ckpt-v1",
//     "meta":   { ...caller-defined... },
//     "params": [ {"name": str, "shape": [int...], "values": [number...]}, ... ]
//   }
//
// Values are row-major. Doubles are written with 17 significant digits so a
// save/load cycle is bit-exact. Parameter order is preserved.
inline constexpr const char* kCheckpointFormat = "coffee-ckpt-v1";

struct Checkpoint {
    ParameterList params;
    nlohmann::json meta = nlohmann::json::object();
};

nlohmann::json checkpoint_to_json(const ParameterList& params, const nlohmann::json& meta);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const ParameterList& params,
                     const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace coffee
