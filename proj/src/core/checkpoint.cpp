#include "coffee/core/checkpoint.hpp"

#include <fstream>

#include "coffee/core/error.hpp"

namespace coffee {

nlohmann::json checkpoint_to_json(const ParameterList& params, const nlohmann::json& meta) {
    nlohmann::json doc;
    doc["format"] = kCheckpointFormat;
    doc["meta"] = meta;
    auto& list = doc["params"] = nlohmann::json::array();
    for (const auto& p : params) {
        nlohmann::json entry;
        entry["name"] = p.name;
        entry["shape"] = p.tensor.shape().dims();
        entry["values"] = p.tensor.to_vector();
        list.push_back(std::move(entry));
    }
    return doc;
}

Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("format", "") != kCheckpointFormat) {
        throw ParseError(std::string("checkpoint: missing or unsupported format tag, expected ") +
                         kCheckpointFormat);
    }
    Checkpoint ckpt;
    ckpt.meta = doc.value("meta", nlohmann::json::object());
    try {
        for (const auto& entry : doc.at("params")) {
            auto dims = entry.at("shape").get<std::vector<std::size_t>>();
            auto values = entry.at("values").get<std::vector<double>>();
            ckpt.params.push_back({entry.at("name").get<std::string>(),
                                   Tensor::from(Shape(std::move(dims)), std::move(values))});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterList& params,
                     const nlohmann::json& meta) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    out << checkpoint_to_json(params, meta).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read checkpoint " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(doc);
}

} // namespace coffee
