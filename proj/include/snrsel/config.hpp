#pragma once

// JSON mappings for every configuration and record type. Parsing is strict:
// unknown keys and wrong types raise ValidationError.

#include <json.hpp>

#include <filesystem>
#include <initializer_list>
#include <string>

#include "snrsel/dataset.hpp"
#include "snrsel/error.hpp"
#include "snrsel/features.hpp"
#include "snrsel/io.hpp"
#include "snrsel/learner.hpp"

namespace snrsel {

using Json = nlohmann::ordered_json;

/// Throws ValidationError naming the first key of `j` not in `allowed`.
void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context);

/// Reads j[key] into out when present, rethrowing type errors as ValidationError.
template <typename T>
void optional_field(const Json& j, const char* key, T& out, const std::string& context) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(context + "." + key + ": " + e.what());
    }
}

Json read_json_file(const std::filesystem::path& path);

void to_json(Json& j, ModType m);
void from_json(const Json& j, ModType& m);
void to_json(Json& j, const SnrGrid& g);
void from_json(const Json& j, SnrGrid& g);
void to_json(Json& j, const ImpairmentConfig& c);
void from_json(const Json& j, ImpairmentConfig& c);
void to_json(Json& j, const DatasetSpec& s);
void from_json(const Json& j, DatasetSpec& s);
void to_json(Json& j, const PipelineConfig& c);
void from_json(const Json& j, PipelineConfig& c);
void to_json(Json& j, const FeatureStats& s);
void from_json(const Json& j, FeatureStats& s);
void to_json(Json& j, const ConvFront& c);
void from_json(const Json& j, ConvFront& c);
void to_json(Json& j, const ArchConfig& a);
void from_json(const Json& j, ArchConfig& a);
void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);
void to_json(Json& j, const TrainRecord& r);
void from_json(const Json& j, TrainRecord& r);
void to_json(Json& j, const ConfusionMatrix& m);
void from_json(const Json& j, ConfusionMatrix& m);

}  // namespace snrsel
