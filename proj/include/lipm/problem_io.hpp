#pragma once

#include <filesystem>

#include <json.hpp>

#include "lipm/problem.hpp"

namespace lipm {

using Json = nlohmann::json;

/// Dense row-major arrays; ±∞ bounds are written as the strings "inf"/"-inf".
Json to_json(const NlpInstance& instance);
NlpInstance instance_from_json(const Json& j);

/// Instance fields plus {"split": [train_end, val_end], "instances": [...]}.
Json to_json(const Dataset& dataset);
Dataset dataset_from_json(const Json& j);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

void save_instance(const NlpInstance& instance, const std::filesystem::path& path);
NlpInstance load_instance(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& j, const std::filesystem::path& path);

}  // namespace lipm
