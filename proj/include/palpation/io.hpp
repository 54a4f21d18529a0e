#pragma once

#include <filesystem>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "palpation/geometry.hpp"

namespace palpation::io {

using nlohmann::json;

/// Parses a JSON file; IoError if unreadable, ConfigError if malformed.
json read_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);

/// Throws ConfigError naming the first key of `object` outside `allowed`.
void require_known_keys(const json& object, std::initializer_list<std::string_view> allowed,
                        std::string_view context);

/// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

/// 8-bit binary PGM (P5), row-major, values scaled linearly from [min, max] to
/// [0, 255]. A constant field maps to 0.
std::string encode_pgm(std::span<const double> values, std::size_t width, std::size_t height);

json transform_to_json(const RigidTransform& t);

}  // namespace palpation::io
