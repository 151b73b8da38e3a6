#pragma once

#include <string>

#include <json.hpp>

#include "stpp/core/events.hpp"
#include "stpp/core/geometry.hpp"

namespace stpp::io {

using nlohmann::json;

[[nodiscard]] json region_to_json(const core::RegionUnion& r);
// Throws ConfigError on malformed input.
[[nodiscard]] core::RegionUnion region_from_json(const json& j);

[[nodiscard]] json box_to_json(const core::Box& b);
[[nodiscard]] core::Box box_from_json(const json& j);

[[nodiscard]] json domain_to_json(const core::Domain& d);
[[nodiscard]] core::Domain domain_from_json(const json& j);

[[nodiscard]] json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

// Throws ConfigError listing any key of `j` not in `allowed`.
void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where);

}  // namespace stpp::io
