#pragma once

#include <string>

#include "stargp/inference.hpp"

namespace stargp {

inline constexpr int kModelSchemaVersion = 1;

/// Model file layout: a magic line, a length-prefixed JSON manifest (schema
/// version, theta, scales, m, g, correlation family, ordering, statistics),
/// then length-prefixed little-endian float64 arrays for coordinates, training
/// responses, neighbor lists and the per-position posterior caches.
std::string serialize_model(const FittedMap& map);
FittedMap deserialize_model(const std::string& bytes);

void save_model(const std::string& path, const FittedMap& map);
FittedMap load_model(const std::string& path);

}  // namespace stargp
