#pragma once

#include <memory>
#include <string>

#include "ndae/grid.hpp"
#include "ndae/kvfile.hpp"

namespace ndae {

/// Reads a grid description: sections buses/branches/machines/solar/loads,
/// quantities per-unit on the global base, angles in radians. Branch series
/// impedance may be given as r/x (converted to an admittance) or directly as
/// g/b.
std::shared_ptr<GridModel> grid_from_kv(const KvNode& root);
std::shared_ptr<GridModel> load_grid(const std::string& path);

}  // namespace ndae
