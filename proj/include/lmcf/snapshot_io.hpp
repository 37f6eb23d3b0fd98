#pragma once

#include <string>

#include "json.hpp"
#include "lmcf/barriers.hpp"
#include "lmcf/problem.hpp"

namespace lmcf {

/// Fixed shortest-round-trip formatting (printf %.17g) used for every CSV
/// number, so identical runs produce byte-identical files.
std::string format_double(double value);

/// Writes all stored levels as CSV with header x1,...,xn,t,u; rows are level
/// major, nodes in grid order.
void write_snapshots_csv(const std::string& path, const GridField& u);

/// Reads a file written by write_snapshots_csv back onto `grid`. Validates
/// the header, the node order (coordinates must match the grid), the level
/// sizes, and that times increase.
GridField read_snapshots_csv(const std::string& path, const SpaceTimeGrid& grid);

/// Tabulates both barrier branches on a shared log-spaced mesh: profile
/// values, integrals, and the bracketing curves each trajectory must stay
/// between.
void write_barrier_table_csv(const std::string& path, const BarrierProfile& sub,
                             const BarrierProfile& super, int points = 400);

/// Pretty-printed JSON document with sorted keys and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& doc);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace lmcf
