#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "skosens/augmented.hpp"
#include "skosens/grid_path.hpp"

namespace skosens {

/// Header `t,component_1,...`; matrix points are flattened column-major.
/// A non-empty `comment` is written first as a `# ` line. Values use 17
/// significant digits, so reading back is exact.
void write_path_csv(std::ostream& out, const GridPath& path, const std::string& comment = {});
void write_path_csv(const std::filesystem::path& file, const GridPath& path,
                    const std::string& comment = {});

/// Parses the format above, skipping `#` lines. Points come back as
/// rows x cols (cols = 1 gives a vector path); rows = 0 means "all components".
GridPath read_path_csv(std::istream& in, Eigen::Index rows = 0, Eigen::Index cols = 1);
GridPath read_path_csv(const std::filesystem::path& file, Eigen::Index rows = 0,
                       Eigen::Index cols = 1);

/// Columns: k, t, I (bitmask, bit i-1 for coordinate i), delta_a_1.., a_before_1..
void write_jumps_csv(std::ostream& out, const std::vector<JumpEvent>& jumps, int dim,
                     const std::string& comment = {});
void write_jumps_csv(const std::filesystem::path& file, const std::vector<JumpEvent>& jumps,
                     int dim, const std::string& comment = {});

}  // namespace skosens
