#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "oscidiff/cellsolve.hpp"
#include "oscidiff/effmat.hpp"
#include "oscidiff/fields.hpp"
#include "oscidiff/pdesolve.hpp"

namespace oscidiff {

/// Samples a field on the cell grid nodes (s slowest, then y2, y1 fastest)
/// and writes the upper-triangle entries of each node matrix.
void write_field(std::ostream& os, const PeriodicMatrixField& field,
                 const CellGrid& grid);

/// Reads a gridded field and returns it as an evaluator with periodic
/// (bi/tri)linear interpolation in (y,s). Bounds come from the header when
/// present, otherwise from the nodal eigenvalues.
PeriodicMatrixField read_field(std::istream& is, const std::string& id);
PeriodicMatrixField load_field(const std::string& path);

void write_cells(std::ostream& os, const std::vector<CellSolution>& cells);
std::vector<CellSolution> read_cells(std::istream& is);

void write_tensor(std::ostream& os, const EffectiveTensor& tensor);
EffectiveTensor read_tensor(std::istream& is);
/// u0abs followed by the row-major entries, one line per key.
void write_tensor_csv(std::ostream& os, const EffectiveTensor& tensor);

void write_trajectory(std::ostream& os, const SpaceTimeField& traj);
SpaceTimeField read_trajectory(std::istream& is);

void save_text(const std::string& path, const std::string& contents);
std::string load_text(const std::string& path);

}  // namespace oscidiff
