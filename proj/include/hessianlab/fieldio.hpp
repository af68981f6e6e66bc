#pragma once

#include <string>

#include "hessianlab/grid.hpp"
#include "hessianlab/solver.hpp"
#include "hessianlab/validate.hpp"

namespace hessianlab {

// GridField on disk: CSV with header "index0,...,index{2n-1},value" in
// row-major order, plus a JSON sidecar with topology, shape, spacing, origin
// and the run-length-encoded mask. %.17g formatting makes the round trip
// bit-exact. Writes go through a temp file and rename.
void write_field(const GridField& field, const std::string& csv_path,
                 const std::string& json_path);
GridField read_field(const std::string& csv_path, const std::string& json_path);

std::string diagnostics_to_json(const SolveDiagnostics& diag);
std::string report_to_json(const ViolationReport& report);

void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace hessianlab
