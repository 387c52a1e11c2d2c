#pragma once

// Plain-text instance and state files. Doubles are written in shortest
// round-trip form, so write/read is bit-exact.
//
//   fmo-inst/1
//   k 3  N <N>  m <m>  L <L>  nig <nig>
//   r <r>  gamma <g>  eta <e>  nu <nu>
//   element <i> rho <rho_l> <rho_u> support <n> <cols...>
//   B <i> <l> <nnz>
//   <row> <global col> <value>      (nnz lines)
//   load <j>
//   <N values>
//   end

#include "fmo/types.hpp"

#include <iosfwd>
#include <string>

namespace fmo::io {

void write_instance(std::ostream& os, const ProblemInstance& inst);
ProblemInstance read_instance(std::istream& is);

void save_instance(const std::string& path, const ProblemInstance& inst);
ProblemInstance load_instance(const std::string& path);

/// "fmo-state/1": material blocks (packed upper triangle) and dual vectors.
void write_state(std::ostream& os, const MaterialState& E, const DualState& x);
void read_state(std::istream& is, MaterialState& E, DualState& x);

void save_state(const std::string& path, const MaterialState& E, const DualState& x);
void load_state(const std::string& path, MaterialState& E, DualState& x);

std::string format_double(double v);

}  // namespace fmo::io
