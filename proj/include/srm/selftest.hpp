#pragma once

#include <ostream>

namespace srm {

/// Fast oracle checks over every module; prints one PASS/FAIL line per check.
/// Returns true when all pass.
bool run_selftest(std::ostream& out);

}  // namespace srm
