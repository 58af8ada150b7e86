#pragma once

namespace vpstab {

/// Sets the worker count used by parallel loops (0 keeps the runtime default).
/// Results never depend on this value.
void set_num_threads(int n);
int num_threads();

}  // namespace vpstab
