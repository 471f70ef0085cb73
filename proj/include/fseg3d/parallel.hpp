#pragma once

namespace fseg3d {

/// Caps the number of worker threads used by the data-parallel kernels.
/// Values < 1 restore the OpenMP default.
void set_num_threads(int n);
int max_threads();

/// Reads FUTURESEG3D_THREADS; returns 0 when unset or unparsable.
int threads_from_env();

}  // namespace fseg3d
