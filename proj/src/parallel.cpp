#include "vpstab/parallel.hpp"

#ifdef VPSTAB_HAVE_OPENMP
#include <omp.h>
#endif

namespace vpstab {

void set_num_threads(int n) {
#ifdef VPSTAB_HAVE_OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int num_threads() {
#ifdef VPSTAB_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace vpstab
