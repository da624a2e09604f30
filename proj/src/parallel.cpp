#include "kslab/parallel.hpp"

#include <cstdlib>
#include <omp.h>

extern "C" void openblas_set_num_threads(int);

namespace kslab {

int resolve_threads(int requested)
{
    // The environment wins over the flag.
    if (const char* s = std::getenv("KINETIC_SLAB_THREADS")) {
        int n = std::atoi(s);
        if (n > 0) return n;
    }
    return requested > 0 ? requested : 1;
}

void set_threads(int n)
{
    omp_set_num_threads(n > 0 ? n : 1);
    // BLAS calls are issued from inside our own parallel regions.
    openblas_set_num_threads(1);
}

int current_threads() { return omp_get_max_threads(); }

double ordered_sum(const std::vector<double>& xs)
{
    KahanSum k;
    for (double x : xs) k.add(x);
    return k.value();
}

} // namespace kslab
