#pragma once

#include <cstddef>
#include <vector>

namespace kslab {

// Serial variants are kept as references for testing the OpenMP kernels.
enum class Exec { Parallel, Serial };

// Thread count: explicit value > 0 wins, else KINETIC_SLAB_THREADS, else 1.
int resolve_threads(int requested);
void set_threads(int n);
int current_threads();

// Neumaier compensated sum, summed in index order.
struct KahanSum {
    double sum = 0, comp = 0;
    void add(double x)
    {
        double t = sum + x;
        if ((sum >= 0 ? sum : -sum) >= (x >= 0 ? x : -x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

double ordered_sum(const std::vector<double>& xs);

} // namespace kslab
