// Calibration ensemble for the empirical PDE constant used by the acceptance
// suite. Seeds 1001.. are disjoint from the acceptance seeds 1..50.
//
//   pde_calibrate [fields_per_dim=500]

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "distortlab/pde.hpp"

int main(int argc, char** argv) {
    using namespace distortlab;
    const int count = argc > 1 ? std::atoi(argv[1]) : 500;
    for (int d : {2, 3}) {
        const int points = d == 2 ? 65 : 33;
        std::vector<double> c;
        for (int s = 0; s < count; ++s) {
            const GridField g = sample_grid_field(d, 4.0, points, random_trig_field(d, 3, 1001 + s));
            c.push_back(antisymmetric_approximation(g).constant);
        }
        std::sort(c.begin(), c.end());
        std::printf("dim=%d fields=%d points=%d max=%.6f median=%.6f\n", d, count, points, c.back(),
                    c[c.size() / 2]);
    }
}
