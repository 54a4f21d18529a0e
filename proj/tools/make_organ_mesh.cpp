// Writes the synthetic organ surface used by the bundled phantoms.
//
//   make_organ_mesh <out.obj> [half_extent_mm] [step_mm]

#include <iostream>
#include <string>

#include "palpation/errors.hpp"
#include "palpation/simulator.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_organ_mesh <out.obj> [half_extent_mm] [step_mm]\n";
        return 2;
    }
    try {
        const double half = argc > 2 ? std::stod(argv[2]) : 60.0;
        const double step = argc > 3 ? std::stod(argv[3]) : 2.0;
        palpation::save_obj(palpation::sim::make_organ_mesh(half, step), argv[1]);
    } catch (const palpation::Error& e) {
        std::cerr << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    return 0;
}
