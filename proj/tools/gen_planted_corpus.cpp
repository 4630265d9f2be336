#include <cstdlib>
#include <iostream>

#include "flagforge/synth.hpp"

// Generates the two-class planted-motif corpus used by the learnability
// tests: vulnerable contracts carry an extra if/assignment pattern.
int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: gen_planted_corpus <out-dir> [n-contracts=40] [seed=7]\n";
        return 2;
    }
    int n = argc > 2 ? std::atoi(argv[2]) : 40;
    std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 7;
    flagforge::generate_planted_corpus(argv[1], n, seed);
    std::cout << "wrote " << n << " contracts to " << argv[1] << "\n";
    return 0;
}
