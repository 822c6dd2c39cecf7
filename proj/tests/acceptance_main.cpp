// Acceptance suite runner: prints one pass/fail line per criterion and exits
// nonzero if any criterion fails. --quick reduces trial counts.

#include <cstring>
#include <iostream>

#include "selftest.hpp"

int main(int argc, char** argv) {
    omnisal::selftest::Options opt;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) {
            opt.quick = true;
        } else {
            std::cerr << "usage: " << argv[0] << " [--quick]\n";
            return 2;
        }
    }
    const auto report = omnisal::selftest::run(opt, std::cout);
    return report.all_passed ? 0 : 1;
}
