// Acceptance gate: runs every criterion (or one, with --criterion N) and
// prints a single pass/fail line per criterion.

#include <cstring>
#include <iostream>
#include <string>

#include "acceptance/criteria.hpp"

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else if (std::strcmp(argv[i], "--list") == 0) {
            for (const auto& c : acceptance::criteria()) {
                std::cout << c.number << ": " << c.label << "\n";
            }
            return 0;
        } else {
            std::cerr << "usage: acceptance_tests [--criterion N | --list]\n";
            return 2;
        }
    }

    int failures = 0;
    int ran = 0;
    for (const auto& criterion : acceptance::criteria()) {
        if (only != 0 && criterion.number != only) continue;
        ++ran;
        try {
            criterion.run();
            std::cout << "[PASS] criterion " << criterion.number << ": " << criterion.label
                      << std::endl;
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "[FAIL] criterion " << criterion.number << ": " << criterion.label
                      << " -- " << e.what() << std::endl;
        }
    }
    if (ran == 0) {
        std::cerr << "no such criterion: " << only << "\n";
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
