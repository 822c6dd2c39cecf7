#ifndef OMNISAL_SELFTEST_HPP
#define OMNISAL_SELFTEST_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace omnisal::selftest {

struct Options {
    bool quick = false; // reduced trial counts, same checks
};

struct CriterionResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct Report {
    std::vector<CriterionResult> criteria;
    bool all_passed = true;
    double total_seconds = 0.0;
};

/// Runs every acceptance criterion, printing one pass/fail line per
/// criterion to `log`.
Report run(const Options& options, std::ostream& log);

} // namespace omnisal::selftest

#endif
