// Runs every acceptance criterion and prints one verdict per criterion.
// Pass --quick to skip the long simulation checks.

#include "tcpshare/cli.hpp"

#include <iostream>
#include <string_view>

int main(int argc, char** argv)
{
    tcpshare::cli::VerifyOptions opt;
    for (int i = 1; i < argc; ++i) {
        if (std::string_view(argv[i]) == "--quick") opt.quick = true;
    }
    const auto results = tcpshare::cli::run_acceptance(opt, std::cout);
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::cout << results.size() - static_cast<std::size_t>(failed) << " of " << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
