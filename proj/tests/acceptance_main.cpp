// Acceptance runner for ctest. Prints one PASS/FAIL line per criterion.
// Criteria listed in kKnownGaps fail for reasons in the mathematics rather
// than the code (see README); the run succeeds when every other criterion
// passes and the known gaps still show up as failures.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "numvar/acceptance.hpp"

int main(int argc, char** argv) {
    const std::set<int> kKnownGaps = {2, 3, 10};
    nv::accept::Options opt;
    if (const char* s = std::getenv("NUMVAR_SEED")) opt.seed = std::strtoull(s, nullptr, 10);
    opt.log = [](const std::string& line) { std::cerr << line << '\n'; };
    const auto results = nv::accept::run_all(opt);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << nv::accept::summary_line(r);
        const bool gap = kKnownGaps.count(r.id) > 0;
        if (gap) std::cout << (r.pass ? "  [known gap now passes]" : "  [known gap]");
        std::cout << '\n';
        ok = ok && (gap ? !r.pass : r.pass);
    }
    if (argc > 1) std::ofstream(argv[1]) << nv::accept::report_json(opt, results).dump(2) << '\n';
    return ok ? 0 : 1;
}
