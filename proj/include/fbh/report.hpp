#pragma once

// Per-equation sup-norm residuals with a verdict. Probe-style checks reuse
// the same container with Impossible/Minimal verdicts.

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace fbh {

enum class Verdict { Pass, Fail, Impossible, Minimal };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::Impossible: return "IMPOSSIBLE";
        case Verdict::Minimal: return "MINIMAL";
    }
    return "?";
}

struct ResidualEntry {
    std::string name;
    double value = 0.0;  // sup-norm over the evaluation grid
};

struct ResidualReport {
    std::vector<ResidualEntry> entries;
    double tolerance = 1e-6;
    std::string grid_desc;
    Verdict verdict = Verdict::Fail;
    std::vector<std::string> flags;

    bool passed() const { return verdict == Verdict::Pass; }

    double max_residual() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, e.value);
        return m;
    }

    double entry(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return e.value;
        return -1.0;
    }

    // residual report: verdict is "all sup-norms below tolerance"
    static ResidualReport from_residuals(std::vector<ResidualEntry> es, double tol,
                                         std::string grid = {}) {
        ResidualReport r;
        r.entries = std::move(es);
        r.tolerance = tol;
        r.grid_desc = std::move(grid);
        r.verdict = Verdict::Pass;
        for (const auto& e : r.entries)
            if (!(e.value < tol)) r.verdict = Verdict::Fail;
        return r;
    }
};

inline std::string format_report(const ResidualReport& r, const std::string& title) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-28s tol=%.3g  verdict=%s\n", title.c_str(), r.tolerance,
                  to_string(r.verdict));
    out += buf;
    for (const auto& e : r.entries) {
        std::snprintf(buf, sizeof buf, "  %-26s %.6e\n", e.name.c_str(), e.value);
        out += buf;
    }
    for (const auto& f : r.flags) out += "  note: " + f + "\n";
    return out;
}

}  // namespace fbh
