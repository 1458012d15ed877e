#pragma once

#include <string>

namespace flowgrade {

/// One grader's answer for one question modality.
struct GradingVerdict {
    double score = 0.0;
    double max = 0.0;
    std::string justification;
    std::string backend;       // "mock", "deterministic", "http:<model>", ...
    bool approximate = false;  // clamped, fallback-parsed, or greedy-matched
};

}  // namespace flowgrade
