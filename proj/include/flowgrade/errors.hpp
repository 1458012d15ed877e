#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace flowgrade {

/// Non-fatal diagnostic produced anywhere in the pipeline. Warnings are
/// collected and surfaced in reports; they never abort an evaluation.
struct Diagnostic {
    std::string code;     // e.g. "UnattachedArrow", "MultipleStart"
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input document violates the detections schema. `path()` names the
/// offending field, e.g. "pages[0].blocks[1].bbox.w".
class SchemaError : public Error {
public:
    SchemaError(const std::string& path, const std::string& detail)
        : Error("schema error at " + path + ": " + detail), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

class VersionError : public Error {
public:
    explicit VersionError(const std::string& got)
        : Error("unsupported detections version '" + got + "' (expected major version 1)") {}
};

class DegenerateBlock : public Error {
public:
    DegenerateBlock() : Error("block bounding box has zero area") {}
};

class EmptyKeywordSet : public Error {
public:
    EmptyKeywordSet() : Error("keyword set is empty") {}
};

class EmptyDiagram : public Error {
public:
    EmptyDiagram() : Error("no block primitives survive deduplication") {}
};

class UnparsableVerdict : public Error {
public:
    explicit UnparsableVerdict(const std::string& detail)
        : Error("could not parse grader verdict: " + detail) {}
};

class BackendUnavailable : public Error {
public:
    explicit BackendUnavailable(const std::string& detail)
        : Error("grading backend unavailable: " + detail) {}
};

class NoVerdicts : public Error {
public:
    NoVerdicts() : Error("cannot aggregate: no verdicts present") {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& detail) : Error("config error: " + detail) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& detail) : Error(detail) {}
};

}  // namespace flowgrade
