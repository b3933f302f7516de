#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace calibra {

inline constexpr const char* kVersion = "0.1.0";

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct SimulateOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::string> preset;  // paper | desk
    std::optional<std::string> mode;    // single | multi | trunc_exp
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::filesystem::path> out;
};

struct CalibrateOptions {
    std::filesystem::path scores;
    std::string method;  // platt | logreg | logreg_ext | isotonic | binning
    std::size_t bins = 10;
    std::optional<int> degree;
    double ridge = 1e-4;
    std::filesystem::path out;
};

struct ApplyOptions {
    std::filesystem::path model;
    std::filesystem::path scores;
    std::filesystem::path out;
};

struct ReportOptions {
    std::filesystem::path results;
    std::filesystem::path out;
};

// Each command writes human-readable progress to `out`, diagnostics to
// `err`, and returns one of the exit codes above. Nothing is written to disk
// when the return value is kExitUsage.
int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CalibrateOptions& options, std::ostream& out, std::ostream& err);
int cmd_apply(const ApplyOptions& options, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err);

}  // namespace calibra
