#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace conecpt::cli {

enum ExitCode : int {
    kSuccess = 0,
    kFailure = 1,  ///< assumption or optimization failure
    kUsage = 2,    ///< usage or config error
};

struct Options {
    std::string command;
    std::filesystem::path config;
    std::filesystem::path out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    bool skip_verify = false;
    std::filesystem::path strategy;        // evaluate
    std::optional<std::size_t> n_paths;    // simulate
};

/// Runs one command. Reports go to `out`, diagnostics to `err`.
int run(const Options& options, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to run().
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace conecpt::cli
