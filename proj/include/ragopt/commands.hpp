#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ragopt {

/// CLI entry points. Exit codes: 0 success, 1 usage/config error,
/// 2 data error, 3 backend outage (resumable).

struct SplitArgs {
    std::filesystem::path input;
    std::filesystem::path out_dir;
    std::size_t test_size = 490;
    std::optional<std::size_t> train_size;
    std::uint64_t seed = 0;
};

struct OptimizeArgs {
    std::filesystem::path config;
    bool resume = false;
    std::string mode = "iterative"; // iterative | brute-force
    int brute_n = 300;
};

struct EvaluateArgs {
    std::filesystem::path config;
    std::string mode;
    std::optional<std::filesystem::path> instruction_file;
};

struct SignificanceArgs {
    std::filesystem::path a;
    std::filesystem::path b;
    bool welch = false;
};

int cmd_split(const SplitArgs& args);
int cmd_stats(const std::filesystem::path& input);
int cmd_optimize(const OptimizeArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_significance(const SignificanceArgs& args);

} // namespace ragopt
