#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace bubblelab::cli {

struct Overrides {
    std::filesystem::path out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> k_max;
    /// Worker cap from BUBBLELAB_THREADS; at least 1.
    unsigned threads = 1;
};

/// Each command validates the whole config before touching the output directory.
/// ConfigError means exit code 2; any other exception means 1.
void cmd_solve_radial(const std::string& config_text, const Overrides& o);
void cmd_sweep_beta(const std::string& config_text, const Overrides& o);
void cmd_family(const std::string& config_text, const Overrides& o);
void cmd_detect(const std::string& config_text, const Overrides& o);
void cmd_quantize(const std::string& config_text, const Overrides& o);
void cmd_green_check(const std::string& config_text, const Overrides& o);

/// Parses BUBBLELAB_THREADS (unset: hardware concurrency); throws ConfigError when malformed.
unsigned thread_cap(const char* env);

}  // namespace bubblelab::cli
