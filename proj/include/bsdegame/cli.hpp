#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bsdegame/bsde_solver.hpp"
#include "bsdegame/game_model.hpp"

namespace bsdegame::cli {

/// Malformed configuration; the message names the line or the field.
class ConfigError : public UsageError {
public:
    using UsageError::UsageError;
};

/// Parsed run configuration. Field names mirror the JSON keys.
struct RunConfig {
    // model
    std::string family;
    ParamMap parameters;
    std::optional<double> lipschitz;
    std::optional<double> bound;
    std::optional<std::vector<double>> u_points;
    std::optional<std::vector<double>> v_points;
    // partition
    double start_time = 0.0;
    std::optional<double> end_time;
    std::size_t steps = 50;
    // grid
    std::vector<double> grid_lo;
    std::vector<double> grid_hi;
    std::vector<std::size_t> grid_nodes;
    // run
    std::vector<double> start_state;
    double epsilon = 0.05;
    std::size_t paths = 10000;
    std::uint64_t seed = 7;
    std::string output_dir = "out";
    // command options
    std::size_t validate_samples = 1000;
    std::size_t isaacs_queries = 1000;
    std::uint64_t isaacs_seed = 1234;
    std::size_t coarse_cells = 10;
    std::size_t deviate_paths = 2000;
    std::size_t export_paths = 100;
    SchemeOptions scheme;

    std::string canonical;  ///< sorted, whitespace-free JSON of the resolved configuration
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// FNV-1a 64-bit hash, hex encoded.
std::string fnv1a_hex(const std::string& text);

/// Builds the game described by the model section.
GameSpec build_game(const RunConfig& config);

struct RunOverrides {
    std::optional<std::string> config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFail = 2;

const std::vector<std::string>& command_names();

/// Runs one command; returns the process exit status.
///
/// Output directory precedence: --out, then BSDEGAME_OUT, then the config.
int run(const std::string& command, const RunOverrides& overrides, std::ostream& out, std::ostream& err);

}  // namespace bsdegame::cli
