#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bsdegame/game_model.hpp"

namespace bsdegame {

/// A parameterized built-in game, selectable by id from configuration files.
struct ModelFamily {
    std::string family_id;
    std::string summary;
    ParamMap defaults;
    std::function<GameSpec(const ParamMap&)> build;

    /// Merges `overrides` into the defaults (unknown names are a UsageError)
    /// and builds the spec.
    GameSpec instantiate(const ParamMap& overrides = {}) const;
};

/// All built-in families, in a fixed order.
const std::vector<ModelFamily>& builtin_families();

/// Throws UsageError listing the known ids when `family_id` is unknown.
const ModelFamily& find_family(const std::string& family_id);

/// Shorthand for find_family(id).instantiate(overrides).
GameSpec make_game(const std::string& family_id, const ParamMap& overrides = {});

}  // namespace bsdegame
