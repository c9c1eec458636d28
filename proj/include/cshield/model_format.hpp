#pragma once

#include "cshield/mdp.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cshield {

// Guarded-command MDP models: a single-module subset of the PRISM language.
//
//   mdp
//   const int N = 4;  const double p = 0.1;
//   formula edge = x=N;
//   module taxi
//     x : [0..N] init 0;
//     [go] !edge -> 1-p:(x'=x+1) + p:(x'=x);
//   endmodule
//   label "goal" = edge;
//
// Expressions support + - *, comparisons, & | !, parentheses and min/max of
// two arguments. Anything else is rejected as an unsupported construct.

struct ModelSource
{
    std::string text;
    std::string origin;
};

struct ParseResult
{
    std::optional<ExplicitMdp> model;
    std::vector<Diagnostic> diagnostics;
    bool scale_limit_exceeded = false;

    [[nodiscard]] bool ok() const { return model.has_value(); }
    // Diagnostics joined one per line.
    [[nodiscard]] std::string report() const;
};

inline constexpr std::size_t max_reachable_states = 1'000'000;

// States are the reachable valuations in lexicographic order of the declared
// variables. Actions are numbered by first appearance of their label. States
// without an enabled command get a self-loop on action 0.
[[nodiscard]] ParseResult parse_model(const ModelSource& src);

// Reads a file into a ModelSource; throws InputError when unreadable.
[[nodiscard]] ModelSource load_model_source(const std::filesystem::path& path);

// Parses a file and throws InputError (or ScaleLimitError) on any error.
[[nodiscard]] ExplicitMdp load_model(const std::filesystem::path& path);

// Flattened textual model over one state variable `s`. `header` lines are
// written as `//` comments. If the model carries valid, unique state names
// they are declared as integer constants and used in guards and updates.
// Only states reachable from the initial state survive a re-parse.
[[nodiscard]] std::string emit_model(const ExplicitMdp& m, const std::vector<std::string>& header = {});

} // namespace cshield
