#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cshield {

inline constexpr std::string_view tool_version = "cshield 0.1.0";

[[nodiscard]] std::string sha256_hex(std::string_view data);

// Provenance record written as the first (comment) line of every output.
// No timestamps or host data, so equal manifests mean equal runs.
class RunManifest
{
public:
    explicit RunManifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

    // Digest of an input file's bytes, keyed by the flag that named it.
    void add_input(std::string flag, std::string_view content);
    void add_param(std::string key, std::string value);
    void add_param(std::string key, double value);
    void add_param(std::string key, std::size_t value);

    [[nodiscard]] const std::string& subcommand() const { return subcommand_; }
    // One line, no trailing newline: "<comment> manifest {json}".
    [[nodiscard]] std::string line(std::string_view comment = "#") const;
    // JSON body without the comment prefix.
    [[nodiscard]] std::string json() const;

private:
    std::string subcommand_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::pair<std::string, std::string>> params_;
};

} // namespace cshield
