#include "cshield/manifest.hpp"

#include <array>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

namespace cshield {

std::string sha256_hex(std::string_view data)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

void RunManifest::add_input(std::string flag, std::string_view content)
{
    inputs_.emplace_back(std::move(flag), "sha256:" + sha256_hex(content));
}

void RunManifest::add_param(std::string key, std::string value)
{
    params_.emplace_back(std::move(key), std::move(value));
}

void RunManifest::add_param(std::string key, double value)
{
    params_.emplace_back(std::move(key), fmt::format("{}", value));
}

void RunManifest::add_param(std::string key, std::size_t value)
{
    params_.emplace_back(std::move(key), fmt::format("{}", value));
}

std::string RunManifest::json() const
{
    nlohmann::ordered_json j;
    j["tool"] = tool_version;
    j["subcommand"] = subcommand_;
    auto& inputs = j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : inputs_) inputs[k] = v;
    auto& params = j["params"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : params_) params[k] = v;
    return j.dump();
}

std::string RunManifest::line(std::string_view comment) const
{
    return fmt::format("{} manifest {}", comment, json());
}

} // namespace cshield
