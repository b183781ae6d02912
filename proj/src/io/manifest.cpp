#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "vsmrf/errors.hpp"
#include "vsmrf/io.hpp"

namespace vsmrf {

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    std::ostringstream hex;
    hex << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) hex << std::setw(2) << static_cast<int>(digest[i]);
    return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

namespace {

Json digests_to_json(const std::vector<FileDigest>& v) {
    Json a = Json::array();
    for (const auto& d : v) a.push_back({{"path", d.path}, {"sha256", d.sha256}});
    return a;
}

std::vector<FileDigest> digests_from_json(const Json& j) {
    std::vector<FileDigest> out;
    for (const auto& d : j) out.push_back({d.at("path").get<std::string>(), d.at("sha256").get<std::string>()});
    return out;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

}  // namespace

Json RunManifest::to_json() const {
    return {{"format", "vsmrf-manifest"},
            {"version", 1},
            {"tool", tool},
            {"tool_version", tool_version},
            {"command", command},
            {"args", args},
            {"working_directory", working_directory},
            {"seed", seed},
            {"config", config},
            {"inputs", digests_to_json(inputs)},
            {"outputs", digests_to_json(outputs)},
            {"created", created.empty() ? utc_now() : created}};
}

RunManifest RunManifest::from_json(const Json& j) {
    try {
        if (j.at("format").get<std::string>() != "vsmrf-manifest") throw ParseError("not a run manifest");
        RunManifest m;
        m.tool = j.at("tool").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.args = j.at("args").get<std::vector<std::string>>();
        m.working_directory = j.at("working_directory").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config = j.at("config");
        m.inputs = digests_from_json(j.at("inputs"));
        m.outputs = digests_from_json(j.at("outputs"));
        m.created = j.value("created", "");
        return m;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed run manifest: ") + e.what());
    }
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
    auto p = output;
    p += ".manifest.json";
    return p;
}

}  // namespace vsmrf
