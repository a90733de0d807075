#include "critmem/store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "critmem/errors.hpp"

namespace critmem {

std::string to_string(ArtifactKind kind) {
    switch (kind) {
    case ArtifactKind::critiques: return "critiques";
    case ArtifactKind::index: return "index";
    case ArtifactKind::semantic: return "semantic";
    case ArtifactKind::report: return "report";
    case ArtifactKind::probe: return "probe";
    }
    return "critiques";
}

namespace {

std::string sanitize(const std::string& component) {
    std::string out;
    out.reserve(component.size());
    for (char c : component) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? std::string("_") : out;
}

} // namespace

std::string format_fraction(double fraction) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%g", fraction);
    return buffer;
}

ArtifactStore::ArtifactStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::filesystem::path ArtifactStore::path_for(const ArtifactKey& key) const {
    std::filesystem::path path = root_ / to_string(key.kind) / sanitize(key.dataset) /
                                 sanitize(key.user_id.value_or("_"));
    const std::string name = sanitize(key.critic_model) + "__f" +
                             sanitize(format_fraction(key.fraction)) + "__" +
                             sanitize(key.template_version) + "__" + sanitize(key.config_hash) +
                             ".json";
    return path / name;
}

void ArtifactStore::put(const ArtifactKey& key, const std::string& bytes) {
    const std::filesystem::path path = path_for(key);
    if (std::filesystem::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream existing;
        existing << in.rdbuf();
        if (existing.str() == bytes) return; // idempotent re-put
        throw IntegrityError("artifact " + path.string() +
                             " already exists with different bytes");
    }
    std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IntegrityError("cannot write artifact " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    std::filesystem::rename(tmp, path);
}

std::optional<std::string> ArtifactStore::get(const ArtifactKey& key) const {
    const std::filesystem::path path = path_for(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return bytes.str();
}

} // namespace critmem
