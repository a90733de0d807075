#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace critmem {

enum class ArtifactKind { critiques, index, semantic, report, probe };

std::string to_string(ArtifactKind kind);

// Fully determines the artifact bytes for scripted backends; config_hash
// covers every remaining input (backend specs, seeds, budgets).
struct ArtifactKey {
    ArtifactKind kind = ArtifactKind::critiques;
    std::string dataset;
    std::optional<std::string> user_id;
    std::string critic_model; // for index artifacts, the embed provider id
    double fraction = 1.0;
    std::string template_version;
    std::string config_hash;
};

// Write-once, content-addressed file store under one root directory.
// Layout: <root>/<kind>/<dataset>/<user>/<critic>__f<fraction>__<tv>__<hash>
class ArtifactStore {
public:
    explicit ArtifactStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path path_for(const ArtifactKey& key) const;

    // Re-putting identical bytes is a no-op; different bytes for the same key
    // is an integrity error.
    void put(const ArtifactKey& key, const std::string& bytes);

    // Absence is an expected outcome (build on demand), not an error.
    std::optional<std::string> get(const ArtifactKey& key) const;

private:
    std::filesystem::path root_;
};

std::string format_fraction(double fraction);

} // namespace critmem
