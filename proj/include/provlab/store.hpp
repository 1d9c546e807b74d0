#pragma once

#include <string>
#include <utility>
#include <vector>

#include "provlab/sha256.hpp"

namespace provlab {

// Content-addressed artifact store rooted at a directory:
//
//   <root>/objects/<64-hex-digest>   object bytes, named by their sha256
//   <root>/index.txt                 "name <digest>\n" lines, append-only
//
// Identical bytes land at the identical path, so re-running a pipeline with
// the same inputs rewrites nothing. Writes go to a temp file first and are
// renamed into place; reads re-hash the bytes and fail loudly on corruption.
// The index maps human names to digests; the latest line for a name wins,
// and re-recording the current mapping is a no-op (the file only grows when
// something actually changed).
class ArtifactStore {
public:
    explicit ArtifactStore(std::string root);

    // Stores `bytes`, records `name` -> digest, returns the digest.
    Digest put(const std::string& name, const std::string& bytes);

    // Looks up `name` and returns the verified object bytes.
    std::string get(const std::string& name) const;
    std::string get_by_digest(const Digest& digest) const;

    bool has(const std::string& name) const;
    Digest digest_of(const std::string& name) const;  // throws if absent
    std::string object_path(const Digest& digest) const;
    const std::string& root() const { return root_; }

    // Index entries in file order (later entries shadow earlier ones).
    const std::vector<std::pair<std::string, Digest>>& entries() const { return entries_; }

private:
    const std::pair<std::string, Digest>* find(const std::string& name) const;

    std::string root_;
    std::vector<std::pair<std::string, Digest>> entries_;
};

}  // namespace provlab
