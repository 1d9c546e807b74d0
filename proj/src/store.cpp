#include "provlab/store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace provlab {
namespace {

void check_name(const std::string& name) {
    if (name.empty()) throw std::invalid_argument("artifact name must not be empty");
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        if (!ok)
            throw std::invalid_argument("artifact name '" + name +
                                        "' may only contain [A-Za-z0-9._-]");
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) throw std::runtime_error("read failed: " + path.string());
    return std::move(buf).str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot create " + tmp.string());
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.flush();
        if (!out.good()) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace

ArtifactStore::ArtifactStore(std::string root) : root_(std::move(root)) {
    if (root_.empty()) throw std::invalid_argument("store root must not be empty");
    fs::create_directories(fs::path(root_) / "objects");
    const fs::path index = fs::path(root_) / "index.txt";
    if (!fs::exists(index)) return;
    std::ifstream in(index);
    if (!in) throw std::runtime_error("cannot open " + index.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t space = line.find(' ');
        if (space == std::string::npos || space == 0 || line.size() != space + 65)
            throw std::runtime_error(index.string() + ":" + std::to_string(lineno) +
                                     ": malformed index line");
        entries_.emplace_back(line.substr(0, space), Digest::from_hex(line.substr(space + 1)));
    }
}

const std::pair<std::string, Digest>* ArtifactStore::find(const std::string& name) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
        if (it->first == name) return &*it;
    return nullptr;
}

Digest ArtifactStore::put(const std::string& name, const std::string& bytes) {
    check_name(name);
    const Digest digest = sha256(bytes);
    const fs::path path = object_path(digest);
    if (!fs::exists(path)) write_file_atomic(path, bytes);

    const auto* current = find(name);
    if (current == nullptr || !(current->second == digest)) {
        std::ofstream out(fs::path(root_) / "index.txt", std::ios::app);
        if (!out) throw std::runtime_error("cannot append to index in " + root_);
        out << name << ' ' << digest.hex() << '\n';
        out.flush();
        if (!out.good()) throw std::runtime_error("index append failed in " + root_);
        entries_.emplace_back(name, digest);
    }
    return digest;
}

std::string ArtifactStore::get(const std::string& name) const {
    return get_by_digest(digest_of(name));
}

std::string ArtifactStore::get_by_digest(const Digest& digest) const {
    const std::string bytes = read_file(object_path(digest));
    if (!(sha256(bytes) == digest))
        throw std::runtime_error("object " + digest.hex() + " is corrupt (digest mismatch)");
    return bytes;
}

bool ArtifactStore::has(const std::string& name) const { return find(name) != nullptr; }

Digest ArtifactStore::digest_of(const std::string& name) const {
    const auto* entry = find(name);
    if (entry == nullptr) throw std::runtime_error("no artifact named '" + name + "'");
    return entry->second;
}

std::string ArtifactStore::object_path(const Digest& digest) const {
    return (fs::path(root_) / "objects" / digest.hex()).string();
}

}  // namespace provlab
