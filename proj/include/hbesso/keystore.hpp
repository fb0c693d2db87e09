#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hbesso/bytes.hpp"
#include "hbesso/random.hpp"

namespace hbesso {

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Raised for unreadable files or records that fail to parse; carries the
// 1-based line number when one applies.
class FileFormatError : public std::runtime_error {
public:
    FileFormatError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Symmetric keys by id. On disk: one "key-id<TAB>base64-key" line per key.
class KeyStore {
public:
    static KeyStore load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    void put(std::string id, Bytes key);
    const Bytes* find(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    std::size_t size() const { return keys_.size(); }

    // Adds a fresh random 128-bit key unless `id` already exists.
    void ensure(std::string id, RandomSource& rng);

private:
    std::map<std::string, Bytes, std::less<>> keys_;
};

}  // namespace hbesso
