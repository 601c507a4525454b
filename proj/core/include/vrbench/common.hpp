#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vrbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define VRBENCH_DEFINE_ERROR(Name)          \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    }

VRBENCH_DEFINE_ERROR(ParseError);
VRBENCH_DEFINE_ERROR(MissingPairError);
VRBENCH_DEFINE_ERROR(UnknownElement);
VRBENCH_DEFINE_ERROR(InvalidGraph);
VRBENCH_DEFINE_ERROR(ExtractionError);
VRBENCH_DEFINE_ERROR(BehaviorUnavailable);
VRBENCH_DEFINE_ERROR(CatalogEmpty);
VRBENCH_DEFINE_ERROR(RenameCollision);
VRBENCH_DEFINE_ERROR(CompilerUnavailable);
VRBENCH_DEFINE_ERROR(IncompleteTriple);
VRBENCH_DEFINE_ERROR(FillBehaviorClash);
VRBENCH_DEFINE_ERROR(EmptyUniverse);
VRBENCH_DEFINE_ERROR(MissingDemos);
VRBENCH_DEFINE_ERROR(NoSafeItems);
VRBENCH_DEFINE_ERROR(JoinError);
VRBENCH_DEFINE_ERROR(IncompletePair);
VRBENCH_DEFINE_ERROR(ConfigError);
VRBENCH_DEFINE_ERROR(Timeout);
VRBENCH_DEFINE_ERROR(HttpError);
VRBENCH_DEFINE_ERROR(RateLimited);

#undef VRBENCH_DEFINE_ERROR

/// Byte and line extent of a piece of source text. Lines are 1-based,
/// byte offsets are 0-based and half-open.
struct Span {
    std::uint32_t byte_start = 0;
    std::uint32_t byte_end = 0;
    std::uint32_t line_start = 1;
    std::uint32_t line_end = 1;

    bool contains(const Span& other) const {
        return byte_start <= other.byte_start && other.byte_end <= byte_end;
    }
    bool overlaps(const Span& other) const {
        return byte_start < other.byte_end && other.byte_start < byte_end;
    }
    std::uint32_t length() const { return byte_end - byte_start; }
    friend bool operator==(const Span&, const Span&) = default;
};

// 64-bit FNV-1a. Used for stable ids and seed derivation; must not change
// between releases since ids are persisted.
constexpr std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent seed for a named sub-stream of a global seed, so
/// that results never depend on the order in which items are processed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    return splitmix64(seed ^ fnv1a(tag));
}

std::string hex_id(std::uint64_t value, std::size_t digits = 16);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
std::vector<std::string> split_lines(std::string_view text);
bool contains_ci(std::string_view haystack, std::string_view needle);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace vrbench
