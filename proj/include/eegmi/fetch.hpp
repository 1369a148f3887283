#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eegmi {

class FetchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kDefaultSourceUrl = "https://physionet.org/files/eegmmidb/1.0.0";
inline constexpr const char* kCacheDirEnv = "EEGMI_CACHE_DIR";

/// Cache directory from $EEGMI_CACHE_DIR, else $HOME/.cache/eegmi.
std::filesystem::path default_cache_dir();

struct HttpResponse {
    long status = 0;
    std::vector<std::uint8_t> body;
    std::optional<std::uint64_t> content_length;
};

/// Minimal blocking GET interface so fetch logic can be exercised offline.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(const std::string& url) = 0;
};

/// libcurl-backed transport (follows redirects, fails on network errors).
class CurlTransport : public Transport {
public:
    explicit CurlTransport(long timeout_sec = 300);
    HttpResponse get(const std::string& url) override;

private:
    long timeout_sec_;
};

/// "S001R04.edf"
std::string run_file_name(int subject_id, int run_id);

struct FetchOptions {
    /// Runs to fetch; empty means all 14.
    std::vector<int> runs;
    /// Optional transport override; a CurlTransport is created when null.
    Transport* transport = nullptr;
};

/// Ensures the subject's run files are present under
/// `cache_dir/S###/` and returns their paths in run order. `source` is an
/// http(s) URL or a local directory laid out like the remote corpus
/// (`S###/S###R##.edf`). Cached files listed in the subject manifest with a
/// matching byte length are reused without touching the source. A
/// `SHA256SUMS.txt` at the source root, when available, is used to verify
/// each new file.
std::vector<std::filesystem::path> fetch_subject(int subject_id, const std::string& source,
                                                 const std::filesystem::path& cache_dir,
                                                 const FetchOptions& options = {});

}  // namespace eegmi
