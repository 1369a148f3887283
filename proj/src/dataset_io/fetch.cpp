#include "eegmi/fetch.hpp"

#include <curl/curl.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include <json.hpp>

#include "eegmi/edf.hpp"
#include "eegmi/hashing.hpp"

namespace fs = std::filesystem;

namespace eegmi {

namespace {

bool is_remote(const std::string& source) {
    return source.rfind("http://", 0) == 0 || source.rfind("https://", 0) == 0;
}

std::string subject_dir_name(int subject_id) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "S%03d", subject_id);
    return buf;
}

std::string join_url(std::string base, const std::string& rel) {
    while (!base.empty() && base.back() == '/') base.pop_back();
    return base + "/" + rel;
}

size_t write_body(char* ptr, size_t size, size_t nmemb, void* userdata) {
    auto* body = static_cast<std::vector<std::uint8_t>*>(userdata);
    body->insert(body->end(), ptr, ptr + size * nmemb);
    return size * nmemb;
}

void write_atomically(const fs::path& target, std::span<const std::uint8_t> bytes) {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    fs::path tmp = target;
    tmp += ".part" + std::to_string(rng());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FetchError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw FetchError("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

/// Parses "<hex>  <relative path>" lines.
std::map<std::string, std::string> parse_checksums(std::string_view text) {
    std::map<std::string, std::string> sums;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string hash, path;
        if (ls >> hash >> path) {
            if (!path.empty() && path.front() == '*') path.erase(0, 1);
            sums[path] = hash;
        }
    }
    return sums;
}

void check_complete_edf(std::span<const std::uint8_t> bytes, const std::string& what) {
    EdfHeader h;
    try {
        h = parse_edf_header(bytes);
    } catch (const EdfFormatError& e) {
        throw FetchError(what + ": truncated or malformed download (" + e.what() + ")");
    }
    const std::size_t payload = bytes.size() - static_cast<std::size_t>(h.header_bytes);
    const std::size_t rb = h.record_bytes();
    const bool complete = h.record_count > 0 ? payload == rb * static_cast<std::size_t>(h.record_count)
                                             : payload > 0 && payload % rb == 0;
    if (!complete) throw FetchError(what + ": truncated download (" + std::to_string(bytes.size()) + " bytes)");
}

}  // namespace

fs::path default_cache_dir() {
    if (const char* env = std::getenv(kCacheDirEnv); env && *env) return env;
    if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "eegmi";
    return fs::temp_directory_path() / "eegmi-cache";
}

CurlTransport::CurlTransport(long timeout_sec) : timeout_sec_(timeout_sec) {
    static std::once_flag once;
    std::call_once(once, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

HttpResponse CurlTransport::get(const std::string& url) {
    std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), &curl_easy_cleanup);
    if (!curl) throw FetchError("curl initialisation failed");
    HttpResponse resp;
    curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT, timeout_sec_);
    curl_easy_setopt(curl.get(), CURLOPT_CONNECTTIMEOUT, 30L);
    curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, &write_body);
    curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &resp.body);
    CURLcode rc = curl_easy_perform(curl.get());
    if (rc != CURLE_OK) throw FetchError("cannot reach " + url + ": " + curl_easy_strerror(rc));
    curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &resp.status);
    curl_off_t length = -1;
    if (curl_easy_getinfo(curl.get(), CURLINFO_CONTENT_LENGTH_DOWNLOAD_T, &length) == CURLE_OK && length >= 0)
        resp.content_length = static_cast<std::uint64_t>(length);
    return resp;
}

std::string run_file_name(int subject_id, int run_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "S%03dR%02d.edf", subject_id, run_id);
    return buf;
}

std::vector<fs::path> fetch_subject(int subject_id, const std::string& source, const fs::path& cache_dir,
                                    const FetchOptions& options) {
    if (subject_id < 1 || subject_id > 109)
        throw std::out_of_range("subject id " + std::to_string(subject_id) + " outside 1..109");
    std::vector<int> runs = options.runs;
    if (runs.empty())
        for (int r = 1; r <= 14; ++r) runs.push_back(r);
    for (int r : runs)
        if (r < 1 || r > 14) throw std::out_of_range("run id " + std::to_string(r) + " outside 1..14");

    const std::string subject = subject_dir_name(subject_id);
    const fs::path dir = cache_dir / subject;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw FetchError("cache directory not writable: " + dir.string() + " (" + ec.message() + ")");

    const fs::path manifest_path = dir / "manifest.json";
    nlohmann::json manifest = nlohmann::json::object();
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        try {
            manifest = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception&) {
            manifest = nlohmann::json::object();
        }
    }
    if (!manifest.contains("files")) manifest["files"] = nlohmann::json::object();

    const bool remote = is_remote(source);
    std::unique_ptr<Transport> owned;
    Transport* transport = options.transport;
    auto net = [&]() -> Transport& {
        if (!transport) {
            owned = std::make_unique<CurlTransport>();
            transport = owned.get();
        }
        return *transport;
    };

    std::optional<std::map<std::string, std::string>> checksums;
    auto load_checksums = [&]() -> const std::map<std::string, std::string>& {
        if (checksums) return *checksums;
        checksums.emplace();
        if (remote) {
            try {
                auto resp = net().get(join_url(source, "SHA256SUMS.txt"));
                if (resp.status == 200)
                    *checksums = parse_checksums(
                        std::string_view(reinterpret_cast<const char*>(resp.body.data()), resp.body.size()));
            } catch (const FetchError&) {
                // unverified download, the EDF completeness check still applies
            }
        } else {
            fs::path sums = fs::path(source) / "SHA256SUMS.txt";
            if (fs::exists(sums)) {
                auto bytes = read_file_bytes(sums.string());
                *checksums =
                    parse_checksums(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
            }
        }
        return *checksums;
    };

    std::vector<fs::path> paths;
    for (int run : runs) {
        const std::string name = run_file_name(subject_id, run);
        const fs::path target = dir / name;
        const auto& files = manifest["files"];
        if (fs::exists(target) && files.contains(name) &&
            files[name].value("bytes", std::uint64_t{0}) == fs::file_size(target)) {
            paths.push_back(target);
            continue;
        }

        const std::string rel = subject + "/" + name;
        std::vector<std::uint8_t> bytes;
        std::string origin;
        if (remote) {
            origin = join_url(source, rel);
            auto resp = net().get(origin);
            if (resp.status != 200)
                throw FetchError("GET " + origin + " returned HTTP " + std::to_string(resp.status));
            if (resp.content_length && *resp.content_length != resp.body.size())
                throw FetchError(origin + ": truncated download (" + std::to_string(resp.body.size()) + " of " +
                                 std::to_string(*resp.content_length) + " bytes)");
            bytes = std::move(resp.body);
        } else {
            fs::path local = fs::path(source) / rel;
            if (!fs::exists(local)) local = fs::path(source) / name;
            if (!fs::exists(local)) throw FetchError("source has no " + rel + " under " + source);
            origin = fs::absolute(local).string();
            bytes = read_file_bytes(local.string());
        }
        check_complete_edf(bytes, origin);

        const std::string digest = sha256_hex(std::span<const std::uint8_t>(bytes));
        const auto& sums = load_checksums();
        if (auto it = sums.find(rel); it != sums.end() && it->second != digest)
            throw FetchError(origin + ": checksum mismatch (expected " + it->second + ", got " + digest + ")");

        write_atomically(target, bytes);
        manifest["source"] = source;
        manifest["files"][name] = {{"url", origin}, {"bytes", bytes.size()}, {"sha256", digest}};
        std::string text = manifest.dump(2);
        write_atomically(manifest_path, std::span<const std::uint8_t>(
                                            reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
        paths.push_back(target);
    }
    return paths;
}

}  // namespace eegmi
