#include "eegmi/edf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

namespace eegmi {

namespace {

constexpr std::size_t kFixedHeaderBytes = 256;
constexpr std::size_t kSignalHeaderBytes = 256;

std::string trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

class FieldReader {
public:
    explicit FieldReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::string text(std::size_t width) {
        if (pos_ + width > bytes_.size()) throw EdfFormatError("EDF header truncated");
        std::string_view raw(reinterpret_cast<const char*>(bytes_.data() + pos_), width);
        pos_ += width;
        return trim(raw);
    }

    long integer(std::size_t width, const char* what) {
        auto field = text(width);
        std::string_view sv = field;
        if (!sv.empty() && sv.front() == '+') sv.remove_prefix(1);
        long value = 0;
        auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
        if (ec != std::errc() || ptr != sv.data() + sv.size() || sv.empty())
            throw EdfFormatError(std::string("malformed integer field '") + what + "': '" + field + "'");
        return value;
    }

    double real(std::size_t width, const char* what) {
        auto field = text(width);
        std::string_view sv = field;
        if (!sv.empty() && sv.front() == '+') sv.remove_prefix(1);
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
        if (ec != std::errc() || ptr != sv.data() + sv.size() || sv.empty())
            throw EdfFormatError(std::string("malformed numeric field '") + what + "': '" + field + "'");
        return value;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::string fit_field(std::string value, std::size_t width, const char* what) {
    if (value.size() > width)
        throw EdfFormatError(std::string("value for '") + what + "' does not fit in " + std::to_string(width) +
                             " bytes: '" + value + "'");
    value.resize(width, ' ');
    return value;
}

std::string format_number(double v, std::size_t width) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, ptr);
    if (s.size() <= width) return s;
    for (int precision = static_cast<int>(width); precision > 0; --precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strlen(buf) <= width) return buf;
    }
    throw EdfFormatError("number does not fit EDF field: " + s);
}

std::string format_integer(long v) { return std::to_string(v); }

}  // namespace

double EdfSignalHeader::to_physical(int digital) const {
    return (static_cast<double>(digital) - digital_min) * (physical_max - physical_min) /
               static_cast<double>(digital_max - digital_min) +
           physical_min;
}

std::int16_t EdfSignalHeader::to_digital(double physical) const {
    double d = (physical - physical_min) * static_cast<double>(digital_max - digital_min) /
                   (physical_max - physical_min) +
               digital_min;
    d = std::clamp(std::round(d), static_cast<double>(digital_min), static_cast<double>(digital_max));
    return static_cast<std::int16_t>(d);
}

bool EdfHeader::is_edf_plus() const { return reserved.rfind("EDF+", 0) == 0; }

int EdfHeader::annotation_index() const {
    for (std::size_t i = 0; i < signals.size(); ++i)
        if (signals[i].is_annotation()) return static_cast<int>(i);
    return -1;
}

std::size_t EdfHeader::record_bytes() const {
    std::size_t samples = 0;
    for (const auto& s : signals) samples += static_cast<std::size_t>(s.samples_per_record);
    return samples * 2;
}

std::string_view to_string(EventCode code) {
    switch (code) {
        case EventCode::T0: return "T0";
        case EventCode::T1: return "T1";
        case EventCode::T2: return "T2";
    }
    return "?";
}

EdfHeader parse_edf_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFixedHeaderBytes) throw EdfFormatError("EDF header truncated");
    FieldReader r(bytes);
    EdfHeader h;
    h.version = r.text(8);
    h.patient_id = r.text(80);
    h.recording_id = r.text(80);
    h.start_date = r.text(8);
    h.start_time = r.text(8);
    h.header_bytes = static_cast<int>(r.integer(8, "header bytes"));
    h.reserved = r.text(44);
    h.record_count = r.integer(8, "number of data records");
    h.record_duration = r.real(8, "record duration");
    h.signal_count = static_cast<int>(r.integer(4, "number of signals"));

    if (h.version != "0") throw EdfFormatError("unsupported EDF version '" + h.version + "'");
    if (h.signal_count < 1) throw EdfFormatError("EDF file declares no signals");
    if (h.record_count < 1 && h.record_count != -1)
        throw EdfFormatError("invalid record count " + std::to_string(h.record_count));
    if (!(h.record_duration > 0.0)) throw EdfFormatError("record duration must be positive");
    const auto ns = static_cast<std::size_t>(h.signal_count);
    if (static_cast<std::size_t>(h.header_bytes) != kFixedHeaderBytes + kSignalHeaderBytes * ns)
        throw EdfFormatError("header byte count " + std::to_string(h.header_bytes) + " inconsistent with " +
                             std::to_string(ns) + " signals");
    if (bytes.size() < static_cast<std::size_t>(h.header_bytes)) throw EdfFormatError("EDF signal headers truncated");

    h.signals.resize(ns);
    for (auto& s : h.signals) s.label = r.text(16);
    for (auto& s : h.signals) s.transducer = r.text(80);
    for (auto& s : h.signals) s.physical_dimension = r.text(8);
    for (auto& s : h.signals) s.physical_min = r.real(8, "physical minimum");
    for (auto& s : h.signals) s.physical_max = r.real(8, "physical maximum");
    for (auto& s : h.signals) s.digital_min = static_cast<int>(r.integer(8, "digital minimum"));
    for (auto& s : h.signals) s.digital_max = static_cast<int>(r.integer(8, "digital maximum"));
    for (auto& s : h.signals) s.prefiltering = r.text(80);
    for (auto& s : h.signals) s.samples_per_record = static_cast<int>(r.integer(8, "samples per record"));
    for (auto& s : h.signals) s.reserved = r.text(32);

    int annotation_signals = 0;
    for (const auto& s : h.signals) {
        if (s.digital_max <= s.digital_min)
            throw EdfFormatError("signal '" + s.label + "': digital maximum must exceed digital minimum");
        if (s.digital_min < -32768 || s.digital_max > 32767)
            throw EdfFormatError("signal '" + s.label + "': digital range exceeds 16 bits");
        if (s.physical_max == s.physical_min)
            throw EdfFormatError("signal '" + s.label + "': physical range is empty");
        if (s.samples_per_record < 1)
            throw EdfFormatError("signal '" + s.label + "': samples per record must be positive");
        if (s.is_annotation()) ++annotation_signals;
    }
    if (h.is_edf_plus() && annotation_signals != 1)
        throw EdfFormatError("EDF+ file must carry exactly one 'EDF Annotations' signal");
    return h;
}

ParsedEdf parse_edf(std::span<const std::uint8_t> bytes) {
    ParsedEdf out;
    auto& h = out.header;
    h = parse_edf_header(bytes);

    const std::size_t record_bytes = h.record_bytes();
    const std::size_t payload = bytes.size() - static_cast<std::size_t>(h.header_bytes);
    if (h.record_count == -1) {
        if (payload % record_bytes != 0)
            throw EdfFormatError("cannot infer record count: data size is not a multiple of the record size");
        h.record_count = static_cast<long>(payload / record_bytes);
        if (h.record_count < 1) throw EdfFormatError("EDF file contains no data records");
    } else if (payload != record_bytes * static_cast<std::size_t>(h.record_count)) {
        throw EdfFormatError("data size " + std::to_string(payload) + " inconsistent with " +
                             std::to_string(h.record_count) + " records of " + std::to_string(record_bytes) +
                             " bytes");
    }

    auto& rec = out.recording;
    const int ann = h.annotation_index();
    int samples_per_record = -1;
    std::vector<std::size_t> channel_of_signal(h.signals.size(), 0);
    for (std::size_t i = 0; i < h.signals.size(); ++i) {
        const auto& s = h.signals[i];
        if (static_cast<int>(i) == ann) continue;
        if (samples_per_record == -1) samples_per_record = s.samples_per_record;
        if (s.samples_per_record != samples_per_record)
            throw EdfFormatError("signals with mixed sampling rates are not supported");
        channel_of_signal[i] = rec.channels.size();
        rec.channels.push_back(s.label);
    }
    if (samples_per_record > 0) rec.fs = samples_per_record / h.record_duration;
    rec.data.assign(rec.channels.size(), {});
    for (auto& ch : rec.data) ch.reserve(static_cast<std::size_t>(samples_per_record) * h.record_count);

    const std::uint8_t* p = bytes.data() + h.header_bytes;
    for (long r = 0; r < h.record_count; ++r) {
        for (std::size_t i = 0; i < h.signals.size(); ++i) {
            const auto& s = h.signals[i];
            const auto n = static_cast<std::size_t>(s.samples_per_record);
            if (static_cast<int>(i) == ann) {
                out.annotation_records.emplace_back(reinterpret_cast<const char*>(p), 2 * n);
            } else {
                auto& dst = rec.data[channel_of_signal[i]];
                for (std::size_t k = 0; k < n; ++k) {
                    auto raw = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[2 * k]) |
                                                         static_cast<std::uint16_t>(p[2 * k + 1]) << 8);
                    dst.push_back(s.to_physical(raw));
                }
            }
            p += 2 * n;
        }
    }
    return out;
}

std::vector<std::uint8_t> serialize_edf(const EdfHeader& header, const Recording& recording,
                                        const std::vector<std::string>& annotation_records) {
    const int ann = header.annotation_index();
    const std::size_t ns = header.signals.size();
    if (ns == 0) throw EdfFormatError("cannot serialize EDF without signals");
    const std::size_t data_signals = ns - (ann >= 0 ? 1 : 0);
    if (recording.data.size() != data_signals)
        throw EdfFormatError("recording channel count does not match header signals");

    long records = header.record_count;
    std::size_t spr = 0;
    for (std::size_t i = 0; i < ns; ++i)
        if (static_cast<int>(i) != ann) {
            spr = static_cast<std::size_t>(header.signals[i].samples_per_record);
            break;
        }
    if (spr > 0) {
        if (recording.length() % spr != 0) throw EdfFormatError("recording length is not a whole number of records");
        records = static_cast<long>(recording.length() / spr);
    } else {
        records = static_cast<long>(annotation_records.size());
    }
    if (ann >= 0 && annotation_records.size() != static_cast<std::size_t>(records))
        throw EdfFormatError("need one annotation block per data record");

    std::string head;
    head += fit_field(header.version, 8, "version");
    head += fit_field(header.patient_id, 80, "patient");
    head += fit_field(header.recording_id, 80, "recording");
    head += fit_field(header.start_date, 8, "start date");
    head += fit_field(header.start_time, 8, "start time");
    head += fit_field(format_integer(static_cast<long>(256 * (ns + 1))), 8, "header bytes");
    head += fit_field(header.reserved, 44, "reserved");
    head += fit_field(format_integer(records), 8, "records");
    head += fit_field(format_number(header.record_duration, 8), 8, "duration");
    head += fit_field(format_integer(static_cast<long>(ns)), 4, "signals");
    for (const auto& s : header.signals) head += fit_field(s.label, 16, "label");
    for (const auto& s : header.signals) head += fit_field(s.transducer, 80, "transducer");
    for (const auto& s : header.signals) head += fit_field(s.physical_dimension, 8, "dimension");
    for (const auto& s : header.signals) head += fit_field(format_number(s.physical_min, 8), 8, "physical min");
    for (const auto& s : header.signals) head += fit_field(format_number(s.physical_max, 8), 8, "physical max");
    for (const auto& s : header.signals) head += fit_field(format_integer(s.digital_min), 8, "digital min");
    for (const auto& s : header.signals) head += fit_field(format_integer(s.digital_max), 8, "digital max");
    for (const auto& s : header.signals) head += fit_field(s.prefiltering, 80, "prefiltering");
    for (const auto& s : header.signals) head += fit_field(format_integer(s.samples_per_record), 8, "samples");
    for (const auto& s : header.signals) head += fit_field(s.reserved, 32, "reserved");

    std::vector<std::uint8_t> out(head.begin(), head.end());
    std::size_t record_bytes = header.record_bytes();
    out.reserve(out.size() + record_bytes * static_cast<std::size_t>(records));
    for (long r = 0; r < records; ++r) {
        std::size_t channel = 0;
        for (std::size_t i = 0; i < ns; ++i) {
            const auto& s = header.signals[i];
            const auto n = static_cast<std::size_t>(s.samples_per_record);
            if (static_cast<int>(i) == ann) {
                const auto& block = annotation_records[static_cast<std::size_t>(r)];
                if (block.size() > 2 * n) throw EdfFormatError("annotation block exceeds its record slot");
                out.insert(out.end(), block.begin(), block.end());
                out.insert(out.end(), 2 * n - block.size(), std::uint8_t{0});
                continue;
            }
            const auto& src = recording.data[channel++];
            for (std::size_t k = 0; k < n; ++k) {
                auto d = static_cast<std::uint16_t>(s.to_digital(src[static_cast<std::size_t>(r) * n + k]));
                out.push_back(static_cast<std::uint8_t>(d & 0xFF));
                out.push_back(static_cast<std::uint8_t>(d >> 8));
            }
        }
    }
    return out;
}

std::vector<Event> extract_events(std::string_view stream) {
    constexpr char kDuration = 0x15;
    constexpr char kSeparator = 0x14;
    std::vector<Event> events;
    std::size_t i = 0;
    const std::size_t n = stream.size();
    while (i < n) {
        if (stream[i] == '\0') {
            ++i;
            continue;
        }
        if (stream[i] != '+' && stream[i] != '-')
            throw EdfFormatError("TAL must start with an onset sign at byte " + std::to_string(i));
        std::size_t end = stream.find_first_of(std::string_view("\x14\x15", 2), i);
        if (end == std::string_view::npos) throw EdfFormatError("unterminated TAL onset");

        auto parse_seconds = [](std::string_view text, const char* what) {
            std::string_view sv = text;
            if (!sv.empty() && sv.front() == '+') sv.remove_prefix(1);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
            if (sv.empty() || ec != std::errc() || ptr != sv.data() + sv.size())
                throw EdfFormatError(std::string("undecodable TAL ") + what + " '" + std::string(text) + "'");
            return v;
        };
        const double onset = parse_seconds(stream.substr(i, end - i), "onset");
        double duration = 0.0;
        i = end;
        if (stream[i] == kDuration) {
            ++i;
            end = stream.find(kSeparator, i);
            if (end == std::string_view::npos) throw EdfFormatError("unterminated TAL duration");
            duration = parse_seconds(stream.substr(i, end - i), "duration");
            if (duration < 0) throw EdfFormatError("negative TAL duration");
            i = end;
        }
        ++i;  // past the 0x14 closing onset/duration
        // annotation texts, each closed by 0x14, list closed by 0x00
        while (i < n && stream[i] != '\0') {
            end = stream.find(kSeparator, i);
            if (end == std::string_view::npos) throw EdfFormatError("unterminated TAL annotation text");
            std::string_view label = stream.substr(i, end - i);
            i = end + 1;
            if (label.empty()) continue;
            Event e;
            e.onset = onset;
            e.duration = duration;
            if (label == "T0") e.code = EventCode::T0;
            else if (label == "T1") e.code = EventCode::T1;
            else if (label == "T2") e.code = EventCode::T2;
            else
                throw EdfFormatError("unexpected annotation label '" + std::string(label) + "' at onset " +
                                     std::to_string(onset) + " s");
            if (e.onset < 0) throw EdfFormatError("negative event onset");
            events.push_back(e);
        }
        if (i >= n) throw EdfFormatError("TAL not terminated by 0x00");
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.onset < b.onset; });
    return events;
}

std::vector<Event> extract_events(const std::vector<std::string>& annotation_records) {
    std::vector<Event> all;
    for (const auto& block : annotation_records) {
        auto ev = extract_events(std::string_view(block));
        all.insert(all.end(), ev.begin(), ev.end());
    }
    std::stable_sort(all.begin(), all.end(), [](const Event& a, const Event& b) { return a.onset < b.onset; });
    return all;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Recording load_recording(const std::string& path) {
    auto bytes = read_file_bytes(path);
    auto parsed = parse_edf(bytes);
    Recording rec = std::move(parsed.recording);
    try {
        rec.events = extract_events(parsed.annotation_records);
    } catch (const EdfFormatError& e) {
        throw EdfFormatError(path + ": " + e.what());
    }
    // spans are clipped to the recording end
    const double total = rec.duration_sec();
    for (auto& e : rec.events) {
        if (e.onset > total) throw EdfFormatError(path + ": event onset " + std::to_string(e.onset) + " s past end");
        e.duration = std::min(e.duration, total - e.onset);
    }

    static const std::regex name_re(R"(S(\d{3})R(\d{2})\.edf)", std::regex::icase);
    std::smatch m;
    const std::string filename = std::filesystem::path(path).filename().string();
    if (std::regex_match(filename, m, name_re)) {
        rec.subject_id = std::stoi(m[1].str());
        rec.run_id = std::stoi(m[2].str());
    }
    return rec;
}

}  // namespace eegmi
