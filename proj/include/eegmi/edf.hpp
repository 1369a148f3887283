#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eegmi {

class EdfFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-signal block of the EDF header (256 bytes per signal on disk).
struct EdfSignalHeader {
    std::string label;
    std::string transducer;
    std::string physical_dimension;
    double physical_min = 0.0;
    double physical_max = 0.0;
    int digital_min = 0;
    int digital_max = 0;
    std::string prefiltering;
    int samples_per_record = 0;
    std::string reserved;

    /// Linear map from a stored 16-bit value to physical units.
    double to_physical(int digital) const;
    /// Inverse of to_physical, rounded and clamped to the digital range.
    std::int16_t to_digital(double physical) const;
    bool is_annotation() const { return label == "EDF Annotations"; }
};

struct EdfHeader {
    std::string version = "0";
    std::string patient_id;
    std::string recording_id;
    std::string start_date;
    std::string start_time;
    int header_bytes = 0;
    std::string reserved;
    long record_count = -1;
    double record_duration = 0.0;
    int signal_count = 0;
    std::vector<EdfSignalHeader> signals;

    bool is_edf_plus() const;
    /// Index of the "EDF Annotations" signal, or -1.
    int annotation_index() const;
    /// Bytes occupied by one data record (2 bytes per sample).
    std::size_t record_bytes() const;
};

enum class EventCode { T0, T1, T2 };

std::string_view to_string(EventCode code);

struct Event {
    EventCode code = EventCode::T0;
    double onset = 0.0;     // seconds
    double duration = 0.0;  // seconds

    bool operator==(const Event&) const = default;
};

/// Channel-major physical-unit signal with its annotations.
struct Recording {
    std::vector<std::string> channels;
    double fs = 0.0;
    std::vector<std::vector<double>> data;
    std::vector<Event> events;
    int subject_id = 0;
    int run_id = 0;

    std::size_t length() const { return data.empty() ? 0 : data.front().size(); }
    double duration_sec() const { return fs > 0 ? static_cast<double>(length()) / fs : 0.0; }
};

struct ParsedEdf {
    EdfHeader header;
    Recording recording;  // events left empty, see extract_events
    /// Raw annotation-signal bytes, one entry per data record.
    std::vector<std::string> annotation_records;
};

/// Decodes only the fixed and per-signal header blocks.
EdfHeader parse_edf_header(std::span<const std::uint8_t> bytes);

/// Decodes a complete EDF/EDF+ byte stream. Signals other than the
/// annotation channel must share one sampling rate.
ParsedEdf parse_edf(std::span<const std::uint8_t> bytes);

/// Encodes header + samples back into EDF bytes. `annotation_records` is
/// passed through verbatim (one block per record, zero padded) and may be
/// empty when the header has no annotation signal.
std::vector<std::uint8_t> serialize_edf(const EdfHeader& header, const Recording& recording,
                                        const std::vector<std::string>& annotation_records = {});

/// Decodes TAL-encoded annotations. Timekeeping TALs (no label) are
/// dropped; any label other than T0/T1/T2 throws EdfFormatError.
std::vector<Event> extract_events(std::string_view annotation_stream);
std::vector<Event> extract_events(const std::vector<std::string>& annotation_records);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

/// parse_edf + extract_events on a file; subject/run are taken from an
/// S###R##.edf file name when present.
Recording load_recording(const std::string& path);

}  // namespace eegmi
