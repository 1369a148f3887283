#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "eegmi/edf.hpp"
#include "synthetic.hpp"

using namespace eegmi;
using eegmi::testing::synthetic_edf_bytes;
using eegmi::testing::synthetic_recording;
using eegmi::testing::SyntheticRunOptions;

namespace {

SyntheticRunOptions short_run() {
    SyntheticRunOptions o;
    o.seconds = 20;
    o.seed = 7;
    return o;
}

void put_field(std::vector<std::uint8_t>& bytes, std::size_t offset, std::size_t width, const std::string& text) {
    for (std::size_t i = 0; i < width; ++i) bytes[offset + i] = i < text.size() ? static_cast<std::uint8_t>(text[i]) : ' ';
}

}  // namespace

TEST(Edf, HeaderFieldsOfSyntheticFile) {
    const auto rec = synthetic_recording(short_run());
    const auto bytes = synthetic_edf_bytes(rec);
    const auto h = parse_edf_header(bytes);
    EXPECT_EQ(h.signal_count, 65);
    EXPECT_EQ(h.header_bytes, 256 * 66);
    EXPECT_EQ(h.record_count, 20);
    EXPECT_DOUBLE_EQ(h.record_duration, 1.0);
    EXPECT_TRUE(h.is_edf_plus());
    EXPECT_EQ(h.annotation_index(), 64);
    EXPECT_EQ(h.signals[0].label, "Fc5.");
    EXPECT_EQ(h.signals[0].samples_per_record, 160);
}

TEST(Edf, RoundTripIsBitExact) {
    const auto rec = synthetic_recording(short_run());
    const auto bytes = synthetic_edf_bytes(rec);
    const auto parsed = parse_edf(bytes);
    const auto again = serialize_edf(parsed.header, parsed.recording, parsed.annotation_records);
    EXPECT_EQ(bytes, again);
    const auto reparsed = parse_edf(again);
    EXPECT_EQ(reparsed.recording.data, parsed.recording.data);
    EXPECT_EQ(reparsed.recording.channels, parsed.recording.channels);
    EXPECT_EQ(reparsed.header.signals.size(), parsed.header.signals.size());
}

TEST(Edf, QuantisedSamplesStayClose) {
    const auto rec = synthetic_recording(short_run());
    const auto parsed = parse_edf(synthetic_edf_bytes(rec));
    const double step = 2.0 * 8092.0 / 65535.0;
    for (std::size_t c = 0; c < rec.data.size(); c += 9)
        for (std::size_t i = 0; i < rec.length(); i += 13)
            EXPECT_NEAR(parsed.recording.data[c][i], rec.data[c][i], step);
}

TEST(Edf, PhysicalScalingIsAffineAndMonotone) {
    EdfSignalHeader s;
    s.physical_min = -8092;
    s.physical_max = 8092;
    s.digital_min = -32768;
    s.digital_max = 32767;
    EXPECT_DOUBLE_EQ(s.to_physical(-32768), -8092.0);
    EXPECT_DOUBLE_EQ(s.to_physical(32767), 8092.0);
    const double slope = s.to_physical(1) - s.to_physical(0);
    for (int d = -32768; d < 32767; d += 997) {
        EXPECT_GT(s.to_physical(d + 1), s.to_physical(d));
        EXPECT_NEAR(s.to_physical(d + 1) - s.to_physical(d), slope, 1e-9);
        EXPECT_EQ(s.to_digital(s.to_physical(d)), d);
    }
    EXPECT_EQ(s.to_digital(1e9), 32767);
    EXPECT_EQ(s.to_digital(-1e9), -32768);
}

TEST(Edf, EventsDecodeFromTals) {
    const std::string tal = std::string("+0\x14\x14\0", 5) + std::string("+0\x15" "4.2\x14T0\x14\0", 11) +
                            std::string("+4.2\x15" "4.1\x14T2\x14\0", 13);
    const auto events = extract_events(tal);
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[0], (Event{EventCode::T0, 0.0, 4.2}));
    EXPECT_EQ(events[1], (Event{EventCode::T2, 4.2, 4.1}));
}

TEST(Edf, UnknownLabelAborts) {
    const std::string tal = std::string("+1\x15" "4.1\x14T7\x14\0", 11);
    EXPECT_THROW(extract_events(tal), EdfFormatError);
}

TEST(Edf, MalformedTalThrows) {
    EXPECT_THROW(extract_events(std::string("x1\x14\x14\0", 5)), EdfFormatError);
    EXPECT_THROW(extract_events(std::string("+1\x14T1", 5)), EdfFormatError);
}

TEST(Edf, UnknownRecordCountResolvedFromSize) {
    const auto rec = synthetic_recording(short_run());
    auto bytes = synthetic_edf_bytes(rec);
    put_field(bytes, 236, 8, "-1");
    const auto parsed = parse_edf(bytes);
    EXPECT_EQ(parsed.header.record_count, 20);
    EXPECT_EQ(parsed.recording.length(), 20u * 160u);
}

TEST(Edf, TruncatedFileRejected) {
    const auto rec = synthetic_recording(short_run());
    auto bytes = synthetic_edf_bytes(rec);
    bytes.resize(bytes.size() - 100);
    EXPECT_THROW(parse_edf(bytes), EdfFormatError);
    std::vector<std::uint8_t> tiny(100, ' ');
    EXPECT_THROW(parse_edf_header(tiny), EdfFormatError);
}

TEST(Edf, MixedSampleRatesRejected) {
    const auto rec = synthetic_recording(short_run());
    auto bytes = synthetic_edf_bytes(rec);
    const std::size_t ns = 65;
    const std::size_t spr_offset = 256 + ns * (16 + 80 + 8 + 8 + 8 + 8 + 8 + 80);
    put_field(bytes, spr_offset + 8, 8, "80");
    EXPECT_THROW(parse_edf(bytes), EdfFormatError);
}

TEST(Edf, LoadRecordingReadsIdsAndEventsTileTheRun) {
    const auto dir = eegmi::testing::scratch_dir("edf");
    auto o = short_run();
    o.subject = 3;
    o.run = 8;
    const auto bytes = synthetic_edf_bytes(synthetic_recording(o));
    const auto path = dir / "S003R08.edf";
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                static_cast<std::streamsize>(bytes.size()));
    const auto rec = load_recording(path.string());
    EXPECT_EQ(rec.subject_id, 3);
    EXPECT_EQ(rec.run_id, 8);
    ASSERT_FALSE(rec.events.empty());
    EXPECT_DOUBLE_EQ(rec.events.front().onset, 0.0);
    for (std::size_t i = 1; i < rec.events.size(); ++i)
        EXPECT_NEAR(rec.events[i].onset, rec.events[i - 1].onset + rec.events[i - 1].duration, 1e-9);
    const auto& last = rec.events.back();
    EXPECT_LE(last.onset + last.duration, rec.duration_sec() + 1e-9);
    std::filesystem::remove_all(dir);
}
