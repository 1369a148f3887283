#include "eegmi/container.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace eegmi {

namespace {

constexpr char kMagic[8] = {'E', 'E', 'G', 'M', 'I', 'S', 'I', 'G'};

template <typename U>
void put(std::vector<std::uint8_t>& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) { put(out, std::bit_cast<std::uint64_t>(d)); }

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}

    template <typename U>
    U get() {
        if (pos_ + sizeof(U) > b_.size()) throw std::runtime_error("signal container truncated");
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b_[pos_ + i]) << (8 * i));
        pos_ += sizeof(U);
        return v;
    }
    double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string text(std::size_t n) {
        if (pos_ + n > b_.size()) throw std::runtime_error("signal container truncated");
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return b_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_signal(const RunSignal& s) {
    if (static_cast<std::size_t>(s.data.rows()) != s.channels.size())
        throw std::invalid_argument("channel names do not match data rows");
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.reserve(out.size() + 64 + static_cast<std::size_t>(s.data.size()) * 8);
    put<std::uint32_t>(out, kSignalFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.subject));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.run));
    put<std::uint32_t>(out, s.task == TaskClass::MotorExecution ? 0u : 1u);
    put_f64(out, s.fs);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.data.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(s.data.cols()));
    for (const auto& name : s.channels) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.events.size()));
    for (const auto& e : s.events) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.code));
        put_f64(out, e.onset);
        put_f64(out, e.duration);
    }
    for (Eigen::Index r = 0; r < s.data.rows(); ++r)
        for (Eigen::Index c = 0; c < s.data.cols(); ++c) put_f64(out, s.data(r, c));
    return out;
}

RunSignal decode_signal(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    if (r.text(8) != std::string(kMagic, 8)) throw std::runtime_error("not a signal container");
    if (r.get<std::uint32_t>() != kSignalFormatVersion) throw std::runtime_error("unsupported signal container version");
    RunSignal s;
    s.subject = static_cast<int>(r.get<std::uint32_t>());
    s.run = static_cast<int>(r.get<std::uint32_t>());
    const auto task = r.get<std::uint32_t>();
    if (task > 1) throw std::runtime_error("signal container: bad task code");
    s.task = task == 0 ? TaskClass::MotorExecution : TaskClass::MotorImagery;
    s.fs = r.f64();
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint64_t>();
    for (std::uint32_t i = 0; i < rows; ++i) s.channels.push_back(r.text(r.get<std::uint32_t>()));
    const auto n_events = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_events; ++i) {
        Event e;
        const auto code = r.get<std::uint32_t>();
        if (code > 2) throw std::runtime_error("signal container: bad event code");
        e.code = static_cast<EventCode>(code);
        e.onset = r.f64();
        e.duration = r.f64();
        s.events.push_back(e);
    }
    if (r.remaining() != static_cast<std::size_t>(rows) * cols * 8)
        throw std::runtime_error("signal container: payload size mismatch");
    s.data.resize(rows, static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < s.data.rows(); ++i)
        for (Eigen::Index c = 0; c < s.data.cols(); ++c) s.data(i, c) = r.f64();
    return s;
}

void save_signal(const RunSignal& signal, const std::filesystem::path& path) {
    const auto bytes = encode_signal(signal);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

RunSignal load_signal(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    try {
        return decode_signal(bytes);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace eegmi
