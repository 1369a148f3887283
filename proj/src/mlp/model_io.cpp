#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "eegmi/mlp.hpp"

namespace eegmi {

namespace {

constexpr char kMagic[8] = {'E', 'E', 'G', 'M', 'I', 'M', 'L', 'P'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("model file truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_model(const MlpParams& params, const std::string& config_hash, const std::filesystem::path& path) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kModelFormatVersion);
    put_u32(out, params.hidden == Activation::Relu ? 0u : 1u);
    put_u32(out, static_cast<std::uint32_t>(params.layer_sizes.size()));
    for (int s : params.layer_sizes) put_u32(out, static_cast<std::uint32_t>(s));
    for (const auto& layer : params.layers) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) put_f64(out, layer.weights(r, c));
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put_f64(out, layer.bias(i));
    }
    put_u32(out, static_cast<std::uint32_t>(config_hash.size()));
    out.insert(out.end(), config_hash.begin(), config_hash.end());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

MlpParams load_model(const std::filesystem::path& path, std::string* config_hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    ByteReader r(bytes);
    if (r.text(8) != std::string(kMagic, 8)) throw std::runtime_error(path.string() + ": not an MLP model file");
    if (r.u32() != kModelFormatVersion) throw std::runtime_error(path.string() + ": unsupported model version");
    MlpParams p;
    const auto act = r.u32();
    if (act > 1) throw std::runtime_error(path.string() + ": unknown activation");
    p.hidden = act == 0 ? Activation::Relu : Activation::Tanh;
    const auto n = r.u32();
    if (n < 2 || n > 64) throw std::runtime_error(path.string() + ": implausible layer count");
    for (std::uint32_t i = 0; i < n; ++i) p.layer_sizes.push_back(static_cast<int>(r.u32()));
    for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
        DenseLayer layer;
        const int in = p.layer_sizes[l];
        const int out = p.layer_sizes[l + 1];
        r.need(static_cast<std::size_t>(in) * static_cast<std::size_t>(out) * 8);
        layer.weights.resize(out, in);
        for (Eigen::Index row = 0; row < out; ++row)
            for (Eigen::Index c = 0; c < in; ++c) layer.weights(row, c) = r.f64();
        layer.bias.resize(out);
        for (Eigen::Index i = 0; i < out; ++i) layer.bias(i) = r.f64();
        p.layers.push_back(std::move(layer));
    }
    const auto hash_len = r.u32();
    std::string hash = r.text(hash_len);
    if (!r.done()) throw std::runtime_error(path.string() + ": trailing bytes after model");
    if (config_hash) *config_hash = std::move(hash);
    return p;
}

}  // namespace eegmi
