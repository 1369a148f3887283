#include <fstream>
#include <sstream>

#include "eegmi/features.hpp"
#include "eegmi/numeric_text.hpp"

namespace eegmi {

namespace {

constexpr const char* kKeyColumns[] = {"subject", "run", "start", "trial"};

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

void save_feature_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    std::string line;
    for (const char* k : kKeyColumns) {
        line += k;
        line += ',';
    }
    for (const auto& c : m.columns) {
        line += c;
        line += ',';
    }
    line += "label\n";
    out << line;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        line.clear();
        const auto& t = m.trials[r];
        line += std::to_string(t.subject) + ',' + std::to_string(t.run) + ',' + std::to_string(m.starts[r]) + ',' +
                std::to_string(t.event_index) + ',';
        for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
            append_double(line, m.values(static_cast<Eigen::Index>(r), c));
            line += ',';
        }
        line += std::to_string(m.labels[r]);
        line += '\n';
        out << line;
    }
    if (!out) throw std::runtime_error("short write to " + path.string());
}

FeatureMatrix load_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty feature file");
    auto header = split_csv(line);
    const std::size_t keys = std::size(kKeyColumns);
    if (header.size() < keys + 1 || header.back() != "label")
        throw std::runtime_error(path.string() + ": unexpected feature header");
    for (std::size_t i = 0; i < keys; ++i)
        if (header[i] != kKeyColumns[i]) throw std::runtime_error(path.string() + ": unexpected key columns");

    FeatureMatrix m;
    for (std::size_t i = keys; i + 1 < header.size(); ++i) m.columns.emplace_back(header[i]);
    const std::size_t cols = m.columns.size();

    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": wrong field count");
        TrialKey t;
        t.subject = static_cast<int>(parse_integer(fields[0]));
        t.run = static_cast<int>(parse_integer(fields[1]));
        m.starts.push_back(static_cast<std::size_t>(parse_integer(fields[2])));
        t.event_index = static_cast<int>(parse_integer(fields[3]));
        m.trials.push_back(t);
        for (std::size_t i = 0; i < cols; ++i) values.push_back(parse_double(fields[keys + i]));
        m.labels.push_back(static_cast<int>(parse_integer(fields.back())));
    }
    m.values.resize(static_cast<Eigen::Index>(m.labels.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < m.labels.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
    return m;
}

void save_normalizer(const NormalizerStats& stats, const std::vector<std::string>& columns,
                     const std::filesystem::path& path) {
    if (!stats.fitted) throw NotFittedError("cannot save an unfitted normaliser");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "column mean stddev\n";
    for (std::size_t c = 0; c < stats.mean.size(); ++c)
        out << (c < columns.size() ? columns[c] : "col" + std::to_string(c)) << ' ' << format_double(stats.mean[c])
            << ' ' << format_double(stats.stddev[c]) << '\n';
}

NormalizerStats load_normalizer(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    NormalizerStats s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string name, mean, sd;
        if (!(ls >> name >> mean >> sd)) throw std::runtime_error(path.string() + ": malformed normaliser line");
        s.mean.push_back(parse_double(mean));
        s.stddev.push_back(parse_double(sd));
    }
    s.fitted = true;
    return s;
}

}  // namespace eegmi
