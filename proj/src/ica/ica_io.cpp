#include <algorithm>
#include <fstream>
#include <sstream>

#include "eegmi/ica.hpp"
#include "eegmi/numeric_text.hpp"

namespace eegmi {

namespace {

void write_row(std::string& out, const Eigen::MatrixXd& m, Eigen::Index r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) out += ' ';
        append_double(out, m(r, c));
    }
    out += '\n';
}

void write_vector(std::string& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out += ' ';
        append_double(out, v(i));
    }
    out += '\n';
}

class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string next() {
        std::string tok;
        if (!(in_ >> tok)) throw std::runtime_error("ICA model file ended unexpectedly");
        return tok;
    }
    void expect(const std::string& word) {
        auto tok = next();
        if (tok != word) throw std::runtime_error("ICA model file: expected '" + word + "', found '" + tok + "'");
    }
    double real() { return parse_double(next()); }
    long long integer() { return parse_integer(next()); }

    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = real();
        return m;
    }

private:
    std::istream& in_;
};

}  // namespace

void save_ica_model(const IcaModel& model, const std::filesystem::path& path) {
    const auto& wh = model.whitening;
    const auto& th = model.thresholds;
    std::string out = "eegmi-ica " + std::to_string(kIcaFormatVersion) + "\n";
    out += "channels " + std::to_string(wh.n_channels()) + "\n";
    out += "components " + std::to_string(wh.n_components()) + "\n";
    out += "config max_iter " + std::to_string(model.config.max_iter) + " tol " + format_double(model.config.tol) +
           " seed " + std::to_string(model.config.seed) + "\n";
    out += "thresholds zscore " + std::to_string(th.use_zscore) + " " + format_double(th.zscore_limit) +
           " abs_kurtosis " + std::to_string(th.use_abs_kurtosis) + " " + format_double(th.abs_kurtosis_limit) +
           " central_moment " + std::to_string(th.use_central_moment) + " " +
           format_double(th.central_moment_limit) + " pearson " + std::to_string(th.use_pearson) + " " +
           format_double(th.pearson_limit) + "\n";
    out += "fit iterations " + std::to_string(model.iterations) + " converged " + std::to_string(model.converged) +
           "\n";
    out += "means";
    write_vector(out, wh.channel_means);
    out += "eigenvalues";
    write_vector(out, wh.eigenvalues);
    out += "whitening\n";
    for (Eigen::Index r = 0; r < wh.matrix.rows(); ++r) write_row(out, wh.matrix, r);
    out += "dewhitening\n";
    for (Eigen::Index r = 0; r < wh.dewhitening.rows(); ++r) write_row(out, wh.dewhitening, r);
    out += "unmixing\n";
    for (Eigen::Index r = 0; r < model.unmixing.rows(); ++r) write_row(out, model.unmixing, r);
    out += "exclude " + std::to_string(model.exclusion.size());
    for (int k : model.exclusion) out += " " + std::to_string(k);
    out += "\n";

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << out;
}

IcaModel load_ica_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    TokenReader r(f);
    r.expect("eegmi-ica");
    if (r.integer() != kIcaFormatVersion) throw std::runtime_error("unsupported ICA model version");

    IcaModel m;
    r.expect("channels");
    const auto channels = static_cast<Eigen::Index>(r.integer());
    r.expect("components");
    const auto n = static_cast<Eigen::Index>(r.integer());
    if (channels < 1 || n < 1 || n > channels) throw std::runtime_error("ICA model has invalid dimensions");
    r.expect("config");
    r.expect("max_iter");
    m.config.max_iter = static_cast<int>(r.integer());
    r.expect("tol");
    m.config.tol = r.real();
    r.expect("seed");
    m.config.seed = std::stoull(r.next());
    r.expect("thresholds");
    r.expect("zscore");
    m.thresholds.use_zscore = r.integer() != 0;
    m.thresholds.zscore_limit = r.real();
    r.expect("abs_kurtosis");
    m.thresholds.use_abs_kurtosis = r.integer() != 0;
    m.thresholds.abs_kurtosis_limit = r.real();
    r.expect("central_moment");
    m.thresholds.use_central_moment = r.integer() != 0;
    m.thresholds.central_moment_limit = r.real();
    r.expect("pearson");
    m.thresholds.use_pearson = r.integer() != 0;
    m.thresholds.pearson_limit = r.real();
    r.expect("fit");
    r.expect("iterations");
    m.iterations = static_cast<int>(r.integer());
    r.expect("converged");
    m.converged = r.integer() != 0;
    r.expect("means");
    m.whitening.channel_means = r.matrix(channels, 1);
    r.expect("eigenvalues");
    m.whitening.eigenvalues = r.matrix(n, 1);
    r.expect("whitening");
    m.whitening.matrix = r.matrix(n, channels);
    r.expect("dewhitening");
    m.whitening.dewhitening = r.matrix(channels, n);
    r.expect("unmixing");
    m.unmixing = r.matrix(n, n);
    r.expect("exclude");
    const auto count = r.integer();
    for (long long i = 0; i < count; ++i) {
        auto k = r.integer();
        if (k < 0 || k >= n) throw std::runtime_error("ICA model excludes an out-of-range component");
        m.exclusion.push_back(static_cast<int>(k));
    }
    return m;
}

}  // namespace eegmi

namespace eegmi {

namespace {

constexpr const char* kStatsHeader =
    "component,variance,skewness,kurtosis,kurtosis_zscore,variance_zscore,skewness_zscore,entropy,max_abs_pearson,"
    "degenerate";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

void save_component_stats(const ComponentStats& stats, const std::filesystem::path& path,
                          std::span<const int> exclusion) {
    std::string out = kStatsHeader;
    const bool flags = !exclusion.empty() || stats.size() == 0;
    out += flags ? ",flagged\n" : "\n";
    for (std::size_t k = 0; k < stats.size(); ++k) {
        const auto& c = stats.components[k];
        out += std::to_string(k);
        for (double v : {c.variance, c.skewness, c.kurtosis, c.kurtosis_zscore, c.variance_zscore, c.skewness_zscore,
                         c.entropy, c.max_abs_pearson}) {
            out += ',';
            append_double(out, v);
        }
        out += c.degenerate ? ",1" : ",0";
        if (flags) {
            const bool f = std::find(exclusion.begin(), exclusion.end(), static_cast<int>(k)) != exclusion.end();
            out += f ? ",1" : ",0";
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << out;
}

ComponentStats load_component_stats(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line) || line.rfind(kStatsHeader, 0) != 0)
        throw std::runtime_error(path.string() + ": not a component statistics file");
    ComponentStats stats;
    int line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() < 10) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": too few columns");
        ComponentStat c;
        try {
            c.variance = parse_double(cells[1]);
            c.skewness = parse_double(cells[2]);
            c.kurtosis = parse_double(cells[3]);
            c.kurtosis_zscore = parse_double(cells[4]);
            c.variance_zscore = parse_double(cells[5]);
            c.skewness_zscore = parse_double(cells[6]);
            c.entropy = parse_double(cells[7]);
            c.max_abs_pearson = parse_double(cells[8]);
            c.degenerate = cells[9] == "1";
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        stats.components.push_back(c);
    }
    return stats;
}

}  // namespace eegmi
