#include "eegmi/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace eegmi {

namespace {

ForwardPass forward_columns(const MlpParams& params, const Eigen::MatrixXd& x) {
    if (x.rows() != params.input_width())
        throw std::invalid_argument("input width " + std::to_string(x.rows()) + " does not match network input " +
                                    std::to_string(params.input_width()));
    ForwardPass fp;
    fp.activations.reserve(params.layers.size());
    fp.pre_activations.reserve(params.layers.size());
    fp.activations.push_back(x);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Eigen::MatrixXd z = layer.weights * fp.activations.back();
        z.colwise() += layer.bias;
        if (l + 1 < params.layers.size()) {
            fp.activations.push_back(activate(z, params.hidden));
            fp.pre_activations.push_back(std::move(z));
        } else {
            fp.logits = z.transpose();
            fp.pre_activations.push_back(std::move(z));
        }
    }
    fp.probabilities = softmax_rows(fp.logits);
    return fp;
}

void check_labels(std::span<const int> labels, int classes) {
    for (int y : labels)
        if (y < 0 || y >= classes) throw std::out_of_range("label " + std::to_string(y) + " outside 0.." + std::to_string(classes - 1));
}

LossAndGrad backprop(const MlpParams& params, const ForwardPass& fp, std::span<const int> labels) {
    const auto batch = static_cast<Eigen::Index>(labels.size());
    LossAndGrad out;
    out.loss = cross_entropy(fp.logits, labels);
    out.output_delta = fp.probabilities;
    for (Eigen::Index i = 0; i < batch; ++i) out.output_delta(i, labels[static_cast<std::size_t>(i)]) -= 1.0;

    Eigen::MatrixXd delta = out.output_delta.transpose() / static_cast<double>(batch);
    out.grads.layers.resize(params.layers.size());
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        auto& g = out.grads.layers[l];
        g.weights = delta * fp.activations[l].transpose();
        g.bias = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = params.layers[l].weights.transpose() * delta;
            delta = back.cwiseProduct(activation_derivative(fp.pre_activations[l - 1], params.hidden));
        }
    }
    return out;
}

double one_hot_mse(const Eigen::MatrixXd& probs, std::span<const int> labels) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            const double target = (labels[static_cast<std::size_t>(i)] == c) ? 1.0 : 0.0;
            const double d = probs(i, c) - target;
            total += d * d;
        }
    }
    return total / static_cast<double>(probs.rows() * probs.cols());
}

std::size_t count_correct(const Eigen::MatrixXd& probs, std::span<const int> labels) {
    const auto pred = argmax_rows(probs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
    return correct;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& xt, std::span<const std::size_t> cols) {
    Eigen::MatrixXd out(xt.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = xt.col(static_cast<Eigen::Index>(cols[j]));
    return out;
}

Evaluation evaluate_columns(const MlpParams& params, const Eigen::MatrixXd& xt, std::span<const int> labels,
                            std::span<const std::size_t> rows, int batch_size) {
    Evaluation ev;
    if (rows.empty()) return ev;
    double loss = 0.0, mse = 0.0;
    std::size_t correct = 0;
    std::vector<int> batch_labels;
    for (std::size_t begin = 0; begin < rows.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(rows.size(), begin + static_cast<std::size_t>(batch_size));
        auto idx = rows.subspan(begin, end - begin);
        batch_labels.clear();
        for (auto r : idx) batch_labels.push_back(labels[r]);
        const auto fp = forward_columns(params, gather_columns(xt, idx));
        const double n = static_cast<double>(idx.size());
        loss += cross_entropy(fp.logits, batch_labels) * n;
        mse += one_hot_mse(fp.probabilities, batch_labels) * n;
        const auto pred = argmax_rows(fp.probabilities);
        for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch_labels[i];
        ev.predictions.insert(ev.predictions.end(), pred.begin(), pred.end());
    }
    const double total = static_cast<double>(rows.size());
    ev.loss = loss / total;
    ev.mse = mse / total;
    ev.accuracy = static_cast<double>(correct) / total;
    return ev;
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

std::vector<int> default_layer_sizes(int input_width, int classes) {
    return {input_width, 700, 128, 128, 64, 64, 32, 32, classes};
}

MlpParams init_mlp(std::span<const int> sizes, std::uint64_t seed, Activation hidden) {
    if (sizes.size() < 2) throw std::invalid_argument("an MLP needs at least an input and an output layer");
    for (int s : sizes)
        if (s < 1) throw std::invalid_argument("layer sizes must be positive");
    MlpParams p;
    p.layer_sizes.assign(sizes.begin(), sizes.end());
    p.hidden = hidden;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> uni(-bound, bound);
        DenseLayer layer;
        layer.weights.resize(fan_out, fan_in);
        for (Eigen::Index r = 0; r < fan_out; ++r)
            for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = uni(rng);
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation a) {
    if (a == Activation::Relu) return pre.cwiseMax(0.0);
    return pre.array().tanh().matrix();
}

Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& pre, Activation a) {
    if (a == Activation::Relu) return (pre.array() > 0.0).cast<double>().matrix();
    return (1.0 - pre.array().tanh().square()).matrix();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out = logits.colwise() - logits.rowwise().maxCoeff();
    out = out.array().exp().matrix();
    const Eigen::VectorXd sums = out.rowwise().sum();
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= sums(i);
    return out;
}

double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels) {
    if (static_cast<std::size_t>(logits.rows()) != labels.size())
        throw std::invalid_argument("label count does not match batch size");
    check_labels(labels, static_cast<int>(logits.cols()));
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
        total += lse - logits(i, labels[static_cast<std::size_t>(i)]);
    }
    return total / static_cast<double>(logits.rows());
}

ForwardPass forward(const MlpParams& params, const Eigen::MatrixXd& batch) {
    return forward_columns(params, batch.transpose());
}

LossAndGrad loss_and_grad(const MlpParams& params, const Eigen::MatrixXd& batch, std::span<const int> labels) {
    if (static_cast<std::size_t>(batch.rows()) != labels.size())
        throw std::invalid_argument("label count does not match batch size");
    check_labels(labels, params.output_width());
    return backprop(params, forward(params, batch), labels);
}

AdamState AdamState::for_params(const MlpParams& params, const AdamHyper& hyper) {
    AdamState s;
    s.hyper = hyper;
    for (const auto& l : params.layers) {
        DenseLayer z{Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()), Eigen::VectorXd::Zero(l.bias.size())};
        s.m.push_back(z);
        s.v.push_back(z);
    }
    return s;
}

void adam_step(MlpParams& params, AdamState& state, const Gradients& grads) {
    if (grads.layers.size() != params.layers.size() || state.m.size() != params.layers.size())
        throw std::invalid_argument("Adam state / gradient shapes do not match the parameters");
    const auto& h = state.hyper;
    ++state.step;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));

    auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
        m = h.beta1 * m + (1.0 - h.beta1) * g;
        v = h.beta2 * v + (1.0 - h.beta2) * g.cwiseProduct(g);
        theta.array() -= h.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + h.epsilon);
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        update(params.layers[l].weights, state.m[l].weights, state.v[l].weights, grads.layers[l].weights);
        update(params.layers[l].bias, state.m[l].bias, state.v[l].bias, grads.layers[l].bias);
    }
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
    std::vector<int> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best)) best = c;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

std::vector<int> predict(const MlpParams& params, const Eigen::MatrixXd& batch) {
    return argmax_rows(forward(params, batch).probabilities);
}

Evaluation evaluate(const MlpParams& params, const Eigen::MatrixXd& features, std::span<const int> labels,
                    std::span<const std::size_t> rows, int batch_size) {
    const Eigen::MatrixXd xt = features.transpose();
    return evaluate_columns(params, xt, labels, rows, batch_size);
}

TrainResult train(const Eigen::MatrixXd& features, std::span<const int> labels, std::span<const std::size_t> train_rows,
                  std::span<const std::size_t> val_rows, const MlpParams& initial, const TrainConfig& config) {
    if (config.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (config.batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
    if (train_rows.empty()) throw std::invalid_argument("training split is empty");
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw std::invalid_argument("feature rows and labels differ in count");
    check_labels(labels, initial.output_width());

    TrainResult result;
    result.best = initial;
    result.last = initial;
    if (config.epochs == 0) return result;

    const Eigen::MatrixXd xt = features.transpose();
    MlpParams params = initial;
    AdamState adam = AdamState::for_params(params, config.adam);
    // separate stream from the one init_mlp draws weights from
    std::mt19937_64 rng(config.seed ^ 0xA5A5A5A5DEADBEEFULL);
    std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
    std::vector<int> batch_labels;
    double best_acc = -1.0;
    const auto bs = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0, mse_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += bs) {
            const std::size_t end = std::min(order.size(), begin + bs);
            std::span<const std::size_t> idx(order.data() + begin, end - begin);
            batch_labels.clear();
            for (auto r : idx) batch_labels.push_back(labels[r]);
            const auto fp = forward_columns(params, gather_columns(xt, idx));
            auto lg = backprop(params, fp, batch_labels);
            if (!std::isfinite(lg.loss))
                throw TrainingDivergedError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                            std::to_string(begin / bs + 1));
            const double n = static_cast<double>(idx.size());
            loss_sum += lg.loss * n;
            mse_sum += one_hot_mse(fp.probabilities, batch_labels) * n;
            correct += count_correct(fp.probabilities, batch_labels);
            adam_step(params, adam, lg.grads);
        }
        EpochRecord rec;
        const double total = static_cast<double>(order.size());
        rec.train_loss = loss_sum / total;
        rec.train_mse = mse_sum / total;
        rec.train_accuracy = static_cast<double>(correct) / total;
        if (!val_rows.empty()) {
            const auto ev = evaluate_columns(params, xt, labels, val_rows, 1024);
            rec.val_loss = ev.loss;
            rec.val_accuracy = ev.accuracy;
            rec.val_mse = ev.mse;
        }
        result.history.epochs.push_back(rec);
        const double score = val_rows.empty() ? rec.train_accuracy : rec.val_accuracy;
        if (score > best_acc) {
            best_acc = score;
            result.best = params;
            result.history.best_epoch = epoch;
        }
    }
    result.last = std::move(params);
    return result;
}

TrainResult train(const Eigen::MatrixXd& features, std::span<const int> labels, std::span<const std::size_t> train_rows,
                  std::span<const std::size_t> val_rows, const TrainConfig& config) {
    const auto sizes = default_layer_sizes(static_cast<int>(features.cols()));
    return train(features, labels, train_rows, val_rows, init_mlp(sizes, config.seed), config);
}

}  // namespace eegmi
