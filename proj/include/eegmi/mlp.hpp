#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace eegmi {

enum class Activation { Relu, Tanh };

/// Dense layer computing weights * input + bias (weights are out x in).
struct DenseLayer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

struct MlpParams {
    std::vector<int> layer_sizes;
    std::vector<DenseLayer> layers;
    Activation hidden = Activation::Relu;

    int input_width() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
    int output_width() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }
    std::size_t parameter_count() const;
};

/// {input, 700, 128, 128, 64, 64, 32, 32, classes}
std::vector<int> default_layer_sizes(int input_width, int classes = 4);

/// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
MlpParams init_mlp(std::span<const int> layer_sizes, std::uint64_t seed, Activation hidden = Activation::Relu);

/// Element-wise activation and its derivative (as a function of the pre-activation).
Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation a);
Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& pre, Activation a);

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

struct ForwardPass {
    /// Per layer, pre-activations and activations stored column-per-sample.
    std::vector<Eigen::MatrixXd> pre_activations;
    std::vector<Eigen::MatrixXd> activations;  // activations[0] is the input
    Eigen::MatrixXd logits;                     // samples x classes
    Eigen::MatrixXd probabilities;              // samples x classes
};

/// `batch` holds one sample per row.
ForwardPass forward(const MlpParams& params, const Eigen::MatrixXd& batch);

struct Gradients {
    std::vector<DenseLayer> layers;
};

struct LossAndGrad {
    double loss = 0.0;
    Gradients grads;
    Eigen::MatrixXd output_delta;  // samples x classes, p - one_hot (unscaled)
};

/// Mean sparse categorical cross-entropy and its gradient.
LossAndGrad loss_and_grad(const MlpParams& params, const Eigen::MatrixXd& batch, std::span<const int> labels);

/// Loss only, computed from log-softmax.
double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels);

struct AdamHyper {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
};

struct AdamState {
    AdamHyper hyper;
    std::vector<DenseLayer> m;
    std::vector<DenseLayer> v;
    long step = 0;

    static AdamState for_params(const MlpParams& params, const AdamHyper& hyper = {});
};

/// Bias-corrected Adam update; increments state.step.
void adam_step(MlpParams& params, AdamState& state, const Gradients& grads);

struct TrainConfig {
    int epochs = 100;
    int batch_size = 64;
    std::uint64_t seed = 0;
    bool shuffle = true;
    AdamHyper adam;
};

struct EpochRecord {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double train_mse = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double val_mse = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;  // 0-based index of the checkpointed epoch
};

struct TrainResult {
    MlpParams best;  // checkpoint with highest validation accuracy
    MlpParams last;
    TrainHistory history;
};

class TrainingDivergedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mini-batch Adam training on `features` rows selected by the split
/// indices. Train metrics are running means over the epoch's batches.
TrainResult train(const Eigen::MatrixXd& features, std::span<const int> labels, std::span<const std::size_t> train_rows,
                  std::span<const std::size_t> val_rows, const MlpParams& initial, const TrainConfig& config);

/// Convenience overload initialising the default architecture from `config.seed`.
TrainResult train(const Eigen::MatrixXd& features, std::span<const int> labels, std::span<const std::size_t> train_rows,
                  std::span<const std::size_t> val_rows, const TrainConfig& config);

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    double mse = 0.0;
    std::vector<int> predictions;
};

Evaluation evaluate(const MlpParams& params, const Eigen::MatrixXd& features, std::span<const int> labels,
                    std::span<const std::size_t> rows, int batch_size = 1024);

/// Row-wise argmax of the network output; ties go to the lowest class.
std::vector<int> predict(const MlpParams& params, const Eigen::MatrixXd& batch);
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Little-endian binary: magic "EEGMIMLP", version, activation, layer sizes,
/// row-major weights and biases as float64, then the config hash.
void save_model(const MlpParams& params, const std::string& config_hash, const std::filesystem::path& path);
MlpParams load_model(const std::filesystem::path& path, std::string* config_hash = nullptr);

}  // namespace eegmi
