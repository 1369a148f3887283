#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "eegmi/mlp.hpp"
#include "synthetic.hpp"

using namespace eegmi;

namespace {

struct Blobs {
    Eigen::MatrixXd x;
    std::vector<int> y;
    std::vector<std::size_t> train, test;
};

/// Four well separated Gaussian clusters in `dims` dimensions.
Blobs blobs(int per_class, int dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd centres(4, dims);
    for (Eigen::Index i = 0; i < centres.size(); ++i) centres.data()[i] = 4.0 * g(rng);
    Blobs b;
    b.x.resize(4 * per_class, dims);
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < per_class; ++i) {
            const int r = k * per_class + i;
            for (int d = 0; d < dims; ++d) b.x(r, d) = centres(k, d) + 0.7 * g(rng);
            b.y.push_back(k);
            (i % 5 == 0 ? b.test : b.train).push_back(static_cast<std::size_t>(r));
        }
    return b;
}

double loss_at(const MlpParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    return cross_entropy(forward(p, x).logits, y);
}

void gradient_check(Activation act) {
    const std::vector<int> sizes = {5, 7, 6, 4};
    auto p = init_mlp(sizes, 3, act);
    for (auto& l : p.layers) l.bias.setConstant(0.05);
    const auto b = blobs(3, 5, 4);
    const auto lg = loss_and_grad(p, b.x, b.y);
    EXPECT_NEAR(lg.loss, loss_at(p, b.x, b.y), 1e-12);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto probe = [&](double& theta, double analytic) {
            const double keep = theta;
            theta = keep + h;
            const double up = loss_at(p, b.x, b.y);
            theta = keep - h;
            const double down = loss_at(p, b.x, b.y);
            theta = keep;
            const double numeric = (up - down) / (2.0 * h);
            worst = std::max(worst, std::abs(numeric - analytic) / std::max(1.0, std::abs(numeric) + std::abs(analytic)));
        };
        auto& w = p.layers[l].weights;
        for (Eigen::Index i = 0; i < w.size(); ++i) probe(w.data()[i], lg.grads.layers[l].weights.data()[i]);
        auto& bias = p.layers[l].bias;
        for (Eigen::Index i = 0; i < bias.size(); ++i) probe(bias.data()[i], lg.grads.layers[l].bias.data()[i]);
    }
    EXPECT_LE(worst, 1e-5);
}

}  // namespace

TEST(Mlp, DefaultArchitecture) {
    const auto sizes = default_layer_sizes(322);
    EXPECT_EQ(sizes, (std::vector<int>{322, 700, 128, 128, 64, 64, 32, 32, 4}));
    const auto p = init_mlp(sizes, 1);
    EXPECT_EQ(p.parameter_count(), 348024u);
    EXPECT_EQ(p.layers.front().weights.rows(), 700);
    EXPECT_EQ(p.layers.front().weights.cols(), 322);
}

TEST(Mlp, GlorotBoundsAndZeroBias) {
    const std::vector<int> sizes = {50, 30, 4};
    const auto p = init_mlp(sizes, 2);
    EXPECT_LE(p.layers[0].weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 80.0));
    EXPECT_GT(p.layers[0].weights.cwiseAbs().maxCoeff(), 0.9 * std::sqrt(6.0 / 80.0));
    EXPECT_EQ(p.layers[1].bias, Eigen::VectorXd::Zero(4));
    EXPECT_THROW(init_mlp(std::vector<int>{4}, 1), std::invalid_argument);
    EXPECT_THROW(init_mlp(std::vector<int>{4, 0, 2}, 1), std::invalid_argument);
}

TEST(Mlp, GradientMatchesFiniteDifferencesTanh) { gradient_check(Activation::Tanh); }

TEST(Mlp, GradientMatchesFiniteDifferencesRelu) { gradient_check(Activation::Relu); }

TEST(Mlp, SoftmaxStableForHugeLogits) {
    Eigen::MatrixXd logits(2, 3);
    logits << 700.0, 699.0, -700.0, 1000.0, 1000.0, 1000.0;
    const auto p = softmax_rows(logits);
    EXPECT_TRUE(p.allFinite());
    EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-15);
    EXPECT_NEAR(p(0, 0) / p(0, 1), std::exp(1.0), 1e-12);
    EXPECT_NEAR(p(1, 2), 1.0 / 3.0, 1e-15);
    const std::vector<int> y = {0, 1};
    const double ce = cross_entropy(logits, y);
    EXPECT_TRUE(std::isfinite(ce));
    EXPECT_NEAR(ce, 0.5 * (std::log(1.0 + std::exp(-1.0) + std::exp(-1400.0)) + std::log(3.0)), 1e-12);
}

TEST(Mlp, CrossEntropyLabelChecks) {
    const Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(2, 4);
    EXPECT_NEAR(cross_entropy(logits, std::vector<int>{0, 3}), std::log(4.0), 1e-15);
    EXPECT_THROW(cross_entropy(logits, std::vector<int>{0, 4}), std::out_of_range);
    EXPECT_THROW(cross_entropy(logits, std::vector<int>{0}), std::invalid_argument);
}

TEST(Mlp, FirstAdamStepHasMagnitudeLr) {
    const std::vector<int> sizes = {5, 6, 4};
    auto p = init_mlp(sizes, 5);
    const auto before = p;
    const auto b = blobs(4, 5, 6);
    const auto lg = loss_and_grad(p, b.x, b.y);
    AdamHyper hyper;
    hyper.lr = 0.01;
    auto state = AdamState::for_params(p, hyper);
    adam_step(p, state, lg.grads);
    EXPECT_EQ(state.step, 1);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const Eigen::MatrixXd dw = p.layers[l].weights - before.layers[l].weights;
        const auto& g = lg.grads.layers[l].weights;
        for (Eigen::Index i = 0; i < dw.size(); ++i) {
            const double gi = g.data()[i];
            if (std::abs(gi) < 1e-5) continue;
            EXPECT_NEAR(std::abs(dw.data()[i]), 0.01 * std::abs(gi) / (std::abs(gi) + 1e-7), 1e-12);
            EXPECT_LT(dw.data()[i] * gi, 0.0);
        }
    }
}

TEST(Mlp, ArgmaxTiesGoToLowestClass) {
    Eigen::MatrixXd s(3, 4);
    s << 0.25, 0.25, 0.25, 0.25, 0.1, 0.4, 0.4, 0.1, 0.0, 0.0, 0.0, 1.0;
    EXPECT_EQ(argmax_rows(s), (std::vector<int>{0, 1, 3}));
}

TEST(Mlp, LearnsSeparableBlobs) {
    const auto b = blobs(60, 8, 7);
    const std::vector<int> sizes = {8, 32, 16, 4};
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 16;
    cfg.seed = 9;
    cfg.adam.lr = 0.005;
    const auto r = train(b.x, b.y, b.train, b.test, init_mlp(sizes, 9), cfg);
    ASSERT_EQ(r.history.epochs.size(), 40u);
    const auto ev = evaluate(r.best, b.x, b.y, b.test);
    EXPECT_GE(ev.accuracy, 0.95);
    // every class is predicted at least once
    std::vector<int> seen(4, 0);
    for (int pr : ev.predictions) seen[static_cast<std::size_t>(pr)] = 1;
    EXPECT_EQ(seen, (std::vector<int>{1, 1, 1, 1}));
}

TEST(Mlp, CheckpointIsAtLeastLastEpoch) {
    const auto b = blobs(30, 6, 10);
    const std::vector<int> sizes = {6, 16, 4};
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.batch_size = 8;
    cfg.seed = 11;
    cfg.adam.lr = 0.02;
    const auto r = train(b.x, b.y, b.train, b.test, init_mlp(sizes, 11), cfg);
    const auto best = evaluate(r.best, b.x, b.y, b.test);
    const auto last = evaluate(r.last, b.x, b.y, b.test);
    EXPECT_GE(best.accuracy, last.accuracy);
    const auto be = static_cast<std::size_t>(r.history.best_epoch);
    EXPECT_DOUBLE_EQ(best.accuracy, r.history.epochs[be].val_accuracy);
    for (std::size_t e = 0; e < be; ++e) EXPECT_LT(r.history.epochs[e].val_accuracy, best.accuracy);
    for (const auto& rec : r.history.epochs) EXPECT_LE(rec.val_accuracy, best.accuracy);
}

TEST(Mlp, TrainingIsDeterministic) {
    const auto b = blobs(20, 6, 12);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 7;
    cfg.seed = 13;
    const std::vector<int> sizes = {6, 10, 4};
    const auto a = train(b.x, b.y, b.train, b.test, init_mlp(sizes, 13), cfg);
    const auto c = train(b.x, b.y, b.train, b.test, init_mlp(sizes, 13), cfg);
    for (std::size_t l = 0; l < a.last.layers.size(); ++l) EXPECT_EQ(a.last.layers[l].weights, c.last.layers[l].weights);
    EXPECT_EQ(a.history.epochs.back().train_loss, c.history.epochs.back().train_loss);
    cfg.seed = 14;
    const auto d = train(b.x, b.y, b.train, b.test, init_mlp(sizes, 13), cfg);
    EXPECT_NE(a.last.layers[0].weights, d.last.layers[0].weights);
}

TEST(Mlp, FullBatchLossDecreases) {
    const auto b = blobs(25, 5, 15);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = static_cast<int>(b.train.size());
    cfg.shuffle = false;
    cfg.adam.lr = 0.001;
    const std::vector<int> sizes = {5, 12, 4};
    const auto r = train(b.x, b.y, b.train, {}, init_mlp(sizes, 16), cfg);
    for (std::size_t e = 1; e < r.history.epochs.size(); ++e)
        EXPECT_LE(r.history.epochs[e].train_loss, r.history.epochs[e - 1].train_loss) << e;
}

TEST(Mlp, InvalidTrainingInputs) {
    const auto b = blobs(5, 3, 17);
    const auto p = init_mlp(std::vector<int>{3, 4}, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    EXPECT_THROW(train(b.x, b.y, {}, b.test, p, cfg), std::invalid_argument);
    cfg.batch_size = 0;
    EXPECT_THROW(train(b.x, b.y, b.train, b.test, p, cfg), std::invalid_argument);
    cfg.batch_size = 4;
    auto bad = b.y;
    bad[0] = 7;
    EXPECT_THROW(train(b.x, bad, b.train, b.test, p, cfg), std::out_of_range);
    cfg.epochs = 0;
    const auto r = train(b.x, b.y, b.train, b.test, p, cfg);
    EXPECT_TRUE(r.history.epochs.empty());
}

TEST(Mlp, ModelRoundTrip) {
    const auto p = init_mlp(std::vector<int>{7, 5, 4}, 18, Activation::Tanh);
    const auto dir = eegmi::testing::scratch_dir("mlp-io");
    save_model(p, "abc123", dir / "m.bin");
    std::string hash;
    const auto q = load_model(dir / "m.bin", &hash);
    EXPECT_EQ(hash, "abc123");
    EXPECT_EQ(q.layer_sizes, p.layer_sizes);
    EXPECT_EQ(q.hidden, Activation::Tanh);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        EXPECT_EQ(q.layers[l].weights, p.layers[l].weights);
        EXPECT_EQ(q.layers[l].bias, p.layers[l].bias);
    }
    std::ofstream(dir / "junk.bin") << "not a model";
    EXPECT_THROW(load_model(dir / "junk.bin"), std::runtime_error);
    std::filesystem::remove_all(dir);
}
