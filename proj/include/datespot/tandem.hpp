#ifndef DATESPOT_TANDEM_HPP
#define DATESPOT_TANDEM_HPP

// Tandem features: an MLP frame classifier over character labels, posterior
// extraction, PCA reduction with output normalization, and concatenation
// with the source features.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "datespot/features.hpp"

namespace datespot {

// ---------------------------------------------------------------------------
// Frame classifier (single hidden layer, sigmoid + softmax)
// ---------------------------------------------------------------------------

struct MlpConfig {
    int hidden = 256;
    double learning_rate = 0.1;
    int batch_size = 32;
    int max_epochs = 60;
    int patience = 6;              // epochs without validation improvement
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;
};

class FrameClassifier {
public:
    FrameClassifier() = default;
    FrameClassifier(int in_dim, int hidden, int out_dim, std::uint64_t seed)
        : in_dim_(in_dim), hidden_(hidden), out_dim_(out_dim) {
        std::mt19937_64 rng(seed);
        auto init = [&](Eigen::MatrixXd& m, int rows, int cols, double scale) {
            std::uniform_real_distribution<double> dist(-scale, scale);
            m.resize(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
        };
        init(w1_, hidden, in_dim, 1.0 / std::sqrt(double(in_dim)));
        init(w2_, out_dim, hidden, 1.0 / std::sqrt(double(hidden)));
        b1_ = Eigen::VectorXd::Zero(hidden);
        b2_ = Eigen::VectorXd::Zero(out_dim);
    }

    int in_dim() const { return in_dim_; }
    int hidden_dim() const { return hidden_; }
    int out_dim() const { return out_dim_; }

    Eigen::MatrixXd& w1() { return w1_; }
    Eigen::VectorXd& b1() { return b1_; }
    Eigen::MatrixXd& w2() { return w2_; }
    Eigen::VectorXd& b2() { return b2_; }
    const Eigen::MatrixXd& w1() const { return w1_; }
    const Eigen::VectorXd& b1() const { return b1_; }
    const Eigen::MatrixXd& w2() const { return w2_; }
    const Eigen::VectorXd& b2() const { return b2_; }

    /// Softmax posterior for one frame.
    Eigen::VectorXd posterior(std::span<const float> x) const {
        if (int(x.size()) != in_dim_)
            throw std::invalid_argument("FrameClassifier: input dimension mismatch");
        Eigen::VectorXd xv(in_dim_);
        for (int d = 0; d < in_dim_; ++d) xv(d) = x[size_t(d)];
        Eigen::VectorXd h = (w1_ * xv + b1_).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        Eigen::VectorXd z = w2_ * h + b2_;
        double m = z.maxCoeff();
        Eigen::VectorXd e = (z.array() - m).exp();
        return e / e.sum();
    }

    /// Mean cross-entropy over a batch (columns of X) and, if requested,
    /// gradients with respect to all parameters.
    double loss_and_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             Eigen::MatrixXd* gW1 = nullptr, Eigen::VectorXd* gB1 = nullptr,
                             Eigen::MatrixXd* gW2 = nullptr, Eigen::VectorXd* gB2 = nullptr) const {
        const int B = int(X.cols());
        if (int(y.size()) != B) throw std::invalid_argument("batch size mismatch");
        Eigen::MatrixXd a1 = (w1_ * X).colwise() + b1_;
        Eigen::MatrixXd h = a1.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        Eigen::MatrixXd z = (w2_ * h).colwise() + b2_;
        Eigen::MatrixXd p(out_dim_, B);
        double loss = 0.0;
        for (int i = 0; i < B; ++i) {
            double m = z.col(i).maxCoeff();
            Eigen::VectorXd e = (z.col(i).array() - m).exp();
            p.col(i) = e / e.sum();
            loss -= std::log(std::max(1e-300, p(y[size_t(i)], i)));
        }
        loss /= B;
        if (gW1) {
            Eigen::MatrixXd dz = p;
            for (int i = 0; i < B; ++i) dz(y[size_t(i)], i) -= 1.0;
            dz /= double(B);
            *gW2 = dz * h.transpose();
            *gB2 = dz.rowwise().sum();
            Eigen::MatrixXd dh = w2_.transpose() * dz;
            Eigen::MatrixXd da1 = dh.array() * h.array() * (1.0 - h.array());
            *gW1 = da1 * X.transpose();
            *gB1 = da1.rowwise().sum();
        }
        return loss;
    }

    void apply_gradient(const Eigen::MatrixXd& gW1, const Eigen::VectorXd& gB1,
                        const Eigen::MatrixXd& gW2, const Eigen::VectorXd& gB2, double lr) {
        w1_ -= lr * gW1;
        b1_ -= lr * gB1;
        w2_ -= lr * gW2;
        b2_ -= lr * gB2;
    }

private:
    int in_dim_ = 0, hidden_ = 0, out_dim_ = 0;
    Eigen::MatrixXd w1_, w2_;
    Eigen::VectorXd b1_, b2_;
};

/// Mini-batch gradient descent on cross-entropy with early stopping on a
/// held-out frame-accuracy split. Deterministic for a fixed seed.
inline FrameClassifier train_frame_classifier(const std::vector<std::vector<float>>& frames,
                                              const std::vector<int>& labels, int num_classes,
                                              const MlpConfig& cfg,
                                              std::vector<std::string>* warnings = nullptr) {
    if (frames.empty()) throw std::invalid_argument("train_frame_classifier: no frames");
    if (frames.size() != labels.size())
        throw std::invalid_argument("train_frame_classifier: label count mismatch");
    const int D = int(frames.front().size());
    std::vector<size_t> class_count(size_t(num_classes), 0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument("train_frame_classifier: label out of range");
        ++class_count[size_t(y)];
    }
    if (warnings)
        for (int c = 0; c < num_classes; ++c)
            if (class_count[size_t(c)] == 0)
                warnings->push_back("class " + std::to_string(c) + " absent from training data");

    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(frames.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    std::shuffle(order.begin(), order.end(), rng);
    size_t n_val = std::min(frames.size() - 1,
                            size_t(std::llround(cfg.validation_fraction * double(frames.size()))));
    std::vector<int> val(order.begin(), order.begin() + long(n_val));
    std::vector<int> train(order.begin() + long(n_val), order.end());

    FrameClassifier clf(D, cfg.hidden, num_classes, cfg.seed + 1);
    FrameClassifier best = clf;
    double best_acc = -1.0;
    int stall = 0;

    auto accuracy = [&](const std::vector<int>& idx) {
        if (idx.empty()) return 1.0;
        size_t hit = 0;
        for (int i : idx) {
            Eigen::VectorXd p = clf.posterior(std::span<const float>(frames[size_t(i)]));
            int arg = 0;
            p.maxCoeff(&arg);
            if (arg == labels[size_t(i)]) ++hit;
        }
        return double(hit) / double(idx.size());
    };

    Eigen::MatrixXd gW1, gW2;
    Eigen::VectorXd gB1, gB2;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(train.begin(), train.end(), rng);
        for (size_t start = 0; start < train.size(); start += size_t(cfg.batch_size)) {
            size_t end = std::min(train.size(), start + size_t(cfg.batch_size));
            int B = int(end - start);
            Eigen::MatrixXd X(D, B);
            std::vector<int> y(static_cast<size_t>(B));
            for (int i = 0; i < B; ++i) {
                const auto& f = frames[size_t(train[start + size_t(i)])];
                for (int d = 0; d < D; ++d) X(d, i) = f[size_t(d)];
                y[size_t(i)] = labels[size_t(train[start + size_t(i)])];
            }
            clf.loss_and_gradient(X, y, &gW1, &gB1, &gW2, &gB2);
            clf.apply_gradient(gW1, gB1, gW2, gB2, cfg.learning_rate);
        }
        double acc = accuracy(val.empty() ? train : val);
        if (acc > best_acc + 1e-9) {
            best_acc = acc;
            best = clf;
            stall = 0;
        } else if (++stall >= cfg.patience) {
            break;
        }
    }
    return best;
}

/// Per-frame posteriors for a whole sequence.
inline FeatureSequence posteriors(const FrameClassifier& clf, const FeatureSequence& seq) {
    FeatureSequence out;
    out.resize(seq.count, clf.out_dim());
    out.tag = seq.tag;
    for (int t = 0; t < seq.count; ++t) {
        Eigen::VectorXd p = clf.posterior(seq.frame(t));
        auto f = out.frame(t);
        for (int d = 0; d < clf.out_dim(); ++d) f[size_t(d)] = float(p(d));
    }
    return out;
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct PcaTransform {
    int in_dim = 0;
    int out_dim = 0;
    Eigen::VectorXd mean;              // input centering
    Eigen::MatrixXd projection;        // out_dim x in_dim, orthonormal rows
    Eigen::VectorXd eigenvalues;       // descending, size out_dim
    Eigen::VectorXd post_mean;         // fitted on the projected training set
    Eigen::VectorXd post_std;

    Eigen::VectorXd project(std::span<const float> x) const {
        Eigen::VectorXd xv(in_dim);
        for (int d = 0; d < in_dim; ++d) xv(d) = x[size_t(d)];
        Eigen::VectorXd p = projection * (xv - mean);
        return (p - post_mean).cwiseQuotient(post_std);
    }
};

/// Top-R principal components of the frame corpus, plus mean/variance
/// normalizers fitted on the projected training data. Directions whose
/// eigenvalue is numerically zero (rank-deficient data) are kept as zero
/// rows so the output dimension stays R; their normalized outputs are 0.
inline PcaTransform fit_pca(const std::vector<FeatureSequence>& corpus, int out_dim) {
    size_t total = 0;
    int D = 0;
    for (const auto& s : corpus) {
        if (D == 0) D = s.dim;
        if (s.dim != D) throw std::invalid_argument("fit_pca: inconsistent dimensions");
        total += size_t(s.count);
    }
    if (D == 0 || total < size_t(out_dim)) throw std::invalid_argument("fit_pca: too few frames");
    if (out_dim > D) throw std::invalid_argument("fit_pca: out_dim exceeds input dimension");

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
    for (const auto& s : corpus)
        for (int t = 0; t < s.count; ++t) {
            auto f = s.frame(t);
            for (int d = 0; d < D; ++d) mean(d) += f[size_t(d)];
        }
    mean /= double(total);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(D, D);
    Eigen::VectorXd x(D);
    for (const auto& s : corpus)
        for (int t = 0; t < s.count; ++t) {
            auto f = s.frame(t);
            for (int d = 0; d < D; ++d) x(d) = f[size_t(d)] - mean(d);
            cov.noalias() += x * x.transpose();
        }
    cov /= double(total);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigensolver failed");

    PcaTransform pca;
    pca.in_dim = D;
    pca.out_dim = out_dim;
    pca.mean = mean;
    pca.projection = Eigen::MatrixXd::Zero(out_dim, D);
    pca.eigenvalues = Eigen::VectorXd::Zero(out_dim);
    for (int r = 0; r < out_dim; ++r) {
        int src = D - 1 - r;  // eigenvalues come out ascending
        double lambda = solver.eigenvalues()(src);
        pca.eigenvalues(r) = lambda;
        if (lambda > 1e-12) pca.projection.row(r) = solver.eigenvectors().col(src).transpose();
    }

    pca.post_mean = Eigen::VectorXd::Zero(out_dim);
    pca.post_std = Eigen::VectorXd::Ones(out_dim);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(out_dim), sq = Eigen::VectorXd::Zero(out_dim);
    for (const auto& s : corpus)
        for (int t = 0; t < s.count; ++t) {
            auto f = s.frame(t);
            for (int d = 0; d < D; ++d) x(d) = f[size_t(d)];
            Eigen::VectorXd p = pca.projection * (x - mean);
            sum += p;
            sq += p.cwiseProduct(p);
        }
    pca.post_mean = sum / double(total);
    for (int r = 0; r < out_dim; ++r) {
        double var = sq(r) / double(total) - pca.post_mean(r) * pca.post_mean(r);
        pca.post_std(r) = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return pca;
}

/// concat(original frame, normalized PCA projection of its posterior).
inline FeatureSequence tandem_transform(const FrameClassifier& clf, const PcaTransform& pca,
                                        const FeatureSequence& seq) {
    if (seq.dim != clf.in_dim()) throw std::invalid_argument("tandem_transform: dimension mismatch");
    if (pca.in_dim != clf.out_dim())
        throw std::invalid_argument("tandem_transform: PCA/classifier dimension mismatch");
    FeatureSequence out;
    out.resize(seq.count, seq.dim + pca.out_dim);
    out.tag = FeatureTag::Tandem;
    for (int t = 0; t < seq.count; ++t) {
        auto src = seq.frame(t);
        auto dst = out.frame(t);
        std::copy(src.begin(), src.end(), dst.begin());
        Eigen::VectorXd p = clf.posterior(src);
        std::vector<float> pf(size_t(pca.in_dim));
        for (int d = 0; d < pca.in_dim; ++d) pf[size_t(d)] = float(p(d));
        Eigen::VectorXd proj = pca.project(std::span<const float>(pf));
        for (int r = 0; r < pca.out_dim; ++r) dst[size_t(seq.dim + r)] = float(proj(r));
    }
    return out;
}

}  // namespace datespot

#endif
