#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "csbmlab/graph.hpp"
#include "csbmlab/rng.hpp"

namespace csbmlab {

struct TrainConfig {
    int hidden = 16;
    int epochs = 400;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 0;

    void validate() const {
        if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
    }
};

struct NetParams {
    Eigen::MatrixXd w1;  // m_feat x hidden
    Eigen::VectorXd b1;  // hidden
    Eigen::MatrixXd w2;  // hidden x k
    Eigen::VectorXd b2;  // k
};

/// Symmetric-normalized propagation with self-loops: D~^{-1/2} (A+I) D~^{-1/2}.
inline Eigen::SparseMatrix<double> gcn_propagation(const Graph& g) {
    const int n = g.num_nodes();
    Eigen::VectorXd inv_sqrt(n);
    for (int i = 0; i < n; ++i) inv_sqrt(i) = 1.0 / std::sqrt(g.degree(i) + 1.0);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(2 * g.num_edges() + n));
    for (int i = 0; i < n; ++i) {
        trips.emplace_back(i, i, inv_sqrt(i) * inv_sqrt(i));
        for (int j : g.neighbors(i)) trips.emplace_back(i, j, inv_sqrt(i) * inv_sqrt(j));
    }
    Eigen::SparseMatrix<double> s(n, n);
    s.setFromTriplets(trips.begin(), trips.end());
    return s;
}

/// Two-layer softmax classifier over a fixed propagation matrix: the GCN when
/// S is the normalized adjacency, the graph-blind MLP when S is the identity.
/// Exposes loss and analytic gradients so they can be checked against finite
/// differences directly.
class SoftmaxNet {
public:
    SoftmaxNet(Eigen::SparseMatrix<double> s, Features x, Labels labels)
        : s_(std::move(s)), x_(std::move(x)), labels_(std::move(labels)) {
        if (s_.rows() != s_.cols()) throw std::invalid_argument("propagation must be square");
        if (x_.rows() != s_.rows()) throw std::invalid_argument("feature row count mismatch");
        if (labels_.size() != static_cast<int>(x_.rows()))
            throw std::invalid_argument("label count mismatch");
        sx_ = s_ * x_;
        onehot_ = Eigen::MatrixXd::Zero(x_.rows(), labels_.k);
        for (int i = 0; i < labels_.size(); ++i) onehot_(i, labels_[i]) = 1.0;
    }

    int num_features() const { return static_cast<int>(x_.cols()); }
    int num_classes() const { return labels_.k; }
    const Labels& labels() const { return labels_; }

    NetParams init_params(int hidden, RngStream& rng) const {
        NetParams p;
        p.w1.resize(x_.cols(), hidden);
        const double std1 = 1.0 / std::sqrt(static_cast<double>(x_.cols()));
        for (Eigen::Index i = 0; i < p.w1.rows(); ++i)
            for (Eigen::Index j = 0; j < p.w1.cols(); ++j) p.w1(i, j) = std1 * rng.normal();
        p.b1 = Eigen::VectorXd::Zero(hidden);
        p.w2.resize(hidden, labels_.k);
        const double std2 = 1.0 / std::sqrt(static_cast<double>(hidden));
        for (Eigen::Index i = 0; i < p.w2.rows(); ++i)
            for (Eigen::Index j = 0; j < p.w2.cols(); ++j) p.w2(i, j) = std2 * rng.normal();
        p.b2 = Eigen::VectorXd::Zero(labels_.k);
        return p;
    }

    Eigen::MatrixXd logits(const NetParams& p) const {
        const Eigen::MatrixXd z1 =
            (sx_ * p.w1).rowwise() + p.b1.transpose();
        const Eigen::MatrixXd h = z1.cwiseMax(0.0);
        return ((s_ * h) * p.w2).rowwise() + p.b2.transpose();
    }

    double loss(const NetParams& p) const {
        double value = 0.0;
        forward_backward(p, &value, nullptr);
        return value;
    }

    NetParams gradient(const NetParams& p, double* loss_out = nullptr) const {
        NetParams grad;
        double value = 0.0;
        forward_backward(p, &value, &grad);
        if (loss_out) *loss_out = value;
        return grad;
    }

private:
    void forward_backward(const NetParams& p, double* loss_out, NetParams* grad) const {
        const auto n = static_cast<double>(x_.rows());
        const Eigen::MatrixXd z1 = (sx_ * p.w1).rowwise() + p.b1.transpose();
        const Eigen::MatrixXd h = z1.cwiseMax(0.0);
        const Eigen::MatrixXd sh = s_ * h;
        const Eigen::MatrixXd z2 = (sh * p.w2).rowwise() + p.b2.transpose();

        const Eigen::VectorXd row_max = z2.rowwise().maxCoeff();
        const Eigen::MatrixXd shifted = z2.colwise() - row_max;
        const Eigen::MatrixXd expz = shifted.array().exp().matrix();
        const Eigen::VectorXd norm = expz.rowwise().sum();

        double loss = 0.0;
        for (Eigen::Index i = 0; i < z2.rows(); ++i)
            loss += std::log(norm(i)) - shifted(i, labels_[static_cast<int>(i)]);
        loss /= n;
        if (!std::isfinite(loss)) throw std::runtime_error("training diverged");
        if (loss_out) *loss_out = loss;
        if (!grad) return;

        const Eigen::MatrixXd probs = expz.array().colwise() / norm.array();
        const Eigen::MatrixXd dz2 = (probs - onehot_) / n;
        grad->w2 = sh.transpose() * dz2;
        grad->b2 = dz2.colwise().sum();
        const Eigen::MatrixXd dsh = dz2 * p.w2.transpose();
        const Eigen::MatrixXd dh = s_.transpose() * dsh;
        const Eigen::MatrixXd dz1 =
            dh.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
        grad->w1 = sx_.transpose() * dz1;
        grad->b1 = dz1.colwise().sum();
    }

    Eigen::SparseMatrix<double> s_;
    Features x_;
    Labels labels_;
    Eigen::MatrixXd sx_;
    Eigen::MatrixXd onehot_;
};

inline SoftmaxNet make_gcn_net(const Graph& g, const Features& x, const Labels& labels) {
    return SoftmaxNet(gcn_propagation(g), x, labels);
}

inline SoftmaxNet make_mlp_net(const Features& x, const Labels& labels) {
    Eigen::SparseMatrix<double> s(x.rows(), x.rows());
    s.setIdentity();
    return SoftmaxNet(std::move(s), x, labels);
}

struct TrainResult {
    double test_accuracy;
    std::vector<double> loss_curve;  // training loss per epoch, pre-update
};

namespace detail {

struct AdamState {
    NetParams m, v;
    long t = 0;

    explicit AdamState(const NetParams& shape) {
        m.w1 = Eigen::MatrixXd::Zero(shape.w1.rows(), shape.w1.cols());
        m.b1 = Eigen::VectorXd::Zero(shape.b1.size());
        m.w2 = Eigen::MatrixXd::Zero(shape.w2.rows(), shape.w2.cols());
        m.b2 = Eigen::VectorXd::Zero(shape.b2.size());
        v = m;
    }

    template <class T>
    void step_one(T& param, const T& grad, T& mm, T& vv, const TrainConfig& cfg) {
        mm = cfg.beta1 * mm + (1.0 - cfg.beta1) * grad;
        vv = cfg.beta2 * vv.array().matrix() +
             (1.0 - cfg.beta2) * grad.array().square().matrix();
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        param.array() -=
            cfg.learning_rate * (mm.array() / bc1) / ((vv.array() / bc2).sqrt() + cfg.adam_eps);
    }

    void step(NetParams& p, const NetParams& g, const TrainConfig& cfg) {
        ++t;
        step_one(p.w1, g.w1, m.w1, v.w1, cfg);
        step_one(p.b1, g.b1, m.b1, v.b1, cfg);
        step_one(p.w2, g.w2, m.w2, v.w2, cfg);
        step_one(p.b2, g.b2, m.b2, v.b2, cfg);
    }
};

inline double argmax_accuracy(const Eigen::MatrixXd& logits, const Labels& labels) {
    long hits = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < logits.cols(); ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        if (static_cast<int>(best) == labels[static_cast<int>(i)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

inline TrainResult train_net(const SoftmaxNet& tr, const SoftmaxNet& te,
                             const TrainConfig& cfg) {
    cfg.validate();
    if (tr.num_features() != te.num_features() || tr.num_classes() != te.num_classes())
        throw std::invalid_argument("train/test dimensions disagree");
    RngStream rng(cfg.seed);
    NetParams p = tr.init_params(cfg.hidden, rng);
    AdamState adam(p);
    TrainResult result;
    result.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss = 0.0;
        const NetParams grad = tr.gradient(p, &loss);
        result.loss_curve.push_back(loss);
        adam.step(p, grad, cfg);
    }
    result.test_accuracy = argmax_accuracy(te.logits(p), te.labels());
    return result;
}

}  // namespace detail

inline TrainResult train_gcn(const Graph& g_train, const Features& x_train,
                             const Labels& l_train, const Graph& g_test,
                             const Features& x_test, const Labels& l_test,
                             const TrainConfig& cfg) {
    return detail::train_net(make_gcn_net(g_train, x_train, l_train),
                             make_gcn_net(g_test, x_test, l_test), cfg);
}

inline TrainResult train_mlp(const Features& x_train, const Labels& l_train,
                             const Features& x_test, const Labels& l_test,
                             const TrainConfig& cfg) {
    return detail::train_net(make_mlp_net(x_train, l_train),
                             make_mlp_net(x_test, l_test), cfg);
}

}  // namespace csbmlab
