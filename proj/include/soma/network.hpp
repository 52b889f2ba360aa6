#pragma once

#include "soma/env.hpp"
#include "soma/random.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace soma {

/// Factored: separate orientation (92) and position (27) heads combined
/// additively. Flat: one head over every action (ablation).
enum class HeadLayout : std::uint32_t { Factored = 0, Flat = 1 };

enum class Mode { Train, Eval };

struct LayerShape {
  int out = 0;
  int in = 0;
  bool operator==(const LayerShape&) const = default;
};

inline constexpr std::array<int, 4> kTrunkWidths = {kStateDim, 512, 256, 128};
inline constexpr int kNumTrunkLayers = 3;

/// Layer shapes in parameter order: three trunk layers, then the head(s).
inline std::vector<LayerShape> network_shapes(HeadLayout layout) {
  std::vector<LayerShape> s;
  for (int i = 0; i < kNumTrunkLayers; ++i) s.push_back({kTrunkWidths[i + 1], kTrunkWidths[i]});
  const int features = kTrunkWidths.back();
  if (layout == HeadLayout::Factored) {
    s.push_back({kNumOrientations, features});
    s.push_back({kNumPositions, features});
  } else {
    s.push_back({kNumActions, features});
  }
  return s;
}

/// Q[o * 27 + p] = q_ori[o] + q_pos[p].
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> combine(
    const Eigen::MatrixBase<DerivedA>& q_ori, const Eigen::MatrixBase<DerivedB>& q_pos) {
  using Scalar = typename DerivedA::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> q(q_ori.size() * q_pos.size());
  for (Eigen::Index o = 0; o < q_ori.size(); ++o)
    q.segment(o * q_pos.size(), q_pos.size()) = q_pos.array() + q_ori[o];
  return q;
}

/// MLP with ReLU trunk and linear heads. All parameters live in one flat
/// vector (per layer: weights column-major, then biases) so optimisers,
/// checkpoints and target syncs act on a single buffer.
template <typename Scalar>
class QNetwork {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  struct Cache {
    std::vector<Matrix> inputs;  // input of every layer; the last one feeds the heads
    std::vector<Matrix> active;  // per trunk layer: ReLU derivative times dropout scale
  };

  explicit QNetwork(HeadLayout layout = HeadLayout::Factored, Scalar dropout = Scalar(0.3))
      : layout_(layout), dropout_(dropout), shapes_(network_shapes(layout)) {
    if (!(dropout >= 0 && dropout < 1)) throw std::invalid_argument("dropout must lie in [0, 1)");
    Eigen::Index n = 0;
    for (const auto& s : shapes_) {
      offsets_.push_back(n);
      n += static_cast<Eigen::Index>(s.out) * (s.in + 1);
    }
    params_ = Vector::Zero(n);
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  void initialize(Rng& rng) {
    for (std::size_t l = 0; l < shapes_.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(shapes_[l].in));
      const Eigen::Index begin = offsets_[l];
      const Eigen::Index size = static_cast<Eigen::Index>(shapes_[l].out) * (shapes_[l].in + 1);
      for (Eigen::Index i = begin; i < begin + size; ++i)
        params_[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
  }

  HeadLayout layout() const { return layout_; }
  Scalar dropout() const { return dropout_; }
  const std::vector<LayerShape>& shapes() const { return shapes_; }
  int num_layers() const { return static_cast<int>(shapes_.size()); }
  int num_heads() const { return num_layers() - kNumTrunkLayers; }

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  MatrixMap weight(int l) { return MatrixMap(params_.data() + offsets_[l], shapes_[l].out, shapes_[l].in); }
  ConstMatrixMap weight(int l) const {
    return ConstMatrixMap(params_.data() + offsets_[l], shapes_[l].out, shapes_[l].in);
  }
  VectorMap bias(int l) { return VectorMap(params_.data() + bias_offset(l), shapes_[l].out); }
  ConstVectorMap bias(int l) const {
    return ConstVectorMap(params_.data() + bias_offset(l), shapes_[l].out);
  }

  /// Head outputs for a batch of states (one column per state). Train mode
  /// applies inverted dropout after each trunk ReLU using `dropout_rng`.
  std::vector<Matrix> forward(const Matrix& states, Mode mode, Rng* dropout_rng = nullptr,
                              Cache* cache = nullptr) const {
    if (states.rows() != kStateDim) throw std::invalid_argument("forward: state width must be 36");
    const bool drop = mode == Mode::Train && dropout_ > 0;
    if (drop && !dropout_rng) throw std::invalid_argument("forward: train mode needs a dropout RNG");
    const Scalar keep_scale = Scalar(1) / (Scalar(1) - dropout_);

    Matrix x = states;
    if (cache) {
      cache->inputs.clear();
      cache->active.clear();
    }
    for (int l = 0; l < kNumTrunkLayers; ++l) {
      if (cache) cache->inputs.push_back(x);
      Matrix z = weight(l) * x;
      z.colwise() += bias(l);
      Matrix gate = (z.array() > Scalar(0)).template cast<Scalar>();
      if (drop) {
        for (Eigen::Index i = 0; i < gate.size(); ++i)
          gate.data()[i] *= dropout_rng->uniform() < static_cast<double>(dropout_) ? Scalar(0) : keep_scale;
      }
      x = z.cwiseProduct(gate);
      if (cache) cache->active.push_back(std::move(gate));
    }
    if (cache) cache->inputs.push_back(x);

    std::vector<Matrix> heads;
    for (int l = kNumTrunkLayers; l < num_layers(); ++l) {
      Matrix h = weight(l) * x;
      h.colwise() += bias(l);
      heads.push_back(std::move(h));
    }
    return heads;
  }

  /// Gradient of a scalar loss with respect to every parameter, given the
  /// loss gradient with respect to each head output.
  Vector backward(const Cache& cache, const std::vector<Matrix>& d_heads) const {
    if (static_cast<int>(d_heads.size()) != num_heads())
      throw std::invalid_argument("backward: one gradient per head required");
    Vector grad = Vector::Zero(params_.size());
    const Matrix& features = cache.inputs.back();
    Matrix dx = Matrix::Zero(features.rows(), features.cols());
    for (int h = 0; h < num_heads(); ++h) {
      const int l = kNumTrunkLayers + h;
      weight_grad(grad, l) = d_heads[h] * features.transpose();
      bias_grad(grad, l) = d_heads[h].rowwise().sum();
      dx.noalias() += weight(l).transpose() * d_heads[h];
    }
    for (int l = kNumTrunkLayers - 1; l >= 0; --l) {
      const Matrix dz = dx.cwiseProduct(cache.active[l]);
      weight_grad(grad, l) = dz * cache.inputs[l].transpose();
      bias_grad(grad, l) = dz.rowwise().sum();
      if (l > 0) dx = weight(l).transpose() * dz;
    }
    return grad;
  }

  /// Q-values over every action for one state, eval mode.
  Vector q_values(const StateVector<Scalar>& state) const {
    const auto heads = forward(Matrix(state), Mode::Eval);
    return layout_ == HeadLayout::Factored ? combine(heads[0].col(0), heads[1].col(0))
                                           : Vector(heads[0].col(0));
  }

  bool all_finite() const { return params_.allFinite(); }

 private:
  Eigen::Index bias_offset(int l) const {
    return offsets_[l] + static_cast<Eigen::Index>(shapes_[l].out) * shapes_[l].in;
  }
  MatrixMap weight_grad(Vector& g, int l) const {
    return MatrixMap(g.data() + offsets_[l], shapes_[l].out, shapes_[l].in);
  }
  VectorMap bias_grad(Vector& g, int l) const { return VectorMap(g.data() + bias_offset(l), shapes_[l].out); }

  HeadLayout layout_;
  Scalar dropout_;
  std::vector<LayerShape> shapes_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

/// Adam with bias correction.
template <typename Scalar>
struct Adam {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar lr = Scalar(1e-4);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
  Vector m;
  Vector v;
  long long t = 0;

  void step(Vector& params, const Vector& grad) {
    if (m.size() != params.size()) {
      m = Vector::Zero(params.size());
      v = Vector::Zero(params.size());
    }
    ++t;
    m = beta1 * m + (Scalar(1) - beta1) * grad;
    v = beta2 * v + (Scalar(1) - beta2) * grad.cwiseAbs2();
    const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(static_cast<double>(beta1), t));
    const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(static_cast<double>(beta2), t));
    params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

/// Rescales `grad` so its L2 norm is at most `max_norm`; returns the norm before clipping.
template <typename Scalar>
Scalar clip_global_norm(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grad, Scalar max_norm) {
  const Scalar norm = grad.norm();
  if (norm > max_norm) grad *= max_norm / norm;
  return norm;
}

}  // namespace soma
