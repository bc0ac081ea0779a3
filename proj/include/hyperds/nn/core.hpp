#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hyperds/core/error.hpp"
#include "hyperds/core/rng.hpp"
#include "hyperds/io/tensor_record.hpp"

namespace hyperds::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
struct Param {
  std::string name;
  Mat<S> w;
  Mat<S> g;
};

// Owns all learnable state. Parameters are initialized from a seed derived
// from (registry seed, parameter name), so construction order never affects
// values and two builds with the same seed are identical.
template <class S>
class ParamRegistry {
 public:
  explicit ParamRegistry(std::uint64_t seed) : seed_(seed) {}

  Param<S>& add(const std::string& name, int rows, int cols, double init_std) {
    for (const auto& p : params_)
      if (p->name == name) throw Error("duplicate parameter name: " + name);
    auto p = std::make_unique<Param<S>>();
    p->name = name;
    p->w.resize(rows, cols);
    p->g = Mat<S>::Zero(rows, cols);
    Rng rng(mix_seed(seed_, fnv1a(name)));
    if (init_std == 0.0) {
      p->w.setZero();
    } else {
      for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) p->w(r, c) = static_cast<S>(rng.normal(0.0, init_std));
    }
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Param<S>& at(const std::string& name) {
    for (auto& p : params_)
      if (p->name == name) return *p;
    throw Error("unknown parameter: " + name);
  }

  std::vector<Param<S>*> all() {
    std::vector<Param<S>*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }
  size_t count() const { return params_.size(); }
  std::uint64_t seed() const { return seed_; }

  void zero_grad() {
    for (auto& p : params_) p->g.setZero();
  }

  double grad_norm() const {
    double s = 0.0;
    for (const auto& p : params_) s += static_cast<double>(p->g.template cast<double>().squaredNorm());
    return std::sqrt(s);
  }

  void scale_grads(S factor) {
    for (auto& p : params_) p->g *= factor;
  }

  std::vector<io::TensorRecord> to_records() const {
    std::vector<io::TensorRecord> out;
    for (const auto& p : params_) {
      io::TensorRecord r;
      r.name = p->name;
      r.shape = {p->w.rows(), p->w.cols()};
      r.data.resize(p->w.size());
      // column-major flatten, restored identically below
      for (Eigen::Index i = 0; i < p->w.size(); ++i)
        r.data[static_cast<size_t>(i)] = static_cast<float>(p->w.data()[i]);
      out.push_back(std::move(r));
    }
    return out;
  }

  void from_records(const std::vector<io::TensorRecord>& records) {
    for (auto& p : params_) {
      const io::TensorRecord* found = nullptr;
      for (const auto& r : records)
        if (r.name == p->name) {
          found = &r;
          break;
        }
      if (!found) throw BundleSchemaError("checkpoint is missing parameter: " + p->name);
      if (found->shape.size() != 2 || found->shape[0] != p->w.rows() ||
          found->shape[1] != p->w.cols())
        throw BundleSchemaError("checkpoint shape mismatch for " + p->name);
      for (Eigen::Index i = 0; i < p->w.size(); ++i)
        p->w.data()[i] = static_cast<S>(found->data[static_cast<size_t>(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Param<S>>> params_;
};

template <class S>
class Adam {
 public:
  Adam(ParamRegistry<S>& reg, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : reg_(&reg), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : reg.all()) {
      m_.push_back(Mat<S>::Zero(p->w.rows(), p->w.cols()));
      v_.push_back(Mat<S>::Zero(p->w.rows(), p->w.cols()));
    }
  }

  // Clips the global gradient norm, applies one update, clears gradients.
  void step(double lr, double clip_norm = 0.0) {
    if (clip_norm > 0.0) {
      const double norm = reg_->grad_norm();
      if (norm > clip_norm) reg_->scale_grads(static_cast<S>(clip_norm / norm));
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    auto params = reg_->all();
    for (size_t k = 0; k < params.size(); ++k) {
      auto& p = *params[k];
      m_[k] = static_cast<S>(beta1_) * m_[k] + static_cast<S>(1.0 - beta1_) * p.g;
      v_[k] = static_cast<S>(beta2_) * v_[k] +
              static_cast<S>(1.0 - beta2_) * p.g.cwiseProduct(p.g);
      const double scale = lr / bc1;
      p.w.array() -= static_cast<S>(scale) * m_[k].array() /
                     ((v_[k].array() / static_cast<S>(bc2)).sqrt() + static_cast<S>(eps_));
      p.g.setZero();
    }
  }

 private:
  ParamRegistry<S>* reg_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat<S>> m_, v_;
};

// Cosine annealing with warm restarts; returns the initial rate at every
// restart boundary (epoch % period == 0).
inline double cosine_restart_lr(double lr0, double lr_min, int epoch, int period) {
  const int e = epoch % period;
  return lr_min + (lr0 - lr_min) * 0.5 *
                      (1.0 + std::cos(M_PI * static_cast<double>(e) / period));
}

}  // namespace hyperds::nn
