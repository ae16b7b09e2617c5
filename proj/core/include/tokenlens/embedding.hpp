#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tokenlens/parallel.hpp"
#include "tokenlens/vocabulary.hpp"

namespace tokenlens {

using Vector = Eigen::VectorXd;
// A sequence of vectors, one row per position.
using Sequence = Eigen::MatrixXd;
using FloatRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-token vectors stored as 32-bit floats, row = token id.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  // Throws InvalidArgument for dim == 0 or non-finite entries.
  explicit EmbeddingMatrix(FloatRows data);

  // Seeded N(0, scale^2) entries.
  static EmbeddingMatrix random(std::size_t n_tokens, std::size_t dim, std::uint64_t seed,
                                double scale = 1.0);

  std::size_t n_tokens() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  const FloatRows& data() const noexcept { return data_; }

  Vector row(std::size_t i) const;

  // Rows for `ids`, in order, as doubles.
  Sequence gather(std::span<const TokenId> ids) const;

 private:
  FloatRows data_;
};

// V_l: each token's vector run alone through the encoder to `layer`.
struct HiddenMatrix {
  int layer = 0;
  EmbeddingMatrix rows;
};

// Deterministic, length-preserving map from an embedding sequence to the
// hidden states at a layer. Layer 0 is the identity.
class LayerEncoder {
 public:
  virtual ~LayerEncoder() = default;

  virtual int depth() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string describe() const = 0;

  // Throws InvalidArgument when `layer` is outside [0, depth()] or the input
  // width differs from dim().
  Sequence encode_to_layer(const Sequence& inputs, int layer) const;

 protected:
  virtual Sequence run_layer(const Sequence& inputs, int layer) const = 0;
};

// Depth-0 encoder: only the identity layer. Stands in when just V_0 is known.
class IdentityEncoder final : public LayerEncoder {
 public:
  explicit IdentityEncoder(std::size_t dim) : dim_(dim) {}

  int depth() const override { return 0; }
  std::size_t dim() const override { return dim_; }
  std::string describe() const override { return "identity"; }

 protected:
  Sequence run_layer(const Sequence& inputs, int) const override { return inputs; }

 private:
  std::size_t dim_;
};

struct ToyEncoderOptions {
  std::uint64_t seed = 0;
  int depth = 1;
  std::size_t dim = 0;
  bool nonlinear = true;
  // Weight of the running (causal) mean mixed into each position.
  double causal_mix = 0.5;

  // nonlinear = false and causal_mix = 0: every layer is a per-position affine
  // map, so averaging commutes with the encoder.
  static ToyEncoderOptions linear(std::uint64_t seed, int depth, std::size_t dim);
};

// Seeded stack of layers. Layer l maps each position i as
//   u_i = (1 - mix) * x_i + mix * mean(x_0..x_i)
//   y_i = act(W_l u_i + b_l)
// with act = tanh, or the identity for the linear variant.
class ToyEncoder final : public LayerEncoder {
 public:
  explicit ToyEncoder(ToyEncoderOptions opts);

  int depth() const override { return opts_.depth; }
  std::size_t dim() const override { return opts_.dim; }
  std::string describe() const override;
  const ToyEncoderOptions& options() const noexcept { return opts_; }
  // Parameters of layer `layer`, 1-based.
  const Eigen::MatrixXd& weight(int layer) const { return weights_.at(static_cast<std::size_t>(layer - 1)); }
  const Vector& bias(int layer) const { return biases_.at(static_cast<std::size_t>(layer - 1)); }

 protected:
  Sequence run_layer(const Sequence& inputs, int layer) const override;

 private:
  ToyEncoderOptions opts_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Vector> biases_;
};

// Mean of the encoder outputs at `layer`. Throws on an empty sequence.
Vector pooled_hidden(const LayerEncoder& enc, const Sequence& embeddings, int layer);

// Row t is encode_to_layer([v0 row t], layer). Layer 0 copies v0.
HiddenMatrix build_reference(const LayerEncoder& enc, const EmbeddingMatrix& v0, int layer,
                             Parallelism par = {});

// ---------------------------------------------------------------------------
// Derivation strategies
// ---------------------------------------------------------------------------

enum class DistanceMetric { euclidean, cosine };

struct Neighbor {
  std::size_t index;
  double distance;
};

// The k rows closest to `query`, nearest first (ties: lower index). Exact scan.
std::vector<Neighbor> nearest_rows(const Vector& query, const EmbeddingMatrix& rows, std::size_t k,
                                   DistanceMetric metric = DistanceMetric::euclidean);

// Inverse-distance weighted mean of the v0 rows of the k nearest vl rows. If
// any selected neighbor is at distance 0, the unweighted mean of those
// zero-distance neighbors is returned instead.
Vector derive_knn(const Vector& h, const EmbeddingMatrix& v0, const HiddenMatrix& vl, std::size_t k,
                  DistanceMetric metric = DistanceMetric::euclidean);

inline constexpr double kDefaultRidge = 1e-8;

// x -> W^T [x; 1], fitted by ridge-regularized least squares.
class AffineMap {
 public:
  AffineMap() = default;
  explicit AffineMap(Eigen::MatrixXd coefficients) : coef_(std::move(coefficients)) {}

  Vector apply(const Vector& x) const;
  const Eigen::MatrixXd& coefficients() const noexcept { return coef_; }

 private:
  Eigen::MatrixXd coef_;  // (in_dim + 1) x out_dim, bias in the last row
};

// Affine map from `inputs` rows to `targets` rows minimizing squared error,
// via (X^T X + ridge I) W = X^T Y with X = [inputs, 1].
AffineMap fit_affine(const EmbeddingMatrix& inputs, const EmbeddingMatrix& targets,
                     double ridge = kDefaultRidge);

// Affine fit from vl to v0, applied to h. Refits on every call; use
// EmbeddingDeriver to reuse the fit across queries.
Vector derive_linreg(const Vector& h, const EmbeddingMatrix& v0, const HiddenMatrix& vl,
                     double ridge = kDefaultRidge);

// Weighted affine ridge fit over the k nearest vl rows with weights
// exp(-d_i), applied to h. Weights are shifted by the nearest distance
// (exp(-(d_i - d_min))) to avoid underflow; the fit only sees their ratios.
// Solved in dual form when k <= dim.
Vector derive_local_linreg(const Vector& h, const EmbeddingMatrix& v0, const HiddenMatrix& vl,
                           std::size_t k, double ridge = kDefaultRidge,
                           DistanceMetric metric = DistanceMetric::euclidean);

// Weighted ridge regression prediction from sample rows `x` (n x d) to `y`
// (n x m) with an implicit bias column, evaluated at `query`.
Vector weighted_ridge_predict(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              const Vector& weights, const Vector& query, double ridge);

enum class StrategyKind { knn, linreg, local_linreg };

struct DerivationStrategy {
  StrategyKind kind = StrategyKind::linreg;
  std::size_t k = 0;  // neighbors, unused by linreg
  int layer = 0;
  DistanceMetric distance = DistanceMetric::euclidean;
  double ridge = kDefaultRidge;

  // Throws InvalidArgument when k is invalid for the kind.
  void validate() const;

  // "knn:3", "linreg", "local_linreg:5"
  std::string label() const;
  static DerivationStrategy parse(std::string_view spec, int layer);
};

std::string_view strategy_kind_name(StrategyKind k);
std::string_view distance_name(DistanceMetric m);
DistanceMetric parse_distance(std::string_view name);

// Predicts input embeddings from pooled hidden vectors with one strategy.
// The global affine fit is computed once at construction.
class EmbeddingDeriver {
 public:
  EmbeddingDeriver(const EmbeddingMatrix& v0, const HiddenMatrix& vl, DerivationStrategy strategy);

  Vector predict(const Vector& h) const;
  const DerivationStrategy& strategy() const noexcept { return strategy_; }

 private:
  const EmbeddingMatrix& v0_;
  const HiddenMatrix& vl_;
  DerivationStrategy strategy_;
  AffineMap fit_;
};

}  // namespace tokenlens
