#include "tokenlens/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "tokenlens/error.hpp"

namespace tokenlens {

EmbeddingMatrix::EmbeddingMatrix(FloatRows data) : data_(std::move(data)) {
  if (data_.cols() == 0) throw InvalidArgument("embedding dimension must be positive");
  if (!data_.allFinite()) throw InvalidArgument("embedding matrix has non-finite entries");
}

EmbeddingMatrix EmbeddingMatrix::random(std::size_t n_tokens, std::size_t dim, std::uint64_t seed,
                                        double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  FloatRows data(n_tokens, dim);
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index j = 0; j < data.cols(); ++j) data(i, j) = static_cast<float>(normal(rng));
  return EmbeddingMatrix(std::move(data));
}

Vector EmbeddingMatrix::row(std::size_t i) const {
  if (i >= n_tokens()) throw InvalidArgument("row " + std::to_string(i) + " out of range");
  return data_.row(static_cast<Eigen::Index>(i)).cast<double>().transpose();
}

Sequence EmbeddingMatrix::gather(std::span<const TokenId> ids) const {
  Sequence out(static_cast<Eigen::Index>(ids.size()), data_.cols());
  for (std::size_t p = 0; p < ids.size(); ++p) {
    if (ids[p] >= n_tokens())
      throw InvalidArgument("token id " + std::to_string(ids[p]) + " has no embedding row (" +
                            std::to_string(n_tokens()) + " rows)");
    out.row(static_cast<Eigen::Index>(p)) = data_.row(ids[p]).cast<double>();
  }
  return out;
}

Sequence LayerEncoder::encode_to_layer(const Sequence& inputs, int layer) const {
  if (layer < 0 || layer > depth())
    throw InvalidArgument("layer " + std::to_string(layer) + " outside encoder depth " +
                          std::to_string(depth()));
  if (static_cast<std::size_t>(inputs.cols()) != dim())
    throw InvalidArgument("input width " + std::to_string(inputs.cols()) +
                          " does not match encoder dimension " + std::to_string(dim()));
  if (layer == 0) return inputs;
  return run_layer(inputs, layer);
}

ToyEncoderOptions ToyEncoderOptions::linear(std::uint64_t seed, int depth, std::size_t dim) {
  ToyEncoderOptions o;
  o.seed = seed;
  o.depth = depth;
  o.dim = dim;
  o.nonlinear = false;
  o.causal_mix = 0.0;
  return o;
}

ToyEncoder::ToyEncoder(ToyEncoderOptions opts) : opts_(opts) {
  if (opts_.depth < 1) throw InvalidArgument("toy encoder depth must be at least 1");
  if (opts_.dim < 1) throw InvalidArgument("toy encoder dimension must be positive");
  if (!(opts_.causal_mix >= 0.0 && opts_.causal_mix <= 1.0))
    throw InvalidArgument("causal mix must lie in [0, 1]");
  std::mt19937_64 rng(opts_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(opts_.dim);
  const double spread = 0.5 / std::sqrt(static_cast<double>(opts_.dim));
  for (int l = 0; l < opts_.depth; ++l) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) w(i, j) += spread * normal(rng);
    Vector b(d);
    for (Eigen::Index i = 0; i < d; ++i) b(i) = 0.1 * normal(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

std::string ToyEncoder::describe() const {
  std::ostringstream os;
  os << "toy:" << opts_.seed << ":" << opts_.depth << (opts_.nonlinear ? "" : ":linear")
     << " (dim " << opts_.dim << ", causal_mix " << opts_.causal_mix << ")";
  return os.str();
}

Sequence ToyEncoder::run_layer(const Sequence& inputs, int layer) const {
  Sequence x = inputs;
  const Eigen::Index n = x.rows();
  for (int l = 0; l < layer; ++l) {
    Sequence mixed(n, x.cols());
    Vector running = Vector::Zero(x.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      running += x.row(i).transpose();
      const Vector prefix_mean = running / static_cast<double>(i + 1);
      mixed.row(i) = ((1.0 - opts_.causal_mix) * x.row(i).transpose() + opts_.causal_mix * prefix_mean)
                         .transpose();
    }
    Sequence y = (mixed * weights_[l].transpose()).rowwise() + biases_[l].transpose();
    if (opts_.nonlinear) y = y.array().tanh().matrix();
    x = std::move(y);
  }
  return x;
}

Vector pooled_hidden(const LayerEncoder& enc, const Sequence& embeddings, int layer) {
  if (embeddings.rows() == 0) throw InvalidArgument("cannot pool an empty sequence");
  const Sequence hidden = enc.encode_to_layer(embeddings, layer);
  Vector sum = Vector::Zero(hidden.cols());
  for (Eigen::Index i = 0; i < hidden.rows(); ++i) sum += hidden.row(i).transpose();
  return sum / static_cast<double>(hidden.rows());
}

HiddenMatrix build_reference(const LayerEncoder& enc, const EmbeddingMatrix& v0, int layer,
                             Parallelism par) {
  if (layer < 0 || layer > enc.depth())
    throw InvalidArgument("layer " + std::to_string(layer) + " outside encoder depth " +
                          std::to_string(enc.depth()));
  if (layer == 0) return {0, v0};
  FloatRows out(v0.n_tokens(), v0.dim());
  parallel_for(v0.n_tokens(), par, [&](std::size_t t) {
    const TokenId id[] = {static_cast<TokenId>(t)};
    const Sequence h = enc.encode_to_layer(v0.gather(id), layer);
    out.row(static_cast<Eigen::Index>(t)) = h.row(0).cast<float>();
  });
  return {layer, EmbeddingMatrix(std::move(out))};
}

// ---------------------------------------------------------------------------

std::vector<Neighbor> nearest_rows(const Vector& query, const EmbeddingMatrix& rows, std::size_t k,
                                   DistanceMetric metric) {
  if (k < 1 || k > rows.n_tokens())
    throw InvalidArgument("k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(rows.n_tokens()) + "]");
  if (static_cast<std::size_t>(query.size()) != rows.dim())
    throw InvalidArgument("query dimension does not match the reference matrix");
  const double qnorm = query.norm();
  std::vector<Neighbor> all(rows.n_tokens());
  for (std::size_t i = 0; i < rows.n_tokens(); ++i) {
    const Vector r = rows.data().row(static_cast<Eigen::Index>(i)).cast<double>().transpose();
    double d;
    if (metric == DistanceMetric::euclidean) {
      d = (r - query).norm();
    } else {
      const double denom = r.norm() * qnorm;
      d = denom == 0.0 ? 1.0 : std::max(0.0, 1.0 - r.dot(query) / denom);
    }
    all[i] = {i, d};
  }
  const auto closer = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
  all.resize(k);
  return all;
}

Vector derive_knn(const Vector& h, const EmbeddingMatrix& v0, const HiddenMatrix& vl, std::size_t k,
                  DistanceMetric metric) {
  if (v0.n_tokens() != vl.rows.n_tokens())
    throw InvalidArgument("V0 and V_l row counts differ");
  const std::vector<Neighbor> nn = nearest_rows(h, vl.rows, k, metric);
  Vector exact = Vector::Zero(v0.dim());
  std::size_t n_exact = 0;
  for (const Neighbor& n : nn)
    if (n.distance == 0.0) {
      exact += v0.row(n.index);
      ++n_exact;
    }
  if (n_exact > 0) return exact / static_cast<double>(n_exact);
  Vector sum = Vector::Zero(v0.dim());
  double total = 0.0;
  for (const Neighbor& n : nn) {
    const double w = 1.0 / n.distance;
    sum += w * v0.row(n.index);
    total += w;
  }
  return sum / total;
}

Vector AffineMap::apply(const Vector& x) const {
  if (x.size() + 1 != coef_.rows()) throw InvalidArgument("affine map input dimension mismatch");
  return coef_.topRows(x.size()).transpose() * x + coef_.row(coef_.rows() - 1).transpose();
}

AffineMap fit_affine(const EmbeddingMatrix& inputs, const EmbeddingMatrix& targets, double ridge) {
  if (inputs.n_tokens() != targets.n_tokens())
    throw InvalidArgument("affine fit needs row-aligned matrices");
  if (inputs.n_tokens() == 0) throw InvalidArgument("affine fit on zero rows");
  const auto din = static_cast<Eigen::Index>(inputs.dim());
  const auto dout = static_cast<Eigen::Index>(targets.dim());
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(din + 1, din + 1);
  Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(din + 1, dout);
  constexpr Eigen::Index kChunk = 4096;
  const auto n = static_cast<Eigen::Index>(inputs.n_tokens());
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, n - start);
    Eigen::MatrixXd x(len, din + 1);
    x.leftCols(din) = inputs.data().middleRows(start, len).cast<double>();
    x.col(din).setOnes();
    const Eigen::MatrixXd y = targets.data().middleRows(start, len).cast<double>();
    xtx.noalias() += x.transpose() * x;
    xty.noalias() += x.transpose() * y;
  }
  xtx.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> solver(xtx);
  if (solver.info() != Eigen::Success) throw Error("affine fit: normal equations are singular");
  return AffineMap(solver.solve(xty));
}

Vector derive_linreg(const Vector& h, const EmbeddingMatrix& v0, const HiddenMatrix& vl, double ridge) {
  if (!h.allFinite()) throw InvalidArgument("query has non-finite entries");
  return fit_affine(vl.rows, v0, ridge).apply(h);
}

Vector weighted_ridge_predict(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              const Vector& weights, const Vector& query, double ridge) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (y.rows() != n || weights.size() != n || query.size() != d)
    throw InvalidArgument("weighted regression: inconsistent shapes");
  if ((weights.array() < 0.0).any()) throw InvalidArgument("weighted regression: negative weight");
  Eigen::MatrixXd xa(n, d + 1);
  xa.leftCols(d) = x;
  xa.col(d).setOnes();
  Vector qa(d + 1);
  qa.head(d) = query;
  qa(d) = 1.0;

  if (n > d + 1) {
    const Eigen::MatrixXd xw = weights.asDiagonal() * xa;
    Eigen::MatrixXd a = xa.transpose() * xw;
    a.diagonal().array() += ridge;
    const Eigen::MatrixXd coef = Eigen::LDLT<Eigen::MatrixXd>(a).solve(xw.transpose() * y);
    return coef.transpose() * qa;
  }
  // Dual form: W = Z^T (Z Z^T + ridge I)^-1 S Y with Z = S Xa, S = sqrt(weights).
  const Vector s = weights.array().sqrt();
  const Eigen::MatrixXd z = s.asDiagonal() * xa;
  Eigen::MatrixXd k = z * z.transpose();
  k.diagonal().array() += ridge;
  const Eigen::MatrixXd alpha = Eigen::LDLT<Eigen::MatrixXd>(k).solve(s.asDiagonal() * y);
  return alpha.transpose() * (z * qa);
}

Vector derive_local_linreg(const Vector& h, const EmbeddingMatrix& v0, const HiddenMatrix& vl,
                           std::size_t k, double ridge, DistanceMetric metric) {
  if (k < 2) throw InvalidArgument("local linear regression needs k >= 2");
  if (v0.n_tokens() != vl.rows.n_tokens())
    throw InvalidArgument("V0 and V_l row counts differ");
  const std::vector<Neighbor> nn = nearest_rows(h, vl.rows, k, metric);
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd x(kk, static_cast<Eigen::Index>(vl.rows.dim()));
  Eigen::MatrixXd y(kk, static_cast<Eigen::Index>(v0.dim()));
  Vector w(kk);
  const double nearest = nn.front().distance;
  for (Eigen::Index i = 0; i < kk; ++i) {
    x.row(i) = vl.rows.row(nn[i].index).transpose();
    y.row(i) = v0.row(nn[i].index).transpose();
    w(i) = std::exp(-(nn[i].distance - nearest));
  }
  return weighted_ridge_predict(x, y, w, h, ridge);
}

// ---------------------------------------------------------------------------

std::string_view strategy_kind_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::knn:
      return "knn";
    case StrategyKind::linreg:
      return "linreg";
    case StrategyKind::local_linreg:
      return "local_linreg";
  }
  return "?";
}

std::string_view distance_name(DistanceMetric m) {
  return m == DistanceMetric::euclidean ? "euclidean" : "cosine";
}

DistanceMetric parse_distance(std::string_view name) {
  if (name == "euclidean") return DistanceMetric::euclidean;
  if (name == "cosine") return DistanceMetric::cosine;
  throw InvalidArgument("unknown distance metric \"" + std::string(name) + "\"");
}

void DerivationStrategy::validate() const {
  if (layer < 0) throw InvalidArgument("layer must be non-negative");
  if (kind == StrategyKind::knn && k < 1) throw InvalidArgument("knn needs k >= 1");
  if (kind == StrategyKind::local_linreg && k < 2)
    throw InvalidArgument("local_linreg needs k >= 2");
  if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be non-negative");
}

std::string DerivationStrategy::label() const {
  std::string out(strategy_kind_name(kind));
  if (kind != StrategyKind::linreg) out += ":" + std::to_string(k);
  return out;
}

DerivationStrategy DerivationStrategy::parse(std::string_view spec, int layer) {
  DerivationStrategy s;
  s.layer = layer;
  const auto colon = spec.find(':');
  const std::string_view kind = spec.substr(0, colon);
  if (kind == "knn") {
    s.kind = StrategyKind::knn;
  } else if (kind == "linreg") {
    s.kind = StrategyKind::linreg;
  } else if (kind == "local_linreg" || kind == "local") {
    s.kind = StrategyKind::local_linreg;
  } else {
    throw InvalidArgument("unknown strategy \"" + std::string(spec) + "\"");
  }
  if (colon != std::string_view::npos) {
    if (s.kind == StrategyKind::linreg) throw InvalidArgument("linreg takes no k");
    const std::string digits(spec.substr(colon + 1));
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw InvalidArgument("invalid k in strategy \"" + std::string(spec) + "\"");
    s.k = std::stoul(digits);
  } else if (s.kind != StrategyKind::linreg) {
    throw InvalidArgument("strategy \"" + std::string(spec) + "\" needs a k, e.g. knn:3");
  }
  s.validate();
  return s;
}

EmbeddingDeriver::EmbeddingDeriver(const EmbeddingMatrix& v0, const HiddenMatrix& vl,
                                   DerivationStrategy strategy)
    : v0_(v0), vl_(vl), strategy_(strategy) {
  strategy_.validate();
  if (v0.n_tokens() != vl.rows.n_tokens()) throw InvalidArgument("V0 and V_l row counts differ");
  if (strategy_.kind != StrategyKind::linreg && strategy_.k > v0.n_tokens())
    throw InvalidArgument("k = " + std::to_string(strategy_.k) + " exceeds the " +
                          std::to_string(v0.n_tokens()) + " reference rows");
  if (strategy_.kind == StrategyKind::linreg) fit_ = fit_affine(vl.rows, v0, strategy_.ridge);
}

Vector EmbeddingDeriver::predict(const Vector& h) const {
  if (!h.allFinite()) throw InvalidArgument("query has non-finite entries");
  switch (strategy_.kind) {
    case StrategyKind::knn:
      return derive_knn(h, v0_, vl_, strategy_.k, strategy_.distance);
    case StrategyKind::linreg:
      return fit_.apply(h);
    case StrategyKind::local_linreg:
      return derive_local_linreg(h, v0_, vl_, strategy_.k, strategy_.ridge, strategy_.distance);
  }
  throw Error("unreachable strategy kind");
}

}  // namespace tokenlens
