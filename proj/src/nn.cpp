#include "robotack/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "robotack/rng.hpp"

namespace robotack::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Mlp Mlp::zeros(const std::vector<int>& dims) {
  if (dims.size() < 2 || dims.front() != 4 || dims.back() != 1)
    throw ConfigError("mlp: layer_dims must start at 4 and end at 1");
  Mlp m;
  m.layer_dims = dims;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    m.weights.push_back(MatrixXd::Zero(dims[l], dims[l - 1]));
    m.biases.push_back(VectorXd::Zero(dims[l]));
  }
  return m;
}

Mlp Mlp::random(const std::vector<int>& dims, std::uint64_t seed) {
  Mlp m = zeros(dims);
  Rng rng = make_stream(seed, Stream::Training);
  for (auto& W : m.weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(W.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = u(rng);
  }
  return m;
}

void Mlp::check_shapes() const {
  if (layer_dims.size() < 2) throw ConfigError("mlp: need at least two layer dims");
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size())
    throw ConfigError("mlp: layer count does not match layer_dims");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1])
      throw ConfigError("mlp: shape mismatch at layer " + std::to_string(l));
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

namespace {

VectorXd normalize_input(const Mlp& m, const Features& in) {
  VectorXd x(4);
  for (int i = 0; i < 4; ++i) x(i) = (in[i] - m.norm.input_mean[i]) / m.norm.input_std[i];
  return x;
}

// Forward pass over a batch (columns). Stores pre-activations and
// activations when requested; masks apply inverted dropout to hidden layers.
MatrixXd forward_batch(const Mlp& m, const MatrixXd& X, std::vector<MatrixXd>* zs, std::vector<MatrixXd>* as,
                       const std::vector<MatrixXd>* masks) {
  MatrixXd a = X;
  if (as) as->assign(1, X);
  if (zs) zs->clear();
  const std::size_t L = m.weights.size();
  for (std::size_t l = 0; l < L; ++l) {
    MatrixXd z = (m.weights[l] * a).colwise() + m.biases[l];
    if (zs) zs->push_back(z);
    if (l + 1 < L) {
      a = z.cwiseMax(0.0);
      if (masks) a = a.cwiseProduct((*masks)[l]);
    } else {
      a = z;
    }
    if (as) as->push_back(a);
  }
  return a;
}

struct Grads {
  std::vector<MatrixXd> dW;
  std::vector<VectorXd> db;
};

// Gradients of sum_j c_j * y_j given dL/dy = dy (1 x B).
Grads backward(const Mlp& m, const MatrixXd& dy, const std::vector<MatrixXd>& zs, const std::vector<MatrixXd>& as,
               const std::vector<MatrixXd>* masks) {
  const std::size_t L = m.weights.size();
  Grads g;
  g.dW.resize(L);
  g.db.resize(L);
  MatrixXd delta = dy;
  for (std::size_t l = L; l-- > 0;) {
    g.dW[l] = delta * as[l].transpose();
    g.db[l] = delta.rowwise().sum();
    if (l > 0) {
      MatrixXd back = m.weights[l].transpose() * delta;
      const MatrixXd relu_grad = (zs[l - 1].array() > 0.0).cast<double>().matrix();
      back = back.cwiseProduct(relu_grad);
      if (masks) back = back.cwiseProduct((*masks)[l - 1]);
      delta = back;
    }
  }
  return g;
}

double mse(const Mlp& m, const MatrixXd& X, const VectorXd& y) {
  if (X.cols() == 0) return 0.0;
  const MatrixXd out = forward_batch(m, X, nullptr, nullptr, nullptr);
  return (out.row(0).transpose() - y).squaredNorm() / static_cast<double>(X.cols());
}

}  // namespace

double forward_normalized(const Mlp& mlp, const VectorXd& x) {
  if (x.size() != mlp.layer_dims.front()) throw ConfigError("mlp: input size mismatch");
  return forward_batch(mlp, x, nullptr, nullptr, nullptr)(0, 0);
}

double forward(const Mlp& mlp, const Features& input) {
  return forward_normalized(mlp, normalize_input(mlp, input)) * mlp.norm.output_std + mlp.norm.output_mean;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> ShDataset::split(double train_fraction,
                                                                               std::uint64_t seed) const {
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_stream(seed ^ 0x5eedull, Stream::Training);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
  std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> va(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return {tr, va};
}

void write_dataset(std::ostream& out, const ShDataset& ds) {
  out << "delta_t,v_rel,a_rel,k,label\n" << std::setprecision(17);
  for (const auto& r : ds.rows) out << r.delta_t << ',' << r.v_rel << ',' << r.a_rel << ',' << r.k << ',' << r.label << '\n';
}

void write_dataset(const std::filesystem::path& path, const ShDataset& ds) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write dataset: " + path.string());
  write_dataset(out, ds);
}

ShDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("delta_t,v_rel,a_rel,k,label", 0) != 0)
    throw ConfigError("dataset: missing header");
  ShDataset ds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    ShRow r;
    char c1, c2, c3, c4;
    if (!(ss >> r.delta_t >> c1 >> r.v_rel >> c2 >> r.a_rel >> c3 >> r.k >> c4 >> r.label) || r.k < 0)
      throw ConfigError("dataset: bad row: " + line);
    ds.rows.push_back(r);
  }
  return ds;
}

ShDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset: " + path.string());
  return read_dataset(in);
}

double mean_abs_error(const Mlp& mlp, const ShDataset& ds, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  double s = 0.0;
  for (auto i : idx) s += std::abs(forward(mlp, ds.rows[i].features()) - ds.rows[i].label);
  return s / static_cast<double>(idx.size());
}

TrainResult train(const ShDataset& ds, const TrainConfig& cfg, AttackVector tag, ObjectClass cls) {
  if (!(cfg.lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (cfg.batch_size < 1) throw ConfigError("train: batch size must be positive");
  TrainResult res;
  std::tie(res.train_idx, res.val_idx) = ds.split(cfg.train_fraction, cfg.seed);
  if (res.train_idx.empty()) throw RuntimeFailure("train: empty training split");

  Mlp m = Mlp::random(cfg.layer_dims, cfg.seed);
  m.dropout_rate = cfg.dropout_rate;
  m.attack_vector = tag;
  m.target_class = cls;

  // z-score statistics from the training split only.
  const double n = static_cast<double>(res.train_idx.size());
  for (int f = 0; f < 4; ++f) {
    double mean = 0.0, sq = 0.0;
    for (auto i : res.train_idx) mean += ds.rows[i].features()[f];
    mean /= n;
    for (auto i : res.train_idx) sq += std::pow(ds.rows[i].features()[f] - mean, 2);
    const double sd = std::sqrt(sq / n);
    m.norm.input_mean[f] = mean;
    m.norm.input_std[f] = sd > 1e-12 ? sd : 1.0;
  }
  {
    double mean = 0.0, sq = 0.0;
    for (auto i : res.train_idx) mean += ds.rows[i].label;
    mean /= n;
    for (auto i : res.train_idx) sq += std::pow(ds.rows[i].label - mean, 2);
    const double sd = std::sqrt(sq / n);
    m.norm.output_mean = mean;
    m.norm.output_std = sd > 1e-12 ? sd : 1.0;
  }

  const auto pack = [&](const std::vector<std::size_t>& idx, MatrixXd& X, VectorXd& y) {
    X.resize(4, static_cast<Eigen::Index>(idx.size()));
    y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      X.col(static_cast<Eigen::Index>(j)) = normalize_input(m, ds.rows[idx[j]].features());
      y(static_cast<Eigen::Index>(j)) = (ds.rows[idx[j]].label - m.norm.output_mean) / m.norm.output_std;
    }
  };
  MatrixXd Xtr, Xva;
  VectorXd ytr, yva;
  pack(res.train_idx, Xtr, ytr);
  pack(res.val_idx, Xva, yva);

  const std::size_t L = m.weights.size();
  std::vector<MatrixXd> mW(L), vW(L);
  std::vector<VectorXd> mb(L), vb(L);
  for (std::size_t l = 0; l < L; ++l) {
    mW[l] = vW[l] = MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols());
    mb[l] = vb[l] = VectorXd::Zero(m.biases[l].size());
  }

  Rng rng = make_stream(cfg.seed, Stream::Training);
  std::bernoulli_distribution keep(1.0 - cfg.dropout_rate);
  const double keep_scale = cfg.dropout_rate < 1.0 ? 1.0 / (1.0 - cfg.dropout_rate) : 0.0;
  std::vector<std::size_t> order(res.train_idx.size());
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  double best_val = std::numeric_limits<double>::infinity();
  Mlp best = m;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto B = static_cast<Eigen::Index>(end - start);
      MatrixXd X(4, B);
      VectorXd y(B);
      for (Eigen::Index j = 0; j < B; ++j) {
        X.col(j) = Xtr.col(static_cast<Eigen::Index>(order[start + j]));
        y(j) = ytr(static_cast<Eigen::Index>(order[start + j]));
      }
      std::vector<MatrixXd> masks;
      for (std::size_t l = 0; l + 1 < L; ++l) {
        MatrixXd mask(m.weights[l].rows(), B);
        for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? keep_scale : 0.0;
        masks.push_back(std::move(mask));
      }
      std::vector<MatrixXd> zs, as;
      const MatrixXd out = forward_batch(m, X, &zs, &as, &masks);
      const MatrixXd dy = 2.0 * (out.row(0) - y.transpose()) / static_cast<double>(B);
      const Grads g = backward(m, dy, zs, as, &masks);

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < L; ++l) {
        mW[l] = cfg.beta1 * mW[l] + (1.0 - cfg.beta1) * g.dW[l];
        vW[l] = cfg.beta2 * vW[l] + (1.0 - cfg.beta2) * g.dW[l].cwiseAbs2();
        m.weights[l].array() -= cfg.lr * (mW[l].array() / c1) / ((vW[l].array() / c2).sqrt() + cfg.eps);
        mb[l] = cfg.beta1 * mb[l] + (1.0 - cfg.beta1) * g.db[l];
        vb[l] = cfg.beta2 * vb[l] + (1.0 - cfg.beta2) * g.db[l].cwiseAbs2();
        m.biases[l].array() -= cfg.lr * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + cfg.eps);
      }
    }

    const double tl = mse(m, Xtr, ytr);
    const double vl = Xva.cols() > 0 ? mse(m, Xva, yva) : tl;
    if (!std::isfinite(tl) || !std::isfinite(vl)) {
      std::ostringstream msg;
      msg << "train: non-finite loss at epoch " << epoch << " (train " << tl << ", val " << vl << ", lr " << cfg.lr
          << ")";
      throw RuntimeFailure(msg.str());
    }
    res.train_loss.push_back(tl);
    res.val_loss.push_back(vl);
    if (vl < best_val) {
      best_val = vl;
      best = m;
      res.best_epoch = epoch;
    } else if (cfg.patience > 0 && epoch - res.best_epoch > cfg.patience) {
      break;
    }
  }
  res.mlp = best;
  res.val_mae = mean_abs_error(res.mlp, ds, res.val_idx.empty() ? res.train_idx : res.val_idx);
  return res;
}

GradCheck grad_check(const Mlp& mlp, const VectorXd& input, double target, double h) {
  GradCheck out;
  std::vector<MatrixXd> zs, as;
  const MatrixXd y = forward_batch(mlp, input, &zs, &as, nullptr);
  for (std::size_t l = 0; l + 1 < zs.size(); ++l) {
    if (zs[l].cwiseAbs().minCoeff() < 10.0 * h) {
      out.at_kink = true;
      return out;
    }
  }
  MatrixXd dy(1, 1);
  dy(0, 0) = y(0, 0) - target;  // d/dy of 0.5 (y - t)^2
  const Grads g = backward(mlp, dy, zs, as, nullptr);

  Mlp probe = mlp;
  const auto loss = [&]() {
    const double v = forward_normalized(probe, input) - target;
    return 0.5 * v * v;
  };
  const auto compare = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double lp = loss();
    param = saved - h;
    const double lm = loss();
    param = saved;
    const double numeric = (lp - lm) / (2.0 * h);
    // Gradients below 1e-6 are compared on an absolute scale.
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
    ++out.checked;
  };
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < probe.weights[l].size(); ++i) compare(probe.weights[l].data()[i], g.dW[l].data()[i]);
    for (Eigen::Index i = 0; i < probe.biases[l].size(); ++i) compare(probe.biases[l](i), g.db[l](i));
  }
  return out;
}

std::string weights_to_json(const Mlp& mlp) {
  mlp.check_shapes();
  nlohmann::json j;
  j["schema"] = kWeightsSchema;
  j["attack_vector"] = std::string(to_string(mlp.attack_vector));
  j["target_class"] = std::string(to_string(mlp.target_class));
  j["layer_dims"] = mlp.layer_dims;
  j["dropout_rate"] = mlp.dropout_rate;
  j["normalization"] = {{"input_mean", mlp.norm.input_mean},
                        {"input_std", mlp.norm.input_std},
                        {"output_mean", mlp.norm.output_mean},
                        {"output_std", mlp.norm.output_std}};
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    const auto& W = mlp.weights[l];
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(W.size()));
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) flat.push_back(W(r, c));
    std::vector<double> b(mlp.biases[l].data(), mlp.biases[l].data() + mlp.biases[l].size());
    layers.push_back({{"rows", W.rows()}, {"cols", W.cols()}, {"w", flat}, {"b", b}});
  }
  j["weights"] = layers;
  return j.dump();
}

Mlp weights_from_json(const std::string& text, const std::vector<int>& expected_dims) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("weights: corrupt file: ") + e.what());
  }
  try {
    if (j.at("schema").get<int>() != kWeightsSchema)
      throw ConfigError("weights: unsupported schema " + j.at("schema").dump());
    Mlp m;
    m.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    if (!expected_dims.empty() && m.layer_dims != expected_dims)
      throw ConfigError("weights: layer_dims " + j.at("layer_dims").dump() + " do not match the expected shape");
    m.attack_vector = parse_attack_vector(j.at("attack_vector").get<std::string>());
    m.target_class = parse_object_class(j.value("target_class", std::string("Vehicle")));
    m.dropout_rate = j.value("dropout_rate", 0.1);
    const auto& nj = j.at("normalization");
    m.norm.input_mean = nj.at("input_mean").get<Features>();
    m.norm.input_std = nj.at("input_std").get<Features>();
    m.norm.output_mean = nj.at("output_mean").get<double>();
    m.norm.output_std = nj.at("output_std").get<double>();
    for (const auto& lj : j.at("weights")) {
      const auto rows = lj.at("rows").get<Eigen::Index>();
      const auto cols = lj.at("cols").get<Eigen::Index>();
      const auto flat = lj.at("w").get<std::vector<double>>();
      const auto b = lj.at("b").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(flat.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows)
        throw ConfigError("weights: layer payload does not match its declared shape");
      MatrixXd W(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) W(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
      m.weights.push_back(W);
      m.biases.push_back(Eigen::Map<const VectorXd>(b.data(), rows));
    }
    m.check_shapes();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("weights: corrupt file: ") + e.what());
  }
}

void save_weights(const Mlp& mlp, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write weights: " + path.string());
  out << weights_to_json(mlp);
}

Mlp load_weights(const std::filesystem::path& path, const std::vector<int>& expected_dims) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open weights: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return weights_from_json(ss.str(), expected_dims);
}

}  // namespace robotack::nn
