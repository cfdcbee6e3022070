#include "aatr/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "aatr/config.hpp"
#include "aatr/rng.hpp"

namespace aatr::cls {

namespace {

constexpr std::array<std::string_view, kNumClasses> kNames{"saline", "rubber", "clay", "others"};
constexpr const char* kModelSchema = "aatr.material_model/1";

double dot_scaled(const std::vector<double>& w, const FeatureVector& f, double scale) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s * scale;
}

Probabilities softmax(const std::array<double, kNumClasses>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  Probabilities p{};
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) sum += p[c] = std::exp(z[c] - m);
  for (double& v : p) v /= sum;
  return p;
}

struct BinaryProblem {
  const std::vector<FeatureVector>* x;
  std::vector<double> y;   // +1 / -1
  std::vector<double> cap; // per-sample upper bound C_i
  double scale;
};

/// Dual coordinate descent for the L1-loss linear SVM with an appended constant-1 feature.
std::pair<std::vector<double>, double> solve_binary(const BinaryProblem& prob, const std::vector<std::size_t>& rows,
                                                    const TrainParams& params, Rng& rng) {
  const auto& x = *prob.x;
  const std::size_t dim = x.front().size();
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  std::vector<double> alpha(rows.size(), 0.0), qii(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double n2 = 1.0;
    for (double v : x[rows[r]]) n2 += v * v * prob.scale * prob.scale;
    qii[r] = n2;
  }
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    rng.shuffle(order);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t r : order) {
      const std::size_t i = rows[r];
      const double yi = prob.y[i];
      const double g = yi * (dot_scaled(w, x[i], prob.scale) + b) - 1.0;
      double pg = g;
      if (alpha[r] <= 0.0)
        pg = std::min(g, 0.0);
      else if (alpha[r] >= prob.cap[i])
        pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0.0) continue;
      const double old = alpha[r];
      alpha[r] = std::clamp(old - g / qii[r], 0.0, prob.cap[i]);
      const double delta = (alpha[r] - old) * yi;
      if (delta == 0.0) continue;
      for (std::size_t k = 0; k < dim; ++k) w[k] += delta * x[i][k] * prob.scale;
      b += delta;
    }
    if (pg_max - pg_min < params.tolerance) break;
  }
  return {std::move(w), b};
}

struct LinearOvr {
  std::array<std::vector<double>, kNumClasses> w;
  std::array<double, kNumClasses> b{};
};

LinearOvr fit_ovr(const std::vector<FeatureVector>& x, const std::vector<MaterialClass>& y,
                  const std::vector<std::size_t>& rows, const TrainParams& params, std::uint64_t seed) {
  std::array<std::size_t, kNumClasses> counts{};
  for (std::size_t r : rows) ++counts[static_cast<std::size_t>(y[r])];
  std::size_t present = 0;
  for (auto n : counts) present += n > 0;
  LinearOvr out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    BinaryProblem prob{&x, std::vector<double>(x.size(), -1.0), std::vector<double>(x.size(), params.c),
                       params.feature_scale};
    for (std::size_t r : rows) {
      const auto k = static_cast<std::size_t>(y[r]);
      prob.y[r] = k == c ? 1.0 : -1.0;
      if (params.balance_classes)
        prob.cap[r] = params.c * static_cast<double>(rows.size()) / (static_cast<double>(present) * counts[k]);
    }
    if (counts[c] == 0) {
      out.w[c].assign(x.front().size(), 0.0);
      out.b[c] = -1.0;
      continue;
    }
    Rng rng(derive_seed(seed, c));
    auto [w, b] = solve_binary(prob, rows, params, rng);
    out.w[c] = std::move(w);
    out.b[c] = b;
  }
  return out;
}

std::array<double, kNumClasses> decide(const LinearOvr& m, const FeatureVector& f, double scale) {
  std::array<double, kNumClasses> s{};
  for (std::size_t c = 0; c < kNumClasses; ++c) s[c] = dot_scaled(m.w[c], f, scale) + m.b[c];
  return s;
}

double calibration_loss(const std::vector<std::array<double, kNumClasses>>& s, const std::vector<MaterialClass>& y,
                        const Eigen::VectorXd& theta, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::array<double, kNumClasses> z{};
    for (std::size_t c = 0; c < kNumClasses; ++c) z[c] = theta[c] * s[i][c] + theta[kNumClasses + c];
    const double m = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - m);
    loss += m + std::log(lse) - z[static_cast<std::size_t>(y[i])];
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double da = theta[c] - 1.0;
    const double db = theta[kNumClasses + c];
    loss += 0.5 * l2 * static_cast<double>(s.size()) * (da * da + db * db);
  }
  return loss;
}

/// Newton's method on the multinomial log-loss of (scale, offset) per class.
void fit_calibration(const std::vector<std::array<double, kNumClasses>>& s, const std::vector<MaterialClass>& y,
                     double l2, std::array<double, kNumClasses>& scale, std::array<double, kNumClasses>& offset) {
  constexpr int n = 2 * kNumClasses;
  Eigen::VectorXd theta(n);
  for (std::size_t c = 0; c < kNumClasses; ++c) theta[c] = 1.0, theta[kNumClasses + c] = 0.0;
  const double reg = l2 * static_cast<double>(s.size());
  double loss = calibration_loss(s, y, theta, l2);
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::array<double, kNumClasses> z{};
      for (std::size_t c = 0; c < kNumClasses; ++c) z[c] = theta[c] * s[i][c] + theta[kNumClasses + c];
      const Probabilities p = softmax(z);
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double r = p[c] - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0);
        g[c] += r * s[i][c];
        g[kNumClasses + c] += r;
        for (std::size_t d = 0; d < kNumClasses; ++d) {
          const double wcd = p[c] * ((c == d ? 1.0 : 0.0) - p[d]);
          h(c, d) += wcd * s[i][c] * s[i][d];
          h(c, kNumClasses + d) += wcd * s[i][c];
          h(kNumClasses + c, d) += wcd * s[i][d];
          h(kNumClasses + c, kNumClasses + d) += wcd;
        }
      }
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      g[c] += reg * (theta[c] - 1.0);
      g[kNumClasses + c] += reg * theta[kNumClasses + c];
    }
    h.diagonal().array() += reg;
    const Eigen::VectorXd step = h.ldlt().solve(g);
    double t = 1.0;
    Eigen::VectorXd next = theta - step;
    double next_loss = calibration_loss(s, y, next, l2);
    while (next_loss > loss && t > 1e-8) {
      t *= 0.5;
      next = theta - t * step;
      next_loss = calibration_loss(s, y, next, l2);
    }
    if (next_loss > loss) break;
    const double gain = loss - next_loss;
    theta = next;
    loss = next_loss;
    if (gain < 1e-10 * (1.0 + loss)) break;
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) scale[c] = theta[c], offset[c] = theta[kNumClasses + c];
}

}  // namespace

std::string_view to_string(MaterialClass c) { return kNames[static_cast<std::size_t>(c)]; }

bool try_class_from_string(std::string_view name, MaterialClass& out) {
  for (std::size_t c = 0; c < kNumClasses; ++c)
    if (kNames[c] == name) {
      out = static_cast<MaterialClass>(c);
      return true;
    }
  return false;
}

MaterialClass class_from_string(std::string_view name) {
  MaterialClass c{};
  if (!try_class_from_string(name, c)) fail(ErrorKind::Config, "unknown material class '" + std::string(name) + "'");
  return c;
}

void FeatureConfig::validate() const {
  if (bins < 1) fail(ErrorKind::Config, "feature bins must be >= 1");
  if (!(hi_mhu > lo_mhu)) fail(ErrorKind::Config, "feature range must satisfy lo < hi");
}

int FeatureConfig::bin_of(double mhu) const {
  const int b = static_cast<int>(std::floor((mhu - lo_mhu) / bin_width()));
  return std::clamp(b, 0, bins - 1);
}

FeatureVector normalize_counts(std::vector<double> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total > 0.0)
    for (double& v : counts) v /= total;
  return counts;
}

std::vector<FeatureVector> extract_features(const RawVolume& raw, const LabelVolume& labels, const FeatureConfig& cfg) {
  require_same_frame(raw, labels, "extract_features");
  cfg.validate();
  const std::uint32_t n = max_label(labels);
  std::vector<std::vector<double>> counts(n + 1);
  std::vector<int> lut(static_cast<std::size_t>(kMaxMhu) + 1);
  for (std::size_t v = 0; v < lut.size(); ++v) lut[v] = cfg.bin_of(static_cast<double>(v));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = labels[i];
    if (!l) continue;
    auto& h = counts[l];
    if (h.empty()) h.assign(static_cast<std::size_t>(cfg.bins), 0.0);
    h[static_cast<std::size_t>(lut[std::min<std::size_t>(raw[i], kMaxMhu)])] += 1.0;
  }
  std::vector<FeatureVector> out(n + 1);
  for (std::uint32_t l = 1; l <= n; ++l)
    if (!counts[l].empty()) out[l] = normalize_counts(std::move(counts[l]));
  return out;
}

FeatureVector extract_feature(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label,
                              const FeatureConfig& cfg) {
  require_same_frame(raw, labels, "extract_feature");
  cfg.validate();
  std::vector<double> counts(static_cast<std::size_t>(cfg.bins), 0.0);
  bool any = false;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label && label != 0) {
      counts[static_cast<std::size_t>(cfg.bin_of(raw[i]))] += 1.0;
      any = true;
    }
  if (!any) fail(ErrorKind::NotFound, "extract_feature: label " + std::to_string(label) + " not present");
  return normalize_counts(std::move(counts));
}

void SynthSpec::validate() const {
  feature.validate();
  if (!(sigma_lo > 0.0) || sigma_hi < sigma_lo) fail(ErrorKind::Config, "synth sigma range must satisfy 0 < lo <= hi");
  if (!(amplitude > 0.0)) fail(ErrorKind::Config, "synth amplitude must be positive");
  for (const auto& r : known)
    if (r.hi < r.lo) fail(ErrorKind::Config, "known density range has lo > hi");
  if (!(admissible_length() > 0.0)) fail(ErrorKind::Config, "synth centre domain is empty after excluding known ranges");
}

bool SynthSpec::mu_admissible(double mu) const {
  if (mu < feature.lo_mhu || mu > feature.hi_mhu) return false;
  return std::none_of(known.begin(), known.end(), [mu](const DensityRange& r) { return r.contains(mu); });
}

namespace {

/// Admissible sub-intervals of the window, ascending and disjoint.
std::vector<DensityRange> free_intervals(const SynthSpec& s) {
  std::vector<DensityRange> blocked = s.known;
  std::sort(blocked.begin(), blocked.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
  std::vector<DensityRange> out;
  double cursor = s.feature.lo_mhu;
  for (const auto& r : blocked) {
    if (r.lo > cursor) out.push_back({cursor, std::min(r.lo, s.feature.hi_mhu)});
    cursor = std::max(cursor, r.hi);
    if (cursor >= s.feature.hi_mhu) break;
  }
  if (cursor < s.feature.hi_mhu) out.push_back({cursor, s.feature.hi_mhu});
  std::erase_if(out, [](const DensityRange& r) { return !(r.hi > r.lo); });
  return out;
}

}  // namespace

double SynthSpec::admissible_length() const {
  double len = 0.0;
  for (const auto& r : free_intervals(*this)) len += r.hi - r.lo;
  return len;
}

FeatureVector gaussian_feature(const FeatureConfig& cfg, double amplitude, double mu, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(cfg.bins));
  for (int i = 0; i < cfg.bins; ++i) {
    const double d = (cfg.bin_center(i) - mu) / sigma;
    g[static_cast<std::size_t>(i)] = amplitude * std::exp(-d * d);
  }
  if (std::accumulate(g.begin(), g.end(), 0.0) <= 0.0) g[static_cast<std::size_t>(cfg.bin_of(mu))] = 1.0;
  return normalize_counts(std::move(g));
}

namespace {

struct Bump {
  double mu;
  double sigma;
};

std::vector<Bump> draw_bumps(const SynthSpec& spec) {
  spec.validate();
  const auto free = free_intervals(spec);
  const double total = spec.admissible_length();
  Rng rng(spec.seed);
  std::vector<Bump> out;
  out.reserve(spec.count);
  for (std::size_t k = 0; k < spec.count; ++k) {
    double u = rng.uniform(0.0, total);
    double mu = free.back().hi;
    for (const auto& r : free) {
      const double len = r.hi - r.lo;
      if (u < len) {
        mu = r.lo + u;
        break;
      }
      u -= len;
    }
    // Interval endpoints touch the known ranges.
    if (!spec.mu_admissible(mu)) mu = std::nextafter(mu, spec.feature.hi_mhu);
    out.push_back({mu, rng.uniform(spec.sigma_lo, spec.sigma_hi)});
  }
  return out;
}

}  // namespace

std::vector<double> synth_centres(const SynthSpec& spec) {
  std::vector<double> mus;
  for (const auto& b : draw_bumps(spec)) mus.push_back(b.mu);
  return mus;
}

std::vector<FeatureVector> synth_others(const SynthSpec& spec) {
  std::vector<FeatureVector> out;
  for (const auto& b : draw_bumps(spec)) out.push_back(gaussian_feature(spec.feature, spec.amplitude, b.mu, b.sigma));
  return out;
}

void TrainParams::validate() const {
  if (!(c > 0.0)) fail(ErrorKind::Config, "svm C must be positive");
  if (max_epochs < 1) fail(ErrorKind::Config, "max_epochs must be >= 1");
  if (!(tolerance > 0.0)) fail(ErrorKind::Config, "tolerance must be positive");
  if (calibration_folds < 2) fail(ErrorKind::Config, "calibration_folds must be >= 2");
  if (calibration_l2 < 0.0) fail(ErrorKind::Config, "calibration_l2 must be >= 0");
  if (!(feature_scale > 0.0)) fail(ErrorKind::Config, "feature_scale must be positive");
}

std::array<double, kNumClasses> MaterialModel::decision(const FeatureVector& f) const {
  std::array<double, kNumClasses> s{};
  for (std::size_t c = 0; c < kNumClasses; ++c) s[c] = dot_scaled(weights[c], f, params.feature_scale) + bias[c];
  return s;
}

MaterialModel train(const std::vector<FeatureVector>& features, const std::vector<MaterialClass>& classes,
                    const FeatureConfig& feature, const TrainParams& params, std::uint64_t seed) {
  feature.validate();
  params.validate();
  if (features.size() != classes.size()) fail(ErrorKind::Shape, "train: feature and label counts differ");
  for (const auto& f : features)
    if (f.size() != static_cast<std::size_t>(feature.bins)) fail(ErrorKind::Shape, "train: feature length mismatch");
  MaterialModel m;
  m.feature = feature;
  m.params = params;
  m.seed = seed;
  for (auto c : classes) ++m.class_counts[static_cast<std::size_t>(c)];
  const auto present = std::count_if(m.class_counts.begin(), m.class_counts.end(), [](auto n) { return n > 0; });
  if (present < 2) fail(ErrorKind::Training, "train: at least two classes are required");

  std::vector<std::size_t> all(features.size());
  std::iota(all.begin(), all.end(), 0);
  const LinearOvr full = fit_ovr(features, classes, all, params, derive_seed(seed, 100));
  m.weights = full.w;
  m.bias = full.b;

  // Stratified folds: shuffle each class, deal round-robin.
  const auto k = static_cast<std::size_t>(params.calibration_folds);
  std::vector<std::size_t> fold(features.size());
  Rng fold_rng(derive_seed(seed, 200));
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (static_cast<std::size_t>(classes[i]) == c) idx.push_back(i);
    fold_rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j) fold[idx[j]] = j % k;
  }
  std::vector<std::array<double, kNumClasses>> oof(features.size());
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < features.size(); ++i)
      if (fold[i] != f) rows.push_back(i);
    const LinearOvr part = fit_ovr(features, classes, rows, params, derive_seed(seed, 300 + f));
    for (std::size_t i = 0; i < features.size(); ++i)
      if (fold[i] == f) oof[i] = decide(part, features[i], params.feature_scale);
  }
  fit_calibration(oof, classes, params.calibration_l2, m.cal_scale, m.cal_offset);
  return m;
}

Probabilities predict_proba(const MaterialModel& model, const FeatureVector& feature) {
  if (feature.size() != static_cast<std::size_t>(model.feature.bins))
    fail(ErrorKind::Shape, "predict_proba: feature length " + std::to_string(feature.size()) + " != model bins " +
                               std::to_string(model.feature.bins));
  const auto s = model.decision(feature);
  std::array<double, kNumClasses> z{};
  for (std::size_t c = 0; c < kNumClasses; ++c) z[c] = model.cal_scale[c] * s[c] + model.cal_offset[c];
  return softmax(z);
}

MaterialClass argmax(const Probabilities& p) {
  return static_cast<MaterialClass>(std::max_element(p.begin(), p.end()) - p.begin());
}

bool is_threat(const Probabilities& p) { return p[0] + p[1] + p[2] > p[3]; }

std::vector<ClassifiedObject> classify_objects(const RawVolume& raw, const LabelVolume& labels,
                                               const MaterialModel& model) {
  require_same_frame(raw, labels, "classify_objects");
  const auto features = extract_features(raw, labels, model.feature);
  const auto stats = all_object_stats(raw, labels);
  std::vector<ClassifiedObject> out;
  out.reserve(stats.size());
  for (const auto& s : stats) out.push_back({s, predict_proba(model, features[s.label])});
  return out;
}

std::string model_to_json(const MaterialModel& m) {
  using nlohmann::json;
  json j;
  j["schema"] = kModelSchema;
  j["multiclass"] = "one_vs_rest_softmax";
  j["classes"] = json::array();
  for (auto n : kNames) j["classes"].push_back(std::string(n));
  j["feature"] = {{"lo_mhu", m.feature.lo_mhu}, {"hi_mhu", m.feature.hi_mhu}, {"bins", m.feature.bins}};
  j["train"] = {{"c", m.params.c},
                {"max_epochs", m.params.max_epochs},
                {"tolerance", m.params.tolerance},
                {"calibration_folds", m.params.calibration_folds},
                {"calibration_l2", m.params.calibration_l2},
                {"feature_scale", m.params.feature_scale},
                {"balance_classes", m.params.balance_classes}};
  j["seed"] = m.seed;
  j["class_counts"] = m.class_counts;
  j["weights"] = m.weights;
  j["bias"] = m.bias;
  j["calibration"] = {{"scale", m.cal_scale}, {"offset", m.cal_offset}};
  return j.dump(1) + "\n";
}

MaterialModel model_from_json(const std::string& text) {
  const auto j = parse_json(text, "material model");
  MaterialModel m;
  try {
    if (j.at("schema").get<std::string>() != kModelSchema) fail(ErrorKind::Format, "unsupported model schema");
    const auto& f = j.at("feature");
    m.feature = {f.at("lo_mhu").get<double>(), f.at("hi_mhu").get<double>(), f.at("bins").get<int>()};
    const auto& t = j.at("train");
    m.params.c = t.at("c").get<double>();
    m.params.max_epochs = t.at("max_epochs").get<int>();
    m.params.tolerance = t.at("tolerance").get<double>();
    m.params.calibration_folds = t.at("calibration_folds").get<int>();
    m.params.calibration_l2 = t.at("calibration_l2").get<double>();
    m.params.feature_scale = t.at("feature_scale").get<double>();
    m.params.balance_classes = t.at("balance_classes").get<bool>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.class_counts = j.at("class_counts").get<std::array<std::size_t, kNumClasses>>();
    m.weights = j.at("weights").get<std::array<std::vector<double>, kNumClasses>>();
    m.bias = j.at("bias").get<std::array<double, kNumClasses>>();
    m.cal_scale = j.at("calibration").at("scale").get<std::array<double, kNumClasses>>();
    m.cal_offset = j.at("calibration").at("offset").get<std::array<double, kNumClasses>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("material model: ") + e.what());
  }
  m.feature.validate();
  for (const auto& w : m.weights)
    if (w.size() != static_cast<std::size_t>(m.feature.bins)) fail(ErrorKind::Format, "model weight length mismatch");
  return m;
}

void save_model(const MaterialModel& model, const std::string& path) { write_text_file(path, model_to_json(model)); }

MaterialModel load_model(const std::string& path) { return model_from_json(read_text_file(path)); }

}  // namespace aatr::cls
