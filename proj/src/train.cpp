#include "train.hpp"

#include <algorithm>
#include <cmath>

#include "io_util.hpp"

namespace nstr {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Stable log-softmax of scores/temperature; returns per-candidate log
// probabilities.
std::vector<double> log_softmax(const std::vector<double>& scores, double temperature) {
  check(!scores.empty(), Errc::invalid, "softmax over empty score vector");
  check(temperature > 0.0, Errc::invalid, "temperature must be > 0");
  std::vector<double> z(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    check(!std::isnan(scores[i]), Errc::state, "NaN score in softmax");
    z[i] = scores[i] / temperature;
  }
  double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  double lse = zmax + std::log(sum);
  for (auto& v : z) v -= lse;
  return z;
}

// Distributes dvec back onto the embedding rows that produced a pooled
// vector; mirrors the forward pass in encode().
void pool_backward(const TokenizedText& tokens, double positional_scale,
                   const std::vector<double>& dvec, DualGrads& grads) {
  std::int64_t used = 0;
  for (TokenId t : tokens) {
    if (t != kPadId) ++used;
  }
  const double n = static_cast<double>(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    TokenId t = tokens[i];
    if (t == kPadId) continue;
    const double w = (1.0 + positional_scale * static_cast<double>(i) / n) /
                     static_cast<double>(used);
    grads.add_to_row(t, dvec, w);
  }
}

struct NoisedInputs {
  TokenizedText query;
  std::vector<TokenizedText> candidates;
};

NoisedInputs prepare_inputs(const TokenizedText& query,
                            const std::vector<const TokenizedText*>& candidates,
                            const NoiseConfig* noise, Rng* noise_rng) {
  NoisedInputs out;
  const bool noisy = noise != nullptr && noise->enabled();
  if (noisy) {
    check(noise_rng != nullptr, Errc::invalid, "noise requested without a generator");
    out.query = apply_noise(query, *noise, *noise_rng);
  } else {
    out.query = query;
  }
  out.candidates.reserve(candidates.size());
  for (const TokenizedText* c : candidates) {
    check(c != nullptr && !c->empty(), Errc::invalid, "empty candidate token sequence");
    out.candidates.push_back(noisy ? apply_noise(*c, *noise, *noise_rng) : *c);
  }
  return out;
}

// Shared listwise backward pass: target is the teacher distribution (one-hot
// on the positive for the contrastive loss). dL/dlogit = S - T.
double dual_listwise(const EncoderParams& params, const CandidateDistribution* teacher,
                     const TokenizedText& query,
                     const std::vector<const TokenizedText*>& candidates, double temperature,
                     double positional_scale, DualGrads& grads, const NoiseConfig* noise,
                     Rng* noise_rng) {
  check(!candidates.empty(), Errc::invalid, "candidate set is empty");
  if (teacher != nullptr) {
    check(teacher->size() == candidates.size(), Errc::invalid,
          "teacher distribution misaligned with candidate set");
  }
  NoisedInputs inputs = prepare_inputs(query, candidates, noise, noise_rng);

  grads.dim = params.dim;
  EmbeddingVector q_vec = encode(params, inputs.query, positional_scale);
  std::vector<EmbeddingVector> p_vecs;
  p_vecs.reserve(inputs.candidates.size());
  std::vector<double> scores(inputs.candidates.size());
  for (std::size_t c = 0; c < inputs.candidates.size(); ++c) {
    p_vecs.push_back(encode(params, inputs.candidates[c], positional_scale));
    scores[c] = score_pair(q_vec, p_vecs[c]);
  }
  std::vector<double> log_probs = log_softmax(scores, temperature);

  double loss = 0.0;
  if (teacher == nullptr) {
    loss = -log_probs[0];
  } else {
    for (std::size_t c = 0; c < log_probs.size(); ++c) {
      double t = (*teacher)[c];
      if (t > 0.0) loss += t * (std::log(t) - log_probs[c]);
    }
  }

  std::vector<double> dq(static_cast<std::size_t>(params.dim), 0.0);
  std::vector<double> dp(static_cast<std::size_t>(params.dim), 0.0);
  for (std::size_t c = 0; c < log_probs.size(); ++c) {
    const double target = teacher == nullptr ? (c == 0 ? 1.0 : 0.0) : (*teacher)[c];
    const double dscore = (std::exp(log_probs[c]) - target) / temperature;
    for (std::int32_t i = 0; i < params.dim; ++i) {
      dq[static_cast<std::size_t>(i)] += dscore * p_vecs[c][static_cast<std::size_t>(i)];
      dp[static_cast<std::size_t>(i)] = dscore * q_vec[static_cast<std::size_t>(i)];
    }
    pool_backward(inputs.candidates[c], positional_scale, dp, grads);
  }
  pool_backward(inputs.query, positional_scale, dq, grads);
  return loss;
}

// Cross-encoder forward with cached intermediates for the backward pass.
struct CrossForward {
  std::vector<double> u, v, f, a;
  std::int64_t q_used = 0, p_used = 0;
  double score = 0.0;
};

CrossForward cross_forward(const CrossEncoderParams& params, const TokenizedText& q_tokens,
                           const TokenizedText& p_tokens) {
  const auto d = static_cast<std::size_t>(params.dim);
  const auto h = static_cast<std::size_t>(params.hidden);
  CrossForward fw;
  auto pool = [&](const TokenizedText& tokens, std::int64_t& used) {
    std::vector<double> vec(d, 0.0);
    for (TokenId t : tokens) {
      if (t == kPadId) continue;
      const float* r = params.row(t);
      for (std::size_t i = 0; i < d; ++i) vec[i] += r[i];
      ++used;
    }
    check(used > 0, Errc::invalid, "cross encoder: all tokens are PAD");
    for (auto& x : vec) x /= static_cast<double>(used);
    return vec;
  };
  fw.u = pool(q_tokens, fw.q_used);
  fw.v = pool(p_tokens, fw.p_used);
  fw.f.resize(4 * d);
  for (std::size_t i = 0; i < d; ++i) {
    fw.f[i] = fw.u[i];
    fw.f[d + i] = fw.v[i];
    fw.f[2 * d + i] = fw.u[i] * fw.v[i];
    fw.f[3 * d + i] = std::abs(fw.u[i] - fw.v[i]);
  }
  fw.a.resize(h);
  fw.score = params.b2;
  for (std::size_t j = 0; j < h; ++j) {
    double z = params.b1[j];
    for (std::size_t i = 0; i < 4 * d; ++i) z += fw.f[i] * params.w1[i * h + j];
    fw.a[j] = std::tanh(z);
    fw.score += params.w2[j] * fw.a[j];
  }
  return fw;
}

void cross_backward(const CrossEncoderParams& params, const CrossForward& fw, double dscore,
                    const TokenizedText& q_tokens, const TokenizedText& p_tokens,
                    CrossGrads& grads) {
  const auto d = static_cast<std::size_t>(params.dim);
  const auto h = static_cast<std::size_t>(params.hidden);
  grads.b2 += dscore;
  std::vector<double> dz(h);
  for (std::size_t j = 0; j < h; ++j) {
    grads.w2[j] += dscore * fw.a[j];
    dz[j] = dscore * params.w2[j] * (1.0 - fw.a[j] * fw.a[j]);
    grads.b1[j] += dz[j];
  }
  std::vector<double> df(4 * d, 0.0);
  for (std::size_t i = 0; i < 4 * d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      grads.w1[i * h + j] += fw.f[i] * dz[j];
      acc += params.w1[i * h + j] * dz[j];
    }
    df[i] = acc;
  }
  std::vector<double> du(d), dv(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double sgn = fw.u[i] > fw.v[i] ? 1.0 : (fw.u[i] < fw.v[i] ? -1.0 : 0.0);
    du[i] = df[i] + df[2 * d + i] * fw.v[i] + df[3 * d + i] * sgn;
    dv[i] = df[d + i] + df[2 * d + i] * fw.u[i] - df[3 * d + i] * sgn;
  }
  auto unpool = [&](const TokenizedText& tokens, const std::vector<double>& dvec,
                    std::int64_t used) {
    const double w = 1.0 / static_cast<double>(used);
    for (TokenId t : tokens) {
      if (t == kPadId) continue;
      grads.add_row_scaled(t, dvec, w);
    }
  };
  unpool(q_tokens, du, fw.q_used);
  unpool(p_tokens, dv, fw.p_used);
}

double cross_listwise(const CrossEncoderParams& params, const CandidateDistribution* teacher,
                      const TokenizedText& query,
                      const std::vector<const TokenizedText*>& candidates, double temperature,
                      CrossGrads& grads, const NoiseConfig* noise, Rng* noise_rng) {
  check(!candidates.empty(), Errc::invalid, "candidate set is empty");
  if (teacher != nullptr) {
    check(teacher->size() == candidates.size(), Errc::invalid,
          "teacher distribution misaligned with candidate set");
  }
  NoisedInputs inputs = prepare_inputs(query, candidates, noise, noise_rng);
  grads.init_shape(params);

  std::vector<CrossForward> forwards;
  forwards.reserve(inputs.candidates.size());
  std::vector<double> scores(inputs.candidates.size());
  for (std::size_t c = 0; c < inputs.candidates.size(); ++c) {
    forwards.push_back(cross_forward(params, inputs.query, inputs.candidates[c]));
    scores[c] = forwards[c].score;
  }
  std::vector<double> log_probs = log_softmax(scores, temperature);

  double loss = 0.0;
  if (teacher == nullptr) {
    loss = -log_probs[0];
  } else {
    for (std::size_t c = 0; c < log_probs.size(); ++c) {
      double t = (*teacher)[c];
      if (t > 0.0) loss += t * (std::log(t) - log_probs[c]);
    }
  }
  for (std::size_t c = 0; c < log_probs.size(); ++c) {
    const double target = teacher == nullptr ? (c == 0 ? 1.0 : 0.0) : (*teacher)[c];
    const double dscore = (std::exp(log_probs[c]) - target) / temperature;
    cross_backward(params, forwards[c], dscore, inputs.query, inputs.candidates[c], grads);
  }
  return loss;
}

std::vector<const TokenizedText*> candidate_tokens(const CandidateSet& set,
                                                   const TokenStore& tokens) {
  std::vector<const TokenizedText*> out;
  out.reserve(1 + set.negative_ids.size());
  out.push_back(&tokens.passage(set.positive_id));
  for (DocId id : set.negative_ids) out.push_back(&tokens.passage(id));
  return out;
}

std::vector<const TokenizedText*> candidate_tokens(const KlExample& ex,
                                                   const TokenStore& tokens) {
  std::vector<const TokenizedText*> out;
  out.reserve(ex.candidates.size());
  for (DocId id : ex.candidates) out.push_back(&tokens.passage(id));
  return out;
}

template <typename T>
std::vector<T> take_batch(const std::vector<T>& items, const std::vector<std::size_t>& order,
                          std::size_t begin, std::size_t count) {
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(items[order[(begin + i) % order.size()]]);
  return out;
}

std::vector<std::size_t> shuffled_order(std::size_t n, Rng rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  return order;
}

}  // namespace

void TrainingConfig::validate() const {
  check(learning_rate >= 0.0, Errc::invalid, "learning_rate must be >= 0");
  check(batch_size >= 1, Errc::invalid, "batch_size must be >= 1");
  check(n_hard_negatives >= 0, Errc::invalid, "n_hard_negatives must be >= 0");
  check(epochs >= 0, Errc::invalid, "epochs must be >= 0");
  check(temperature > 0.0, Errc::invalid, "temperature must be > 0");
}

void DualGrads::add_to_row(TokenId t, const std::vector<double>& vec, double scale) {
  auto& row = rows[t];
  if (row.empty()) row.assign(vec.size(), 0.0);
  for (std::size_t i = 0; i < vec.size(); ++i) row[i] += scale * vec[i];
}

void DualGrads::accumulate(const DualGrads& other, double scale) {
  if (dim == 0) dim = other.dim;
  for (const auto& [t, vec] : other.rows) add_to_row(t, vec, scale);
}

double DualGrads::squared_norm() const {
  double total = 0.0;
  for (const auto& [t, vec] : rows) {
    for (double v : vec) total += v * v;
  }
  return total;
}

void DualGrads::scale_all(double factor) {
  for (auto& [t, vec] : rows) {
    for (auto& v : vec) v *= factor;
  }
}

bool DualGrads::finite() const {
  for (const auto& [t, vec] : rows) {
    for (double v : vec) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void CrossGrads::init_shape(const CrossEncoderParams& params) {
  if (dim != 0) return;
  dim = params.dim;
  hidden = params.hidden;
  w1.assign(params.w1.size(), 0.0);
  b1.assign(params.b1.size(), 0.0);
  w2.assign(params.w2.size(), 0.0);
  b2 = 0.0;
}

void CrossGrads::add_row_scaled(TokenId t, const std::vector<double>& vec, double scale) {
  auto& row = rows[t];
  if (row.empty()) row.assign(vec.size(), 0.0);
  for (std::size_t i = 0; i < vec.size(); ++i) row[i] += scale * vec[i];
}

void CrossGrads::accumulate(const CrossGrads& other, double scale) {
  if (dim == 0) {
    dim = other.dim;
    hidden = other.hidden;
    w1.assign(other.w1.size(), 0.0);
    b1.assign(other.b1.size(), 0.0);
    w2.assign(other.w2.size(), 0.0);
  }
  for (const auto& [t, vec] : other.rows) add_row_scaled(t, vec, scale);
  for (std::size_t i = 0; i < w1.size(); ++i) w1[i] += scale * other.w1[i];
  for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += scale * other.b1[i];
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] += scale * other.w2[i];
  b2 += scale * other.b2;
}

double CrossGrads::squared_norm() const {
  double total = b2 * b2;
  for (const auto& [t, vec] : rows) {
    for (double v : vec) total += v * v;
  }
  for (double v : w1) total += v * v;
  for (double v : b1) total += v * v;
  for (double v : w2) total += v * v;
  return total;
}

void CrossGrads::scale_all(double factor) {
  for (auto& [t, vec] : rows) {
    for (auto& v : vec) v *= factor;
  }
  for (auto& v : w1) v *= factor;
  for (auto& v : b1) v *= factor;
  for (auto& v : w2) v *= factor;
  b2 *= factor;
}

bool CrossGrads::finite() const {
  auto all_finite = [](const std::vector<double>& vec) {
    for (double v : vec) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  };
  for (const auto& [t, vec] : rows) {
    if (!all_finite(vec)) return false;
  }
  return all_finite(w1) && all_finite(b1) && all_finite(w2) && std::isfinite(b2);
}

const TokenizedText& TokenStore::query(QueryId id) const {
  auto it = queries.find(id);
  check(it != queries.end(), Errc::invalid, "no tokens for query " + std::to_string(id));
  return it->second;
}

const TokenizedText& TokenStore::passage(DocId id) const {
  auto it = passages.find(id);
  check(it != passages.end(), Errc::invalid, "no tokens for passage " + std::to_string(id));
  return it->second;
}

CandidateDistribution softmax_scores(const std::vector<double>& scores, double temperature) {
  std::vector<double> log_probs = log_softmax(scores, temperature);
  CandidateDistribution probs(log_probs.size());
  for (std::size_t i = 0; i < log_probs.size(); ++i) probs[i] = std::exp(log_probs[i]);
  return probs;
}

double kl_divergence(const CandidateDistribution& t, const CandidateDistribution& s) {
  check(t.size() == s.size(), Errc::invalid, "kl_divergence: misaligned distributions");
  double kl = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] > 0.0) kl += t[i] * (std::log(t[i]) - std::log(s[i]));
  }
  return kl;
}

double contrastive_loss_and_grad(const EncoderParams& params, const TokenizedText& query,
                                 const std::vector<const TokenizedText*>& candidates,
                                 double temperature, double positional_scale, DualGrads& grads,
                                 const NoiseConfig* noise, Rng* noise_rng) {
  return dual_listwise(params, nullptr, query, candidates, temperature, positional_scale, grads,
                       noise, noise_rng);
}

double kl_loss_and_grad(const EncoderParams& params, const CandidateDistribution& teacher,
                        const TokenizedText& query,
                        const std::vector<const TokenizedText*>& candidates, double temperature,
                        double positional_scale, DualGrads& grads, const NoiseConfig* noise,
                        Rng* noise_rng) {
  return dual_listwise(params, &teacher, query, candidates, temperature, positional_scale, grads,
                       noise, noise_rng);
}

double cross_contrastive_loss_and_grad(const CrossEncoderParams& params,
                                       const TokenizedText& query,
                                       const std::vector<const TokenizedText*>& candidates,
                                       double temperature, CrossGrads& grads,
                                       const NoiseConfig* noise, Rng* noise_rng) {
  return cross_listwise(params, nullptr, query, candidates, temperature, grads, noise, noise_rng);
}

double cross_kl_loss_and_grad(const CrossEncoderParams& params,
                              const CandidateDistribution& teacher, const TokenizedText& query,
                              const std::vector<const TokenizedText*>& candidates,
                              double temperature, CrossGrads& grads, const NoiseConfig* noise,
                              Rng* noise_rng) {
  return cross_listwise(params, &teacher, query, candidates, temperature, grads, noise, noise_rng);
}

double joint_loss_and_grad(const EncoderParams& params,
                           const std::vector<CandidateSet>& labelled_batch,
                           const std::vector<KlExample>& synthetic_batch,
                           const TokenStore& tokens, const TrainingConfig& config,
                           DualGrads& grads, const NoiseConfig* noise, Rng* noise_rng) {
  check(!labelled_batch.empty() && !synthetic_batch.empty(), Errc::invalid,
        "joint loss requires non-empty labelled and synthetic batches");
  grads.dim = params.dim;
  double loss = 0.0;
  const double l_scale = 1.0 / static_cast<double>(labelled_batch.size());
  for (const auto& set : labelled_batch) {
    DualGrads g;
    loss += l_scale * contrastive_loss_and_grad(params, tokens.query(set.query_id),
                                                candidate_tokens(set, tokens),
                                                config.temperature, config.positional_scale, g);
    grads.accumulate(g, l_scale);
  }
  const double s_scale = 1.0 / static_cast<double>(synthetic_batch.size());
  for (const auto& ex : synthetic_batch) {
    DualGrads g;
    loss += s_scale * kl_loss_and_grad(params, ex.teacher_probs, tokens.query(ex.query_id),
                                       candidate_tokens(ex, tokens), config.temperature,
                                       config.positional_scale, g, noise, noise_rng);
    grads.accumulate(g, s_scale);
  }
  return loss;
}

std::vector<CandidateSet> assemble_batch(const std::vector<TrainPair>& pairs,
                                         const NegativePools& pools,
                                         const TrainingConfig& config, Rng& rng) {
  std::vector<CandidateSet> batch;
  batch.reserve(pairs.size());
  for (const TrainPair& pair : pairs) {
    CandidateSet set;
    set.query_id = pair.query_id;
    set.positive_id = pair.positive_id;

    std::vector<DocId> pool;
    if (const auto* stored = pools.find(pair.query_id)) {
      pool.reserve(stored->size());
      for (DocId id : *stored) {
        if (id != pair.positive_id) pool.push_back(id);
      }
    }
    if (!pool.empty()) {
      check(pool.size() >= static_cast<std::size_t>(config.n_hard_negatives), Errc::invalid,
            "negative pool too small for query " + std::to_string(pair.query_id));
      auto picks =
          rng.sample_indices(pool.size(), static_cast<std::size_t>(config.n_hard_negatives));
      for (std::size_t idx : picks) set.negative_ids.push_back(pool[idx]);
    }
    if (config.use_in_batch_negatives) {
      for (const TrainPair& other : pairs) {
        if (other.query_id == pair.query_id) continue;
        DocId id = other.positive_id;
        if (id == pair.positive_id) continue;
        if (std::find(set.negative_ids.begin(), set.negative_ids.end(), id) !=
            set.negative_ids.end()) {
          continue;
        }
        set.negative_ids.push_back(id);
      }
    }
    batch.push_back(std::move(set));
  }
  return batch;
}

Optimizer::Optimizer(OptimizerKind kind, std::size_t n_params) : kind_(kind) {
  if (kind_ == OptimizerKind::adam) {
    m_.assign(n_params, 0.0);
    v_.assign(n_params, 0.0);
  }
}

double Optimizer::update(std::size_t slot, double grad) {
  if (kind_ == OptimizerKind::sgd) return grad;
  double& m = m_[slot];
  double& w = v_[slot];
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
  w = kAdamBeta2 * w + (1.0 - kAdamBeta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(kAdamBeta1, static_cast<double>(t_)));
  const double v_hat = w / (1.0 - std::pow(kAdamBeta2, static_cast<double>(t_)));
  return m_hat / (std::sqrt(v_hat) + kAdamEps);
}

void Optimizer::step_rows(std::vector<float>& params, std::int32_t dim, const DualGrads& grads,
                          double lr) {
  std::vector<TokenId> touched;
  touched.reserve(grads.rows.size());
  for (const auto& [t, vec] : grads.rows) touched.push_back(t);
  std::sort(touched.begin(), touched.end());
  for (TokenId t : touched) {
    const auto& vec = grads.rows.at(t);
    const std::size_t base = std::size_t(t) * static_cast<std::size_t>(dim);
    for (std::size_t i = 0; i < vec.size(); ++i) {
      const double updated =
          static_cast<double>(params[base + i]) - lr * update(base + i, vec[i]);
      params[base + i] = static_cast<float>(updated);
    }
  }
}

void Optimizer::step_dense(std::vector<float>& params, std::size_t offset,
                           const std::vector<double>& grad, double lr) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double updated =
        static_cast<double>(params[i]) - lr * update(offset + i, grad[i]);
    params[i] = static_cast<float>(updated);
  }
}

void Optimizer::step_scalar(float& param, std::size_t offset, double grad, double lr) {
  param = static_cast<float>(static_cast<double>(param) - lr * update(offset, grad));
}

void optimizer_step(EncoderParams& params, const DualGrads& grads, const TrainingConfig& config,
                    Optimizer& opt) {
  check(grads.finite(), Errc::state, "non-finite gradient; training aborted");
  opt.step_rows(params.embedding, params.dim, grads, config.learning_rate);
  opt.next_step();
}

void optimizer_step(CrossEncoderParams& params, const CrossGrads& grads,
                    const TrainingConfig& config, Optimizer& opt) {
  check(grads.finite(), Errc::state, "non-finite gradient; training aborted");
  const std::size_t emb_size = params.embedding.size();
  DualGrads rows;
  rows.dim = params.dim;
  for (const auto& [t, vec] : grads.rows) rows.rows.emplace(t, vec);
  opt.step_rows(params.embedding, params.dim, rows, config.learning_rate);
  std::size_t offset = emb_size;
  opt.step_dense(params.w1, offset, grads.w1, config.learning_rate);
  offset += params.w1.size();
  opt.step_dense(params.b1, offset, grads.b1, config.learning_rate);
  offset += params.b1.size();
  opt.step_dense(params.w2, offset, grads.w2, config.learning_rate);
  offset += params.w2.size();
  opt.step_scalar(params.b2, offset, grads.b2, config.learning_rate);
  opt.next_step();
}

void clip_gradients(DualGrads& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm) grads.scale_all(max_norm / norm);
}

void clip_gradients(CrossGrads& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm) grads.scale_all(max_norm / norm);
}

std::vector<EpochLoss> train_epochs(EncoderParams& params, const TrainData& data,
                                    const TokenStore& tokens, const TrainingConfig& config,
                                    LossKind kind, const NoiseConfig* noise, const Rng& rng_root) {
  config.validate();
  const bool wants_pairs = kind == LossKind::contrastive || kind == LossKind::joint;
  const bool wants_kl = kind == LossKind::kl || kind == LossKind::joint;
  check(!wants_pairs || !data.pairs.empty(), Errc::invalid, "training data is empty");
  check(!wants_kl || !data.kl_examples.empty(), Errc::invalid, "no soft-labelled examples");
  check(!wants_pairs || data.pools != nullptr, Errc::invalid, "negative pools missing");

  Rng negatives_rng = rng_root.child("negatives");
  Rng noise_rng = noise != nullptr ? rng_root.child(noise->stream) : rng_root.child("noise");
  Optimizer opt(config.optimizer, params.embedding.size());
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  std::vector<EpochLoss> log;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng = rng_root.child("shuffle-epoch-" + std::to_string(epoch));
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;

    if (kind == LossKind::contrastive) {
      std::vector<std::size_t> order = shuffled_order(data.pairs.size(), shuffle_rng);
      for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
        const std::size_t count = std::min(batch_size, order.size() - begin);
        auto pairs = take_batch(data.pairs, order, begin, count);
        auto sets = assemble_batch(pairs, *data.pools, config, negatives_rng);
        DualGrads grads;
        grads.dim = params.dim;
        double batch_loss = 0.0;
        const double scale = 1.0 / static_cast<double>(sets.size());
        for (const auto& set : sets) {
          DualGrads g;
          batch_loss += scale * contrastive_loss_and_grad(
                                    params, tokens.query(set.query_id),
                                    candidate_tokens(set, tokens), config.temperature,
                                    config.positional_scale, g, noise, &noise_rng);
          grads.accumulate(g, scale);
        }
        clip_gradients(grads, config.clip_norm);
        optimizer_step(params, grads, config, opt);
        epoch_loss += batch_loss;
        ++n_batches;
      }
    } else if (kind == LossKind::kl) {
      std::vector<std::size_t> order = shuffled_order(data.kl_examples.size(), shuffle_rng);
      for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
        const std::size_t count = std::min(batch_size, order.size() - begin);
        auto examples = take_batch(data.kl_examples, order, begin, count);
        DualGrads grads;
        grads.dim = params.dim;
        double batch_loss = 0.0;
        const double scale = 1.0 / static_cast<double>(examples.size());
        for (const auto& ex : examples) {
          DualGrads g;
          batch_loss += scale * kl_loss_and_grad(params, ex.teacher_probs,
                                                 tokens.query(ex.query_id),
                                                 candidate_tokens(ex, tokens), config.temperature,
                                                 config.positional_scale, g, noise, &noise_rng);
          grads.accumulate(g, scale);
        }
        clip_gradients(grads, config.clip_norm);
        optimizer_step(params, grads, config, opt);
        epoch_loss += batch_loss;
        ++n_batches;
      }
    } else {
      std::vector<std::size_t> l_order = shuffled_order(data.pairs.size(), shuffle_rng);
      std::vector<std::size_t> s_order =
          shuffled_order(data.kl_examples.size(), shuffle_rng.child("synthetic"));
      const std::size_t n_steps =
          std::max((data.pairs.size() + batch_size - 1) / batch_size,
                   (data.kl_examples.size() + batch_size - 1) / batch_size);
      for (std::size_t step = 0; step < n_steps; ++step) {
        auto pairs = take_batch(data.pairs, l_order, step * batch_size,
                                std::min(batch_size, data.pairs.size()));
        auto labelled = assemble_batch(pairs, *data.pools, config, negatives_rng);
        auto synthetic = take_batch(data.kl_examples, s_order, step * batch_size,
                                    std::min(batch_size, data.kl_examples.size()));
        DualGrads grads;
        double loss = joint_loss_and_grad(params, labelled, synthetic, tokens, config, grads,
                                          noise, &noise_rng);
        clip_gradients(grads, config.clip_norm);
        optimizer_step(params, grads, config, opt);
        epoch_loss += loss;
        ++n_batches;
      }
    }
    log.push_back(EpochLoss{epoch, n_batches == 0 ? 0.0 : epoch_loss / double(n_batches)});
  }
  return log;
}

std::vector<EpochLoss> train_cross_epochs(CrossEncoderParams& params, const TrainData& data,
                                          const TokenStore& tokens, const TrainingConfig& config,
                                          LossKind kind, const NoiseConfig* noise,
                                          const Rng& rng_root) {
  config.validate();
  check(kind != LossKind::joint, Errc::invalid, "joint training is retriever-only");
  const bool wants_pairs = kind == LossKind::contrastive;
  check(!wants_pairs || !data.pairs.empty(), Errc::invalid, "training data is empty");
  check(wants_pairs || !data.kl_examples.empty(), Errc::invalid, "no soft-labelled examples");
  check(!wants_pairs || data.pools != nullptr, Errc::invalid, "negative pools missing");

  Rng negatives_rng = rng_root.child("negatives");
  Rng noise_rng = noise != nullptr ? rng_root.child(noise->stream) : rng_root.child("noise");
  const std::size_t n_params = params.embedding.size() + params.w1.size() + params.b1.size() +
                               params.w2.size() + 1;
  Optimizer opt(config.optimizer, n_params);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  std::vector<EpochLoss> log;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng = rng_root.child("shuffle-epoch-" + std::to_string(epoch));
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    const std::size_t n_items = wants_pairs ? data.pairs.size() : data.kl_examples.size();
    std::vector<std::size_t> order = shuffled_order(n_items, shuffle_rng);
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t count = std::min(batch_size, order.size() - begin);
      CrossGrads grads;
      grads.init_shape(params);
      double batch_loss = 0.0;
      const double scale = 1.0 / static_cast<double>(count);
      if (wants_pairs) {
        auto pairs = take_batch(data.pairs, order, begin, count);
        auto sets = assemble_batch(pairs, *data.pools, config, negatives_rng);
        for (const auto& set : sets) {
          CrossGrads g;
          batch_loss += scale * cross_contrastive_loss_and_grad(
                                    params, tokens.query(set.query_id),
                                    candidate_tokens(set, tokens), config.temperature, g, noise,
                                    &noise_rng);
          grads.accumulate(g, scale);
        }
      } else {
        auto examples = take_batch(data.kl_examples, order, begin, count);
        for (const auto& ex : examples) {
          CrossGrads g;
          batch_loss += scale * cross_kl_loss_and_grad(params, ex.teacher_probs,
                                                       tokens.query(ex.query_id),
                                                       candidate_tokens(ex, tokens),
                                                       config.temperature, g, noise, &noise_rng);
          grads.accumulate(g, scale);
        }
      }
      clip_gradients(grads, config.clip_norm);
      optimizer_step(params, grads, config, opt);
      epoch_loss += batch_loss;
      ++n_batches;
    }
    log.push_back(EpochLoss{epoch, n_batches == 0 ? 0.0 : epoch_loss / double(n_batches)});
  }
  return log;
}

void write_loss_log(const std::vector<EpochLoss>& log, const std::string& path) {
  auto out = open_out(path);
  out << "epoch,loss\n";
  for (const auto& e : log) out << e.epoch << ',' << format_double(e.mean_loss, 9) << '\n';
  check(out.good(), Errc::io, "write failed: " + path);
}

}  // namespace nstr
