#include "topicintent/intent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_matrix.hpp"
#include "topicintent/error.hpp"

namespace topicintent {

std::vector<TopicId> UserHistory::topics() const {
  std::vector<TopicId> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.topic);
  return out;
}

std::vector<RawFeatures> featurize(std::span<const InteractionEvent> events) {
  std::vector<RawFeatures> rows;
  rows.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const double dt = i == 0 ? 0.0 : static_cast<double>(e.timestamp - events[i - 1].timestamp);
    rows.push_back({e.topic, dt, static_cast<double>(e.session_no), e.liked ? 1.0 : 0.0});
  }
  return rows;
}

double normalize(double x, double min, double max) {
  if (!(max > min)) return 0.0;
  return std::clamp((x - min) / (max - min), 0.0, 1.0);
}

double denormalize(double y, double min, double max) { return min + y * (max - min); }

namespace {

void widen(MinMax& mm, double x, bool first) {
  if (first) {
    mm.min = mm.max = x;
  } else {
    mm.min = std::min(mm.min, x);
    mm.max = std::max(mm.max, x);
  }
}

}  // namespace

NormalizationParams NormalizationParams::fit(std::span<const std::vector<RawFeatures>> sequences) {
  NormalizationParams p;
  bool first = true;
  for (const auto& seq : sequences) {
    for (const auto& row : seq) {
      widen(p.time_delta, row.time_delta, first);
      widen(p.session_no, row.session_no, first);
      widen(p.liked, row.liked, first);
      first = false;
    }
  }
  return p;
}

Eigen::VectorXd encode(const RawFeatures& row, const NormalizationParams& norm,
                       const FeatureSchema& schema) {
  if (row.topic >= schema.num_topics) {
    fail(ErrorKind::kInvalidInput, "topic " + std::to_string(row.topic) + " outside the " +
                                       std::to_string(schema.num_topics) + "-topic schema");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(schema.input_dim()));
  const auto k = static_cast<Eigen::Index>(schema.num_topics);
  x(row.topic) = 1.0;
  x(k) = normalize(row.time_delta, norm.time_delta.min, norm.time_delta.max);
  x(k + 1) = normalize(row.session_no, norm.session_no.min, norm.session_no.max);
  if (schema.use_liked) x(k + 2) = normalize(row.liked, norm.liked.min, norm.liked.max);
  return x;
}

Eigen::MatrixXd encode_sequence(std::span<const RawFeatures> rows, const NormalizationParams& norm,
                                const FeatureSchema& schema) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(schema.input_dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = encode(rows[i], norm, schema).transpose();
  }
  return out;
}

std::vector<SupervisedWindow> make_windows(const Eigen::MatrixXd& rows,
                                           std::span<const TopicId> labels, std::size_t lookback) {
  require(lookback >= 1, "make_windows: lookback must be >= 1");
  require(static_cast<std::size_t>(rows.rows()) == labels.size(),
          "make_windows: row count differs from label count");
  std::vector<SupervisedWindow> windows;
  const std::size_t n = labels.size();
  if (n <= lookback) return windows;
  windows.reserve(n - lookback);
  const auto lb = static_cast<Eigen::Index>(lookback);
  for (std::size_t i = 0; i + lookback < n; ++i) {
    windows.push_back({rows.middleRows(static_cast<Eigen::Index>(i), lb), labels[i + lookback]});
  }
  return windows;
}

// ---------------------------------------------------------------------------
// LSTM

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input_dim, std::size_t num_topics) {
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto z = static_cast<Eigen::Index>(hidden + input_dim);
  const auto k = static_cast<Eigen::Index>(num_topics);
  LstmParams p;
  for (auto* w : {&p.forget_w, &p.input_w, &p.candidate_w, &p.output_w}) {
    *w = Eigen::MatrixXd::Zero(h, z);
  }
  for (auto* b : {&p.forget_b, &p.input_b, &p.candidate_b, &p.output_b}) {
    *b = Eigen::VectorXd::Zero(h);
  }
  p.head_w = Eigen::MatrixXd::Zero(k, h);
  p.head_b = Eigen::VectorXd::Zero(k);
  return p;
}

LstmParams LstmParams::random(std::size_t hidden, std::size_t input_dim, std::size_t num_topics,
                              Rng& rng) {
  LstmParams p = zeros(hidden, input_dim, num_topics);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto* w : {&p.forget_w, &p.input_w, &p.candidate_w, &p.output_w, &p.head_w}) {
    for (Eigen::Index i = 0; i < w->size(); ++i) w->data()[i] = rng.uniform(-scale, scale);
  }
  return p;
}

std::array<std::span<double>, 10> LstmParams::tensors() {
  auto s = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  return {s(forget_w), s(input_w), s(candidate_w), s(output_w), s(forget_b),
          s(input_b),  s(candidate_b), s(output_b), s(head_w),  s(head_b)};
}

std::array<std::span<const double>, 10> LstmParams::tensors() const {
  auto s = [](const auto& m) {
    return std::span<const double>(m.data(), static_cast<std::size_t>(m.size()));
  };
  return {s(forget_w), s(input_w), s(candidate_w), s(output_w), s(forget_b),
          s(input_b),  s(candidate_b), s(output_b), s(head_w),  s(head_b)};
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double peak = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - peak).exp();
  return e / e.sum();
}

struct StepCache {
  Eigen::VectorXd z;  // [h_prev, x]
  Eigen::VectorXd f, i, cand, o;
  Eigen::VectorXd c_prev, c, tanh_c;
};

Eigen::VectorXd concat(const Eigen::VectorXd& h, const Eigen::VectorXd& x) {
  Eigen::VectorXd z(h.size() + x.size());
  z << h, x;
  return z;
}

void check_shapes(const LstmParams& params, Eigen::Index input_dim) {
  if (static_cast<Eigen::Index>(params.input_dim()) != input_dim) {
    fail(ErrorKind::kInvalidArgument, "lstm: input width " + std::to_string(input_dim) +
                                          " differs from model input width " +
                                          std::to_string(params.input_dim()));
  }
}

}  // namespace

CellState lstm_cell(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                    const Eigen::VectorXd& c_prev, const LstmParams& params) {
  check_shapes(params, x.size());
  const Eigen::VectorXd z = concat(h_prev, x);
  const Eigen::VectorXd f = sigmoid(params.forget_w * z + params.forget_b);
  const Eigen::VectorXd i = sigmoid(params.input_w * z + params.input_b);
  const Eigen::VectorXd cand = (params.candidate_w * z + params.candidate_b).array().tanh().matrix();
  const Eigen::VectorXd o = sigmoid(params.output_w * z + params.output_b);
  CellState next;
  next.c = f.cwiseProduct(c_prev) + i.cwiseProduct(cand);
  next.h = o.cwiseProduct(next.c.array().tanh().matrix());
  return next;
}

Eigen::VectorXd forward(const LstmParams& params, const Eigen::MatrixXd& window_inputs) {
  const auto h = static_cast<Eigen::Index>(params.hidden_size());
  CellState s{Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h)};
  for (Eigen::Index t = 0; t < window_inputs.rows(); ++t) {
    s = lstm_cell(window_inputs.row(t).transpose(), s.h, s.c, params);
  }
  return softmax(params.head_w * s.h + params.head_b);
}

LstmGradient loss_and_grad(const LstmParams& params, std::span<const SupervisedWindow> batch) {
  const auto hidden = static_cast<Eigen::Index>(params.hidden_size());
  LstmGradient out;
  out.grad = LstmParams::zeros(params.hidden_size(), params.input_dim(), params.num_topics());
  if (batch.empty()) return out;
  LstmParams& g = out.grad;
  std::vector<StepCache> cache;

  for (const auto& window : batch) {
    check_shapes(params, window.inputs.cols());
    require(window.target < params.num_topics(), "lstm: target topic out of range");
    const auto steps = static_cast<std::size_t>(window.inputs.rows());
    cache.resize(steps);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden);
    for (std::size_t t = 0; t < steps; ++t) {
      StepCache& sc = cache[t];
      sc.z = concat(h, window.inputs.row(static_cast<Eigen::Index>(t)).transpose());
      sc.f = sigmoid(params.forget_w * sc.z + params.forget_b);
      sc.i = sigmoid(params.input_w * sc.z + params.input_b);
      sc.cand = (params.candidate_w * sc.z + params.candidate_b).array().tanh().matrix();
      sc.o = sigmoid(params.output_w * sc.z + params.output_b);
      sc.c_prev = c;
      c = sc.f.cwiseProduct(c) + sc.i.cwiseProduct(sc.cand);
      sc.c = c;
      sc.tanh_c = c.array().tanh().matrix();
      h = sc.o.cwiseProduct(sc.tanh_c);
    }
    const Eigen::VectorXd probs = softmax(params.head_w * h + params.head_b);
    out.loss -= std::log(probs(window.target));

    Eigen::VectorXd dlogits = probs;
    dlogits(window.target) -= 1.0;
    g.head_w.noalias() += dlogits * h.transpose();
    g.head_b += dlogits;
    Eigen::VectorXd dh = params.head_w.transpose() * dlogits;
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden);

    for (std::size_t t = steps; t-- > 0;) {
      const StepCache& sc = cache[t];
      const Eigen::VectorXd d_o = dh.cwiseProduct(sc.tanh_c);
      const Eigen::VectorXd dc =
          dc_next + dh.cwiseProduct(sc.o).cwiseProduct((1.0 - sc.tanh_c.array().square()).matrix());
      const Eigen::VectorXd a_f =
          dc.cwiseProduct(sc.c_prev).cwiseProduct(sc.f.cwiseProduct((1.0 - sc.f.array()).matrix()));
      const Eigen::VectorXd a_i =
          dc.cwiseProduct(sc.cand).cwiseProduct(sc.i.cwiseProduct((1.0 - sc.i.array()).matrix()));
      const Eigen::VectorXd a_c =
          dc.cwiseProduct(sc.i).cwiseProduct((1.0 - sc.cand.array().square()).matrix());
      const Eigen::VectorXd a_o =
          d_o.cwiseProduct(sc.o.cwiseProduct((1.0 - sc.o.array()).matrix()));
      dc_next = dc.cwiseProduct(sc.f);

      g.forget_w.noalias() += a_f * sc.z.transpose();
      g.input_w.noalias() += a_i * sc.z.transpose();
      g.candidate_w.noalias() += a_c * sc.z.transpose();
      g.output_w.noalias() += a_o * sc.z.transpose();
      g.forget_b += a_f;
      g.input_b += a_i;
      g.candidate_b += a_c;
      g.output_b += a_o;

      Eigen::VectorXd dz = params.forget_w.transpose() * a_f;
      dz.noalias() += params.input_w.transpose() * a_i;
      dz.noalias() += params.candidate_w.transpose() * a_c;
      dz.noalias() += params.output_w.transpose() * a_o;
      dh = dz.head(hidden);
    }
  }

  const double scale = 1.0 / static_cast<double>(batch.size());
  out.loss *= scale;
  for (auto t : g.tensors()) {
    for (double& v : t) v *= scale;
  }
  return out;
}

AdamState::AdamState(const LstmParams& like, double learning_rate, double beta1, double beta2,
                     double epsilon)
    : first_(LstmParams::zeros(like.hidden_size(), like.input_dim(), like.num_topics())),
      second_(first_),
      learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {}

void AdamState::step(LstmParams& params, const LstmParams& grad) {
  ++step_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  auto p = params.tensors();
  auto g = grad.tensors();
  auto m = first_.tensors();
  auto v = second_.tensors();
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      m[t][i] = beta1_ * m[t][i] + (1.0 - beta1_) * g[t][i];
      v[t][i] = beta2_ * v[t][i] + (1.0 - beta2_) * g[t][i] * g[t][i];
      const double m_hat = m[t][i] / correction1;
      const double v_hat = v[t][i] / correction2;
      p[t][i] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
  }
}

void IntentTrainConfig::validate() const {
  require(hidden >= 1, "intent: hidden must be >= 1");
  require(lookback >= 1, "intent: lookback must be >= 1");
  require(batch >= 1, "intent: batch must be >= 1");
  require(learning_rate > 0.0, "intent: learning_rate must be > 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "intent: Adam betas must lie in [0, 1)");
  require(epsilon > 0.0, "intent: epsilon must be > 0");
}

LstmParams train_lstm(std::span<const SupervisedWindow> windows, std::size_t input_dim,
                      std::size_t num_topics, const IntentTrainConfig& config, TrainTrace* trace) {
  config.validate();
  Rng rng(config.seed);
  LstmParams params = LstmParams::random(config.hidden, input_dim, num_topics, rng);
  if (windows.empty() || config.epochs == 0) return params;

  AdamState adam(params, config.learning_rate, config.beta1, config.beta2, config.epsilon);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<SupervisedWindow> batch;
  batch.reserve(config.batch);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + config.batch);
      for (std::size_t i = start; i < end; ++i) batch.push_back(windows[order[i]]);
      const LstmGradient lg = loss_and_grad(params, batch);
      if (!std::isfinite(lg.loss)) {
        fail(ErrorKind::kDiverged, "intent: loss became non-finite in epoch " +
                                       std::to_string(epoch) + " at window " +
                                       std::to_string(start));
      }
      epoch_loss += lg.loss * static_cast<double>(batch.size());
      adam.step(params, lg.grad);
    }
    if (trace) trace->epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return params;
}

IntentModel train_intent(std::span<const UserHistory> train_histories, std::size_t num_topics,
                         const IntentTrainConfig& config, TrainTrace* trace) {
  config.validate();
  require(num_topics >= 1, "intent: num_topics must be >= 1");
  std::vector<std::vector<RawFeatures>> features;
  features.reserve(train_histories.size());
  for (const auto& user : train_histories) features.push_back(featurize(user.events));

  IntentModel model;
  model.schema = {num_topics, config.use_liked};
  model.norm = NormalizationParams::fit(features);
  model.lookback = config.lookback;

  std::vector<SupervisedWindow> windows;
  for (std::size_t u = 0; u < train_histories.size(); ++u) {
    const Eigen::MatrixXd rows = encode_sequence(features[u], model.norm, model.schema);
    const auto labels = train_histories[u].topics();
    auto w = make_windows(rows, labels, config.lookback);
    std::move(w.begin(), w.end(), std::back_inserter(windows));
  }
  model.params = train_lstm(windows, model.schema.input_dim(), num_topics, config, trace);
  return model;
}

TopicId argmax(const Eigen::VectorXd& distribution) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < distribution.size(); ++i) {
    if (distribution(i) > distribution(best)) best = i;
  }
  return static_cast<TopicId>(best);
}

Prediction predict_next(const IntentModel& model, std::span<const InteractionEvent> history) {
  if (history.size() < model.lookback) {
    fail(ErrorKind::kInsufficientHistory,
         "intent: history has " + std::to_string(history.size()) + " events but look-back is " +
             std::to_string(model.lookback) + "; fall back to the Markov baseline");
  }
  // Time deltas need the event before the window when it exists.
  const std::size_t start = history.size() - model.lookback;
  const std::size_t from = start > 0 ? start - 1 : 0;
  auto rows = featurize(history.subspan(from));
  if (start > 0) rows.erase(rows.begin());
  const Eigen::MatrixXd inputs = encode_sequence(rows, model.norm, model.schema);
  Prediction p;
  p.distribution = forward(model.params, inputs);
  p.topic = argmax(p.distribution);
  return p;
}

namespace {

nlohmann::ordered_json minmax_json(const MinMax& mm) {
  return nlohmann::ordered_json{{"min", mm.min}, {"max", mm.max}};
}

MinMax minmax_from(const nlohmann::json& j) {
  return {j.at("min").get<double>(), j.at("max").get<double>()};
}

}  // namespace

nlohmann::ordered_json intent_model_to_json(const IntentModel& model) {
  const auto& p = model.params;
  nlohmann::ordered_json j;
  j["format"] = "intent/1";
  j["num_topics"] = model.schema.num_topics;
  j["hidden"] = p.hidden_size();
  j["lookback"] = model.lookback;
  j["schema"] = {{"features", model.schema.use_liked
                                  ? std::vector<std::string>{"topic_onehot", "time_delta",
                                                             "session_no", "liked"}
                                  : std::vector<std::string>{"topic_onehot", "time_delta",
                                                             "session_no"}},
                 {"use_liked", model.schema.use_liked},
                 {"input_dim", model.schema.input_dim()}};
  j["normalization"] = {{"time_delta", minmax_json(model.norm.time_delta)},
                        {"session_no", minmax_json(model.norm.session_no)},
                        {"liked", minmax_json(model.norm.liked)}};
  nlohmann::ordered_json w;
  w["forget_w"] = matrix_to_json(p.forget_w);
  w["forget_b"] = vector_to_json(p.forget_b);
  w["input_w"] = matrix_to_json(p.input_w);
  w["input_b"] = vector_to_json(p.input_b);
  w["candidate_w"] = matrix_to_json(p.candidate_w);
  w["candidate_b"] = vector_to_json(p.candidate_b);
  w["output_w"] = matrix_to_json(p.output_w);
  w["output_b"] = vector_to_json(p.output_b);
  w["head_w"] = matrix_to_json(p.head_w);
  w["head_b"] = vector_to_json(p.head_b);
  j["weights"] = std::move(w);
  return j;
}

IntentModel intent_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "intent/1") {
      fail(ErrorKind::kSchemaMismatch, "unsupported intent model format");
    }
    IntentModel model;
    model.schema.num_topics = j.at("num_topics").get<std::size_t>();
    model.schema.use_liked = j.at("schema").at("use_liked").get<bool>();
    model.lookback = j.at("lookback").get<std::size_t>();
    const auto& n = j.at("normalization");
    model.norm.time_delta = minmax_from(n.at("time_delta"));
    model.norm.session_no = minmax_from(n.at("session_no"));
    model.norm.liked = minmax_from(n.at("liked"));
    const auto& w = j.at("weights");
    auto& p = model.params;
    p.forget_w = matrix_from_json(w.at("forget_w"));
    p.forget_b = vector_from_json(w.at("forget_b"));
    p.input_w = matrix_from_json(w.at("input_w"));
    p.input_b = vector_from_json(w.at("input_b"));
    p.candidate_w = matrix_from_json(w.at("candidate_w"));
    p.candidate_b = vector_from_json(w.at("candidate_b"));
    p.output_w = matrix_from_json(w.at("output_w"));
    p.output_b = vector_from_json(w.at("output_b"));
    p.head_w = matrix_from_json(w.at("head_w"));
    p.head_b = vector_from_json(w.at("head_b"));
    const auto h = static_cast<Eigen::Index>(j.at("hidden").get<std::size_t>());
    const auto z = h + static_cast<Eigen::Index>(model.schema.input_dim());
    const auto k = static_cast<Eigen::Index>(model.schema.num_topics);
    bool ok = p.head_w.rows() == k && p.head_w.cols() == h && p.head_b.size() == k;
    for (const auto* m : {&p.forget_w, &p.input_w, &p.candidate_w, &p.output_w}) {
      ok = ok && m->rows() == h && m->cols() == z;
    }
    for (const auto* b : {&p.forget_b, &p.input_b, &p.candidate_b, &p.output_b}) {
      ok = ok && b->size() == h;
    }
    if (!ok) fail(ErrorKind::kSchemaMismatch, "intent model weights have inconsistent shapes");
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchemaMismatch, std::string("intent model: ") + e.what());
  }
}

}  // namespace topicintent
