#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "topicintent/lda.hpp"
#include "topicintent/random.hpp"

namespace topicintent {

/// One click in a user's log.
struct InteractionEvent {
  std::string user_id;
  std::string paper_id;
  TopicId topic = 0;
  std::int64_t timestamp = 0;  // seconds since epoch
  std::int64_t session_no = 0;
  bool liked = false;

  bool operator==(const InteractionEvent&) const = default;
};

struct UserHistory {
  std::string user_id;
  std::vector<InteractionEvent> events;

  std::vector<TopicId> topics() const;
  bool operator==(const UserHistory&) const = default;
};

/// Per-event raw features: topic, seconds since the previous click (0 for the
/// first), session number and liked flag.
struct RawFeatures {
  TopicId topic = 0;
  double time_delta = 0.0;
  double session_no = 0.0;
  double liked = 0.0;
};

std::vector<RawFeatures> featurize(std::span<const InteractionEvent> events);

/// (x - min) / (max - min), clamped to [0, 1]; 0 when max == min.
double normalize(double x, double min, double max);
double denormalize(double y, double min, double max);

struct MinMax {
  double min = 0.0;
  double max = 0.0;
};

/// Min/max of the continuous features, fitted on the training split only.
struct NormalizationParams {
  MinMax time_delta;
  MinMax session_no;
  MinMax liked;

  static NormalizationParams fit(std::span<const std::vector<RawFeatures>> sequences);
};

/// Layout of x_t: one-hot topic (num_topics), normalized time delta,
/// normalized session number, then the liked flag when enabled.
struct FeatureSchema {
  std::size_t num_topics = 0;
  bool use_liked = false;

  std::size_t input_dim() const { return num_topics + 2 + (use_liked ? 1 : 0); }
};

Eigen::VectorXd encode(const RawFeatures& row, const NormalizationParams& norm,
                       const FeatureSchema& schema);

/// Encoded rows of one user, one row per event (len × input_dim).
Eigen::MatrixXd encode_sequence(std::span<const RawFeatures> rows, const NormalizationParams& norm,
                                const FeatureSchema& schema);

struct SupervisedWindow {
  Eigen::MatrixXd inputs;  // lookback × input_dim, oldest step first
  TopicId target = 0;
};

/// Sliding windows: rows [i, i + lookback) predict labels[i + lookback].
std::vector<SupervisedWindow> make_windows(const Eigen::MatrixXd& rows,
                                           std::span<const TopicId> labels, std::size_t lookback);

/// LSTM gate weights act on [h_{t-1}, x_t] (hidden + input columns, hidden
/// first). The head maps the last hidden state to topic logits.
struct LstmParams {
  Eigen::MatrixXd forget_w, input_w, candidate_w, output_w;
  Eigen::VectorXd forget_b, input_b, candidate_b, output_b;
  Eigen::MatrixXd head_w;  // num_topics × hidden
  Eigen::VectorXd head_b;

  static LstmParams zeros(std::size_t hidden, std::size_t input_dim, std::size_t num_topics);
  /// Weights uniform in ±1/sqrt(hidden), biases zero.
  static LstmParams random(std::size_t hidden, std::size_t input_dim, std::size_t num_topics,
                           Rng& rng);

  std::size_t hidden_size() const { return static_cast<std::size_t>(forget_w.rows()); }
  std::size_t input_dim() const {
    return static_cast<std::size_t>(forget_w.cols()) - hidden_size();
  }
  std::size_t num_topics() const { return static_cast<std::size_t>(head_w.rows()); }

  /// Every tensor as a flat span, in a fixed order.
  std::array<std::span<double>, 10> tensors();
  std::array<std::span<const double>, 10> tensors() const;
  std::size_t parameter_count() const;
};

struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// One step:
///   f = σ(V_f·[h,x] + B_f), i = σ(V_i·[h,x] + B_i), ĉ = tanh(V_c·[h,x] + B_c),
///   c' = f ⊙ c + i ⊙ ĉ, o = σ(V_o·[h,x] + B_o), h' = o ⊙ tanh(c').
CellState lstm_cell(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                    const Eigen::VectorXd& c_prev, const LstmParams& params);

/// Runs the cell over the window from zero state; softmax of the head on the
/// final hidden state.
Eigen::VectorXd forward(const LstmParams& params, const Eigen::MatrixXd& window_inputs);

struct LstmGradient {
  double loss = 0.0;  // mean cross-entropy over the batch
  LstmParams grad;
};

/// Exact backpropagation through time for the mean cross-entropy.
LstmGradient loss_and_grad(const LstmParams& params, std::span<const SupervisedWindow> batch);

class AdamState {
 public:
  AdamState(const LstmParams& like, double learning_rate, double beta1 = 0.9,
            double beta2 = 0.999, double epsilon = 1e-8);

  /// One bias-corrected update of `params` against `grad`.
  void step(LstmParams& params, const LstmParams& grad);
  std::uint64_t steps() const { return step_; }

 private:
  LstmParams first_;
  LstmParams second_;
  std::uint64_t step_ = 0;
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
};

struct IntentTrainConfig {
  std::size_t hidden = 32;
  std::size_t lookback = 5;
  std::size_t epochs = 100;
  std::size_t batch = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool use_liked = false;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainTrace {
  std::vector<double> epoch_loss;
};

/// Minibatch Adam on shuffled windows. Throws ErrorKind::kDiverged on a
/// non-finite loss.
LstmParams train_lstm(std::span<const SupervisedWindow> windows, std::size_t input_dim,
                      std::size_t num_topics, const IntentTrainConfig& config,
                      TrainTrace* trace = nullptr);

struct IntentModel {
  LstmParams params;
  NormalizationParams norm;
  FeatureSchema schema;
  std::size_t lookback = 0;
};

/// Fits normalization on the given (training) histories, windows every user
/// separately and trains the LSTM.
IntentModel train_intent(std::span<const UserHistory> train_histories, std::size_t num_topics,
                         const IntentTrainConfig& config, TrainTrace* trace = nullptr);

struct Prediction {
  TopicId topic = 0;
  Eigen::VectorXd distribution;
};

/// Distribution for the event following the last `lookback` events of
/// `history`. Throws ErrorKind::kInsufficientHistory when the history is
/// shorter than the look-back.
Prediction predict_next(const IntentModel& model, std::span<const InteractionEvent> history);

TopicId argmax(const Eigen::VectorXd& distribution);

nlohmann::ordered_json intent_model_to_json(const IntentModel& model);
IntentModel intent_model_from_json(const nlohmann::json& j);

}  // namespace topicintent
