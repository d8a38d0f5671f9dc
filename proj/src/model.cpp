#include "osca/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "osca/errors.hpp"
#include "osca/random.hpp"

namespace osca {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// ParameterSet
// ---------------------------------------------------------------------------

int ParameterSet::add(std::string name, Index rows, Index cols) {
    slots_.push_back({std::move(name), rows, cols, total_});
    total_ += rows * cols;
    return static_cast<int>(slots_.size() - 1);
}

std::optional<int> ParameterSet::find(std::string_view name) const {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (slots_[i].name == name) return static_cast<int>(i);
    }
    return std::nullopt;
}

ParameterSet::MatrixMap ParameterSet::view(int id, VectorXd& buffer) const {
    const TensorSlot& s = slot(id);
    return MatrixMap(buffer.data() + s.offset, s.rows, s.cols);
}

ParameterSet::ConstMatrixMap ParameterSet::view(int id, const VectorXd& buffer) const {
    const TensorSlot& s = slot(id);
    return ConstMatrixMap(buffer.data() + s.offset, s.rows, s.cols);
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

std::string StreamSet::to_string() const {
    std::string out;
    auto add = [&out](const char* name) {
        if (!out.empty()) out += ',';
        out += name;
    };
    if (visual) add("vid");
    if (action) add("action");
    if (state) add("state");
    return out;
}

StreamSet StreamSet::parse(std::string_view text) {
    StreamSet s{false, false, false};
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        std::string_view tok = text.substr(pos, comma - pos);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        if (tok == "vid" || tok == "visual") {
            s.visual = true;
        } else if (tok == "action") {
            s.action = true;
        } else if (tok == "state") {
            s.state = true;
        } else if (!tok.empty()) {
            throw ConfigError("unknown stream '" + std::string(tok) + "' (expected vid, action, state)");
        }
        pos = comma + 1;
    }
    if (!s.any()) throw ConfigError("at least one stream must be enabled");
    return s;
}

std::vector<std::string> ModelConfig::validate() const {
    std::vector<std::string> v;
    if (!streams.any()) v.emplace_back("model: no stream enabled");
    auto check_encoder = [&v](const char* name, const EncoderConfig& e, bool lexical) {
        if (e.hidden_size < 1) v.push_back(std::string("model.") + name + ".hidden_size must be >= 1");
        if (lexical && e.embedding_dim < 1) v.push_back(std::string("model.") + name + ".embedding_dim must be >= 1");
        for (int s : e.mlp_sizes) {
            if (s < 1) {
                v.push_back(std::string("model.") + name + ".mlp_sizes entries must be >= 1");
                break;
            }
        }
    };
    if (streams.visual) {
        check_encoder("visual", visual, false);
        if (feature_dim < 1) v.emplace_back("model.feature_dim must be >= 1 when the visual stream is enabled");
    }
    if (streams.action) {
        check_encoder("action", action, true);
        if (num_verbs < 1 || num_nouns < 1) v.emplace_back("model: action stream needs a nonempty verb and noun vocabulary");
    }
    if (streams.state) check_encoder("state", state, true);
    if (fusion_sizes.empty() || fusion_sizes.back() != kNumStateClasses) {
        v.emplace_back("model.fusion_sizes must end with the class count (9)");
    }
    for (int s : fusion_sizes) {
        if (s < 1) {
            v.emplace_back("model.fusion_sizes entries must be >= 1");
            break;
        }
    }
    return v;
}

std::vector<std::string> TrainConfig::validate() const {
    std::vector<std::string> v;
    if (batch_size < 1) v.emplace_back("train.batch_size must be >= 1");
    if (!(learning_rate > 0)) v.emplace_back("train.learning_rate must be > 0");
    if (epochs < 0) v.emplace_back("train.epochs must be >= 0");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) v.emplace_back("train: Adam betas must lie in [0, 1)");
    if (!(adam_epsilon > 0)) v.emplace_back("train.adam_epsilon must be > 0");
    return v;
}

// ---------------------------------------------------------------------------
// Predictions and loss
// ---------------------------------------------------------------------------

std::array<int, kNumStateClasses> PredictionDistribution::ranking() const noexcept {
    std::array<int, kNumStateClasses> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [this](int a, int b) {
        return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
    });
    return order;
}

StateChange PredictionDistribution::argmax() const noexcept {
    return static_cast<StateChange>(ranking()[0]);
}

double loss(std::span<const PredictionDistribution> predictions, std::span<const StateChange> targets) {
    if (predictions.size() != targets.size()) {
        throw ShapeError("loss: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(targets.size()) + " targets");
    }
    if (predictions.empty()) throw ShapeError("loss: empty batch");
    double total = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = predictions[i].probs[static_cast<std::size_t>(index_of(targets[i]))];
        total -= std::log(std::max(p, kProbabilityFloor));
    }
    return total / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

VectorXd softmax(const VectorXd& logits) {
    VectorXd e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

enum class InitKind { uniform, normal };

struct LstmTrace {
    MatrixXd x;      // I x T
    MatrixXd gates;  // 4H x T, post-activation (i, f, g, o)
    MatrixXd c;      // H x T
    MatrixXd h;      // H x T
};

}  // namespace

struct AnticipationModel::EncoderTrace {
    LstmTrace fwd;
    LstmTrace bwd;
    std::vector<VectorXd> mlp_in;
    std::vector<VectorXd> mlp_pre;
};

struct AnticipationModel::InitSpec {
    int slot;
    InitKind kind;
    double scale;
};

AnticipationModel::Encoder AnticipationModel::build_encoder(
    const std::string& prefix, const EncoderConfig& cfg, Index input_width,
    std::vector<std::pair<Index, Index>> embedding_shapes, std::vector<InitSpec>& inits) {
    Encoder enc;
    const std::array<const char*, 2> embed_names = {"embed_a", "embed_b"};
    for (std::size_t i = 0; i < embedding_shapes.size(); ++i) {
        const int id = params_.add(prefix + "." + embed_names[i], embedding_shapes[i].first, embedding_shapes[i].second);
        enc.embeddings.push_back(id);
        inits.push_back({id, InitKind::normal, 1.0});
    }
    const Index h = cfg.hidden_size;
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    auto make_lstm = [&](const std::string& name) {
        Lstm l{params_.add(name + ".wx", 4 * h, input_width), params_.add(name + ".wh", 4 * h, h),
               params_.add(name + ".b", 4 * h, 1), h};
        for (int id : {l.wx, l.wh, l.b}) inits.push_back({id, InitKind::uniform, bound});
        return l;
    };
    enc.forward = make_lstm(prefix + ".lstm_fwd");
    enc.backward = make_lstm(prefix + ".lstm_bwd");
    Index width = 2 * h;
    for (std::size_t i = 0; i < cfg.mlp_sizes.size(); ++i) {
        const Index out = cfg.mlp_sizes[i];
        const std::string name = prefix + ".mlp" + std::to_string(i);
        Dense d{params_.add(name + ".w", out, width), params_.add(name + ".b", out, 1)};
        const double b = 1.0 / std::sqrt(static_cast<double>(width));
        inits.push_back({d.w, InitKind::uniform, b});
        inits.push_back({d.b, InitKind::uniform, b});
        enc.mlp.push_back(d);
        width = out;
    }
    enc.output_width = width;
    return enc;
}

AnticipationModel::AnticipationModel(ModelConfig config, std::uint64_t vocabulary_fingerprint, std::uint64_t seed)
    : config_(std::move(config)), fingerprint_(vocabulary_fingerprint), seed_(seed) {
    if (auto problems = config_.validate(); !problems.empty()) {
        std::ostringstream msg;
        msg << "invalid model config:";
        for (const auto& p : problems) msg << "\n  " << p;
        throw ConfigError(msg.str());
    }
    std::vector<InitSpec> specs;

    Index fused = 0;
    if (config_.streams.visual) {
        visual_ = build_encoder("visual", config_.visual, config_.feature_dim, {}, specs);
        fused += visual_->output_width;
    }
    if (config_.streams.action) {
        const Index e = config_.action.embedding_dim;
        // Extra column per table: reserved UNK.
        action_ = build_encoder("action", config_.action, 2 * e,
                                {{e, config_.num_verbs + 1}, {e, config_.num_nouns + 1}}, specs);
        fused += action_->output_width;
    }
    if (config_.streams.state) {
        const Index e = config_.state.embedding_dim;
        state_ = build_encoder("state", config_.state, e, {{e, kNumStateClasses}}, specs);
        fused += state_->output_width;
    }
    Index width = fused;
    for (std::size_t i = 0; i < config_.fusion_sizes.size(); ++i) {
        const Index out = config_.fusion_sizes[i];
        const std::string name = "fusion." + std::to_string(i);
        Dense d{params_.add(name + ".w", out, width), params_.add(name + ".b", out, 1)};
        double b = 1.0 / std::sqrt(static_cast<double>(width));
        // Small output layer: an untrained model predicts nearly uniformly.
        if (i + 1 == config_.fusion_sizes.size()) b *= 0.01;
        specs.push_back({d.w, InitKind::uniform, b});
        specs.push_back({d.b, InitKind::uniform, b});
        fusion_.push_back(d);
        width = out;
    }
    params_.finalize();

    Rng rng = derive_rng(seed, 0x1417);
    for (const InitSpec& s : specs) {
        auto m = params_.view(s.slot);
        for (Index j = 0; j < m.cols(); ++j) {
            for (Index i = 0; i < m.rows(); ++i) {
                m(i, j) = s.kind == InitKind::normal ? s.scale * standard_normal(rng)
                                                     : s.scale * (2.0 * uniform01(rng) - 1.0);
            }
        }
    }
}

Index AnticipationModel::visual_width() const noexcept { return visual_ ? visual_->output_width : 0; }
Index AnticipationModel::action_width() const noexcept { return action_ ? action_->output_width : 0; }
Index AnticipationModel::state_width() const noexcept { return state_ ? state_->output_width : 0; }

std::vector<int> AnticipationModel::fusion_slots() const {
    std::vector<int> out;
    for (const Dense& d : fusion_) {
        out.push_back(d.w);
        out.push_back(d.b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Forward / backward primitives
// ---------------------------------------------------------------------------

namespace {

VectorXd lstm_forward(const ParameterSet& p, int wx_id, int wh_id, int b_id, Index hidden, const MatrixXd& x,
                      LstmTrace* trace) {
    const auto wx = p.view(wx_id);
    const auto wh = p.view(wh_id);
    const auto b = p.view(b_id);
    const Index steps = x.cols();
    const Index h4 = 4 * hidden;

    MatrixXd z = wx * x;
    z.colwise() += b.col(0);

    VectorXd h = VectorXd::Zero(hidden);
    VectorXd c = VectorXd::Zero(hidden);
    VectorXd a(h4);
    if (trace) {
        trace->x = x;
        trace->gates.resize(h4, steps);
        trace->c.resize(hidden, steps);
        trace->h.resize(hidden, steps);
    }
    for (Index t = 0; t < steps; ++t) {
        a.noalias() = z.col(t);
        a.noalias() += wh * h;
        for (Index k = 0; k < hidden; ++k) {
            const double ig = sigmoid(a[k]);
            const double fg = sigmoid(a[hidden + k]);
            const double gg = std::tanh(a[2 * hidden + k]);
            const double og = sigmoid(a[3 * hidden + k]);
            c[k] = fg * c[k] + ig * gg;
            h[k] = og * std::tanh(c[k]);
            a[k] = ig;
            a[hidden + k] = fg;
            a[2 * hidden + k] = gg;
            a[3 * hidden + k] = og;
        }
        if (trace) {
            trace->gates.col(t) = a;
            trace->c.col(t) = c;
            trace->h.col(t) = h;
        }
    }
    return h;
}

// Gradient of the final hidden state only. Returns d loss / d x (I x T).
MatrixXd lstm_backward(const ParameterSet& p, int wx_id, int wh_id, int b_id, Index hidden, const LstmTrace& tr,
                       const VectorXd& d_h_last, VectorXd& grad) {
    const auto wx = p.view(wx_id);
    const auto wh = p.view(wh_id);
    const Index steps = tr.x.cols();
    MatrixXd d_pre(4 * hidden, steps);

    VectorXd dh = d_h_last;
    VectorXd dc_next = VectorXd::Zero(hidden);
    for (Index t = steps - 1; t >= 0; --t) {
        for (Index k = 0; k < hidden; ++k) {
            const double ig = tr.gates(k, t);
            const double fg = tr.gates(hidden + k, t);
            const double gg = tr.gates(2 * hidden + k, t);
            const double og = tr.gates(3 * hidden + k, t);
            const double ct = tr.c(k, t);
            const double c_prev = t > 0 ? tr.c(k, t - 1) : 0.0;
            const double tc = std::tanh(ct);
            const double d_o = dh[k] * tc;
            const double dc = dh[k] * og * (1.0 - tc * tc) + dc_next[k];
            d_pre(k, t) = dc * gg * ig * (1.0 - ig);
            d_pre(hidden + k, t) = dc * c_prev * fg * (1.0 - fg);
            d_pre(2 * hidden + k, t) = dc * ig * (1.0 - gg * gg);
            d_pre(3 * hidden + k, t) = d_o * og * (1.0 - og);
            dc_next[k] = dc * fg;
        }
        dh.noalias() = wh.transpose() * d_pre.col(t);
    }

    auto g_wx = p.view(wx_id, grad);
    auto g_wh = p.view(wh_id, grad);
    auto g_b = p.view(b_id, grad);
    g_wx.noalias() += d_pre * tr.x.transpose();
    if (steps > 1) {
        g_wh.noalias() += d_pre.rightCols(steps - 1) * tr.h.leftCols(steps - 1).transpose();
    }
    g_b.col(0) += d_pre.rowwise().sum();
    return wx.transpose() * d_pre;
}

}  // namespace

VectorXd AnticipationModel::run_encoder(const Encoder& enc, const MatrixXd& inputs, EncoderTrace* trace) const {
    const Index hidden = enc.forward.hidden;
    VectorXd summary(2 * hidden);
    const MatrixXd reversed = inputs.rowwise().reverse();
    summary.head(hidden) = lstm_forward(params_, enc.forward.wx, enc.forward.wh, enc.forward.b, hidden, inputs,
                                        trace ? &trace->fwd : nullptr);
    summary.tail(hidden) = lstm_forward(params_, enc.backward.wx, enc.backward.wh, enc.backward.b, hidden, reversed,
                                        trace ? &trace->bwd : nullptr);
    VectorXd x = std::move(summary);
    for (const Dense& d : enc.mlp) {
        VectorXd pre = params_.view(d.w) * x + params_.view(d.b).col(0);
        if (trace) {
            trace->mlp_in.push_back(x);
            trace->mlp_pre.push_back(pre);
        }
        x = pre.cwiseMax(0.0);
    }
    return x;
}

void AnticipationModel::backprop_encoder(const Encoder& enc, const EncoderTrace& trace, const VectorXd& d_out,
                                         const std::vector<std::array<int, 2>>& tokens, VectorXd& grad) const {
    VectorXd d = d_out;
    for (std::size_t li = enc.mlp.size(); li-- > 0;) {
        const Dense& layer = enc.mlp[li];
        const VectorXd d_pre = (trace.mlp_pre[li].array() > 0.0).select(d, 0.0);
        params_.view(layer.w, grad).noalias() += d_pre * trace.mlp_in[li].transpose();
        params_.view(layer.b, grad).col(0) += d_pre;
        d = params_.view(layer.w).transpose() * d_pre;
    }
    const Index hidden = enc.forward.hidden;
    MatrixXd dx = lstm_backward(params_, enc.forward.wx, enc.forward.wh, enc.forward.b, hidden, trace.fwd,
                                d.head(hidden), grad);
    dx += lstm_backward(params_, enc.backward.wx, enc.backward.wh, enc.backward.b, hidden, trace.bwd,
                        d.tail(hidden), grad)
              .rowwise()
              .reverse();

    if (enc.embeddings.empty()) return;
    Index row = 0;
    for (std::size_t e = 0; e < enc.embeddings.size(); ++e) {
        auto table_grad = params_.view(enc.embeddings[e], grad);
        const Index dim = table_grad.rows();
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            table_grad.col(tokens[t][e]) += dx.block(row, static_cast<Index>(t), dim, 1);
        }
        row += dim;
    }
}

// ---------------------------------------------------------------------------
// Stream inputs
// ---------------------------------------------------------------------------

MatrixXd AnticipationModel::action_inputs(std::span<const ActionLabel> history, bool strict,
                                          std::vector<std::array<int, 2>>* tokens) const {
    if (!action_) throw ConfigError("model has no action stream");
    if (history.empty()) throw ShapeError("action history must contain at least one token");
    const auto verbs = params_.view(action_->embeddings[0]);
    const auto nouns = params_.view(action_->embeddings[1]);
    const Index e = verbs.rows();
    MatrixXd x(2 * e, static_cast<Index>(history.size()));
    for (std::size_t t = 0; t < history.size(); ++t) {
        int v = history[t].verb;
        int n = history[t].noun;
        const bool verb_ok = v >= 0 && v < config_.num_verbs;
        const bool noun_ok = n >= 0 && n < config_.num_nouns;
        if (!verb_ok || !noun_ok) {
            if (strict) {
                throw ValidationError("action token (" + std::to_string(v) + ", " + std::to_string(n) +
                                      ") outside the model vocabulary");
            }
            if (!verb_ok) v = config_.num_verbs;
            if (!noun_ok) n = config_.num_nouns;
        }
        x.block(0, static_cast<Index>(t), e, 1) = verbs.col(v);
        x.block(e, static_cast<Index>(t), e, 1) = nouns.col(n);
        if (tokens) tokens->push_back({v, n});
    }
    return x;
}

MatrixXd AnticipationModel::state_inputs(std::span<const StateChange> history,
                                         std::vector<std::array<int, 2>>* tokens) const {
    if (!state_) throw ConfigError("model has no state stream");
    if (history.empty()) throw ShapeError("state history must contain at least one token");
    const auto table = params_.view(state_->embeddings[0]);
    MatrixXd x(table.rows(), static_cast<Index>(history.size()));
    for (std::size_t t = 0; t < history.size(); ++t) {
        const int s = index_of(history[t]);
        if (s < 0 || s >= kNumStateClasses) throw ValidationError("state token outside the 9 classes");
        x.col(static_cast<Index>(t)) = table.col(s);
        if (tokens) tokens->push_back({s, -1});
    }
    return x;
}

namespace {

MatrixXd visual_inputs(const FeatureMatrix& window, int feature_dim) {
    if (window.rows() < 1) throw ShapeError("visual window must have at least one time step");
    if (window.cols() != feature_dim) {
        throw ShapeError("visual window has D = " + std::to_string(window.cols()) + ", model expects " +
                         std::to_string(feature_dim));
    }
    return window.cast<double>().transpose();
}

}  // namespace

VectorXd AnticipationModel::encode_visual(const FeatureMatrix& window) const {
    if (!visual_) throw ConfigError("model has no visual stream");
    return run_encoder(*visual_, visual_inputs(window, config_.feature_dim), nullptr);
}

VectorXd AnticipationModel::encode_action_history(std::span<const ActionLabel> history, bool strict) const {
    return run_encoder(*action_, action_inputs(history, strict, nullptr), nullptr);
}

VectorXd AnticipationModel::encode_state_history(std::span<const StateChange> history) const {
    return run_encoder(*state_, state_inputs(history, nullptr), nullptr);
}

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

PredictionDistribution AnticipationModel::fuse_predict(const VectorXd* visual, const VectorXd* action,
                                                       const VectorXd* state) const {
    auto check = [](const char* name, const VectorXd* v, bool enabled, Index width) {
        if (enabled != (v != nullptr)) {
            throw ShapeError(std::string(name) + " stream embedding " +
                             (enabled ? "missing for an enabled stream" : "given for a disabled stream"));
        }
        if (v && v->size() != width) {
            throw ShapeError(std::string(name) + " embedding has width " + std::to_string(v->size()) +
                             ", expected " + std::to_string(width));
        }
    };
    check("visual", visual, config_.streams.visual, visual_width());
    check("action", action, config_.streams.action, action_width());
    check("state", state, config_.streams.state, state_width());

    VectorXd x(visual_width() + action_width() + state_width());
    Index at = 0;
    for (const VectorXd* v : {visual, action, state}) {
        if (!v) continue;
        x.segment(at, v->size()) = *v;
        at += v->size();
    }
    for (std::size_t i = 0; i < fusion_.size(); ++i) {
        VectorXd pre = params_.view(fusion_[i].w) * x + params_.view(fusion_[i].b).col(0);
        x = i + 1 < fusion_.size() ? VectorXd(pre.cwiseMax(0.0)) : pre;
    }
    const VectorXd p = softmax(x);
    PredictionDistribution out;
    for (int c = 0; c < kNumStateClasses; ++c) out.probs[static_cast<std::size_t>(c)] = p[c];
    return out;
}

PredictionDistribution AnticipationModel::predict(const DecisionSample& sample, const Histories* recognized) const {
    std::optional<VectorXd> v;
    std::optional<VectorXd> a;
    std::optional<VectorXd> s;
    if (visual_) v = encode_visual(sample.visual_window);
    if (action_) {
        a = recognized ? encode_action_history(recognized->actions, false) : encode_action_history(sample.action_history);
    }
    if (state_) s = encode_state_history(recognized ? recognized->states : sample.state_history);
    return fuse_predict(v ? &*v : nullptr, a ? &*a : nullptr, s ? &*s : nullptr);
}

double AnticipationModel::accumulate_gradient(const DecisionSample& sample, VectorXd& grad) const {
    if (grad.size() != params_.size()) throw ShapeError("gradient buffer does not match the parameter layout");

    EncoderTrace vt, at, st;
    std::vector<std::array<int, 2>> action_tokens, state_tokens;
    VectorXd x(visual_width() + action_width() + state_width());
    Index offset = 0;
    if (visual_) {
        x.segment(offset, visual_width()) =
            run_encoder(*visual_, visual_inputs(sample.visual_window, config_.feature_dim), &vt);
        offset += visual_width();
    }
    if (action_) {
        x.segment(offset, action_width()) =
            run_encoder(*action_, action_inputs(sample.action_history, true, &action_tokens), &at);
        offset += action_width();
    }
    if (state_) {
        x.segment(offset, state_width()) = run_encoder(*state_, state_inputs(sample.state_history, &state_tokens), &st);
    }

    std::vector<VectorXd> ins;
    std::vector<VectorXd> pres;
    for (std::size_t i = 0; i < fusion_.size(); ++i) {
        ins.push_back(x);
        VectorXd pre = params_.view(fusion_[i].w) * x + params_.view(fusion_[i].b).col(0);
        pres.push_back(pre);
        x = i + 1 < fusion_.size() ? VectorXd(pre.cwiseMax(0.0)) : pre;
    }
    const VectorXd p = softmax(x);
    const int target = index_of(sample.target);
    const double sample_loss = -std::log(std::max(p[target], kProbabilityFloor));

    VectorXd d = p;
    d[target] -= 1.0;
    for (std::size_t i = fusion_.size(); i-- > 0;) {
        if (i + 1 < fusion_.size()) d = (pres[i].array() > 0.0).select(d, 0.0);
        params_.view(fusion_[i].w, grad).noalias() += d * ins[i].transpose();
        params_.view(fusion_[i].b, grad).col(0) += d;
        d = params_.view(fusion_[i].w).transpose() * d;
    }

    offset = 0;
    if (visual_) {
        backprop_encoder(*visual_, vt, d.segment(offset, visual_width()), {}, grad);
        offset += visual_width();
    }
    if (action_) {
        backprop_encoder(*action_, at, d.segment(offset, action_width()), action_tokens, grad);
        offset += action_width();
    }
    if (state_) backprop_encoder(*state_, st, d.segment(offset, state_width()), state_tokens, grad);
    return sample_loss;
}

ModelConfig model_config_for(const Corpus& corpus, StreamSet streams) {
    ModelConfig cfg;
    cfg.streams = streams;
    cfg.feature_dim = static_cast<int>(corpus.feature_dim());
    cfg.num_verbs = corpus.vocabulary.num_verbs();
    cfg.num_nouns = corpus.vocabulary.num_nouns();
    return cfg;
}

std::vector<PredictionDistribution> predict_all(const AnticipationModel& model, std::span<const DecisionSample> samples,
                                                std::span<const Histories> recognized) {
    if (!recognized.empty() && recognized.size() != samples.size()) {
        throw ShapeError("recognized histories do not match the sample count");
    }
    std::vector<PredictionDistribution> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out.push_back(model.predict(samples[i], recognized.empty() ? nullptr : &recognized[i]));
    }
    return out;
}

}  // namespace osca
