#include "stpp/score/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "stpp/error.hpp"
#include "stpp/io/json.hpp"
#include "stpp/simd/kernels.hpp"
#include "stpp/simulate/hawkes.hpp"

namespace stpp::score {

using nlohmann::json;

NetWeights::Layout NetWeights::layout() const {
    const std::size_t H = recurrent_width, W = hidden_width;
    const std::size_t in = kHistoryDim + H;
    const std::size_t head_in = kInputDim + H;
    Layout l{};
    l.wz = 0;
    l.bz = l.wz + H * in;
    l.wc = l.bz + H;
    l.bc = l.wc + H * in;
    l.w1 = l.bc + H;
    l.b1 = l.w1 + W * head_in;
    l.w2 = l.b1 + W;
    l.b2 = l.w2 + 3 * W;
    l.total = l.b2 + 3;
    return l;
}

NetWeights NetWeights::initialize(int recurrent_width, int hidden_width, std::mt19937_64& rng) {
    if (recurrent_width < 1 || hidden_width < 1) throw ConfigError("network widths must be >= 1");
    NetWeights w;
    w.recurrent_width = recurrent_width;
    w.hidden_width = hidden_width;
    const Layout l = w.layout();
    w.params.assign(l.total, 0.0);
    auto fill = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
        const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> u(-a, a);
        for (std::size_t i = 0; i < rows * cols; ++i) w.params[offset + i] = u(rng);
    };
    const std::size_t H = recurrent_width, W = hidden_width;
    fill(l.wz, H, kHistoryDim + H);
    fill(l.wc, H, kHistoryDim + H);
    fill(l.w1, W, kInputDim + H);
    fill(l.w2, 3, W);
    return w;
}

namespace {

json array3(const std::array<double, 3>& a) { return json::array({a[0], a[1], a[2]}); }

std::array<double, 3> read3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string("checkpoint: ") + what + " must have 3 entries");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

struct LayerSpec {
    const char* name;
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
};

std::vector<LayerSpec> layer_specs(const NetWeights& w) {
    const auto l = w.layout();
    const std::size_t H = w.recurrent_width, W = w.hidden_width;
    return {{"encoder.update.weight", l.wz, H, NetWeights::kHistoryDim + H},
            {"encoder.update.bias", l.bz, H, 1},
            {"encoder.candidate.weight", l.wc, H, NetWeights::kHistoryDim + H},
            {"encoder.candidate.bias", l.bc, H, 1},
            {"head.hidden.weight", l.w1, W, NetWeights::kInputDim + H},
            {"head.hidden.bias", l.b1, W, 1},
            {"head.output.weight", l.w2, 3, W},
            {"head.output.bias", l.b2, 3, 1}};
}

}  // namespace

json NetWeights::to_json() const {
    json layers = json::array();
    for (const auto& spec : layer_specs(*this)) {
        std::vector<double> values(params.begin() + spec.offset,
                                   params.begin() + spec.offset + spec.rows * spec.cols);
        layers.push_back({{"name", spec.name}, {"shape", {spec.rows, spec.cols}}, {"values", values}});
    }
    return {{"format_version", kFormatVersion},
            {"architecture",
             {{"cell", "gated-recurrent"},
              {"recurrent_width", recurrent_width},
              {"hidden_width", hidden_width},
              {"input_dim", kInputDim},
              {"history_dim", kHistoryDim}}},
            {"normalization",
             {{"x_mean", array3(x_mean)},
              {"x_scale", array3(x_scale)},
              {"history_mean", array3(h_mean)},
              {"history_scale", array3(h_scale)},
              {"time_offset", time_offset}}},
            {"output_scale", output_scale},
            {"layers", layers}};
}

NetWeights NetWeights::from_json(const json& j) {
    try {
        if (j.at("format_version").get<int>() != kFormatVersion)
            throw ConfigError("checkpoint: unsupported format_version");
        NetWeights w;
        const auto& arch = j.at("architecture");
        w.recurrent_width = arch.at("recurrent_width").get<int>();
        w.hidden_width = arch.at("hidden_width").get<int>();
        if (w.recurrent_width < 1 || w.hidden_width < 1) throw ConfigError("checkpoint: bad widths");
        const auto& norm = j.at("normalization");
        w.x_mean = read3(norm.at("x_mean"), "x_mean");
        w.x_scale = read3(norm.at("x_scale"), "x_scale");
        w.h_mean = read3(norm.at("history_mean"), "history_mean");
        w.h_scale = read3(norm.at("history_scale"), "history_scale");
        w.time_offset = norm.at("time_offset").get<double>();
        if (!(w.time_offset > 0.0)) throw ConfigError("checkpoint: time_offset must be > 0");
        w.output_scale = j.at("output_scale").get<double>();
        w.params.assign(w.layout().total, 0.0);
        const auto specs = layer_specs(w);
        const auto& layers = j.at("layers");
        if (layers.size() != specs.size()) throw ConfigError("checkpoint: wrong number of layers");
        for (std::size_t k = 0; k < specs.size(); ++k) {
            const auto& layer = layers[k];
            const auto shape = layer.at("shape").get<std::vector<std::size_t>>();
            if (layer.at("name").get<std::string>() != specs[k].name || shape.size() != 2 ||
                shape[0] != specs[k].rows || shape[1] != specs[k].cols)
                throw ConfigError(std::string("checkpoint: shape mismatch for ") + specs[k].name);
            const auto values = layer.at("values").get<std::vector<double>>();
            if (values.size() != specs[k].rows * specs[k].cols)
                throw ConfigError(std::string("checkpoint: value count mismatch for ") + specs[k].name);
            std::copy(values.begin(), values.end(), w.params.begin() + specs[k].offset);
        }
        for (double v : w.params)
            if (!std::isfinite(v)) throw ConfigError("checkpoint: non-finite parameter");
        return w;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
}

NetSample make_sample(const ScoreInput& in, std::size_t max_history) {
    NetSample s;
    s.dt = in.dt();
    s.s = in.s;
    if (in.local) {
        const auto& l = *in.local;
        const std::size_t first = l.size() > max_history ? l.size() - max_history : 0;
        for (std::size_t j = first; j < l.size(); ++j) s.history.push_back({in.t_n - l.t[j], l.x[j], l.y[j]});
    }
    return s;
}

double dsm_candidate_radius(double delta, double sigma) { return delta + 6.0 * sigma; }

std::size_t dsm_candidate_cap(double delta, double sigma, std::size_t max_history) {
    const double ratio = dsm_candidate_radius(delta, sigma) / delta;
    return static_cast<std::size_t>(std::ceil(1.5 * ratio * ratio * static_cast<double>(max_history))) + 8;
}

DSMPoint make_dsm_point(const ScoreInput& in) {
    DSMPoint p;
    p.t = in.t;
    p.s = in.s;
    if (in.local) {
        const auto& l = *in.local;
        p.candidates.reserve(l.size());
        for (std::size_t j = 0; j < l.size(); ++j) p.candidates.push_back({l.t[j], l.x[j], l.y[j]});
    }
    return p;
}

std::vector<DSMPoint> make_dsm_points(const core::EventStream& data, double delta,
                                      const core::Domain& domain, double sigma,
                                      std::size_t max_history) {
    const double radius = dsm_candidate_radius(delta, sigma);
    HistoryTracker tracker(domain, radius, false, radius, 0.0,
                           dsm_candidate_cap(delta, sigma, max_history));
    std::vector<DSMPoint> points;
    points.reserve(data.size());
    for (const auto& e : data) {
        points.push_back(make_dsm_point(tracker.prepare(e)));
        tracker.add(e);
    }
    return points;
}

NetSample perturbed_sample(const DSMPoint& p, const Vec3& eps, double delta, std::size_t max_history) {
    NetSample out;
    out.s = {p.s.x + eps[1], p.s.y + eps[2]};
    std::vector<const std::array<double, 3>*> in_ball;
    for (auto it = p.candidates.rbegin(); it != p.candidates.rend() && in_ball.size() < max_history; ++it) {
        const auto& c = *it;
        if (std::abs(c[1] - out.s.x) <= delta && std::abs(c[2] - out.s.y) <= delta) in_ball.push_back(&c);
    }
    const double t_n = in_ball.empty() ? 0.0 : (*in_ball.front())[0];
    out.dt = std::max(0.0, p.t + eps[0] - t_n);
    out.history.reserve(in_ball.size());
    for (auto it = in_ball.rbegin(); it != in_ball.rend(); ++it)
        out.history.push_back({t_n - (**it)[0], (**it)[1], (**it)[2]});
    return out;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

NetEvaluator::NetEvaluator(const NetWeights& w)
    : w_(w), H_(w.recurrent_width), W_(w.hidden_width), h_(H_, 0.0),
      xin_(NetWeights::kInputDim + H_, 0.0), act_(W_, 0.0) {}

void NetEvaluator::encode(const NetSample& sample) {
    const auto l = w_.layout();
    const std::size_t H = H_;
    const std::size_t in = NetWeights::kHistoryDim + H;
    const std::size_t stride = in + 3 * H;
    n_steps_ = sample.history.size();
    steps_.resize(n_steps_ * stride);
    std::fill(h_.begin(), h_.end(), 0.0);
    std::vector<double> pre_z(H), pre_c(H);
    for (std::size_t k = 0; k < n_steps_; ++k) {
        double* v = steps_.data() + k * stride;
        double* z = v + in;
        double* c = z + H;
        double* hp = c + H;
        const auto& hk = sample.history[k];
        v[0] = (std::log(hk[0] + w_.time_offset) - w_.h_mean[0]) / w_.h_scale[0];
        for (int d = 1; d < 3; ++d) v[d] = (hk[d] - w_.h_mean[d]) / w_.h_scale[d];
        std::copy(h_.begin(), h_.end(), v + 3);
        std::copy(h_.begin(), h_.end(), hp);
        simd::matvec(w_.params.data() + l.wz, w_.params.data() + l.bz, v, pre_z.data(), H, in);
        simd::matvec(w_.params.data() + l.wc, w_.params.data() + l.bc, v, pre_c.data(), H, in);
        for (std::size_t i = 0; i < H; ++i) {
            z[i] = sigmoid(pre_z[i]);
            c[i] = std::tanh(pre_c[i]);
            h_[i] = hp[i] + z[i] * (c[i] - hp[i]);
        }
    }
}

Vec3 NetEvaluator::head(double dt, const core::Point& s) {
    const auto l = w_.layout();
    xin_[0] = (std::log(dt + w_.time_offset) - w_.x_mean[0]) / w_.x_scale[0];
    xin_[1] = (s.x - w_.x_mean[1]) / w_.x_scale[1];
    xin_[2] = (s.y - w_.x_mean[2]) / w_.x_scale[2];
    std::copy(h_.begin(), h_.end(), xin_.begin() + 3);
    const std::size_t in = xin_.size();
    simd::matvec(w_.params.data() + l.w1, w_.params.data() + l.b1, xin_.data(), act_.data(), W_, in);
    for (auto& a : act_) a = std::tanh(a);
    Vec3 out{};
    simd::matvec(w_.params.data() + l.w2, w_.params.data() + l.b2, act_.data(), out.data(), 3, W_);
    for (auto& o : out) o *= w_.output_scale;
    return out;
}

void NetEvaluator::backward(const Vec3& dl_df, std::vector<double>& grad) {
    const auto l = w_.layout();
    const std::size_t H = H_, W = W_;
    const std::size_t head_in = xin_.size();
    const double* p = w_.params.data();

    double dout[3];
    for (int k = 0; k < 3; ++k) dout[k] = dl_df[k] * w_.output_scale;
    std::vector<double> dact(W, 0.0);
    for (int k = 0; k < 3; ++k) {
        grad[l.b2 + k] += dout[k];
        for (std::size_t i = 0; i < W; ++i) {
            grad[l.w2 + k * W + i] += dout[k] * act_[i];
            dact[i] += p[l.w2 + k * W + i] * dout[k];
        }
    }
    std::vector<double> dxin(head_in, 0.0);
    for (std::size_t i = 0; i < W; ++i) {
        const double dpre = dact[i] * (1.0 - act_[i] * act_[i]);
        grad[l.b1 + i] += dpre;
        for (std::size_t j = 0; j < head_in; ++j) {
            grad[l.w1 + i * head_in + j] += dpre * xin_[j];
            dxin[j] += p[l.w1 + i * head_in + j] * dpre;
        }
    }

    const std::size_t in = NetWeights::kHistoryDim + H;
    const std::size_t stride = in + 3 * H;
    std::vector<double> dh(dxin.begin() + 3, dxin.end());
    std::vector<double> dprev(H), dpz(H), dpc(H);
    for (std::size_t k = n_steps_; k-- > 0;) {
        const double* v = steps_.data() + k * stride;
        const double* z = v + in;
        const double* c = z + H;
        const double* hp = c + H;
        for (std::size_t i = 0; i < H; ++i) {
            const double dz = dh[i] * (c[i] - hp[i]);
            const double dc = dh[i] * z[i];
            dprev[i] = dh[i] * (1.0 - z[i]);
            dpz[i] = dz * z[i] * (1.0 - z[i]);
            dpc[i] = dc * (1.0 - c[i] * c[i]);
        }
        for (std::size_t i = 0; i < H; ++i) {
            grad[l.bz + i] += dpz[i];
            grad[l.bc + i] += dpc[i];
            for (std::size_t j = 0; j < in; ++j) {
                grad[l.wz + i * in + j] += dpz[i] * v[j];
                grad[l.wc + i * in + j] += dpc[i] * v[j];
                if (j >= 3) dprev[j - 3] += p[l.wz + i * in + j] * dpz[i] + p[l.wc + i * in + j] * dpc[i];
            }
        }
        dh = dprev;
    }
}

NeuralScoreModel::NeuralScoreModel(NetWeights weights, double delta, core::Domain domain,
                                   std::size_t max_history)
    : weights_(std::move(weights)), delta_(delta), domain_(domain), max_history_(max_history) {
    if (!(delta > 0.0)) throw ConfigError("score model: delta must be positive");
    if (weights_.params.size() != weights_.parameter_count())
        throw ConfigError("neural score model: parameter vector has the wrong size");
}

Vec3 NeuralScoreModel::score(const ScoreInput& in) const {
    NetEvaluator ev(weights_);
    ev.encode(make_sample(in, max_history_));
    return ev.head(in.dt(), in.s);
}

std::unique_ptr<ScoreModel> NeuralScoreModel::clone() const {
    return std::make_unique<NeuralScoreModel>(*this);
}

json NeuralScoreModel::checkpoint() const {
    json j = weights_.to_json();
    j["delta"] = delta_;
    j["max_history"] = max_history_;
    j["domain"] = io::domain_to_json(domain_);
    return j;
}

NeuralScoreModel NeuralScoreModel::from_checkpoint(const json& j) {
    try {
        return NeuralScoreModel(NetWeights::from_json(j), j.at("delta").get<double>(),
                                io::domain_from_json(j.at("domain")),
                                j.at("max_history").get<std::size_t>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
}

void DSMConfig::validate() const {
    if (!(sigma > 0.0)) throw ConfigError("dsm: sigma must be > 0");
    if (!(learning_rate > 0.0)) throw ConfigError("dsm: learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("dsm: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("dsm: batch_size must be >= 1");
    if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0))
        throw ConfigError("dsm: final_lr_fraction must lie in (0, 1]");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("dsm: ema_decay must lie in [0, 1)");
    if (recurrent_width < 1 || hidden_width < 1) throw ConfigError("dsm: widths must be >= 1");
}

json dsm_config_to_json(const DSMConfig& c) {
    return {{"sigma", c.sigma},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"final_lr_fraction", c.final_lr_fraction},
            {"ema_decay", c.ema_decay},
            {"seed", c.seed},
            {"recurrent_width", c.recurrent_width},
            {"hidden_width", c.hidden_width},
            {"max_history", c.max_history}};
}

DSMConfig dsm_config_from_json(const json& j) {
    io::reject_unknown_keys(j,
                            {"sigma", "epochs", "batch_size", "learning_rate", "final_lr_fraction",
                             "ema_decay", "seed", "recurrent_width", "hidden_width", "max_history"},
                            "dsm");
    DSMConfig c;
    try {
        c.sigma = j.value("sigma", c.sigma);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.final_lr_fraction = j.value("final_lr_fraction", c.final_lr_fraction);
        c.ema_decay = j.value("ema_decay", c.ema_decay);
        c.seed = j.value("seed", c.seed);
        c.recurrent_width = j.value("recurrent_width", c.recurrent_width);
        c.hidden_width = j.value("hidden_width", c.hidden_width);
        c.max_history = j.value("max_history", c.max_history);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("dsm: ") + e.what());
    }
    c.validate();
    return c;
}

double dsm_loss(const ScoreModel& model, const ScoreInput& in, const Vec3& eps, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("dsm_loss: sigma must be > 0");
    ScoreInput x = in;
    const double dt = std::max(0.0, in.dt() + eps[0]);
    x.t = in.t_n + dt;
    x.s.x += eps[1];
    x.s.y += eps[2];
    const Vec3 f = model.score(x);
    double loss = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double r = f[k] + eps[k] / (sigma * sigma);
        loss += r * r;
    }
    return loss;
}

namespace {

// Loss and gradient contribution of one noisy copy of `p`.
double accumulate_point(NetEvaluator& ev, const DSMPoint& p, const Vec3& eps, double sigma,
                        double delta, std::size_t max_history, std::vector<double>& grad) {
    const NetSample sample = perturbed_sample(p, eps, delta, max_history);
    ev.encode(sample);
    const Vec3 f = ev.head(sample.dt, sample.s);
    Vec3 dl{};
    double loss = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double r = f[k] + eps[k] / (sigma * sigma);
        loss += r * r;
        dl[k] = 2.0 * r;
    }
    ev.backward(dl, grad);
    return loss;
}

void set_normalization(NetWeights& w, const std::vector<NetSample>& samples, double sigma) {
    w.time_offset = sigma;
    std::array<double, 3> xs{}, xss{}, hs{}, hss{};
    std::size_t nh = 0;
    for (const auto& s : samples) {
        const double v[3] = {std::log(s.dt + w.time_offset), s.s.x, s.s.y};
        for (int d = 0; d < 3; ++d) {
            xs[d] += v[d];
            xss[d] += v[d] * v[d];
        }
        for (const auto& h : s.history) {
            const double u[3] = {std::log(h[0] + w.time_offset), h[1], h[2]};
            for (int d = 0; d < 3; ++d) {
                hs[d] += u[d];
                hss[d] += u[d] * u[d];
            }
            ++nh;
        }
    }
    const double n = static_cast<double>(samples.size());
    for (int d = 0; d < 3; ++d) {
        w.x_mean[d] = xs[d] / n;
        w.x_scale[d] = std::sqrt(std::max(xss[d] / n - w.x_mean[d] * w.x_mean[d], 0.0)) + 1e-12;
        if (nh > 0) {
            w.h_mean[d] = hs[d] / nh;
            w.h_scale[d] = std::sqrt(std::max(hss[d] / nh - w.h_mean[d] * w.h_mean[d], 0.0)) + 1e-12;
        }
        if (w.x_scale[d] < 1e-9) w.x_scale[d] = 1.0;
        if (w.h_scale[d] < 1e-9) w.h_scale[d] = 1.0;
    }
    w.output_scale = 1.0 / sigma;
}

}  // namespace

TrainingResult train_score_model(const core::EventStream& data, double delta,
                                 const core::Domain& domain, const DSMConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw ConfigError("train_score_model: training data is empty");

    const auto points = make_dsm_points(data, delta, domain, cfg.sigma, cfg.max_history);
    std::vector<NetSample> samples;
    samples.reserve(points.size());
    for (const auto& p : points) samples.push_back(perturbed_sample(p, {0, 0, 0}, delta, cfg.max_history));

    auto rng = sim::make_rng(cfg.seed, 0);
    NetWeights w = NetWeights::initialize(cfg.recurrent_width, cfg.hidden_width, rng);
    set_normalization(w, samples, cfg.sigma);

    const std::size_t P = w.parameter_count();
    std::vector<double> grad(P), m1(P, 0.0), m2(P, 0.0);
    std::vector<double> avg = w.params;
    const double b1 = 0.9, b2 = 0.999, eps_adam = 1e-8;
    std::normal_distribution<double> noise(0.0, cfg.sigma);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    const std::size_t batches_per_epoch = (samples.size() + cfg.batch_size - 1) / cfg.batch_size;
    const double total_steps = static_cast<double>(batches_per_epoch) * cfg.epochs;
    std::size_t step = 0;
    std::vector<double> trace;
    NetEvaluator ev(w);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const Vec3 eps{noise(rng), noise(rng), noise(rng)};
                batch_loss += accumulate_point(ev, points[order[k]], eps, cfg.sigma, delta,
                                               cfg.max_history, grad);
            }
            if (!std::isfinite(batch_loss))
                throw DivergenceError("DSM training diverged (non-finite loss); try a smaller learning_rate");
            epoch_loss += batch_loss;
            const double inv = 1.0 / static_cast<double>(end - start);
            ++step;
            const double frac = static_cast<double>(step - 1) / std::max(1.0, total_steps - 1);
            const double lr = cfg.learning_rate * (1.0 - (1.0 - cfg.final_lr_fraction) * frac);
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
            for (std::size_t i = 0; i < P; ++i) {
                const double g = grad[i] * inv;
                m1[i] = b1 * m1[i] + (1.0 - b1) * g;
                m2[i] = b2 * m2[i] + (1.0 - b2) * g * g;
                w.params[i] -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps_adam);
            }
            // Bias-corrected average: early steps are not dominated by the initial weights.
            const double d = std::min(cfg.ema_decay, (1.0 + step) / (10.0 + step));
            for (std::size_t i = 0; i < P; ++i) avg[i] = d * avg[i] + (1.0 - d) * w.params[i];
        }
        trace.push_back(epoch_loss / static_cast<double>(samples.size()));
    }
    w.params = std::move(avg);
    return TrainingResult{NeuralScoreModel(std::move(w), delta, domain, cfg.max_history), std::move(trace)};
}

double dsm_gradient_step(NeuralScoreModel& model, const std::vector<const DSMPoint*>& points,
                         double sigma, double eta, std::mt19937_64& rng) {
    if (points.empty()) return 0.0;
    NetWeights& w = model.mutable_weights();
    std::vector<double> grad(w.parameter_count(), 0.0);
    std::normal_distribution<double> noise(0.0, sigma);
    NetEvaluator ev(w);
    double loss = 0.0;
    for (const auto* p : points) {
        const Vec3 eps{noise(rng), noise(rng), noise(rng)};
        loss += accumulate_point(ev, *p, eps, sigma, model.delta(), model.max_history(), grad);
    }
    loss /= static_cast<double>(points.size());
    if (!std::isfinite(loss))
        throw DivergenceError("online DSM update diverged (non-finite loss); reduce the learning rate");
    const double scale = eta / static_cast<double>(points.size());
    for (std::size_t i = 0; i < grad.size(); ++i) w.params[i] -= scale * grad[i];
    for (double v : w.params)
        if (!std::isfinite(v))
            throw DivergenceError("online DSM update produced non-finite weights; reduce the learning rate");
    return loss;
}

void write_loss_trace_csv(const std::string& path, const std::vector<double>& trace) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "epoch,loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < trace.size(); ++i) out << i + 1 << ',' << trace[i] << '\n';
}

}  // namespace stpp::score
