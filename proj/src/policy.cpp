#include "tracksmith/policy.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace tracksmith {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)

double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 - tanh(u)^2), stable for large |u|.
double log1m_tanh2(double u) {
    double a = std::abs(u);
    return 2.0 * (std::log(2.0) - a - softplus(-2.0 * a));
}

}  // namespace

MlpPolicy::MlpPolicy(PolicySpec spec) : spec_(std::move(spec)) {
    if (spec_.obs_dim <= 0 || spec_.hidden.empty()) {
        throw std::invalid_argument("policy needs obs_dim > 0 and at least one hidden layer");
    }
    if (static_cast<int>(spec_.act_lo.size()) != spec_.n_continuous ||
        static_cast<int>(spec_.act_hi.size()) != spec_.n_continuous) {
        throw std::invalid_argument("act_lo/act_hi must match n_continuous");
    }
    layout();
}

void MlpPolicy::layout() {
    sizes_.clear();
    sizes_.push_back(spec_.obs_dim);
    for (int h : spec_.hidden) sizes_.push_back(h);

    int off = 0;
    int layers = static_cast<int>(sizes_.size()) - 1;
    w_off_.resize(layers);
    b_off_.resize(layers);
    for (int l = 0; l < layers; ++l) {
        w_off_[l] = off;
        off += sizes_[l + 1] * sizes_[l];
        b_off_[l] = off;
        off += sizes_[l + 1];
    }
    int hidden = sizes_.back();
    mean_w_ = off;
    off += spec_.n_continuous * hidden;
    mean_b_ = off;
    off += spec_.n_continuous;
    logit_w_ = off;
    off += spec_.n_binary * hidden;
    logit_b_ = off;
    off += spec_.n_binary;
    value_w_ = off;
    off += hidden;
    value_b_ = off;
    off += 1;
    log_std_off_ = off;
    off += spec_.n_continuous;
    theta_.assign(off, 0.0);
}

void MlpPolicy::init_weights(Rng& rng) {
    int layers = static_cast<int>(sizes_.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        double s = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1]));
        for (int i = 0; i < sizes_[l + 1] * sizes_[l]; ++i) {
            theta_[w_off_[l] + i] = rng.uniform(-s, s);
        }
        for (int i = 0; i < sizes_[l + 1]; ++i) theta_[b_off_[l] + i] = 0.0;
    }
    int hidden = sizes_.back();
    // Near-zero action heads keep the initial policy close to uniform over
    // the squashed range; the value head starts at normal scale.
    for (int i = 0; i < spec_.n_continuous * hidden; ++i) theta_[mean_w_ + i] = rng.uniform(-0.01, 0.01);
    for (int i = 0; i < spec_.n_continuous; ++i) theta_[mean_b_ + i] = 0.0;
    for (int i = 0; i < spec_.n_binary * hidden; ++i) theta_[logit_w_ + i] = rng.uniform(-0.01, 0.01);
    for (int i = 0; i < spec_.n_binary; ++i) theta_[logit_b_ + i] = 0.0;
    double sv = std::sqrt(6.0 / (hidden + 1));
    for (int i = 0; i < hidden; ++i) theta_[value_w_ + i] = rng.uniform(-sv, sv);
    theta_[value_b_] = 0.0;
    for (int i = 0; i < spec_.n_continuous; ++i) theta_[log_std_off_ + i] = -0.5;
}

void MlpPolicy::forward_cached(const double* obs, ForwardCache& cache) const {
    int layers = static_cast<int>(sizes_.size()) - 1;
    cache.acts.resize(layers + 1);
    cache.acts[0].assign(obs, obs + spec_.obs_dim);
    for (int l = 0; l < layers; ++l) {
        const double* W = theta_.data() + w_off_[l];
        const double* b = theta_.data() + b_off_[l];
        const std::vector<double>& in = cache.acts[l];
        std::vector<double>& out = cache.acts[l + 1];
        out.assign(sizes_[l + 1], 0.0);
        for (int i = 0; i < sizes_[l + 1]; ++i) {
            double z = b[i];
            const double* row = W + i * sizes_[l];
            for (int j = 0; j < sizes_[l]; ++j) z += row[j] * in[j];
            out[i] = std::tanh(z);
        }
    }
    const std::vector<double>& h = cache.acts[layers];
    int hidden = sizes_.back();
    HeadOut& o = cache.out;
    o.mean.assign(spec_.n_continuous, 0.0);
    for (int i = 0; i < spec_.n_continuous; ++i) {
        double z = theta_[mean_b_ + i];
        const double* row = theta_.data() + mean_w_ + i * hidden;
        for (int j = 0; j < hidden; ++j) z += row[j] * h[j];
        o.mean[i] = z;
    }
    o.logit.assign(spec_.n_binary, 0.0);
    for (int i = 0; i < spec_.n_binary; ++i) {
        double z = theta_[logit_b_ + i];
        const double* row = theta_.data() + logit_w_ + i * hidden;
        for (int j = 0; j < hidden; ++j) z += row[j] * h[j];
        o.logit[i] = z;
    }
    double v = theta_[value_b_];
    for (int j = 0; j < hidden; ++j) v += theta_[value_w_ + j] * h[j];
    o.value = v;
    o.log_std.assign(theta_.begin() + log_std_off_, theta_.begin() + log_std_off_ + spec_.n_continuous);
}

HeadOut MlpPolicy::forward(const std::vector<double>& obs) const {
    if (static_cast<int>(obs.size()) != spec_.obs_dim) {
        throw std::invalid_argument("observation length mismatch");
    }
    ForwardCache cache;
    forward_cached(obs.data(), cache);
    return cache.out;
}

void MlpPolicy::backward(const ForwardCache& cache, const HeadGrad& g, std::vector<double>& grad) const {
    assert(grad.size() == theta_.size());
    int layers = static_cast<int>(sizes_.size()) - 1;
    int hidden = sizes_.back();
    const std::vector<double>& h = cache.acts[layers];

    std::vector<double> dh(hidden, 0.0);
    for (int i = 0; i < spec_.n_continuous; ++i) {
        double gi = g.d_mean[i];
        double* Wg = grad.data() + mean_w_ + i * hidden;
        const double* W = theta_.data() + mean_w_ + i * hidden;
        for (int j = 0; j < hidden; ++j) {
            Wg[j] += gi * h[j];
            dh[j] += gi * W[j];
        }
        grad[mean_b_ + i] += gi;
        grad[log_std_off_ + i] += g.d_log_std[i];
    }
    for (int i = 0; i < spec_.n_binary; ++i) {
        double gi = g.d_logit[i];
        double* Wg = grad.data() + logit_w_ + i * hidden;
        const double* W = theta_.data() + logit_w_ + i * hidden;
        for (int j = 0; j < hidden; ++j) {
            Wg[j] += gi * h[j];
            dh[j] += gi * W[j];
        }
        grad[logit_b_ + i] += gi;
    }
    {
        double gv = g.d_value;
        double* Wg = grad.data() + value_w_;
        const double* W = theta_.data() + value_w_;
        for (int j = 0; j < hidden; ++j) {
            Wg[j] += gv * h[j];
            dh[j] += gv * W[j];
        }
        grad[value_b_] += gv;
    }

    // Trunk, back to front. d(tanh)/dz = 1 - a^2 with a the cached output.
    std::vector<double> d_out = dh;
    for (int l = layers - 1; l >= 0; --l) {
        const std::vector<double>& a = cache.acts[l + 1];
        const std::vector<double>& in = cache.acts[l];
        std::vector<double> d_in(sizes_[l], 0.0);
        const double* W = theta_.data() + w_off_[l];
        double* Wg = grad.data() + w_off_[l];
        for (int i = 0; i < sizes_[l + 1]; ++i) {
            double dz = d_out[i] * (1.0 - a[i] * a[i]);
            const double* row = W + i * sizes_[l];
            double* rowg = Wg + i * sizes_[l];
            for (int j = 0; j < sizes_[l]; ++j) {
                rowg[j] += dz * in[j];
                d_in[j] += dz * row[j];
            }
            grad[b_off_[l] + i] += dz;
        }
        d_out = std::move(d_in);
    }
}

double squash_to_range(double u, const PolicySpec& spec, int i) {
    double t = std::tanh(u);
    return spec.act_lo[i] + 0.5 * (t + 1.0) * (spec.act_hi[i] - spec.act_lo[i]);
}

ActionSample sample_action(const HeadOut& out, const PolicySpec& spec, Rng& rng) {
    ActionSample s;
    s.u.resize(spec.n_continuous);
    s.bin.resize(spec.n_binary);
    s.env.reserve(spec.n_continuous + spec.n_binary);
    for (int i = 0; i < spec.n_continuous; ++i) {
        double sigma = std::exp(out.log_std[i]);
        s.u[i] = out.mean[i] + sigma * rng.normal();
        s.env.push_back(squash_to_range(s.u[i], spec, i));
    }
    for (int i = 0; i < spec.n_binary; ++i) {
        double p = sigmoid(out.logit[i]);
        s.bin[i] = rng.uniform() < p ? 1.0 : 0.0;
        s.env.push_back(s.bin[i]);
    }
    s.log_prob = action_log_prob(out, spec, s.u, s.bin);
    return s;
}

ActionSample greedy_action(const HeadOut& out, const PolicySpec& spec) {
    ActionSample s;
    s.u = out.mean;
    s.bin.resize(spec.n_binary);
    for (int i = 0; i < spec.n_continuous; ++i) s.env.push_back(squash_to_range(s.u[i], spec, i));
    for (int i = 0; i < spec.n_binary; ++i) {
        s.bin[i] = out.logit[i] >= 0.0 ? 1.0 : 0.0;
        s.env.push_back(s.bin[i]);
    }
    s.log_prob = action_log_prob(out, spec, s.u, s.bin);
    return s;
}

double action_log_prob(const HeadOut& out, const PolicySpec& spec, const std::vector<double>& u,
                       const std::vector<double>& bin) {
    double lp = 0.0;
    for (int i = 0; i < spec.n_continuous; ++i) {
        double sigma = std::exp(out.log_std[i]);
        double z = (u[i] - out.mean[i]) / sigma;
        lp += -0.5 * z * z - out.log_std[i] - 0.5 * kLogTwoPi;
        lp -= log1m_tanh2(u[i]);
        lp -= std::log(0.5 * (spec.act_hi[i] - spec.act_lo[i]));
    }
    for (int i = 0; i < spec.n_binary; ++i) {
        // log p for x=1 is -softplus(-l); for x=0 it is -softplus(l).
        lp += bin[i] > 0.5 ? -softplus(-out.logit[i]) : -softplus(out.logit[i]);
    }
    return lp;
}

double action_log_prob_grad(const HeadOut& out, const PolicySpec& spec, const std::vector<double>& u,
                            const std::vector<double>& bin, double scale, HeadGrad& g) {
    double lp = 0.0;
    for (int i = 0; i < spec.n_continuous; ++i) {
        double sigma = std::exp(out.log_std[i]);
        double z = (u[i] - out.mean[i]) / sigma;
        lp += -0.5 * z * z - out.log_std[i] - 0.5 * kLogTwoPi;
        lp -= log1m_tanh2(u[i]);
        lp -= std::log(0.5 * (spec.act_hi[i] - spec.act_lo[i]));
        // d lp / d mean = z / sigma; d lp / d log_std = z^2 - 1 (u held fixed).
        g.d_mean[i] += scale * z / sigma;
        g.d_log_std[i] += scale * (z * z - 1.0);
    }
    for (int i = 0; i < spec.n_binary; ++i) {
        double p = sigmoid(out.logit[i]);
        double x = bin[i] > 0.5 ? 1.0 : 0.0;
        lp += x > 0.5 ? -softplus(-out.logit[i]) : -softplus(out.logit[i]);
        g.d_logit[i] += scale * (x - p);
    }
    return lp;
}

double entropy(const HeadOut& out, const PolicySpec& spec) {
    double h = 0.0;
    for (int i = 0; i < spec.n_continuous; ++i) h += out.log_std[i] + 0.5 * (kLogTwoPi + 1.0);
    for (int i = 0; i < spec.n_binary; ++i) {
        double l = out.logit[i];
        // H = softplus(l) - l * sigmoid(l), stable both tails.
        h += softplus(l) - l * sigmoid(l);
    }
    return h;
}

double entropy_grad(const HeadOut& out, const PolicySpec& spec, double coef, HeadGrad& g) {
    double h = 0.0;
    for (int i = 0; i < spec.n_continuous; ++i) {
        h += out.log_std[i] + 0.5 * (kLogTwoPi + 1.0);
        g.d_log_std[i] += coef;
    }
    for (int i = 0; i < spec.n_binary; ++i) {
        double l = out.logit[i];
        double p = sigmoid(l);
        h += softplus(l) - l * p;
        g.d_logit[i] += coef * (-l * p * (1.0 - p));
    }
    return h;
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (m.size() != params.size()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
    }
    ++t;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        double mhat = m[i] / c1;
        double vhat = v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         const std::vector<std::uint8_t>& dones, double bootstrap_value, double gamma,
         double lambda, std::vector<double>* advantages, std::vector<double>* returns) {
    std::size_t n = rewards.size();
    assert(values.size() == n && dones.size() == n);
    advantages->assign(n, 0.0);
    returns->assign(n, 0.0);
    double next_adv = 0.0;
    double next_value = bootstrap_value;
    for (std::size_t k = n; k-- > 0;) {
        double nonterm = dones[k] ? 0.0 : 1.0;
        double delta = rewards[k] + gamma * next_value * nonterm - values[k];
        next_adv = delta + gamma * lambda * nonterm * next_adv;
        (*advantages)[k] = next_adv;
        (*returns)[k] = next_adv + values[k];
        next_value = values[k];
    }
}

}  // namespace tracksmith
