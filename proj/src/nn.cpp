#include "nclosure/nn.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace ncm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double act_value(Activation a, double z) {
    switch (a) {
        case Activation::Tanh: return std::tanh(z);
        case Activation::Swish: return z * sigmoid(z);
        case Activation::Linear: break;
    }
    return z;
}

double act_slope(Activation a, double z) {
    switch (a) {
        case Activation::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::Swish: {
            const double s = sigmoid(z);
            return s * (1.0 + z * (1.0 - s));
        }
        case Activation::Linear: break;
    }
    return 1.0;
}

Vec activate(Activation a, const Vec& z) {
    Vec y(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) y[i] = act_value(a, z[i]);
    return y;
}

/// In place: g ← g ⊙ act'(z)
void backprop_act(Activation a, const Vec& z, Vec& g) {
    if (a == Activation::Linear) return;
    for (std::size_t i = 0; i < z.size(); ++i) g[i] *= act_slope(a, z[i]);
}

// Weight layout for convolutions: w[(j * cin + i) * cout + o].
void conv_forward(const double* x, std::size_t len, std::size_t cin, const double* w, std::size_t k,
                  std::size_t cout, bool flip, double* z) {
    const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(k - 1) / 2;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(len);
    for (std::ptrdiff_t p = 0; p < n; ++p) {
        double* zp = z + p * static_cast<std::ptrdiff_t>(cout);
        for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j);
            const std::ptrdiff_t q = flip ? p - jj + c : p + jj - c;
            if (q < 0 || q >= n) continue;
            const double* xq = x + q * static_cast<std::ptrdiff_t>(cin);
            for (std::size_t i = 0; i < cin; ++i) {
                const double xv = xq[i];
                const double* wr = w + (j * cin + i) * cout;
                for (std::size_t o = 0; o < cout; ++o) zp[o] += wr[o] * xv;
            }
        }
    }
}

void conv_backward(const double* x, std::size_t len, std::size_t cin, const double* w, std::size_t k,
                   std::size_t cout, bool flip, const double* gz, double* gx, double* gw) {
    const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(k - 1) / 2;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(len);
    for (std::ptrdiff_t p = 0; p < n; ++p) {
        const double* gp = gz + p * static_cast<std::ptrdiff_t>(cout);
        for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j);
            const std::ptrdiff_t q = flip ? p - jj + c : p + jj - c;
            if (q < 0 || q >= n) continue;
            const double* xq = x + q * static_cast<std::ptrdiff_t>(cin);
            double* gxq = gx ? gx + q * static_cast<std::ptrdiff_t>(cin) : nullptr;
            for (std::size_t i = 0; i < cin; ++i) {
                const double* wr = w + (j * cin + i) * cout;
                double acc = 0.0;
                if (gw) {
                    double* gwr = gw + (j * cin + i) * cout;
                    for (std::size_t o = 0; o < cout; ++o) gwr[o] += gp[o] * xq[i];
                }
                if (gxq) {
                    for (std::size_t o = 0; o < cout; ++o) acc += wr[o] * gp[o];
                    gxq[i] += acc;
                }
            }
        }
    }
}

void add_bias(Vec& z, std::size_t len, std::size_t ch, const double* b) {
    for (std::size_t p = 0; p < len; ++p)
        for (std::size_t o = 0; o < ch; ++o) z[p * ch + o] += b[o];
}

void accumulate_bias(const Vec& gz, std::size_t len, std::size_t ch, double* gb) {
    for (std::size_t p = 0; p < len; ++p)
        for (std::size_t o = 0; o < ch; ++o) gb[o] += gz[p * ch + o];
}

// Dense layout: W[o * in + i] followed by b[o].
void dense_forward(const double* x, std::size_t in, const double* w, std::size_t out, double* z) {
    for (std::size_t o = 0; o < out; ++o) {
        const double* wr = w + o * in;
        double acc = 0.0;
        for (std::size_t i = 0; i < in; ++i) acc += wr[i] * x[i];
        z[o] += acc;
    }
}

void dense_backward(const double* x, std::size_t in, const double* w, std::size_t out, const double* gz, double* gx,
                    double* gw) {
    for (std::size_t o = 0; o < out; ++o) {
        const double* wr = w + o * in;
        const double g = gz[o];
        if (gw) {
            double* gwr = gw + o * in;
            for (std::size_t i = 0; i < in; ++i) gwr[i] += g * x[i];
        }
        if (gx)
            for (std::size_t i = 0; i < in; ++i) gx[i] += g * wr[i];
    }
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument(msg);
}

}  // namespace

Activation parse_activation(const std::string& name) {
    if (name == "linear" || name == "none") return Activation::Linear;
    if (name == "tanh") return Activation::Tanh;
    if (name == "swish") return Activation::Swish;
    throw InvalidArgument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Swish: return "swish";
        case Activation::Linear: break;
    }
    return "linear";
}

std::size_t layer_param_count(const LayerSpec& layer, Shape) {
    return std::visit(overloaded{
                          [](const Dense& l) { return l.in * l.out + l.out; },
                          [](const SimpleRnnCell& l) { return l.in * l.hidden + l.hidden * l.hidden + l.hidden; },
                          [](const ConvRnnCell& l) {
                              return l.kernel * l.in_ch * l.hidden + 2 * (l.kernel * l.hidden * l.hidden + l.hidden);
                          },
                          [](const Conv1d& l) { return l.kernel * l.in_ch * l.out_ch + l.out_ch; },
                          [](const Conv1dTranspose& l) { return l.kernel * l.in_ch * l.out_ch + l.out_ch; },
                          [](const AddExtraChannels&) { return std::size_t{0}; },
                          [](const BioConstrain&) { return std::size_t{1}; },
                      },
                      layer);
}

Network::Network(Shape input, std::vector<LayerSpec> layers) : input_(input), layers_(std::move(layers)) {
    require(input.len > 0 && input.ch > 0, "network input shape must be positive");
    require(!layers_.empty(), "network needs at least one layer");
    shapes_.push_back(input);
    for (std::size_t idx = 0; idx < layers_.size(); ++idx) {
        const Shape s = shapes_.back();
        const std::string where = "layer " + std::to_string(idx) + ": ";
        const Shape next = std::visit(
            overloaded{
                [&](const Dense& l) {
                    require(l.in > 0 && l.out > 0, where + "dense dimensions must be positive");
                    require(l.in == s.size(), where + "dense input size mismatch");
                    return Shape{1, l.out};
                },
                [&](const SimpleRnnCell& l) {
                    require(idx == 0, where + "recurrent cell must be the first layer");
                    require(l.in > 0 && l.hidden > 0, where + "rnn dimensions must be positive");
                    require(l.in == s.size(), where + "rnn input size mismatch");
                    return Shape{1, l.hidden};
                },
                [&](const ConvRnnCell& l) {
                    require(idx == 0, where + "recurrent cell must be the first layer");
                    require(l.in_ch > 0 && l.hidden > 0, where + "conv rnn dimensions must be positive");
                    require(l.kernel % 2 == 1, where + "kernel size must be odd");
                    require(l.in_ch == s.ch, where + "conv rnn channel mismatch");
                    return Shape{s.len, l.hidden};
                },
                [&](const Conv1d& l) {
                    require(l.in_ch > 0 && l.out_ch > 0, where + "conv dimensions must be positive");
                    require(l.kernel % 2 == 1, where + "kernel size must be odd");
                    require(l.in_ch == s.ch, where + "conv channel mismatch");
                    return Shape{s.len, l.out_ch};
                },
                [&](const Conv1dTranspose& l) {
                    require(l.in_ch > 0 && l.out_ch > 0, where + "conv dimensions must be positive");
                    require(l.kernel % 2 == 1, where + "kernel size must be odd");
                    require(l.in_ch == s.ch, where + "conv channel mismatch");
                    return Shape{s.len, l.out_ch};
                },
                [&](const AddExtraChannels&) { return Shape{s.len, s.ch + 2}; },
                [&](const BioConstrain&) {
                    require(s.ch == 1, where + "bio constraint expects one channel");
                    return Shape{s.len, 3};
                },
            },
            layers_[idx]);
        offsets_.push_back(n_params_);
        n_params_ += layer_param_count(layers_[idx], s);
        shapes_.push_back(next);
    }
}

bool Network::recurrent() const {
    return std::holds_alternative<SimpleRnnCell>(layers_.front()) ||
           std::holds_alternative<ConvRnnCell>(layers_.front());
}

std::string Network::fingerprint() const {
    std::ostringstream os;
    os << "in=" << input_.len << "x" << input_.ch;
    for (const LayerSpec& layer : layers_) {
        os << ";";
        std::visit(overloaded{
                       [&](const Dense& l) { os << "dense(" << l.in << "->" << l.out << "," << to_string(l.act) << ")"; },
                       [&](const SimpleRnnCell& l) {
                           os << "rnn(" << l.in << "->" << l.hidden << "," << to_string(l.act) << ")";
                       },
                       [&](const ConvRnnCell& l) {
                           os << "conv_rnn(" << l.in_ch << "->" << l.hidden << ",k" << l.kernel << ","
                              << to_string(l.act) << ")";
                       },
                       [&](const Conv1d& l) {
                           os << "conv(" << l.in_ch << "->" << l.out_ch << ",k" << l.kernel << "," << to_string(l.act)
                              << ")";
                       },
                       [&](const Conv1dTranspose& l) {
                           os << "conv_t(" << l.in_ch << "->" << l.out_ch << ",k" << l.kernel << ","
                              << to_string(l.act) << ")";
                       },
                       [&](const AddExtraChannels&) { os << "extra_channels"; },
                       [&](const BioConstrain&) { os << "bio_constrain"; },
                   },
                   layer);
    }
    return os.str();
}

struct Network::Tape {
    std::vector<Vec> inputs;  // input to each layer (layer 0 unused for recurrent nets)
    std::vector<Vec> pre;     // pre-activation of each weighted layer
    // Recurrent first layer
    std::vector<Vec> xs;  // sequence inputs
    std::vector<Vec> hs;  // hs[k] = hidden after k steps, hs[0] = 0
    std::vector<Vec> zs;  // pre-activations per step
    Vec h_final;
};

void Network::check_theta(std::span<const double> theta) const {
    if (theta.size() != n_params_)
        throw InvalidArgument("parameter vector has " + std::to_string(theta.size()) + " entries, network needs " +
                              std::to_string(n_params_));
}

void Network::run(const std::vector<Vec>& seq, std::span<const double> theta, const EvalContext* ctx, Tape* tape,
                  Vec& out) const {
    check_theta(theta);
    require(!seq.empty(), "input sequence is empty");
    for (const Vec& x : seq) require(x.size() == input_.size(), "network input size mismatch");
    require(recurrent() || seq.size() == 1, "feed-forward network takes a single input");

    if (tape) {
        tape->inputs.assign(layers_.size(), Vec{});
        tape->pre.assign(layers_.size(), Vec{});
    }
    Vec cur = seq.front();
    for (std::size_t idx = 0; idx < layers_.size(); ++idx) {
        const Shape s = shapes_[idx];
        const Shape o = shapes_[idx + 1];
        const double* p = theta.data() + offsets_[idx];
        if (tape) tape->inputs[idx] = cur;
        std::visit(
            overloaded{
                [&](const Dense& l) {
                    Vec z(p + l.in * l.out, p + l.in * l.out + l.out);
                    dense_forward(cur.data(), l.in, p, l.out, z.data());
                    cur = activate(l.act, z);
                    if (tape) tape->pre[idx] = std::move(z);
                },
                [&](const SimpleRnnCell& l) {
                    const double* wx = p;
                    const double* wh = p + l.in * l.hidden;
                    const double* b = wh + l.hidden * l.hidden;
                    Vec h(l.hidden, 0.0);
                    if (tape) {
                        tape->xs = seq;
                        tape->hs.assign(1, h);
                        tape->zs.clear();
                    }
                    for (const Vec& x : seq) {
                        Vec z(b, b + l.hidden);
                        dense_forward(x.data(), l.in, wx, l.hidden, z.data());
                        dense_forward(h.data(), l.hidden, wh, l.hidden, z.data());
                        h = activate(l.act, z);
                        if (tape) {
                            tape->zs.push_back(std::move(z));
                            tape->hs.push_back(h);
                        }
                    }
                    cur = std::move(h);
                },
                [&](const ConvRnnCell& l) {
                    const std::size_t len = s.len;
                    const double* kx = p;
                    const double* kh = kx + l.kernel * l.in_ch * l.hidden;
                    const double* b = kh + l.kernel * l.hidden * l.hidden;
                    const double* ko = b + l.hidden;
                    const double* bo = ko + l.kernel * l.hidden * l.hidden;
                    Vec h(len * l.hidden, 0.0);
                    if (tape) {
                        tape->xs = seq;
                        tape->hs.assign(1, h);
                        tape->zs.clear();
                    }
                    for (const Vec& x : seq) {
                        Vec z(len * l.hidden, 0.0);
                        add_bias(z, len, l.hidden, b);
                        conv_forward(x.data(), len, l.in_ch, kx, l.kernel, l.hidden, false, z.data());
                        conv_forward(h.data(), len, l.hidden, kh, l.kernel, l.hidden, false, z.data());
                        h = activate(l.act, z);
                        if (tape) {
                            tape->zs.push_back(std::move(z));
                            tape->hs.push_back(h);
                        }
                    }
                    Vec z(len * l.hidden, 0.0);
                    add_bias(z, len, l.hidden, bo);
                    conv_forward(h.data(), len, l.hidden, ko, l.kernel, l.hidden, false, z.data());
                    cur = activate(l.act, z);
                    if (tape) tape->pre[idx] = std::move(z);
                },
                [&](const Conv1d& l) {
                    Vec z(o.size(), 0.0);
                    add_bias(z, s.len, l.out_ch, p + l.kernel * l.in_ch * l.out_ch);
                    conv_forward(cur.data(), s.len, l.in_ch, p, l.kernel, l.out_ch, false, z.data());
                    cur = activate(l.act, z);
                    if (tape) tape->pre[idx] = std::move(z);
                },
                [&](const Conv1dTranspose& l) {
                    Vec z(o.size(), 0.0);
                    add_bias(z, s.len, l.out_ch, p + l.kernel * l.in_ch * l.out_ch);
                    conv_forward(cur.data(), s.len, l.in_ch, p, l.kernel, l.out_ch, true, z.data());
                    cur = activate(l.act, z);
                    if (tape) tape->pre[idx] = std::move(z);
                },
                [&](const AddExtraChannels&) {
                    if (!ctx || ctx->depth.size() != s.len || ctx->irradiance.size() != s.len)
                        throw InvalidArgument("extra-channel layer needs depth and irradiance of length " +
                                              std::to_string(s.len));
                    Vec y(o.size());
                    for (std::size_t q = 0; q < s.len; ++q) {
                        for (std::size_t c = 0; c < s.ch; ++c) y[q * o.ch + c] = cur[q * s.ch + c];
                        y[q * o.ch + s.ch] = ctx->depth[q];
                        y[q * o.ch + s.ch + 1] = ctx->irradiance[q];
                    }
                    cur = std::move(y);
                },
                [&](const BioConstrain&) {
                    const double beta = p[0];
                    Vec y(o.size());
                    for (std::size_t q = 0; q < s.len; ++q) {
                        const double v = cur[q];
                        y[3 * q] = beta * v;
                        y[3 * q + 1] = -v;
                        y[3 * q + 2] = (1.0 - beta) * v;
                    }
                    cur = std::move(y);
                },
            },
            layers_[idx]);
    }
    out = std::move(cur);
}

Vec Network::forward(std::span<const double> x, std::span<const double> theta, const EvalContext* ctx) const {
    Vec out;
    run({Vec(x.begin(), x.end())}, theta, ctx, nullptr, out);
    return out;
}

Vec Network::rnn_forward(const std::vector<Vec>& seq, std::span<const double> theta, const EvalContext* ctx) const {
    Vec out;
    run(seq, theta, ctx, nullptr, out);
    return out;
}

Network::Gradients Network::vjp(const std::vector<Vec>& seq, std::span<const double> theta, std::span<const double> w,
                                const EvalContext* ctx, bool want_dx, bool want_dtheta) const {
    Tape tape;
    Vec out;
    run(seq, theta, ctx, &tape, out);
    require(w.size() == out.size(), "cotangent size mismatch");

    Gradients grads;
    if (want_dtheta) grads.dtheta.assign(n_params_, 0.0);
    Vec g(w.begin(), w.end());

    for (std::size_t idx = layers_.size(); idx-- > 0;) {
        const Shape s = shapes_[idx];
        const double* p = theta.data() + offsets_[idx];
        double* gp = want_dtheta ? grads.dtheta.data() + offsets_[idx] : nullptr;
        // Gradient w.r.t. the layer input is skipped for the first layer unless requested.
        const bool need_gx = idx > 0 || want_dx;
        const Vec& x = tape.inputs[idx];
        std::visit(
            overloaded{
                [&](const Dense& l) {
                    backprop_act(l.act, tape.pre[idx], g);
                    Vec gx(need_gx ? l.in : 0, 0.0);
                    dense_backward(x.data(), l.in, p, l.out, g.data(), need_gx ? gx.data() : nullptr, gp);
                    if (gp)
                        for (std::size_t o = 0; o < l.out; ++o) gp[l.in * l.out + o] += g[o];
                    g = std::move(gx);
                },
                [&](const SimpleRnnCell& l) {
                    const double* wx = p;
                    const double* wh = p + l.in * l.hidden;
                    double* gwx = gp;
                    double* gwh = gp ? gp + l.in * l.hidden : nullptr;
                    double* gb = gp ? gwh + l.hidden * l.hidden : nullptr;
                    const std::size_t n = tape.xs.size();
                    if (want_dx) grads.dx.assign(n, Vec(l.in, 0.0));
                    Vec gh = std::move(g);
                    for (std::size_t k = n; k-- > 0;) {
                        Vec gz = gh;
                        backprop_act(l.act, tape.zs[k], gz);
                        dense_backward(tape.xs[k].data(), l.in, wx, l.hidden, gz.data(),
                                       want_dx ? grads.dx[k].data() : nullptr, gwx);
                        Vec ghp(l.hidden, 0.0);
                        dense_backward(tape.hs[k].data(), l.hidden, wh, l.hidden, gz.data(), ghp.data(), gwh);
                        if (gb)
                            for (std::size_t o = 0; o < l.hidden; ++o) gb[o] += gz[o];
                        gh = std::move(ghp);
                    }
                    g.clear();
                },
                [&](const ConvRnnCell& l) {
                    const std::size_t len = s.len;
                    const std::size_t kx_n = l.kernel * l.in_ch * l.hidden;
                    const std::size_t kh_n = l.kernel * l.hidden * l.hidden;
                    const double* kx = p;
                    const double* kh = kx + kx_n;
                    const double* ko = kh + kh_n + l.hidden;
                    double* gkx = gp;
                    double* gkh = gp ? gp + kx_n : nullptr;
                    double* gb = gp ? gkh + kh_n : nullptr;
                    double* gko = gp ? gb + l.hidden : nullptr;
                    double* gbo = gp ? gko + kh_n : nullptr;
                    const std::size_t n = tape.xs.size();
                    // Output convolution
                    backprop_act(l.act, tape.pre[idx], g);
                    if (gbo) accumulate_bias(g, len, l.hidden, gbo);
                    Vec gh(len * l.hidden, 0.0);
                    conv_backward(tape.hs[n].data(), len, l.hidden, ko, l.kernel, l.hidden, false, g.data(),
                                  gh.data(), gko);
                    if (want_dx) grads.dx.assign(n, Vec(len * l.in_ch, 0.0));
                    for (std::size_t k = n; k-- > 0;) {
                        Vec gz = gh;
                        backprop_act(l.act, tape.zs[k], gz);
                        if (gb) accumulate_bias(gz, len, l.hidden, gb);
                        conv_backward(tape.xs[k].data(), len, l.in_ch, kx, l.kernel, l.hidden, false, gz.data(),
                                      want_dx ? grads.dx[k].data() : nullptr, gkx);
                        Vec ghp(len * l.hidden, 0.0);
                        conv_backward(tape.hs[k].data(), len, l.hidden, kh, l.kernel, l.hidden, false, gz.data(),
                                      ghp.data(), gkh);
                        gh = std::move(ghp);
                    }
                    g.clear();
                },
                [&](const Conv1d& l) {
                    backprop_act(l.act, tape.pre[idx], g);
                    if (gp) accumulate_bias(g, s.len, l.out_ch, gp + l.kernel * l.in_ch * l.out_ch);
                    Vec gx(need_gx ? s.size() : 0, 0.0);
                    conv_backward(x.data(), s.len, l.in_ch, p, l.kernel, l.out_ch, false, g.data(),
                                  need_gx ? gx.data() : nullptr, gp);
                    g = std::move(gx);
                },
                [&](const Conv1dTranspose& l) {
                    backprop_act(l.act, tape.pre[idx], g);
                    if (gp) accumulate_bias(g, s.len, l.out_ch, gp + l.kernel * l.in_ch * l.out_ch);
                    Vec gx(need_gx ? s.size() : 0, 0.0);
                    conv_backward(x.data(), s.len, l.in_ch, p, l.kernel, l.out_ch, true, g.data(),
                                  need_gx ? gx.data() : nullptr, gp);
                    g = std::move(gx);
                },
                [&](const AddExtraChannels&) {
                    const std::size_t och = s.ch + 2;
                    Vec gx(s.size());
                    for (std::size_t q = 0; q < s.len; ++q)
                        for (std::size_t c = 0; c < s.ch; ++c) gx[q * s.ch + c] = g[q * och + c];
                    g = std::move(gx);
                },
                [&](const BioConstrain&) {
                    const double beta = p[0];
                    Vec gx(s.len);
                    double gbeta = 0.0;
                    for (std::size_t q = 0; q < s.len; ++q) {
                        gx[q] = beta * g[3 * q] - g[3 * q + 1] + (1.0 - beta) * g[3 * q + 2];
                        gbeta += x[q] * (g[3 * q] - g[3 * q + 2]);
                    }
                    if (gp) gp[0] += gbeta;
                    g = std::move(gx);
                },
            },
            layers_[idx]);
    }
    if (want_dx && !recurrent()) grads.dx.assign(1, std::move(g));
    return grads;
}

Vec Network::vjp_input(std::span<const double> x, std::span<const double> theta, std::span<const double> w,
                       const EvalContext* ctx) const {
    Gradients g = vjp({Vec(x.begin(), x.end())}, theta, w, ctx, true, false);
    return std::move(g.dx.front());
}

Vec Network::vjp_params(std::span<const double> x, std::span<const double> theta, std::span<const double> w,
                        const EvalContext* ctx) const {
    return vjp({Vec(x.begin(), x.end())}, theta, w, ctx, false, true).dtheta;
}

Vec Network::init_params(std::uint64_t seed, bool zero_final) const {
    std::mt19937_64 rng(seed);
    Vec theta(n_params_, 0.0);
    auto glorot = [&](double* w, std::size_t n, double fan_in, double fan_out) {
        const double lim = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> ud(-lim, lim);
        for (std::size_t i = 0; i < n; ++i) w[i] = ud(rng);
    };
    std::size_t last_weighted = layers_.size();
    for (std::size_t idx = 0; idx < layers_.size(); ++idx) {
        double* p = theta.data() + offsets_[idx];
        std::visit(overloaded{
                       [&](const Dense& l) {
                           glorot(p, l.in * l.out, double(l.in), double(l.out));
                           last_weighted = idx;
                       },
                       [&](const SimpleRnnCell& l) {
                           glorot(p, l.in * l.hidden, double(l.in), double(l.hidden));
                           glorot(p + l.in * l.hidden, l.hidden * l.hidden, double(l.hidden), double(l.hidden));
                           last_weighted = idx;
                       },
                       [&](const ConvRnnCell& l) {
                           const double k = double(l.kernel);
                           const std::size_t kx_n = l.kernel * l.in_ch * l.hidden;
                           const std::size_t kh_n = l.kernel * l.hidden * l.hidden;
                           glorot(p, kx_n, k * l.in_ch, k * l.hidden);
                           glorot(p + kx_n, kh_n, k * l.hidden, k * l.hidden);
                           glorot(p + kx_n + kh_n + l.hidden, kh_n, k * l.hidden, k * l.hidden);
                           last_weighted = idx;
                       },
                       [&](const Conv1d& l) {
                           const double k = double(l.kernel);
                           glorot(p, l.kernel * l.in_ch * l.out_ch, k * l.in_ch, k * l.out_ch);
                           last_weighted = idx;
                       },
                       [&](const Conv1dTranspose& l) {
                           const double k = double(l.kernel);
                           glorot(p, l.kernel * l.in_ch * l.out_ch, k * l.out_ch, k * l.in_ch);
                           last_weighted = idx;
                       },
                       [&](const AddExtraChannels&) {},
                       [&](const BioConstrain&) { p[0] = 0.5; },
                   },
                   layers_[idx]);
    }
    if (zero_final && last_weighted < layers_.size()) {
        const std::size_t n = layer_param_count(layers_[last_weighted], shapes_[last_weighted]);
        std::fill_n(theta.begin() + static_cast<std::ptrdiff_t>(offsets_[last_weighted]), n, 0.0);
    }
    return theta;
}

namespace {

using A = Activation;

std::vector<LayerSpec> conv_chain(std::initializer_list<std::size_t> widths, std::size_t k, A act) {
    std::vector<LayerSpec> out;
    auto it = widths.begin();
    std::size_t prev = *it++;
    for (; it != widths.end(); ++it) {
        out.push_back(Conv1d{prev, *it, k, act});
        prev = *it;
    }
    return out;
}

std::vector<LayerSpec> concat(std::vector<LayerSpec> a, const std::vector<LayerSpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

const std::map<std::string, Network>& table() {
    static const std::map<std::string, Network> nets = [] {
        std::map<std::string, Network> m;
        const A T = A::Tanh, S = A::Swish, L = A::Linear;

        m["exp1/node/f"] = Network({1, 3}, {Dense{3, 5, T}, Dense{5, 5, T}, Dense{5, 5, T}, Dense{5, 5, T},
                                            Dense{5, 5, T}, Dense{5, 3, L}});
        m["exp1/discrete/f"] = Network({1, 3}, {SimpleRnnCell{3, 5, T}, Dense{5, 3, L}});
        m["exp1/distributed/f"] = Network({1, 5}, {Dense{5, 5, T}, Dense{5, 5, T}, Dense{5, 3, L}});
        m["exp1/distributed/g"] = Network({1, 3}, {Dense{3, 3, T}, Dense{3, 3, T}, Dense{3, 2, L}});

        m["exp2/node/f"] = Network(
            {25, 1}, {Conv1d{1, 4, 3, S}, Conv1d{4, 5, 3, S}, Conv1d{5, 5, 3, S}, Conv1d{5, 5, 3, S},
                      Conv1d{5, 5, 3, S}, Conv1dTranspose{5, 3, 3, S}, Conv1dTranspose{3, 2, 3, S},
                      Conv1dTranspose{2, 2, 3, S}, Conv1dTranspose{2, 2, 3, S}, Conv1dTranspose{2, 1, 3, L}});
        m["exp2/discrete/f"] = Network(
            {25, 1}, {ConvRnnCell{1, 3, 3, S}, Conv1d{3, 2, 3, S}, Conv1dTranspose{2, 2, 3, S},
                      Conv1dTranspose{2, 1, 3, L}});
        m["exp2/distributed/f"] = Network(
            {25, 2}, {Conv1d{2, 4, 3, S}, Conv1d{4, 5, 3, S}, Conv1d{5, 5, 3, S}, Conv1dTranspose{5, 3, 3, S},
                      Conv1dTranspose{3, 2, 3, S}, Conv1dTranspose{2, 1, 3, L}});
        m["exp2/distributed/g"] = Network(
            {25, 1}, {Conv1d{1, 2, 3, S}, Conv1d{2, 3, 3, S}, Conv1dTranspose{3, 3, 3, S},
                      Conv1dTranspose{3, 1, 3, L}});

        m["exp3a/node/f"] = Network({1, 3}, {Dense{3, 7, T}, Dense{7, 7, T}, Dense{7, 7, T}, Dense{7, 7, T},
                                             Dense{7, 7, T}, Dense{7, 7, T}, Dense{7, 1, L}, BioConstrain{}});
        m["exp3a/discrete/f"] =
            Network({1, 3}, {SimpleRnnCell{3, 7, T}, Dense{7, 7, T}, Dense{7, 1, L}, BioConstrain{}});
        m["exp3a/distributed/f"] =
            Network({1, 7}, {Dense{7, 7, T}, Dense{7, 7, T}, Dense{7, 1, L}, BioConstrain{}});
        m["exp3a/distributed/g"] = Network({1, 3}, {Dense{3, 5, T}, Dense{5, 5, T}, Dense{5, 4, L}});

        m["exp3b/node/f"] = Network(
            {20, 3}, concat(concat({AddExtraChannels{}}, conv_chain({5, 5, 7, 9, 11, 13, 13, 11, 9, 7, 5, 3}, 1, S)),
                            {Conv1d{3, 1, 1, L}, BioConstrain{}}));
        m["exp3b/discrete/f"] = Network(
            {20, 3}, concat(concat({ConvRnnCell{3, 5, 1, S}, AddExtraChannels{}}, conv_chain({7, 7, 9, 9, 7, 5, 3}, 1, S)),
                            {Conv1d{3, 1, 1, L}, BioConstrain{}}));
        m["exp3b/distributed/f"] = Network(
            {20, 5}, concat(concat({AddExtraChannels{}}, conv_chain({7, 7, 9, 9, 7, 5, 3}, 1, S)),
                            {Conv1d{3, 1, 1, L}, BioConstrain{}}));
        m["exp3b/distributed/g"] =
            Network({20, 3}, concat(conv_chain({3, 3, 5, 7, 5}, 1, S), {Conv1d{5, 2, 1, L}}));
        return m;
    }();
    return nets;
}

}  // namespace

Network table_architecture(const std::string& key) {
    const auto& t = table();
    auto it = t.find(key);
    if (it == t.end()) throw InvalidArgument("unknown architecture '" + key + "'");
    return it->second;
}

std::vector<std::string> table_architecture_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, v] : table()) keys.push_back(k);
    return keys;
}

}  // namespace ncm
