#include "nclosure/train.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace ncm {

SnapshotDataset::SnapshotDataset(std::vector<double> times, std::vector<Vec> states)
    : times_(std::move(times)), states_(std::move(states)) {
    if (times_.size() != states_.size()) throw InvalidArgument("dataset: times and states differ in length");
    if (times_.size() < 2) throw InvalidArgument("dataset: need at least two snapshots");
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1])) throw InvalidArgument("dataset: times must be strictly increasing");
        if (states_[i].size() != states_[0].size()) throw InvalidArgument("dataset: ragged states");
    }
    dt_ = (times_.back() - times_.front()) / static_cast<double>(times_.size() - 1);
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (std::abs(times_[i] - times_[i - 1] - dt_) > 1e-6 * dt_)
            throw InvalidArgument("dataset: snapshots must be uniformly spaced");
    const std::size_t n = times_.size();
    slopes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? i : i + 1;
        slopes_[i] = scaled(1.0 / (times_[b] - times_[a]), sub(states_[b], states_[a]));
    }
}

Vec SnapshotDataset::interpolate(double t) const {
    if (times_.empty()) throw InvalidArgument("dataset is empty");
    if (t <= times_.front()) return states_.front();
    if (t >= times_.back()) return states_.back();
    std::size_t k = static_cast<std::size_t>((t - times_.front()) / dt_);
    k = std::min(k, times_.size() - 2);
    const double h = times_[k + 1] - times_[k];
    const double s = (t - times_[k]) / h;
    if (s < 1e-13) return states_[k];
    if (s > 1.0 - 1e-13) return states_[k + 1];
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    const Vec &u0 = states_[k], &u1 = states_[k + 1], &f0 = slopes_[k], &f1 = slopes_[k + 1];
    Vec out(u0.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = h00 * u0[i] + h * h10 * f0[i] + h01 * u1[i] + h * h11 * f1[i];
    return out;
}

std::size_t SnapshotDataset::index_of(double t) const {
    if (times_.empty()) throw InvalidArgument("dataset is empty");
    const double k = std::round((t - times_.front()) / dt_);
    if (k < 0 || k >= static_cast<double>(times_.size()) ||
        std::abs(times_[static_cast<std::size_t>(k)] - t) > 1e-6 * dt_)
        throw InvalidArgument("time " + std::to_string(t) + " is not a snapshot time");
    return static_cast<std::size_t>(k);
}

namespace {

void require_aligned(const std::vector<Vec>& pred, const std::vector<Vec>& truth) {
    if (pred.size() != truth.size()) throw InvalidArgument("loss: prediction and truth counts differ");
    if (pred.empty()) throw InvalidArgument("loss: no samples");
    for (std::size_t i = 0; i < pred.size(); ++i) require_same_size(pred[i], truth[i], "loss");
}

}  // namespace

double loss_time_avg_l2(const std::vector<Vec>& pred, const std::vector<Vec>& truth) {
    require_aligned(pred, truth);
    double l = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) l += norm2(sub(pred[i], truth[i]));
    return l / static_cast<double>(pred.size());
}

double loss_depth_avg_l2(const std::vector<Vec>& pred, const std::vector<Vec>& truth, std::size_t species) {
    require_aligned(pred, truth);
    if (species == 0 || pred[0].size() % species != 0)
        throw InvalidArgument("depth-averaged loss: state size is not a multiple of the species count");
    const std::size_t L = pred[0].size() / species;
    double l = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t p = 0; p < L; ++p) {
            double s = 0.0;
            for (std::size_t c = 0; c < species; ++c) {
                const double r = pred[i][p * species + c] - truth[i][p * species + c];
                s += r * r;
            }
            l += std::sqrt(s);
        }
    return l / static_cast<double>(pred.size() * L);
}

double positivity_penalty(const std::vector<Vec>& pred, double weight) {
    if (weight == 0.0) return 0.0;
    double s = 0.0;
    std::size_t count = 0;
    for (const Vec& v : pred)
        for (double x : v) {
            if (x < 0) s += x * x;
            ++count;
        }
    return count == 0 ? 0.0 : weight * s / static_cast<double>(count);
}

LossValue evaluate_loss(const LossSpec& spec, const std::vector<Vec>& pred, const std::vector<Vec>& truth) {
    require_aligned(pred, truth);
    LossValue out;
    const double M = static_cast<double>(pred.size());
    out.grads.resize(pred.size());
    if (spec.kind == LossKind::TimeAvgL2) {
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const Vec r = sub(pred[i], truth[i]);
            const double nr = norm2(r);
            out.value += nr / M;
            out.grads[i] = nr > 0 ? scaled(1.0 / (nr * M), r) : Vec(r.size(), 0.0);
        }
    } else {
        const std::size_t sp = spec.species;
        if (sp == 0 || pred[0].size() % sp != 0)
            throw InvalidArgument("depth-averaged loss: state size is not a multiple of the species count");
        const std::size_t L = pred[0].size() / sp;
        const double w = 1.0 / (M * static_cast<double>(L));
        for (std::size_t i = 0; i < pred.size(); ++i) {
            out.grads[i].assign(pred[i].size(), 0.0);
            for (std::size_t p = 0; p < L; ++p) {
                double s = 0.0;
                for (std::size_t c = 0; c < sp; ++c) {
                    const double r = pred[i][p * sp + c] - truth[i][p * sp + c];
                    s += r * r;
                }
                const double nr = std::sqrt(s);
                out.value += w * nr;
                if (nr > 0)
                    for (std::size_t c = 0; c < sp; ++c)
                        out.grads[i][p * sp + c] = w * (pred[i][p * sp + c] - truth[i][p * sp + c]) / nr;
            }
        }
    }
    if (spec.positivity_weight != 0.0) {
        std::size_t count = 0;
        for (const Vec& v : pred) count += v.size();
        const double scale = 2.0 * spec.positivity_weight / static_cast<double>(count);
        out.value += positivity_penalty(pred, spec.positivity_weight);
        for (std::size_t i = 0; i < pred.size(); ++i)
            for (std::size_t k = 0; k < pred[i].size(); ++k)
                if (pred[i][k] < 0) out.grads[i][k] += scale * pred[i][k];
    }
    return out;
}

double lr_at(std::uint64_t step, const LrSchedule& schedule) {
    if (schedule.decay_steps <= 0) throw InvalidArgument("lr schedule: decay_steps must be positive");
    double e = static_cast<double>(step) / schedule.decay_steps;
    if (schedule.staircase) e = std::floor(e);
    return schedule.lr0 * std::pow(schedule.decay_rate, e);
}

void rmsprop_step(RmspropState& state, const LrSchedule& schedule, Vec& theta, std::span<const double> grad) {
    require_same_size(theta, grad, "rmsprop_step");
    if (state.s.empty()) state.s.assign(theta.size(), 0.0);
    require_same_size(state.s, grad, "rmsprop_step");
    const double lr = lr_at(state.step, schedule);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.s[i] = state.rho * state.s[i] + (1.0 - state.rho) * grad[i] * grad[i];
        theta[i] -= lr * grad[i] / (std::sqrt(state.s[i]) + state.epsilon);
    }
    ++state.step;
}

std::size_t iterations_per_epoch(std::size_t n_train_steps, std::size_t batch_size, std::size_t window_steps) {
    if (batch_size == 0 || window_steps == 0) throw InvalidArgument("iterations_per_epoch: zero batch or window");
    const std::size_t per = batch_size * window_steps;
    return (n_train_steps + per - 1) / per + 1;
}

std::vector<std::size_t> admissible_starts(const SnapshotDataset& data, IndexRange span, const BatchSpec& spec,
                                           double max_delay) {
    if (span.last >= data.size() || span.first > span.last) throw InvalidArgument("training span out of range");
    if (spec.window_steps == 0 || spec.stride == 0 || spec.stride > spec.window_steps)
        throw InvalidArgument("batch spec: need 0 < stride <= window_steps");
    std::vector<std::size_t> out;
    const double t_first = data.times()[span.first];
    const double tol = 1e-9 * std::max(1.0, data.dt());
    for (std::size_t i = span.first; i + spec.window_steps <= span.last; ++i)
        if (data.times()[i] - max_delay >= t_first - tol) out.push_back(i);
    if (out.empty())
        throw InvalidArgument("training span too short for a " + std::to_string(spec.window_steps) +
                              "-step window with delay history " + std::to_string(max_delay));
    return out;
}

std::vector<Window> sample_batch(const SnapshotDataset& data, IndexRange span, const BatchSpec& spec,
                                 double max_delay, std::mt19937_64& rng) {
    const std::vector<std::size_t> starts = admissible_starts(data, span, spec, max_delay);
    std::uniform_int_distribution<std::size_t> pick(0, starts.size() - 1);
    std::vector<Window> batch(spec.batch_size);
    for (Window& w : batch) {
        w.start = starts[pick(rng)];
        for (std::size_t k = spec.stride; k <= spec.window_steps; k += spec.stride) w.supervised.push_back(w.start + k);
    }
    return batch;
}

Trainer::Trainer(const AugmentedSystem& sys, const SnapshotDataset& data, TrainConfig cfg)
    : sys_(sys), data_(data), cfg_(std::move(cfg)) {
    if (data_.dim() != sys_.state_dim()) throw InvalidArgument("dataset state size does not match the model");
    admissible_starts(data_, cfg_.train_span, cfg_.batch, sys_.max_delay());
    if (cfg_.val_span.last >= data_.size() || cfg_.val_span.first >= cfg_.val_span.last)
        throw InvalidArgument("validation span out of range");
    validate(cfg_.forward_stepper);
    validate(cfg_.adjoint_stepper);
    iterations_ = cfg_.iterations_per_epoch != 0
                      ? cfg_.iterations_per_epoch
                      : iterations_per_epoch(cfg_.train_span.last - cfg_.train_span.first, cfg_.batch.batch_size,
                                             cfg_.batch.window_steps);
}

TrainState Trainer::initial_state(std::uint64_t seed) const {
    TrainState st;
    st.params = sys_.init_params(seed);
    st.opt.s.assign(st.params.size(), 0.0);
    st.opt.rho = cfg_.rho;
    st.opt.epsilon = cfg_.epsilon;
    st.rng.seed(seed ^ 0x5851f42d4c957f2dULL);
    return st;
}

Trainer::WindowResult Trainer::window_gradient(std::span<const double> params, const Window& w) const {
    const double t0 = data_.times()[w.start];
    std::vector<double> stops;
    std::vector<Vec> truth;
    for (std::size_t k : w.supervised) {
        stops.push_back(data_.times()[k]);
        truth.push_back(data_.states()[k]);
    }
    const HistoryFn history = [this](double t) { return data_.interpolate(t); };
    const Rollout fwd = sys_.forward(params, history, t0, stops.back(), stops, cfg_.forward_stepper);
    std::vector<Vec> pred;
    for (double t : stops) pred.push_back(fwd.state(t));
    const LossValue lv = evaluate_loss(cfg_.loss, pred, truth);
    if (!std::isfinite(lv.value))
        throw TrainingDiverged("non-finite loss on the window starting at t=" + std::to_string(t0));
    const ClosureKind kind = sys_.closure().kind;
    const bool plain = kind == ClosureKind::None || kind == ClosureKind::Markovian ||
                       (kind == ClosureKind::Discrete && sys_.closure().delays.empty());
    const AdjointResult adj = plain ? sys_.adjoint_markovian(params, fwd, stops, lv.grads, cfg_.adjoint_stepper)
                                    : sys_.adjoint(params, fwd, history, stops, lv.grads, cfg_.adjoint_stepper);
    return {lv.value, adj.gradient};
}

double Trainer::step(TrainState& state) const {
    const std::vector<Window> batch = sample_batch(data_, cfg_.train_span, cfg_.batch, sys_.max_delay(), state.rng);
    std::vector<WindowResult> results(batch.size());
    if (cfg_.threads > 1 && batch.size() > 1) {
        std::vector<std::future<WindowResult>> jobs;
        for (const Window& w : batch)
            jobs.push_back(std::async(std::launch::async, [&, w] { return window_gradient(state.params, w); }));
        for (std::size_t i = 0; i < jobs.size(); ++i) results[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < batch.size(); ++i) results[i] = window_gradient(state.params, batch[i]);
    }
    Vec grad(state.params.size(), 0.0);
    double loss = 0.0;
    for (const WindowResult& r : results) {
        axpy(1.0, r.grad, grad);
        loss += r.loss;
    }
    if (cfg_.mean_batch_gradient) grad = scaled(1.0 / static_cast<double>(batch.size()), grad);
    if (!all_finite(grad)) throw TrainingDiverged("non-finite gradient at optimizer step " + std::to_string(state.opt.step));
    rmsprop_step(state.opt, cfg_.schedule, state.params, grad);
    return loss / static_cast<double>(batch.size());
}

double Trainer::span_loss(std::span<const double> params, IndexRange span) const {
    if (span.last >= data_.size() || span.first >= span.last) throw InvalidArgument("span out of range");
    std::vector<double> stops;
    std::vector<Vec> truth;
    for (std::size_t k = span.first + 1; k <= span.last; ++k) {
        stops.push_back(data_.times()[k]);
        truth.push_back(data_.states()[k]);
    }
    const HistoryFn history = [this](double t) { return data_.interpolate(t); };
    try {
        const Rollout fwd =
            sys_.forward(params, history, data_.times()[span.first], stops.back(), stops, cfg_.forward_stepper);
        std::vector<Vec> pred;
        for (double t : stops) pred.push_back(fwd.state(t));
        return evaluate_loss(cfg_.loss, pred, truth).value;
    } catch (const IntegrationError&) {
        return std::numeric_limits<double>::infinity();
    }
}

EpochRecord Trainer::evaluate(const TrainState& state) const {
    EpochRecord r;
    r.epoch = state.epoch;
    r.train_loss = span_loss(state.params, cfg_.train_span);
    r.val_loss = span_loss(state.params, cfg_.val_span);
    r.lr = lr_at(state.opt.step, cfg_.schedule);
    return r;
}

EpochRecord Trainer::run_epoch(TrainState& state) const {
    for (std::size_t it = 0; it < iterations_; ++it) step(state);
    ++state.epoch;
    return evaluate(state);
}

Vec rmse_series(const std::vector<Vec>& pred, const std::vector<Vec>& truth) {
    require_aligned(pred, truth);
    Vec out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const Vec r = sub(pred[i], truth[i]);
        out[i] = std::sqrt(dot(r, r) / static_cast<double>(r.size()));
    }
    return out;
}

std::optional<double> avg_crosscorr(const std::vector<Vec>& pred, const std::vector<Vec>& truth) {
    require_aligned(pred, truth);
    const std::size_t n = pred.size(), d = pred[0].size();
    double total = 0.0;
    std::size_t defined = 0;
    for (std::size_t c = 0; c < d; ++c) {
        double mp = 0.0, mt = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mp += pred[i][c];
            mt += truth[i][c];
        }
        mp /= static_cast<double>(n);
        mt /= static_cast<double>(n);
        double spt = 0.0, spp = 0.0, stt = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = pred[i][c] - mp, b = truth[i][c] - mt;
            spt += a * b;
            spp += a * a;
            stt += b * b;
        }
        if (spp > 0 && stt > 0) {
            total += spt / std::sqrt(spp * stt);
            ++defined;
        }
    }
    if (defined == 0) return std::nullopt;
    return total / static_cast<double>(defined);
}

}  // namespace ncm
