#include "nclosure/experiment/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace ncm {

namespace {

constexpr const char* kFormat = "nclosure-checkpoint";
constexpr int kVersion = 1;

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt_list(const Vec& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

/// JSON has no non-finite numbers; those are stored as strings.
nlohmann::json loss_value(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double read_loss(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw CheckpointError("bad loss value '" + s + "'");
}

}  // namespace

std::string system_fingerprint(const AugmentedSystem& sys) {
    const ClosureSpec& c = sys.closure();
    std::string s = std::string("kind=") + to_string(c.kind) + ";dim=" + std::to_string(sys.state_dim());
    switch (c.kind) {
        case ClosureKind::None: break;
        case ClosureKind::Markovian: s += ";f=" + c.f.fingerprint(); break;
        case ClosureKind::Discrete: s += ";delays=" + fmt_list(c.delays) + ";f=" + c.f.fingerprint(); break;
        case ClosureKind::Distributed:
            s += ";window=" + fmt_list({c.tau1, c.tau2}) + ";f=" + c.f.fingerprint() + ";g=" + c.g.fingerprint();
            break;
    }
    return s;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    nlohmann::json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["experiment"] = ck.experiment;
    j["fingerprint"] = ck.fingerprint;
    j["config_hash"] = hex64(ck.config_hash);
    j["epoch"] = ck.state.epoch;
    j["theta_count"] = ck.theta_count;
    j["params"] = ck.state.params;
    j["optimizer"] = {{"rho", ck.state.opt.rho},
                      {"epsilon", ck.state.opt.epsilon},
                      {"step", ck.state.opt.step},
                      {"s", ck.state.opt.s}};
    std::ostringstream rng;
    rng << ck.state.rng;
    j["rng"] = rng.str();
    nlohmann::json hist = nlohmann::json::array();
    for (const EpochRecord& r : ck.history)
        hist.push_back({{"epoch", r.epoch},
                        {"train_loss", loss_value(r.train_loss)},
                        {"val_loss", loss_value(r.val_loss)},
                        {"lr", r.lr}});
    j["history"] = hist;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write checkpoint '" + tmp + "'");
        out << j.dump(1) << '\n';
        if (!out) throw std::runtime_error("failed writing checkpoint '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    Checkpoint ck;
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        if (j.at("format") != kFormat) throw CheckpointError("'" + path + "' is not a checkpoint");
        if (j.at("version").get<int>() != kVersion) throw CheckpointError("unsupported checkpoint version");
        ck.experiment = j.at("experiment").get<std::string>();
        ck.fingerprint = j.at("fingerprint").get<std::string>();
        ck.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
        ck.state.epoch = j.at("epoch").get<std::size_t>();
        ck.theta_count = j.at("theta_count").get<std::size_t>();
        ck.state.params = j.at("params").get<Vec>();
        const auto& o = j.at("optimizer");
        ck.state.opt.rho = o.at("rho").get<double>();
        ck.state.opt.epsilon = o.at("epsilon").get<double>();
        ck.state.opt.step = o.at("step").get<std::uint64_t>();
        ck.state.opt.s = o.at("s").get<Vec>();
        std::istringstream rng(j.at("rng").get<std::string>());
        rng >> ck.state.rng;
        if (!rng) throw CheckpointError("corrupt rng state");
        for (const auto& h : j.at("history"))
            ck.history.push_back({h.at("epoch").get<std::size_t>(), read_loss(h.at("train_loss")),
                                  read_loss(h.at("val_loss")), h.at("lr").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("malformed checkpoint '" + path + "': " + e.what());
    }
    if (!ck.state.opt.s.empty() && ck.state.opt.s.size() != ck.state.params.size())
        throw CheckpointError("checkpoint optimizer state and parameters differ in size");
    return ck;
}

void check_compatible(const Checkpoint& ck, const AugmentedSystem& sys) {
    const std::string fp = system_fingerprint(sys);
    if (ck.fingerprint != fp)
        throw CheckpointError("checkpoint architecture does not match the configuration\n  checkpoint: " +
                              ck.fingerprint + "\n  configured: " + fp);
    if (ck.state.params.size() != sys.param_count() || ck.theta_count != sys.theta_count())
        throw CheckpointError("checkpoint parameter count does not match the configured closure");
}

}  // namespace ncm
