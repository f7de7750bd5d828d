#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nclosure/closure.hpp"
#include "nclosure/train.hpp"

namespace ncm {

/// Unreadable checkpoint, or one that does not match the configured model.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    std::string experiment;
    std::string fingerprint;
    std::uint64_t config_hash = 0;
    std::size_t theta_count = 0;
    TrainState state;
    std::vector<EpochRecord> history;
};

/// Closure kind, delays and network layer lists of a system.
std::string system_fingerprint(const AugmentedSystem& sys);

/// JSON document; doubles are written in shortest round-trip form. Written via a temporary and renamed.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Throws CheckpointError when the fingerprint or parameter count differ from `sys`.
void check_compatible(const Checkpoint& ckpt, const AugmentedSystem& sys);

}  // namespace ncm
