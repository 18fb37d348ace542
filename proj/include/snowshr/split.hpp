#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "snowshr/errors.hpp"
#include "snowshr/rng.hpp"

namespace snowshr {

struct SplitConfig {
    double train_fraction = 0.9;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<std::string> train, test;
};

// Seeded shuffle then cut. Train size is round-half-up of fraction*N, so
// 1155 ids at 0.9 give 1040 train / 115 test.
inline Split split_ids(std::vector<std::string> ids, const SplitConfig& cfg) {
    if (ids.empty()) throw InputError("split_ids: empty id list");
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw ConfigError("split_ids: train fraction must be in (0,1)");
    Rng rng(cfg.seed);
    rng.shuffle(ids);
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(cfg.train_fraction * static_cast<double>(ids.size()) + 0.5));
    Split out;
    out.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
    return out;
}

}  // namespace snowshr
