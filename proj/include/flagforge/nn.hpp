#pragma once

#include <functional>
#include <utility>

#include "flagforge/tensor.hpp"

namespace flagforge {

/// Adam with decoupled weight decay (p -= lr*wd*p alongside the moment
/// update). Moment arrays are allocated lazily to match the parameters.
struct AdamState {
    long step = 0;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    std::vector<std::vector<double>> m, v;
};

void adam_step(std::vector<Tensor>& params, AdamState& state);
void zero_grads(std::vector<Tensor>& params);

/// Central-difference check of every parameter coordinate (random subsample
/// above 10k coordinates). Returns the worst relative error.
double grad_check(const std::function<Tensor()>& forward, std::vector<Tensor> params,
                  double h = 1e-5, std::uint64_t subsample_seed = 1);

struct Checkpoint {
    std::vector<std::pair<std::string, Tensor>> params;
    AdamState adam;
    std::uint64_t seed = 0;
    std::string config_hash;
};

/// Binary checkpoint: JSON header plus little-endian float64 arrays.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a(const std::string& s);

}  // namespace flagforge
