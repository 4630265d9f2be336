#include "flagforge/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace flagforge {

void zero_grads(std::vector<Tensor>& params) {
    for (Tensor& p : params) p.grad().assign(p.size(), 0.0);
}

void adam_step(std::vector<Tensor>& params, AdamState& state) {
    if (state.m.empty()) {
        for (const Tensor& p : params) {
            state.m.emplace_back(p.size(), 0.0);
            state.v.emplace_back(p.size(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw ShapeMismatch("adam_step: state does not match parameter list");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        if (state.m[pi].size() != p.size())
            throw ShapeMismatch("adam_step: moment shape mismatch");
        const auto& g = p.grad();
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        auto& w = p.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (state.weight_decay != 0.0) w[i] -= state.lr * state.weight_decay * w[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            w[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

double grad_check(const std::function<Tensor()>& forward, std::vector<Tensor> params,
                  double h, std::uint64_t subsample_seed) {
    Tensor loss = forward();
    backward(loss);
    std::vector<std::vector<double>> analytic;
    std::size_t total = 0;
    for (Tensor& p : params) {
        analytic.push_back(p.grad());
        total += p.size();
    }

    const std::size_t kMaxCoords = 10000;
    Rng rng(subsample_seed);
    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (total > kMaxCoords &&
                rng.uniform() > static_cast<double>(kMaxCoords) / static_cast<double>(total))
                continue;
            double saved = p.data()[i];
            p.data()[i] = saved + h;
            double lp = forward().item();
            p.data()[i] = saved - h;
            double lm = forward().item();
            p.data()[i] = saved;
            double numeric = (lp - lm) / (2.0 * h);
            double a = analytic[pi][i];
            double diff = std::fabs(a - numeric);
            // Absolute floor swallows float noise on exactly-zero gradients.
            if (diff < 1e-9) continue;
            worst = std::max(worst, diff / (std::fabs(a) + std::fabs(numeric) + 1e-8));
        }
    }
    return worst;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

constexpr char kMagic[8] = {'F', 'G', 'C', 'K', '0', '0', '0', '1'};

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::ordered_json header;
    header["version"] = 1;
    header["seed"] = ckpt.seed;
    header["config_hash"] = ckpt.config_hash;
    auto params = nlohmann::ordered_json::array();
    for (const auto& [name, t] : ckpt.params)
        params.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
    header["params"] = params;
    header["adam"] = {{"step", ckpt.adam.step},
                      {"lr", ckpt.adam.lr},
                      {"beta1", ckpt.adam.beta1},
                      {"beta2", ckpt.adam.beta2},
                      {"eps", ckpt.adam.eps},
                      {"weight_decay", ckpt.adam.weight_decay}};
    header["has_moments"] = !ckpt.adam.m.empty();
    std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kMagic, sizeof(kMagic));
    std::uint64_t len = hs.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, t] : ckpt.params) write_doubles(out, t.data());
    if (!ckpt.adam.m.empty()) {
        for (const auto& m : ckpt.adam.m) write_doubles(out, m);
        for (const auto& v : ckpt.adam.v) write_doubles(out, v);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a flagforge checkpoint: " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string hs(len, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(len));
    auto header = nlohmann::ordered_json::parse(hs);

    Checkpoint ckpt;
    ckpt.seed = header["seed"].get<std::uint64_t>();
    ckpt.config_hash = header["config_hash"].get<std::string>();
    ckpt.adam.step = header["adam"]["step"].get<long>();
    ckpt.adam.lr = header["adam"]["lr"].get<double>();
    ckpt.adam.beta1 = header["adam"]["beta1"].get<double>();
    ckpt.adam.beta2 = header["adam"]["beta2"].get<double>();
    ckpt.adam.eps = header["adam"]["eps"].get<double>();
    ckpt.adam.weight_decay = header["adam"]["weight_decay"].get<double>();
    for (const auto& pj : header["params"]) {
        Tensor t = Tensor::zeros(pj["rows"].get<std::size_t>(), pj["cols"].get<std::size_t>(), true);
        read_doubles(in, t.data());
        ckpt.params.emplace_back(pj["name"].get<std::string>(), t);
    }
    if (header.value("has_moments", false)) {
        for (const auto& [name, t] : ckpt.params) {
            ckpt.adam.m.emplace_back(t.size(), 0.0);
            read_doubles(in, ckpt.adam.m.back());
        }
        for (const auto& [name, t] : ckpt.params) {
            ckpt.adam.v.emplace_back(t.size(), 0.0);
            read_doubles(in, ckpt.adam.v.back());
        }
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return ckpt;
}

}  // namespace flagforge
