#pragma once

#include <fstream>

#include <json.hpp>

#include "gazerl/adam.hpp"
#include "gazerl/qnet.hpp"

namespace gazerl::nn {

constexpr const char* kCheckpointFormat = "gazerl-net-v1";

namespace detail {

template <class Real>
nlohmann::json real_array(const std::vector<Real>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Real x : v) a.push_back(static_cast<double>(x));
    return a;
}

template <class Real>
void load_real_array(const nlohmann::json& a, std::vector<Real>& v, std::size_t expect,
                     const char* what) {
    if (!a.is_array() || a.size() != expect)
        throw std::runtime_error(std::string("checkpoint: bad size for ") + what);
    v.resize(expect);
    for (std::size_t i = 0; i < expect; ++i) v[i] = static_cast<Real>(a[i].get<double>());
}

}  // namespace detail

inline nlohmann::json spec_to_json(const NetSpec& s) {
    return {{"arch", arch_name(s.arch)},     {"vis_flat", s.vis_flat},
            {"aud_flat", s.aud_flat},        {"hidden", s.hidden},
            {"window", s.window},            {"motor_skip_only", s.motor_skip_only}};
}

inline NetSpec spec_from_json(const nlohmann::json& j) {
    NetSpec s;
    s.arch = arch_from_name(j.at("arch").get<std::string>());
    s.vis_flat = j.at("vis_flat").get<int>();
    s.aud_flat = j.at("aud_flat").get<int>();
    s.hidden = j.at("hidden").get<int>();
    s.window = j.at("window").get<int>();
    s.motor_skip_only = j.at("motor_skip_only").get<bool>();
    return s;
}

/// Serializes the full training state: weights, batch-norm running
/// statistics and, when given, the optimizer moments. Values round-trip
/// exactly (doubles are printed with max_digits10).
template <class Real>
inline void save_checkpoint(const QNet<Real>& net, const Adam<Real>* opt, long long env_steps,
                            const std::string& path) {
    nlohmann::json j{{"format", kCheckpointFormat},
                     {"spec", spec_to_json(net.spec)},
                     {"env_steps", env_steps},
                     {"params", detail::real_array(net.params)},
                     {"bn_running_mean", detail::real_array(net.bn_running_mean)},
                     {"bn_running_var", detail::real_array(net.bn_running_var)}};
    if (opt) {
        j["adam"] = {{"t", opt->t},
                     {"lr", opt->lr},
                     {"beta1", opt->beta1},
                     {"beta2", opt->beta2},
                     {"eps", opt->eps},
                     {"m", detail::real_array(opt->m)},
                     {"v", detail::real_array(opt->v)}};
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump() << "\n";
}

template <class Real>
inline long long load_checkpoint(const std::string& path, QNet<Real>& net, Adam<Real>* opt) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": bad checkpoint JSON: " + e.what());
    }
    if (j.value("format", "") != kCheckpointFormat)
        throw std::runtime_error(path + ": unknown checkpoint format");
    net.spec = spec_from_json(j.at("spec"));
    net.allocate();
    detail::load_real_array(j.at("params"), net.params, net.layout.total, "params");
    detail::load_real_array(j.at("bn_running_mean"), net.bn_running_mean,
                            static_cast<std::size_t>(net.spec.bn_width()), "bn_running_mean");
    detail::load_real_array(j.at("bn_running_var"), net.bn_running_var,
                            static_cast<std::size_t>(net.spec.bn_width()), "bn_running_var");
    if (opt && j.contains("adam")) {
        const auto& a = j.at("adam");
        opt->t = a.at("t").get<long long>();
        opt->lr = a.at("lr").get<double>();
        opt->beta1 = a.at("beta1").get<double>();
        opt->beta2 = a.at("beta2").get<double>();
        opt->eps = a.at("eps").get<double>();
        detail::load_real_array(a.at("m"), opt->m, net.layout.total, "adam.m");
        detail::load_real_array(a.at("v"), opt->v, net.layout.total, "adam.v");
    }
    return j.value("env_steps", 0LL);
}

}  // namespace gazerl::nn
