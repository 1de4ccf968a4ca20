#include "ribe/serialize.hpp"

#include "ribe/error.hpp"

#include <nlohmann/json.hpp>

namespace ribe {

using json = nlohmann::ordered_json;

namespace {

json kernel_rows(const TransitionKernel& k) {
    json out = json::array();
    for (std::size_t s = 0; s < k.num_states(); ++s) {
        json per_state = json::array();
        for (std::size_t a = 0; a < k.num_actions(); ++a) {
            const auto row = k.row(s, a);
            per_state.push_back(std::vector<double>(row.begin(), row.end()));
        }
        out.push_back(std::move(per_state));
    }
    return out;
}

json kernel_doc(const TransitionKernel& k) {
    return {{"S", k.num_states()}, {"A", k.num_actions()}, {"kernel", kernel_rows(k)}};
}

TransitionKernel kernel_from_doc(const json& doc) {
    const auto S = doc.at("S").get<std::size_t>();
    const auto A = doc.at("A").get<std::size_t>();
    const auto& rows = doc.at("kernel");
    if (rows.size() != S) throw Error(ErrorCode::ShapeMismatch, "kernel must have S entries");
    std::vector<double> flat;
    flat.reserve(S * A * S);
    for (const auto& per_state : rows) {
        if (per_state.size() != A) throw Error(ErrorCode::ShapeMismatch, "kernel rows must have A entries");
        for (const auto& row : per_state) {
            if (row.size() != S) throw Error(ErrorCode::ShapeMismatch, "kernel row must have S entries");
            for (const auto& x : row) flat.push_back(x.get<double>());
        }
    }
    return TransitionKernel(S, A, std::move(flat));
}

json mdp_doc(const TabularMDP& m) {
    json doc = kernel_doc(m.kernel());
    doc["gamma"] = m.gamma();
    json rewards = json::array();
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        std::vector<double> r(m.num_actions());
        for (std::size_t a = 0; a < m.num_actions(); ++a) r[a] = m.reward(s, a);
        rewards.push_back(std::move(r));
    }
    doc["rewards"] = std::move(rewards);
    doc["rewards_rescaled"] = m.rewards_rescaled();
    return doc;
}

TabularMDP mdp_from_doc(const json& doc) {
    auto kernel = kernel_from_doc(doc);
    const std::size_t S = kernel.num_states(), A = kernel.num_actions();
    std::vector<double> rewards;
    const auto& rows = doc.at("rewards");
    if (rows.size() != S) throw Error(ErrorCode::ShapeMismatch, "rewards must have S rows");
    for (const auto& r : rows) {
        if (r.size() != A) throw Error(ErrorCode::ShapeMismatch, "reward rows must have A entries");
        for (const auto& x : r) rewards.push_back(x.get<double>());
    }
    return TabularMDP(std::move(kernel), std::move(rewards), doc.at("gamma").get<double>(),
                      doc.value("rewards_rescaled", false));
}

json policy_doc(const Policy& p) {
    if (p.is_deterministic())
        return {{"type", "deterministic"}, {"A", p.num_actions()}, {"actions", p.actions()}};
    std::vector<double> probs;
    for (std::size_t s = 0; s < p.num_states(); ++s)
        for (std::size_t a = 0; a < p.num_actions(); ++a) probs.push_back(p.probability(s, a));
    return {{"type", "stochastic"}, {"S", p.num_states()}, {"A", p.num_actions()}, {"probs", probs}};
}

json cost_doc(const CostMatrix& c) {
    return {{"size", c.size()}, {"values", c.values()}};
}

CostMatrix cost_from_doc(const json& doc) {
    return CostMatrix(doc.at("size").get<std::size_t>(), doc.at("values").get<std::vector<double>>());
}

template <class F>
auto guarded(const std::string& text, F&& f) {
    try {
        return f(json::parse(text));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
    }
}

} // namespace

std::string to_json(const TransitionKernel& kernel) {
    return kernel_doc(kernel).dump();
}

TransitionKernel kernel_from_json(const std::string& text) {
    return guarded(text, [](const json& d) { return kernel_from_doc(d); });
}

std::string to_json(const TabularMDP& mdp) {
    return mdp_doc(mdp).dump();
}

TabularMDP mdp_from_json(const std::string& text) {
    return guarded(text, [](const json& d) { return mdp_from_doc(d); });
}

std::string to_json(const EnvPair& pair) {
    json constants = json::object();
    for (const auto& [k, v] : pair.constants) constants[k] = v;
    json doc{{"name", pair.name},
             {"seed", pair.seed},
             {"constants", constants},
             {"features", pair.features},
             {"source", mdp_doc(pair.source)},
             {"target", mdp_doc(pair.target)}};
    return doc.dump();
}

EnvPair env_pair_from_json(const std::string& text) {
    return guarded(text, [](const json& d) {
        EnvPair pair;
        pair.name = d.at("name").get<std::string>();
        pair.seed = d.at("seed").get<std::uint64_t>();
        for (const auto& [k, v] : d.at("constants").items()) pair.constants.emplace_back(k, v.get<double>());
        pair.features = d.at("features").get<std::vector<std::vector<double>>>();
        pair.source = mdp_from_doc(d.at("source"));
        pair.target = mdp_from_doc(d.at("target"));
        return pair;
    });
}

std::string to_json(const SideInfo& info) {
    json doc{{"kind", std::string(kind_name(info))}};
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, DistanceTvInfo>) {
                doc["radius"] = x.radius;
            } else if constexpr (std::is_same_v<T, DistanceW1Info>) {
                doc["radius"] = x.radius;
                doc["cost"] = cost_doc(x.cost);
            } else if constexpr (std::is_same_v<T, MomentInfo>) {
                doc["dim"] = x.dim;
                doc["features"] = x.features;
                doc["beta"] = x.beta;
            } else if constexpr (std::is_same_v<T, DensityInfo>) {
                doc["mode"] = x.mode == DensityMode::Global ? "global" : "local";
                doc["caps"] = x.caps;
                doc["presmooth"] = x.presmooth;
            } else if constexpr (std::is_same_v<T, LdsInfo>) {
                doc["dim"] = x.dim;
                doc["psi"] = x.psi;
                doc["shared"] = x.shared;
                doc["theta_source"] = x.theta_source;
            } else if constexpr (std::is_same_v<T, ValueAwareInfo>) {
                doc["beta1"] = x.beta1;
                doc["metric"] = cost_doc(x.metric);
            }
        },
        info);
    return doc.dump();
}

SideInfo side_info_from_json(const std::string& text) {
    return guarded(text, [](const json& d) -> SideInfo {
        const auto kind = d.at("kind").get<std::string>();
        auto vec = [&](const char* key) { return d.at(key).get<std::vector<double>>(); };
        if (kind == "none") return NoSideInfo{};
        if (kind == "tv") return DistanceTvInfo{vec("radius")};
        if (kind == "w1") return DistanceW1Info{vec("radius"), cost_from_doc(d.at("cost"))};
        if (kind == "moment") return MomentInfo{d.at("dim").get<std::size_t>(), vec("features"), vec("beta")};
        if (kind == "density") {
            const auto mode = d.at("mode").get<std::string>();
            if (mode != "global" && mode != "local")
                throw Error(ErrorCode::InvalidArgument, "density mode must be global or local");
            return DensityInfo{mode == "global" ? DensityMode::Global : DensityMode::Local, vec("caps"),
                               d.value("presmooth", false)};
        }
        if (kind == "lds")
            return LdsInfo{d.at("dim").get<std::size_t>(), vec("psi"),
                           d.at("shared").get<std::vector<std::size_t>>(), vec("theta_source")};
        if (kind == "value_aware") return ValueAwareInfo{vec("beta1"), cost_from_doc(d.at("metric"))};
        throw Error(ErrorCode::InvalidArgument, "unknown side information kind '" + kind + "'");
    });
}

std::string to_json(const Policy& policy) {
    return policy_doc(policy).dump();
}

Policy policy_from_json(const std::string& text) {
    return guarded(text, [](const json& d) {
        if (d.at("type").get<std::string>() == "deterministic")
            return Policy::deterministic(d.at("actions").get<std::vector<std::size_t>>(),
                                         d.at("A").get<std::size_t>());
        return Policy::stochastic(d.at("S").get<std::size_t>(), d.at("A").get<std::size_t>(),
                                  d.at("probs").get<std::vector<double>>());
    });
}

std::string to_json(const PlanResult& plan) {
    json doc{{"value", plan.value},
             {"policy", json::parse(to_json(plan.policy))},
             {"iterations", plan.iterations},
             {"residual", plan.residual},
             {"converged", plan.converged}};
    return doc.dump();
}

} // namespace ribe
