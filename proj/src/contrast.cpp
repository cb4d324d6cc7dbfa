#include "iva/contrast.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace iva::contrast {

ContrastModel laplace() {
    ContrastModel m;
    m.name = "laplace";
    m.r_floor = 1e-10;
    m.g = [](double r) { return r; };
    m.weight = [floor = m.r_floor](double r) { return 0.5 / std::max(r, floor); };
    return m;
}

namespace {

std::map<std::string, ContrastModel>& registry() {
    static std::map<std::string, ContrastModel> models = [] {
        std::map<std::string, ContrastModel> m;
        m.emplace("laplace", laplace());
        return m;
    }();
    return models;
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

const ContrastModel& find(const std::string& name) {
    std::lock_guard<std::mutex> guard(registry_mutex());
    auto it = registry().find(name);
    if (it == registry().end()) throw InvalidInput("unknown contrast model: " + name);
    return it->second;
}

void register_model(ContrastModel model) {
    std::lock_guard<std::mutex> guard(registry_mutex());
    registry()[model.name] = std::move(model);
}

std::vector<std::string> registered_names() {
    std::lock_guard<std::mutex> guard(registry_mutex());
    std::vector<std::string> names;
    for (const auto& [name, model] : registry()) names.push_back(name);
    return names;
}

} // namespace iva::contrast
