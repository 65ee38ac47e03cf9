#pragma once

#include <map>
#include <string>
#include <vector>

#include "delvepo/errors.hpp"

namespace delvepo {

/// The five component-pool categories.
enum class ComponentCategory {
    RoleAndExpertise,
    TaskContent,
    ConstraintsAndNorms,
    ProcessAndBehavior,
    ContextAndExamples,
};

inline const char* category_name(ComponentCategory c) {
    switch (c) {
        case ComponentCategory::RoleAndExpertise: return "Role and Expertise";
        case ComponentCategory::TaskContent: return "Task Content";
        case ComponentCategory::ConstraintsAndNorms: return "Constraints and Norms";
        case ComponentCategory::ProcessAndBehavior: return "Process and Behavior";
        case ComponentCategory::ContextAndExamples: return "Context and Examples";
    }
    return "?";
}

inline ComponentCategory category_from_name(const std::string& name) {
    if (name == "Role and Expertise") return ComponentCategory::RoleAndExpertise;
    if (name == "Task Content") return ComponentCategory::TaskContent;
    if (name == "Constraints and Norms") return ComponentCategory::ConstraintsAndNorms;
    if (name == "Process and Behavior") return ComponentCategory::ProcessAndBehavior;
    if (name == "Context and Examples") return ComponentCategory::ContextAndExamples;
    throw ConfigError("unknown component category '" + name + "'");
}

/// A typed prompt slot: where one influence factor lives in the prompt.
struct ComponentType {
    std::string name;
    ComponentCategory category = ComponentCategory::TaskContent;
    std::string description;

    bool operator==(const ComponentType&) const = default;
};

/// Ordered set of component types for a run. Order fixes slot order everywhere
/// (rendering, context blocks, serialization).
class Registry {
  public:
    explicit Registry(std::vector<ComponentType> types) : types_(std::move(types)) {
        if (types_.empty()) throw ConfigError("component registry must not be empty");
        for (const auto& t : types_) {
            if (t.name.empty()) throw ConfigError("component type name must not be empty");
            if (t.name.find_first_of("<>/") != std::string::npos)
                throw ConfigError("component type name '" + t.name +
                                  "' contains markup delimiter characters");
            if (index_.count(t.name))
                throw ConfigError("duplicate component type name '" + t.name + "'");
            index_[t.name] = index_.size();
        }
    }

    /// The representative type per category: role, task_description,
    /// output_format, workflow, examples.
    static Registry default_registry() {
        return Registry({
            {"role", ComponentCategory::RoleAndExpertise,
             "the persona or expertise the model should assume"},
            {"task_description", ComponentCategory::TaskContent,
             "what the task is and what the model must accomplish"},
            {"output_format", ComponentCategory::ConstraintsAndNorms,
             "how the final answer must be formatted"},
            {"workflow", ComponentCategory::ProcessAndBehavior,
             "the step-by-step process the model should follow"},
            {"examples", ComponentCategory::ContextAndExamples,
             "worked examples that illustrate the task"},
        });
    }

    const std::vector<ComponentType>& types() const { return types_; }
    std::size_t size() const { return types_.size(); }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw TypeMismatch("unknown component type '" + name + "'");
        return it->second;
    }

    const ComponentType& at(const std::string& name) const { return types_[index_of(name)]; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(types_.size());
        for (const auto& t : types_) out.push_back(t.name);
        return out;
    }

    bool operator==(const Registry& other) const { return types_ == other.types_; }

  private:
    std::vector<ComponentType> types_;
    std::map<std::string, std::size_t> index_;
};

/// One candidate value for a component type. Empty text is the "null" value:
/// the slot is omitted on render.
struct ComponentValue {
    std::string type_name;
    std::string text;

    bool operator==(const ComponentValue&) const = default;
};

/// Candidate values per component type, as produced by initialization.
using ValuePools = std::map<std::string, std::vector<std::string>>;

}  // namespace delvepo
