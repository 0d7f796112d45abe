#include "divs/topology.hpp"

#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace divs {

std::vector<int> Topology::nodes_at_level(int level) const {
    std::vector<int> out;
    for (const auto& n : nodes) {
        if (n.level == level) out.push_back(n.id);
    }
    return out;
}

Topology build_topology(const TopologySpec& spec) {
    if (spec.terminals < 1) {
        throw std::invalid_argument("topology: terminal count must be >= 1");
    }
    if (spec.alpha < 1) {
        throw std::invalid_argument("topology: alpha must be >= 1");
    }
    if (spec.levels.empty()) {
        throw std::invalid_argument("topology: at least one edge-node level required");
    }
    for (std::size_t li = 0; li < spec.levels.size(); ++li) {
        const auto& lv = spec.levels[li];
        if (lv.count < 1) {
            throw std::invalid_argument("topology: level " + std::to_string(li + 1) +
                                        " is empty");
        }
        if (lv.capacities.size() != 1 &&
            lv.capacities.size() != static_cast<std::size_t>(lv.count)) {
            throw std::invalid_argument("topology: level " + std::to_string(li + 1) +
                                        " capacity list must have 1 or count entries");
        }
        for (double c : lv.capacities) {
            if (!(c > 0.0)) {
                throw std::invalid_argument("topology: level " + std::to_string(li + 1) +
                                            " has capacity <= 0");
            }
        }
    }

    Topology t;
    t.levels = static_cast<int>(spec.levels.size());

    // Nodes: dense ids, level-major.
    std::vector<int> level_first_id(spec.levels.size() + 1, 0);
    int next_id = 0;
    for (std::size_t li = 0; li < spec.levels.size(); ++li) {
        level_first_id[li] = next_id;
        const auto& lv = spec.levels[li];
        for (int k = 0; k < lv.count; ++k) {
            EdgeNode n;
            n.id = next_id++;
            n.level = static_cast<int>(li + 1);
            n.capacity = lv.capacities.size() == 1 ? lv.capacities[0]
                                                   : lv.capacities[static_cast<std::size_t>(k)];
            t.nodes.push_back(n);
        }
    }
    level_first_id[spec.levels.size()] = next_id;

    // Parent wiring: level k -> level k+1 round-robin; top level -> cloud.
    for (std::size_t li = 0; li + 1 < spec.levels.size(); ++li) {
        const int child_base = level_first_id[li];
        const int parent_base = level_first_id[li + 1];
        const int parent_count = spec.levels[li + 1].count;
        for (int k = 0; k < spec.levels[li].count; ++k) {
            t.nodes[static_cast<std::size_t>(child_base + k)].parent =
                parent_base + (k % parent_count);
        }
    }

    // Terminal assignment to level-1 nodes.
    const int m1 = spec.levels[0].count;
    if (!spec.explicit_assignment.empty()) {
        if (spec.explicit_assignment.size() != static_cast<std::size_t>(m1)) {
            throw std::invalid_argument(
                "topology: explicit assignment must list one count per level-1 node");
        }
        const int total = std::accumulate(spec.explicit_assignment.begin(),
                                          spec.explicit_assignment.end(), 0);
        if (total != spec.terminals) {
            throw std::invalid_argument("topology: explicit assignment sums to " +
                                        std::to_string(total) + ", expected " +
                                        std::to_string(spec.terminals));
        }
        for (int c : spec.explicit_assignment) {
            if (c < 0) throw std::invalid_argument("topology: negative terminal count");
        }
        int tid = 0;
        for (int j = 0; j < m1; ++j) {
            for (int k = 0; k < spec.explicit_assignment[static_cast<std::size_t>(j)]; ++k) {
                MonitoringTerminal mt;
                mt.id = tid++;
                mt.frames_per_unit_time = spec.alpha;
                mt.parent_en = j;
                t.terminals.push_back(mt);
                t.nodes[static_cast<std::size_t>(j)].connected_terminals.push_back(mt.id);
            }
        }
    } else {
        for (int i = 0; i < spec.terminals; ++i) {
            MonitoringTerminal mt;
            mt.id = i;
            mt.frames_per_unit_time = spec.alpha;
            mt.parent_en = i % m1;
            t.terminals.push_back(mt);
            t.nodes[static_cast<std::size_t>(mt.parent_en)].connected_terminals.push_back(i);
        }
    }

    return t;
}

std::vector<std::string> validate(const Topology& t) {
    std::vector<std::string> violations;
    auto known_node = [&](int id) {
        return id >= 0 && id < static_cast<int>(t.nodes.size());
    };

    for (const auto& mt : t.terminals) {
        if (mt.frames_per_unit_time < 1) {
            violations.push_back("terminal " + std::to_string(mt.id) + ": alpha < 1");
        }
        if (!known_node(mt.parent_en)) {
            violations.push_back("terminal " + std::to_string(mt.id) +
                                 ": parent node " + std::to_string(mt.parent_en) +
                                 " does not exist");
        } else if (t.node(mt.parent_en).level != 1) {
            violations.push_back("terminal " + std::to_string(mt.id) +
                                 ": parent node " + std::to_string(mt.parent_en) +
                                 " is not level 1");
        }
    }

    for (const auto& n : t.nodes) {
        if (!(n.capacity > 0.0)) {
            violations.push_back("node " + std::to_string(n.id) + ": capacity <= 0");
        }
        if (n.parent == kCloudId) continue;
        if (!known_node(n.parent)) {
            violations.push_back("node " + std::to_string(n.id) + ": parent node " +
                                 std::to_string(n.parent) + " does not exist");
        } else if (t.node(n.parent).level != n.level + 1) {
            violations.push_back("node " + std::to_string(n.id) + ": parent node " +
                                 std::to_string(n.parent) + " has level " +
                                 std::to_string(t.node(n.parent).level) + ", expected " +
                                 std::to_string(n.level + 1));
        }
    }

    // Forest check: following parents from any node must reach the cloud
    // without revisiting a node.
    for (const auto& n : t.nodes) {
        std::unordered_set<int> seen;
        int cur = n.id;
        while (cur != kCloudId && known_node(cur)) {
            if (!seen.insert(cur).second) {
                violations.push_back("node " + std::to_string(n.id) +
                                     ": parent chain contains a cycle");
                break;
            }
            cur = t.node(cur).parent;
        }
    }

    return violations;
}

}  // namespace divs
