#pragma once

#include <string>
#include <vector>

namespace divs {

// Sentinel parent id for nodes whose parent is the cloud root.
inline constexpr int kCloudId = -1;

struct MonitoringTerminal {
    int id = 0;
    int frames_per_unit_time = 1;  // alpha
    int parent_en = 0;             // level-1 edge node id
};

struct EdgeNode {
    int id = 0;
    int level = 1;                       // 1 = lowest
    int parent = kCloudId;               // node id, or kCloudId
    double capacity = 1.0;               // baseline seconds per frame per task
    std::vector<int> connected_terminals;  // level-1 only
};

struct Topology {
    std::vector<MonitoringTerminal> terminals;
    std::vector<EdgeNode> nodes;  // dense ids, level 1 first, then level 2, ...

    int levels = 0;

    const EdgeNode& node(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
    std::vector<int> nodes_at_level(int level) const;
    int level1_count() const { return static_cast<int>(nodes_at_level(1).size()); }
};

struct LevelSpec {
    int count = 0;
    // One capacity for the whole level, or one per node (size == count).
    std::vector<double> capacities;
};

struct TopologySpec {
    int terminals = 0;          // N
    int alpha = 1;              // frames per unit time per terminal
    std::vector<LevelSpec> levels;  // index 0 = level 1
    // Empty: round-robin terminal assignment. Otherwise per-level-1-node
    // terminal counts (must sum to `terminals`).
    std::vector<int> explicit_assignment;
};

// Builds a validated topology. Ids are dense integers in declaration order:
// terminals 0..N-1, nodes level-major starting at 0. Level-k nodes attach
// round-robin to level-(k+1) nodes; the top level attaches to the cloud.
Topology build_topology(const TopologySpec& spec);

// Returns one message per invariant violation; empty means ok. Violations are
// values, not failures.
std::vector<std::string> validate(const Topology& t);

}  // namespace divs
