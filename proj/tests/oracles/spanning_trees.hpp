#pragma once

#include <vector>

#include "gridsec/network.hpp"

namespace oracle {

// Every subset of |V|-1 edges that connects all nodes, found by subset
// enumeration and depth-first search. Small graphs only.
std::vector<gridsec::EdgeSet> all_spanning_trees(const gridsec::Network& net);

// Height of `tree` when rooted at `root` (max BFS distance).
int tree_height(const gridsec::Network& net, const gridsec::EdgeSet& tree, gridsec::NodeId root);

}  // namespace oracle
