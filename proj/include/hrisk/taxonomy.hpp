#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hrisk {

using NodeIndex = std::size_t;
using ClassIndex = int;

/// A rooted class hierarchy with K >= 2 labeled leaves.
///
/// Nodes are identified by name. Leaves are the classes; class indices run
/// 0..K-1 in lexicographic order of leaf names unless an explicit order is
/// supplied. Heights are subtree heights: the number of edges from a node
/// down to its furthest descendant leaf, so every leaf has height 0.
///
/// Instances are immutable once built and safe for concurrent readers.
class Taxonomy {
public:
    struct Node {
        std::string name;
        std::optional<NodeIndex> parent;
    };

    /// Builds and validates a tree from (child, parent) edges. `lines` carries
    /// the 1-based source line of each edge for diagnostics (may be empty).
    /// Throws ParseError on cycles, multiple roots, nodes with two parents,
    /// duplicate edges and empty input.
    static Taxonomy from_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                               const std::vector<std::size_t>& lines = {},
                               const std::string& source = {});

    std::size_t num_nodes() const noexcept { return nodes_.size(); }
    int num_classes() const noexcept { return static_cast<int>(leaves_.size()); }
    NodeIndex root() const noexcept { return root_; }

    const Node& node(NodeIndex n) const { return nodes_.at(n); }
    const std::vector<NodeIndex>& children(NodeIndex n) const { return children_.at(n); }
    std::optional<NodeIndex> find_node(std::string_view name) const;

    /// Leaf node carrying class `c`.
    NodeIndex leaf(ClassIndex c) const;
    const std::vector<NodeIndex>& leaves() const noexcept { return leaves_; }
    std::vector<std::string> class_names() const;
    std::optional<ClassIndex> class_index(std::string_view name) const;
    bool is_leaf(NodeIndex n) const { return children_.at(n).empty(); }

    int node_height(NodeIndex n) const { return height_.at(n); }
    int node_depth(NodeIndex n) const { return depth_.at(n); }
    int height() const noexcept { return height_[root_]; }
    int max_leaf_depth() const noexcept { return max_leaf_depth_; }

    /// Deepest common ancestor of the leaves of classes i and j.
    NodeIndex lca(ClassIndex i, ClassIndex j) const;
    /// Height of lca(i, j); 0 iff i == j.
    int lca_height(ClassIndex i, ClassIndex j) const { return height_[lca(i, j)]; }

    /// Ancestor of `n` at `depth`, or `n` itself when it is not deeper.
    NodeIndex ancestor_at_depth(NodeIndex n, int depth) const;

    /// Same tree with classes re-indexed in the given order. `order` must be
    /// a permutation of the leaf names.
    Taxonomy with_class_order(const std::vector<std::string>& order) const;

    /// Same tree with leaf names reassigned: the leaf that carried class
    /// `c` carries `names[c]` afterwards. `names` must be a permutation of
    /// the class names; each name keeps its class index.
    Taxonomy with_leaf_names(const std::vector<std::string>& names) const;

private:
    Taxonomy() = default;
    void finalize(std::vector<NodeIndex> leaf_order);
    void check_class(ClassIndex c) const;

    std::vector<Node> nodes_;
    std::vector<std::vector<NodeIndex>> children_;
    std::vector<int> height_;
    std::vector<int> depth_;
    std::vector<NodeIndex> leaves_;
    std::unordered_map<std::string, NodeIndex> by_name_;
    std::unordered_map<std::string, ClassIndex> class_of_;
    NodeIndex root_ = 0;
    int max_leaf_depth_ = 0;
};

/// Parses the hierarchy format: UTF-8 text, one `child<TAB>parent` edge per
/// line, blank lines and lines starting with `#` ignored. A directive line
/// `#classes<TAB>name<TAB>name...` fixes the class order explicitly.
Taxonomy parse_taxonomy(std::string_view text, const std::string& source = {});
Taxonomy load_taxonomy(const std::string& path);

/// Serializes back to the hierarchy format (edges in node order, with a
/// `#classes` directive when the class order is not the sorted one).
std::string format_taxonomy(const Taxonomy& tax);

/// Collapsed-label mapping at a depth (root has depth 0). `group[c]` is the
/// dense group index of class c, numbered in order of each group's lowest
/// class index; `nodes[g]` is the tree node representing group g.
struct Collapsing {
    std::vector<int> group;
    std::vector<NodeIndex> nodes;
    int num_groups() const noexcept { return static_cast<int>(nodes.size()); }
};

/// Maps every class to its ancestor at `depth` (or itself when the leaf is
/// shallower). Throws InputError unless 0 <= depth <= max_leaf_depth().
Collapsing collapse_to_depth(const Taxonomy& tax, int depth);

/// Result of a leaf shuffle. `permutation[c]` is the class whose name now
/// sits at the leaf position formerly held by class c.
struct ShuffledTaxonomy {
    Taxonomy taxonomy;
    std::vector<ClassIndex> permutation;
};

/// Uniformly random reassignment of class names to leaf positions, keeping
/// the internal structure. Fisher-Yates over the class index array using
/// std::mt19937_64 seeded with `seed`: for i = K-1 down to 1, swap a[i]
/// with a[uniform_below(i + 1)].
ShuffledTaxonomy shuffle_leaves(const Taxonomy& tax, std::uint64_t seed);

} // namespace hrisk
