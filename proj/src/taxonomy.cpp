#include "hrisk/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hrisk/errors.hpp"
#include "hrisk/random.hpp"

namespace hrisk {

namespace {

std::size_t line_of(const std::vector<std::size_t>& lines, std::size_t edge) {
    return edge < lines.size() ? lines[edge] : edge + 1;
}

} // namespace

Taxonomy Taxonomy::from_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                              const std::vector<std::size_t>& lines,
                              const std::string& source) {
    if (edges.empty()) throw ParseError(source, 0, 0, "empty hierarchy: no edges");

    Taxonomy t;
    std::vector<std::size_t> parent_edge;  // edge index that set each node's parent
    auto intern = [&](const std::string& name) {
        auto [it, inserted] = t.by_name_.try_emplace(name, t.nodes_.size());
        if (inserted) {
            t.nodes_.push_back({name, std::nullopt});
            parent_edge.push_back(edges.size());
        }
        return it->second;
    };

    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& [child, parent] = edges[e];
        const std::size_t line = line_of(lines, e);
        if (child.empty() || parent.empty()) throw ParseError(source, line, 0, "empty node name");
        if (child == parent) throw ParseError(source, line, 0, "cycle detected: '" + child + "' is its own parent");
        const NodeIndex c = intern(child);
        const NodeIndex p = intern(parent);
        if (t.nodes_[c].parent) {
            if (*t.nodes_[c].parent == p) throw ParseError(source, line, 0, "duplicate edge '" + child + "' -> '" + parent + "'");
            throw ParseError(source, line, 0,
                             "node '" + child + "' has multiple parents (first given at line " +
                                 std::to_string(line_of(lines, parent_edge[c])) + ")");
        }
        t.nodes_[c].parent = p;
        parent_edge[c] = e;
    }

    // Cycle detection: follow parent links, colouring nodes on the current path.
    const std::size_t n = t.nodes_.size();
    std::vector<std::uint8_t> state(n, 0);  // 0 unvisited, 1 on path, 2 done
    for (NodeIndex start = 0; start < n; ++start) {
        std::vector<NodeIndex> path;
        NodeIndex v = start;
        while (state[v] == 0) {
            state[v] = 1;
            path.push_back(v);
            if (!t.nodes_[v].parent) break;
            const NodeIndex p = *t.nodes_[v].parent;
            if (state[p] == 1)
                throw ParseError(source, line_of(lines, parent_edge[v]), 0,
                                 "cycle detected through '" + t.nodes_[p].name + "'");
            v = p;
        }
        for (NodeIndex u : path) state[u] = 2;
    }

    std::vector<NodeIndex> roots;
    for (NodeIndex v = 0; v < n; ++v)
        if (!t.nodes_[v].parent) roots.push_back(v);
    if (roots.size() != 1) {
        // Report the first edge that mentions the second root as a parent.
        std::size_t bad = 0;
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (edges[e].second == t.nodes_[roots[1]].name) { bad = line_of(lines, e); break; }
        throw ParseError(source, bad, 0,
                         "multiple roots: '" + t.nodes_[roots[0]].name + "' and '" +
                             t.nodes_[roots[1]].name + "'");
    }
    t.root_ = roots.front();

    t.children_.assign(n, {});
    for (NodeIndex v = 0; v < n; ++v)
        if (t.nodes_[v].parent) t.children_[*t.nodes_[v].parent].push_back(v);

    std::vector<NodeIndex> leaf_nodes;
    for (NodeIndex v = 0; v < n; ++v)
        if (t.children_[v].empty()) leaf_nodes.push_back(v);
    if (leaf_nodes.size() < 2)
        throw ParseError(source, 0, 0, "hierarchy needs at least 2 leaves");
    std::sort(leaf_nodes.begin(), leaf_nodes.end(),
              [&](NodeIndex a, NodeIndex b) { return t.nodes_[a].name < t.nodes_[b].name; });
    t.finalize(std::move(leaf_nodes));
    return t;
}

void Taxonomy::finalize(std::vector<NodeIndex> leaf_order) {
    const std::size_t n = nodes_.size();
    if (children_.size() != n) {
        children_.assign(n, {});
        for (NodeIndex v = 0; v < n; ++v)
            if (nodes_[v].parent) children_[*nodes_[v].parent].push_back(v);
    }
    by_name_.clear();
    for (NodeIndex v = 0; v < n; ++v) by_name_.emplace(nodes_[v].name, v);

    // Breadth-first order from the root; heights are filled in reverse.
    std::vector<NodeIndex> order{root_};
    order.reserve(n);
    depth_.assign(n, 0);
    for (std::size_t i = 0; i < order.size(); ++i)
        for (NodeIndex c : children_[order[i]]) {
            depth_[c] = depth_[order[i]] + 1;
            order.push_back(c);
        }
    height_.assign(n, 0);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (nodes_[*it].parent) {
            int& h = height_[*nodes_[*it].parent];
            h = std::max(h, height_[*it] + 1);
        }

    leaves_ = std::move(leaf_order);
    class_of_.clear();
    max_leaf_depth_ = 0;
    for (std::size_t c = 0; c < leaves_.size(); ++c) {
        class_of_.emplace(nodes_[leaves_[c]].name, static_cast<ClassIndex>(c));
        max_leaf_depth_ = std::max(max_leaf_depth_, depth_[leaves_[c]]);
    }
}

void Taxonomy::check_class(ClassIndex c) const {
    if (c < 0 || c >= num_classes())
        throw InputError("class index " + std::to_string(c) + " out of range [0, " +
                         std::to_string(num_classes()) + ")");
}

std::optional<NodeIndex> Taxonomy::find_node(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

NodeIndex Taxonomy::leaf(ClassIndex c) const {
    check_class(c);
    return leaves_[static_cast<std::size_t>(c)];
}

std::vector<std::string> Taxonomy::class_names() const {
    std::vector<std::string> names;
    names.reserve(leaves_.size());
    for (NodeIndex v : leaves_) names.push_back(nodes_[v].name);
    return names;
}

std::optional<ClassIndex> Taxonomy::class_index(std::string_view name) const {
    auto it = class_of_.find(std::string(name));
    if (it == class_of_.end()) return std::nullopt;
    return it->second;
}

NodeIndex Taxonomy::lca(ClassIndex i, ClassIndex j) const {
    NodeIndex a = leaf(i);
    NodeIndex b = leaf(j);
    while (depth_[a] > depth_[b]) a = *nodes_[a].parent;
    while (depth_[b] > depth_[a]) b = *nodes_[b].parent;
    while (a != b) {
        a = *nodes_[a].parent;
        b = *nodes_[b].parent;
    }
    return a;
}

NodeIndex Taxonomy::ancestor_at_depth(NodeIndex n, int depth) const {
    if (n >= nodes_.size()) throw InputError("node index out of range");
    while (depth_[n] > depth) n = *nodes_[n].parent;
    return n;
}

Taxonomy Taxonomy::with_class_order(const std::vector<std::string>& order) const {
    if (order.size() != leaves_.size())
        throw InputError("class order lists " + std::to_string(order.size()) + " names, hierarchy has " +
                         std::to_string(leaves_.size()) + " leaves");
    std::vector<NodeIndex> leaf_order;
    std::vector<bool> seen(leaves_.size(), false);
    for (const auto& name : order) {
        auto c = class_index(name);
        if (!c) throw InputError("class '" + name + "' is not a leaf of the hierarchy");
        if (seen[static_cast<std::size_t>(*c)]) throw InputError("class '" + name + "' listed twice");
        seen[static_cast<std::size_t>(*c)] = true;
        leaf_order.push_back(leaves_[static_cast<std::size_t>(*c)]);
    }
    Taxonomy t = *this;
    t.finalize(std::move(leaf_order));
    return t;
}

Taxonomy Taxonomy::with_leaf_names(const std::vector<std::string>& names) const {
    if (names.size() != leaves_.size()) throw InputError("leaf name count does not match class count");
    Taxonomy t = *this;
    std::vector<NodeIndex> leaf_order(leaves_.size());
    std::vector<bool> seen(leaves_.size(), false);
    for (std::size_t c = 0; c < leaves_.size(); ++c) {
        auto target = class_index(names[c]);
        if (!target || seen[static_cast<std::size_t>(*target)])
            throw InputError("leaf names must be a permutation of the class names");
        seen[static_cast<std::size_t>(*target)] = true;
        t.nodes_[leaves_[c]].name = names[c];
        leaf_order[static_cast<std::size_t>(*target)] = leaves_[c];
    }
    t.finalize(std::move(leaf_order));
    return t;
}

Taxonomy parse_taxonomy(std::string_view text, const std::string& source) {
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::size_t> lines;
    std::optional<std::vector<std::string>> order;
    std::size_t order_line = 0;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            constexpr std::string_view directive = "#classes\t";
            if (line.substr(0, directive.size()) == directive) {
                if (order) throw ParseError(source, line_no, 1, "repeated #classes directive");
                order.emplace();
                order_line = line_no;
                std::string_view rest = line.substr(directive.size());
                std::size_t p = 0;
                while (p <= rest.size()) {
                    std::size_t q = rest.find('\t', p);
                    if (q == std::string_view::npos) q = rest.size();
                    if (q == p) throw ParseError(source, line_no, directive.size() + p + 1, "empty class name");
                    order->emplace_back(rest.substr(p, q - p));
                    p = q + 1;
                }
            }
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos)
            throw ParseError(source, line_no, 0, "expected 'child<TAB>parent'");
        if (line.find('\t', tab + 1) != std::string_view::npos)
            throw ParseError(source, line_no, line.find('\t', tab + 1) + 1, "more than two fields");
        if (tab == 0) throw ParseError(source, line_no, 1, "empty child name");
        if (tab + 1 == line.size()) throw ParseError(source, line_no, tab + 2, "empty parent name");
        edges.emplace_back(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
        lines.push_back(line_no);
    }

    Taxonomy t = Taxonomy::from_edges(edges, lines, source);
    if (order) {
        try {
            t = t.with_class_order(*order);
        } catch (const InputError& e) {
            throw ParseError(source, order_line, 0, e.what());
        }
    }
    return t;
}

Taxonomy load_taxonomy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open hierarchy file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_taxonomy(buf.str(), path);
}

std::string format_taxonomy(const Taxonomy& tax) {
    std::string out;
    auto names = tax.class_names();
    if (!std::is_sorted(names.begin(), names.end())) {
        out += "#classes";
        for (const auto& n : names) out += "\t" + n;
        out += "\n";
    }
    for (NodeIndex v = 0; v < tax.num_nodes(); ++v) {
        const auto& node = tax.node(v);
        if (node.parent) out += node.name + "\t" + tax.node(*node.parent).name + "\n";
    }
    return out;
}

Collapsing collapse_to_depth(const Taxonomy& tax, int depth) {
    if (depth < 0 || depth > tax.max_leaf_depth())
        throw InputError("collapse depth " + std::to_string(depth) + " outside [0, " +
                         std::to_string(tax.max_leaf_depth()) + "]");
    Collapsing out;
    out.group.resize(static_cast<std::size_t>(tax.num_classes()));
    std::unordered_map<NodeIndex, int> group_of;
    for (ClassIndex c = 0; c < tax.num_classes(); ++c) {
        const NodeIndex a = tax.ancestor_at_depth(tax.leaf(c), depth);
        auto [it, inserted] = group_of.try_emplace(a, out.num_groups());
        if (inserted) out.nodes.push_back(a);
        out.group[static_cast<std::size_t>(c)] = it->second;
    }
    return out;
}

ShuffledTaxonomy shuffle_leaves(const Taxonomy& tax, std::uint64_t seed) {
    const auto k = static_cast<std::size_t>(tax.num_classes());
    std::vector<ClassIndex> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    Engine rng(seed);
    for (std::size_t i = k - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i + 1));
        std::swap(perm[i], perm[j]);
    }
    const auto names = tax.class_names();
    std::vector<std::string> moved(k);
    for (std::size_t c = 0; c < k; ++c) moved[c] = names[static_cast<std::size_t>(perm[c])];
    return {tax.with_leaf_names(moved), std::move(perm)};
}

} // namespace hrisk
