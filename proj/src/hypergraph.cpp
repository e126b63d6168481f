#include "protohat/hypergraph.hpp"

#include <unordered_set>

#include "protohat/errors.hpp"

namespace protohat {

ValidationReport validate(const Hypergraph& g) {
    ValidationReport report;
    auto err = [&](std::string msg) { report.errors.push_back(std::move(msg)); };

    if (g.n_nodes <= 0) err("hypergraph has no nodes");
    if (static_cast<int>(g.types.node_type.size()) != g.n_nodes)
        err("type table covers " + std::to_string(g.types.node_type.size()) + " nodes, expected " +
            std::to_string(g.n_nodes));
    if (g.types.n_types() < 2)
        err("heterogeneous hypergraph needs >=2 node types, got " +
            std::to_string(g.types.n_types()));
    for (size_t i = 0; i < g.types.node_type.size(); ++i) {
        const int t = g.types.node_type[i];
        if (t < 0 || t >= g.types.n_types())
            err("node " + std::to_string(i) + " has unknown type index " + std::to_string(t));
    }

    for (size_t e = 0; e < g.hyperedges.size(); ++e) {
        const auto& members = g.hyperedges[e];
        std::unordered_set<int> seen;
        for (int v : members) {
            if (v < 0 || v >= g.n_nodes) {
                err("hyperedge " + std::to_string(e) + " references out-of-range node " +
                    std::to_string(v));
                continue;
            }
            if (!seen.insert(v).second)
                err("hyperedge " + std::to_string(e) + " lists node " + std::to_string(v) +
                    " more than once");
        }
        if (seen.size() < 2) err("hyperedge " + std::to_string(e) + " has <2 nodes");
    }

    if (report.ok()) {
        std::vector<uint8_t> touched(static_cast<size_t>(g.n_nodes), 0);
        for (const auto& members : g.hyperedges)
            for (int v : members) touched[static_cast<size_t>(v)] = 1;
        for (int v = 0; v < g.n_nodes; ++v)
            if (!touched[static_cast<size_t>(v)])
                report.warnings.push_back("node " + std::to_string(v) +
                                          " is isolated (no incident hyperedge)");
    }
    return report;
}

IncidenceMatrix build_incidence(const Hypergraph& g) {
    if (g.hyperedges.empty()) throw StructuralError("build_incidence: empty hyperedge list");
    const ValidationReport report = validate(g);
    if (!report.ok()) throw StructuralError("build_incidence: " + report.errors.front());

    IncidenceMatrix inc;
    const int n = g.n_nodes;
    const int m = g.n_edges();
    inc.I = Matrix(n, m);
    inc.degree.assign(static_cast<size_t>(m), 0);
    inc.members = g.hyperedges;
    inc.incident.assign(static_cast<size_t>(n), {});
    for (int e = 0; e < m; ++e) {
        for (int v : g.hyperedges[static_cast<size_t>(e)]) {
            inc.I(v, e) = 1.0;
            ++inc.degree[static_cast<size_t>(e)];
            inc.incident[static_cast<size_t>(v)].push_back(e);
        }
    }
    return inc;
}

std::vector<int> incident_hyperedges(const IncidenceMatrix& inc, int v) {
    if (v < 0 || v >= inc.n_nodes())
        throw DimensionError("incident_hyperedges: node index " + std::to_string(v) +
                             " out of range [0," + std::to_string(inc.n_nodes()) + ")");
    return inc.incident[static_cast<size_t>(v)];
}

}  // namespace protohat
