#pragma once

#include <string>
#include <vector>

#include "protohat/matrix.hpp"
#include "protohat/tape.hpp"

namespace protohat {

/// Maps every node index to exactly one type. A heterogeneous hypergraph has
/// at least two types.
struct NodeTypeTable {
    std::vector<std::string> type_names;
    std::vector<int> node_type;  // node index -> type index

    int n_types() const { return static_cast<int>(type_names.size()); }
};

/// G = {V, E, T}: typed nodes plus hyperedge membership lists. Memberships
/// are sets (validate rejects duplicates) but the given order is preserved;
/// aggregation follows it, which keeps results bitwise stable when nodes are
/// relabeled consistently.
struct Hypergraph {
    int n_nodes = 0;
    std::vector<std::vector<int>> hyperedges;
    NodeTypeTable types;

    int n_edges() const { return static_cast<int>(hyperedges.size()); }
};

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;

    bool ok() const { return errors.empty(); }
};

/// Structural checks: >=2 distinct members per hyperedge, member indices in
/// range, node_type table consistent, >=2 types. Isolated nodes are reported
/// as warnings, not errors. Violations are data, not exceptions.
ValidationReport validate(const Hypergraph& g);

struct IncidenceMatrix {
    Matrix I;                 // n x m, entries in {0,1}
    std::vector<int> degree;  // column sums, one per hyperedge
    Groups members;           // per edge: node indices in stored order
    Groups incident;          // per node: incident edge indices, ascending

    int n_nodes() const { return I.rows(); }
    int n_edges() const { return I.cols(); }
};

/// Builds I with I(v,e)=1 iff v is a member of e, plus the degree vector and
/// cached membership/incident lists. Throws StructuralError when g has no
/// hyperedges or fails validate.
IncidenceMatrix build_incidence(const Hypergraph& g);

/// s_v = { e : I(v,e) = 1 }, ascending. May be empty for isolated nodes.
std::vector<int> incident_hyperedges(const IncidenceMatrix& inc, int v);

}  // namespace protohat
