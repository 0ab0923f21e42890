#pragma once

#include "crfmm/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace crfmm {

using NodeId = std::int64_t;
using EdgeId = std::int64_t;

struct RoadNode {
    NodeId id = 0;
    GeoPoint pos;
};

/// One row of the edges file. A two-way row expands into edge `id` (along the
/// geometry) and edge `-id` (reversed), so two-way ids must be positive.
struct EdgeRow {
    EdgeId id = 0;
    NodeId from_node = 0;
    NodeId to_node = 0;
    double speed_limit_kmh = 0.0;
    bool oneway = true;
    std::vector<GeoPoint> geometry;
    std::size_t source_line = 0;  // 0 when not read from a file
};

/// Directed road segment with its geometry in both coordinate systems.
struct RoadEdge {
    EdgeId id = 0;
    NodeId from_node = 0;
    NodeId to_node = 0;
    std::vector<GeoPoint> polyline;
    std::vector<PlanePoint> shape;   // polyline projected to the plane
    std::vector<double> cumulative;  // arc length at each shape vertex
    double length_m = 0.0;
    double speed_limit_kmh = 0.0;
    bool oneway = true;
    std::optional<EdgeId> twin;  // reversed partner of a two-way road

    PlanePoint point_at(double offset_m) const;
    /// Direction of travel at the given offset.
    double bearing_at(double offset_m) const;
    double start_bearing() const { return bearing_at(0.0); }
    double end_bearing() const { return bearing_at(length_m); }
    /// Sub-polyline between two offsets (from <= to), endpoints included.
    std::vector<PlanePoint> slice(double from_m, double to_m) const;
};

/// A candidate match of one observation: the closest point of one edge.
struct RoadState {
    EdgeId edge_id = 0;
    double offset_m = 0.0;
    PlanePoint point;
    double dist_m = 0.0;
    double road_bearing = 0.0;

    friend bool operator==(const RoadState&, const RoadState&) = default;
};

class RoadNetwork {
public:
    /// Validates rows and builds adjacency plus the grid index.
    /// Throws DataError naming the offending line (or row) on invalid input.
    static RoadNetwork build(std::vector<RoadNode> nodes, std::vector<EdgeRow> rows,
                             double index_cell_m = 50.0);

    std::span<const RoadNode> nodes() const { return nodes_; }
    std::span<const RoadEdge> edges() const { return edges_; }
    std::span<const EdgeRow> rows() const { return rows_; }
    const Projection& projection() const { return projection_; }

    bool has_edge(EdgeId id) const { return edge_index_.contains(id); }
    const RoadEdge& edge(EdgeId id) const;
    std::size_t edge_position(EdgeId id) const;
    bool has_node(NodeId id) const { return node_index_.contains(id); }
    std::size_t node_position(NodeId id) const;
    PlanePoint node_point(std::size_t node_pos) const { return node_xy_[node_pos]; }
    /// Out-edge positions of a node, ascending by edge id.
    std::span<const std::size_t> out_edges(std::size_t node_pos) const { return out_[node_pos]; }

    /// Up to max_k distinct-edge states within radius_m, ascending by distance,
    /// ties (equal to the nanometre) broken by edge id.
    std::vector<RoadState> nearest_road_states(PlanePoint p, double radius_m,
                                               std::size_t max_k) const;

    /// Closest state on a specific edge.
    RoadState project_onto_edge(PlanePoint p, const RoadEdge& e) const;

    double index_cell_m() const { return cell_m_; }

private:
    struct SegmentRef {
        std::uint32_t edge;
        std::uint32_t segment;
    };
    std::int64_t cell_key(std::int64_t cx, std::int64_t cy) const { return (cx << 32) ^ (cy & 0xffffffff); }

    std::vector<RoadNode> nodes_;
    std::vector<PlanePoint> node_xy_;
    std::vector<RoadEdge> edges_;
    std::vector<EdgeRow> rows_;
    std::unordered_map<NodeId, std::size_t> node_index_;
    std::unordered_map<EdgeId, std::size_t> edge_index_;
    std::vector<std::vector<std::size_t>> out_;
    Projection projection_;
    double cell_m_ = 50.0;
    std::unordered_map<std::int64_t, std::vector<SegmentRef>> grid_;
};

/// Parses the nodes file (`node_id,lon,lat`) and edges file
/// (`edge_id,from_node,to_node,speed_limit_kmh,oneway,geometry`).
RoadNetwork load_network(std::istream& nodes_src, std::istream& edges_src,
                         double index_cell_m = 50.0);
RoadNetwork load_network(const std::filesystem::path& nodes_file,
                         const std::filesystem::path& edges_file, double index_cell_m = 50.0);

void write_nodes(std::ostream& out, std::span<const RoadNode> nodes);
void write_edges(std::ostream& out, std::span<const EdgeRow> rows);

} // namespace crfmm
