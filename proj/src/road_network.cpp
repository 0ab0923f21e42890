#include "crfmm/road_network.hpp"

#include "crfmm/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace crfmm {

namespace {

constexpr double kEndpointToleranceDeg = 1e-6;

std::string row_context(const EdgeRow& row) {
    if (row.source_line > 0) return "line " + std::to_string(row.source_line);
    return "edge " + std::to_string(row.id);
}

bool same_position(GeoPoint a, GeoPoint b) {
    return std::fabs(a.lon - b.lon) <= kEndpointToleranceDeg &&
           std::fabs(a.lat - b.lat) <= kEndpointToleranceDeg;
}

// Index of the shape segment containing the offset.
std::size_t segment_at(const RoadEdge& e, double offset_m) {
    const auto it = std::upper_bound(e.cumulative.begin(), e.cumulative.end(), offset_m);
    std::size_t seg = it == e.cumulative.begin() ? 0 : static_cast<std::size_t>(it - e.cumulative.begin()) - 1;
    seg = std::min(seg, e.shape.size() - 2);
    // Skip degenerate (zero-length) segments.
    while (seg + 2 < e.shape.size() && e.cumulative[seg + 1] == e.cumulative[seg]) ++seg;
    while (seg > 0 && e.cumulative[seg + 1] == e.cumulative[seg]) --seg;
    return seg;
}

} // namespace

PlanePoint RoadEdge::point_at(double offset_m) const {
    offset_m = std::clamp(offset_m, 0.0, length_m);
    const std::size_t seg = segment_at(*this, offset_m);
    const double seg_len = cumulative[seg + 1] - cumulative[seg];
    if (seg_len <= 0.0) return shape[seg];
    const double t = (offset_m - cumulative[seg]) / seg_len;
    return shape[seg] + t * (shape[seg + 1] - shape[seg]);
}

double RoadEdge::bearing_at(double offset_m) const {
    const std::size_t seg = segment_at(*this, std::clamp(offset_m, 0.0, length_m));
    return bearing(shape[seg], shape[seg + 1]);
}

std::vector<PlanePoint> RoadEdge::slice(double from_m, double to_m) const {
    from_m = std::clamp(from_m, 0.0, length_m);
    to_m = std::clamp(to_m, from_m, length_m);
    std::vector<PlanePoint> out{point_at(from_m)};
    for (std::size_t i = 1; i + 1 < shape.size(); ++i) {
        if (cumulative[i] > from_m && cumulative[i] < to_m) out.push_back(shape[i]);
    }
    out.push_back(point_at(to_m));
    return out;
}

RoadNetwork RoadNetwork::build(std::vector<RoadNode> nodes, std::vector<EdgeRow> rows,
                               double index_cell_m) {
    if (!(index_cell_m > 0.0)) throw DataError("index cell size must be positive");
    RoadNetwork net;
    net.cell_m_ = index_cell_m;
    if (nodes.empty()) throw DataError("network has no nodes");

    GeoPoint centroid{0.0, 0.0};
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const RoadNode& n = nodes[i];
        if (!n.pos.valid()) throw DataError("node " + std::to_string(n.id) + ": invalid coordinates");
        if (!net.node_index_.emplace(n.id, i).second)
            throw DataError("duplicate node id " + std::to_string(n.id));
        centroid.lon += n.pos.lon;
        centroid.lat += n.pos.lat;
    }
    centroid.lon /= static_cast<double>(nodes.size());
    centroid.lat /= static_cast<double>(nodes.size());
    net.projection_ = Projection{centroid, kEarthRadiusM};
    net.nodes_ = std::move(nodes);
    for (const RoadNode& n : net.nodes_) net.node_xy_.push_back(net.projection_.to_plane(n.pos));

    auto make_edge = [&net](const EdgeRow& row, bool reversed) {
        RoadEdge e;
        e.id = reversed ? -row.id : row.id;
        e.from_node = reversed ? row.to_node : row.from_node;
        e.to_node = reversed ? row.from_node : row.to_node;
        e.polyline = row.geometry;
        if (reversed) std::reverse(e.polyline.begin(), e.polyline.end());
        e.speed_limit_kmh = row.speed_limit_kmh;
        e.oneway = row.oneway;
        if (!row.oneway) e.twin = reversed ? row.id : -row.id;
        double acc = 0.0;
        for (std::size_t i = 0; i < e.polyline.size(); ++i) {
            const PlanePoint p = net.projection_.to_plane(e.polyline[i]);
            if (i > 0) acc += distance(e.shape.back(), p);
            e.shape.push_back(p);
            e.cumulative.push_back(acc);
        }
        e.length_m = acc;
        return e;
    };

    for (const EdgeRow& row : rows) {
        const std::string ctx = row_context(row);
        if (!net.has_node(row.from_node))
            throw DataError(ctx + ": unknown node " + std::to_string(row.from_node));
        if (!net.has_node(row.to_node))
            throw DataError(ctx + ": unknown node " + std::to_string(row.to_node));
        if (!(row.speed_limit_kmh > 0.0) || row.speed_limit_kmh > 200.0)
            throw DataError(ctx + ": speed limit must be in (0, 200] km/h");
        if (!row.oneway && row.id <= 0)
            throw DataError(ctx + ": two-way edge ids must be positive");
        if (row.geometry.size() < 2) throw DataError(ctx + ": geometry needs at least 2 points");
        for (const GeoPoint& g : row.geometry)
            if (!g.valid()) throw DataError(ctx + ": invalid geometry coordinates");
        if (!same_position(row.geometry.front(), net.nodes_[net.node_position(row.from_node)].pos) ||
            !same_position(row.geometry.back(), net.nodes_[net.node_position(row.to_node)].pos))
            throw DataError(ctx + ": geometry endpoints do not match nodes");

        for (bool reversed : {false, true}) {
            if (reversed && row.oneway) break;
            RoadEdge e = make_edge(row, reversed);
            if (!(e.length_m > 0.0)) throw DataError(ctx + ": zero-length edge");
            if (!net.edge_index_.emplace(e.id, net.edges_.size()).second)
                throw DataError(ctx + ": duplicate edge id " + std::to_string(e.id));
            net.edges_.push_back(std::move(e));
        }
    }
    net.rows_ = std::move(rows);

    net.out_.assign(net.nodes_.size(), {});
    for (std::size_t i = 0; i < net.edges_.size(); ++i)
        net.out_[net.node_position(net.edges_[i].from_node)].push_back(i);
    for (auto& list : net.out_)
        std::sort(list.begin(), list.end(),
                  [&net](std::size_t a, std::size_t b) { return net.edges_[a].id < net.edges_[b].id; });

    for (std::size_t ei = 0; ei < net.edges_.size(); ++ei) {
        const RoadEdge& e = net.edges_[ei];
        for (std::size_t s = 0; s + 1 < e.shape.size(); ++s) {
            const PlanePoint a = e.shape[s];
            const PlanePoint b = e.shape[s + 1];
            const auto x0 = static_cast<std::int64_t>(std::floor(std::min(a.x, b.x) / net.cell_m_));
            const auto x1 = static_cast<std::int64_t>(std::floor(std::max(a.x, b.x) / net.cell_m_));
            const auto y0 = static_cast<std::int64_t>(std::floor(std::min(a.y, b.y) / net.cell_m_));
            const auto y1 = static_cast<std::int64_t>(std::floor(std::max(a.y, b.y) / net.cell_m_));
            for (auto cx = x0; cx <= x1; ++cx)
                for (auto cy = y0; cy <= y1; ++cy)
                    net.grid_[net.cell_key(cx, cy)].push_back(
                        {static_cast<std::uint32_t>(ei), static_cast<std::uint32_t>(s)});
        }
    }
    return net;
}

const RoadEdge& RoadNetwork::edge(EdgeId id) const { return edges_[edge_position(id)]; }

std::size_t RoadNetwork::edge_position(EdgeId id) const {
    const auto it = edge_index_.find(id);
    if (it == edge_index_.end()) throw DataError("unknown edge " + std::to_string(id));
    return it->second;
}

std::size_t RoadNetwork::node_position(NodeId id) const {
    const auto it = node_index_.find(id);
    if (it == node_index_.end()) throw DataError("unknown node " + std::to_string(id));
    return it->second;
}

RoadState RoadNetwork::project_onto_edge(PlanePoint p, const RoadEdge& e) const {
    RoadState best;
    best.edge_id = e.id;
    best.dist_m = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + 1 < e.shape.size(); ++s) {
        if (e.cumulative[s + 1] == e.cumulative[s]) continue;
        const SegmentProjection sp = project_onto_segment(p, e.shape[s], e.shape[s + 1]);
        if (sp.dist_m < best.dist_m) {
            best.dist_m = sp.dist_m;
            best.offset_m = std::min(e.cumulative[s] + sp.offset_m, e.length_m);
            best.point = sp.closest;
            best.road_bearing = bearing(e.shape[s], e.shape[s + 1]);
        }
    }
    return best;
}

std::vector<RoadState> RoadNetwork::nearest_road_states(PlanePoint p, double radius_m,
                                                        std::size_t max_k) const {
    std::vector<RoadState> found;
    if (!(radius_m > 0.0) || max_k == 0) return found;

    // Best segment hit per edge position.
    struct Hit {
        RoadState state;
        std::uint32_t segment = 0;
    };
    std::unordered_map<std::uint32_t, Hit> best;
    const auto x0 = static_cast<std::int64_t>(std::floor((p.x - radius_m) / cell_m_));
    const auto x1 = static_cast<std::int64_t>(std::floor((p.x + radius_m) / cell_m_));
    const auto y0 = static_cast<std::int64_t>(std::floor((p.y - radius_m) / cell_m_));
    const auto y1 = static_cast<std::int64_t>(std::floor((p.y + radius_m) / cell_m_));
    for (auto cx = x0; cx <= x1; ++cx) {
        for (auto cy = y0; cy <= y1; ++cy) {
            const auto it = grid_.find(cell_key(cx, cy));
            if (it == grid_.end()) continue;
            for (const SegmentRef& ref : it->second) {
                const RoadEdge& e = edges_[ref.edge];
                const std::size_t s = ref.segment;
                if (e.cumulative[s + 1] == e.cumulative[s]) continue;
                const SegmentProjection sp = project_onto_segment(p, e.shape[s], e.shape[s + 1]);
                if (sp.dist_m > radius_m) continue;
                auto [slot, inserted] = best.try_emplace(ref.edge);
                Hit& hit = slot->second;
                RoadState& st = hit.state;
                // Lowest segment index wins exact ties so the result does not
                // depend on grid traversal order.
                if (inserted || sp.dist_m < st.dist_m ||
                    (sp.dist_m == st.dist_m && ref.segment < hit.segment)) {
                    hit.segment = ref.segment;
                    st.edge_id = e.id;
                    st.dist_m = sp.dist_m;
                    st.offset_m = std::min(e.cumulative[s] + sp.offset_m, e.length_m);
                    st.point = sp.closest;
                    st.road_bearing = bearing(e.shape[s], e.shape[s + 1]);
                }
            }
        }
    }
    found.reserve(best.size());
    for (auto& [_, hit] : best) found.push_back(hit.state);
    // Twins see the same point at distances differing only by rounding, so
    // distances are compared at nanometre resolution before the id tie-break.
    const auto key = [](const RoadState& s) { return std::llround(s.dist_m * 1e9); };
    std::sort(found.begin(), found.end(), [&](const RoadState& a, const RoadState& b) {
        if (key(a) != key(b)) return key(a) < key(b);
        return a.edge_id < b.edge_id;
    });
    if (found.size() > max_k) found.resize(max_k);
    return found;
}

RoadNetwork load_network(std::istream& nodes_src, std::istream& edges_src, double index_cell_m) {
    std::string line;
    std::vector<RoadNode> nodes;
    std::size_t lineno = 0;
    if (!std::getline(nodes_src, line)) throw DataError("nodes file: missing header");
    ++lineno;
    if (text::trim(line) != "node_id,lon,lat") throw data_error_at(lineno, "nodes file: malformed header");
    while (std::getline(nodes_src, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto f = text::split(text::trim(line), ',');
        if (f.size() != 3) throw data_error_at(lineno, "nodes file: expected 3 fields");
        const auto id = text::parse_number<NodeId>(f[0]);
        const auto lon = text::parse_number<double>(f[1]);
        const auto lat = text::parse_number<double>(f[2]);
        if (!id || !lon || !lat) throw data_error_at(lineno, "nodes file: unparseable field");
        RoadNode n{*id, {*lon, *lat}};
        if (!n.pos.valid()) throw data_error_at(lineno, "nodes file: invalid coordinates");
        nodes.push_back(n);
    }

    std::vector<EdgeRow> rows;
    lineno = 0;
    if (!std::getline(edges_src, line)) throw DataError("edges file: missing header");
    ++lineno;
    if (text::trim(line) != "edge_id,from_node,to_node,speed_limit_kmh,oneway,geometry")
        throw data_error_at(lineno, "edges file: malformed header");
    while (std::getline(edges_src, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto f = text::split(text::trim(line), ',');
        if (f.size() != 6) throw data_error_at(lineno, "edges file: expected 6 fields");
        EdgeRow row;
        row.source_line = lineno;
        const auto id = text::parse_number<EdgeId>(f[0]);
        const auto from = text::parse_number<NodeId>(f[1]);
        const auto to = text::parse_number<NodeId>(f[2]);
        const auto speed = text::parse_number<double>(f[3]);
        const auto oneway = text::parse_number<int>(f[4]);
        if (!id || !from || !to || !speed || !oneway || (*oneway != 0 && *oneway != 1))
            throw data_error_at(lineno, "edges file: unparseable field");
        row.id = *id;
        row.from_node = *from;
        row.to_node = *to;
        row.speed_limit_kmh = *speed;
        row.oneway = *oneway == 1;
        for (std::string_view vertex : text::split(f[5], ';')) {
            const auto xy = text::tokens(vertex);
            if (xy.size() != 2) throw data_error_at(lineno, "edges file: malformed geometry");
            const auto lon = text::parse_number<double>(xy[0]);
            const auto lat = text::parse_number<double>(xy[1]);
            if (!lon || !lat) throw data_error_at(lineno, "edges file: malformed geometry");
            row.geometry.push_back({*lon, *lat});
        }
        rows.push_back(std::move(row));
    }
    return RoadNetwork::build(std::move(nodes), std::move(rows), index_cell_m);
}

RoadNetwork load_network(const std::filesystem::path& nodes_file,
                         const std::filesystem::path& edges_file, double index_cell_m) {
    std::ifstream nodes(nodes_file);
    if (!nodes) throw DataError("cannot open " + nodes_file.string());
    std::ifstream edges(edges_file);
    if (!edges) throw DataError("cannot open " + edges_file.string());
    return load_network(nodes, edges, index_cell_m);
}

void write_nodes(std::ostream& out, std::span<const RoadNode> nodes) {
    out << "node_id,lon,lat\n";
    for (const RoadNode& n : nodes)
        out << n.id << ',' << text::fixed(n.pos.lon, 7) << ',' << text::fixed(n.pos.lat, 7) << '\n';
}

void write_edges(std::ostream& out, std::span<const EdgeRow> rows) {
    out << "edge_id,from_node,to_node,speed_limit_kmh,oneway,geometry\n";
    for (const EdgeRow& r : rows) {
        out << r.id << ',' << r.from_node << ',' << r.to_node << ',' << text::fixed(r.speed_limit_kmh, 1)
            << ',' << (r.oneway ? 1 : 0) << ',';
        for (std::size_t i = 0; i < r.geometry.size(); ++i) {
            if (i > 0) out << ';';
            out << text::fixed(r.geometry[i].lon, 7) << ' ' << text::fixed(r.geometry[i].lat, 7);
        }
        out << '\n';
    }
}

} // namespace crfmm
