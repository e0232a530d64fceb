#ifndef FLOWNET_GRID_HPP
#define FLOWNET_GRID_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flownet/common.hpp"

namespace flownet {

struct GridNode {
    int ix = 0;
    int iy = 0;
    double x = 0.0;   // km
    double y = 0.0;   // km
    double u = 0.0;   // eastward velocity component
    double v = 0.0;   // northward velocity component
    std::optional<double> value;  // scalar observation, missing on land
    bool is_water = false;
};

// Regular planar grid carrying velocity components and optional scalar
// observations. Land nodes are kept so that the network construction can
// route probability mass off-domain.
struct VelocityGrid {
    int nx = 0;
    int ny = 0;
    double spacing_x = 0.0;  // km
    double spacing_y = 0.0;  // km
    std::vector<GridNode> nodes;

    const GridNode* at(int ix, int iy) const {
        if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return nullptr;
        auto idx = lookup_[static_cast<std::size_t>(iy) * nx + ix];
        return idx < 0 ? nullptr : &nodes[static_cast<std::size_t>(idx)];
    }

    void rebuild_index() {
        lookup_.assign(static_cast<std::size_t>(nx) * ny, -1);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& n = nodes[i];
            lookup_[static_cast<std::size_t>(n.iy) * nx + n.ix] =
                static_cast<std::int64_t>(i);
        }
    }

private:
    std::vector<std::int64_t> lookup_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline double parse_double(const std::string& s, std::size_t line_no,
                           const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw validation_error("line " + std::to_string(line_no) +
                               ": malformed " + what + " field '" + s + "'");
    }
}

}  // namespace detail

// Parses the CSV grid format `ix,iy,x,y,u,v,value`. The literal `NA`
// (case-sensitive) marks a missing observation; a node is water when it
// carries a value. Spacing is inferred from coordinate deltas.
inline VelocityGrid parse_grid(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw validation_error("empty grid file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ix,iy,x,y,u,v,value")
        throw validation_error("expected header 'ix,iy,x,y,u,v,value', got '" +
                               line + "'");

    VelocityGrid grid;
    std::set<std::pair<int, int>> seen;
    int max_ix = -1, max_iy = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 7)
            throw validation_error("line " + std::to_string(line_no) +
                                   ": expected 7 fields, got " +
                                   std::to_string(f.size()));
        GridNode node;
        node.ix = static_cast<int>(detail::parse_double(f[0], line_no, "ix"));
        node.iy = static_cast<int>(detail::parse_double(f[1], line_no, "iy"));
        node.x = detail::parse_double(f[2], line_no, "x");
        node.y = detail::parse_double(f[3], line_no, "y");
        node.u = detail::parse_double(f[4], line_no, "u");
        node.v = detail::parse_double(f[5], line_no, "v");
        if (f[6] != "NA") {
            node.value = detail::parse_double(f[6], line_no, "value");
        }
        // Water nodes either carry an observation or a nonzero current;
        // NA rows with zero velocity are land.
        node.is_water = node.value.has_value() || node.u != 0.0 || node.v != 0.0;
        if (node.ix < 0 || node.iy < 0)
            throw validation_error("line " + std::to_string(line_no) +
                                   ": negative grid index");
        if (!seen.insert({node.ix, node.iy}).second)
            throw validation_error("line " + std::to_string(line_no) +
                                   ": duplicate grid index (" +
                                   std::to_string(node.ix) + "," +
                                   std::to_string(node.iy) + ")");
        max_ix = std::max(max_ix, node.ix);
        max_iy = std::max(max_iy, node.iy);
        grid.nodes.push_back(node);
    }
    if (grid.nodes.empty()) throw validation_error("grid has no rows");

    grid.nx = max_ix + 1;
    grid.ny = max_iy + 1;

    // Infer spacing from the smallest positive coordinate delta per axis.
    double sx = std::numeric_limits<double>::infinity();
    double sy = std::numeric_limits<double>::infinity();
    for (const auto& a : grid.nodes)
        for (const auto& b : grid.nodes) {
            if (a.ix != b.ix) {
                double d = std::abs(a.x - b.x) / std::abs(a.ix - b.ix);
                if (d > 0) sx = std::min(sx, d);
            }
            if (a.iy != b.iy) {
                double d = std::abs(a.y - b.y) / std::abs(a.iy - b.iy);
                if (d > 0) sy = std::min(sy, d);
            }
        }
    if (grid.nx > 1) {
        if (!std::isfinite(sx) || sx <= 0)
            throw validation_error("non-positive inferred x spacing");
        grid.spacing_x = sx;
    } else {
        grid.spacing_x = 1.0;
    }
    if (grid.ny > 1) {
        if (!std::isfinite(sy) || sy <= 0)
            throw validation_error("non-positive inferred y spacing");
        grid.spacing_y = sy;
    } else {
        grid.spacing_y = 1.0;
    }

    std::size_t water = 0;
    for (const auto& n : grid.nodes) water += n.is_water ? 1 : 0;
    if (water < 1)
        throw validation_error("grid has no water nodes");

    grid.rebuild_index();
    return grid;
}

}  // namespace flownet

#endif
