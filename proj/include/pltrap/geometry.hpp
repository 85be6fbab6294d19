#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "pltrap/quadrature.hpp"

namespace pltrap {

// Axis-aligned box given by center and side lengths.
struct Box {
    Pt center{0, 0, 0};
    Pt sides{0, 0, 0};
    int d = 2;

    Box() = default;
    Box(int dim, const Pt& c, const Pt& s);
    static Box cube(int dim, const Pt& c, double side);

    double lo(int k) const { return center[k] - 0.5 * sides[k]; }
    double hi(int k) const { return center[k] + 0.5 * sides[k]; }
    double volume() const;
    double circumradius() const;
    bool contains(const Pt& x) const;                // closed box
    double dist_outside(const Pt& x) const;          // 0 if inside
    double dist_inside_to_faces(const Pt& x) const;  // 0 if outside
    Box intersect(const Box& o) const;               // empty -> sides 0
    bool empty() const;
};

// Spatial bucket index over a set of boxes (nearest-box and point membership
// queries). Read-only after construction.
class BoxIndex {
public:
    BoxIndex() = default;
    BoxIndex(const std::vector<Box>& boxes, int d);
    // index of some box containing x, or -1
    int find_containing(const Pt& x) const;
    // Euclidean distance from x to the nearest box (0 if inside one); inf if none
    double distance(const Pt& x) const;
    bool built() const { return built_; }

private:
    int64_t cell_of(const Pt& x, int axis) const;
    const std::vector<Box>* boxes_ = nullptr;
    int d_ = 2;
    double cell_ = 1.0;
    bool built_ = false;
    std::unordered_map<uint64_t, std::vector<int32_t>> buckets_;
    int64_t cmin_[3] = {0, 0, 0}, cmax_[3] = {0, 0, 0};
};

struct MaskData {
    double h = 0;
    Pt origin{0, 0, 0};                   // lower corner of cell (0,0,0)
    std::array<int64_t, 3> shape{1, 1, 1};
    std::vector<uint8_t> bits;            // row-major, 1 = in region
    int64_t idx(int64_t i, int64_t j, int64_t k) const {
        return (i * shape[1] + j) * shape[2] + k;
    }
};

// A trap-free / trap geometry: either a finite union of boxes minus a finite
// union of hole boxes, or a binary grid mask.
class Region {
public:
    enum class Kind { box_union, mask };

    static Region box_union(int d, std::vector<Box> parts, std::vector<Box> holes = {});
    static Region from_mask(int d, MaskData m);

    Kind kind() const { return kind_; }
    int dim() const { return d_; }
    const std::vector<Box>& parts() const { return parts_; }
    const std::vector<Box>& holes() const { return holes_; }
    const MaskData& mask() const { return mask_; }

    Box window() const { return window_; }
    bool contains(const Pt& x) const;
    // Euclidean distance from x to the topological boundary; exact for box
    // unions, within h*sqrt(d) for masks. x must lie in the bounding window.
    double distance_to_boundary(const Pt& x) const;
    double volume() const;

    Region scaled(double factor) const;
    Region translated(const Pt& shift) const;
    Region rasterized(double h) const;  // box union -> mask
    Region boxes_from_mask() const;     // mask -> one box per cell

    std::string to_json() const;
    static Region from_json(const std::string& text);

private:
    Region() = default;
    void finalize();

    Kind kind_ = Kind::box_union;
    int d_ = 2;
    std::vector<Box> parts_, holes_;
    MaskData mask_;
    Box window_;

    // caches, built once at construction
    struct Cell {
        double lo[3], hi[3];
        bool inside;
    };
    std::vector<Cell> arr_cells_;     // arrangement of the parts union
    BoxIndex part_index_, hole_index_;
    std::vector<float> edt_;          // per-cell distance (grid units) to the opposite phase

    double dist_to_union_complement(const Pt& x) const;
    friend Region make_box_union_unchecked(int, std::vector<Box>, std::vector<Box>);
};

struct PunchedDomainSpec {
    int n = 1;            // window is (-n, n)^d
    double delta = 0.5;   // hole spacing
    double hole_side = 0; // the paper-side 1/r
    int d = 2;
};

// (-n,n)^d minus the grid of holes C(delta*q, hole_side); holes meeting the
// window are clipped, holes outside are dropped.
Region build_punched_region(const PunchedDomainSpec& spec);

// integral of d(x, boundary)^theta over the region, midpoint rule.
// resolution <= 0 selects the default (min window side)/64.
double hole_functional(const Region& region, double theta, double resolution = 0.0);

double region_volume(const Region& region);

} // namespace pltrap
