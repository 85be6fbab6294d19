#include "pltrap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace pltrap {

namespace {
const double kInf = std::numeric_limits<double>::infinity();

std::string base64_encode(const std::vector<uint8_t>& in) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 2 < in.size()) {
        uint32_t v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
        out += tbl[(v >> 18) & 63]; out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];  out += tbl[v & 63];
        i += 3;
    }
    if (i + 1 == in.size()) {
        uint32_t v = in[i] << 16;
        out += tbl[(v >> 18) & 63]; out += tbl[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == in.size()) {
        uint32_t v = (in[i] << 16) | (in[i + 1] << 8);
        out += tbl[(v >> 18) & 63]; out += tbl[(v >> 12) & 63]; out += tbl[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::vector<uint8_t> base64_decode(const std::string& in) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<uint8_t> out;
    uint32_t buf = 0;
    int nbits = 0;
    for (char c : in) {
        int v = val(c);
        if (v < 0) continue;
        buf = (buf << 6) | uint32_t(v);
        nbits += 6;
        if (nbits >= 8) {
            nbits -= 8;
            out.push_back(uint8_t((buf >> nbits) & 0xff));
        }
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------- Box

Box::Box(int dim, const Pt& c, const Pt& s) : center(c), sides(s), d(dim) {
    for (int k = 0; k < d; ++k)
        if (!(sides[k] > 0)) throw std::invalid_argument("Box: side lengths must be positive");
    if (d != 2 && d != 3) throw std::invalid_argument("Box: d must be 2 or 3");
}

Box Box::cube(int dim, const Pt& c, double side) {
    Pt s{0, 0, 0};
    for (int k = 0; k < dim; ++k) s[k] = side;
    return Box(dim, c, s);
}

double Box::volume() const {
    double v = 1.0;
    for (int k = 0; k < d; ++k) v *= sides[k];
    return v;
}

double Box::circumradius() const {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += 0.25 * sides[k] * sides[k];
    return std::sqrt(s);
}

bool Box::contains(const Pt& x) const {
    for (int k = 0; k < d; ++k)
        if (x[k] < lo(k) || x[k] > hi(k)) return false;
    return true;
}

double Box::dist_outside(const Pt& x) const {
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
        double g = std::max({lo(k) - x[k], x[k] - hi(k), 0.0});
        s += g * g;
    }
    return std::sqrt(s);
}

double Box::dist_inside_to_faces(const Pt& x) const {
    double m = kInf;
    for (int k = 0; k < d; ++k) {
        m = std::min(m, x[k] - lo(k));
        m = std::min(m, hi(k) - x[k]);
    }
    return std::max(m, 0.0);
}

Box Box::intersect(const Box& o) const {
    Box r;
    r.d = d;
    bool nonempty = true;
    for (int k = 0; k < d; ++k) {
        double a = std::max(lo(k), o.lo(k)), b = std::min(hi(k), o.hi(k));
        if (b <= a) { nonempty = false; break; }
        r.center[k] = 0.5 * (a + b);
        r.sides[k] = b - a;
    }
    if (!nonempty) { r.sides = {0, 0, 0}; }
    return r;
}

bool Box::empty() const {
    for (int k = 0; k < d; ++k)
        if (!(sides[k] > 0)) return true;
    return false;
}

// ---------------------------------------------------------------- BoxIndex

BoxIndex::BoxIndex(const std::vector<Box>& boxes, int d) : boxes_(&boxes), d_(d) {
    if (boxes.empty()) return;
    double maxside = 0.0;
    for (const Box& b : boxes)
        for (int k = 0; k < d; ++k) maxside = std::max(maxside, b.sides[k]);
    cell_ = std::max(maxside, 1e-12);
    for (int k = 0; k < d; ++k) { cmin_[k] = INT64_MAX; cmax_[k] = INT64_MIN; }
    for (size_t i = 0; i < boxes.size(); ++i) {
        int64_t clo[3] = {0, 0, 0}, chi[3] = {0, 0, 0};
        for (int k = 0; k < d; ++k) {
            clo[k] = int64_t(std::floor(boxes[i].lo(k) / cell_));
            chi[k] = int64_t(std::floor(boxes[i].hi(k) / cell_));
            cmin_[k] = std::min(cmin_[k], clo[k]);
            cmax_[k] = std::max(cmax_[k], chi[k]);
        }
        int64_t zlo = (d == 3) ? clo[2] : 0, zhi = (d == 3) ? chi[2] : 0;
        for (int64_t a = clo[0]; a <= chi[0]; ++a)
            for (int64_t b = clo[1]; b <= chi[1]; ++b)
                for (int64_t c = zlo; c <= zhi; ++c) {
                    uint64_t key = (uint64_t(a) * 0x9e3779b97f4a7c15ULL) ^
                                   (uint64_t(b) * 0xc2b2ae3d27d4eb4fULL) ^
                                   (uint64_t(c) * 0x165667b19e3779f9ULL);
                    buckets_[key].push_back(int32_t(i));
                }
    }
    built_ = true;
}

int64_t BoxIndex::cell_of(const Pt& x, int axis) const {
    return int64_t(std::floor(x[axis] / cell_));
}

int BoxIndex::find_containing(const Pt& x) const {
    int64_t a = cell_of(x, 0), b = cell_of(x, 1), c = (d_ == 3) ? cell_of(x, 2) : 0;
    uint64_t key = (uint64_t(a) * 0x9e3779b97f4a7c15ULL) ^
                   (uint64_t(b) * 0xc2b2ae3d27d4eb4fULL) ^
                   (uint64_t(c) * 0x165667b19e3779f9ULL);
    auto it = buckets_.find(key);
    if (it == buckets_.end()) return -1;
    for (int32_t i : it->second)
        if ((*boxes_)[i].contains(x)) return i;
    return -1;
}

double BoxIndex::distance(const Pt& x) const {
    if (!built_ || boxes_->empty()) return kInf;
    int64_t cc[3] = {cell_of(x, 0), cell_of(x, 1), (d_ == 3) ? cell_of(x, 2) : 0};
    double best = kInf;
    int64_t maxring = 0;
    for (int k = 0; k < d_; ++k)
        maxring = std::max({maxring, cc[k] - cmin_[k], cmax_[k] - cc[k]});
    for (int64_t ring = 0; ring <= maxring + 1; ++ring) {
        if (best < double(ring - 1) * cell_) break;
        int64_t zlo = (d_ == 3) ? cc[2] - ring : 0, zhi = (d_ == 3) ? cc[2] + ring : 0;
        for (int64_t a = cc[0] - ring; a <= cc[0] + ring; ++a)
            for (int64_t b = cc[1] - ring; b <= cc[1] + ring; ++b)
                for (int64_t c = zlo; c <= zhi; ++c) {
                    int64_t ch = std::max({std::llabs(a - cc[0]), std::llabs(b - cc[1]),
                                           (d_ == 3) ? std::llabs(c - cc[2]) : 0});
                    if (ch != ring) continue;
                    uint64_t key = (uint64_t(a) * 0x9e3779b97f4a7c15ULL) ^
                                   (uint64_t(b) * 0xc2b2ae3d27d4eb4fULL) ^
                                   (uint64_t(c) * 0x165667b19e3779f9ULL);
                    auto it = buckets_.find(key);
                    if (it == buckets_.end()) continue;
                    for (int32_t i : it->second)
                        best = std::min(best, (*boxes_)[i].dist_outside(x));
                }
        if (best == 0.0) break;
    }
    return best;
}

// ---------------------------------------------------------------- Region

Region Region::box_union(int d, std::vector<Box> parts, std::vector<Box> holes) {
    Region r;
    r.kind_ = Kind::box_union;
    r.d_ = d;
    for (auto& b : parts)
        if (b.d != d) throw std::invalid_argument("Region: box dimension mismatch");
    for (auto& b : holes)
        if (b.d != d) throw std::invalid_argument("Region: hole dimension mismatch");
    r.parts_ = std::move(parts);
    r.holes_ = std::move(holes);
    r.finalize();
    return r;
}

Region Region::from_mask(int d, MaskData m) {
    if (!(m.h > 0)) throw std::invalid_argument("Region: mask spacing must be positive");
    int64_t total = 1;
    for (int k = 0; k < d; ++k) total *= m.shape[k];
    if (d == 2) m.shape[2] = 1;
    if (int64_t(m.bits.size()) != total) throw std::invalid_argument("Region: mask bit count mismatch");
    Region r;
    r.kind_ = Kind::mask;
    r.d_ = d;
    r.mask_ = std::move(m);
    r.finalize();
    return r;
}

namespace {

// 1D squared-distance transform (lower envelope of parabolas)
void dt1d(const std::vector<double>& f, std::vector<double>& out) {
    const int n = int(f.size());
    out.assign(n, kInf);
    std::vector<int> finite;
    for (int q = 0; q < n; ++q)
        if (f[q] < kInf) finite.push_back(q);
    if (finite.empty()) return;
    std::vector<int> v(finite.size());
    std::vector<double> z(finite.size() + 1);
    int k = 0;
    v[0] = finite[0];
    z[0] = -kInf;
    z[1] = kInf;
    for (size_t m = 1; m < finite.size(); ++m) {
        int q = finite[m];
        double s;
        while (true) {
            int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * double(q - p));
            if (s <= z[k]) --k;
            else break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < double(q)) ++k;
        double dq = double(q - v[k]);
        out[q] = dq * dq + f[v[k]];
    }
}

// full EDT over a padded grid: dist (in cells) from each cell to nearest seed
std::vector<double> edt_nd(const std::array<int64_t, 3>& shape, int d,
                           const std::vector<uint8_t>& seed) {
    int64_t nx = shape[0], ny = shape[1], nz = (d == 3) ? shape[2] : 1;
    std::vector<double> g(size_t(nx * ny * nz));
    for (size_t i = 0; i < g.size(); ++i) g[i] = seed[i] ? 0.0 : kInf;
    auto idx = [&](int64_t i, int64_t j, int64_t k) { return (i * ny + j) * nz + k; };
    std::vector<double> line, out;
    // x pass
    for (int64_t j = 0; j < ny; ++j)
        for (int64_t k = 0; k < nz; ++k) {
            line.resize(nx);
            for (int64_t i = 0; i < nx; ++i) line[i] = g[idx(i, j, k)];
            dt1d(line, out);
            for (int64_t i = 0; i < nx; ++i) g[idx(i, j, k)] = out[i];
        }
    // y pass
    for (int64_t i = 0; i < nx; ++i)
        for (int64_t k = 0; k < nz; ++k) {
            line.resize(ny);
            for (int64_t j = 0; j < ny; ++j) line[j] = g[idx(i, j, k)];
            dt1d(line, out);
            for (int64_t j = 0; j < ny; ++j) g[idx(i, j, k)] = out[j];
        }
    if (d == 3) {
        for (int64_t i = 0; i < nx; ++i)
            for (int64_t j = 0; j < ny; ++j) {
                line.resize(nz);
                for (int64_t k = 0; k < nz; ++k) line[k] = g[idx(i, j, k)];
                dt1d(line, out);
                for (int64_t k = 0; k < nz; ++k) g[idx(i, j, k)] = out[k];
            }
    }
    return g;
}

} // namespace

void Region::finalize() {
    if (kind_ == Kind::box_union) {
        if (parts_.empty()) {
            window_.d = d_;
            window_.center = {0, 0, 0};
            window_.sides = {0, 0, 0};
            return;
        }
        // bounding window
        Pt lo{kInf, kInf, kInf}, hi{-kInf, -kInf, -kInf};
        for (const Box& b : parts_)
            for (int k = 0; k < d_; ++k) {
                lo[k] = std::min(lo[k], b.lo(k));
                hi[k] = std::max(hi[k], b.hi(k));
            }
        window_.d = d_;
        for (int k = 0; k < d_; ++k) {
            window_.center[k] = 0.5 * (lo[k] + hi[k]);
            window_.sides[k] = hi[k] - lo[k];
        }

        // holes must be pairwise disjoint (interiors)
        for (size_t i = 0; i < holes_.size(); ++i)
            for (size_t j = i + 1; j < holes_.size(); ++j)
                if (!holes_[i].intersect(holes_[j]).empty())
                    throw std::invalid_argument("Region: holes overlap");

        // arrangement cells of the parts union
        std::array<std::vector<double>, 3> cuts;
        for (int k = 0; k < d_; ++k) {
            for (const Box& b : parts_) {
                cuts[k].push_back(b.lo(k));
                cuts[k].push_back(b.hi(k));
            }
            std::sort(cuts[k].begin(), cuts[k].end());
            cuts[k].erase(std::unique(cuts[k].begin(), cuts[k].end()), cuts[k].end());
        }
        auto cell_bounds = [&](int k, size_t idx, double& a, double& b) {
            // idx in [0, cuts+1): 0 is (-inf, first), last is (last, inf)
            a = (idx == 0) ? -kInf : cuts[k][idx - 1];
            b = (idx == cuts[k].size()) ? kInf : cuts[k][idx];
        };
        size_t n0 = cuts[0].size() + 1, n1 = cuts[1].size() + 1,
               n2 = (d_ == 3) ? cuts[2].size() + 1 : 1;
        arr_cells_.clear();
        for (size_t i = 0; i < n0; ++i)
            for (size_t j = 0; j < n1; ++j)
                for (size_t k = 0; k < n2; ++k) {
                    Cell c{};
                    cell_bounds(0, i, c.lo[0], c.hi[0]);
                    cell_bounds(1, j, c.lo[1], c.hi[1]);
                    if (d_ == 3) cell_bounds(2, k, c.lo[2], c.hi[2]);
                    else { c.lo[2] = -kInf; c.hi[2] = kInf; }
                    if (c.lo[0] >= c.hi[0] || c.lo[1] >= c.hi[1] || c.lo[2] >= c.hi[2]) continue;
                    Pt rep;
                    for (int a = 0; a < 3; ++a) {
                        if (c.lo[a] == -kInf && c.hi[a] == kInf) rep[a] = 0.0;
                        else if (c.lo[a] == -kInf) rep[a] = c.hi[a] - 1.0;
                        else if (c.hi[a] == kInf) rep[a] = c.lo[a] + 1.0;
                        else rep[a] = 0.5 * (c.lo[a] + c.hi[a]);
                    }
                    c.inside = false;
                    for (const Box& b : parts_)
                        if (b.contains(rep)) { c.inside = true; break; }
                    arr_cells_.push_back(c);
                }

        if (parts_.size() > 24) part_index_ = BoxIndex(parts_, d_);
        if (holes_.size() > 24) hole_index_ = BoxIndex(holes_, d_);
    } else {
        window_.d = d_;
        for (int k = 0; k < d_; ++k) {
            window_.sides[k] = mask_.h * double(mask_.shape[k]);
            window_.center[k] = mask_.origin[k] + 0.5 * window_.sides[k];
        }
        // EDT to the opposite phase, padded by one ring of out-cells
        std::array<int64_t, 3> ps{mask_.shape[0] + 2, mask_.shape[1] + 2,
                                  (d_ == 3) ? mask_.shape[2] + 2 : 1};
        int64_t nz = ps[2];
        std::vector<uint8_t> out_seed(size_t(ps[0] * ps[1] * nz), 1);
        std::vector<uint8_t> in_seed(size_t(ps[0] * ps[1] * nz), 0);
        for (int64_t i = 0; i < mask_.shape[0]; ++i)
            for (int64_t j = 0; j < mask_.shape[1]; ++j)
                for (int64_t k = 0; k < ((d_ == 3) ? mask_.shape[2] : 1); ++k) {
                    uint8_t v = mask_.bits[mask_.idx(i, j, k)];
                    int64_t p = ((i + 1) * ps[1] + (j + 1)) * nz + ((d_ == 3) ? k + 1 : 0);
                    out_seed[p] = v ? 0 : 1;
                    in_seed[p] = v ? 1 : 0;
                }
        auto d_out = edt_nd(ps, d_, out_seed); // distance to out-phase
        auto d_in = edt_nd(ps, d_, in_seed);   // distance to in-phase
        edt_.resize(mask_.bits.size());
        for (int64_t i = 0; i < mask_.shape[0]; ++i)
            for (int64_t j = 0; j < mask_.shape[1]; ++j)
                for (int64_t k = 0; k < ((d_ == 3) ? mask_.shape[2] : 1); ++k) {
                    int64_t p = ((i + 1) * ps[1] + (j + 1)) * nz + ((d_ == 3) ? k + 1 : 0);
                    double sq = mask_.bits[mask_.idx(i, j, k)] ? d_out[p] : d_in[p];
                    edt_[mask_.idx(i, j, k)] = float(std::sqrt(sq));
                }
    }
}

bool Region::contains(const Pt& x) const {
    if (kind_ == Kind::box_union) {
        bool in_part = false;
        if (part_index_.built()) {
            in_part = part_index_.find_containing(x) >= 0;
        } else {
            for (const Box& b : parts_)
                if (b.contains(x)) { in_part = true; break; }
        }
        if (!in_part) return false;
        if (hole_index_.built()) return hole_index_.find_containing(x) < 0;
        for (const Box& b : holes_)
            if (b.contains(x)) return false;
        return true;
    }
    for (int k = 0; k < d_; ++k)
        if (x[k] < mask_.origin[k] || x[k] >= mask_.origin[k] + mask_.h * double(mask_.shape[k]))
            return false;
    int64_t i = int64_t((x[0] - mask_.origin[0]) / mask_.h);
    int64_t j = int64_t((x[1] - mask_.origin[1]) / mask_.h);
    int64_t k = (d_ == 3) ? int64_t((x[2] - mask_.origin[2]) / mask_.h) : 0;
    i = std::min(i, mask_.shape[0] - 1);
    j = std::min(j, mask_.shape[1] - 1);
    k = std::min(k, (d_ == 3) ? mask_.shape[2] - 1 : 0);
    return mask_.bits[mask_.idx(i, j, k)] != 0;
}

double Region::dist_to_union_complement(const Pt& x) const {
    double best = kInf;
    for (const Cell& c : arr_cells_) {
        if (c.inside) continue;
        double s = 0.0;
        for (int k = 0; k < d_; ++k) {
            double g = 0.0;
            if (c.lo[k] != -kInf) g = std::max(g, c.lo[k] - x[k]);
            if (c.hi[k] != kInf) g = std::max(g, x[k] - c.hi[k]);
            s += g * g;
        }
        best = std::min(best, s);
    }
    return std::sqrt(best);
}

double Region::distance_to_boundary(const Pt& x) const {
    const double eps = 1e-12 * (1.0 + window_.circumradius());
    for (int k = 0; k < d_; ++k)
        if (x[k] < window_.lo(k) - eps || x[k] > window_.hi(k) + eps)
            throw std::domain_error("distance_to_boundary: point outside bounding window");

    if (kind_ == Kind::mask) {
        int64_t i = std::clamp(int64_t((x[0] - mask_.origin[0]) / mask_.h), int64_t(0), mask_.shape[0] - 1);
        int64_t j = std::clamp(int64_t((x[1] - mask_.origin[1]) / mask_.h), int64_t(0), mask_.shape[1] - 1);
        int64_t k = (d_ == 3)
            ? std::clamp(int64_t((x[2] - mask_.origin[2]) / mask_.h), int64_t(0), mask_.shape[2] - 1)
            : 0;
        double dcells = edt_[mask_.idx(i, j, k)];
        return std::max(0.0, (dcells - 0.5) * mask_.h);
    }

    int hole_at = -1;
    if (hole_index_.built()) hole_at = hole_index_.find_containing(x);
    else
        for (size_t i = 0; i < holes_.size(); ++i)
            if (holes_[i].contains(x)) { hole_at = int(i); break; }

    bool in_part = part_index_.built()
        ? part_index_.find_containing(x) >= 0
        : [&] { for (const Box& b : parts_) if (b.contains(x)) return true; return false; }();

    if (in_part && hole_at < 0) {
        double d1 = dist_to_union_complement(x);
        double d2 = kInf;
        if (!holes_.empty())
            d2 = hole_index_.built()
                ? hole_index_.distance(x)
                : [&] { double m = kInf; for (const Box& b : holes_) m = std::min(m, b.dist_outside(x)); return m; }();
        return std::min(d1, d2);
    }
    if (hole_at >= 0) {
        // only faces adjacent to the region belong to the boundary; a face of a
        // window-clipped hole that lies on the outer boundary does not
        const Box& hb = holes_[size_t(hole_at)];
        double probe_eps = 1e-9 * (1.0 + window_.circumradius());
        double best = kInf;
        for (int k = 0; k < d_; ++k)
            for (int side = 0; side < 2; ++side) {
                Pt probe = hb.center;
                probe[k] = side == 0 ? hb.lo(k) - probe_eps : hb.hi(k) + probe_eps;
                if (!contains(probe)) continue;
                best = std::min(best, side == 0 ? x[k] - hb.lo(k) : hb.hi(k) - x[k]);
            }
        if (best < kInf) return std::max(best, 0.0);
        return hb.dist_inside_to_faces(x);
    }
    // outside the union
    double m = kInf;
    for (const Box& b : parts_) m = std::min(m, b.dist_outside(x));
    return m;
}

double Region::volume() const {
    if (kind_ == Kind::mask) {
        int64_t cnt = 0;
        for (uint8_t b : mask_.bits) cnt += b;
        return double(cnt) * std::pow(mask_.h, d_);
    }
    double vol = 0.0;
    for (const Cell& c : arr_cells_) {
        if (!c.inside) continue;
        double v = 1.0;
        for (int k = 0; k < d_; ++k) v *= c.hi[k] - c.lo[k];
        vol += v;
    }
    // subtract hole volume clipped to the union (holes are pairwise disjoint)
    for (const Box& h : holes_) {
        for (const Cell& c : arr_cells_) {
            if (!c.inside) continue;
            double v = 1.0;
            for (int k = 0; k < d_; ++k) {
                double a = std::max(h.lo(k), c.lo[k]), b = std::min(h.hi(k), c.hi[k]);
                if (b <= a) { v = 0.0; break; }
                v *= b - a;
            }
            vol -= v;
        }
    }
    return vol;
}

Region Region::scaled(double factor) const {
    if (!(factor > 0)) throw std::invalid_argument("Region::scaled: factor must be positive");
    if (kind_ == Kind::mask) {
        MaskData m = mask_;
        m.h *= factor;
        for (int k = 0; k < d_; ++k) m.origin[k] *= factor;
        return from_mask(d_, std::move(m));
    }
    auto scale_box = [&](Box b) {
        for (int k = 0; k < d_; ++k) { b.center[k] *= factor; b.sides[k] *= factor; }
        return b;
    };
    std::vector<Box> p, h;
    for (const Box& b : parts_) p.push_back(scale_box(b));
    for (const Box& b : holes_) h.push_back(scale_box(b));
    return box_union(d_, std::move(p), std::move(h));
}

Region Region::translated(const Pt& shift) const {
    if (kind_ == Kind::mask) {
        MaskData m = mask_;
        for (int k = 0; k < d_; ++k) m.origin[k] += shift[k];
        return from_mask(d_, std::move(m));
    }
    auto move_box = [&](Box b) {
        for (int k = 0; k < d_; ++k) b.center[k] += shift[k];
        return b;
    };
    std::vector<Box> p, h;
    for (const Box& b : parts_) p.push_back(move_box(b));
    for (const Box& b : holes_) h.push_back(move_box(b));
    return box_union(d_, std::move(p), std::move(h));
}

Region Region::rasterized(double h) const {
    if (!(h > 0)) throw std::invalid_argument("rasterized: h must be positive");
    Box w = window();
    MaskData m;
    m.h = h;
    for (int k = 0; k < d_; ++k) {
        m.shape[k] = std::max<int64_t>(1, int64_t(std::llround(w.sides[k] / h)));
        m.origin[k] = w.lo(k);
    }
    if (d_ == 2) m.shape[2] = 1;
    int64_t total = m.shape[0] * m.shape[1] * ((d_ == 3) ? m.shape[2] : 1);
    m.bits.assign(size_t(total), 0);
    for (int64_t i = 0; i < m.shape[0]; ++i)
        for (int64_t j = 0; j < m.shape[1]; ++j)
            for (int64_t k = 0; k < ((d_ == 3) ? m.shape[2] : 1); ++k) {
                Pt c{m.origin[0] + (double(i) + 0.5) * h, m.origin[1] + (double(j) + 0.5) * h,
                     (d_ == 3) ? m.origin[2] + (double(k) + 0.5) * h : 0.0};
                m.bits[m.idx(i, j, k)] = contains(c) ? 1 : 0;
            }
    return from_mask(d_, std::move(m));
}

Region Region::boxes_from_mask() const {
    if (kind_ != Kind::mask) throw std::invalid_argument("boxes_from_mask: not a mask region");
    std::vector<Box> p;
    for (int64_t i = 0; i < mask_.shape[0]; ++i)
        for (int64_t j = 0; j < mask_.shape[1]; ++j)
            for (int64_t k = 0; k < ((d_ == 3) ? mask_.shape[2] : 1); ++k) {
                if (!mask_.bits[mask_.idx(i, j, k)]) continue;
                Pt c{mask_.origin[0] + (double(i) + 0.5) * mask_.h,
                     mask_.origin[1] + (double(j) + 0.5) * mask_.h,
                     (d_ == 3) ? mask_.origin[2] + (double(k) + 0.5) * mask_.h : 0.0};
                p.push_back(Box::cube(d_, c, mask_.h));
            }
    return box_union(d_, std::move(p));
}

std::string Region::to_json() const {
    nlohmann::json j;
    j["d"] = d_;
    if (kind_ == Kind::box_union) {
        j["kind"] = "box_union";
        auto dump_boxes = [&](const std::vector<Box>& bs) {
            nlohmann::json arr = nlohmann::json::array();
            for (const Box& b : bs) {
                nlohmann::json c = nlohmann::json::array(), s = nlohmann::json::array();
                for (int k = 0; k < d_; ++k) { c.push_back(b.center[k]); s.push_back(b.sides[k]); }
                arr.push_back(nlohmann::json::array({c, s}));
            }
            return arr;
        };
        j["boxes"] = dump_boxes(parts_);
        if (!holes_.empty()) j["holes"] = dump_boxes(holes_);
    } else {
        j["kind"] = "mask";
        nlohmann::json m;
        m["h"] = mask_.h;
        nlohmann::json o = nlohmann::json::array(), sh = nlohmann::json::array();
        for (int k = 0; k < d_; ++k) { o.push_back(mask_.origin[k]); sh.push_back(mask_.shape[k]); }
        m["origin"] = o;
        m["shape"] = sh;
        // pack bits, row-major
        std::vector<uint8_t> packed((mask_.bits.size() + 7) / 8, 0);
        for (size_t i = 0; i < mask_.bits.size(); ++i)
            if (mask_.bits[i]) packed[i / 8] |= uint8_t(1u << (i % 8));
        m["bits"] = base64_encode(packed);
        j["mask"] = m;
    }
    return j.dump();
}

Region Region::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    int d = j.at("d").get<int>();
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "box_union") {
        auto load_boxes = [&](const nlohmann::json& arr) {
            std::vector<Box> out;
            for (const auto& e : arr) {
                Pt c{0, 0, 0}, s{0, 0, 0};
                for (int k = 0; k < d; ++k) {
                    c[k] = e[0][k].get<double>();
                    s[k] = e[1][k].get<double>();
                }
                out.push_back(Box(d, c, s));
            }
            return out;
        };
        std::vector<Box> holes;
        if (j.contains("holes")) holes = load_boxes(j["holes"]);
        return box_union(d, load_boxes(j["boxes"]), std::move(holes));
    }
    if (kind == "mask") {
        const auto& m = j.at("mask");
        MaskData md;
        md.h = m.at("h").get<double>();
        for (int k = 0; k < d; ++k) {
            md.origin[k] = m.at("origin")[k].get<double>();
            md.shape[k] = m.at("shape")[k].get<int64_t>();
        }
        if (d == 2) md.shape[2] = 1;
        int64_t total = md.shape[0] * md.shape[1] * ((d == 3) ? md.shape[2] : 1);
        std::vector<uint8_t> packed = base64_decode(m.at("bits").get<std::string>());
        md.bits.assign(size_t(total), 0);
        for (int64_t i = 0; i < total; ++i)
            md.bits[i] = (packed[size_t(i / 8)] >> (i % 8)) & 1u;
        return from_mask(d, std::move(md));
    }
    throw std::invalid_argument("Region::from_json: unknown kind " + kind);
}

// ---------------------------------------------------------------- punched domains

Region build_punched_region(const PunchedDomainSpec& spec) {
    if (spec.d != 2 && spec.d != 3) throw std::invalid_argument("punched region: d must be 2 or 3");
    if (!(spec.hole_side > 0) || !(spec.delta > 0))
        throw std::invalid_argument("punched region: positive spacing and hole side required");
    if (spec.hole_side >= spec.delta)
        throw std::invalid_argument("punched region: hole side must be smaller than the spacing");
    double n = double(spec.n);
    Box win = Box::cube(spec.d, Pt{0, 0, 0}, 2.0 * n);
    std::vector<Box> holes;
    int64_t kmax = int64_t(std::floor((n + 0.5 * spec.hole_side) / spec.delta)) + 1;
    auto overlaps = [&](double c) {
        // open intersection with (-n, n)
        return c - 0.5 * spec.hole_side < n && c + 0.5 * spec.hole_side > -n;
    };
    for (int64_t i = -kmax; i <= kmax; ++i) {
        if (!overlaps(spec.delta * double(i))) continue;
        for (int64_t j = -kmax; j <= kmax; ++j) {
            if (!overlaps(spec.delta * double(j))) continue;
            int64_t zlo = (spec.d == 3) ? -kmax : 0, zhi = (spec.d == 3) ? kmax : 0;
            for (int64_t k = zlo; k <= zhi; ++k) {
                if (spec.d == 3 && !overlaps(spec.delta * double(k))) continue;
                Pt c{spec.delta * double(i), spec.delta * double(j),
                     (spec.d == 3) ? spec.delta * double(k) : 0.0};
                Box hole = Box::cube(spec.d, c, spec.hole_side);
                Box clipped = hole.intersect(win);
                if (!clipped.empty()) holes.push_back(clipped);
            }
        }
    }
    return Region::box_union(spec.d, {win}, std::move(holes));
}

// ---------------------------------------------------------------- functionals

double hole_functional(const Region& region, double theta, double resolution) {
    if (!(theta > 0)) throw std::invalid_argument("hole_functional: theta must be positive");
    Box w = region.window();
    for (int k = 0; k < region.dim(); ++k)
        if (!std::isfinite(w.sides[k])) throw std::domain_error("hole_functional: unbounded region");

    if (region.kind() == Region::Kind::mask) {
        const MaskData& m = region.mask();
        double acc = 0.0;
        int64_t nz = (region.dim() == 3) ? m.shape[2] : 1;
        for (int64_t i = 0; i < m.shape[0]; ++i)
            for (int64_t j = 0; j < m.shape[1]; ++j)
                for (int64_t k = 0; k < nz; ++k) {
                    if (!m.bits[m.idx(i, j, k)]) continue;
                    Pt c{m.origin[0] + (double(i) + 0.5) * m.h, m.origin[1] + (double(j) + 0.5) * m.h,
                         (region.dim() == 3) ? m.origin[2] + (double(k) + 0.5) * m.h : 0.0};
                    acc += std::pow(region.distance_to_boundary(c), theta);
                }
        return acc * std::pow(m.h, region.dim());
    }

    double minside = kInf;
    for (int k = 0; k < region.dim(); ++k) minside = std::min(minside, w.sides[k]);
    double res = resolution > 0 ? resolution : minside / 64.0;

    int64_t n[3] = {1, 1, 1};
    double h[3] = {1, 1, 1};
    for (int k = 0; k < region.dim(); ++k) {
        n[k] = std::max<int64_t>(1, int64_t(std::llround(w.sides[k] / res)));
        h[k] = w.sides[k] / double(n[k]);
    }
    double cellvol = 1.0;
    for (int k = 0; k < region.dim(); ++k) cellvol *= h[k];
    double acc = 0.0;
    for (int64_t i = 0; i < n[0]; ++i)
        for (int64_t j = 0; j < n[1]; ++j)
            for (int64_t k = 0; k < n[2]; ++k) {
                Pt c{w.lo(0) + (double(i) + 0.5) * h[0], w.lo(1) + (double(j) + 0.5) * h[1],
                     (region.dim() == 3) ? w.lo(2) + (double(k) + 0.5) * h[2] : 0.0};
                if (region.contains(c)) acc += std::pow(region.distance_to_boundary(c), theta);
            }
    return acc * cellvol;
}

double region_volume(const Region& region) {
    Box w = region.window();
    for (int k = 0; k < region.dim(); ++k)
        if (!std::isfinite(w.sides[k])) throw std::domain_error("region_volume: unbounded region");
    return region.volume();
}

} // namespace pltrap
