#include "actopo/nodal.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include <boost/math/tools/roots.hpp>

#include "actopo/error.hpp"

namespace actopo::nodal {

namespace {

bool positive(double v) { return v >= 0.0; }

Eigen::VectorXd grad_at(const runge::Field& f, const Eigen::VectorXd& x) {
    if (f.gradient) return f.gradient(x);
    Eigen::VectorXd g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (f.value(xp) - f.value(xm)) / (2.0 * h);
    }
    return g;
}

// Root of f on the segment a + t (b - a), t in [0, 1], given opposite signs
// at the ends: linear guess, then bracketed Illinois steps.
Eigen::VectorXd edge_root(const runge::Field& f, const Eigen::VectorXd& a, const Eigen::VectorXd& b, double fa,
                          double fb) {
    double t0 = 0.0, t1 = 1.0, f0 = fa, f1 = fb;
    int side = 0;
    double t = 0.0;
    for (int it = 0; it < 6; ++it) {
        t = f0 == f1 ? 0.5 * (t0 + t1) : (t0 * f1 - t1 * f0) / (f1 - f0);
        if (!(t > t0 && t < t1)) t = std::clamp(t, t0, t1);
        if (it == 5 || t1 - t0 < 1e-13) break;
        const double ft = f.value(a + t * (b - a));
        if (ft == 0.0) break;
        if (positive(ft) == positive(f1)) {
            t1 = t;
            f1 = ft;
            if (side == -1) f0 *= 0.5;
            side = -1;
        } else {
            t0 = t;
            f0 = ft;
            if (side == 1) f1 *= 0.5;
            side = 1;
        }
    }
    return a + t * (b - a);
}

void check_not_degenerate(const std::vector<double>& v) {
    for (double x : v) {
        if (x != 0.0) return;
    }
    throw ValidationError("extract_zero_set: field vanishes at every grid node (degenerate extraction)");
}

// ---------------------------------------------------------------- radial

LevelSetMesh extract_radial(const runge::Field& f, const RadialInterval& ri, double h) {
    if (!(ri.r1 > ri.r0) || ri.direction.size() == 0 || ri.direction.norm() == 0.0) {
        throw ValidationError("extract_zero_set: radial interval needs r1 > r0 and a direction");
    }
    const Eigen::VectorXd dir = ri.direction.normalized();
    const int n = std::max(1, static_cast<int>(std::ceil((ri.r1 - ri.r0) / h)));
    std::vector<double> t(n + 1), v(n + 1);
    for (int i = 0; i <= n; ++i) {
        t[i] = ri.r0 + (ri.r1 - ri.r0) * i / n;
        v[i] = f.value(t[i] * dir);
    }
    check_not_degenerate(v);
    RadialRoots rr;
    rr.direction = dir;
    auto g = [&](double r) { return f.value(r * dir); };
    for (int i = 0; i < n; ++i) {
        if (positive(v[i]) == positive(v[i + 1])) continue;
        std::uintmax_t iters = 100;
        const auto br = boost::math::tools::toms748_solve(g, t[i], t[i + 1], v[i], v[i + 1],
                                                          boost::math::tools::eps_tolerance<double>(52), iters);
        rr.radii.push_back(0.5 * (br.first + br.second));
    }
    LevelSetMesh m;
    m.geometry = std::move(rr);
    m.resolution = h;
    return m;
}

// ---------------------------------------------------------------- meridian

LevelSetMesh extract_meridian(const runge::Field& f, const MeridianBox& mb, double h) {
    if (!(mb.s_max > 0.0) || !(mb.z1 > mb.z0)) throw ValidationError("extract_zero_set: empty meridian box");
    const Eigen::VectorXd a = mb.axis.normalized();
    Eigen::VectorXd p = mb.perp - mb.perp.dot(a) * a;
    if (p.norm() < 1e-12) throw ValidationError("extract_zero_set: perp must not be parallel to the axis");
    p.normalize();
    const int ns = std::max(1, static_cast<int>(std::ceil(2.0 * mb.s_max / h)));
    const int nz = std::max(1, static_cast<int>(std::ceil((mb.z1 - mb.z0) / h)));
    auto node_sz = [&](int j, int k) {
        return Eigen::Vector2d(-mb.s_max + 2.0 * mb.s_max * j / ns, mb.z0 + (mb.z1 - mb.z0) * k / nz);
    };
    auto amb = [&](const Eigen::Vector2d& q) -> Eigen::VectorXd { return q(0) * p + q(1) * a; };
    const int nn = (ns + 1) * (nz + 1);
    std::vector<double> v(nn);
#pragma omp parallel for schedule(static)
    for (int id = 0; id < nn; ++id) v[id] = f.value(amb(node_sz(id % (ns + 1), id / (ns + 1))));
    check_not_degenerate(v);

    std::unordered_map<std::uint64_t, int> edge_point;
    std::vector<Eigen::Vector2d> pts;
    std::vector<std::array<int, 2>> segs;
    auto point_on = [&](int i0, int i1) {
        if (i0 > i1) std::swap(i0, i1);
        const std::uint64_t key = static_cast<std::uint64_t>(i0) * static_cast<std::uint64_t>(nn) + i1;
        const auto it = edge_point.find(key);
        if (it != edge_point.end()) return it->second;
        const Eigen::Vector2d q0 = node_sz(i0 % (ns + 1), i0 / (ns + 1));
        const Eigen::Vector2d q1 = node_sz(i1 % (ns + 1), i1 / (ns + 1));
        const Eigen::VectorXd x = edge_root(f, amb(q0), amb(q1), v[i0], v[i1]);
        const double tt = (x - amb(q0)).norm() / (amb(q1) - amb(q0)).norm();
        pts.push_back(q0 + tt * (q1 - q0));
        edge_point.emplace(key, static_cast<int>(pts.size()) - 1);
        return static_cast<int>(pts.size()) - 1;
    };
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ns; ++j) {
            const int c00 = j + (ns + 1) * k, c10 = c00 + 1, c01 = c00 + ns + 1, c11 = c01 + 1;
            for (const auto& tri : {std::array<int, 3>{c00, c10, c11}, std::array<int, 3>{c00, c11, c01}}) {
                std::vector<int> cut;
                for (int e = 0; e < 3; ++e) {
                    const int u = tri[e], w = tri[(e + 1) % 3];
                    if (positive(v[u]) != positive(v[w])) cut.push_back(point_on(u, w));
                }
                if (cut.size() == 2) segs.push_back({cut[0], cut[1]});
            }
        }
    }
    // Chain segments: every point has at most two neighbours.
    std::vector<std::vector<int>> nb(pts.size());
    for (const auto& s : segs) {
        nb[s[0]].push_back(s[1]);
        nb[s[1]].push_back(s[0]);
    }
    std::vector<char> used(pts.size(), 0);
    ZonalCurves zc;
    zc.axis = a;
    zc.perp = p;
    auto walk = [&](int start) {
        Polyline pl;
        int prev = -1, cur = start;
        while (true) {
            used[cur] = 1;
            pl.points.push_back(pts[cur]);
            int next = -1;
            for (int q : nb[cur]) {
                if (q != prev && !used[q]) {
                    next = q;
                    break;
                }
            }
            if (next < 0) {
                for (int q : nb[cur]) {
                    if (q == start && q != prev && pl.points.size() > 2) pl.closed = true;
                }
                break;
            }
            prev = cur;
            cur = next;
        }
        zc.curves.push_back(std::move(pl));
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!used[i] && nb[i].size() == 1) walk(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!used[i]) walk(static_cast<int>(i));
    }
    LevelSetMesh m;
    m.geometry = std::move(zc);
    m.resolution = h;
    return m;
}

// ---------------------------------------------------------------- box

LevelSetMesh extract_box(const runge::Field& f, const Box& box, double h) {
    Eigen::VectorXd origin = box.origin.size() ? box.origin : Eigen::VectorXd::Zero(3);
    Eigen::MatrixXd frame = box.frame.size() ? box.frame : Eigen::MatrixXd::Identity(origin.size(), 3);
    if (frame.rows() != origin.size() || frame.cols() != 3) {
        throw ValidationError("extract_zero_set: box frame must be d x 3 matching the origin");
    }
    std::array<int, 3> n{};
    for (int i = 0; i < 3; ++i) {
        if (!(box.hi(i) > box.lo(i))) throw ValidationError("extract_zero_set: empty box");
        n[i] = std::max(1, static_cast<int>(std::ceil((box.hi(i) - box.lo(i)) / h)));
    }
    const std::int64_t nx = n[0] + 1, ny = n[1] + 1, nz = n[2] + 1;
    const std::int64_t nn = nx * ny * nz;
    auto local_of = [&](std::int64_t id) {
        const std::int64_t i = id % nx, j = (id / nx) % ny, k = id / (nx * ny);
        return Eigen::Vector3d(box.lo(0) + (box.hi(0) - box.lo(0)) * i / n[0],
                               box.lo(1) + (box.hi(1) - box.lo(1)) * j / n[1],
                               box.lo(2) + (box.hi(2) - box.lo(2)) * k / n[2]);
    };
    auto amb = [&](const Eigen::Vector3d& y) -> Eigen::VectorXd { return origin + frame * y; };
    std::vector<double> v(nn);
#pragma omp parallel for schedule(static)
    for (std::int64_t id = 0; id < nn; ++id) v[id] = f.value(amb(local_of(id)));
    check_not_degenerate(v);

    Surface3D s;
    std::vector<Eigen::Vector3d> loc;
    std::unordered_map<std::uint64_t, int> edge_point;
    auto point_on = [&](std::int64_t i0, std::int64_t i1) {
        if (i0 > i1) std::swap(i0, i1);
        const std::uint64_t key = static_cast<std::uint64_t>(i0) * static_cast<std::uint64_t>(nn) + i1;
        const auto it = edge_point.find(key);
        if (it != edge_point.end()) return it->second;
        const Eigen::Vector3d y0 = local_of(i0), y1 = local_of(i1);
        const Eigen::VectorXd x = edge_root(f, amb(y0), amb(y1), v[i0], v[i1]);
        const double tt = (x - amb(y0)).norm() / (amb(y1) - amb(y0)).norm();
        loc.push_back(y0 + tt * (y1 - y0));
        const int idx = static_cast<int>(loc.size()) - 1;
        edge_point.emplace(key, idx);
        return idx;
    };
    auto emit = [&](int p0, int p1, int p2, const Eigen::Vector3d& dir) {
        const Eigen::Vector3d nrm = (loc[p1] - loc[p0]).cross(loc[p2] - loc[p0]);
        if (nrm.dot(dir) < 0.0) std::swap(p1, p2);
        s.triangles.emplace_back(p0, p1, p2);
    };
    // Kuhn subdivision: paths 0 -> e_a -> e_a + e_b -> 7 over permutations.
    static const std::array<std::array<int, 3>, 6> perms{
        {{1, 2, 4}, {1, 4, 2}, {2, 1, 4}, {2, 4, 1}, {4, 1, 2}, {4, 2, 1}}};
    for (std::int64_t k = 0; k + 1 < nz; ++k) {
        for (std::int64_t j = 0; j + 1 < ny; ++j) {
            for (std::int64_t i = 0; i + 1 < nx; ++i) {
                const std::int64_t base = i + nx * (j + ny * k);
                auto corner = [&](int bits) {
                    return base + ((bits & 1) ? 1 : 0) + ((bits & 2) ? nx : 0) + ((bits & 4) ? nx * ny : 0);
                };
                bool any_pos = false, any_neg = false;
                for (int c = 0; c < 8; ++c) (positive(v[corner(c)]) ? any_pos : any_neg) = true;
                if (!(any_pos && any_neg)) continue;
                for (const auto& pm : perms) {
                    const std::array<std::int64_t, 4> t{corner(0), corner(pm[0]), corner(pm[0] | pm[1]), corner(7)};
                    std::vector<int> pos, neg;
                    for (int q = 0; q < 4; ++q) (positive(v[t[q]]) ? pos : neg).push_back(q);
                    if (pos.empty() || neg.empty()) continue;
                    auto L = [&](int q) { return local_of(t[q]); };
                    if (pos.size() == 1 || neg.size() == 1) {
                        const bool lone_pos = pos.size() == 1;
                        const int lone = lone_pos ? pos[0] : neg[0];
                        const auto& others = lone_pos ? neg : pos;
                        const int a = point_on(t[lone], t[others[0]]);
                        const int b = point_on(t[lone], t[others[1]]);
                        const int c = point_on(t[lone], t[others[2]]);
                        const Eigen::Vector3d dir = lone_pos ? Eigen::Vector3d(L(lone) - L(others[0]))
                                                             : Eigen::Vector3d(L(others[0]) - L(lone));
                        emit(a, b, c, dir);
                    } else {
                        const int pa = pos[0], pb = pos[1], nc = neg[0], nd = neg[1];
                        const int ac = point_on(t[pa], t[nc]), ad = point_on(t[pa], t[nd]);
                        const int bd = point_on(t[pb], t[nd]), bc = point_on(t[pb], t[nc]);
                        const Eigen::Vector3d dir = L(pa) - L(nc);
                        emit(ac, ad, bd, dir);
                        emit(ac, bd, bc, dir);
                    }
                }
            }
        }
    }
    s.local.resize(3, static_cast<Eigen::Index>(loc.size()));
    s.points.resize(origin.size(), static_cast<Eigen::Index>(loc.size()));
    for (std::size_t q = 0; q < loc.size(); ++q) {
        s.local.col(q) = loc[q];
        s.points.col(q) = amb(loc[q]);
    }
    LevelSetMesh m;
    m.geometry = std::move(s);
    m.resolution = h;
    return m;
}

// ---------------------------------------------------------------- helpers

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// Triangles of each surface component, components ordered by smallest vertex.
std::vector<std::vector<int>> surface_groups(const Surface3D& s) {
    UnionFind uf(static_cast<int>(s.points.cols()));
    for (const auto& t : s.triangles) {
        uf.unite(t(0), t(1));
        uf.unite(t(1), t(2));
    }
    std::map<int, std::vector<int>> groups;
    for (std::size_t i = 0; i < s.triangles.size(); ++i) groups[uf.find(s.triangles[i](0))].push_back(static_cast<int>(i));
    std::vector<std::vector<int>> out;
    for (auto& [root, tris] : groups) out.push_back(std::move(tris));
    return out;
}

Component surface_component(const Surface3D& s, const std::vector<int>& tris, const runge::Field& f,
                            const domains::SurfaceSpec* target, int* argmin = nullptr) {
    Component c;
    std::vector<int> verts;
    std::vector<std::uint64_t> edges;
    for (int ti : tris) {
        const auto& t = s.triangles[ti];
        for (int e = 0; e < 3; ++e) {
            verts.push_back(t(e));
            const std::uint64_t a = std::min(t(e), t((e + 1) % 3)), b = std::max(t(e), t((e + 1) % 3));
            edges.push_back((a << 32) | b);
        }
    }
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
    std::sort(edges.begin(), edges.end());
    c.closed = true;
    int distinct = 0;
    for (std::size_t i = 0; i < edges.size();) {
        std::size_t j = i;
        while (j < edges.size() && edges[j] == edges[i]) ++j;
        if (j - i != 2) c.closed = false;
        ++distinct;
        i = j;
    }
    c.vertices = static_cast<int>(verts.size());
    c.edges = distinct;
    c.faces = static_cast<int>(tris.size());
    c.euler = c.vertices - c.edges + c.faces;
    if (c.closed && c.euler % 2 == 0 && c.euler <= 2) c.genus = (2 - c.euler) / 2;
    std::vector<double> gn(verts.size()), dist(verts.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t q = 0; q < verts.size(); ++q) {
        const Eigen::VectorXd x = s.points.col(verts[q]);
        gn[q] = grad_at(f, x).norm();
        if (target) dist[q] = std::abs(domains::signed_distance(*target, x));
    }
    c.grad_min = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < verts.size(); ++q) {
        if (gn[q] < c.grad_min) {
            c.grad_min = gn[q];
            if (argmin) *argmin = verts[q];
        }
        c.max_distance = std::max(c.max_distance, dist[q]);
    }
    return c;
}

bool meets_axis(const Polyline& pl) {
    for (std::size_t i = 0; i < pl.points.size(); ++i) {
        if (pl.points[i](0) == 0.0) return true;
        const std::size_t j = (i + 1) % pl.points.size();
        if (j == 0 && !pl.closed) break;
        if ((pl.points[i](0) < 0.0) != (pl.points[j](0) < 0.0)) return true;
    }
    return false;
}

bool mirror_only(const Polyline& pl) {
    for (const auto& q : pl.points) {
        if (q(0) >= 0.0) return false;
    }
    return true;
}

Component curve_component(const ZonalCurves& zc, const Polyline& pl, const runge::Field& f,
                          const domains::SurfaceSpec* target, Eigen::VectorXd* argmin = nullptr) {
    Component c;
    c.vertices = static_cast<int>(pl.points.size());
    c.edges = pl.closed ? c.vertices : c.vertices - 1;
    c.faces = 0;
    c.euler = c.vertices - c.edges;
    c.closed = pl.closed;
    c.genus = pl.closed ? (meets_axis(pl) ? 0 : 1) : -1;
    c.grad_min = std::numeric_limits<double>::infinity();
    for (const auto& q : pl.points) {
        const Eigen::VectorXd x = zc.ambient(q);
        const double g = grad_at(f, x).norm();
        if (g < c.grad_min) {
            c.grad_min = g;
            if (argmin) *argmin = x;
        }
        if (target) c.max_distance = std::max(c.max_distance, std::abs(domains::signed_distance(*target, x)));
    }
    return c;
}

Component root_component(const RadialRoots& rr, double r, const runge::Field& f, const domains::SurfaceSpec* target) {
    Component c;
    c.vertices = 1;
    c.euler = 2;
    c.closed = true;
    c.genus = 0;
    const Eigen::VectorXd x = r * rr.direction;
    c.grad_min = grad_at(f, x).norm();
    if (target) c.max_distance = std::abs(domains::signed_distance(*target, x));
    return c;
}

// Nearest-triangle queries on a uniform bucket grid.
class TriangleLocator {
public:
    TriangleLocator(const Eigen::Matrix3Xd& p, const std::vector<Eigen::Vector3i>& tris, double cell)
        : p_(p), tris_(tris), cell_(cell) {
        lo_ = p.rowwise().minCoeff().array() - cell;
        const Eigen::Vector3d hi = p.rowwise().maxCoeff().array() + cell;
        for (int i = 0; i < 3; ++i) n_[i] = std::max(1, static_cast<int>(std::ceil((hi(i) - lo_(i)) / cell)));
        buckets_.resize(static_cast<std::size_t>(n_[0]) * n_[1] * n_[2]);
        for (std::size_t t = 0; t < tris.size(); ++t) {
            Eigen::Vector3d a = p.col(tris[t](0)), b = a;
            for (int e = 1; e < 3; ++e) {
                a = a.cwiseMin(Eigen::Vector3d(p.col(tris[t](e))));
                b = b.cwiseMax(Eigen::Vector3d(p.col(tris[t](e))));
            }
            const auto ia = index(a), ib = index(b);
            for (int k = ia[2]; k <= ib[2]; ++k)
                for (int j = ia[1]; j <= ib[1]; ++j)
                    for (int i = ia[0]; i <= ib[0]; ++i) buckets_[flat(i, j, k)].push_back(static_cast<int>(t));
        }
    }

    double distance(const Eigen::Vector3d& x) const {
        const auto c = index(x);
        double best = std::numeric_limits<double>::infinity();
        const int kmax = std::max({n_[0], n_[1], n_[2]});
        for (int ring = 0; ring <= kmax; ++ring) {
            for (int k = c[2] - ring; k <= c[2] + ring; ++k)
                for (int j = c[1] - ring; j <= c[1] + ring; ++j)
                    for (int i = c[0] - ring; i <= c[0] + ring; ++i) {
                        if (std::max({std::abs(i - c[0]), std::abs(j - c[1]), std::abs(k - c[2])}) != ring) continue;
                        if (i < 0 || j < 0 || k < 0 || i >= n_[0] || j >= n_[1] || k >= n_[2]) continue;
                        for (int t : buckets_[flat(i, j, k)]) best = std::min(best, point_triangle(x, t));
                    }
            if (best <= ring * cell_) break;
        }
        return best;
    }

private:
    std::array<int, 3> index(const Eigen::Vector3d& x) const {
        std::array<int, 3> out{};
        for (int i = 0; i < 3; ++i) out[i] = std::clamp(static_cast<int>((x(i) - lo_(i)) / cell_), 0, n_[i] - 1);
        return out;
    }
    std::size_t flat(int i, int j, int k) const { return (static_cast<std::size_t>(k) * n_[1] + j) * n_[0] + i; }

    // Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
    double point_triangle(const Eigen::Vector3d& x, int t) const {
        const Eigen::Vector3d a = p_.col(tris_[t](0)), b = p_.col(tris_[t](1)), c = p_.col(tris_[t](2));
        const Eigen::Vector3d ab = b - a, ac = c - a, ap = x - a;
        const double d1 = ab.dot(ap), d2 = ac.dot(ap);
        if (d1 <= 0 && d2 <= 0) return ap.norm();
        const Eigen::Vector3d bp = x - b;
        const double d3 = ab.dot(bp), d4 = ac.dot(bp);
        if (d3 >= 0 && d4 <= d3) return bp.norm();
        const double vc = d1 * d4 - d3 * d2;
        if (vc <= 0 && d1 >= 0 && d3 <= 0) return (x - (a + d1 / (d1 - d3) * ab)).norm();
        const Eigen::Vector3d cp = x - c;
        const double d5 = ab.dot(cp), d6 = ac.dot(cp);
        if (d6 >= 0 && d5 <= d6) return cp.norm();
        const double vb = d5 * d2 - d1 * d6;
        if (vb <= 0 && d2 >= 0 && d6 <= 0) return (x - (a + d2 / (d2 - d6) * ac)).norm();
        const double va = d3 * d6 - d5 * d4;
        if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
            return (x - (b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b))).norm();
        }
        const double den = 1.0 / (va + vb + vc);
        return (x - (a + ab * (vb * den) + ac * (vc * den))).norm();
    }

    const Eigen::Matrix3Xd& p_;
    const std::vector<Eigen::Vector3i>& tris_;
    double cell_;
    Eigen::Vector3d lo_;
    std::array<int, 3> n_{};
    std::vector<std::vector<int>> buckets_;
};

double point_segment(const Eigen::Vector2d& x, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const Eigen::Vector2d ab = b - a;
    const double den = ab.squaredNorm();
    const double t = den > 0.0 ? std::clamp((x - a).dot(ab) / den, 0.0, 1.0) : 0.0;
    return (x - (a + t * ab)).norm();
}

// Target surface in slice coordinates: the surface itself in R^3 (identity
// frame), or the 3-ball cut from a d-ball by the slice.
domains::SurfaceSpec slice_target(const domains::SurfaceSpec& target, const Surface3D& s,
                                  const Eigen::VectorXd& origin, const Eigen::MatrixXd& frame) {
    if (s.points.rows() == 3 && frame.isApprox(Eigen::Matrix3d::Identity()) && origin.isZero()) return target;
    if (!target.is_ball()) throw ValidationError("hausdorff_distance: slices are supported for ball targets only");
    const auto& b = std::get<domains::Ball>(target.shape);
    const Eigen::VectorXd rel = b.center - origin;
    const Eigen::Vector3d c = frame.transpose() * rel;
    const double off2 = (rel - frame * c).squaredNorm();
    if (off2 >= b.radius * b.radius) throw ValidationError("hausdorff_distance: slice misses the target");
    return domains::SurfaceSpec{domains::Ball{Eigen::VectorXd(c), std::sqrt(b.radius * b.radius - off2)}, target.label};
}

// Recover the affine slice map from ambient and local vertex coordinates.
void slice_frame(const Surface3D& s, Eigen::VectorXd& origin, Eigen::MatrixXd& frame) {
    const int n = static_cast<int>(s.local.cols());
    Eigen::MatrixXd a(n, 4);
    a.leftCols(3) = s.local.transpose();
    a.col(3).setOnes();
    const Eigen::MatrixXd sol = a.colPivHouseholderQr().solve(s.points.transpose());  // 4 x d
    frame = sol.topRows(3).transpose();
    origin = sol.row(3).transpose();
}

runge::Field with_bump(const runge::Field& f, const Eigen::VectorXd& center, double amp, double sigma) {
    runge::Field g;
    g.value = [=](const Eigen::VectorXd& x) {
        return f.value(x) + amp * std::exp(-(x - center).squaredNorm() / (2.0 * sigma * sigma));
    };
    g.gradient = [=](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Eigen::VectorXd y = x - center;
        const double e = amp * std::exp(-y.squaredNorm() / (2.0 * sigma * sigma));
        return grad_at(f, x) - (e / (sigma * sigma)) * y;
    };
    return g;
}

// Point of smallest gradient on the single in-shell component, if there is one.
std::optional<Eigen::VectorXd> weakest_point(const LevelSetMesh& sub, const runge::Field& f,
                                             const domains::SurfaceSpec& target, double& gmin) {
    if (const auto* s = std::get_if<Surface3D>(&sub.geometry)) {
        const auto groups = surface_groups(*s);
        if (groups.size() != 1) return std::nullopt;
        int arg = -1;
        gmin = surface_component(*s, groups[0], f, &target, &arg).grad_min;
        return Eigen::VectorXd(s->points.col(arg));
    }
    if (const auto* zc = std::get_if<ZonalCurves>(&sub.geometry)) {
        std::vector<const Polyline*> keep;
        for (const auto& pl : zc->curves) {
            if (!mirror_only(pl)) keep.push_back(&pl);
        }
        if (keep.size() != 1) return std::nullopt;
        Eigen::VectorXd x;
        gmin = curve_component(*zc, *keep[0], f, &target, &x).grad_min;
        return x;
    }
    const auto& rr = std::get<RadialRoots>(sub.geometry);
    if (rr.radii.size() != 1) return std::nullopt;
    const Eigen::VectorXd x = rr.radii[0] * rr.direction;
    gmin = grad_at(f, x).norm();
    return x;
}

}  // namespace

// ---------------------------------------------------------------- public

Eigen::Vector2d ZonalCurves::polar(const Eigen::Vector2d& sz) {
    return {sz.norm(), std::atan2(sz(0), sz(1))};
}

bool LevelSetMesh::empty() const {
    if (const auto* r = std::get_if<RadialRoots>(&geometry)) return r->radii.empty();
    if (const auto* z = std::get_if<ZonalCurves>(&geometry)) return z->curves.empty();
    return std::get<Surface3D>(geometry).triangles.empty();
}

Box box_around(const domains::SurfaceSpec& target, double pad, const Eigen::MatrixXd& frame) {
    const auto bb = domains::bounding_ball(target, pad);
    Box b;
    const double r = bb.radius;
    b.lo = Eigen::Vector3d::Constant(-r);
    b.hi = Eigen::Vector3d::Constant(r);
    const int d = static_cast<int>(bb.center.size());
    if (d == 3 && frame.size() == 0) {
        if (const auto* t = std::get_if<domains::SolidTorus>(&target.shape)) {
            // Tight in the axial direction.
            b.lo(2) = b.hi(2) = 0.0;
            b.lo(2) -= t->minor_radius + pad;
            b.hi(2) += t->minor_radius + pad;
        }
        b.lo += bb.center;
        b.hi += bb.center;
        b.origin = Eigen::VectorXd::Zero(3);
        b.frame = Eigen::MatrixXd::Identity(3, 3);
        return b;
    }
    b.origin = bb.center;
    b.frame = frame.size() ? frame : Eigen::MatrixXd::Identity(d, 3);
    return b;
}

MeridianBox meridian_around(const domains::SurfaceSpec& target, const Eigen::VectorXd& axis, double pad) {
    const auto bb = domains::bounding_ball(target, pad);
    MeridianBox m;
    m.axis = axis.normalized();
    const int d = static_cast<int>(axis.size());
    // A perpendicular: the coordinate direction least aligned with the axis.
    Eigen::Index i0 = 0;
    m.axis.cwiseAbs().minCoeff(&i0);
    m.perp = Eigen::VectorXd::Unit(d, i0);
    m.perp = (m.perp - m.perp.dot(m.axis) * m.axis).normalized();
    const double zc = bb.center.dot(m.axis);
    const double sc = (bb.center - zc * m.axis).norm();
    m.s_max = sc + bb.radius;
    m.z0 = zc - bb.radius;
    m.z1 = zc + bb.radius;
    return m;
}

LevelSetMesh extract_zero_set(const runge::Field& field, const Region& region, double resolution) {
    if (!(resolution > 0.0)) throw ValidationError("extract_zero_set: resolution must be > 0");
    if (const auto* r = std::get_if<RadialInterval>(&region)) return extract_radial(field, *r, resolution);
    if (const auto* m = std::get_if<MeridianBox>(&region)) return extract_meridian(field, *m, resolution);
    return extract_box(field, std::get<Box>(region), resolution);
}

std::vector<Component> components(const LevelSetMesh& mesh, const runge::Field& field,
                                  const domains::SurfaceSpec* target) {
    std::vector<Component> out;
    if (const auto* s = std::get_if<Surface3D>(&mesh.geometry)) {
        for (const auto& g : surface_groups(*s)) out.push_back(surface_component(*s, g, field, target));
    } else if (const auto* zc = std::get_if<ZonalCurves>(&mesh.geometry)) {
        for (const auto& pl : zc->curves) {
            if (!mirror_only(pl)) out.push_back(curve_component(*zc, pl, field, target));
        }
    } else {
        const auto& rr = std::get<RadialRoots>(mesh.geometry);
        for (double r : rr.radii) out.push_back(root_component(rr, r, field, target));
    }
    return out;
}

LevelSetMesh restrict_to_shell(const LevelSetMesh& mesh, const domains::SurfaceSpec& target, double shell) {
    LevelSetMesh out;
    out.resolution = mesh.resolution;
    auto inside = [&](const Eigen::VectorXd& x) { return std::abs(domains::signed_distance(target, x)) <= shell; };
    if (const auto* s = std::get_if<Surface3D>(&mesh.geometry)) {
        Surface3D o;
        std::vector<int> remap(s->points.cols(), -1);
        std::vector<int> kept;
        for (const auto& g : surface_groups(*s)) {
            bool ok = true;
            for (int ti : g) {
                for (int e = 0; e < 3 && ok; ++e) ok = inside(s->points.col(s->triangles[ti](e)));
                if (!ok) break;
            }
            if (!ok) continue;
            for (int ti : g) {
                Eigen::Vector3i t = s->triangles[ti];
                for (int e = 0; e < 3; ++e) {
                    if (remap[t(e)] < 0) {
                        remap[t(e)] = static_cast<int>(kept.size());
                        kept.push_back(t(e));
                    }
                    t(e) = remap[t(e)];
                }
                o.triangles.push_back(t);
            }
        }
        o.points.resize(s->points.rows(), static_cast<Eigen::Index>(kept.size()));
        o.local.resize(3, static_cast<Eigen::Index>(kept.size()));
        for (std::size_t q = 0; q < kept.size(); ++q) {
            o.points.col(q) = s->points.col(kept[q]);
            o.local.col(q) = s->local.col(kept[q]);
        }
        out.geometry = std::move(o);
    } else if (const auto* zc = std::get_if<ZonalCurves>(&mesh.geometry)) {
        ZonalCurves o;
        o.axis = zc->axis;
        o.perp = zc->perp;
        for (const auto& pl : zc->curves) {
            bool ok = true;
            for (const auto& q : pl.points) {
                if (!inside(zc->ambient(q))) {
                    ok = false;
                    break;
                }
            }
            if (ok) o.curves.push_back(pl);
        }
        out.geometry = std::move(o);
    } else {
        const auto& rr = std::get<RadialRoots>(mesh.geometry);
        RadialRoots o;
        o.direction = rr.direction;
        for (double r : rr.radii) {
            if (inside(r * rr.direction)) o.radii.push_back(r);
        }
        out.geometry = std::move(o);
    }
    return out;
}

std::optional<double> hausdorff_distance(const LevelSetMesh& mesh, const domains::SurfaceSpec& target, int n_target) {
    if (mesh.empty()) return std::nullopt;
    if (n_target < 1) throw ValidationError("hausdorff_distance: n_target must be >= 1");
    double h = 0.0;
    if (const auto* rr = std::get_if<RadialRoots>(&mesh.geometry)) {
        // Each root is the sphere |x| = r.
        const Eigen::MatrixXd tp = domains::offset_surface_points(target, n_target, 0.0);
        const int d = static_cast<int>(tp.rows());
        for (Eigen::Index k = 0; k < tp.cols(); ++k) {
            double best = std::numeric_limits<double>::infinity();
            for (double r : rr->radii) best = std::min(best, std::abs(tp.col(k).norm() - r));
            h = std::max(h, best);
        }
        for (double r : rr->radii) {
            const domains::SurfaceSpec sph{domains::Ball{Eigen::VectorXd::Zero(d), r}, "root"};
            const Eigen::MatrixXd sp = domains::offset_surface_points(sph, n_target, 0.0);
            for (Eigen::Index k = 0; k < sp.cols(); ++k) {
                h = std::max(h, std::abs(domains::signed_distance(target, sp.col(k))));
            }
        }
        return h;
    }
    if (const auto* zc = std::get_if<ZonalCurves>(&mesh.geometry)) {
        for (const auto& pl : zc->curves) {
            for (std::size_t i = 0; i < pl.points.size(); ++i) {
                h = std::max(h, std::abs(domains::signed_distance(target, zc->ambient(pl.points[i]))));
            }
        }
        // Target points in meridian coordinates; both signs of s are on the mesh side.
        const Eigen::MatrixXd tp = domains::offset_surface_points(target, n_target, 0.0);
        for (Eigen::Index k = 0; k < tp.cols(); ++k) {
            const double z = tp.col(k).dot(zc->axis);
            const double s = (tp.col(k) - z * zc->axis).norm();
            double best = std::numeric_limits<double>::infinity();
            for (const Eigen::Vector2d& q : {Eigen::Vector2d(s, z), Eigen::Vector2d(-s, z)}) {
                for (const auto& pl : zc->curves) {
                    const std::size_t n = pl.points.size();
                    if (n == 1) best = std::min(best, (q - pl.points[0]).norm());
                    for (std::size_t i = 0; i + 1 < n + (pl.closed ? 1 : 0); ++i) {
                        best = std::min(best, point_segment(q, pl.points[i], pl.points[(i + 1) % n]));
                    }
                }
            }
            h = std::max(h, best);
        }
        return h;
    }
    const auto& s = std::get<Surface3D>(mesh.geometry);
    Eigen::VectorXd origin;
    Eigen::MatrixXd frame;
    if (s.points.rows() == 3) {
        origin = Eigen::VectorXd::Zero(3);
        frame = Eigen::MatrixXd::Identity(3, 3);
        if (!s.local.isApprox(s.points)) slice_frame(s, origin, frame);
    } else {
        slice_frame(s, origin, frame);
    }
    const domains::SurfaceSpec lt = slice_target(target, s, origin, frame);
    for (Eigen::Index q = 0; q < s.local.cols(); ++q) {
        h = std::max(h, std::abs(domains::signed_distance(lt, Eigen::VectorXd(s.local.col(q)))));
    }
    for (const auto& t : s.triangles) {
        const Eigen::VectorXd c = (s.local.col(t(0)) + s.local.col(t(1)) + s.local.col(t(2))) / 3.0;
        h = std::max(h, std::abs(domains::signed_distance(lt, c)));
    }
    const TriangleLocator loc(s.local, s.triangles, std::max(4.0 * mesh.resolution, 1e-6));
    const Eigen::MatrixXd tp = domains::offset_surface_points(lt, n_target, 0.0);
    std::vector<double> dist(tp.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index k = 0; k < tp.cols(); ++k) dist[k] = loc.distance(Eigen::Vector3d(tp.col(k)));
    for (double x : dist) h = std::max(h, x);
    return h;
}

TopologyReport verify_component_topology(const LevelSetMesh& mesh, const runge::Field& field,
                                         const domains::SurfaceSpec& target, double shell) {
    TopologyReport rep;
    rep.label = target.label;
    rep.target_genus = target.genus();
    const LevelSetMesh sub = restrict_to_shell(mesh, target, shell);
    rep.in_shell = components(sub, field, &target);
    rep.count_in_shell = static_cast<int>(rep.in_shell.size());
    if (rep.count_in_shell == 0) {
        rep.failure = "topology mismatch: no component within the target shell";
        return rep;
    }
    if (rep.count_in_shell > 1) {
        rep.failure = "topology mismatch: " + std::to_string(rep.count_in_shell) + " components within the target shell";
        return rep;
    }
    const auto& c = rep.in_shell[0];
    rep.grad_min = c.grad_min;
    rep.hausdorff = hausdorff_distance(sub, target).value_or(std::numeric_limits<double>::infinity());
    if (!c.closed) {
        rep.failure = "topology mismatch: component in the shell is not closed";
        return rep;
    }
    if (c.genus != rep.target_genus) {
        rep.failure = "topology mismatch: genus " + std::to_string(c.genus) + ", target genus " +
                      std::to_string(rep.target_genus);
        return rep;
    }
    rep.pass = true;
    return rep;
}

TopologyReport probe_with_bump(const runge::Field& field, const LevelSetMesh& mesh, const Region& region,
                               const domains::SurfaceSpec& target, double shell, double c1_size) {
    const LevelSetMesh sub = restrict_to_shell(mesh, target, shell);
    double gmin = 0.0;
    const auto centre = weakest_point(sub, field, target, gmin);
    if (!centre) {
        TopologyReport rep;
        rep.label = target.label;
        rep.failure = "probe: no single component in the shell";
        return rep;
    }
    const double sigma = 0.5 * shell;
    const double amp = c1_size / std::max(1.0, 1.0 / (sigma * std::sqrt(std::exp(1.0))));
    const runge::Field g = with_bump(field, *centre, amp, sigma);
    return verify_component_topology(extract_zero_set(g, region, mesh.resolution), g, target, shell);
}

StabilityReport verify_structural_stability(const runge::Field& field, const LevelSetMesh& mesh,
                                            const Region& region, const domains::SurfaceSpec& target,
                                            double shell, double probe_fraction) {
    StabilityReport rep;
    const LevelSetMesh sub = restrict_to_shell(mesh, target, shell);
    const auto base = verify_component_topology(mesh, field, target, shell);
    double gmin = 0.0;
    const auto centre = weakest_point(sub, field, target, gmin);
    if (!centre) {
        rep.note = "stability not certified: no single component in the shell";
        return rep;
    }
    rep.grad_min = gmin;
    rep.tube_half_width = 0.5 * shell;
    rep.margin = rep.grad_min * rep.tube_half_width;
    // A cell of size h resolves the level set only where the gradient beats
    // h times the second difference along the normal.
    const double h = mesh.resolution;
    const Eigen::VectorXd g = grad_at(field, *centre);
    if (g.norm() > 0.0) {
        const Eigen::VectorXd n = g.normalized();
        const double curv = std::abs(field.value(*centre + h * n) - 2.0 * field.value(*centre) +
                                     field.value(*centre - h * n)) / (h * h);
        rep.floor = 2.0 * h * curv;
    }
    rep.certified = base.pass && rep.grad_min > rep.floor;
    if (!rep.certified) {
        rep.note = base.pass ? "stability not certified: gradient at or below the floor" : "stability not certified: " + base.failure;
        return rep;
    }
    rep.probe_c1 = probe_fraction * rep.margin;
    rep.probe = probe_with_bump(field, mesh, region, target, shell, rep.probe_c1);
    rep.probe_same = rep.probe.pass && rep.probe.count_in_shell == base.count_in_shell &&
                     rep.probe.in_shell[0].genus == base.in_shell[0].genus;
    if (!rep.probe_same) rep.note = "probe changed the topology: " + rep.probe.failure;
    return rep;
}

std::optional<double> mesh_distance(const LevelSetMesh& a, const LevelSetMesh& b) {
    if (a.empty() || b.empty()) return std::nullopt;
    if (a.geometry.index() != b.geometry.index()) throw ValidationError("mesh_distance: meshes of different kinds");
    if (const auto* ra = std::get_if<RadialRoots>(&a.geometry)) {
        const auto& rb = std::get<RadialRoots>(b.geometry);
        const auto one_way = [](const std::vector<double>& x, const std::vector<double>& y) {
            double h = 0.0;
            for (double r : x) {
                double best = std::numeric_limits<double>::infinity();
                for (double q : y) best = std::min(best, std::abs(r - q));
                h = std::max(h, best);
            }
            return h;
        };
        return std::max(one_way(ra->radii, rb.radii), one_way(rb.radii, ra->radii));
    }
    if (const auto* za = std::get_if<ZonalCurves>(&a.geometry)) {
        const auto& zb = std::get<ZonalCurves>(b.geometry);
        const auto one_way = [](const ZonalCurves& x, const ZonalCurves& y) {
            double h = 0.0;
            for (const auto& px : x.curves) {
                for (const auto& q : px.points) {
                    double best = std::numeric_limits<double>::infinity();
                    for (const auto& pl : y.curves) {
                        const std::size_t n = pl.points.size();
                        if (n == 1) best = std::min(best, (q - pl.points[0]).norm());
                        for (std::size_t i = 0; i + 1 < n + (pl.closed ? 1 : 0); ++i) {
                            best = std::min(best, point_segment(q, pl.points[i], pl.points[(i + 1) % n]));
                        }
                    }
                    h = std::max(h, best);
                }
            }
            return h;
        };
        return std::max(one_way(*za, zb), one_way(zb, *za));
    }
    const auto& sa = std::get<Surface3D>(a.geometry);
    const auto& sb = std::get<Surface3D>(b.geometry);
    const auto one_way = [](const Surface3D& x, const Surface3D& y, double cell) {
        const TriangleLocator loc(y.local, y.triangles, cell);
        std::vector<double> dist(x.local.cols());
#pragma omp parallel for schedule(static)
        for (Eigen::Index k = 0; k < x.local.cols(); ++k) dist[k] = loc.distance(Eigen::Vector3d(x.local.col(k)));
        double h = 0.0;
        for (double v : dist) h = std::max(h, v);
        return h;
    };
    const double cell = std::max(4.0 * std::max(a.resolution, b.resolution), 1e-6);
    return std::max(one_way(sa, sb, cell), one_way(sb, sa, cell));
}

}  // namespace actopo::nodal
