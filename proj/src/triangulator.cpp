#include "surf/triangulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <unordered_map>

#include "surf/errors.hpp"

namespace surf {
namespace {

constexpr int kNone = -1;

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Positive when d lies inside the circumcircle of counterclockwise (a, b, c).
long double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const long double adx = a.x - d.x, ady = a.y - d.y;
  const long double bdx = b.x - d.x, bdy = b.y - d.y;
  const long double cdx = c.x - d.x, cdy = c.y - d.y;
  return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
         (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
}

Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 bp = b - a, cp = c - a;
  const double d = 2.0 * cross(bp, cp);
  const double b2 = dot(bp, bp), c2 = dot(cp, cp);
  return a + Vec2{(cp.y * b2 - bp.y * c2) / d, (bp.x * c2 - cp.x * b2) / d};
}

struct Tri {
  std::array<int, 3> v{};
  std::array<int, 3> n{kNone, kNone, kNone};  // n[i] lies across the edge opposite v[i]
  bool alive = true;
};

struct CavityEdge {
  int a, b, outer;
};

struct Cavity {
  std::vector<int> tris;
  std::vector<CavityEdge> edges;
  bool ok = false;
};

class Mesher {
 public:
  Mesher(const Pslg& pslg, const RefineOptions& opt) : pslg_(pslg), opt_(opt) {}

  Triangulation run() {
    if (pslg_.points.size() < 3) return {};
    make_super_triangle();
    std::vector<int> id(pslg_.points.size());
    for (std::size_t i = 0; i < pslg_.points.size(); ++i) {
      id[i] = insert_point(pslg_.points[i], hint_);
      if (id[i] == kNone) throw MeshResolutionError("could not insert input vertex");
    }
    recover_segments(id);
    carve();
    if (opt_.refine) refine();
    return extract();
  }

 private:
  const Pslg& pslg_;
  const RefineOptions& opt_;
  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::vector<int> vert_tri_;
  std::vector<unsigned> stamp_;
  unsigned gen_ = 0;
  std::unordered_map<std::uint64_t, int> constrained_;
  int hint_ = 0;
  double eps_ = 0.0;  // coincidence distance
  bool refining_ = false;
  std::deque<std::pair<int, int>> seg_queue_;
  std::deque<std::pair<int, std::array<int, 3>>> tri_queue_;

  int edge_a(const Tri& t, int i) const { return t.v[static_cast<std::size_t>((i + 1) % 3)]; }
  int edge_b(const Tri& t, int i) const { return t.v[static_cast<std::size_t>((i + 2) % 3)]; }
  bool is_constrained(int a, int b) const { return constrained_.count(edge_key(a, b)) > 0; }

  int add_vertex(Vec2 p) {
    pts_.push_back(p);
    vert_tri_.push_back(kNone);
    if (pts_.size() > opt_.max_vertices + 3) {
      throw MeshResolutionError("mesh vertex budget of " + std::to_string(opt_.max_vertices) +
                                " exceeded; use a larger target edge length");
    }
    return static_cast<int>(pts_.size()) - 1;
  }

  int add_tri(int a, int b, int c) {
    int t;
    if (!free_.empty()) {
      t = free_.back();
      free_.pop_back();
      tris_[static_cast<std::size_t>(t)] = Tri{};
    } else {
      t = static_cast<int>(tris_.size());
      tris_.emplace_back();
      stamp_.push_back(0);
    }
    auto& T = tris_[static_cast<std::size_t>(t)];
    T.v = {a, b, c};
    vert_tri_[static_cast<std::size_t>(a)] = t;
    vert_tri_[static_cast<std::size_t>(b)] = t;
    vert_tri_[static_cast<std::size_t>(c)] = t;
    if (refining_) tri_queue_.push_back({t, T.v});
    return t;
  }

  void kill(int t) {
    tris_[static_cast<std::size_t>(t)].alive = false;
    free_.push_back(t);
  }

  const Vec2& P(int v) const { return pts_[static_cast<std::size_t>(v)]; }
  Tri& T(int t) { return tris_[static_cast<std::size_t>(t)]; }

  void make_super_triangle() {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : pslg_.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double d = std::max({xmax - xmin, ymax - ymin, 1e-30});
    const Vec2 c{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
    eps_ = 1e-12 * d;
    add_vertex(c + Vec2{-20 * d, -20 * d});
    add_vertex(c + Vec2{20 * d, -20 * d});
    add_vertex(c + Vec2{0, 20 * d});
    hint_ = add_tri(0, 1, 2);
  }

  // Visibility walk; kNone when the walk leaves the triangulation.
  int locate(Vec2 p, int start) {
    int t = start;
    if (t < 0 || t >= static_cast<int>(tris_.size()) || !T(t).alive) {
      t = kNone;
      for (std::size_t k = 0; k < tris_.size(); ++k) {
        if (tris_[k].alive) {
          t = static_cast<int>(k);
          break;
        }
      }
      if (t == kNone) return kNone;
    }
    const std::size_t cap = 4 * tris_.size() + 64;
    for (std::size_t iter = 0; iter < cap; ++iter) {
      const Tri& tr = T(t);
      int next = kNone;
      bool outside = false;
      for (int k = 0; k < 3; ++k) {
        const int i = static_cast<int>((static_cast<std::size_t>(k) + iter) % 3);
        if (orient(P(edge_a(tr, i)), P(edge_b(tr, i)), p) < 0) {
          next = tr.n[static_cast<std::size_t>(i)];
          outside = true;
          break;
        }
      }
      if (!outside) return t;
      if (next == kNone) return kNone;
      t = next;
    }
    for (std::size_t k = 0; k < tris_.size(); ++k) {
      const Tri& tr = tris_[k];
      if (!tr.alive) continue;
      if (orient(P(tr.v[0]), P(tr.v[1]), p) >= 0 && orient(P(tr.v[1]), P(tr.v[2]), p) >= 0 &&
          orient(P(tr.v[2]), P(tr.v[0]), p) >= 0) {
        return static_cast<int>(k);
      }
    }
    return kNone;
  }

  // Bowyer-Watson cavity of p, never crossing constrained edges. When p sits
  // on the split edge (sa, sb) that edge is not fanned.
  Cavity cavity(Vec2 p, int seed0, int seed1, int sa, int sb) {
    Cavity cav;
    ++gen_;
    auto& list = cav.tris;
    auto in = [&](int t) { return stamp_[static_cast<std::size_t>(t)] == gen_; };
    for (int s : {seed0, seed1}) {
      if (s == kNone || in(s)) continue;
      stamp_[static_cast<std::size_t>(s)] = gen_;
      list.push_back(s);
    }
    for (std::size_t q = 0; q < list.size(); ++q) {
      const Tri& tr = T(list[q]);
      for (int i = 0; i < 3; ++i) {
        const int nb = tr.n[static_cast<std::size_t>(i)];
        if (nb == kNone || in(nb) || is_constrained(edge_a(tr, i), edge_b(tr, i))) continue;
        const auto& v = T(nb).v;
        if (incircle(P(v[0]), P(v[1]), P(v[2]), p) > 0) {
          stamp_[static_cast<std::size_t>(nb)] = gen_;
          list.push_back(nb);
        }
      }
    }

    auto is_seed = [&](int t) { return t == seed0 || t == seed1; };
    std::vector<int> boundary_verts;
    for (int round = 0; round < 10000; ++round) {
      cav.edges.clear();
      boundary_verts.clear();
      int drop = kNone;
      bool fail = false;
      for (int t : list) {
        const Tri& tr = T(t);
        for (int i = 0; i < 3; ++i) {
          const int nb = tr.n[static_cast<std::size_t>(i)];
          if (nb != kNone && in(nb)) continue;
          const int a = edge_a(tr, i), b = edge_b(tr, i);
          if (nb == kNone && ((a == sa && b == sb) || (a == sb && b == sa))) continue;
          cav.edges.push_back({a, b, nb});
          boundary_verts.push_back(a);
          const double o = orient(P(a), P(b), p);
          if (!(o > 1e-13 * dist(P(a), P(b)) * (dist(P(a), p) + dist(P(b), p)))) {
            if (is_seed(t)) fail = true;
            else if (drop == kNone) drop = t;
          }
        }
      }
      if (fail) return cav;
      if (drop == kNone) {
        // A vertex swallowed by the cavity would vanish from the mesh.
        std::sort(boundary_verts.begin(), boundary_verts.end());
        for (int t : list) {
          for (int v : T(t).v) {
            if (v == sa || v == sb) continue;
            if (!std::binary_search(boundary_verts.begin(), boundary_verts.end(), v)) {
              if (is_seed(t)) {
                for (int u : list) {
                  if (!is_seed(u) && std::find(T(u).v.begin(), T(u).v.end(), v) != T(u).v.end()) {
                    drop = u;
                    break;
                  }
                }
                if (drop == kNone) return cav;
              } else {
                drop = t;
              }
              break;
            }
          }
          if (drop != kNone) break;
        }
      }
      if (drop == kNone) {
        cav.ok = true;
        return cav;
      }
      stamp_[static_cast<std::size_t>(drop)] = 0;
      list.erase(std::find(list.begin(), list.end(), drop));
    }
    return cav;
  }

  void commit(const Cavity& cav, int v) {
    for (int t : cav.tris) kill(t);
    std::unordered_map<int, int> by_start, by_end;
    std::vector<int> made;
    made.reserve(cav.edges.size());
    for (const auto& e : cav.edges) {
      const int t = add_tri(v, e.a, e.b);
      made.push_back(t);
      T(t).n[0] = e.outer;
      if (e.outer != kNone) {
        Tri& o = T(e.outer);
        for (int j = 0; j < 3; ++j) {
          if (edge_a(o, j) == e.b && edge_b(o, j) == e.a) o.n[static_cast<std::size_t>(j)] = t;
        }
      }
      by_start[e.a] = t;
      by_end[e.b] = t;
    }
    for (std::size_t k = 0; k < made.size(); ++k) {
      Tri& tr = T(made[k]);
      const auto s = by_start.find(cav.edges[k].b);
      const auto e = by_end.find(cav.edges[k].a);
      tr.n[1] = s != by_start.end() ? s->second : kNone;
      tr.n[2] = e != by_end.end() ? e->second : kNone;
    }
    if (!made.empty()) hint_ = made.front();
  }

  int insert_point(Vec2 p, int start) {
    const int t = locate(p, start);
    if (t == kNone) return kNone;
    for (int v : T(t).v) {
      if (dist(P(v), p) <= eps_) return v;
    }
    Cavity cav = cavity(p, t, kNone, kNone, kNone);
    if (!cav.ok) return kNone;
    const int v = add_vertex(p);
    commit(cav, v);
    return v;
  }

  // Triangle holding edge (a, b) and the index of the vertex opposite it.
  std::pair<int, int> find_edge(int a, int b) {
    auto check = [&](int t) -> int {
      const Tri& tr = T(t);
      for (int i = 0; i < 3; ++i) {
        const int ea = edge_a(tr, i), eb = edge_b(tr, i);
        if ((ea == a && eb == b) || (ea == b && eb == a)) return i;
      }
      return kNone;
    };
    const int start = vert_tri_[static_cast<std::size_t>(a)];
    if (start != kNone && T(start).alive &&
        std::find(T(start).v.begin(), T(start).v.end(), a) != T(start).v.end()) {
      // Rotate around a in both directions.
      for (int dir = 0; dir < 2; ++dir) {
        int t = start;
        for (std::size_t guard = 0; guard < tris_.size() + 1; ++guard) {
          if (const int i = check(t); i != kNone) return {t, i};
          const Tri& tr = T(t);
          int k = 0;
          while (tr.v[static_cast<std::size_t>(k)] != a) ++k;
          const int next = tr.n[static_cast<std::size_t>((k + 1 + dir) % 3)];
          if (next == kNone || next == start) break;
          t = next;
        }
      }
      return {kNone, kNone};
    }
    for (std::size_t k = 0; k < tris_.size(); ++k) {
      if (!tris_[k].alive) continue;
      if (const int i = check(static_cast<int>(k)); i != kNone) return {static_cast<int>(k), i};
    }
    return {kNone, kNone};
  }

  void recover_segments(const std::vector<int>& id) {
    struct Pending {
      int a, b, marker;
    };
    std::deque<Pending> queue;
    for (const auto& s : pslg_.segments) {
      queue.push_back({id[static_cast<std::size_t>(s.a)], id[static_cast<std::size_t>(s.b)],
                       s.marker});
    }
    while (!queue.empty()) {
      const Pending s = queue.front();
      queue.pop_front();
      if (s.a == s.b) continue;
      if (find_edge(s.a, s.b).first != kNone) {
        constrained_[edge_key(s.a, s.b)] = s.marker;
        continue;
      }
      const Vec2 mid = 0.5 * (P(s.a) + P(s.b));
      const int v = insert_point(mid, vert_tri_[static_cast<std::size_t>(s.a)]);
      if (v == kNone || v == s.a || v == s.b) {
        throw MeshResolutionError("boundary segment could not be recovered");
      }
      queue.push_back({s.a, v, s.marker});
      queue.push_back({v, s.b, s.marker});
    }
  }

  // Keep triangles enclosed an odd number of times by constrained edges.
  void carve() {
    std::vector<int> depth(tris_.size(), -1);
    std::deque<int> dq;
    const int start = vert_tri_[0];
    depth[static_cast<std::size_t>(start)] = 0;
    dq.push_back(start);
    while (!dq.empty()) {
      const int t = dq.front();
      dq.pop_front();
      const Tri& tr = T(t);
      for (int i = 0; i < 3; ++i) {
        const int nb = tr.n[static_cast<std::size_t>(i)];
        if (nb == kNone) continue;
        const int w = is_constrained(edge_a(tr, i), edge_b(tr, i)) ? 1 : 0;
        const int d = depth[static_cast<std::size_t>(t)] + w;
        int& dn = depth[static_cast<std::size_t>(nb)];
        if (dn == -1 || d < dn) {
          dn = d;
          if (w == 0) dq.push_front(nb);
          else dq.push_back(nb);
        }
      }
    }
    for (std::size_t k = 0; k < tris_.size(); ++k) {
      if (!tris_[k].alive || depth[k] % 2 == 1) continue;
      kill(static_cast<int>(k));
    }
    for (auto& tr : tris_) {
      if (!tr.alive) continue;
      for (auto& nb : tr.n) {
        if (nb != kNone && !T(nb).alive) nb = kNone;
      }
    }
    for (std::size_t k = 0; k < tris_.size(); ++k) {
      if (tris_[k].alive) {
        for (int v : tris_[k].v) vert_tri_[static_cast<std::size_t>(v)] = static_cast<int>(k);
      }
    }
  }

  bool encroached(int a, int b) {
    const auto [t, i] = find_edge(a, b);
    if (t == kNone) return false;
    auto test = [&](int c) {
      const Vec2 pa = P(a) - P(c), pb = P(b) - P(c);
      return dot(pa, pb) < -1e-12 * dist(P(a), P(b)) * dist(P(a), P(b));
    };
    if (test(T(t).v[static_cast<std::size_t>(i)])) return true;
    const int nb = T(t).n[static_cast<std::size_t>(i)];
    if (nb == kNone) return false;
    for (int c : T(nb).v) {
      if (c != a && c != b) return test(c);
    }
    return false;
  }

  bool split_segment(int a, int b) {
    const auto key = edge_key(a, b);
    const auto it = constrained_.find(key);
    if (it == constrained_.end()) return false;
    const int marker = it->second;
    const auto [t, i] = find_edge(a, b);
    if (t == kNone) return false;
    const int other = T(t).n[static_cast<std::size_t>(i)];
    const Vec2 m = 0.5 * (P(a) + P(b));
    constrained_.erase(key);
    Cavity cav = cavity(m, t, other, a, b);
    if (!cav.ok) {
      constrained_[key] = marker;
      return false;
    }
    const int v = add_vertex(m);
    commit(cav, v);
    constrained_[edge_key(a, v)] = marker;
    constrained_[edge_key(v, b)] = marker;
    seg_queue_.push_back({a, v});
    seg_queue_.push_back({v, b});
    queue_cavity_segments(cav);
    return true;
  }

  void queue_cavity_segments(const Cavity& cav) {
    for (const auto& e : cav.edges) {
      if (is_constrained(e.a, e.b)) seg_queue_.push_back({e.a, e.b});
    }
  }

  bool is_bad(const Tri& tr) const {
    const Vec2 a = P(tr.v[0]), b = P(tr.v[1]), c = P(tr.v[2]);
    const double la = dist(b, c), lb = dist(c, a), lc = dist(a, b);
    const double area2 = orient(a, b, c);
    // Smallest angle faces the shortest edge.
    double lmin = la, l1 = lb, l2 = lc;
    if (lb < lmin) { lmin = lb; l1 = la; l2 = lc; }
    if (lc < lmin) { lmin = lc; l1 = la; l2 = lb; }
    (void)lmin;
    const double sin_min = area2 / (l1 * l2);
    if (sin_min < std::sin(opt_.min_angle_deg * std::numbers::pi / 180.0)) return true;
    if (opt_.max_edge) {
      const double limit = opt_.max_edge((a + b + c) / 3.0);
      if (std::max({la, lb, lc}) > limit * (1.0 + 1e-12)) return true;
    }
    return false;
  }

  // Straight walk from `from` (inside t) toward `to`. Returns the triangle
  // holding `to`, or kNone with the blocking constrained edge in (ca, cb).
  int walk(int t, Vec2 from, Vec2 to, int& ca, int& cb) {
    const std::size_t cap = 4 * tris_.size() + 64;
    for (std::size_t iter = 0; iter < cap; ++iter) {
      const Tri& tr = T(t);
      int exit = kNone, first = kNone;
      for (int i = 0; i < 3; ++i) {
        const Vec2 pa = P(edge_a(tr, i)), pb = P(edge_b(tr, i));
        if (orient(pa, pb, to) >= 0) continue;
        if (first == kNone) first = i;
        const double s1 = orient(from, to, pa), s2 = orient(from, to, pb);
        if ((s1 <= 0 && s2 >= 0) || (s1 >= 0 && s2 <= 0)) {
          exit = i;
          break;
        }
      }
      if (first == kNone) return t;
      if (exit == kNone) exit = first;
      const int a = edge_a(tr, exit), b = edge_b(tr, exit);
      const int nb = tr.n[static_cast<std::size_t>(exit)];
      if (nb == kNone || is_constrained(a, b)) {
        ca = a;
        cb = b;
        return kNone;
      }
      t = nb;
    }
    ca = cb = kNone;
    return kNone;
  }

  void refine_triangle(int t) {
    const auto v = T(t).v;
    const Vec2 a = P(v[0]), b = P(v[1]), c = P(v[2]);
    const Vec2 cc = circumcenter(a, b, c);
    int ca = kNone, cb = kNone;
    const int host = walk(t, (a + b + c) / 3.0, cc, ca, cb);
    if (host == kNone) {
      if (ca != kNone && split_segment(ca, cb) && T(t).alive && T(t).v == v) {
        tri_queue_.push_back({t, v});
      }
      return;
    }
    for (int w : T(host).v) {
      if (dist(P(w), cc) <= eps_) return;
    }
    Cavity cav = cavity(cc, host, kNone, kNone, kNone);
    if (!cav.ok) return;
    std::vector<std::pair<int, int>> hit;
    for (const auto& e : cav.edges) {
      if (!is_constrained(e.a, e.b)) continue;
      if (dot(P(e.a) - cc, P(e.b) - cc) < 0) hit.push_back({e.a, e.b});
    }
    if (!hit.empty()) {
      for (const auto& [p, q] : hit) split_segment(p, q);
      if (T(t).alive && T(t).v == v) tri_queue_.push_back({t, v});
      return;
    }
    const int w = add_vertex(cc);
    commit(cav, w);
    queue_cavity_segments(cav);
  }

  void refine() {
    refining_ = true;
    std::vector<std::uint64_t> keys;
    keys.reserve(constrained_.size());
    for (const auto& [k, m] : constrained_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (auto k : keys) {
      seg_queue_.push_back({static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu)});
    }
    for (std::size_t k = 0; k < tris_.size(); ++k) {
      if (tris_[k].alive) tri_queue_.push_back({static_cast<int>(k), tris_[k].v});
    }
    while (true) {
      if (!seg_queue_.empty()) {
        const auto [a, b] = seg_queue_.front();
        seg_queue_.pop_front();
        if (is_constrained(a, b) && encroached(a, b)) split_segment(a, b);
        continue;
      }
      if (tri_queue_.empty()) break;
      const auto [t, v] = tri_queue_.front();
      tri_queue_.pop_front();
      const Tri& tr = T(t);
      if (!tr.alive || tr.v != v || !is_bad(tr)) continue;
      refine_triangle(t);
    }
    refining_ = false;
  }

  Triangulation extract() const {
    Triangulation out;
    std::vector<int> remap(pts_.size(), kNone);
    std::vector<char> used(pts_.size(), 0);
    for (const auto& tr : tris_) {
      if (!tr.alive) continue;
      for (int v : tr.v) used[static_cast<std::size_t>(v)] = 1;
    }
    for (std::size_t i = 3; i < pts_.size(); ++i) {
      if (!used[i]) continue;
      remap[i] = static_cast<int>(out.points.size());
      out.points.push_back(pts_[i]);
    }
    for (const auto& tr : tris_) {
      if (!tr.alive) continue;
      std::array<int, 3> t{};
      for (std::size_t k = 0; k < 3; ++k) t[k] = remap[static_cast<std::size_t>(tr.v[k])];
      if (t[0] == kNone || t[1] == kNone || t[2] == kNone) continue;
      out.triangles.push_back(t);
    }
    std::vector<std::pair<std::uint64_t, int>> segs(constrained_.begin(), constrained_.end());
    std::sort(segs.begin(), segs.end());
    for (const auto& [k, marker] : segs) {
      const int a = remap[static_cast<std::size_t>(k >> 32)];
      const int b = remap[static_cast<std::size_t>(k & 0xffffffffu)];
      if (a == kNone || b == kNone) continue;
      out.segments.push_back({a, b, marker});
    }
    return out;
  }
};

}  // namespace

Triangulation triangulate_pslg(const Pslg& pslg, const RefineOptions& options) {
  Mesher m(pslg, options);
  return m.run();
}

}  // namespace surf
