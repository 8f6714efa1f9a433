"""Arrangement of a closed spherical polygonal curve plus scaffold edges.

The base complex is an oriented planar map on the sphere: vertices with
geometric positions, undirected edges encoded as dart pairs, an explicit
counterclockwise rotation system per vertex, and faces traced from it.
CURVE edges carry honest geodesic geometry; SCAFFOLD edges are auxiliary
(tips for special points, transient chords) and matter combinatorially.

Darts: edge e yields darts 2e (a -> b) and 2e+1 (b -> a); reversal is ^1.
Faces lie on the LEFT of the darts in their boundary cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    EPS_SEP,
    GeodesicSegment,
    Rotation,
    angle_between,
    points_coincide,
    segment_intersection,
    turning_angle,
    unit,
)

CURVE = "curve"
SCAFFOLD = "scaffold"

FULL_SPHERE = 4 * math.pi


class ArrangementError(ValueError):
    pass


class OverlappingInput(ArrangementError):
    """Two input segments share a subarc and are not exact +- duplicates."""


class TooManySegments(ArrangementError):
    pass


class ScaffoldBlocked(ArrangementError):
    """No crossing-free geodesic from an interior point to the face boundary."""


@dataclass(frozen=True)
class SpecialSet:
    """The q >= 3 distinguished points a_1..a_q."""

    points: tuple

    def __post_init__(self):
        pts = tuple(unit(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 3:
            raise ArrangementError("special set needs q >= 3 points")
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if points_coincide(pts[i], pts[j]):
                    raise ArrangementError("special points %d and %d coincide" % (i, j))

    @property
    def q(self) -> int:
        return len(self.points)

    def labels(self):
        return ["a%d" % (i + 1) for i in range(len(self.points))]


@dataclass(frozen=True)
class CurveInput:
    """Closed polygonal curve given by its cyclic vertex list."""

    points: tuple
    max_segments: int = 64

    def __post_init__(self):
        pts = tuple(unit(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        k = len(pts)
        if k < 2:
            raise ArrangementError("curve needs at least 2 points")
        if k > self.max_segments:
            raise TooManySegments("curve has %d segments > %d" % (k, self.max_segments))
        for i in range(k):
            a, b = pts[i], pts[(i + 1) % k]
            if points_coincide(a, b):
                raise ArrangementError("consecutive curve points %d, %d coincide" % (i, (i + 1) % k))
            if angle_between(a, b) >= math.pi - EPS_SEP:
                raise ArrangementError("consecutive curve points %d, %d are antipodal" % (i, (i + 1) % k))

    def segments(self):
        k = len(self.points)
        return [GeodesicSegment(self.points[i], self.points[(i + 1) % k]) for i in range(k)]


@dataclass
class Edge:
    a: int
    b: int
    kind: str
    length: float


@dataclass
class Face:
    cycle: list  # darts, face on the left of each
    area: float


def _dart(e: int, rev: bool) -> int:
    return 2 * e + (1 if rev else 0)


class BaseComplex:
    """Planar spherical map: vertices, dart-encoded edges, rotation system, faces."""

    def __init__(self):
        self.vertices = []  # np arrays or None (deleted)
        self.fans = []  # per vertex: darts leaving it, ccw cyclic order
        self.edges = []  # Edge or None
        self.faces = []  # Face or None
        self.specials = {}  # vertex id -> label
        self.markers = set()  # fixture branch anchors (scaffolded like specials)
        self.traversal = []  # input curve as a dart word (may be empty)
        self.meta = {}
        self._dart_face = None
        self._dart_pos = None

    # -- dart helpers ------------------------------------------------------

    def edge_of(self, d: int) -> int:
        return d >> 1

    def tail(self, d: int) -> int:
        e = self.edges[d >> 1]
        return e.a if d % 2 == 0 else e.b

    def head(self, d: int) -> int:
        return self.tail(d ^ 1)

    def kind(self, d: int) -> str:
        return self.edges[d >> 1].kind

    def length(self, d: int) -> float:
        return self.edges[d >> 1].length

    def dart_segment(self, d: int) -> GeodesicSegment:
        return GeodesicSegment(self.vertices[self.tail(d)], self.vertices[self.head(d)])

    def live_edges(self):
        return [e for e in range(len(self.edges)) if self.edges[e] is not None]

    def live_faces(self):
        return [f for f in range(len(self.faces)) if self.faces[f] is not None]

    def live_vertices(self):
        return [v for v in range(len(self.vertices)) if self.vertices[v] is not None]

    # -- derived incidence -------------------------------------------------

    def _invalidate(self):
        self._dart_face = None
        self._dart_pos = None

    def _index_darts(self):
        df, dp = {}, {}
        for f in self.live_faces():
            for pos, d in enumerate(self.faces[f].cycle):
                if d in df:
                    raise ArrangementError("dart %d appears in two face cycles" % d)
                df[d] = f
                dp[d] = pos
        self._dart_face = df
        self._dart_pos = dp

    def face_of_dart(self, d: int) -> int:
        if self._dart_face is None:
            self._index_darts()
        return self._dart_face[d]

    def pos_of_dart(self, d: int) -> int:
        if self._dart_pos is None:
            self._index_darts()
        return self._dart_pos[d]

    def left_face(self, d: int) -> int:
        return self.face_of_dart(d)

    def right_face(self, d: int) -> int:
        return self.face_of_dart(d ^ 1)

    def sigma_next(self, d: int) -> int:
        """Next dart ccw around tail(d)."""
        fan = self.fans[self.tail(d)]
        return fan[(fan.index(d) + 1) % len(fan)]

    def sigma_prev(self, d: int) -> int:
        fan = self.fans[self.tail(d)]
        return fan[(fan.index(d) - 1) % len(fan)]

    def phi_next(self, d: int) -> int:
        """Next dart of the left-face cycle: sigma^-1 after reversal."""
        return self.sigma_prev(d ^ 1)

    def trace_faces(self):
        """Recompute face cycles from the rotation system (areas not assigned)."""
        seen = set()
        cycles = []
        for v in self.live_vertices():
            for d in self.fans[v]:
                if d in seen:
                    continue
                cyc = []
                cur = d
                while True:
                    cyc.append(cur)
                    seen.add(cur)
                    cur = self.phi_next(cur)
                    if cur == d:
                        break
                cycles.append(cyc)
        return cycles

    def euler_check(self):
        v = len(self.live_vertices())
        e = len(self.live_edges())
        f = len(self.live_faces())
        if v - e + f != 2:
            raise ArrangementError("Euler formula violated: V-E+F = %d" % (v - e + f))

    def check(self, require_areas=True):
        """Structural consistency: fans vs edges, stored cycles vs traced, Euler, areas."""
        for v in self.live_vertices():
            for d in self.fans[v]:
                if self.edges[d >> 1] is None:
                    raise ArrangementError("fan of %d holds dead dart %d" % (v, d))
                if self.tail(d) != v:
                    raise ArrangementError("dart %d in fan of %d has tail %d" % (d, v, self.tail(d)))
        for e in self.live_edges():
            for d in (2 * e, 2 * e + 1):
                if d not in self.fans[self.tail(d)]:
                    raise ArrangementError("dart %d missing from fan" % d)
        traced = {self._cyc_key(c) for c in self.trace_faces()}
        stored = {self._cyc_key(self.faces[f].cycle) for f in self.live_faces()}
        if traced != stored:
            raise ArrangementError("stored face cycles disagree with rotation system")
        self.euler_check()
        if require_areas:
            total = sum(self.faces[f].area for f in self.live_faces())
            if abs(total - FULL_SPHERE) > 1e-9:
                raise ArrangementError("face areas sum to %r, not 4pi" % total)
            if any(self.faces[f].area <= 0 for f in self.live_faces()):
                raise ArrangementError("non-positive face area")

    @staticmethod
    def _cyc_key(cyc):
        k = min(range(len(cyc)), key=lambda i: cyc[i])
        return tuple(cyc[k:] + cyc[:k])

    # -- geometry-backed queries -------------------------------------------

    def vertex_at(self, p, tol=EPS_SEP):
        for v in self.live_vertices():
            if points_coincide(self.vertices[v], p, tol):
                return v
        return None

    def dart_tangent(self, d: int) -> np.ndarray:
        v, w = self.vertices[self.tail(d)], self.vertices[self.head(d)]
        return unit(np.cross(np.cross(v, w), v))

    def azimuth_order(self, v: int, darts):
        p = self.vertices[v]
        e1 = unit(np.cross(p, [0.412, -0.777, 0.318]) if abs(p[2]) > 0.9 else np.cross(p, [0, 0, 1]))
        e2 = unit(np.cross(p, e1))
        def az(d):
            t = self.dart_tangent(d)
            return math.atan2(float(np.dot(t, e2)), float(np.dot(t, e1)))
        return sorted(darts, key=az)

    def locate_point(self, p):
        """Classify p against the complex: ('vertex', v) | ('edge', e, t) | ('face', f).

        Snapping priority vertex > edge > face at EPS_SEP; SCAFFOLD edges are
        skipped for edge hits when their geometry is not honest.
        """
        p = unit(p)
        v = self.vertex_at(p)
        if v is not None:
            return ("vertex", v)
        for e in self.live_edges():
            if self.edges[e].kind != CURVE:
                continue
            t = self.dart_segment(2 * e).param_of(p)
            if t is not None:
                return ("edge", e, t)
        # Nearest curve feature decides the side.
        best = None
        for e in self.live_edges():
            if self.edges[e].kind != CURVE:
                continue
            seg = self.dart_segment(2 * e)
            n = seg.pole
            c = p - float(np.dot(p, n)) * n
            if np.linalg.norm(c) > 1e-12 and seg.contains(unit(c), tol=1e-9):
                d_ang = angle_between(p, unit(c))
                cand = (d_ang, e, None)
            else:
                da, db = angle_between(p, seg.a), angle_between(p, seg.b)
                cand = (min(da, db), e, self.edges[e].a if da <= db else self.edges[e].b)
            if best is None or cand[0] < best[0]:
                best = cand
        if best is None:
            raise ArrangementError("complex has no curve edges")
        _, e, vtx = best
        if vtx is None:
            side = float(np.dot(p, self.dart_segment(2 * e).pole))
            d = 2 * e if side > 0 else 2 * e + 1
            return ("face", self.left_face(d))
        return ("face", self._face_of_wedge(vtx, p))

    def _face_of_wedge(self, v: int, p) -> int:
        """Face of the fan wedge at v containing the direction toward p.

        Only CURVE darts are used: scaffold edges never separate faces at a
        vertex and their geometry may be nominal after surgeries.
        """
        pv = self.vertices[v]
        t = unit(np.cross(np.cross(pv, p), pv))
        fan = [d for d in self.fans[v] if self.kind(d) == CURVE]
        if not fan:
            raise ArrangementError("vertex %d has no curve darts" % v)
        e1 = unit(self.dart_tangent(fan[0]))
        e2 = unit(np.cross(pv, e1))
        def az(vec):
            return math.atan2(float(np.dot(vec, e2)), float(np.dot(vec, e1))) % (2 * math.pi)
        target = az(t)
        angs = [az(self.dart_tangent(d)) for d in fan]
        best_i, best_gap = 0, None
        for i, a in enumerate(angs):
            gap = (target - a) % (2 * math.pi)
            if best_gap is None or gap < best_gap:
                best_i, best_gap = i, gap
        return self.left_face(fan[best_i])

    def face_interior_point(self, f: int) -> np.ndarray:
        """A point strictly inside face f (offset from a curve boundary dart)."""
        for d in self.faces[f].cycle:
            if self.kind(d) != CURVE:
                continue
            seg = self.dart_segment(d)
            mid = seg.point_at(0.5)
            inward = unit(np.cross(seg.pole, mid))
            for eps in (1e-3, 1e-5, 1e-7):
                cand = unit(math.cos(eps) * mid + math.sin(eps) * seg.pole)
                # pole side = left side of the dart
                loc = self.locate_point(cand)
                if loc == ("face", f):
                    return cand
                cand2 = unit(math.cos(eps) * mid - math.sin(eps) * seg.pole)
                loc2 = self.locate_point(cand2)
                if loc2 == ("face", f):
                    return cand2
        raise ArrangementError("could not sample interior of face %d" % f)

    # -- combinatorial edits (used by surgery) ------------------------------

    def new_vertex(self, p) -> int:
        self.vertices.append(unit(p))
        self.fans.append([])
        return len(self.vertices) - 1

    def _new_edge(self, a, b, kind, length) -> int:
        self.edges.append(Edge(a, b, kind, length))
        return len(self.edges) - 1

    def _new_face(self, cycle, area) -> int:
        self.faces.append(Face(list(cycle), area))
        return len(self.faces) - 1

    def split_edge(self, e: int, p) -> tuple:
        """Split edge e at point p into (e1 at the tail side, e2 at the head side).

        Face cycles and fans are rewired; per-dart side mapping is returned as
        {old dart: [replacement darts in cycle order]}.
        """
        ed = self.edges[e]
        x = self.new_vertex(p)
        la = angle_between(self.vertices[ed.a], p)
        lb = angle_between(self.vertices[ed.b], p)
        e1 = self._new_edge(ed.a, x, ed.kind, la)
        e2 = self._new_edge(x, ed.b, ed.kind, lb)
        d_fwd, d_rev = 2 * e, 2 * e + 1
        rep = {d_fwd: [2 * e1, 2 * e2], d_rev: [2 * e2 + 1, 2 * e1 + 1]}
        for f in self.live_faces():
            cyc = self.faces[f].cycle
            out = []
            for d in cyc:
                out.extend(rep.get(d, [d]))
            self.faces[f].cycle = out
        self.fans[ed.a][self.fans[ed.a].index(d_fwd)] = 2 * e1
        self.fans[ed.b][self.fans[ed.b].index(d_rev)] = 2 * e2 + 1
        self.fans[x] = [2 * e2, 2 * e1 + 1]
        self.edges[e] = None
        self._invalidate()
        return x, e1, e2, rep

    def add_bridge(self, face: int, attach_vertex: int, corner_pos: int, tip_point,
                   length=None) -> tuple:
        """Attach a dangling SCAFFOLD edge from a boundary corner into the face.

        ``corner_pos`` indexes the face cycle: the new slit is inserted at the
        corner before dart ``cycle[corner_pos]`` (whose tail must be
        ``attach_vertex``).  Returns (tip vertex, edge id).
        """
        cyc = self.faces[face].cycle
        if self.tail(cyc[corner_pos]) != attach_vertex:
            raise ArrangementError("corner does not sit at the attachment vertex")
        t = self.new_vertex(tip_point)
        ln = length if length is not None else angle_between(self.vertices[attach_vertex], tip_point)
        e = self._new_edge(attach_vertex, t, SCAFFOLD, ln)
        d_out, d_in = 2 * e, 2 * e + 1
        self.faces[face].cycle = cyc[:corner_pos] + [d_out, d_in] + cyc[corner_pos:]
        # The corner before cycle[corner_pos] is the fan wedge starting at that
        # dart and running ccw; the new dart lands inside it.
        fan = self.fans[attach_vertex]
        fan.insert(fan.index(cyc[corner_pos]) + 1, d_out)
        self.fans[t] = [d_in]
        self._invalidate()
        return t, e

    def insert_chord(self, face: int, pos_a: int, pos_b: int, kind=SCAFFOLD,
                     honest_area=None) -> tuple:
        """Insert a chord between the corners before cycle[pos_a] and cycle[pos_b].

        Splits ``face`` into two; returns (edge id, face id containing old
        cycle[pos_a] tail side, other face id).  ``honest_area``: area of the
        first face if geometrically known, else the parent area splits evenly
        (functionals only consume counts times total area).
        """
        cyc = self.faces[face].cycle
        if pos_a == pos_b:
            raise ArrangementError("chord endpoints coincide")
        va, vb = self.tail(cyc[pos_a]), self.tail(cyc[pos_b])
        ln = angle_between(self.vertices[va], self.vertices[vb]) if va != vb else 0.0
        e = self._new_edge(va, vb, kind, ln)
        d_ab, d_ba = 2 * e, 2 * e + 1
        if pos_a < pos_b:
            cyc_a = [d_ba] + cyc[pos_a:pos_b]
            cyc_b = [d_ab] + cyc[pos_b:] + cyc[:pos_a]
        else:
            cyc_a = [d_ba] + cyc[pos_a:] + cyc[:pos_b]
            cyc_b = [d_ab] + cyc[pos_b:pos_a]
        area = self.faces[face].area
        area_a = honest_area if honest_area is not None else area / 2
        fa = self._new_face(cyc_a, area_a)
        fb = self._new_face(cyc_b, area - area_a)
        self.faces[face] = None
        self.fans[va].insert(self.fans[va].index(cyc[pos_a]) + 1, d_ab)
        self.fans[vb].insert(self.fans[vb].index(cyc[pos_b]) + 1, d_ba)
        self._invalidate()
        return e, fa, fb

    def delete_edge_merge(self, e: int) -> int:
        """Delete edge e whose sides lie in two distinct faces; merge them.

        Returns the merged face id.
        """
        d, dr = 2 * e, 2 * e + 1
        fa, fb = self.face_of_dart(d), self.face_of_dart(dr)
        if fa == fb:
            raise ArrangementError("edge %d has one face on both sides" % e)
        ca, cb = self.faces[fa].cycle, self.faces[fb].cycle
        ia, ib = ca.index(d), cb.index(dr)
        merged = ca[ia + 1:] + ca[:ia] + cb[ib + 1:] + cb[:ib]
        area = self.faces[fa].area + self.faces[fb].area
        f = self._new_face(merged, area)
        self.faces[fa] = None
        self.faces[fb] = None
        for dd in (d, dr):
            self.fans[self.tail(dd)].remove(dd)
        self.edges[e] = None
        self._invalidate()
        return f

    def delete_slit_edge(self, e: int) -> int:
        """Delete a dangling edge (same face both sides, tip of degree 1)."""
        d, dr = 2 * e, 2 * e + 1
        f = self.face_of_dart(d)
        if self.face_of_dart(dr) != f:
            raise ArrangementError("edge %d is not a slit" % e)
        tip = self.edges[e].b if len(self.fans[self.edges[e].b]) == 1 else self.edges[e].a
        if len(self.fans[tip]) != 1:
            raise ArrangementError("edge %d has no free tip" % e)
        cyc = [x for x in self.faces[f].cycle if x not in (d, dr)]
        self.faces[f].cycle = cyc
        other = self.edges[e].a if tip == self.edges[e].b else self.edges[e].b
        for dd in (d, dr):
            if self.tail(dd) == other:
                self.fans[other].remove(dd)
        self.fans[tip] = []
        self.vertices[tip] = None
        self.specials.pop(tip, None)
        self.markers.discard(tip)
        self.edges[e] = None
        self._invalidate()
        return f

    def rotated(self, r: Rotation) -> "BaseComplex":
        """Geometric image under a rotation (combinatorics untouched)."""
        out = self.copy()
        for v in out.live_vertices():
            out.vertices[v] = r.apply(out.vertices[v])
        return out

    def copy(self) -> "BaseComplex":
        out = BaseComplex()
        out.vertices = [None if v is None else v.copy() for v in self.vertices]
        out.fans = [list(f) for f in self.fans]
        out.edges = [None if e is None else Edge(e.a, e.b, e.kind, e.length) for e in self.edges]
        out.faces = [None if f is None else Face(list(f.cycle), f.area) for f in self.faces]
        out.specials = dict(self.specials)
        out.markers = set(self.markers)
        out.traversal = list(self.traversal)
        out.meta = dict(self.meta)
        return out


def left_right_faces(bc: BaseComplex, dart: int):
    """(left face, right face) of a directed admissible arc."""
    return bc.left_face(dart), bc.right_face(dart)


def build_arrangement(curve: CurveInput, special: SpecialSet, markers=()) -> BaseComplex:
    """Arrangement of the curve: split at mutual crossings and at special or
    marker points lying on it; faces traced with Gauss-Bonnet areas.

    Off-curve special/marker points are recorded for attach_scaffold.
    """
    segs = curve.segments()
    interesting = list(special.points) + [unit(m) for m in markers]

    points = []  # registry of distinct points

    def register(p):
        for i, q in enumerate(points):
            if points_coincide(p, q, 2 * EPS_SEP):
                return i
        points.append(unit(p))
        return len(points) - 1

    seg_pts = [dict() for _ in segs]  # param -> point id
    for i, s in enumerate(segs):
        seg_pts[i][0.0] = register(s.a)
        seg_pts[i][1.0] = register(s.b)
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            for h in segment_intersection(segs[i], segs[j]):
                if isinstance(h, GeodesicSegment):
                    ki = segs[i].param_of(h.a), segs[i].param_of(h.b)
                    kj = segs[j].param_of(h.a), segs[j].param_of(h.b)
                    same = points_coincide(segs[i].a, segs[j].a) and points_coincide(segs[i].b, segs[j].b)
                    antv = points_coincide(segs[i].a, segs[j].b) and points_coincide(segs[i].b, segs[j].a)
                    if not (same or antv):
                        raise OverlappingInput("segments %d and %d share a subarc" % (i, j))
                    continue
                pid = register(h)
                ti, tj = segs[i].param_of(h, 1e-8), segs[j].param_of(h, 1e-8)
                if ti is not None:
                    seg_pts[i][round(ti, 12)] = pid
                if tj is not None:
                    seg_pts[j][round(tj, 12)] = pid
    for p in interesting:
        for i, s in enumerate(segs):
            t = s.param_of(p)
            if t is not None:
                seg_pts[i][round(t, 12)] = register(p)

    bc = BaseComplex()
    vid = {}
    for pid, p in enumerate(points):
        vid[pid] = bc.new_vertex(p)

    edge_lookup = {}  # frozenset(point ids) -> edge id (dedup of +- duplicates)
    traversal = []
    for i, s in enumerate(segs):
        ts = sorted(seg_pts[i])
        for k in range(len(ts) - 1):
            pa, pb = seg_pts[i][ts[k]], seg_pts[i][ts[k + 1]]
            if pa == pb:
                continue
            key = frozenset((pa, pb))
            if key in edge_lookup:
                e = edge_lookup[key]
                traversal.append(2 * e if bc.edges[e].a == vid[pa] else 2 * e + 1)
                continue
            seg = GeodesicSegment(points[pa], points[pb])
            e = bc._new_edge(vid[pa], vid[pb], CURVE, seg.length)
            edge_lookup[key] = e
            traversal.append(2 * e)
    bc.traversal = traversal

    for v in bc.live_vertices():
        darts = [2 * e for e in bc.live_edges() if bc.edges[e].a == v]
        darts += [2 * e + 1 for e in bc.live_edges() if bc.edges[e].b == v]
        if not darts:
            raise ArrangementError("isolated curve vertex %d" % v)
        bc.fans[v] = bc.azimuth_order(v, darts)

    for cyc in bc.trace_faces():
        area = 2 * math.pi - _cycle_turning(bc, cyc)
        area %= FULL_SPHERE
        if area <= 0:
            raise ArrangementError("face with non-positive area")
        bc._new_face(cyc, area)

    total = sum(bc.faces[f].area for f in bc.live_faces())
    if abs(total - FULL_SPHERE) > 1e-9:
        raise ArrangementError("areas sum to %r instead of 4pi" % total)

    # Tag on-curve specials/markers; remember off-curve ones for the scaffold.
    labels = special.labels()
    pending = []
    for p, lab in list(zip(special.points, labels)) + [(unit(m), None) for m in markers]:
        v = bc.vertex_at(p)
        if v is not None:
            if lab is None:
                bc.markers.add(v)
            else:
                bc.specials[v] = lab
        else:
            pending.append((p, lab))
    bc.meta["pending_interior_points"] = pending
    bc.euler_check()
    return bc


def _cycle_turning(bc: BaseComplex, cyc) -> float:
    total = 0.0
    for k, d in enumerate(cyc):
        nxt = cyc[(k + 1) % len(cyc)]
        t_in = -bc.dart_tangent(d ^ 1)
        t_out = bc.dart_tangent(nxt)
        turn = turning_angle(t_in, t_out, bc.vertices[bc.tail(nxt)])
        if nxt == (d ^ 1):
            # dead-end reversal: the face wraps around the tip, interior
            # angle 2*pi, exterior angle exactly -pi
            turn = -math.pi
        total += turn
    return total


def attach_scaffold(bc: BaseComplex) -> BaseComplex:
    """Bridge every interior special/marker point to a curve-arrangement vertex.

    Each pending point becomes a degree-1 vertex hanging inside its face on a
    SCAFFOLD edge; faces stay disks with unchanged areas.  A visible geodesic
    to the nearest vertex is preferred; when every view is blocked the nearest
    vertex is used with a nominal embedding (bridges are auxiliary and never
    enter a functional).
    """
    out = bc.copy()
    pending = list(out.meta.pop("pending_interior_points", []))
    for p, lab in pending:
        loc = out.locate_point(p)
        if loc[0] != "face":
            raise ScaffoldBlocked("interior point is not strictly inside a face")
        f = loc[1]
        cyc = out.faces[f].cycle
        cands = sorted(
            {out.tail(d) for d in cyc
             if out.tail(d) not in out.specials and out.tail(d) not in out.markers},
            key=lambda v: (angle_between(out.vertices[v], p), v),
        )
        if not cands:
            raise ScaffoldBlocked("face has no attachable vertex")
        v_pick, rubber = None, False
        for v in cands:
            if _segment_clear(out, p, v):
                v_pick = v
                break
        if v_pick is None:
            v_pick, rubber = cands[0], True
        try:
            corner = _corner_pos_toward(out, f, v_pick, p)
        except ScaffoldBlocked:
            corner = next(pos for pos, d in enumerate(cyc) if out.tail(d) == v_pick)
        t, _e = out.add_bridge(f, v_pick, corner, p)
        if rubber:
            out.meta.setdefault("rubber_bridges", []).append(t)
        if lab is None:
            out.markers.add(t)
        else:
            out.specials[t] = lab
    out.check()
    return out


def _segment_clear(bc: BaseComplex, p, v) -> bool:
    """True if the geodesic p -> vertex v touches the complex only at v."""
    pv = bc.vertices[v]
    if points_coincide(p, pv):
        return False
    if angle_between(p, pv) >= math.pi - EPS_SEP:
        return False
    probe = GeodesicSegment(p, pv)
    for e in bc.live_edges():
        seg = bc.dart_segment(2 * e)
        for h in segment_intersection(probe, seg):
            if isinstance(h, GeodesicSegment):
                return False
            if not points_coincide(h, pv):
                return False
    for w in bc.live_vertices():
        if w != v and bc.vertices[w] is not None and probe.contains(bc.vertices[w]):
            return False
    return True


def _corner_pos_toward(bc: BaseComplex, f: int, v: int, p) -> int:
    """Position in face f's cycle of the corner at v whose wedge contains p's direction."""
    pv = bc.vertices[v]
    t = unit(np.cross(np.cross(pv, p), pv))
    cyc = bc.faces[f].cycle
    e1 = unit(np.cross(pv, [0.412, -0.777, 0.318]) if abs(pv[2]) > 0.9 else np.cross(pv, [0, 0, 1]))
    e2 = unit(np.cross(pv, e1))

    def az(vec):
        return math.atan2(float(np.dot(vec, e2)), float(np.dot(vec, e1))) % (2 * math.pi)

    best = None
    for pos, d in enumerate(cyc):
        if bc.tail(d) != v:
            continue
        out_t = bc.dart_tangent(d)
        in_t = bc.dart_tangent(cyc[pos - 1] ^ 1)
        # wedge spans ccw from the outgoing dart to the reversed incoming dart
        span = (az(in_t) - az(out_t)) % (2 * math.pi)
        if span == 0.0:
            span = 2 * math.pi
        off = (az(t) - az(out_t)) % (2 * math.pi)
        if off <= span and (best is None or span < best[0]):
            best = (span, pos)
    if best is None:
        raise ScaffoldBlocked("no corner of the face at the attachment vertex sees the point")
    return best[1]
