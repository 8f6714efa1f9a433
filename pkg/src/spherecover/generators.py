"""Seeded generators for base complexes and random disk/closed coverings."""

from __future__ import annotations

import math
import random

import numpy as np

from .arrangement import (
    CURVE,
    SCAFFOLD,
    BaseComplex,
    CurveInput,
    SpecialSet,
    attach_scaffold,
    build_arrangement,
)
from .geometry import angle_between, sphere_point
from .surface import SurfaceComplex, functionals, require_valid


class GenerationStuck(RuntimeError):
    pass


def _sph(lon, lat):
    return sphere_point(math.cos(lat) * math.cos(lon),
                        math.cos(lat) * math.sin(lon),
                        math.sin(lat))


def equator_triangle_points():
    return tuple(_sph(2 * math.pi * k / 3, 0.0) for k in range(3))


def make_base(curve_points, special_points, markers=()) -> BaseComplex:
    bc = build_arrangement(CurveInput(tuple(curve_points)),
                           SpecialSet(tuple(special_points)), markers=markers)
    return attach_scaffold(bc)


def base_equator_triangle(q=3, specials_north=True, markers=()):
    """Equator triangle curve with q special points bunched in one hemisphere."""
    lat = 0.9 if specials_north else -0.9
    specials = [_sph(0.4 + 2.1 * k, lat) for k in range(q)]
    return make_base(equator_triangle_points(), specials, markers=markers)


def identity_disk(bc: BaseComplex, face: int) -> SurfaceComplex:
    """One-sheet covering of a single face (scaffold slits self-sewn)."""
    s = SurfaceComplex(bc, [face], {})
    _close_scaffold_sides(s, random.Random(0), identity_only=True)
    require_valid(s, "identity disk")
    return s


def _close_scaffold_sides(s: SurfaceComplex, rng, identity_only=False):
    """Pair every free scaffold side with its boundary-walk successor.

    Scaffold edges hang as trees inside faces, so around their tips the walk
    always turns straight back: innermost free scaffold sides are followed by
    their own reversal, and sewing those repeatedly consumes the whole tree.
    """
    guard = 0
    while True:
        guard += 1
        if guard > 20000:
            raise GenerationStuck("scaffold closure did not terminate")
        cand = None
        for side in s.free_sides():
            d = s.dart_of(side)
            if s.base.kind(d) != SCAFFOLD:
                continue
            nxt = s.walk_successor(side)
            if nxt != side and s.dart_of(nxt) == (d ^ 1):
                cand = (side, nxt)
                break
        if cand is None:
            if any(s.base.kind(s.dart_of(x)) == SCAFFOLD for x in s.free_sides()):
                raise GenerationStuck("free scaffold sides without sewable successor")
            return
        side, nxt = cand
        if identity_only and nxt[0] != side[0]:
            raise GenerationStuck("identity closure impossible here")
        s.pair(side, nxt)
        s.invalidate()


def _count_branches(s: SurfaceComplex) -> int:
    return sum(1 for sh in s.sheet_list() if sh.is_branch)


def _random_curve_points(rng):
    style = rng.choice(["convex", "convex", "eight", "crossing"])
    if style == "convex":
        k = rng.choice([3, 3, 4, 5])
        lat0 = rng.uniform(-0.35, 0.35)
        return [_sph(2 * math.pi * i / k + rng.uniform(-0.3, 0.3),
                     lat0 + rng.uniform(-0.35, 0.35)) for i in range(k)]
    if style == "eight":
        # two lobes through one pinch point
        lonp = rng.uniform(0, 2 * math.pi)
        p = _sph(lonp, rng.uniform(-0.15, 0.15))
        a = rng.uniform(0.55, 0.8)
        lobe1 = [_sph(lonp + dx, a + rng.uniform(-0.1, 0.1))
                 for dx in (-0.7, 0.7)]
        lobe2 = [_sph(lonp + dx, -a + rng.uniform(-0.1, 0.1))
                 for dx in (0.7, -0.7)]
        return [p, lobe1[0], lobe1[1], p, lobe2[0], lobe2[1]]
    # one transversal crossing
    a = rng.uniform(0.3, 0.55)
    lon = rng.uniform(0, 2 * math.pi)
    return [
        _sph(lon + 0.0, a + rng.uniform(-0.05, 0.05)),
        _sph(lon + 2.6, a + rng.uniform(-0.05, 0.05)),
        _sph(lon + 0.9, -a + rng.uniform(-0.05, 0.05)),
        _sph(lon + 3.6, -a + rng.uniform(-0.05, 0.05)),
    ]


def random_base(rng, q=3, max_segments=64, with_marker=False,
                min_clean_faces=0):
    """A random small polygonal curve plus q well-separated special points.

    ``min_clean_faces`` asks for at least that many faces without special
    tips, so cap-limited accretion has room to grow."""
    for _attempt in range(400):
        pts = _random_curve_points(rng)
        try:
            curve = CurveInput(tuple(pts), max_segments=max_segments)
            segs = curve.segments()
        except Exception:
            continue
        specials = []
        fails = 0
        lat_side = rng.choice([1, -1])
        while len(specials) < q and fails < 200:
            p = _sph(rng.uniform(0, 2 * math.pi), lat_side * rng.uniform(0.95, 1.4))
            ok = all(angle_between(p, q2) > 0.12 for q2 in specials)
            ok = ok and all(seg.param_of(p, tol=0.02) is None for seg in segs)
            ok = ok and all(angle_between(p, c) > 0.1 for c in pts)
            if ok:
                specials.append(p)
            else:
                fails += 1
        if len(specials) < q:
            continue
        markers = []
        if with_marker:
            for _try in range(80):
                p = _sph(rng.uniform(0, 2 * math.pi), rng.uniform(-0.3, 0.3))
                if all(seg.param_of(p, tol=0.05) is None for seg in segs) and \
                        all(angle_between(p, q2) > 0.12 for q2 in specials + pts):
                    markers.append(p)
                    break
            if not markers:
                continue
        try:
            bc = make_base(pts, specials, markers=markers)
        except Exception:
            continue
        if min_clean_faces:
            special_faces = set()
            for v in bc.specials:
                fan = bc.fans[v]
                if len(fan) == 1 and bc.kind(fan[0]) == SCAFFOLD:
                    special_faces.add(bc.face_of_dart(fan[0]))
            if len(bc.live_faces()) - len(special_faces) < min_clean_faces:
                continue
        return bc
    raise GenerationStuck("could not build a random base")


def branched_fan(bc: BaseComplex, face: int, marker: int, m: int) -> SurfaceComplex:
    """m copies of one face cross-sewn cyclically at a marker slit: a disk
    covering with one interior branch point of multiplicity m over the marker."""
    s = SurfaceComplex(bc, [face] * m, {})
    cyc = s.cycle_of(0)
    slit_out = next(p for p, d in enumerate(cyc) if bc.head(d) == marker)
    slit_in = next(p for p, d in enumerate(cyc) if bc.tail(d) == marker)
    for i in range(m):
        s.pair((i, slit_out), ((i + 1) % m, slit_in))
    _close_scaffold_sides(s, random.Random(0))
    require_valid(s, "branched fan")
    return s


def generate_disk_covering(seed, max_sheets=8, max_faces=32, q=3,
                           branch_budget=6, moves=None, base=None,
                           sew_prob=0.35, special_face_cap=None,
                           with_marker=False, fan_m=0, slits=0) -> SurfaceComplex:
    """Random disk covering by seeded accretion.

    Two always-safe moves keep the surface a connected disk with one
    boundary walk: glue a fresh face copy along a free side, or sew two
    boundary-adjacent free sides whose darts are mutually reverse.  Scaffold
    sides are closed at the end by successor sews around the tips.
    ``special_face_cap`` limits the copies over faces holding special tips
    (low interior covering numbers of the special set keep H large).
    """
    rng = random.Random(repr(seed))
    if base is not None:
        bc = base.copy()
    else:
        clean = 2 if special_face_cap == 0 else 0
        bc = random_base(rng, q=q, with_marker=with_marker, min_clean_faces=clean)
    special_faces = set()
    for v in bc.specials:
        fan = bc.fans[v]
        if len(fan) == 1 and bc.kind(fan[0]) == SCAFFOLD:
            special_faces.add(bc.face_of_dart(fan[0]))
    caps = {}
    for f in bc.live_faces():
        caps[f] = max_sheets
        if special_face_cap is not None and f in special_faces:
            caps[f] = special_face_cap
    start_candidates = [f for f in bc.live_faces() if caps[f] > 0]
    if not start_candidates:
        raise GenerationStuck("no admissible start face")
    s = None
    if fan_m >= 2:
        for v in bc.markers:
            f_m = bc.face_of_dart(bc.fans[v][0])
            if caps.get(f_m, 0) >= fan_m:
                s = branched_fan(bc, f_m, v, fan_m)
                break
        if s is None:
            raise GenerationStuck("no marker face can host the fan")
    else:
        s = SurfaceComplex(bc, [rng.choice(start_candidates)], {})
    if moves is None:
        moves = rng.randint(4, 26)
    for _ in range(moves):
        free = s.free_sides()
        if not free:
            break
        do_sew = rng.random() < sew_prob and branch_budget > 0
        if do_sew:
            walk_len = sum(len(w) for w in s.walks())
            rng.shuffle(free)
            done = False
            for side in free:
                if s.base.kind(s.dart_of(side)) != CURVE:
                    continue
                nxt = s.walk_successor(side)
                if nxt == side or walk_len <= 2:
                    continue
                if s.dart_of(nxt) == (s.dart_of(side) ^ 1):
                    s.pair(side, nxt)
                    s.invalidate()
                    done = True
                    break
            if done:
                if _count_branches(s) >= branch_budget:
                    branch_budget = 0
                continue
        # glue a fresh copy
        counts = {}
        for c in s.live_copy_ids():
            counts[s.copies[c]] = counts.get(s.copies[c], 0) + 1
        rng.shuffle(free)
        for side in free:
            f_new = s.base.face_of_dart(s.dart_of(side) ^ 1)
            if counts.get(f_new, 0) >= caps[f_new] or len(s.live_copy_ids()) >= max_faces:
                continue
            c_new = s.add_copy(f_new)
            pos = s.base.faces[f_new].cycle.index(s.dart_of(side) ^ 1)
            s.pair(side, (c_new, pos))
            s.invalidate()
            break
    _close_scaffold_sides(s, rng)
    require_valid(s, "generated disk covering")
    if s.topology_kind() != "disk":
        raise GenerationStuck("generator produced a non-disk")
    for _ in range(slits):
        s = _random_slit(s, rng) or s
    return s


def polygonal_family_membership(s: SurfaceComplex, length_cap, nbar_cap, segment_cap):
    """Membership report for the polygonal family with caps (L, M, N)."""
    import numpy as np

    from .geometry import GeodesicSegment
    from .surface import functionals, geometric_walk

    rep = functionals(s)
    steps = geometric_walk(s)
    poles = [GeodesicSegment(a, b).pole for a, b in steps]
    breaks = sum(
        1 for i in range(len(poles))
        if np.linalg.norm(poles[i] - poles[(i + 1) % len(poles)]) > 1e-7)
    segments = max(breaks, 1)
    report = {
        "boundary_length": rep.boundary_length,
        "max_n_bar": max(rep.n_bar.values()) if rep.n_bar else 0,
        "segments": segments,
        "length_ok": rep.boundary_length <= length_cap + 1e-9,
        "n_bar_ok": all(v <= nbar_cap for v in rep.n_bar.values()),
        "segments_ok": segments <= segment_cap,
    }
    report["member"] = report["length_ok"] and report["n_bar_ok"] and report["segments_ok"]
    return report


def _random_slit(s: SurfaceComplex, rng):
    """Cut one interior edge open from the boundary: plants a folded point."""
    from .surgery import SurfacePath, cut_to_boundary

    sheets, corner_sheet = s.sheets()
    cands = []
    for side in s.sides():
        if side not in s.pairing:
            continue
        if s.base.kind(s.dart_of(side)) != "curve":
            continue
        c, p = side
        tail_sheet = sheets[corner_sheet[(c, p)]]
        head_corner = (c, (p + 1) % len(s.cycle_of(c)))
        head_sheet = sheets[corner_sheet[head_corner]]
        if tail_sheet.interior or not head_sheet.interior:
            continue
        if head_sheet.special or head_sheet.is_branch:
            continue
        cands.append(side)
    if not cands:
        return None
    side = cands[rng.randrange(len(cands))]
    try:
        return cut_to_boundary(s, SurfacePath([side]))
    except Exception:
        return None


def generate_disk_covering_filtered(seed, require_h_nonneg=True, max_sum=None,
                                    max_degree=None, tries=300, **kw):
    """Draw seeded variants until the covering meets the filters.

    Variants cycle through the number of special points, the cap on copies
    over special faces, marker presence, and the sew rate, so the accepted
    population exercises every pipeline path."""
    rng = random.Random(repr(("filter", seed)))
    for k in range(tries):
        params = dict(kw)
        if "q" not in kw:
            params["q"] = rng.choice([3, 3, 4, 5])
        if "special_face_cap" not in kw:
            params["special_face_cap"] = rng.choice([0, 0, 1, 1, 2])
        if "fan_m" not in kw:
            params["fan_m"] = rng.choice([0, 0, 2, 2, 3])
        if "with_marker" not in kw:
            params["with_marker"] = params["fan_m"] >= 2 or rng.random() < 0.4
        if "sew_prob" not in kw:
            params["sew_prob"] = rng.choice([0.2, 0.35, 0.5])
        if "slits" not in kw:
            params["slits"] = rng.choice([0, 0, 0, 1, 2])
        try:
            s = generate_disk_covering((seed, k), **params)
        except GenerationStuck:
            continue
        rep = functionals(s)
        if require_h_nonneg and (rep.ratio is None or rep.ratio < 0):
            continue
        if max_sum is not None and rep.covering_sum > max_sum:
            continue
        if max_degree is not None and max(rep.n_component.values()) > max_degree:
            continue
        return s
    raise GenerationStuck("no admissible covering after %d tries" % tries)


def generate_closed_cyclic_cover(d, q=3, branch_special=True) -> SurfaceComplex:
    """Degree-d cyclic cover of the sphere branched over two curve vertices.

    The branch vertices carry a single sheet of multiplicity d each
    (branch index d-1); the remaining specials hang on scaffold tips.
    """
    if d < 1:
        raise ValueError("degree must be >= 1")
    a = _sph(0.0, 0.35)
    b = _sph(2.0, -0.2)
    c = _sph(4.1, 0.1)
    if branch_special:
        extra = [_sph(1.0, 1.1)] * 0
        specials = [a, b] + [_sph(1.0 + k, 1.1) for k in range(q - 2)]
    else:
        specials = [_sph(1.0 + 0.8 * k, 1.1) for k in range(q)]
    bc = make_base([a, b, c], specials)
    va = bc.vertex_at(a)
    vb = bc.vertex_at(b)
    faces = bc.live_faces()
    if len(faces) != 2:
        raise GenerationStuck("triangle arrangement should have two faces")
    f_in, f_out = faces
    copies = []
    for i in range(d):
        copies.append(f_in)
    for i in range(d):
        copies.append(f_out)
    s = SurfaceComplex(bc, copies, {})

    def edge_between(u, v):
        for e in bc.live_edges():
            if bc.edges[e].kind == CURVE and {bc.edges[e].a, bc.edges[e].b} == {u, v}:
                return e
        raise GenerationStuck("edge not found")

    vc = [v for v in (bc.vertex_at(a), bc.vertex_at(b), bc.vertex_at(c))]
    e_ab = edge_between(vc[0], vc[1])
    e_bc = edge_between(vc[1], vc[2])
    e_ca = edge_between(vc[2], vc[0])
    cyc_in = bc.faces[f_in].cycle
    cyc_out = bc.faces[f_out].cycle

    def pos_over(face_cycle, e):
        for p, dd in enumerate(face_cycle):
            if (dd >> 1) == e:
                return p
        raise GenerationStuck("face cycle misses edge")

    for e, shift in ((e_ab, 0), (e_bc, 1), (e_ca, 1)):
        p_in = pos_over(cyc_in, e)
        p_out = pos_over(cyc_out, e)
        for i in range(d):
            s.pair((i, p_in), (d + (i + shift) % d, p_out))
    # close scaffold slits with identity pairings (tips stay unbranched)
    for c in range(len(copies)):
        cyc = s.cycle_of(c)
        for p, dd in enumerate(cyc):
            if s.base.kind(dd) == SCAFFOLD and (c, p) not in s.pairing:
                prev = cyc.index(dd ^ 1)
                s.pair((c, p), (c, prev))
    s.invalidate()
    require_valid(s, "closed cyclic cover")
    if s.topology_kind() != "closed":
        raise GenerationStuck("cyclic cover is not closed")
    return s
