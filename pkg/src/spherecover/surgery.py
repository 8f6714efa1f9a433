"""Surgery calculus on covering surfaces: lifts, cut/sew, pairing rewires.

Every public operation copies its input surface and returns fresh values;
the homeomorphisms of the underlying lemmas are realized as relabelings of
the side pairing.  Bookkeeping deltas are asserted against the lemma
clauses by the callers (pipeline and tests).
"""

from __future__ import annotations

from dataclasses import dataclass

from .arrangement import CURVE, ArrangementError
from .geometry import angle_between
from .surface import (
    ANNULUS,
    CLOSED,
    DISK,
    InvalidSurface,
    SurfaceComplex,
    SurfaceError,
    require_valid,
)

FROM_INTERIOR = "from_interior"
FROM_BOUNDARY_LEFT = "from_boundary_left"
ALONG_BOUNDARY = "along_boundary"

STOP_FULL = "full"
STOP_HIT_BOUNDARY = "hit_boundary"
STOP_HIT_SPECIAL = "hit_special"


class PreconditionViolated(SurfaceError):
    pass


class NotSimple(SurfaceError):
    pass


class TouchesBranch(SurfaceError):
    pass


class ImageMeetsSpecial(SurfaceError):
    pass


class ImagesMismatch(SurfaceError):
    pass


class NotAdjacent(SurfaceError):
    pass


@dataclass
class Lift:
    """One lift of a base edge path: per step either an interior surface edge
    ('interior', P side over the forward dart, Q side over the reverse) or a
    free side run step ('boundary', side)."""

    steps: list
    sheet_ids: list  # sheets visited, one more than steps

    @property
    def end_sheet(self):
        return self.sheet_ids[-1]

    def p_side(self, t):
        kind, *rest = self.steps[t]
        if kind == "interior":
            return rest[0]
        return rest[0]

    def q_side(self, t):
        kind, *rest = self.steps[t]
        if kind != "interior":
            raise SurfaceError("boundary lift step has no interior sides")
        return rest[1]

    @property
    def is_boundary_run(self):
        return self.steps and self.steps[0][0] == "boundary"


@dataclass
class LiftResult:
    lifts: list
    stop: str
    darts: tuple  # the (possibly truncated) base path actually lifted
    start_sheet: int


@dataclass
class SurfacePath:
    """Simple edge path in the surface: interior edges given by their P sides."""

    sides: list

    def __post_init__(self):
        if not self.sides:
            raise NotSimple("empty path")


def _germ_crossings(s: SurfaceComplex, sheet, dart0):
    """Out-sides over dart0 met while walking the sheet's corners in cw order."""
    out = []
    for corner in sheet.corners:
        side = corner
        if s.dart_of(side) == dart0 and side in s.pairing:
            out.append(side)
    return out


def lift_path(s: SurfaceComplex, darts, start_sheet: int, mode: str) -> LiftResult:
    """All lifts of a base edge path from one vertex sheet (the lifting lemmas).

    The path is extended step by step on all lifts simultaneously and
    truncated as soon as any lift (other than the boundary lift in
    ALONG_BOUNDARY mode) reaches a boundary sheet.
    """
    sheets, corner_sheet = s.sheets()
    X = sheets[start_sheet]
    darts = list(darts)
    if not darts:
        raise PreconditionViolated("empty base path")
    if s.base.tail(darts[0]) != X.vertex:
        raise PreconditionViolated("path does not start under the start sheet")
    for t, d in enumerate(darts[:-1]):
        if s.base.head(d) != s.base.tail(darts[t + 1]):
            raise PreconditionViolated("base path is not an edge path")

    d0 = darts[0]
    crossings = _germ_crossings(s, X, d0)
    lifts = []
    if mode == FROM_INTERIOR:
        if not X.interior:
            raise PreconditionViolated("FROM_INTERIOR needs an interior start sheet")
        expected = X.multiplicity
    elif mode == FROM_BOUNDARY_LEFT:
        if X.interior or X.folded:
            raise PreconditionViolated("FROM_BOUNDARY_LEFT needs a non-folded boundary sheet")
        expected = X.multiplicity
        if len(crossings) != expected:
            raise PreconditionViolated(
                "first dart is not strictly inside the left sector (%d germs, v_f=%d)"
                % (len(crossings), expected))
    elif mode == ALONG_BOUNDARY:
        if X.interior or X.folded:
            raise PreconditionViolated("ALONG_BOUNDARY needs a non-folded boundary sheet")
        out_side = X.out_side
        if s.dart_of(out_side) != d0:
            raise PreconditionViolated("boundary does not continue along the path")
        expected = X.multiplicity
        lifts.append(Lift(steps=[("boundary", out_side)], sheet_ids=[start_sheet, None]))
    else:
        raise SurfaceError("unknown mode %r" % mode)
    if mode != ALONG_BOUNDARY and len(crossings) != expected:
        raise PreconditionViolated(
            "expected %d germs of the first dart, found %d" % (expected, len(crossings)))

    for side in crossings:
        lifts.append(Lift(steps=[("interior", side, s.pairing[side])],
                          sheet_ids=[start_sheet, None]))
    if len(lifts) != expected:
        raise PreconditionViolated("lift count %d != multiplicity %d" % (len(lifts), expected))

    def end_sheet_of(lift):
        kind, *rest = lift.steps[-1]
        if kind == "interior":
            c2, p2 = rest[1]
            corner = (c2, p2)
        else:
            c, p = rest[0]
            corner = (c, (p + 1) % len(s.cycle_of(c)))
        return corner_sheet[corner]

    t = 0
    while True:
        for j, lift in enumerate(lifts):
            lift.sheet_ids[-1] = end_sheet_of(lift)
        t += 1
        stop = None
        hit = [j for j, lift in enumerate(lifts)
               if (not sheets[lift.end_sheet].interior)
               and not (mode == ALONG_BOUNDARY and j == 0)]
        if hit:
            stop = STOP_HIT_BOUNDARY
        elif t == len(darts):
            end_v = s.base.head(darts[-1])
            stop = STOP_HIT_SPECIAL if end_v in s.base.specials else STOP_FULL
        if stop:
            return LiftResult(lifts=lifts, stop=stop, darts=tuple(darts[:t]),
                              start_sheet=start_sheet)
        dn = darts[t]
        for j, lift in enumerate(lifts):
            sh = sheets[lift.end_sheet]
            if mode == ALONG_BOUNDARY and j == 0:
                nxt = s.walk_successor(lift.steps[-1][1])
                if s.dart_of(nxt) != dn:
                    raise PreconditionViolated("boundary deviates from the base path")
                lift.steps.append(("boundary", nxt))
                lift.sheet_ids.append(None)
                continue
            if sh.multiplicity != 1:
                raise PreconditionViolated(
                    "lift passes through a branch sheet over vertex %d" % sh.vertex)
            cont = _germ_crossings(s, sh, dn)
            if len(cont) != 1:
                raise PreconditionViolated(
                    "no unique continuation over dart %d at a regular sheet" % dn)
            side = cont[0]
            lift.steps.append(("interior", side, s.pairing[side]))
            lift.sheet_ids.append(None)


# -- elementary cut and sew ----------------------------------------------------


def _path_side_pairs(s, path: SurfacePath):
    pairs = []
    for side in path.sides:
        if side not in s.pairing:
            raise NotSimple("path side %r is not an interior edge" % (side,))
        pairs.append((side, s.pairing[side]))
    return pairs


def _check_path(s, path, want_start_boundary):
    sheets, corner_sheet = s.sheets()
    pairs = _path_side_pairs(s, path)
    ids = []
    c, p = pairs[0][0]
    ids.append(corner_sheet[(c, p)])
    for (side, partner) in pairs:
        c2, p2 = partner
        ids.append(corner_sheet[(c2, p2)])
    if len(set(ids)) != len(ids):
        raise NotSimple("path revisits a vertex sheet")
    base_vs = [sheets[i].vertex for i in ids]
    if len(set(base_vs)) != len(base_vs):
        raise NotSimple("path image revisits a base vertex")
    for t, (side, partner) in enumerate(pairs[:-1]):
        nxt = pairs[t + 1][0]
        if s.base.head(s.dart_of(side)) != s.base.tail(s.dart_of(nxt)):
            raise NotSimple("path is not an edge path in the base")
    start, interior, end = sheets[ids[0]], ids[1:-1], sheets[ids[-1]]
    if want_start_boundary and start.interior:
        raise PreconditionViolated("path must start on the boundary")
    if not want_start_boundary and not start.interior:
        raise PreconditionViolated("path must start in the interior")
    for i in interior:
        sh = sheets[i]
        if not sh.interior:
            raise PreconditionViolated("path interior touches the boundary")
        if sh.is_branch:
            raise TouchesBranch("path interior touches a branch point")
        if sh.special:
            raise ImageMeetsSpecial("path interior image meets the special set")
    if not end.interior:
        raise PreconditionViolated("path must end in the interior")
    return pairs, ids


def cut_to_boundary(s: SurfaceComplex, path: SurfacePath) -> SurfaceComplex:
    """Cut a disk along a simple arc from a boundary point into the interior.

    The pairings along the path are removed; the boundary gains the doubled
    arc, the area is unchanged, and an interior preimage over the far
    endpoint moves to the boundary.
    """
    if s.topology_kind() != DISK:
        raise PreconditionViolated("cut_to_boundary needs a disk")
    out = s.copy()
    pairs, _ = _check_path(out, path, want_start_boundary=True)
    for side, _partner in pairs:
        out.unpair(side)
    out.invalidate()
    require_valid(out, "cut_to_boundary", strict_scaffold=False)
    if out.topology_kind() != DISK:
        raise InvalidSurface("cut did not preserve the disk type")
    return out


def cut_interior(s: SurfaceComplex, path: SurfacePath) -> SurfaceComplex:
    """Cut a disk along a simple interior arc, producing an annulus."""
    if s.topology_kind() != DISK:
        raise PreconditionViolated("cut_interior needs a disk")
    out = s.copy()
    pairs, _ = _check_path(out, path, want_start_boundary=False)
    for side, _partner in pairs:
        out.unpair(side)
    out.invalidate()
    require_valid(out, "cut_interior", strict_scaffold=False)
    if out.topology_kind() != ANNULUS:
        raise InvalidSurface("interior cut did not produce an annulus")
    return out


def _check_runs_match(s, run_a, run_b):
    if len(run_a) != len(run_b) or not run_a:
        raise ImagesMismatch("runs differ in length")
    for i, sa in enumerate(run_a):
        sb = run_b[len(run_b) - 1 - i]
        if s.dart_of(sa) != (s.dart_of(sb) ^ 1):
            raise ImagesMismatch("run images do not match reversed at %d" % i)
    for side in list(run_a) + list(run_b):
        if side in s.pairing:
            raise ImagesMismatch("side %r is not free" % (side,))


def sew(s: SurfaceComplex, run_a, run_b):
    """Sew two adjacent boundary runs with mirrored images (Lemma glue).

    Returns (surface, 'A'|'B'): case B closes the surface when the two runs
    exhaust the whole boundary.
    """
    out = s.copy()
    _check_runs_match(out, run_a, run_b)
    if out.walk_successor(run_a[-1]) != run_b[0]:
        raise NotAdjacent("runs are not adjacent at their junction")
    walk_len = len(out.boundary_walk())
    case = "B" if len(run_a) + len(run_b) == walk_len else "A"
    for i, sa in enumerate(run_a):
        out.pair(sa, run_b[len(run_b) - 1 - i])
    out.invalidate()
    require_valid(out, "sew", strict_scaffold=False)
    kind = out.topology_kind()
    if case == "A" and kind != DISK:
        raise InvalidSurface("sew case A must return a disk")
    if case == "B" and kind != CLOSED:
        raise InvalidSurface("sew case B must return a closed surface")
    return out, case


def sew_annulus(s: SurfaceComplex, run_a, run_b) -> SurfaceComplex:
    """Sew the inner boundary of an annulus along its two matched halves."""
    if s.topology_kind() != ANNULUS:
        raise PreconditionViolated("sew_annulus needs an annulus")
    out = s.copy()
    _check_runs_match(out, run_a, run_b)
    inner = None
    for w in out.walks():
        if set(run_a) <= set(w.sides):
            inner = w
            break
    if inner is None or not set(run_b) <= set(inner.sides):
        raise ImagesMismatch("runs do not lie on one boundary walk")
    if len(run_a) + len(run_b) != len(inner):
        raise ImagesMismatch("runs do not partition the inner boundary")
    for i, sa in enumerate(run_a):
        out.pair(sa, run_b[len(run_b) - 1 - i])
    out.invalidate()
    require_valid(out, "sew_annulus", strict_scaffold=False)
    if out.topology_kind() != DISK:
        raise InvalidSurface("sew_annulus must return a disk")
    return out


# -- star rewiring (branch transport) ---------------------------------------


def star_rewire(s: SurfaceComplex, lifts, start_sheet: int,
                boundary_run=None) -> SurfaceComplex:
    """Re-pair the lift side runs sector-by-sector around the start sheet.

    Cyclic form (no ``boundary_run``): all d lifts are interior; each sector
    between rotationally consecutive lifts is zipped shut, which transports
    the start branching to the far end of the lifts.  Chain form: the free
    run ``boundary_run`` plays the role of the first lift; the outermost
    lift's forward run replaces it on the boundary (same image word).
    """
    out = s.copy()
    sheets, _ = out.sheets()
    X = sheets[start_sheet]
    T = len(lifts[0].steps)
    for lf in lifts:
        if len(lf.steps) != T or lf.is_boundary_run:
            raise PreconditionViolated("star_rewire needs equal-length interior lifts")

    p0_sides = {lf.steps[0][1]: lf for lf in lifts}
    order = []
    for corner in X.corners:
        if corner in p0_sides:
            order.append(p0_sides[corner])
    if len(order) != len(lifts):
        raise PreconditionViolated("lifts do not all start at the given sheet")

    for lf in lifts:
        for t in range(T):
            side = lf.steps[t][1]
            if side in out.pairing:
                out.unpair(side)
    if boundary_run is None:
        ring = order
        for k, A in enumerate(ring):
            B = ring[(k + 1) % len(ring)]
            for t in range(T):
                out.pair(A.steps[t][2], B.steps[t][1])
    else:
        if len(boundary_run) != T:
            raise PreconditionViolated("boundary run length mismatch")
        for k in range(len(order) - 1):
            A, B = order[k], order[k + 1]
            for t in range(T):
                out.pair(A.steps[t][2], B.steps[t][1])
        last = order[-1]
        for t in range(T):
            out.pair(last.steps[t][2], boundary_run[t])
        # order[0]'s forward run stays free: the new boundary run.
    out.invalidate()
    require_valid(out, "star_rewire")
    return out


def _split_components(s: SurfaceComplex):
    """Split a (possibly disconnected) surface into connected pieces."""
    live = s.live_copy_ids()
    comp = {}
    for c in live:
        if c in comp:
            continue
        group = [c]
        comp[c] = c
        stack = [c]
        while stack:
            x = stack.pop()
            for p in range(len(s.cycle_of(x))):
                t = s.pairing.get((x, p))
                if t is not None and t[0] not in comp:
                    comp[t[0]] = c
                    group.append(t[0])
                    stack.append(t[0])
    roots = sorted(set(comp.values()))
    pieces = []
    for r in roots:
        members = sorted(c for c in live if comp[c] == r)
        remap = {c: i for i, c in enumerate(members)}
        copies = [s.copies[c] for c in members]
        pairing = {}
        for c in members:
            for p in range(len(s.cycle_of(c))):
                t = s.pairing.get((c, p))
                if t is not None:
                    pairing[(remap[c], p)] = (remap[t[0]], t[1])
        pieces.append(SurfaceComplex(s.base.copy(), copies, pairing))
    return pieces


def split_on_lifts(s: SurfaceComplex, lift_a: Lift, lift_b: Lift):
    """Cut along two lifts with coincident or boundary endpoints and cross-sew.

    The surface falls apart into two pieces (closed + disk, or disk + disk);
    within each piece the freed runs are re-paired dart against reversed dart.
    """
    out = s.copy()
    T = len(lift_a.steps)
    if len(lift_b.steps) != T:
        raise PreconditionViolated("lift lengths differ")
    freed = []
    for lf in (lift_a, lift_b):
        for t in range(T):
            side = lf.steps[t][1]
            out.unpair(side)
            freed.append((t, side, lf.steps[t][2]))
    # components of the cut-open surface
    raw_pieces = _split_components_raw(out)
    if len(raw_pieces) != 2:
        raise InvalidSurface("cut along the two lifts made %d pieces" % len(raw_pieces))
    for piece_copies in raw_pieces:
        for t in range(T):
            here = [side for (tt, sidep, sideq) in freed for side in (sidep, sideq)
                    if tt == t and side[0] in piece_copies and side not in out.pairing]
            if len(here) != 2:
                raise InvalidSurface("piece holds %d freed sides at step %d" % (len(here), t))
            a, b = here
            if out.dart_of(a) == out.dart_of(b):
                raise InvalidSurface("freed sides in one piece have equal darts")
            out.pair(a, b)
    out.invalidate()
    pieces = _split_components(out)
    if len(pieces) != 2:
        raise InvalidSurface("cross-sew did not split the surface")
    for piece in pieces:
        require_valid(piece, "split_on_lifts piece")
    return pieces


def _split_components_raw(s):
    live = s.live_copy_ids()
    seen = {}
    groups = []
    for c in live:
        if c in seen:
            continue
        grp = {c}
        seen[c] = True
        stack = [c]
        while stack:
            x = stack.pop()
            for p in range(len(s.cycle_of(x))):
                t = s.pairing.get((x, p))
                if t is not None and t[0] not in seen:
                    seen[t[0]] = True
                    grp.add(t[0])
                    stack.append(t[0])
        groups.append(grp)
    return groups


def reroute_boundary_split(s: SurfaceComplex, boundary_run, lift: Lift):
    """Sew a boundary run onto an interior lift with the same image word.

    The lift's reverse run takes the pairing, the forward run becomes the new
    boundary (same dart word); the surface splits into two pieces.
    """
    out = s.copy()
    T = len(boundary_run)
    if len(lift.steps) != T:
        raise PreconditionViolated("run and lift lengths differ")
    for t in range(T):
        out.unpair(lift.steps[t][1])
    for t in range(T):
        side = boundary_run[t]
        q = lift.steps[t][2]
        out.pair(side, q)
    out.invalidate()
    pieces = _split_components(out)
    if len(pieces) != 2:
        raise InvalidSurface("boundary reroute did not split the surface (%d pieces)"
                             % len(pieces))
    for piece in pieces:
        require_valid(piece, "reroute piece")
    return pieces


# -- base refinement at the surface level -------------------------------------


def _remap_pairing(s, position_maps):
    """Rewrite pairing keys after face cycles changed.

    position_maps: copy -> (dict old_pos -> list of new (copy,pos) sides in
    order).  Sides over a split dart expand to several; expanded partners are
    matched by edge id."""
    new_pairing = {}
    for side, partner in s.pairing.items():
        c, p = side
        imgs = position_maps[c][p] if c in position_maps else [side]
        c2, p2 = partner
        imgs2 = position_maps[c2][p2] if c2 in position_maps else [partner]
        if len(imgs) != len(imgs2):
            raise InvalidSurface("pairing expansion mismatch")
        for a, b in zip(imgs, reversed(imgs2)):
            new_pairing[a] = b
    s.pairing = new_pairing
    s.invalidate()


def split_edge_surface(s: SurfaceComplex, e: int, point):
    """Split base edge e at a point; all sides over it split compatibly."""
    out = s.copy()
    old_cycles = {c: list(out.cycle_of(c)) for c in out.live_copy_ids()}
    x, e1, e2, rep = out.base.split_edge(e, point)
    maps = {}
    for c, cyc in old_cycles.items():
        m = {}
        newpos = 0
        for p, d in enumerate(cyc):
            n = len(rep.get(d, [d]))
            m[p] = [(c, newpos + i) for i in range(n)]
            newpos += n
        maps[c] = m
    _remap_pairing(out, maps)
    require_valid(out, "split_edge_surface")
    return out, x, (e1, e2)


def insert_chord_surface(s: SurfaceComplex, face: int, pos_a: int, pos_b: int):
    """Insert a scaffold chord into a face; every copy over it splits in two.

    Returns (surface, chord edge, (face a, face b), side map for old sides of
    the affected copies)."""
    out = s.copy()
    affected = [c for c in out.live_copy_ids() if out.copies[c] == face]
    old_cycle = list(out.base.faces[face].cycle)
    e, fa, fb = out.base.insert_chord(face, pos_a, pos_b)
    cyc_a = out.base.faces[fa].cycle
    cyc_b = out.base.faces[fb].cycle
    maps = {}
    chord_pairs = []
    for c in affected:
        ca = out.add_copy(fa)
        cb = out.add_copy(fb)
        m = {}
        for p, d in enumerate(old_cycle):
            if d in cyc_a:
                m[p] = [(ca, cyc_a.index(d))]
            else:
                m[p] = [(cb, cyc_b.index(d))]
        maps[c] = m
        out.copies[c] = None
        chord_pairs.append(((ca, 0), (cb, 0)))  # both chord darts sit at position 0
    _remap_pairing(out, maps)
    for a, b in chord_pairs:
        out.pair(a, b)
    require_valid(out, "insert_chord_surface")
    side_map = {(c, p): maps[c][p][0] for c in maps for p in maps[c]}
    return out, e, (fa, fb), side_map


def delete_edge_surface(s: SurfaceComplex, e: int) -> SurfaceComplex:
    """Delete a base edge all of whose sides are paired; merge faces and copies."""
    out = s.copy()
    d, dr = 2 * e, 2 * e + 1
    fa = out.base.face_of_dart(d)
    fb = out.base.face_of_dart(dr)
    if fa == fb:
        raise ArrangementError("edge %d does not separate two faces" % e)
    cyc_a = list(out.base.faces[fa].cycle)
    cyc_b = list(out.base.faces[fb].cycle)
    ia, ib = cyc_a.index(d), cyc_b.index(dr)
    copies_a = [c for c in out.live_copy_ids() if out.copies[c] == fa]
    copies_b = [c for c in out.live_copy_ids() if out.copies[c] == fb]
    mates = {}
    for c in copies_a:
        side = (c, ia)
        if side not in out.pairing:
            raise PreconditionViolated("free side over edge %d; cannot delete" % e)
        c2, p2 = out.pairing[side]
        if out.copies[c2] != fb or p2 != ib:
            raise InvalidSurface("pairing over edge %d is not face-to-face" % e)
        mates[c] = c2
    if set(mates.values()) != set(copies_b):
        raise InvalidSurface("pairing over edge %d is not a bijection" % e)
    f = out.base.delete_edge_merge(e)
    merged_cycle = out.base.faces[f].cycle
    maps = {}
    for c in copies_a:
        z = out.add_copy(f)
        m_a, m_b = {}, {}
        for p, dd in enumerate(cyc_a):
            if dd != d:
                m_a[p] = [(z, merged_cycle.index(dd))]
            else:
                m_a[p] = []
        for p, dd in enumerate(cyc_b):
            if dd != dr:
                m_b[p] = [(z, merged_cycle.index(dd))]
            else:
                m_b[p] = []
        maps[c] = m_a
        maps[mates[c]] = m_b
        out.copies[c] = None
        out.copies[mates[c]] = None
    # drop the pairings over e before remapping (they expand to nothing)
    for c in copies_a:
        out.pairing.pop((c, ia))
        out.pairing.pop((mates[c], ib))
    _remap_pairing(out, maps)
    require_valid(out, "delete_edge_surface")
    return out


def cleanup_unused_curve_edges(s: SurfaceComplex) -> SurfaceComplex:
    """Drop CURVE edges no longer traversed by the boundary (two-face ones)."""
    out = s
    while True:
        mult = out.multiplicities()
        target = None
        for e in out.base.live_edges():
            if out.base.edges[e].kind != CURVE or sum(mult[e]) != 0:
                continue
            if out.base.face_of_dart(2 * e) != out.base.face_of_dart(2 * e + 1):
                target = e
                break
        if target is None:
            return out
        out = delete_edge_surface(out, target)


# -- slit transport and tip absorption ----------------------------------------


def _slit_permutation(s, face, pos_out, pos_in):
    """rho(c) for the slit pairing (c, pos_out) <-> (rho(c), pos_in)."""
    rho = {}
    for c in s.live_copy_ids():
        if s.copies[c] != face:
            continue
        c2, p2 = s.pairing[(c, pos_out)]
        if s.copies[c2] != face or p2 != pos_in:
            raise InvalidSurface("slit pairing leaves the face")
        rho[c] = c2
    return rho


def _slide_slit_step(s: SurfaceComplex, e_slit: int) -> SurfaceComplex:
    """Move one slit (dangling scaffold edge) one dart forward in its face cycle.

    Cycle [..., s_out, s_in, eps, ...] becomes [..., eps, s_out, s_in, ...];
    the pairing of the swept eps-occurrence is recomposed with the slit
    monodromy rho (re-cutting the branch cut past that edge germ).  Every
    swept side must be paired.
    """
    out = s.copy()
    bc = out.base
    s_out = 2 * e_slit if len(bc.fans[bc.edges[e_slit].b]) == 1 else 2 * e_slit + 1
    s_in = s_out ^ 1
    face = bc.face_of_dart(s_out)
    cyc = list(bc.faces[face].cycle)
    n = len(cyc)
    k = cyc.index(s_out)
    if cyc[(k + 1) % n] != s_in:
        raise InvalidSurface("slit darts are not adjacent in the face cycle")
    pos_eps = (k + 2) % n
    eps = cyc[pos_eps]
    rho = _slit_permutation(out, face, k, (k + 1) % n)

    affected = [c for c in out.live_copy_ids() if out.copies[c] == face]
    old_partner = {c: out.pairing.get((c, pos_eps)) for c in affected}
    if any(v is None for v in old_partner.values()):
        raise PreconditionViolated("slit slide would cross a free side")

    # base update: splice the cycle, move the attachment vertex of the slit
    y = bc.tail(s_out)
    w = bc.head(eps)
    rest = [cyc[(k + 3 + i) % n] for i in range(n - 3)]
    new_cyc = [eps, s_out, s_in] + rest
    bc.faces[face].cycle = new_cyc
    bc.fans[y].remove(s_out)
    bc.edges[e_slit].a = w
    tip = bc.edges[e_slit].b
    bc.edges[e_slit].length = angle_between(bc.vertices[w], bc.vertices[tip])
    nxt = rest[0]
    bc.fans[w].insert(bc.fans[w].index(nxt) + 1, s_out)
    bc._invalidate()

    # surface update: position remap plus monodromy recomposition over eps
    old_to_new = {p: new_cyc.index(cyc[p]) for p in range(n)}
    maps = {c: {p: [(c, old_to_new[p])] for p in range(n)} for c in affected}
    dangling = {}
    for c in affected:
        out.pairing.pop((c, pos_eps))
    for c in affected:
        mate = old_partner[c]
        if mate in out.pairing:
            out.pairing.pop(mate)
        dangling[c] = mate
    _remap_pairing(out, maps)
    new_pos_eps = old_to_new[pos_eps]
    for c in affected:
        mate = dangling[rho[c]]
        if mate[0] in affected and mate[1] in maps[mate[0]]:
            mate = maps[mate[0]][mate[1]][0]
        out.pair((c, new_pos_eps), mate)
    out.invalidate()
    require_valid(out, "slit slide")
    return out


def absorb_tip_into_vertex(s: SurfaceComplex, tip: int, target: int) -> SurfaceComplex:
    """Merge a special scaffold tip into an on-curve vertex at the same point.

    Slides the tip's slit around its face until it sits at the target's
    corner, then drops the slit, recomposing the next dart occurrence's
    pairing with the slit monodromy; the tip's interior sheets become
    interior sheets over the target with the same multiplicities.
    """
    out = s.copy()
    bc = out.base
    if len(bc.fans[tip]) != 1:
        raise PreconditionViolated("vertex %d is not a scaffold tip" % tip)
    d_in_tip = bc.fans[tip][0]  # tip -> attachment
    e_slit = d_in_tip >> 1
    face = bc.face_of_dart(d_in_tip)
    guard = 0
    while True:
        cyc = bc.faces[face].cycle
        k = cyc.index(d_in_tip ^ 1)  # position of s_out
        nxt = cyc[(k + 2) % len(cyc)]
        if bc.tail(nxt) == target:
            break
        out = _slide_slit_step(out, e_slit)
        bc = out.base
        guard += 1
        if guard > 4 * len(cyc) + 8:
            raise InvalidSurface("slit slide did not reach the target corner")
    # now cycle reads [..., s_out, s_in, nxt ...] with tail(nxt) == target
    cyc = list(bc.faces[face].cycle)
    k = cyc.index(d_in_tip ^ 1)
    n = len(cyc)
    pos_out, pos_in, pos_nxt = k, (k + 1) % n, (k + 2) % n
    rho = _slit_permutation(out, face, pos_out, pos_in)
    affected = [c for c in out.live_copy_ids() if out.copies[c] == face]
    old_partner = {c: out.pairing.get((c, pos_nxt)) for c in affected}
    if any(v is None for v in old_partner.values()):
        raise PreconditionViolated("tip absorption would cross a free side")

    # base: drop the slit edge and the tip
    new_cyc = [d for d in cyc if (d >> 1) != e_slit]
    bc.faces[face].cycle = new_cyc
    y = bc.edges[e_slit].a
    bc.fans[y].remove(d_in_tip ^ 1)
    bc.fans[tip] = []
    label = bc.specials.pop(tip, None)
    if tip in bc.markers:
        bc.markers.discard(tip)
    bc.vertices[tip] = None
    bc.edges[e_slit] = None
    if label is not None:
        bc.specials[target] = label
    bc._invalidate()

    maps = {}
    for c in affected:
        m = {}
        for p, d in enumerate(cyc):
            m[p] = [] if (d >> 1) == e_slit else [(c, new_cyc.index(d))]
        maps[c] = m
    for c in affected:
        out.pairing.pop((c, pos_out))
        out.pairing.pop((c, pos_nxt))
    dangling = {}
    for c in affected:
        mate = old_partner[c]
        if mate in out.pairing:
            out.pairing.pop(mate)
        dangling[c] = mate
    _remap_pairing(out, maps)
    new_pos_nxt = new_cyc.index(cyc[pos_nxt])
    for c in affected:
        mate = dangling[rho[c]]
        if mate[0] in affected:
            mate = (mate[0], maps[mate[0]][mate[1]][0][1])
        out.pair((c, new_pos_nxt), mate)
    out.invalidate()
    require_valid(out, "absorb_tip")
    return out


# -- canonical form / isomorphism ---------------------------------------------


def canonical_form(s: SurfaceComplex):
    """Canonical signature of the labeled combinatorial map (projection kept)."""
    live = s.live_copy_ids()
    best = None
    min_face = min(s.copies[c] for c in live)
    for root in [c for c in live if s.copies[c] == min_face]:
        order = {root: 0}
        queue = [root]
        sig = []
        while queue:
            c = queue.pop(0)
            row = [s.copies[c]]
            for p in range(len(s.cycle_of(c))):
                t = s.pairing.get((c, p))
                if t is None:
                    row.append((-1, -1))
                else:
                    if t[0] not in order:
                        order[t[0]] = len(order)
                        queue.append(t[0])
                    row.append((order[t[0]], t[1]))
            sig.append(tuple(row))
        cand = tuple(sig)
        if best is None or cand < best:
            best = cand
    return best


def isomorphic(s1: SurfaceComplex, s2: SurfaceComplex) -> bool:
    """Combinatorial isomorphism over the same base (projection-preserving)."""
    if sorted(s1.copies[c] for c in s1.live_copy_ids()) != sorted(
            s2.copies[c] for c in s2.live_copy_ids()):
        return False
    return canonical_form(s1) == canonical_form(s2)
