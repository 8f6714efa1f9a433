"""Normalization pipeline: remove all branch values outside the special set.

The driver repeats four kinds of certified improvement steps on a disk
covering until every branch value is special and no non-special folded
point remains:

* sew away maximal non-special fold pairs,
* transport interior non-special branch points along lifted paths
  (splitting off closed surfaces or secondary disks when lifts collide),
* slide boundary branch points along the boundary into special junctions,
* when the boundary misses the special set entirely, either sink the
  branching into a special point visible in a left component, or rotate
  the special set onto the boundary first.

Each step is checked against the exact bookkeeping of its lemma, and every
surface along the way is strictly "better than" its predecessor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arrangement import CURVE, SCAFFOLD
from .geometry import (
    NoContact,
    Rotation,
    angle_between,
    first_contact_rotation,
    unit,
)
from .surface import (
    CLOSED,
    DISK,
    FunctionalReport,
    SurfaceComplex,
    SurfaceError,
    closed_subword_check,
    functionals,
    is_better_than,
    require_valid,
)
from .surgery import (
    ALONG_BOUNDARY,
    FROM_BOUNDARY_LEFT,
    FROM_INTERIOR,
    PreconditionViolated,
    absorb_tip_into_vertex,
    cleanup_unused_curve_edges,
    delete_edge_surface,
    insert_chord_surface,
    lift_path,
    reroute_boundary_split,
    sew,
    split_edge_surface,
    split_on_lifts,
    star_rewire,
)


class NegativeH(SurfaceError):
    pass


class NoSuchPath(SurfaceError):
    pass


class PipelineError(SurfaceError):
    pass


@dataclass
class TraceStep:
    op: str
    case: str
    pre: dict
    post: dict
    note: str = ""
    certificate: dict = field(default_factory=dict)


@dataclass
class PipelineTrace:
    steps: list = field(default_factory=list)
    rotations: list = field(default_factory=list)
    iteration_bound: int = 0
    iterations: int = 0

    def composed_rotation(self) -> Rotation:
        """The paper-frame rotation: inverse of the specials' total motion."""
        total = Rotation.identity()
        for r in self.rotations:
            total = r.compose(total)
        return total.inverse()


def _summary(rep: FunctionalReport) -> dict:
    return {
        "A": rep.area, "L": rep.boundary_length, "H": rep.ratio,
        "R": rep.reduced_area, "sum": rep.covering_sum,
        "n_bar": dict(rep.n_bar), "topology": rep.topology,
    }


def _step_certificate(pre: FunctionalReport, post: FunctionalReport, walk_ok: bool):
    cert = {
        "H": post.ratio >= pre.ratio - 1e-9,
        "sum": post.covering_sum <= pre.covering_sum,
        "n_bar": all(post.n_bar[k] <= pre.n_bar[k] for k in pre.n_bar),
        "boundary": walk_ok,
    }
    cert["ok"] = all(cert.values())
    return cert


def _walk_word(s: SurfaceComplex):
    return tuple(s.boundary_walk().darts)


def _cyclic_equal(w1, w2):
    if len(w1) != len(w2):
        return False
    if not w1:
        return True
    dbl = w2 + w2
    return any(dbl[i:i + len(w1)] == tuple(w1) for i in range(len(w2)))


def _word_subarc(s_new, s_old) -> bool:
    """Closed-subarc check of the new walk in the old one (same base)."""
    w_new, w_old = _walk_word(s_new), _walk_word(s_old)
    if _cyclic_equal(w_new, w_old):
        return True
    junctions = [s_old.base.tail(d) for d in w_old]
    return closed_subword_check(list(w_old), junctions, list(w_new))


# -- fold removal (Prop no-folded) ---------------------------------------------


def _nonspecial_folds(s: SurfaceComplex):
    return [sh for sh in s.sheet_list()
            if (not sh.interior) and sh.folded and not sh.special]


def remove_one_fold(s: SurfaceComplex) -> SurfaceComplex:
    """Sew one maximal matched fold pair at a non-special folded point."""
    folds = _nonspecial_folds(s)
    if not folds:
        return s
    sh = folds[0]
    walk = s.boundary_walk().sides
    idx = {side: i for i, side in enumerate(walk)}
    n = len(walk)
    run_a = [sh.in_side]
    run_b = [sh.out_side]
    sheets, corner_sheet = s.sheets()
    while True:
        prev = walk[(idx[run_a[0]] - 1) % n]
        nxt = walk[(idx[run_b[-1]] + 1) % n]
        if prev == nxt or prev in run_b or nxt in run_a or prev in run_a or nxt in run_b:
            break
        if s.dart_of(nxt) != (s.dart_of(prev) ^ 1):
            break
        junction_v = s.base.head(s.dart_of(prev))
        if junction_v in s.base.specials:
            break
        run_a.insert(0, prev)
        run_b.append(nxt)
    if len(run_a) + len(run_b) >= n:
        raise PipelineError(
            "fold pair exhausts the whole boundary; this contradicts H >= 0")
    out, case = sew(s, run_a, run_b)
    if case != "A":
        raise PipelineError("fold sew closed the surface under H >= 0")
    return cleanup_unused_curve_edges(out)


def remove_nonspecial_folds(s: SurfaceComplex, trace: PipelineTrace = None) -> SurfaceComplex:
    """Iterate fold sews until no non-special folded point remains."""
    rep = functionals(s)
    if rep.ratio is None or rep.ratio < 0:
        raise NegativeH("fold removal requires H >= 0, got %r" % rep.ratio)
    cur = s
    while True:
        folds = _nonspecial_folds(cur)
        if not folds:
            return cur
        pre = functionals(cur)
        nxt = remove_one_fold(cur)
        post = functionals(nxt)
        if len(_nonspecial_folds(nxt)) >= len(folds):
            raise PipelineError("fold count did not decrease")
        if post.boundary_length >= pre.boundary_length - 1e-12:
            raise PipelineError("fold sew did not shorten the boundary")
        if trace is not None:
            trace.steps.append(TraceStep(
                op="remove_fold", case="glue-A", pre=_summary(pre), post=_summary(post),
                certificate=_step_certificate(pre, post, _word_subarc(nxt, cur))))
        cur = nxt


# -- interior branch transport (Prop in-to-bd) -----------------------------------


def _branch_values(s: SurfaceComplex):
    out = set()
    for sh in s.sheet_list():
        if sh.is_branch:
            out.add(sh.vertex)
    return out


def _interior_nonspecial_branches(s: SurfaceComplex):
    return [sh for sh in s.sheet_list()
            if sh.interior and sh.is_branch and not sh.special]


def _plan_path_to_special(s: SurfaceComplex, start_vertex: int):
    """Shortest base edge path from the branch value to a special vertex whose
    interior avoids the special set and every branch value."""
    bc = s.base
    blocked = set(bc.specials) | _branch_values(s)
    blocked.discard(start_vertex)
    dist = {start_vertex: 0}
    parent = {}
    frontier = [start_vertex]
    goal = None
    while frontier and goal is None:
        nxt = []
        for v in sorted(frontier):
            for d in sorted(bc.fans[v]):
                w = bc.head(d)
                if w in dist:
                    continue
                dist[w] = dist[v] + 1
                parent[w] = (v, d)
                if w in bc.specials:
                    goal = w
                    break
                if w not in blocked:
                    nxt.append(w)
            if goal is not None:
                break
        frontier = nxt
    if goal is None:
        raise NoSuchPath("no admissible base path from vertex %d to the special set"
                         % start_vertex)
    darts = []
    v = goal
    while v != start_vertex:
        pv, d = parent[v]
        darts.append(d)
        v = pv
    darts.reverse()
    return darts


def _classify_lift_ends(s, result):
    sheets, _ = s.sheets()
    ends = [lf.end_sheet for lf in result.lifts]
    coincident = None
    for i in range(len(ends)):
        for j in range(i + 1, len(ends)):
            if ends[i] == ends[j]:
                coincident = (i, j)
                break
        if coincident:
            break
    on_boundary = [i for i, e in enumerate(ends) if not sheets[e].interior]
    return ends, coincident, on_boundary


def _keep_best_disk(pieces):
    """Order split pieces: the kept disk first, the discarded piece second.

    Closed piece -> keep the disk.  Two disks -> keep the larger H, ties by
    smaller covering sum, then smaller boundary length.
    """
    kinds = [p.topology_kind() for p in pieces]
    if CLOSED in kinds:
        keep = pieces[kinds.index(DISK)]
        other = pieces[kinds.index(CLOSED)]
        return keep, other, "closed"
    reps = [functionals(p) for p in pieces]
    key = [( -r.ratio, r.covering_sum, r.boundary_length) for r in reps]
    i = 0 if key[0] <= key[1] else 1
    return pieces[i], pieces[1 - i], "disk"


def _chord_refine_for_push(s: SurfaceComplex, X):
    """Insert a transient chord that re-opens a route from the branch value.

    The chord runs from the branch value across one of its faces, either
    straight to a special tip on the same face cycle, or to an unblocked
    cycle vertex from which an ordinary edge path to the special set exists
    (the spec's refine-first convention for paths that are not edge paths).
    """
    bc = s.base
    blocked = set(bc.specials) | _branch_values(s)
    candidates = []
    for d0 in bc.fans[X.vertex]:
        face = bc.face_of_dart(d0)
        cyc = bc.faces[face].cycle
        for p, d in enumerate(cyc):
            v = bc.tail(d)
            if v == X.vertex:
                continue
            if v in bc.specials and len(bc.fans[v]) == 1:
                candidates.append((0, face, p, v, True))
            elif v not in blocked:
                candidates.append((1, face, p, v, False))
    candidates.sort()
    for _rank, face, tip_pos, w, direct in candidates:
        tail = []
        if not direct:
            try:
                tail = _plan_path_to_special(s, w)
            except NoSuchPath:
                continue
        cyc = bc.faces[face].cycle
        pos_a = next(p for p, d in enumerate(cyc) if bc.tail(d) == X.vertex)
        work, chord_e, _fab, side_map = insert_chord_surface(s, face, pos_a, tip_pos)
        corner = side_map.get(X.corners[0], X.corners[0])
        sheets2, corner_sheet2 = work.sheets()
        idx2 = corner_sheet2[corner]
        chord_dart = 2 * chord_e if work.base.edges[chord_e].a == X.vertex else 2 * chord_e + 1
        return work, chord_e, idx2, [chord_dart] + tail
    raise NoSuchPath("no admissible base path even after chord refinement")


def push_interior_branch(s: SurfaceComplex, sheet_index: int):
    """Move one interior non-special branch point per Prop in-to-bd.

    Returns (surface, case label, discarded piece or None)."""
    sheets, _ = s.sheets()
    X = sheets[sheet_index]
    chord_e = None
    try:
        darts = _plan_path_to_special(s, X.vertex)
        work, idx = s, sheet_index
    except NoSuchPath:
        work, chord_e, idx, darts = _chord_refine_for_push(s, X)

    def finish(surface):
        if chord_e is not None:
            surface = delete_edge_surface(surface, chord_e)
        return cleanup_unused_curve_edges(surface)

    sheets_w, _ = work.sheets()
    result = lift_path(work, darts, idx, FROM_INTERIOR)
    ends, coincident, on_boundary = _classify_lift_ends(work, result)
    if coincident is not None:
        i, j = coincident
        pieces = split_on_lifts(work, result.lifts[i], result.lifts[j])
        keep, other, kind = _keep_best_disk(pieces)
        case = "1" if not sheets_w[ends[i]].interior else "2"
        if kind != "closed":
            raise PipelineError("coincident lift endpoints must split off a closed surface")
        return finish(keep), case, other
    if len(on_boundary) >= 2:
        i, j = on_boundary[0], on_boundary[1]
        pieces = split_on_lifts(work, result.lifts[i], result.lifts[j])
        keep, other, kind = _keep_best_disk(pieces)
        if kind != "disk":
            raise PipelineError("distinct boundary endpoints must split into two disks")
        return finish(keep), "5", other
    out = star_rewire(work, result.lifts, idx)
    case = "3" if len(on_boundary) == 1 else "4"
    out = finish(out)
    if not _cyclic_equal(_walk_word(out), _walk_word(s)):
        raise PipelineError("interior push changed the boundary word")
    return out, case, None


def clear_interior_branches(s: SurfaceComplex, trace: PipelineTrace = None):
    """Push interior non-special branch points until none remain or a split.

    Returns (surface, 'CLEARED' | 'SPLIT')."""
    cur = s
    while True:
        branches = _interior_nonspecial_branches(cur)
        if not branches:
            return cur, "CLEARED"
        pre = functionals(cur)
        out, case, other = push_interior_branch(cur, branches[0].index)
        post = functionals(out)
        if trace is not None:
            trace.steps.append(TraceStep(
                op="push_interior_branch", case=case,
                pre=_summary(pre), post=_summary(post),
                note="" if other is None else "split off %s" % other.topology_kind(),
                certificate=_step_certificate(pre, post, _word_subarc(out, cur))))
        if other is not None:
            return out, "SPLIT"
        if len(_interior_nonspecial_branches(out)) >= len(branches):
            raise PipelineError("interior branch count did not decrease")
        cur = out


# -- boundary branch transport (Prop bd-bd) ----------------------------------------


def _boundary_nonspecial_branches(s: SurfaceComplex):
    return [sh for sh in s.sheet_list()
            if (not sh.interior) and sh.is_branch and not sh.special]


def slide_boundary_branch(s: SurfaceComplex, sheet_index: int):
    """Slide one boundary branch point along its next boundary arc.

    Returns (surface, case label, discarded piece or None)."""
    sheets, _ = s.sheets()
    X = sheets[sheet_index]
    if X.folded:
        raise PreconditionViolated("cannot slide a folded point")
    run = [X.out_side]
    d0 = s.dart_of(X.out_side)
    result = lift_path(s, [d0], sheet_index, ALONG_BOUNDARY)
    boundary_lift = result.lifts[0]
    interior = result.lifts[1:]
    ends, _, _ = _classify_lift_ends(s, result)
    p1 = boundary_lift.end_sheet
    hit_p1 = [lf for lf in interior if lf.end_sheet == p1]
    if hit_p1:
        pieces = reroute_boundary_split(s, run, hit_p1[0])
        keep, other, kind = _keep_best_disk(pieces)
        if kind != "closed":
            raise PipelineError("lift landing on p1 must split off a closed surface")
        return cleanup_unused_curve_edges(keep), "1", other
    coincident = None
    for i in range(len(interior)):
        for j in range(i + 1, len(interior)):
            if interior[i].end_sheet == interior[j].end_sheet:
                coincident = (i, j)
    if coincident is not None:
        pieces = split_on_lifts(s, interior[coincident[0]], interior[coincident[1]])
        keep, other, kind = _keep_best_disk(pieces)
        if kind != "closed":
            raise PipelineError("coincident interior lifts must split off a closed surface")
        return cleanup_unused_curve_edges(keep), "2", other
    on_bd = [lf for lf in interior if not sheets[lf.end_sheet].interior]
    if on_bd:
        pieces = reroute_boundary_split(s, run, on_bd[0])
        keep, other, kind = _keep_best_disk(pieces)
        if kind != "disk":
            raise PipelineError("lift landing elsewhere on the boundary must split two disks")
        return cleanup_unused_curve_edges(keep), "3", other
    out = star_rewire(s, interior, sheet_index, boundary_run=run)
    if not _cyclic_equal(_walk_word(out), _walk_word(s)):
        raise PipelineError("boundary slide changed the boundary word")
    return out, "4", None


def sweep_boundary_branches(s: SurfaceComplex, trace: PipelineTrace = None):
    """Slide every non-special boundary branch point forward until absorbed
    into a special junction of the boundary.  Returns (surface, 'DONE'|'SPLIT').

    Every slide advances one branch by one arc, so the total forward distance
    from the branches to the next special junction strictly decreases.
    """
    cur = s
    while True:
        branches = _boundary_nonspecial_branches(cur)
        if not branches:
            return cur, "DONE"
        pre = functionals(cur)
        out, case, other = slide_boundary_branch(cur, branches[0].index)
        post = functionals(out)
        if trace is not None:
            trace.steps.append(TraceStep(
                op="slide_boundary_branch", case=case,
                pre=_summary(pre), post=_summary(post),
                note="" if other is None else "split off %s" % other.topology_kind(),
                certificate=_step_certificate(pre, post, _word_subarc(out, cur))))
        if other is not None:
            return out, "SPLIT"
        cur = out


# -- sinking into a left-component special (Prop bd-in) -------------------------------


def _special_tips_by_face(s: SurfaceComplex):
    tips = {}
    for v in s.base.specials:
        fan = s.base.fans[v]
        if len(fan) == 1 and s.base.kind(fan[0]) == SCAFFOLD:
            tips.setdefault(s.base.face_of_dart(fan[0]), []).append(v)
    return tips


def _sinkable_arc(s: SurfaceComplex):
    """A walk dart whose left face holds a special tip, plus that tip."""
    tips = _special_tips_by_face(s)
    for d in s.boundary_walk().darts:
        f = s.base.left_face(d)
        if f in tips:
            return d, tips[f][0]
    return None


def _sink_one(s: SurfaceComplex, sheet_index: int, tip: int, pre, trace):
    """The parked branch sits at the head junction of a walk passage over an
    arc with ``tip`` on its left; pull the branching into the tip."""
    sheets, _ = s.sheets()
    sigma = sheets[sheet_index]
    g_dart = s.dart_of(sigma.in_side)
    face = s.base.left_face(g_dart)
    cyc = s.base.faces[face].cycle
    pos_a = (cyc.index(g_dart) + 1) % len(cyc)
    pos_b = next(p for p, d in enumerate(cyc) if s.base.tail(d) == tip)
    lab = s.base.specials[tip]
    d_sink = sigma.multiplicity

    work, chord_e, _fab, side_map = insert_chord_surface(s, face, pos_a, pos_b)
    new_in_side = side_map.get(sigma.in_side, sigma.in_side)
    c2, p2 = new_in_side
    corner2 = (c2, (p2 + 1) % len(work.cycle_of(c2)))
    sheets2, corner_sheet2 = work.sheets()
    sigma2 = sheets2[corner_sheet2[corner2]]
    if not sigma2.is_branch or sigma2.vertex != sigma.vertex:
        raise PipelineError("parked branch lost after the chord refinement")
    chord_dart = 2 * chord_e if work.base.edges[chord_e].a == sigma.vertex else 2 * chord_e + 1
    result = lift_path(work, [chord_dart], sigma2.index, FROM_BOUNDARY_LEFT)
    ends, coincident, on_boundary = _classify_lift_ends(work, result)
    if on_boundary:
        raise PipelineError("lift into the left component touched the boundary")
    if coincident is not None:
        i, j = coincident
        pieces = split_on_lifts(work, result.lifts[i], result.lifts[j])
        keep, other, kind = _keep_best_disk(pieces)
        if kind != "closed":
            raise PipelineError("coincident sink lifts must split off a closed surface")
        keep = delete_edge_surface(keep, chord_e)
        keep = cleanup_unused_curve_edges(keep)
        post = functionals(keep)
        if trace is not None:
            trace.steps.append(TraceStep(
                op="sink_branch_to_special", case="1",
                pre=_summary(pre), post=_summary(post), note="split off closed",
                certificate=_step_certificate(pre, post, _word_subarc(keep, s))))
        return keep, "SPLIT"
    out = star_rewire(work, result.lifts, sigma2.index)
    out = delete_edge_surface(out, chord_e)
    post = functionals(out)
    expected = pre.n_bar[lab] - (d_sink - 1)
    if post.n_bar[lab] != expected:
        raise PipelineError("sink changed n_bar(%s) to %d, expected %d"
                            % (lab, post.n_bar[lab], expected))
    if not _cyclic_equal(_walk_word(out), _walk_word(s)):
        raise PipelineError("sink changed the boundary word")
    if trace is not None:
        trace.steps.append(TraceStep(
            op="sink_branch_to_special", case="2",
            pre=_summary(pre), post=_summary(post),
            certificate=_step_certificate(pre, post, True)))
    return out, "DONE"


def sink_branch_to_special(s: SurfaceComplex, trace: PipelineTrace = None):
    """Slide each boundary branch forward to a junction over an arc with a
    special tip on its left and pull its branching into the tip.

    Returns (surface, 'DONE' | 'SPLIT')."""
    if _sinkable_arc(s) is None:
        raise PreconditionViolated("no boundary arc has a special point on its left")
    cur = s
    while True:
        branches = _boundary_nonspecial_branches(cur)
        if not branches:
            return cur, "DONE"
        tips = _special_tips_by_face(cur)
        B = branches[0]
        if B.folded:
            raise PipelineError("boundary branch is folded after fold removal")
        in_dart = cur.dart_of(B.in_side)
        f_left = cur.base.left_face(in_dart)
        if f_left in tips:
            pre = functionals(cur)
            out, status = _sink_one(cur, B.index, tips[f_left][0], pre, trace)
            if status == "SPLIT":
                return out, "SPLIT"
            cur = out
            continue
        pre = functionals(cur)
        out, case, other = slide_boundary_branch(cur, B.index)
        post = functionals(out)
        if trace is not None:
            trace.steps.append(TraceStep(
                op="slide_boundary_branch", case=case,
                pre=_summary(pre), post=_summary(post),
                note="parking" if other is None else "split off %s" % other.topology_kind(),
                certificate=_step_certificate(pre, post, _word_subarc(out, cur))))
        if other is not None:
            return out, "SPLIT"
        cur = out


# -- rotation onto the special set (Prop rotation) --------------------------------


def _walk_segments(s: SurfaceComplex):
    """Geodesic segments of the walk arcs, indexed by edge id."""
    segs, ids = [], []
    seen = set()
    for d in s.boundary_walk().darts:
        e = d >> 1
        if e in seen:
            continue
        seen.add(e)
        segs.append(s.base.dart_segment(2 * e))
        ids.append(e)
    return segs, ids


def rotate_to_touch_special(s: SurfaceComplex, rng_jitter=None):
    """Rotate the special set rigidly until it first touches the boundary.

    Combinatorially the boundary is refined at the contact point and the
    contacted special's scaffold tip is absorbed into the new on-curve
    vertex; every functional is preserved exactly.  Returns
    (surface, specials' rotation)."""
    segs, edge_ids = _walk_segments(s)
    specials = [(v, s.base.vertices[v]) for v in s.base.specials]
    base_axis = None
    best = None
    for v, p in specials:
        dmin, x0 = None, None
        for seg in segs:
            n = seg.pole
            c = p - float(np.dot(p, n)) * n
            cand = None
            if np.linalg.norm(c) > 1e-12 and seg.contains(unit(c), tol=1e-9):
                cand = unit(c)
            else:
                cand = seg.a if angle_between(p, seg.a) <= angle_between(p, seg.b) else seg.b
            dd = angle_between(p, cand)
            if dmin is None or dd < dmin:
                dmin, x0 = dd, cand
        if best is None or dmin < best[0]:
            best = (dmin, v, p, x0)
    _, v1, p1, x0 = best
    base_axis = unit(np.cross(p1, x0))

    jitters = [0.0, 1e-6, -1e-6, 2e-6, -2e-6, 5e-6]
    last_err = None
    for jt in jitters:
        axis = base_axis
        if jt:
            axis = Rotation.from_axis_angle(p1, jt).apply(base_axis)
        contacts = []
        for v, p in specials:
            try:
                rot, seg_idx, prm = first_contact_rotation(segs, p, -np.asarray(axis))
                contacts.append((rot, seg_idx, prm, v))
            except NoContact:
                continue
        if not contacts:
            last_err = NoContact("no special reaches the boundary under this axis")
            continue

        def angle_of(rot):
            return _rotation_angle_about(rot, -np.asarray(axis))

        contacts.sort(key=lambda c: angle_of(c[0]))
        rot, seg_idx, prm, v_c = contacts[0]
        t_star = angle_of(rot)
        if len(contacts) > 1 and angle_of(contacts[1][0]) - t_star < 1e-9:
            last_err = PipelineError("two specials touch simultaneously")
            continue
        seg = segs[seg_idx]
        margin = 1e-7 / max(seg.length, 1e-9)
        if prm is None or prm < margin or prm > 1 - margin:
            last_err = PipelineError("contact at an arc endpoint")
            continue
        rho = Rotation.from_axis_angle(axis, t_star)
        return _apply_rotation_contact(s, rho, v_c, edge_ids[seg_idx], prm), rho
    raise last_err if last_err is not None else NoContact("rotation search failed")


def _rotation_angle_about(rot: Rotation, axis) -> float:
    """Rotation angle of rot about the given axis, in [0, 2*pi)."""
    k = unit(axis)
    ref = unit(np.cross(k, [1.0, 0.3, -0.2]) if abs(k[2]) > 0.9 else np.cross(k, [0, 0, 1]))
    w = rot.apply(ref)
    w = unit(w - float(np.dot(w, k)) * k)
    ang = math.atan2(float(np.dot(np.cross(ref, w), k)), float(np.dot(ref, w)))
    return ang % (2 * math.pi)


def _apply_rotation_contact(s: SurfaceComplex, rho: Rotation, special_v: int,
                            edge: int, prm: float) -> SurfaceComplex:
    pre = functionals(s)
    bc = s.base
    x_point = rho.apply(bc.vertices[special_v])
    tip_face = bc.face_of_dart(bc.fans[special_v][0])
    d_g = 2 * edge
    m_left = sum(1 for side in s.free_sides() if s.dart_of(side) == d_g)
    m_right = sum(1 for side in s.free_sides() if s.dart_of(side) == (d_g ^ 1))
    if m_left == 0 and m_right > 0:
        d_g ^= 1
        m_left, m_right = m_right, m_left
    if m_right != 0:
        raise PipelineError("contact arc is traversed in both directions")
    if s.base.face_of_dart(d_g ^ 1) != tip_face:
        raise PipelineError("contacted special does not sit in the face right of the arc")

    out, x_vertex, (e1, e2) = split_edge_surface(s, edge, x_point)
    # move every special tip rigidly; bridges keep their attachment
    for v in list(out.base.specials):
        if v == special_v:
            continue  # lands on the new on-curve vertex; absorbed below
        fan = out.base.fans[v]
        if len(fan) != 1 or out.base.kind(fan[0]) != SCAFFOLD:
            raise PipelineError("special %d is not a scaffold tip at rotation time" % v)
        p_new = rho.apply(out.base.vertices[v])
        loc = out.base.locate_point(p_new)
        e_b = fan[0] >> 1
        face_v = out.base.face_of_dart(fan[0])
        if loc != ("face", face_v):
            raise PipelineError("rotated special left its face: %r" % (loc,))
        out.base.vertices[v] = p_new
        ed = out.base.edges[e_b]
        other = ed.a if ed.b == v else ed.b
        ed.length = angle_between(out.base.vertices[other], p_new)
    out.base.vertices[x_vertex] = x_point
    out = absorb_tip_into_vertex(out, special_v, x_vertex)
    post = functionals(out)
    _assert_rotation_invariants(pre, post)
    require_valid(out, "rotation contact")
    return out


def _assert_rotation_invariants(pre, post):
    if abs(pre.area - post.area) > 1e-9:
        raise PipelineError("rotation changed the area")
    if abs(pre.boundary_length - post.boundary_length) > 1e-9:
        raise PipelineError("rotation changed the boundary length")
    if pre.covering_sum != post.covering_sum:
        raise PipelineError("rotation changed the covering sum")
    for k in pre.n_bar:
        if pre.n_bar[k] != post.n_bar[k]:
            raise PipelineError("rotation changed n_bar(%s)" % k)


# -- driver -------------------------------------------------------------------


def _is_clean(s: SurfaceComplex) -> bool:
    for sh in s.sheet_list():
        if sh.is_branch and not sh.special:
            return False
        if (not sh.interior) and sh.folded and not sh.special:
            return False
    return True


def declared_iteration_bound(rep: FunctionalReport, s: SurfaceComplex) -> int:
    n_branch = sum(1 for sh in rep.sheets if sh.is_branch)
    n_arcs = sum(1 for e in s.base.live_edges() if s.base.edges[e].kind == CURVE)
    walk_len = sum(len(w) for w in s.walks())
    return (rep.covering_sum + 1) * (n_branch + 2) * (walk_len + n_arcs + 4)


def normalize(s: SurfaceComplex):
    """Run the full pipeline; returns (clean surface, PipelineTrace).

    The output has all branch values in the special set, no non-special
    folded points, and is better than the input under the composed rotation.
    """
    require_valid(s, "normalize input", strict_scaffold=False)
    if s.topology_kind() != DISK:
        raise PipelineError("normalize expects a disk covering")
    rep0 = functionals(s)
    if rep0.ratio is None or rep0.ratio < 0:
        raise NegativeH("normalize requires H >= 0, got %r" % rep0.ratio)

    trace = PipelineTrace()
    trace.iteration_bound = declared_iteration_bound(rep0, s)
    cur = cleanup_unused_curve_edges(s)

    while True:
        trace.iterations += 1
        if trace.iterations > trace.iteration_bound:
            raise PipelineError("iteration bound %d exceeded" % trace.iteration_bound)

        if _nonspecial_folds(cur):
            cur = remove_nonspecial_folds(cur, trace)
            continue
        if _interior_nonspecial_branches(cur):
            cur, status = clear_interior_branches(cur, trace)
            cur = cleanup_unused_curve_edges(cur)
            continue
        boundary_branches = _boundary_nonspecial_branches(cur)
        if boundary_branches:
            walk_special = any(
                cur.base.tail(d) in cur.base.specials or cur.base.head(d) in cur.base.specials
                for d in cur.boundary_walk().darts)
            if walk_special:
                cur, status = sweep_boundary_branches(cur, trace)
                cur = cleanup_unused_curve_edges(cur)
                continue
            if _sinkable_arc(cur) is not None:
                cur, status = sink_branch_to_special(cur, trace)
                cur = cleanup_unused_curve_edges(cur)
                continue
            pre = functionals(cur)
            cur, rho = rotate_to_touch_special(cur)
            post = functionals(cur)
            trace.rotations.append(rho)
            trace.steps.append(TraceStep(
                op="rotate_to_touch_special", case="rotation",
                pre=_summary(pre), post=_summary(post),
                certificate=_step_certificate(pre, post, True)))
            continue
        if _is_clean(cur):
            break
        raise PipelineError("no applicable step but the surface is not clean")

    phi = trace.composed_rotation()
    out = SurfaceComplex(cur.base.rotated(phi), cur.copies, cur.pairing)
    require_valid(out, "normalize output", strict_scaffold=False)
    # the composed rotation returns the specials to their input positions
    in_pos = {lab: s.base.vertices[v] for v, lab in s.base.specials.items()}
    for v, lab in out.base.specials.items():
        if angle_between(out.base.vertices[v], in_pos[lab]) > 1e-8:
            raise PipelineError("composed rotation does not restore special %s" % lab)
    return out, trace


def certify(out: SurfaceComplex, original: SurfaceComplex, trace: PipelineTrace):
    """Full better-than certificate of the pipeline output against its input."""
    ok, report = is_better_than(out, original, trace.composed_rotation())
    return ok, report
