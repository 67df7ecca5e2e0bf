"""Write the bundled scheme configs into src/tilesplit/configs/.

Placements of 2-D children are solved from vertex correspondences: the map
x -> alpha R x + t sending three prototile vertices onto three target
vertices.  The solved scale is checked against the exact scale written to
the config and R is checked to be orthogonal.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "tilesplit" / "configs"
PHI = (1 + math.sqrt(5)) / 2
SQ3 = math.sqrt(3.0)


def scalar_value(s) -> float:
    if isinstance(s, float):
        return s
    if isinstance(s, str):
        return float(Fraction(s))
    return float(Fraction(s["base"])) ** float(Fraction(s["exponent"]))


def similarity(src, dst, alpha):
    src, dst = np.asarray(src, float), np.asarray(dst, float)
    P = np.column_stack([src[1] - src[0], src[2] - src[0]])
    Q = np.column_stack([dst[1] - dst[0], dst[2] - dst[0]])
    A = Q @ np.linalg.inv(P)
    a = math.sqrt(abs(np.linalg.det(A)))
    R = A / a
    assert abs(a - scalar_value(alpha)) < 1e-12, (a, alpha)
    assert np.abs(R @ R.T - np.eye(2)).max() < 1e-12, R
    t = dst[0] - A @ src[0]
    R = np.where(np.abs(R) < 1e-15, 0.0, R)
    return {"rotation": [float(x) for x in R.ravel()], "translation": [float(x) for x in t]}


def child2(kind, alpha, src, dst):
    return {"type": kind, "alpha": alpha, **similarity(src, dst, alpha)}


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def corners(poly):
    return [poly[0], poly[1], poly[3]]


def interval_child(kind, alpha, start):
    return {"type": kind, "alpha": alpha, "translation": [start]}


# ---------------------------------------------------------------------------

def kakutani(alpha, beta, alpha_f, description, two_rules=False):
    rules = [{"parent": "I", "children": [interval_child("I", alpha, 0.0), interval_child("I", beta, alpha_f)]}]
    policy = {"kind": "fixed", "index": 0}
    if two_rules:
        rules.append({"parent": "I", "children": [interval_child("I", beta, 0.0),
                                                  interval_child("I", alpha, 1.0 - alpha_f)]})
        policy = {"kind": "round_robin"}
    return {
        "description": description,
        "dimension": 1,
        "prototiles": [{"label": "I", "volume": "1", "polygon": [[0.0], [1.0]]}],
        "rules": rules,
        "rule_policy": policy,
    }


def rect_square():
    R = rect(0, 0, 2, 1)
    S = rect(0, 0, 1, 1)
    cS, cR = corners(S), corners(R)

    def r_rule(mirror):
        f = (lambda p: [2 - p[0], p[1]]) if mirror else (lambda p: p)
        kids = [
            (("S", "1"), rect(0, 0, 1, 1)),
            (("R", "1/2"), rect(1, 0, 2, 0.5)),
            (("S", "1/2"), rect(1, 0.5, 1.5, 1)),
            (("S", "1/2"), rect(1.5, 0.5, 2, 1)),
        ]
        out = []
        for (kind, a), box in kids:
            tgt = [f(p) for p in corners(box)]
            out.append(child2(kind, a, cS if kind == "S" else cR, tgt))
        return {"parent": "R", "children": out}

    s_rule = {"parent": "S", "children": [
        child2("S", "2/3", cS, corners(rect(0, 0, 2 / 3, 2 / 3))),
        child2("S", "1/3", cS, corners(rect(2 / 3, 0, 1, 1 / 3))),
        # rectangle turned upright: its long side runs along +y
        child2("R", "1/3", cR, [[1, 1 / 3], [1, 1], [2 / 3, 1 / 3]]),
        child2("R", "1/3", cR, corners(rect(0, 2 / 3, 2 / 3, 1))),
    ]}
    return {
        "description": "Rectangle [0,2]x[0,1] and unit square; rectangle rule (1/2 R, S, 1/2 S, 1/2 S) "
                       "with a mirrored alternative; coordinates are a reconstruction.",
        "dimension": 2,
        "prototiles": [
            {"label": "R", "volume": "2", "polygon": R},
            {"label": "S", "volume": "1", "polygon": S},
        ],
        "rules": [r_rule(False), r_rule(True), s_rule],
        "rule_policy": {"kind": "random", "seed": 1},
    }


def penrose():
    a = 1 / PHI
    h = math.sqrt(PHI ** 2 - 0.25)
    k = math.sqrt(1 - PHI ** 2 / 4)
    # tall triangle: base 1, legs phi; vertices (base left, base right, apex)
    TA, TB, TC = np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.5, h])
    # short triangle: base phi, legs 1; vertices (base left, base right, apex)
    SA, SC, SD = np.array([0.0, 0.0]), np.array([PHI, 0.0]), np.array([PHI / 2, k])
    T_ref, S_ref = [TA, TB, TC], [SA, SC, SD]

    # tall: bisect the base angle at TA; D on TC-TB side with |TA D| = 1
    D = TB + (TC - TB) * ((1 / PHI) / PHI)
    E = TA + (TC - TA) * (1 / PHI)  # |TA E| = 1 on the leg TA-TC (length phi)
    t_rule = {"parent": "T", "children": [
        child2("T", a, T_ref, [TB, D, TA]),
        child2("T", a, T_ref, [D, E, TA]),
        child2("S", a, S_ref, [D, TC, E]),
    ]}
    # short: E' on the base with |SA E'| = 1
    E2 = SA + (SC - SA) / PHI
    s_rule = {"parent": "S", "children": [
        child2("T", a, T_ref, [SD, E2, SA]),
        child2("S", a, S_ref, [SD, SC, E2]),
    ]}
    return {
        "description": "Penrose-Robinson triangles: tall T (legs phi, base 1) and short S (legs 1, base phi); "
                       "volumes in units where vol S = 1; coordinates are a reconstruction.",
        "dimension": 2,
        "prototiles": [
            {"label": "T", "volume": PHI, "polygon": [list(map(float, p)) for p in T_ref]},
            {"label": "S", "volume": "1", "polygon": [list(map(float, p)) for p in S_ref]},
        ],
        "rules": [t_rule, s_rule],
        "rule_policy": {"kind": "fixed", "index": 0},
    }


def pinwheel():
    O, X, Y = [0.0, 0.0], [2.0, 0.0], [0.0, 1.0]
    F = [0.4, 0.8]
    M1, M2, M3 = [1.0, 0.0], [1.2, 0.4], [0.2, 0.4]
    a = {"base": "1/5", "exponent": "1/2"}
    ref = [O, X, Y]  # (right angle, long-leg end, short-leg end)
    kids = [[F, O, Y], [M3, M1, O], [M2, X, M1], [F, M2, M3], [M1, M3, M2]]
    return {
        "description": "Pinwheel triangle with legs 2 and 1 (angle arctan 1/2), five children of scale 1/sqrt 5.",
        "dimension": 2,
        "prototiles": [{"label": "P", "volume": "1", "polygon": ref}],
        "rules": [{"parent": "P", "children": [child2("P", a, ref, k) for k in kids]}],
        "rule_policy": {"kind": "fixed", "index": 0},
    }


def nonprimitive():
    a = {"base": "1/3", "exponent": "1/2"}
    Q = rect(0, 0, 1, 1)
    A = rect(0, 0, SQ3, 1 / SQ3)
    B = rect(0, 0, SQ3, 2 / SQ3)
    s = 1 / SQ3
    q_rule = {"parent": "Q", "children": [
        child2("A", a, corners(A), corners(rect(0, 0, 1, 1 / 3))),
        child2("B", a, corners(B), corners(rect(0, 1 / 3, 1, 1))),
    ]}
    a_rule = {"parent": "A", "children": [
        child2("Q", a, corners(Q), corners(rect(i * s, 0, (i + 1) * s, s))) for i in range(3)]}
    b_rule = {"parent": "B", "children": [
        child2("Q", a, corners(Q), corners(rect(i * s, j * s, (i + 1) * s, (j + 1) * s)))
        for j in range(2) for i in range(3)]}
    return {
        "description": "Unit square Q and rectangles A (sqrt3 x 1/sqrt3), B (sqrt3 x 2/sqrt3); period 2.",
        "dimension": 2,
        "prototiles": [
            {"label": "Q", "volume": "1", "polygon": Q},
            {"label": "A", "volume": "1", "polygon": A},
            {"label": "B", "volume": "2", "polygon": B},
        ],
        "rules": [q_rule, a_rule, b_rule],
        "rule_policy": {"kind": "fixed", "index": 0},
    }


def triangle_rhombus():
    a = 1 / (1 + math.sqrt(2))
    return {
        "description": "Triangle T and rhombus R, fixed scale 1/(1+sqrt 2), substitution matrix [[3,2],[4,3]]; "
                       "volumes only.",
        "dimension": 2,
        "prototiles": [
            {"label": "T", "volume": "1"},
            {"label": "R", "volume": {"base": "2", "exponent": "1/2"}},
        ],
        "rules": [
            {"parent": "T", "children": [{"type": "T", "alpha": a}] * 3 + [{"type": "R", "alpha": a}] * 2},
            {"parent": "R", "children": [{"type": "T", "alpha": a}] * 4 + [{"type": "R", "alpha": a}] * 3},
        ],
        "rule_policy": {"kind": "fixed", "index": 0},
    }


def rauzy():
    # tribonacci constant: tau^3 = tau^2 + tau + 1
    tau = float(np.max(np.roots([1, -1, -1, -1]).real))
    return {
        "description": "Rauzy fractal, one prototile split into pieces of volume 1/tau, 1/tau^2, 1/tau^3; "
                       "volumes only.",
        "dimension": 2,
        "prototiles": [{"label": "F", "volume": "1"}],
        "rules": [{"parent": "F", "children": [{"type": "F", "alpha": tau ** (-k / 2)} for k in (1, 2, 3)]}],
        "rule_policy": {"kind": "fixed", "index": 0},
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    g = 1 / PHI
    docs = {
        "kakutani_third": kakutani("1/3", "2/3", 1 / 3, "1/3-Kakutani scheme on the unit interval."),
        "kakutani_third_two_rules": kakutani("1/3", "2/3", 1 / 3, "1/3-Kakutani with both orders of the split, "
                                             "alternated per tile.", two_rules=True),
        "kakutani_half": kakutani("1/2", "1/2", 0.5, "1/2-Kakutani (dyadic) scheme on the unit interval."),
        "kakutani_golden": kakutani(g, 1 - g, g, "1/phi-Kakutani scheme on the unit interval."),
        "rect_square": rect_square(),
        "penrose_robinson": penrose(),
        "pinwheel": pinwheel(),
        "nonprimitive_square_rects": nonprimitive(),
        "tr_triangle_rhombus": triangle_rhombus(),
        "rauzy": rauzy(),
    }
    for name, doc in docs.items():
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
        print("wrote", name)


if __name__ == "__main__":
    main()
