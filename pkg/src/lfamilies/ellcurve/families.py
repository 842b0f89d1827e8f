"""Family enumerations F1, F2, F4, sign partitions and curve-list I/O."""

import csv
import json
import math

from ..exceptions import InputError, SingularCurveError, UnsupportedError
from .curve import Curve
from .lseries import conductor, is_semistable, ldata, root_number


def floor_root(X, k):
    """Largest integer n >= 0 with n**k <= X (exact for integer X)."""
    if X < 0:
        raise InputError("X must be nonnegative")
    n = int(math.floor(float(X) ** (1.0 / k)))
    while n > 0 and n ** k > X:
        n -= 1
    while (n + 1) ** k <= X:
        n += 1
    return n


def _check_X(X):
    if not X >= 1:
        raise InputError(f"X must be >= 1, got {X!r}")


def family_F1(X, semistable=False):
    """All E_{a,b} with |a| <= X^(1/3), |b| <= X^(1/2), nonsingular."""
    _check_X(X)
    A, B = floor_root(X, 3), floor_root(X, 2)
    for a in range(-A, A + 1):
        for b in range(-B, B + 1):
            if 4 * a ** 3 + 27 * b * b == 0:
                continue
            c = Curve(a, b)
            if semistable and not is_semistable(c):
                continue
            yield c


def family_F2(X, semistable=False):
    """All E_{a,b^2} with |a| <= X^(1/3), 1 <= b, b^2 <= X^(1/2).

    Each curve carries the rational point (0, b). Only b >= 1 is listed
    since b and -b give the same curve and b = 0 makes (0, 0) torsion.
    """
    _check_X(X)
    A, B = floor_root(X, 3), floor_root(X, 4)
    for a in range(-A, A + 1):
        for b in range(1, B + 1):
            if 4 * a ** 3 + 27 * b ** 4 == 0:
                continue
            c = Curve(a, b * b)
            if semistable and not is_semistable(c):
                continue
            yield c


def poly_eval(coeffs, t):
    """Integer polynomial with coefficients listed constant term first."""
    v = 0
    for c in reversed(coeffs):
        v = v * t + c
    return v


def _poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        for j, y in enumerate(q):
            out[i + j] += x * y
    return out


def _poly_trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _root_bound(coeffs, bound):
    """t beyond which |poly(t)| > bound (Cauchy-style); None for constants."""
    p = _poly_trim(coeffs)
    if len(p) == 1:
        return None
    lead = abs(p[-1])
    return 1 + (sum(abs(c) for c in p[:-1]) + bound) / lead


def family_F4(a_poly, b_poly, X, semistable=False):
    """E_t = E_{a(t), b(t)} for t = 1, 2, ... with |a(t)| <= X^(1/3), |b(t)| <= X^(1/2)."""
    _check_X(X)
    a_poly = [int(c) for c in a_poly] or [0]
    b_poly = [int(c) for c in b_poly] or [0]
    disc = _poly_trim(
        [4 * x for x in _poly_mul(a_poly, _poly_mul(a_poly, a_poly))]
    )
    b2 = _poly_mul(b_poly, b_poly)
    n = max(len(disc), len(b2))
    disc = _poly_trim([(disc[i] if i < len(disc) else 0) + 27 * (b2[i] if i < len(b2) else 0)
                       for i in range(n)])
    if disc == [0]:
        raise InputError("parametrisation is degenerate: 4a(T)^3 + 27b(T)^2 vanishes identically")
    ba, bb = floor_root(X, 3), floor_root(X, 2)
    limits = [r for r in (_root_bound(a_poly, ba), _root_bound(b_poly, bb)) if r is not None]
    if not limits:
        raise InputError("both a(T) and b(T) are constant; the family would be infinite")
    t_max = int(math.floor(min(limits)))
    for t in range(1, t_max + 1):
        a, b = poly_eval(a_poly, t), poly_eval(b_poly, t)
        if abs(a) > ba or abs(b) > bb:
            continue
        try:
            c = Curve(a, b)
        except SingularCurveError:
            continue
        if semistable and not is_semistable(c):
            continue
        yield c


def enumerate_family(name, X, semistable=False, a_poly=None, b_poly=None, order="discriminant"):
    """List a family; ``order="conductor"`` sorts by conductor instead of (a, b)."""
    name = str(name).upper()
    if name == "F1":
        curves = list(family_F1(X, semistable))
    elif name == "F2":
        curves = list(family_F2(X, semistable))
    elif name == "F4":
        if a_poly is None or b_poly is None:
            raise InputError("F4 needs a_poly and b_poly")
        curves = list(family_F4(a_poly, b_poly, X, semistable))
    else:
        raise InputError(f"unknown family {name!r}")
    if order == "conductor":
        curves.sort(key=lambda c: (conductor(c), c.a, c.b))
    elif order != "discriminant":
        raise InputError(f"unknown ordering {order!r}")
    return curves


def partition_by_sign(curves, numeric_fallback=None):
    """Split curves into (plus, minus, undetermined) by root number.

    ``numeric_fallback`` may be a callable curve -> +-1 used when the
    closed form is unavailable; it may itself raise to leave a curve
    undetermined.
    """
    plus, minus, undetermined = [], [], []
    for c in curves:
        try:
            w = root_number(c)
        except UnsupportedError:
            if numeric_fallback is None:
                undetermined.append(c)
                continue
            try:
                w = numeric_fallback(c)
            except Exception:
                undetermined.append(c)
                continue
        (plus if w == 1 else minus).append(c)
    return plus, minus, undetermined


CURVE_COLUMNS = ("a", "b", "delta", "conductor", "root_number", "c_L")


def curve_record(c, L=None):
    if L is None:
        try:
            L = ldata(c, cutoff=1)
        except UnsupportedError:
            L = ldata(c, cutoff=1, sign="none")
    return {
        "a": c.a,
        "b": c.b,
        "delta": c.discriminant,
        "conductor": L.conductor,
        "root_number": L.root_number if L.root_number is not None else 0,
        "c_L": repr(float(L.refined_conductor)),
    }


def write_curves_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow({k: r[k] for k in CURVE_COLUMNS})


def read_curves_csv(path):
    with open(path, newline="") as fh:
        return [Curve(int(r["a"]), int(r["b"])) for r in csv.DictReader(fh)]


def write_curves_json(path, records):
    with open(path, "w") as fh:
        json.dump(list(records), fh, indent=1, sort_keys=True)
        fh.write("\n")
