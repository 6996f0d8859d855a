"""Independent brute-force computation of the six-feature form similarity.

Works purely on canonical skeleton strings with regex/character scanning --
no expression trees, no code shared with the package implementation -- so it
can arbitrate the real metric.
"""

from __future__ import annotations

import re

_FUNC = re.compile(r"\b(arcsin|arctan|sin|cos|exp|log|sqrt)\b")
_VAR = re.compile(r"x_\d+")
_CONST = re.compile(r"(?<![A-Za-z_0-9])C(?![A-Za-z_0-9])")


def string_features(s: str) -> dict:
    n_pow = s.count("**")
    n_mul = s.count("*") - 2 * n_pow
    n_div = s.count("/")
    n_add = s.count(" + ")
    n_sub = s.count(" - ")
    operators = set()
    for symbol, count in (("**", n_pow), ("*", n_mul), ("/", n_div), ("+", n_add), ("-", n_sub)):
        if count:
            operators.add(symbol)
    function_hits = _FUNC.findall(s)
    depth = best = 0
    for ch in s:
        if ch == "(":
            depth += 1
            best = max(best, depth)
        elif ch == ")":
            depth -= 1
    return {
        "operators": operators,
        "functions": set(function_hits),
        "variables": set(_VAR.findall(s)),
        "constants": len(_CONST.findall(s)),
        "pattern": _VAR.sub("VAR", s),
        "complexity": (n_pow + n_mul + n_div + n_add + n_sub) + len(function_hits) + best,
    }


def _jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    shared = 0
    for item in union:
        if item in a and item in b:
            shared += 1
    return shared / len(union)


def _ratio(v1: float, v2: float) -> float:
    if v1 == 0 and v2 == 0:
        return 1.0
    lo, hi = (v1, v2) if v1 <= v2 else (v2, v1)
    return lo / hi


def _pattern(p1: str, p2: str) -> float:
    if not p1 and not p2:
        return 1.0
    hits = 0
    for i in range(min(len(p1), len(p2))):
        if p1[i] == p2[i]:
            hits += 1
    return hits / max(len(p1), len(p2))


def oracle_form_similarity(skel1: str, skel2: str) -> float:
    f1, f2 = string_features(skel1), string_features(skel2)
    parts = [
        _jaccard(f1["operators"], f2["operators"]),
        _jaccard(f1["functions"], f2["functions"]),
        _jaccard(f1["variables"], f2["variables"]),
        _ratio(f1["constants"], f2["constants"]),
        _pattern(f1["pattern"], f2["pattern"]),
        _ratio(f1["complexity"], f2["complexity"]),
    ]
    value = sum(parts) / 6.0
    return min(1.0, max(0.0, value))
