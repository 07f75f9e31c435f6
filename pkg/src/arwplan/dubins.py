"""Planar Dubins curves (closed form over the six words)."""

import math

TWO_PI = 2.0 * math.pi
WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")
ENDPOINT_TOL = 1e-6


def mod2pi(a):
    r = math.fmod(a, TWO_PI)
    return r + TWO_PI if r < 0.0 else r


def _word_params(word, a, b, d):
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    cab = math.cos(a - b)
    if word == "LSL":
        p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb)
        if p2 < 0.0:
            return None
        tmp = math.atan2(cb - ca, d + sa - sb)
        return mod2pi(-a + tmp), math.sqrt(p2), mod2pi(b - tmp)
    if word == "RSR":
        p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa)
        if p2 < 0.0:
            return None
        tmp = math.atan2(ca - cb, d - sa + sb)
        return mod2pi(a - tmp), math.sqrt(p2), mod2pi(-b + tmp)
    if word == "LSR":
        p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb)
        if p2 < 0.0:
            return None
        p = math.sqrt(p2)
        tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
        return mod2pi(-a + tmp), p, mod2pi(-b + tmp)
    if word == "RSL":
        p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb)
        if p2 < 0.0:
            return None
        p = math.sqrt(p2)
        tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
        return mod2pi(a - tmp), p, mod2pi(b - tmp)
    if word == "RLR":
        tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0
        if abs(tmp) > 1.0:
            return None
        p = mod2pi(TWO_PI - math.acos(tmp))
        t = mod2pi(a - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
        return t, p, mod2pi(a - b - t + p)
    if word == "LRL":
        tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0
        if abs(tmp) > 1.0:
            return None
        p = mod2pi(TWO_PI - math.acos(tmp))
        t = mod2pi(-a - math.atan2(ca - cb, d + sa - sb) + p / 2.0)
        return t, p, mod2pi(b - a - t + p)
    raise ValueError(word)


def step(x, y, h, kind, s, rho):
    """Advance pose (x, y, heading) by arc length ``s`` along a segment of ``kind``."""
    if kind == "S":
        return x + s * math.cos(h), y + s * math.sin(h), h
    sign = 1.0 if kind == "L" else -1.0
    dh = sign * s / rho
    # chord form keeps tiny arcs exact
    nx = x + sign * rho * (math.sin(h + dh) - math.sin(h))
    ny = y - sign * rho * (math.cos(h + dh) - math.cos(h))
    return nx, ny, h + dh


def endpoint(start, word, lengths, rho):
    x, y, h = start
    for kind, s in zip(word, lengths):
        x, y, h = step(x, y, h, kind, s, rho)
    return x, y, h


class DubinsPath:
    __slots__ = ("start", "word", "lengths", "rho")

    def __init__(self, start, word, lengths, rho):
        self.start = start
        self.word = word
        self.lengths = lengths
        self.rho = rho

    @property
    def length(self):
        return sum(self.lengths)

    def sample(self, s):
        """Pose (x, y, heading) at arc length ``s`` from the start."""
        x, y, h = self.start
        for kind, seg in zip(self.word, self.lengths):
            if s <= seg:
                return step(x, y, h, kind, s, self.rho)
            x, y, h = step(x, y, h, kind, seg, self.rho)
            s -= seg
        return x, y, h


def candidates(start, goal, rho):
    """All feasible words as DubinsPath objects whose endpoints check out."""
    x0, y0, h0 = start
    x1, y1, h1 = goal
    dx, dy = x1 - x0, y1 - y0
    d = math.hypot(dx, dy) / rho
    theta = mod2pi(math.atan2(dy, dx)) if d > 0.0 else 0.0
    a = mod2pi(h0 - theta)
    b = mod2pi(h1 - theta)
    out = []
    for word in WORDS:
        prm = _word_params(word, a, b, d)
        if prm is None:
            continue
        lengths = tuple(v * rho for v in prm)
        ex, ey, eh = endpoint(start, word, lengths, rho)
        tol = ENDPOINT_TOL * max(1.0, rho)
        if math.hypot(ex - x1, ey - y1) <= tol and abs(math.remainder(eh - h1, TWO_PI)) <= 1e-6:
            out.append(DubinsPath(start, word, lengths, rho))
    return out


def shortest(start, goal, rho):
    """Shortest Dubins path from (x, y, heading) to (x, y, heading), or None."""
    best = None
    for path in candidates(start, goal, rho):
        if best is None or path.length < best.length - 1e-12:
            best = path
    return best
