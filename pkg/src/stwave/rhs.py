"""Mini-grammar for right-hand-side specifications.

    spec   := kind ":" params
    params := pair { ";" pair }
    pair   := key "=" value | number
    value  := number | path            (path only for the keys named 'path')

Kinds and their parameters::

    const:c | const:c=C                      Density, f = c
    sine:w=W[;amp=A]   cosine:w=W[;amp=A]    Density, A sin(W t) / A cos(W t)
    poly:c0;c1;...                           Density, sum c_i t^i
    pointmass:w=W                            PointMass, v -> W v(0)
    samples:path=FILE                        Samples from a t,f CSV
    modal:k=K;const=C | ;sine=W | ;cosine=W [;amp=A] | ;path=FILE
                                             ModalDensity, g(t) sin(K pi x / L)
    initvel:k=K;amp=A                        InitialVelocity, v0 = A sin(K pi x / L)
    griddensity:path=FILE                    GridDensity from a sample matrix CSV
"""

from __future__ import annotations

import math
import re

from .errors import InvalidArgumentError, RhsSyntaxError
from .spacetime import GridDensity, InitialVelocity, ModalDensity
from .temporal import Density, PointMass, Samples

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_PATH = re.compile(r"[^;]+")

# kind -> (allowed keys, whether bare numbers are allowed)
_KINDS = {
    "const": ({"c"}, True),
    "sine": ({"w", "amp"}, False),
    "cosine": ({"w", "amp"}, False),
    "poly": (set(), True),
    "pointmass": ({"w"}, False),
    "samples": ({"path"}, False),
    "modal": ({"k", "const", "sine", "cosine", "amp", "path"}, False),
    "initvel": ({"k", "amp"}, False),
    "griddensity": ({"path"}, False),
}
_PATH_KEYS = {"path"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def offset(self, pos: int | None = None) -> int:
        return len(self.text[: self.pos if pos is None else pos].encode("utf-8"))

    def fail(self, message: str, expected=(), pos: int | None = None):
        raise RhsSyntaxError(message, self.text, self.offset(pos), expected)

    def match(self, regex):
        m = regex.match(self.text, self.pos)
        if m is None:
            return None
        self.pos = m.end()
        return m.group(0)

    def literal(self, ch: str) -> bool:
        if self.text.startswith(ch, self.pos):
            self.pos += len(ch)
            return True
        return False

    def parse(self):
        kind = self.match(_IDENT)
        if kind is None:
            self.fail("expected a kind", sorted(_KINDS))
        if kind not in _KINDS:
            self.fail(f"unknown kind {kind!r}", sorted(_KINDS), self.pos - len(kind))
        if not self.literal(":"):
            self.fail("expected ':' after kind", (":",))
        keys, bare_ok = _KINDS[kind]
        pairs, bare = [], []
        while True:
            start = self.pos
            ident = _IDENT.match(self.text, self.pos)
            if ident and self.text.startswith("=", ident.end()):
                key = ident.group(0)
                if key not in keys:
                    self.fail(f"unknown key {key!r} for kind {kind!r}", sorted(keys), start)
                if any(k == key for k, _, _ in pairs):
                    self.fail(f"duplicate key {key!r}", (), start)
                self.pos = ident.end() + 1
                vstart = self.pos
                if key in _PATH_KEYS:
                    value = self.match(_PATH)
                    if value is None:
                        self.fail("expected a file path", ("path",))
                    value = value.strip()
                else:
                    value = self._number()
                pairs.append((key, value, vstart))
            else:
                if not bare_ok:
                    self.fail("expected key=value", sorted(f"{k}=" for k in keys))
                bare.append((self._number(), start))
            if self.pos == len(self.text):
                break
            if not self.literal(";"):
                self.fail("expected ';' or end of input", (";", "<end>"))
        return kind, pairs, bare

    def _number(self) -> float:
        start = self.pos
        tok = self.match(_NUMBER)
        if tok is None:
            self.fail("expected a number", ("number",))
        value = float(tok)
        if not math.isfinite(value):
            self.fail("number out of range", ("finite number",), start)
        return value


def _get(parser, pairs, key, default=None, required=False):
    for k, v, pos in pairs:
        if k == key:
            return v, pos
    if required:
        parser.fail(f"missing required key {key!r}", (f"{key}=",))
    return default, None


def _mode_index(parser, pairs):
    k, pos = _get(parser, pairs, "k", required=True)
    if k != int(k) or k < 1:
        parser.fail(f"mode index must be a positive integer, got {k!r}", ("positive integer",), pos)
    return int(k)


def _load(parser, factory, path, pos):
    try:
        return factory(path)
    except InvalidArgumentError as exc:
        parser.fail(str(exc), (), pos)


def parse_rhs_spec(text: str):
    """Parse a right-hand-side string into a temporal or wave spec object.

    Raises
    ------
    RhsSyntaxError
        With the byte offset of the failure and the tokens expected there.
    """
    if not isinstance(text, str):
        raise InvalidArgumentError("rhs spec must be a string")
    p = _Parser(text)
    kind, pairs, bare = p.parse()

    if kind == "const":
        c, _ = _get(p, pairs, "c")
        if c is not None and bare:
            p.fail("give the constant once", (), bare[0][1])
        if c is None:
            if len(bare) != 1:
                p.fail("const takes exactly one value", ("number",), bare[1][1] if bare else p.pos)
            c = bare[0][0]
        return Density.const(c)
    if kind in ("sine", "cosine"):
        w, _ = _get(p, pairs, "w", required=True)
        amp, _ = _get(p, pairs, "amp", 1.0)
        return Density.sine(w, amp) if kind == "sine" else Density.cosine(w, amp)
    if kind == "poly":
        if not bare:
            p.fail("poly needs at least one coefficient", ("number",))
        return Density.poly([v for v, _ in bare])
    if kind == "pointmass":
        w, _ = _get(p, pairs, "w", required=True)
        return PointMass(w)
    if kind == "samples":
        path, pos = _get(p, pairs, "path", required=True)
        return _load(p, Samples, path, pos)
    if kind == "griddensity":
        path, pos = _get(p, pairs, "path", required=True)
        return _load(p, GridDensity.from_csv, path, pos)
    if kind == "initvel":
        k = _mode_index(p, pairs)
        amp, _ = _get(p, pairs, "amp", required=True)
        return InitialVelocity(k, amp)
    # modal
    k = _mode_index(p, pairs)
    profiles = [(key, v, pos) for key, v, pos in pairs if key in ("const", "sine", "cosine", "path")]
    if len(profiles) != 1:
        # point at the second profile's key, not its value
        where = profiles[1][2] - len(profiles[1][0]) - 1 if len(profiles) > 1 else p.pos
        p.fail("modal needs exactly one temporal profile", ("const=", "sine=", "cosine=", "path="), where)
    key, v, pos = profiles[0]
    amp, apos = _get(p, pairs, "amp", 1.0)
    if key in ("const", "path") and apos is not None:
        p.fail(f"amp does not apply to {key}", (), apos)
    if key == "const":
        g = Density.const(v)
    elif key == "sine":
        g = Density.sine(v, amp)
    elif key == "cosine":
        g = Density.cosine(v, amp)
    else:
        g = _load(p, Samples, v, pos)
    return ModalDensity(k, g)


def format_rhs_spec(spec) -> str:
    """Inverse of parse_rhs_spec for the numeric kinds."""
    r = repr
    if isinstance(spec, PointMass):
        return f"pointmass:w={r(spec.weight)}"
    if isinstance(spec, InitialVelocity):
        return f"initvel:k={spec.k};amp={r(spec.amplitude)}"
    if isinstance(spec, Samples):
        return f"samples:path={spec.path}"
    if isinstance(spec, GridDensity) and spec.path is not None:
        return f"griddensity:path={spec.path}"
    if isinstance(spec, Density):
        p = spec.params
        if spec.kind == "const":
            return f"const:{r(p[0])}"
        if spec.kind in ("sine", "cosine"):
            return f"{spec.kind}:w={r(p[0])};amp={r(p[1])}"
        if spec.kind == "poly":
            return "poly:" + ";".join(r(c) for c in p)
    if isinstance(spec, ModalDensity):
        g = spec.density
        if isinstance(g, Samples):
            return f"modal:k={spec.k};path={g.path}"
        if g.kind == "const":
            return f"modal:k={spec.k};const={r(g.params[0])}"
        if g.kind in ("sine", "cosine"):
            return f"modal:k={spec.k};{g.kind}={r(g.params[0])};amp={r(g.params[1])}"
    raise InvalidArgumentError(f"spec {spec!r} has no string form")
