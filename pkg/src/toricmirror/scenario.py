"""Scenario files: the single human-editable description of a run.

TOML in, TOML out.  Exact rationals are written as "p/q" strings so that
lattice data never passes through floats.  Ray and group indices are
1-based in files (matching the usual toric conventions) and 0-based in
memory.
"""

from __future__ import annotations

import importlib.resources
import io
import sys
from dataclasses import dataclass, field
from fractions import Fraction

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .cohomology import assemble_orbifold_ring, stanley_reisner_ring
from .gamma import KClass, gamma_env_for
from .lattice import ExtendedLattice, NefPartition, StackyFan
from .linalg import frac


class ScenarioError(ValueError):
    pass


def _fr(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    raise ScenarioError(f"expected an exact rational, got {x!r}")


def _fr_str(x):
    x = frac(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class Scenario:
    name: str
    rank: int
    rays: list
    cones: list                  # 0-based frozensets
    extended: list = field(default_factory=list)
    partition_groups: list = field(default_factory=list)  # 0-based
    sectors: list = field(default_factory=list)  # dicts with v, kind, ...
    alpha_coeffs: list = field(default_factory=list)
    alpha_q_exps: list = field(default_factory=list)
    bundles: dict = field(default_factory=dict)  # name -> [(sign, nvec)]
    q_bound: Fraction = Fraction(8)
    z_window: tuple = None
    cover_index: int = None
    tol: float = 1e-9
    quad_rel_tol: float = 1e-6
    osc_points: list = field(default_factory=list)  # rationals, per q coord
    grading: tuple = None
    nef_basis: list = None

    # -- construction -------------------------------------------------

    @classmethod
    def from_dict(cls, data):
        fan = data["fan"]
        rays = [tuple(int(x) for x in r) for r in fan["rays"]]
        cones = [frozenset(int(i) - 1 for i in c) for c in fan["cones"]]
        extended = [tuple(int(x) for x in r) for r in fan.get("extended", [])]
        part = data.get("partition", {})
        groups = [[int(i) - 1 for i in g] for g in part.get("groups", [])]
        sectors = []
        for sec in data.get("sector", []):
            entry = {"v": tuple(int(x) for x in sec["v"]),
                     "kind": sec.get("kind", "point"),
                     "stabilizer_order": int(sec.get("stabilizer_order", 1))}
            if "tangent_ages" in sec:
                entry["tangent_ages"] = [_fr(a) for a in sec["tangent_ages"]]
            sectors.append(entry)
        alpha = data.get("alpha", {})
        coeffs = [_fr(c) for c in alpha.get("coeffs", [])]
        q_exps = [tuple(_fr(x) for x in row) for row in alpha.get("q_exps", [])]
        bundles = {}
        for b in data.get("bundle", []):
            bundles[b["name"]] = [(int(s), tuple(int(x) for x in v))
                                  for s, v in b["summands"]]
        trunc = data.get("truncation", {})
        numeric = data.get("numeric", {})
        lattice = data.get("lattice", {})
        zw = trunc.get("z_window")
        return cls(
            name=data["name"],
            rank=int(data["rank"]),
            rays=rays, cones=cones, extended=extended,
            partition_groups=groups, sectors=sectors,
            alpha_coeffs=coeffs, alpha_q_exps=q_exps,
            bundles=bundles,
            q_bound=_fr(trunc.get("q_bound", 8)),
            z_window=(int(zw[0]), int(zw[1])) if zw else None,
            cover_index=int(trunc["cover_index"]) if "cover_index" in trunc else None,
            tol=float(numeric.get("tol", 1e-9)),
            quad_rel_tol=float(numeric.get("quad_rel_tol", 1e-6)),
            osc_points=[tuple(_fr(x) for x in pt)
                        for pt in numeric.get("osc_points", [])],
            grading=tuple(int(x) for x in lattice["grading"])
            if "grading" in lattice else None,
            nef_basis=[tuple(int(x) for x in p) for p in lattice["nef_basis"]]
            if "nef_basis" in lattice else None,
        )

    def to_dict(self):
        out = {"name": self.name, "rank": self.rank}
        out["fan"] = {
            "rays": [list(r) for r in self.rays],
            "cones": [sorted(i + 1 for i in c) for c in self.cones],
            "extended": [list(r) for r in self.extended],
        }
        out["partition"] = {"groups": [[i + 1 for i in g]
                                       for g in self.partition_groups]}
        if self.sectors:
            out["sector"] = []
            for sec in self.sectors:
                entry = {"v": list(sec["v"]), "kind": sec["kind"],
                         "stabilizer_order": sec["stabilizer_order"]}
                if "tangent_ages" in sec:
                    entry["tangent_ages"] = [_fr_str(a)
                                             for a in sec["tangent_ages"]]
                out["sector"].append(entry)
        out["alpha"] = {"coeffs": [_fr_str(c) for c in self.alpha_coeffs],
                        "q_exps": [[_fr_str(x) for x in row]
                                   for row in self.alpha_q_exps]}
        if self.bundles:
            out["bundle"] = [{"name": name,
                              "summands": [[s, list(v)] for s, v in summands]}
                             for name, summands in sorted(self.bundles.items())]
        trunc = {"q_bound": _fr_str(self.q_bound)}
        if self.z_window is not None:
            trunc["z_window"] = [self.z_window[0], self.z_window[1]]
        if self.cover_index is not None:
            trunc["cover_index"] = self.cover_index
        out["truncation"] = trunc
        numeric = {"tol": self.tol, "quad_rel_tol": self.quad_rel_tol}
        if self.osc_points:
            numeric["osc_points"] = [[_fr_str(x) for x in pt]
                                     for pt in self.osc_points]
        out["numeric"] = numeric
        lattice = {}
        if self.grading is not None:
            lattice["grading"] = list(self.grading)
        if self.nef_basis is not None:
            lattice["nef_basis"] = [list(p) for p in self.nef_basis]
        if lattice:
            out["lattice"] = lattice
        return out

    # -- build the working objects -------------------------------------

    def build(self):
        fan = StackyFan(self.rank, self.rays, self.cones, extended=self.extended)
        ext = ExtendedLattice(fan, nef_basis=self.nef_basis, grading=self.grading)
        presentations = {}
        for sec in self.sectors:
            entry = {"kind": sec["kind"],
                     "stabilizer_order": sec["stabilizer_order"]}
            if "tangent_ages" in sec:
                entry["tangent_ages"] = sec["tangent_ages"]
            presentations[tuple(sec["v"])] = entry
        ring_qq = assemble_orbifold_ring(fan, dict(presentations), scalar="QQ")
        ring_cc = assemble_orbifold_ring(fan, dict(presentations), scalar="CC")
        partition = NefPartition(fan, ext, self.partition_groups)
        bundles = {name: KClass(tuple((s, tuple(v)) for s, v in summands),
                                name=name)
                   for name, summands in self.bundles.items()}
        return BuiltScenario(scenario=self, fan=fan, ext=ext,
                             ring_qq=ring_qq, ring_cc=ring_cc,
                             partition=partition, bundles=bundles)

    @property
    def z_window_or_default(self):
        if self.z_window is not None:
            return self.z_window
        w = self.rank + 4
        return (-w, w)


@dataclass
class BuiltScenario:
    scenario: Scenario
    fan: StackyFan
    ext: ExtendedLattice
    ring_qq: object
    ring_cc: object
    partition: NefPartition
    bundles: dict

    def alpha(self):
        from .bside import AlphaAssignment
        sc = self.scenario
        if not sc.alpha_coeffs:
            raise ScenarioError(f"scenario {sc.name} has no alpha assignment")
        return AlphaAssignment(coeffs=list(sc.alpha_coeffs),
                               q_exps=[tuple(r) for r in sc.alpha_q_exps])

    def gamma_env(self):
        return gamma_env_for(self.ring_cc, self.fan,
                             classes=self.bundles.values())

    def cover_index(self):
        """Minimal e with e K_0 inside the integer kernel lattice."""
        if self.scenario.cover_index is not None:
            return self.scenario.cover_index
        import math
        e = 1
        zero = self.fan.box_by_v(tuple([0] * self.fan.n))
        for fd in self.ext.enumerate_degrees(zero, 2):
            for x in self.ext.coords(fd.mori_class):
                e = e * frac(x).denominator // math.gcd(e, frac(x).denominator)
        return e


# ---------------------------------------------------------------------------
# TOML emission (deterministic, restricted schema)
# ---------------------------------------------------------------------------


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ScenarioError(f"cannot serialize {v!r}")


def dumps_toml(data):
    """Emit the nested-dict scenario as TOML with stable ordering."""
    lines = []

    def emit_table(prefix, table):
        scalars = [(k, v) for k, v in table.items()
                   if not isinstance(v, dict)
                   and not (isinstance(v, list) and v and isinstance(v[0], dict))]
        subtables = [(k, v) for k, v in table.items() if isinstance(v, dict)]
        arrays = [(k, v) for k, v in table.items()
                  if isinstance(v, list) and v and isinstance(v[0], dict)]
        for k, v in scalars:
            lines.append(f"{k} = {_toml_value(v)}")
        for k, v in subtables:
            name = f"{prefix}.{k}" if prefix else k
            lines.append("")
            lines.append(f"[{name}]")
            emit_table(name, v)
        for k, rows in arrays:
            name = f"{prefix}.{k}" if prefix else k
            for row in rows:
                lines.append("")
                lines.append(f"[[{name}]]")
                emit_table(name, row)

    emit_table("", data)
    return "\n".join(lines) + "\n"


def loads_toml(text):
    return _toml.loads(text)


def load_scenario(path_or_text, is_text=False):
    if is_text:
        return Scenario.from_dict(loads_toml(path_or_text))
    with open(path_or_text, "rb") as fh:
        return Scenario.from_dict(_toml.load(fh))


def save_scenario(scenario: Scenario, path):
    with open(path, "w") as fh:
        fh.write(dumps_toml(scenario.to_dict()))


BUNDLED = ("p1", "p2", "p1xp1", "wp112-style", "cubic-p2", "quintic-p4")


def bundled_scenario(name) -> Scenario:
    if name not in BUNDLED:
        raise ScenarioError(f"unknown bundled scenario {name!r}; "
                            f"have {', '.join(BUNDLED)}")
    ref = importlib.resources.files("toricmirror").joinpath(
        f"scenarios/{name}.toml")
    return Scenario.from_dict(loads_toml(ref.read_text()))
