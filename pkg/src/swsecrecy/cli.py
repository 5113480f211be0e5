"""Command-line driver: config ingestion, dispatch, reproducible output.

A run is described by one JSON config document (variables, a flat
row-major probability list, role assignments, options).  Every command
emits either delimiter-separated tables with a header row, or a single
structured JSON document carrying a manifest (config digest, seed,
artifact version) from which the run can be reproduced bit-identically.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .auxsearch import (
    SearchBudget,
    maximize_delta_uncoded,
    maximize_multi_tap,
    trace_inner_frontier,
)
from .binsim import COUNT_KEYS, plan_scheme, run_experiment
from .errors import (
    InputError,
    InvariantViolation,
    ParseError,
    PreconditionError,
    RoleError,
    TooLarge,
    ValidationError,
)
from .probcore import (
    Alphabet,
    Channel,
    JointDistribution,
    attach_channel,
    build_joint,
    conditional,
    constant_channel,
    degradedness_test,
    entropy,
    marginal,
    markov_residual,
    mutual_information,
)
from .regions import (
    KINDS,
    RegionDescriptor,
    corollary1_region,
    corollary2_region,
    corollary3_region,
    corollary4_region,
    corollary5_region,
    eve_si_regions,
    lemma1_region,
    outer_overapprox,
)

ROLE_ALICE = "alice-source"
ROLE_CHARLIE = "charlie-source"
ROLE_BOB = "bob-side-info"
ROLE_EVE = "eve-side-info"
ROLES = (ROLE_ALICE, ROLE_CHARLIE, ROLE_BOB, ROLE_EVE)

#: option keys accepted in the config document; anything else is a typo
OPTION_KEYS = (
    "margins", "delta", "card-u", "restarts", "iterations",
    "grid-resolution", "seed", "trials", "block-lengths",
    "ra-grid", "rc-grid", "key-rate", "override-exponents",
)

_SANDWICH_TOL = 1e-9

#: residual below which a required Markov chain is reported as holding
PIN_RESIDUAL_TOL = 1e-10


# ---- config --------------------------------------------------------------

@dataclass(frozen=True)
class SourceSpec:
    """Declared variables, their joint probability list, and role map."""

    variables: tuple[tuple[str, tuple[str, ...]], ...]
    distribution: tuple[float, ...]
    roles: dict[str, str]

    @property
    def alice(self) -> str:
        return next(n for n, r in self.roles.items() if r == ROLE_ALICE)

    @property
    def charlie(self) -> str | None:
        return next((n for n, r in self.roles.items() if r == ROLE_CHARLIE),
                    None)

    @property
    def bobs(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables
                     if self.roles[n] == ROLE_BOB)

    @property
    def eves(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables
                     if self.roles[n] == ROLE_EVE)

    def joint(self) -> JointDistribution:
        axes = [(n, Alphabet(n, syms)) for n, syms in self.variables]
        return build_joint(axes, np.asarray(self.distribution))


@dataclass(frozen=True)
class ResolvedConfig:
    """Validated spec plus options with every default filled in."""

    spec: SourceSpec
    options: dict

    def document(self) -> dict:
        return {
            "variables": [{"name": n, "symbols": list(s)}
                          for n, s in self.spec.variables],
            "distribution": list(self.spec.distribution),
            "roles": dict(self.spec.roles),
            "options": _plain(self.options),
        }

    def digest(self) -> str:
        blob = json.dumps(self.document(), sort_keys=True,
                          separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Provenance block emitted with every output document."""

    command: str
    config_digest: str
    seed: int
    artifact_version: str
    timestamp: str | None

    def document(self) -> dict:
        return {
            "command": self.command,
            "config-digest": self.config_digest,
            "seed": self.seed,
            "artifact-version": self.artifact_version,
            "timestamp": self.timestamp,
        }


def _timestamp() -> str | None:
    # wall clock would break byte-identical re-runs; only an explicit
    # SOURCE_DATE_EPOCH is honored
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return None
    return datetime.datetime.fromtimestamp(
        int(epoch), tz=datetime.timezone.utc).isoformat()


def _require(obj: dict, key: str, kind: type, where: str):
    if key not in obj:
        raise ValidationError(f"{where}: missing required key {key!r}")
    val = obj[key]
    if not isinstance(val, kind):
        raise ValidationError(
            f"{where}: key {key!r} must be a {kind.__name__}")
    return val


def _number_list(val, where: str) -> list[float]:
    if (not isinstance(val, list) or not val
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                       for x in val)):
        raise ValidationError(f"{where}: expected a non-empty number list")
    return [float(x) for x in val]


def _int_list(val, where: str) -> list[int]:
    if (not isinstance(val, list) or not val
            or not all(isinstance(x, int) and not isinstance(x, bool)
                       for x in val)):
        raise ValidationError(f"{where}: expected a non-empty integer list")
    return list(val)


def parse_config(path: str) -> ResolvedConfig:
    """Load, validate, and resolve a config document from ``path``.

    Defaults filled: margins 0.2 each, window width 0.15, preprocessing
    cardinality source-alphabet + 2, 32 restarts, 500 iterations, seed 0,
    2000 trials, block lengths (8, 12), and rate grids spanning the
    source and helper entropies.  The resolved document round-trips:
    parsing its serialization yields an identical digest.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path!r}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ValidationError("config root must be an object")
    extra = set(doc) - {"variables", "distribution", "roles", "options"}
    if extra:
        raise ValidationError(f"unknown top-level keys {sorted(extra)}")

    raw_vars = _require(doc, "variables", list, "config")
    if not raw_vars:
        raise ValidationError("variables: at least one variable is required")
    variables = []
    for i, entry in enumerate(raw_vars):
        if not isinstance(entry, dict):
            raise ValidationError(f"variables[{i}]: expected an object")
        name = _require(entry, "name", str, f"variables[{i}]")
        syms = _require(entry, "symbols", list, f"variables[{i}]")
        if not syms or not all(isinstance(s, str) for s in syms):
            raise ValidationError(
                f"variables[{i}]: symbols must be a non-empty string list")
        variables.append((name, tuple(syms)))
    names = [n for n, _ in variables]
    if len(set(names)) != len(names):
        raise ValidationError("variables: duplicate variable names")

    dist = _number_list(_require(doc, "distribution", list, "config"),
                        "distribution")
    expected = int(np.prod([len(s) for _, s in variables]))
    if len(dist) != expected:
        raise ValidationError(
            f"distribution: expected {expected} entries for the declared "
            f"alphabets, got {len(dist)}")

    roles = _require(doc, "roles", dict, "config")
    for var, role in roles.items():
        if var not in names:
            raise RoleError(f"role assigned to undeclared variable {var!r}")
        if role not in ROLES:
            raise RoleError(f"unknown role {role!r} for variable {var!r}")
    for var in names:
        if var not in roles:
            raise RoleError(f"variable {var!r} has no role")
    alices = [n for n in names if roles[n] == ROLE_ALICE]
    if len(alices) != 1:
        raise RoleError(f"exactly one {ROLE_ALICE} required, got {len(alices)}")
    charlies = [n for n in names if roles[n] == ROLE_CHARLIE]
    if len(charlies) > 1:
        raise RoleError(f"at most one {ROLE_CHARLIE} allowed, got "
                        f"{len(charlies)}")

    spec = SourceSpec(variables=tuple(variables), distribution=tuple(dist),
                      roles={n: roles[n] for n in names})
    j = spec.joint()  # validates mass; raises on malformed input

    opts = doc.get("options", {})
    if not isinstance(opts, dict):
        raise ValidationError("options must be an object")
    unknown = set(opts) - set(OPTION_KEYS)
    if unknown:
        raise ValidationError(f"unknown option keys {sorted(unknown)}")
    options = dict(opts)

    margins = _number_list(options.get("margins", [0.2] * 4), "options.margins")
    if len(margins) != 4 or any(m <= 0 for m in margins):
        raise ValidationError("options.margins: need 4 positive numbers")
    options["margins"] = margins
    delta = options.get("delta", 0.15)
    if not isinstance(delta, (int, float)) or not 0 < delta <= 1:
        raise ValidationError("options.delta: need a number in (0, 1]")
    options["delta"] = float(delta)
    a_size = j.alphabet(spec.alice).size
    card = options.get("card-u", a_size + 2)
    if not isinstance(card, int) or isinstance(card, bool) or card < 1:
        raise ValidationError("options.card-u: need a positive integer")
    options["card-u"] = card
    for key, default, least in (("restarts", 32, 1), ("iterations", 500, 0),
                                ("trials", 2000, 1), ("seed", 0, 0)):
        val = options.get(key, default)
        if not isinstance(val, int) or isinstance(val, bool) or val < least:
            raise ValidationError(f"options.{key}: need an integer >= {least}")
        options[key] = val
    res = options.get("grid-resolution", 0.05)
    if not isinstance(res, (int, float)) or not 0 < res <= 0.5:
        raise ValidationError(
            "options.grid-resolution: need a number in (0, 0.5]")
    options["grid-resolution"] = float(res)
    options["block-lengths"] = _int_list(
        options.get("block-lengths", [8, 12]), "options.block-lengths")
    if any(n < 1 for n in options["block-lengths"]):
        raise ValidationError("options.block-lengths: lengths must be >= 1")

    h_a = entropy(j, spec.alice)
    span_c = entropy(j, spec.charlie) if spec.charlie else h_a
    options["ra-grid"] = _number_list(
        options.get("ra-grid", [i * h_a / 4 for i in range(5)]),
        "options.ra-grid")
    options["rc-grid"] = _number_list(
        options.get("rc-grid", [i * span_c / 4 for i in range(5)]),
        "options.rc-grid")

    if "key-rate" in options:
        kr = options["key-rate"]
        if not isinstance(kr, (int, float)) or kr < 0:
            raise ValidationError("options.key-rate: need a number >= 0")
        options["key-rate"] = float(kr)
    if "override-exponents" in options:
        ov = options["override-exponents"]
        if not isinstance(ov, dict):
            raise ValidationError("options.override-exponents: need an object")
        for k, v in ov.items():
            if k not in COUNT_KEYS:
                raise ValidationError(
                    f"options.override-exponents: unknown count {k!r}")
            if not isinstance(v, (int, float)) or v < 0:
                raise ValidationError(
                    f"options.override-exponents[{k!r}]: need a number >= 0")
        options["override-exponents"] = {k: float(v) for k, v in ov.items()}

    ordered = {k: options[k] for k in OPTION_KEYS if k in options}
    return ResolvedConfig(spec=spec, options=ordered)


# ---- shared assembly -----------------------------------------------------

def _plain(value):
    """Recursively convert numpy scalars/arrays so json can emit them."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6f}"
    if value is None:
        return ""
    return str(value)


def _render_tables(manifest: RunManifest, tables) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    buf.write("# table: manifest\n")
    writer.writerow(["field", "value"])
    for k, v in manifest.document().items():
        writer.writerow([k, "" if v is None else str(v)])
    for name, cols, rows in tables:
        buf.write(f"\n# table: {name}\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _render_structured(manifest: RunManifest, rc: ResolvedConfig,
                       results: dict) -> str:
    doc = {
        "manifest": manifest.document(),
        "resolved-config": rc.document(),
        "results": _plain(results),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _descriptor_doc(desc: RegionDescriptor) -> dict:
    doc = {
        "kind": desc.kind,
        "semantics": desc.semantics,
        "constants": dict(desc.constants),
    }
    if desc.per_receiver:
        doc["per-receiver"] = [dict(p) for p in desc.per_receiver]
    if desc.aux_witness:
        doc["aux-witness"] = [_channel_doc(ch) for ch in desc.aux_witness]
    return doc


def _channel_doc(ch: Channel) -> dict:
    return {
        "from": ch.from_name,
        "to": ch.to_name,
        "symbols": list(ch.to_alphabet.symbols),
        "rows": ch.matrix.tolist(),
    }


def _fresh(base: str, taken) -> str:
    name = base
    k = 0
    while name in taken:
        k += 1
        name = f"{base}{k}"
    return name


def _with_tap(j: JointDistribution, a: str):
    """Attach a constant (uninformative) tap; returns (joint, tap name)."""
    taken = [n for n, _ in j.axes]
    e = _fresh("E", taken)
    return attach_channel(j, constant_channel((a, j.alphabet(a)), e), a), e


def _single(names, what: str) -> str:
    if len(names) != 1:
        raise RoleError(f"this command needs exactly one {what}, got "
                        f"{len(names)}")
    return names[0]


def _need_charlie(spec: SourceSpec) -> str:
    if spec.charlie is None:
        raise RoleError(f"this command needs a {ROLE_CHARLIE} variable")
    return spec.charlie


def _ace_joint(rc: ResolvedConfig):
    """Marginal (source, helper, tap) joint; tap constant when undeclared."""
    spec = rc.spec
    a = spec.alice
    c = _need_charlie(spec)
    j = spec.joint()
    if spec.eves:
        e = _single(spec.eves, f"{ROLE_EVE} variable")
        return marginal(j, (a, c, e)), a, c, e
    j, e = _with_tap(j, a)
    return marginal(j, (a, c, e)), a, c, e


def _budget(rc: ResolvedConfig, seed: int) -> SearchBudget:
    o = rc.options
    return SearchBudget(restarts=o["restarts"], iterations=o["iterations"],
                        grid_resolution=o["grid-resolution"], seed=seed)


# ---- commands ------------------------------------------------------------

def cmd_info(rc: ResolvedConfig, seed: int):
    del seed
    spec = rc.spec
    j = spec.joint()
    a = spec.alice
    rows = [(f"H({a})", entropy(j, a))]
    for name, _ in spec.variables:
        if name == a:
            continue
        rows.append((f"H({name})", entropy(j, name)))
        rows.append((f"H({a}|{name})", entropy(j, a, name)))
        rows.append((f"I({a};{name})", mutual_information(j, a, name)))
    if spec.charlie:
        rows.append((f"H({a},{spec.charlie})",
                     entropy(j, (a, spec.charlie))))
    tables = [("measures", ["name", "bits"], [list(r) for r in rows])]
    results = {"measures": [{"name": n, "bits": v} for n, v in rows]}
    plot = {"figure": "measures", "rows": rows}
    return tables, results, plot


def _search_u(rc: ResolvedConfig, j, a, b, e, seed: int):
    got = maximize_delta_uncoded(j, card_u=rc.options["card-u"],
                                 budget=_budget(rc, seed), a=a, b=b, e=e)
    return got.aux


def cmd_region(rc: ResolvedConfig, kind: str, seed: int):
    spec = rc.spec
    a = spec.alice

    if kind in ("theorem1-inner", "theorem1-outer-overapprox"):
        return _region_frontier(rc, kind, seed)

    j = spec.joint()
    if kind == "corollary1":
        desc = corollary1_region(j, a=a, c=_need_charlie(spec))
    elif kind == "corollary2":
        b = _single(spec.bobs, f"{ROLE_BOB} variable")
        e = _single(spec.eves, f"{ROLE_EVE} variable")
        desc = corollary2_region(j, _search_u(rc, j, a, b, e, seed),
                                 a=a, b=b, e=e)
    elif kind == "corollary3":
        if not spec.bobs:
            raise RoleError(f"corollary3 needs {ROLE_BOB} variables")
        e = _single(spec.eves, f"{ROLE_EVE} variable")
        desc = corollary3_region(j, spec.bobs, a=a, e=e)
    elif kind == "corollary4":
        if not spec.bobs:
            raise RoleError(f"corollary4 needs {ROLE_BOB} variables")
        e = _single(spec.eves, f"{ROLE_EVE} variable")
        u = _search_u(rc, j, a, spec.bobs[-1], e, seed)
        desc = corollary4_region(j, spec.bobs, u, a=a, e=e)
    elif kind == "corollary5":
        b = _single(spec.bobs, f"{ROLE_BOB} variable")
        if not spec.eves:
            raise RoleError(f"corollary5 needs {ROLE_EVE} variables")
        got = maximize_multi_tap(j, spec.eves, card_u=rc.options["card-u"],
                                 budget=_budget(rc, seed), a=a, b=b)
        desc = corollary5_region(j, spec.eves, got.aux, a=a, b=b)
    elif kind == "lemma1":
        if "key-rate" in rc.options:
            h_b = rc.options["key-rate"]
        elif len(spec.bobs) == 1:
            h_b = entropy(j, spec.bobs[0])
        else:
            raise ValidationError(
                "lemma1 needs a key-rate option or exactly one "
                f"{ROLE_BOB} variable")
        if spec.eves:
            e = _single(spec.eves, f"{ROLE_EVE} variable")
        else:
            j, e = _with_tap(j, a)
        desc = lemma1_region(j, h_b, a=a, e=e)
    elif kind in ("eve-si-at-bob", "eve-si-at-alice"):
        b = _single(spec.bobs, f"{ROLE_BOB} variable")
        e = _single(spec.eves, f"{ROLE_EVE} variable")
        at_bob, at_alice = eve_si_regions(j, a=a, b=b, e=e)
        desc = at_bob if kind == "eve-si-at-bob" else at_alice
    else:
        raise ValidationError(f"unknown region kind {kind!r}")

    tables = [_constants_table(desc.constants),
              _descriptor_table(desc)]
    for i, per in enumerate(desc.per_receiver):
        tables.insert(1 + i, (f"per-receiver-{i + 1}",
                              ["name", "bits"],
                              [[k, v] for k, v in per.items()]))
    results = {"descriptor": _descriptor_doc(desc)}
    plot = {"figure": "constants", "kind": kind,
            "constants": desc.constants}
    return tables, results, plot


def _constants_table(constants: dict):
    return ("constants", ["name", "bits"],
            [[k, v] for k, v in constants.items()])


def _descriptor_table(desc: RegionDescriptor):
    return ("descriptor", ["field", "value"],
            [["kind", desc.kind], ["semantics", desc.semantics]])


def _frontier_rows(samples):
    return [[p.r_a, p.r_c, p.delta, tag]
            for p, tag in zip(samples.points, samples.provenance)]


def _region_frontier(rc: ResolvedConfig, kind: str, seed: int):
    j, a, c, e = _ace_joint(rc)
    ra_grid = rc.options["ra-grid"]
    rc_grid = rc.options["rc-grid"]
    cols = ["r_a", "r_c", "delta", "provenance"]
    if kind == "theorem1-inner":
        trace = trace_inner_frontier(j, ra_grid, rc_grid,
                                     card_u=rc.options["card-u"],
                                     budget=_budget(rc, seed),
                                     a=a, c=c, e=e)
        desc = RegionDescriptor(kind=kind, constants=trace.constants)
        raw, convex = trace.raw, trace.convex
        cells = [[cell.r_a, cell.r_c, cell.feasible, cell.delta,
                  cell.floor, cell.floor_ok, cell.provenance]
                 for cell in trace.cells]
        tables = [
            _constants_table(trace.constants),
            ("frontier-raw", cols, _frontier_rows(raw)),
            ("frontier-convex", cols, _frontier_rows(convex)),
            ("grid-cells",
             ["r_a", "r_c", "feasible", "delta", "floor", "floor_ok",
              "provenance"], cells),
            _descriptor_table(desc),
        ]
        results = {
            "descriptor": _descriptor_doc(desc),
            "frontier-raw": _frontier_docs(raw),
            "frontier-convex": _frontier_docs(convex),
            "grid-cells": [
                {"r_a": cell.r_a, "r_c": cell.r_c,
                 "feasible": cell.feasible, "delta": cell.delta,
                 "floor": cell.floor, "floor-ok": cell.floor_ok,
                 "provenance": cell.provenance}
                for cell in trace.cells],
        }
        plot = {"figure": "frontier", "kind": kind,
                "raw": [(p.r_a, p.r_c, p.delta) for p in raw.points],
                "convex": [(p.r_a, p.r_c, p.delta) for p in convex.points]}
        return tables, results, plot

    rows = []
    desc = None
    for r_a in ra_grid:
        for r_c in rc_grid:
            got = outer_overapprox(j, r_a, r_c, a=a, c=c, e=e)
            desc = got.descriptor
            tag = "closed-form" if got.feasible else "infeasible"
            rows.append([r_a, r_c, got.delta_upper, tag])
    tables = [
        _constants_table(desc.constants),
        ("frontier", cols, rows),
        _descriptor_table(desc),
    ]
    results = {
        "descriptor": _descriptor_doc(desc),
        "frontier": [
            {"r_a": r[0], "r_c": r[1], "delta": r[2], "provenance": r[3]}
            for r in rows],
    }
    plot = {"figure": "frontier", "kind": kind,
            "raw": [(r[0], r[1], r[2]) for r in rows if r[3] != "infeasible"],
            "convex": []}
    return tables, results, plot


def _frontier_docs(samples):
    return [{"r_a": p.r_a, "r_c": p.r_c, "delta": p.delta, "provenance": tag}
            for p, tag in zip(samples.points, samples.provenance)]


def cmd_simulate(rc: ResolvedConfig, seed: int):
    j, a, c, e = _ace_joint(rc)
    o = rc.options
    taken = (a, c, e)
    u = constant_channel((a, j.alphabet(a)), _fresh("U", taken))
    c_alpha = j.alphabet(c)
    v = Channel(c, c_alpha, _fresh("V", taken),
                Alphabet(_fresh("V", taken),
                         tuple(f"v{i}" for i in range(c_alpha.size))),
                np.eye(c_alpha.size))
    cols = ["n", "p_e", "wilson_lo", "wilson_hi", "equivocation", "mode",
            "theory_floor", "theory_target"]
    rows = []
    docs = []
    for n in o["block-lengths"]:
        try:
            cfg = plan_scheme(
                j, (u, v), n=n, margins=tuple(o["margins"]),
                delta=o["delta"], seed=seed, a=a, c=c, e=e,
                override_exponents=o.get("override-exponents"))
        except TooLarge as exc:
            raise TooLarge(f"block length {n}: {exc}") from exc
        rep = run_experiment(cfg, o["trials"])
        floor = max(rep.theory["H(A|E)"] - rep.theory["rate-alice"], 0.0)
        row = [n, rep.error.p_e, rep.error.wilson_low, rep.error.wilson_high,
               rep.equivocation.per_symbol, rep.equivocation.mode,
               floor, rep.theory["delta-target"]]
        rows.append(row)
        docs.append({
            "n": n,
            "p_e": rep.error.p_e,
            "wilson-lo": rep.error.wilson_low,
            "wilson-hi": rep.error.wilson_high,
            "errors": rep.error.errors,
            "trials": rep.error.trials,
            "breakdown": dict(rep.error.breakdown),
            "equivocation": rep.equivocation.per_symbol,
            "mode": rep.equivocation.mode,
            "message-rate": rep.equivocation.message_rate_alice,
            "theory-floor": floor,
            "theory-target": rep.theory["delta-target"],
            "counts": dict(cfg.counts),
        })
    tables = [("simulation", cols, rows)]
    results = {"simulation": docs}
    plot = {"figure": "simulation", "rows": rows}
    return tables, results, plot


def cmd_check(rc: ResolvedConfig, which: str, seed: int):
    """Run one structural check; returns tables, results, plot, breach."""
    if which == "degraded":
        return _check_degraded(rc)
    if which == "markov":
        return _check_markov(rc)
    return _check_sandwich(rc, seed)


def _check_degraded(rc: ResolvedConfig):
    spec = rc.spec
    a = spec.alice
    b = _single(spec.bobs, f"{ROLE_BOB} variable")
    e = _single(spec.eves, f"{ROLE_EVE} variable")
    j = spec.joint()
    ch_b = conditional(j, b, (a,)).as_channel()
    ch_e = conditional(j, e, (a,)).as_channel()
    got = degradedness_test(ch_b, ch_e)
    if got.witness is not None:
        blob = json.dumps(got.witness.matrix.tolist()).encode()
        digest = hashlib.sha256(blob).hexdigest()
    else:
        digest = ""
    tables = [("degraded", ["verdict", "residual", "witness_digest"],
               [["feasible" if got.feasible else "infeasible",
                 got.residual, digest]])]
    results = {"degraded": {
        "feasible": got.feasible,
        "residual": got.residual,
        "witness-digest": digest,
        "witness": _channel_doc(got.witness) if got.witness else None,
    }}
    plot = {"figure": "residuals",
            "rows": [(f"degrade({b}->{e})", got.residual)]}
    return tables, results, plot, None


def _check_markov(rc: ResolvedConfig):
    spec = rc.spec
    a = spec.alice
    if not spec.bobs:
        raise RoleError(f"the markov check needs {ROLE_BOB} variables")
    j = spec.joint()
    rows = []
    if spec.eves:
        e = _single(spec.eves, f"{ROLE_EVE} variable")
        for b in spec.bobs:
            rows.append([f"{a}-{b}-{e}", markov_residual(j, a, b, e)])
    for left, right in zip(spec.bobs, spec.bobs[1:]):
        rows.append([f"{a}-{left}-{right}",
                     markov_residual(j, a, left, right)])
    if not rows:
        raise RoleError(
            f"the markov check needs a {ROLE_EVE} variable or two "
            f"{ROLE_BOB} variables")
    table_rows = [[chain, res, res <= PIN_RESIDUAL_TOL]
                  for chain, res in rows]
    tables = [("markov", ["chain", "residual_bits", "holds"], table_rows)]
    results = {"markov": [
        {"chain": chain, "residual-bits": res,
         "holds": res <= PIN_RESIDUAL_TOL}
        for chain, res in rows]}
    plot = {"figure": "residuals", "rows": [tuple(r) for r in rows]}
    return tables, results, plot, None


def _check_sandwich(rc: ResolvedConfig, seed: int):
    j, a, c, e = _ace_joint(rc)
    trace = trace_inner_frontier(j, rc.options["ra-grid"],
                                 rc.options["rc-grid"],
                                 card_u=rc.options["card-u"],
                                 budget=_budget(rc, seed), a=a, c=c, e=e)
    rows = []
    worst = 0.0
    for cell in trace.cells:
        if not cell.feasible:
            continue
        outer = outer_overapprox(j, cell.r_a, cell.r_c, a=a, c=c, e=e)
        gap = cell.delta - outer.delta_upper
        worst = max(worst, gap)
        rows.append([cell.r_a, cell.r_c, cell.delta, outer.delta_upper, gap])
    ok = worst <= _SANDWICH_TOL
    tables = [
        ("sandwich", ["r_a", "r_c", "inner", "outer", "gap"], rows),
        ("verdict", ["max_violation", "ok"], [[worst, ok]]),
    ]
    results = {"sandwich": {
        "points": [{"r_a": r[0], "r_c": r[1], "inner": r[2], "outer": r[3],
                    "gap": r[4]} for r in rows],
        "max-violation": worst,
        "ok": ok,
    }}
    plot = {"figure": "sandwich", "rows": rows}
    breach = None
    if not ok:
        breach = InvariantViolation(
            f"inner bound exceeds the outer bound by {worst:.3e} bits")
    return tables, results, plot, breach


# ---- entry point ---------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="path to the JSON config document")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--out", default=None,
                        help="write output here instead of standard output")
    common.add_argument("--format", choices=("table", "structured"),
                        default="table",
                        help="delimited tables or one JSON document")
    common.add_argument("--plot", metavar="DIR", default=None,
                        help="also render figures into this directory")
    parser = argparse.ArgumentParser(
        prog="swsecrecy",
        description="compression-equivocation rate regions and a "
                    "random-binning simulator for finite sources")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("info", parents=[common],
                   help="information measures of the declared source")
    rp = sub.add_parser("region", parents=[common],
                        help="constants and frontier of one rate region")
    rp.add_argument("kind", choices=KINDS)
    sub.add_parser("simulate", parents=[common],
                   help="run the binning scheme at each block length")
    cp = sub.add_parser("check", parents=[common],
                        help="structural checks on the declared source")
    cp.add_argument("which", choices=("degraded", "markov", "sandwich"))
    return parser


def _dispatch(args, rc: ResolvedConfig, seed: int):
    if args.command == "info":
        return "info", *cmd_info(rc, seed), None
    if args.command == "region":
        t, r, p = cmd_region(rc, args.kind, seed)
        return f"region {args.kind}", t, r, p, None
    if args.command == "simulate":
        return "simulate", *cmd_simulate(rc, seed), None
    return f"check {args.which}", *cmd_check(rc, args.which, seed)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        rc = parse_config(args.config)
        seed = args.seed if args.seed is not None else rc.options["seed"]
        if seed != rc.options["seed"]:
            options = dict(rc.options)
            options["seed"] = seed
            rc = ResolvedConfig(spec=rc.spec, options=options)
        command, tables, results, plot, breach = _dispatch(args, rc, seed)
        manifest = RunManifest(command=command, config_digest=rc.digest(),
                               seed=seed, artifact_version=__version__,
                               timestamp=_timestamp())
        if args.format == "structured":
            text = _render_structured(manifest, rc, results)
        else:
            text = _render_tables(manifest, tables)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if args.plot:
            from . import plotting
            plotting.render_figures(command, plot, args.plot)
        if breach is not None:
            raise breach
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
