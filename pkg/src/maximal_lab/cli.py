"""Command-line pipelines: analyze, check, decompose, operator, counterexample, theorem-table.

Every run writes one JSON report (config echo, results, version, timing) and,
where a pipeline produces tabular data, CSV side files. Exit code 0 on
completion, 2 when any verdict is Inconclusive, 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import (PAPER_DEFAULTS, Exponents, Verdict, check_carleson, check_Cp_inf, check_Cpq,
                         check_logbound, check_prop12)
from .counterexamples import DEFAULT_SEED, cantor_counterexample, restricted_weak_type_probe
from .dilation_set import DilationSet, load_descriptor, standard_sets
from .entropy import critical_exponent, profile
from .regularity import check_R_p, check_R_tilde, decompose_set, endpoint_entropy
from .spherical import band_ratio, multiplier_decay, weak_type_ratio_probe

COMMANDS = ("analyze", "check", "decompose", "operator", "counterexample", "theorem-table")
CONDITIONS = ("cpq", "cpinf", "prop12", "carleson", "eq113", "eq114")

# truncations and tolerances used by the acceptance suite
PAPER_SETTINGS = {
    "n_max": 20,
    "eps": [1e-2, 1e-3, 1e-4],
    "a": 1 / 16,
    "samples": 4096,
    "stride": 10,
    "seed": DEFAULT_SEED,
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    set: dict | None = None
    sets: list = field(default_factory=list)
    d: int = 2
    p: list = field(default_factory=list)
    q: float = math.inf
    condition: str | None = None
    n_max: int = 20
    k_window: list | None = None
    L_max: int | None = None
    k: int = 0
    probe: str = "smallball"
    eps: list = field(default_factory=lambda: [1e-2, 1e-3, 1e-4])
    example: str | None = None
    N: int = 4
    a: float = 1 / 16
    h: float | None = None
    n: int = 4
    samples: int = 4096
    stride: int = 10
    seed: int = DEFAULT_SEED
    paper_defaults: bool = False
    threads: int = 1
    out: str | None = None
    csv: str | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        needs_set = self.command in ("analyze", "check", "decompose") or (
            self.command == "operator" and self.probe == "smallball")
        if needs_set and self.set is None:
            raise ConfigError(f"{self.command} needs --set")
        if not isinstance(self.d, int) or self.d < 2:
            raise ConfigError("d must be an integer >= 2")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.command == "check":
            if self.condition not in CONDITIONS:
                raise ConfigError(f"condition must be one of {CONDITIONS}")
            if not self.p:
                raise ConfigError("check needs --p")
        if self.command == "operator" and self.probe == "smallball" and not self.p:
            raise ConfigError("the small-ball probe needs --p")
        if any(not 0 < e < 0.25 for e in self.eps):
            raise ConfigError("ball radii must lie in (0, 1/4)")
        if self.command == "counterexample" and self.example not in ("cantor", "kakeya"):
            raise ConfigError("counterexample must be cantor or kakeya")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.k_window is not None and (len(self.k_window) != 2 or self.k_window[0] > self.k_window[1]):
            raise ConfigError("k_window must be two increasing integers")

    def echo(self) -> dict:
        d = asdict(self)
        d["q"] = "inf" if math.isinf(self.q) else self.q
        return d


def parse_set(text: str) -> dict:
    """A set descriptor from a JSON file, JSON text, or 'name[:key=value,...]'."""
    p = Path(text)
    if text.lstrip().startswith("{") or p.exists():
        return json.loads(p.read_text()) if p.exists() else json.loads(text)
    name, _, rest = text.partition(":")
    desc: dict = {"type": name}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        try:
            desc[key] = json.loads(val)
        except json.JSONDecodeError:
            desc[key] = val
    return desc


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _q(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Verdict):
        return obj.value
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def _profile(cfg: ExperimentConfig, dset: DilationSet):
    kw = tuple(cfg.k_window) if cfg.k_window else None
    return profile(dset, cfg.d, cfg.n_max, kw)


def _check(cond: str, prof, e: Exponents, cfg: ExperimentConfig):
    if cond == "cpq":
        return check_Cpq(prof, e, PAPER_DEFAULTS)
    if cond == "cpinf":
        return check_Cp_inf(prof, e, PAPER_DEFAULTS)
    if cond == "prop12":
        return check_prop12(prof, e, policy=PAPER_DEFAULTS)
    if cond == "carleson":
        return check_carleson(prof, e, cfg.L_max, PAPER_DEFAULTS)
    return check_logbound(prof, e, cond, PAPER_DEFAULTS)


def predicted_exponent(name: str, params: dict, d: int) -> float | None:
    """Endpoint exponent of the weak-type threshold for the named families."""
    if name == "power":
        return 1 + 1 / ((d - 1) * (params["alpha"] + 1))
    if name == "log":
        return d / (d - 1) if params["beta"] > 1 / (d - 1) else None
    if name == "lacunary":
        return 1.0
    if name == "full":
        return d / (d - 1)
    if name in ("cantor", "middle_third", "middle_halves"):
        ifs = standard_sets(name, **params).representation.base
        return 1 + ifs.dimension() / (d - 1)
    return None


def theorem_table(d: int, sets: list, n_max: int = 20) -> list[dict]:
    rows = []
    for desc in sets:
        dset = load_descriptor(desc)
        prof = profile(dset, d, n_max)
        est = critical_exponent(prof)
        pred = predicted_exponent(dset.name, dset.params, d)
        row = {"set": dset.describe(), "d": d, "predicted": pred, "measured": est.as_dict(), "verdicts": {}}
        if pred is not None:
            for label, p in (("minus", pred - 0.1), ("plus", pred + 0.1)):
                if p > 1:
                    row["verdicts"][label] = check_Cp_inf(prof, Exponents(d, p)).report()
        rows.append(row)
    return rows


def run(cfg: ExperimentConfig) -> tuple[dict, dict[str, str], int]:
    """Execute a pipeline; returns (report, csv side files, exit code)."""
    cfg.validate()
    t0 = time.perf_counter()
    csvs: dict[str, str] = {}
    inconclusive = False
    res: dict = {}
    dset = load_descriptor(cfg.set) if cfg.set is not None else None
    if cfg.command == "analyze":
        prof = _profile(cfg, dset)
        est = critical_exponent(prof)
        res = {"set": dset.describe(), "k_window": list(prof.k_window), "periodic": prof.periodic,
               "critical_exponent": est.as_dict(), "N": prof.table.tolist()}
        csvs["profile"] = prof.to_csv()
    elif cfg.command == "check":
        prof = _profile(cfg, dset)
        res = {"set": dset.describe(), "verdicts": []}
        for p in cfg.p:
            v = _check(cfg.condition, prof, Exponents(cfg.d, p, cfg.q), cfg)
            inconclusive |= v.verdict == Verdict.INCONCLUSIVE
            res["verdicts"].append({**v.report(), "p": p, "depths": v.depths, "values": v.values})
    elif cfg.command == "decompose":
        dec = decompose_set(dset, cfg.k, cfg.n_max)
        ep = endpoint_entropy(dec, cfg.n_max)
        res = {"set": dset.describe(), "k": cfg.k, "families": dec.summary(),
               "endpoint_entropy": [{"j": j, "N": int(v)} for j, v in enumerate(ep)]}
        if cfg.p:
            prof = _profile(cfg, dset)
            res["regularity"] = []
            for p in cfg.p:
                rp = check_R_p(dec, Exponents(cfg.d, p), None, prof)
                rt = check_R_tilde(dec, Exponents(cfg.d, p), None, prof)
                inconclusive |= Verdict.INCONCLUSIVE in (rp.verdict, rt.verdict)
                res["regularity"].append({"p": p, "R_p": rp.report() | {"C1": rp.details["C1"]},
                                          "R_tilde": rt.report()})
    elif cfg.command == "operator":
        if cfg.probe == "smallball":
            res = {"set": dset.describe(), "probes": [
                weak_type_ratio_probe(dset, cfg.d, p, cfg.eps, cfg.k) for p in cfg.p]}
            rows = ["p,eps,ratio"] + [f"{pr['p']!r},{r['eps']!r},{r['ratio']!r}"
                                      for pr in res["probes"] for r in pr["rows"]]
            csvs["probe"] = "\n".join(rows) + "\n"
        elif cfg.probe == "multiplier":
            rows = multiplier_decay(cfg.d, range(4, 13))
            res = {"d": cfg.d, "multiplier_decay": rows, "band_ratio": band_ratio(rows)}
        else:
            raise ConfigError("probe must be smallball or multiplier")
    elif cfg.command == "counterexample":
        if cfg.example == "cantor":
            res = cantor_counterexample(cfg.N, cfg.a, cfg.h, cfg.samples, cfg.seed)
        else:
            dset = dset or standard_sets("full")
            res = restricted_weak_type_probe(dset, cfg.n, None, cfg.stride, seed=cfg.seed)
            res["set"] = dset.describe()
    elif cfg.command == "theorem-table":
        sets = cfg.sets or [{"type": "power", "alpha": a} for a in (0.5, 1, 2)] + [
            {"type": "log", "beta": 1}, {"type": "lacunary"}, {"type": "full"}]
        res = {"table": theorem_table(cfg.d, sets, cfg.n_max)}
    report = {"version": __version__, "config": cfg.echo(), "result": res,
              "timing": {"seconds": time.perf_counter() - t0}}
    return report, csvs, 2 if inconclusive else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maximal-lab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="JSON report path (default: stdout)")
    common.add_argument("--csv", help="prefix for CSV side files")
    common.add_argument("--paper-defaults", action="store_true",
                        help="pin truncations and tolerances to the acceptance values")
    common.add_argument("--threads", type=int, default=1, help="parallelism cap (results do not depend on it)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--config", help="JSON ExperimentConfig; command-line flags override it")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    a = add("analyze", help="entropy profile and critical exponent")
    a.add_argument("--set", required=True)
    a.add_argument("--d", type=int, default=2)
    a.add_argument("--nmax", type=int, default=20)
    a.add_argument("--kwindow", type=lambda s: [int(x) for x in s.split(",")])

    c = add("check", help="evaluate an endpoint condition")
    c.add_argument("--set", required=True)
    c.add_argument("--d", type=int, default=2)
    c.add_argument("--p", type=_floats, required=True)
    c.add_argument("--q", type=_q, default=math.inf)
    c.add_argument("--condition", choices=CONDITIONS, required=True)
    c.add_argument("--nmax", type=int, default=20)
    c.add_argument("--kwindow", type=lambda s: [int(x) for x in s.split(",")])
    c.add_argument("--lmax", type=int)

    dcm = add("decompose", help="equally spaced decomposition of a convex block")
    dcm.add_argument("--set", required=True)
    dcm.add_argument("--k", type=int, default=0)
    dcm.add_argument("--nmax", type=int, default=16)
    dcm.add_argument("--d", type=int, default=2)
    dcm.add_argument("--p", type=_floats, default=[])

    o = add("operator", help="small-ball probe or multiplier decay")
    o.add_argument("--set")
    o.add_argument("--d", type=int, default=2)
    o.add_argument("--p", type=_floats, default=[])
    o.add_argument("--probe", choices=("smallball", "multiplier"), default="smallball")
    o.add_argument("--eps", type=_floats, default=[1e-2, 1e-3, 1e-4])
    o.add_argument("--k", type=int, default=0)

    ce = add("counterexample", help="Cantor or Kakeya counterexample")
    ce.add_argument("example", choices=("cantor", "kakeya"))
    ce.add_argument("--N", type=int, default=4)
    ce.add_argument("--a", type=float, default=1 / 16)
    ce.add_argument("--h", type=float)
    ce.add_argument("--samples", type=int, default=4096)
    ce.add_argument("--n", type=int, default=4)
    ce.add_argument("--set")
    ce.add_argument("--stride", type=int, default=10)

    t = add("theorem-table", help="predicted vs measured endpoint exponents")
    t.add_argument("--d", type=int, default=2)
    t.add_argument("--sets", nargs="*", default=[])
    t.add_argument("--nmax", type=int, default=20)
    return ap


def config_from_args(args: argparse.Namespace, environ=os.environ) -> ExperimentConfig:
    base = json.loads(Path(args.config).read_text()) if args.config else {}
    base["command"] = args.command
    get = lambda name: getattr(args, name, None)  # noqa: E731
    mapping = {"set": "set", "d": "d", "p": "p", "q": "q", "condition": "condition", "nmax": "n_max",
               "kwindow": "k_window", "lmax": "L_max", "k": "k", "probe": "probe", "eps": "eps",
               "example": "example", "N": "N", "a": "a", "h": "h", "n": "n", "samples": "samples",
               "stride": "stride", "seed": "seed", "threads": "threads", "out": "out", "csv": "csv"}
    for arg, key in mapping.items():
        v = get(arg)
        if v is not None:
            base[key] = v
    if isinstance(base.get("set"), str):
        base["set"] = parse_set(base["set"])
    if get("sets"):
        base["sets"] = [parse_set(s) for s in args.sets]
    if get("paper_defaults"):
        base["paper_defaults"] = True
        base.update(PAPER_SETTINGS)
    if "MAXIMAL_LAB_SEED" in environ:
        base["seed"] = int(environ["MAXIMAL_LAB_SEED"])
    if isinstance(base.get("q"), str):
        base["q"] = _q(base["q"])
    unknown = set(base) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return ExperimentConfig(**base)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report, csvs, code = run(cfg)
    except Exception as exc:  # every failure becomes exit code 1 with provenance
        err = {"error": type(exc).__name__, "module": type(exc).__module__, "message": str(exc)}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1
    text = dumps(report)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.csv:
        for name, body in csvs.items():
            Path(f"{cfg.csv}_{name}.csv").write_text(body)
    return code


if __name__ == "__main__":
    sys.exit(main())
