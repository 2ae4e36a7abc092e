"""Command line front end: ``g2bvp {verify,symbol,spectrum,kernel,probe}``.

Exit codes are 0 when every verdict passes, 1 when a check fails and 2 for
usage or configuration errors. Reports are JSON (``"schema": 1``) written
through a temporary file and an atomic rename.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

from .modes import (
    TORUS_T6,
    SpectrumError,
    predict_slab_kernel,
    probe_trial_quotient,
    question2_probe,
    spectrum_report,
    total_kernel,
)
from .suites import SUITES, TOLERANCES, Verdict, run_suites
from .symbol import modulus_bound_certificate

SCHEMA = 1
COMMANDS = ("verify", "symbol", "spectrum", "kernel", "probe")
# checks emitted by the individual commands, in addition to the verify suites
COMMAND_CHECKS = {"symbol.bound", "spectrum.kernel_dim", "spectrum.positive_count", "spectrum.theta_block",
                  "kernel.prediction", "kernel.dstar", "kernel.theta_zero", "probe.two_route"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved settings for one command."""

    suite: str = "all"
    length: float = 1.0
    modes: int = 3
    grid: int = 100
    seed: int = 0
    backend: str = "exact"
    out: str = "."
    samples: int = 100
    workers: int = 1
    tolerances: dict = field(default_factory=dict)

    def validate(self):
        if self.suite not in SUITES:
            raise UsageError(f"suite must be one of {SUITES}")
        if self.backend not in ("exact", "float"):
            raise UsageError("backend must be 'exact' or 'float'")
        if not self.length > 0:
            raise UsageError("length must be positive")
        if self.modes < 1:
            raise UsageError("modes (truncation K) must be at least 1")
        if self.grid < 8:
            raise UsageError("grid must be at least 8")
        if self.samples < 0 or self.workers < 1:
            raise UsageError("samples must be nonnegative and workers positive")
        for key, val in self.tolerances.items():
            if key not in TOLERANCES and key not in COMMAND_CHECKS:
                raise UsageError(f"unknown check id in tolerance override: {key}")
            if not val > 0:
                raise UsageError(f"tolerance for {key} must be positive")
        if not os.path.isdir(self.out):
            raise UsageError(f"output directory does not exist: {self.out}")
        return self

    def to_json(self) -> dict:
        # the output location is not part of the result
        data = asdict(self)
        data.pop("out")
        return data


_CASTS = {"suite": str, "length": float, "modes": int, "grid": int, "seed": int,
          "backend": str, "out": str, "samples": int, "workers": int}


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object with flat keys")
    out, tols = {}, {}
    for key, val in data.items():
        if key.startswith("tol."):
            tols[key[4:]] = _as_float(val, key)
        elif key in _CASTS:
            out[key] = val
        else:
            raise UsageError(f"unknown config key: {key}")
    out["tolerances"] = tols
    return out


def _as_float(val, name: str) -> float:
    try:
        return float(val)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{name} needs a number, got {val!r}") from exc


def _split_tolerances(extra: list[str]) -> dict:
    """Parse leftover ``--tol.<id> VALUE`` or ``--tol.<id>=VALUE`` tokens."""
    tols, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--tol."):
            raise UsageError(f"unrecognized argument: {tok}")
        if "=" in tok:
            key, val = tok[6:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"{tok} needs a value")
            key, val = tok[6:], extra[i + 1]
            i += 2
        tols[key] = _as_float(val, tok)
    return tols


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with flat keys; flags override it")
    common.add_argument("--suite", choices=SUITES, help="verify: which suites to run")
    common.add_argument("--length", type=float, help="slab length L")
    common.add_argument("--modes", type=int, help="truncation K (modes with |k| <= K)")
    common.add_argument("--grid", type=int, help="number of nodes n_t in t")
    common.add_argument("--seed", type=int, help="seed for random fields and samples")
    common.add_argument("--backend", choices=("exact", "float"), help="scalar backend for algebraic checks")
    common.add_argument("--out", help="existing output directory")
    common.add_argument("--samples", type=int, help="symbol: random unit covectors")
    common.add_argument("--workers", type=int, help="threads for independent mode problems")

    parser = argparse.ArgumentParser(
        prog="g2bvp",
        description="Verification suites and experiments for the linearised G2 boundary value problem.",
        epilog="Tolerances can be overridden per check with --tol.<check-id> VALUE.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "verify": "run the algebraic and spectral suites",
        "symbol": "emit the ellipticity certificate for the boundary symbol",
        "spectrum": "slab spectrum over all modes |k| <= K (JSON + CSV)",
        "kernel": "kernel of the slab problem and the cohomological prediction",
        "probe": "experimental quotient (|d7 a|^2 - |d27 a|^2) / |a|^2",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve(argv: list[str] | None) -> tuple[str, RunConfig]:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    flag_tols = _split_tolerances(extra)
    values = {"tolerances": {}}
    if args.config:
        values.update(_load_config(args.config))
    for key in _CASTS:
        val = getattr(args, key)
        if val is not None:
            values[key] = val
    values["tolerances"] = {**values["tolerances"], **flag_tols}
    try:
        cfg = RunConfig(**{k: (_CASTS[k](v) if k in _CASTS else v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc
    return args.command, cfg.validate()


# ---------------------------------------------------------------------------
# output


def write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def _report(command: str, cfg: RunConfig, body: dict, verdicts: list[Verdict]) -> dict:
    return {
        "schema": SCHEMA,
        "command": command,
        "config": cfg.to_json(),
        **body,
        "verdicts": [v.to_json() for v in verdicts],
        "failed": [v.id for v in verdicts if not v.passed],
        "pass": all(v.passed for v in verdicts),
    }


def _print_verdicts(verdicts: list[Verdict]):
    for v in verdicts:
        status = "PASS" if v.passed else "FAIL"
        print(f"{status} {v.id}: measured {v.measured:.3e} (tol {v.tolerance:.1e})  [{v.anchor}]")


def _custom(cid: str, anchor: str, measured: float, default: float, cfg: RunConfig) -> Verdict:
    return Verdict(cid, anchor, float(measured), float(cfg.tolerances.get(cid, default)))


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig) -> int:
    verdicts = run_suites(cfg.suite, cfg.backend, cfg.length, cfg.modes, cfg.grid, cfg.seed, cfg.samples,
                          cfg.tolerances)
    _print_verdicts(verdicts)
    report = _report("verify", cfg, {}, verdicts)
    write_atomic(os.path.join(cfg.out, "verify.json"), dump_json(report))
    if not report["pass"]:
        print("failing checks: " + ", ".join(report["failed"]), file=sys.stderr)
        return 1
    return 0


def cmd_symbol(cfg: RunConfig) -> int:
    cert = modulus_bound_certificate(samples=cfg.samples, seed=cfg.seed)
    v = _custom("symbol.bound", "eigenvalues 0, +-1", 0.0 if cert["bound_satisfied"] else 1.0, 0.0, cfg)
    write_atomic(os.path.join(cfg.out, "symbol_certificate.json"),
                 dump_json(_report("symbol", cfg, {"certificate": cert}, [v])))
    print(f"max |eig Sigma| = {cert['max_abs_eig']}, min |eig P~| = {cert['min_abs_p_tilde_eig']}, "
          f"bound_satisfied = {cert['bound_satisfied']}")
    return 0 if v.passed else 1


def cmd_spectrum(cfg: RunConfig) -> int:
    rep = spectrum_report(cfg.length, cfg.modes, cfg.grid, workers=cfg.workers)
    verdicts = [
        _custom("spectrum.kernel_dim", "For this phi on M_L we have H_phi = 0", abs(rep.kernel_dim - 6), 0.0, cfg),
        _custom("spectrum.positive_count", "the spectrum is discrete and bounded above", rep.positive_count, 0.0,
                cfg),
        _custom("spectrum.theta_block", "Delta alpha = rho, alpha||_8 = 0, d*alpha|_dM = 0", rep.theta_error,
                1e-3, cfg),
    ]
    body = rep.to_json()
    body.pop("schema")
    body.pop("verdicts")
    write_atomic(os.path.join(cfg.out, "spectrum.json"), dump_json(_report("spectrum", cfg, body, verdicts)))
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rep.csv_rows())
    write_atomic(os.path.join(cfg.out, "spectrum.csv"), buf.getvalue())
    print(f"kernel_dim {rep.kernel_dim}")
    print(f"max_eigenvalue {rep.max_eigenvalue:.6e}")
    print(f"nonnegative_count {rep.nonnegative_count}")
    return 0 if all(v.passed for v in verdicts) else 1


def cmd_kernel(cfg: RunConfig) -> int:
    kern = total_kernel(cfg.length, cfg.modes, cfg.grid, workers=cfg.workers)
    pred = predict_slab_kernel(TORUS_T6)
    verdicts = [
        _custom("kernel.prediction", "E: K_phi -> H_phi is an isomorphism",
                abs(kern.dimension - (pred["dim_H_phi"] + pred["relative_cohomology"])), 0.0, cfg),
        _custom("kernel.dstar", "any solution mu satisfies d*mu = 0", kern.dstar_residual, 1e-6, cfg),
        _custom("kernel.theta_zero", "alpha||_8 = 0", 0.0 if kern.theta_zero else 1.0, 0.0, cfg),
    ]
    write_atomic(os.path.join(cfg.out, "kernel.json"),
                 dump_json(_report("kernel", cfg, {"kernel": kern.to_json(), "prediction": pred}, verdicts)))
    print(f"kernel_dim {kern.dimension} (predicted {pred['expected_kernel']})")
    return 0 if all(v.passed for v in verdicts) else 1


def cmd_probe(cfg: RunConfig) -> int:
    grids = sorted({n for n in (cfg.grid // 4, cfg.grid // 2, cfg.grid) if n >= 8})
    runs = [question2_probe(cfg.length, cfg.modes, n) for n in grids]
    discrete, direct = probe_trial_quotient((1, 0, 0, 0, 0, 0), cfg.length, cfg.grid)
    verdicts = [_custom("probe.two_route", "pure Theta-block trial field, two evaluations",
                        abs(discrete - direct) / abs(direct), 1e-3, cfg)]
    body = {
        "refinement": [r.to_json() for r in runs],
        "trial": {"k": [1, 0, 0, 0, 0, 0], "discrete": discrete, "quadrature": direct},
        "note": "experimental evidence only; the sign of the supremum is not asserted",
    }
    write_atomic(os.path.join(cfg.out, "probe.json"), dump_json(_report("probe", cfg, body, verdicts)))
    for r in runs:
        print(f"n_t {r.n_t}: max quotient {r.value:.6e} (relative {r.relative:.3e}) at k = {list(r.argmax_k)}")
    return 0 if all(v.passed for v in verdicts) else 1


HANDLERS = {"verify": cmd_verify, "symbol": cmd_symbol, "spectrum": cmd_spectrum,
            "kernel": cmd_kernel, "probe": cmd_probe}


def main(argv: list[str] | None = None) -> int:
    try:
        command, cfg = resolve(argv)
    except UsageError as exc:
        print(f"g2bvp: error: {exc}", file=sys.stderr)
        return 2
    try:
        return HANDLERS[command](cfg)
    except SpectrumError as exc:
        print(f"g2bvp: eigensolver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
