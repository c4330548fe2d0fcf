"""Command-line front end.

    ghz4 ghz-paradox --visibility 0.789
    ghz4 mabk --montecarlo --seed 7 --out mabk.json
    ghz4 witness --fidelity 0.840 --a-from-fidelity
    ghz4 delay-scan --ceiling 0.84 --format csv --out fig2.csv
    ghz4 fig3 --visibility 0.8
    ghz4 montecarlo --replications 200

Every flag may also be given in a YAML/JSON config file (``--config``) using
the flag name with dashes or underscores as the key; flags override the file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import yaml

from . import __version__
from .ghz import GHZ_TEST_SETTINGS, contradiction_report, parity_visibility
from .mabk import (
    GENUINE_A_BOUND,
    GENUINE_FIDELITY_BOUND,
    LHV_BOUND,
    lhv_summary,
    mabk_expectation,
    mabk_terms,
    quantum_max,
    threshold_visibilities,
    witness,
)
from .optics import (
    EXPERIMENT_SIGNAL_RATIO,
    NoiseParams,
    apply_noise,
    delay_scan,
    delay_scan_rows,
    experimental_noise,
    fit_noise_from_a,
    fit_noise_from_ratio,
)
from .qcore import SettingVector, correlation, outcome_distribution
from .stats import (
    RNG_ALGORITHM,
    RunConfig,
    estimate_A,
    estimate_correlation,
    replicate,
    simulate_counts,
    violation_in_sigmas,
)

log = logging.getLogger("ghz4")

COMMANDS = ("ghz-paradox", "mabk", "witness", "delay-scan", "montecarlo", "fig3")

def _flag(x: Any) -> bool:
    if isinstance(x, str):
        if x.strip().lower() in ("1", "true", "yes", "on"):
            return True
        if x.strip().lower() in ("0", "false", "no", "off", ""):
            return False
        raise ValueError(x)
    return bool(x)


def _delays(x: Any) -> str:
    if isinstance(x, (list, tuple)):
        return ",".join(str(float(v)) for v in x)
    return str(x)


# option name -> (type, default)
OPTIONS: dict[str, tuple[Callable[[Any], Any], Any]] = {
    "visibility": (float, None),
    "p_coh": (float, None),
    "p_diag": (float, None),
    "p_white": (float, None),
    "fidelity": (float, None),
    "a_value": (float, None),
    "a_from_fidelity": (_flag, False),
    "ratio": (float, EXPERIMENT_SIGNAL_RATIO),
    "rate": (float, 2.6),
    "time": (float, 1000.0),
    "seed": (int, 0),
    "replications": (int, 200),
    "workers": (int, 1),
    "montecarlo": (_flag, False),
    "tau": (float, 50.0),
    "ceiling": (float, 0.84),
    "delays": (_delays, "-200:200:41"),
    "out": (str, None),
    "format": (str, "json"),
    "unicode": (_flag, False),
}


class ConfigError(ValueError):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="YAML or JSON file whose keys mirror the flags")
    g = p.add_argument_group("state")
    g.add_argument("--visibility", type=float, default=S, help="white-noise mixture V|Psi><Psi| + (1-V) I/16")
    g.add_argument("--p-coh", type=float, default=S)
    g.add_argument("--p-diag", type=float, default=S)
    g.add_argument("--p-white", type=float, default=S)
    g.add_argument("--fidelity", type=float, default=S, help="fit the noise model to this GHZ fidelity")
    g.add_argument("--a-value", type=float, default=S, help="with --fidelity: fit to this |<A>|")
    g.add_argument("--a-from-fidelity", action="store_true", default=S,
                   help="with --fidelity: infer coherence from the H/V count ratio")
    g.add_argument("--ratio", type=float, default=S, help="desired:undesired H/V ratio (default 60)")
    r = p.add_argument_group("counting")
    r.add_argument("--rate", type=float, default=S, help="fourfold rate per setting, 1/s (default 2.6)")
    r.add_argument("--time", type=float, default=S, help="integration time per setting, s (default 1000)")
    r.add_argument("--seed", type=int, default=S)
    r.add_argument("--replications", type=int, default=S)
    r.add_argument("--workers", type=int, default=S)
    r.add_argument("--montecarlo", action="store_true", default=S, help="add a simulated run (mabk)")
    d = p.add_argument_group("delay scan")
    d.add_argument("--tau", type=float, default=S, help="coherence length in um (default 50)")
    d.add_argument("--ceiling", type=float, default=S, help="zero-delay coherence (default 0.84)")
    d.add_argument("--delays", default=S, help="start:stop:num or comma list, um (use --delays=-100,0,100)")
    o = p.add_argument_group("output")
    o.add_argument("--out", default=S, help="output file (default stdout)")
    o.add_argument("--format", choices=("json", "csv"), default=S)
    o.add_argument("--unicode", action="store_true", default=S, help="use H′/V′ in labels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghz4", description="Four-photon GHZ simulator and analysis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name in COMMANDS:
        _add_common(sub.add_parser(name))
    return parser


def load_config(path: str | Path) -> dict[str, Any]:
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def resolve_options(ns: argparse.Namespace) -> dict[str, Any]:
    """Defaults, then config file, then explicit flags."""
    opts = {k: default for k, (_, default) in OPTIONS.items()}
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "verbose")}
    if getattr(ns, "config", None):
        cfg = load_config(ns.config)
        unknown = sorted(set(cfg) - set(OPTIONS) - {"command"})
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.pop("command", None)
        opts.update(cfg)
    opts.update(flags)
    for k, (typ, _) in OPTIONS.items():
        if opts[k] is not None:
            try:
                opts[k] = typ(opts[k])
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {k}: {opts[k]!r}") from None
    if opts["rate"] <= 0 or opts["time"] <= 0:
        raise ConfigError("--rate and --time must be positive")
    if opts["format"] not in ("json", "csv"):
        raise ConfigError(f"unknown format {opts['format']!r}")
    return opts


def noise_from_options(opts: dict[str, Any]) -> tuple[NoiseParams, str]:
    weights = [opts[k] for k in ("p_coh", "p_diag", "p_white")]
    if any(w is not None for w in weights):
        return NoiseParams(*(0.0 if w is None else w for w in weights)), "weights"
    if opts["visibility"] is not None:
        return NoiseParams.white(opts["visibility"]), "visibility"
    if opts["fidelity"] is not None:
        if opts["a_value"] is not None:
            return fit_noise_from_a(opts["fidelity"], opts["a_value"]), "fidelity+a_value"
        if not opts["a_from_fidelity"]:
            raise ConfigError("--fidelity needs either --a-value or --a-from-fidelity")
        return fit_noise_from_ratio(opts["fidelity"], opts["ratio"]), "fidelity+ratio"
    return experimental_noise(), "experiment"


def parse_delays(text: str) -> list[float]:
    if ":" in text:
        start, stop, num = text.split(":")
        return [float(x) for x in np.linspace(float(start), float(stop), int(num))]
    return [float(x) for x in text.split(",") if x.strip()]


# -- commands -----------------------------------------------------------------


def _labels(sv: str, unicode: bool) -> list[str]:
    return SettingVector.parse(sv).outcome_labels(unicode)


def cmd_ghz_paradox(opts: dict[str, Any], rho) -> tuple[dict, list[dict]]:
    report = contradiction_report(rho)
    dist = outcome_distribution(rho, "XYYX")
    rows = [
        {
            "outcome": lbl,
            "predicted_by": "lhv" if raw in report.lhv_support else "qm",
            "probability": float(p),
        }
        for lbl, raw, p in zip(_labels("XYYX", opts["unicode"]), _labels("XYYX", False), dist.probs)
    ]
    return report.as_dict(), rows


def cmd_mabk(opts: dict[str, Any], rho) -> tuple[dict, list[dict]]:
    lhv = lhv_summary()
    value = mabk_expectation(rho)
    terms = [
        {"setting": t.code, "coeff": t.coeff, "correlation": correlation(rho, t.sv)} for t in mabk_terms()
    ]
    result: dict[str, Any] = {
        "analytic": {"value": value, "abs_value": abs(value), "lhv_violated": abs(value) > LHV_BOUND},
        "lhv_max": lhv.maximum,
        "lhv_min": lhv.minimum,
        "quantum_max": quantum_max(),
        "thresholds": threshold_visibilities().as_dict(),
        "terms": terms,
    }
    rows = [dict(t) for t in terms]
    if opts["montecarlo"]:
        cfg = RunConfig(opts["rate"], opts["time"], opts["seed"])
        records = simulate_counts(rho, cfg)
        est = estimate_A(records)
        result["estimate"] = est.as_dict()
        result["counts"] = {r.sv.code: dict(zip(_labels(r.sv.code, opts["unicode"]), map(int, r.counts)))
                            for r in records}
        for row, rec in zip(rows, records):
            e, var = estimate_correlation(rec)
            row.update(estimate=e, variance=var, total_counts=rec.total)
    return result, rows


def cmd_witness(opts: dict[str, Any], rho) -> tuple[dict, list[dict]]:
    report = witness(rho).as_dict()
    return report, [report]


def cmd_delay_scan(opts: dict[str, Any], rho) -> tuple[dict, list[dict]]:
    points = delay_scan(parse_delays(opts["delays"]), opts["tau"], opts["ceiling"], opts["rate"])
    zero = min(points, key=lambda p: abs(p.delay))
    result = {
        "tau_um": opts["tau"],
        "ceiling": opts["ceiling"],
        "rate": opts["rate"],
        "zero_delay_visibility": zero.visibility,
        "points": [
            {"delay_um": p.delay, "overlap": p.overlap, "H'H'H'H'": p.rate_hhhh, "H'H'H'V'": p.rate_hhhv}
            for p in points
        ],
    }
    return result, delay_scan_rows(points)


def cmd_fig3(opts: dict[str, Any], rho) -> tuple[dict, list[dict]]:
    result: dict[str, Any] = {}
    rows = []
    for sv in GHZ_TEST_SETTINGS:
        dist = outcome_distribution(rho, sv)
        labelled = dict(zip(_labels(sv, opts["unicode"]), map(float, dist.probs)))
        result[sv] = {"visibility": parity_visibility(rho, sv), "distribution": labelled}
        rows.extend({"setting": sv, "outcome": k, "probability": v} for k, v in labelled.items())
    return result, rows


def cmd_montecarlo(opts: dict[str, Any], rho) -> tuple[dict, list[dict]]:
    cfg = RunConfig(opts["rate"], opts["time"], opts["seed"])
    summary, estimates = replicate(rho, cfg, opts["replications"], workers=opts["workers"])
    rows = [{"replication": i, **e.as_dict()} for i, e in enumerate(estimates)]
    return summary.as_dict(), rows


HANDLERS = {
    "ghz-paradox": cmd_ghz_paradox,
    "mabk": cmd_mabk,
    "witness": cmd_witness,
    "delay-scan": cmd_delay_scan,
    "montecarlo": cmd_montecarlo,
    "fig3": cmd_fig3,
}


# -- serialization ------------------------------------------------------------


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def build_document(command: str, opts: dict[str, Any], noise: NoiseParams, source: str, result: dict) -> dict:
    params = {k: v for k, v in opts.items() if k not in ("out", "format")}
    return _jsonable({
        "command": command,
        "result": result,
        "provenance": {
            "program": "ghz4",
            "version": __version__,
            "parameters": params,
            "noise": {**noise.as_dict(), "source": source},
            "seed": opts["seed"],
            "rng": RNG_ALGORITHM,
        },
    })


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def dumps_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    if rows:
        fields = list(rows[0])
        for r in rows[1:]:
            fields.extend(k for k in r if k not in fields)
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(_jsonable(list(rows)))
    return buf.getvalue()


def rederive(doc: dict) -> dict:
    """Recompute the derived fields of a saved report from its primary fields."""
    result = doc["result"]
    command = doc["command"]
    out: dict[str, Any] = {}
    if command == "witness":
        a, f = result["a_value"], result["fidelity"]
        out["genuine"] = abs(a) > GENUINE_A_BOUND and f > GENUINE_FIDELITY_BOUND
        out["lhv_violated"] = abs(a) > LHV_BOUND
        out["a_margin"] = abs(a) - GENUINE_A_BOUND
        out["fidelity_margin"] = f - GENUINE_FIDELITY_BOUND
    elif command == "ghz-paradox":
        out["passed"] = result["error_rate"] < result["ryff_bound"]
        out["ryff_margin"] = result["ryff_bound"] - result["error_rate"]
    elif command == "mabk" and "estimate" in result:
        est = result["estimate"]
        out["sigmas_of_violation"] = violation_in_sigmas(est["value"], est["sigma"])
    elif command == "montecarlo":
        out["sigma_ratio"] = result["empirical_sigma"] / result["mean_sigma"]
    return out


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        opts = resolve_options(ns)
        noise, source = noise_from_options(opts)
        rho = apply_noise(noise)
        result, rows = HANDLERS[ns.command](opts, rho)
    except (ConfigError, ValueError, OSError, yaml.YAMLError) as exc:
        print(f"ghz4 {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    doc = build_document(ns.command, opts, noise, source, result)
    text = dumps_json(doc) if opts["format"] == "json" else dumps_csv(rows)
    if opts["out"]:
        Path(opts["out"]).write_text(text)
        log.info("wrote %s at %s", opts["out"], datetime.now(timezone.utc).isoformat())
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
