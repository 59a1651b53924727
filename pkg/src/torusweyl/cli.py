"""Command-line runner for the experiments and the acceptance suite.

Configs are JSON objects. Physical parameters may be given as numbers or
decimal strings; both are parsed exactly before conversion to float.
Exit codes: 0 success, 1 criterion failure, 2 config error, 3 numerical
convergence error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import run_all
from .asymptotics import estimate_weyl_limit, nc_integral, predict_cosphere_integral
from .errors import ConfigError, ConvergenceError
from .lattice import build_lattice, sphere_quadrature, torus_grid
from .operators import MultiplierSymbol, build_qup, build_schrodinger
from .potentials import Indicator, Potential, PotentialSum, RadialSingular, TrigPolynomial, constant, cosine, random_hermitian_trig
from .semiclassical import clr_check, count_negative_with_band, semiclassical_sweep
from .spectral import cesaro_log_mean, spectrum

log = logging.getLogger("torusweyl")

EXIT_OK, EXIT_CRITERION, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# config parsing


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("top level must be an object")
    return cfg


def _real(value, field: str) -> float:
    if isinstance(value, bool):
        raise ConfigError("expected a number", field)
    try:
        return float(Decimal(str(value)) if isinstance(value, (str, int, Decimal)) else value)
    except (InvalidOperation, TypeError, ValueError) as exc:
        raise ConfigError(f"expected a number, got {value!r}", field) from exc


def _scalar(value, field: str) -> complex | float:
    if isinstance(value, dict):
        return complex(_real(value.get("re", 0), field + ".re"), _real(value.get("im", 0), field + ".im"))
    return _real(value, field)


def _int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", field)
    return value


def _matrix(value, field: str) -> np.ndarray:
    if isinstance(value, list):
        rows = [row if isinstance(row, list) else [row] for row in value]
        return np.array([[_scalar(x, f"{field}[{i}][{j}]") for j, x in enumerate(row)] for i, row in enumerate(rows)],
                        dtype=complex)
    return np.array([[_scalar(value, field)]], dtype=complex)


def _require(cfg: dict, key: str, field: str):
    if key not in cfg:
        raise ConfigError("missing required key", f"{field}.{key}" if field else key)
    return cfg[key]


def parse_potential(desc, n: int, seed: int, field: str = "potential") -> Potential:
    """Build a potential from a descriptor such as ``{"type": "cosine", "offset": "1"}``."""
    if not isinstance(desc, dict):
        raise ConfigError("potential descriptor must be an object", field)
    kind = _require(desc, "type", field)
    try:
        if kind == "constant":
            return constant(n, _matrix(_require(desc, "value", field), f"{field}.value"))
        if kind == "cosine":
            return cosine(
                n,
                axis=_int(desc.get("axis", 0), f"{field}.axis"),
                freq=_int(desc.get("freq", 1), f"{field}.freq"),
                amplitude=_real(desc.get("amplitude", 1), f"{field}.amplitude"),
                offset=_real(desc.get("offset", 0), f"{field}.offset"),
            )
        if kind == "trig":
            coeffs = {}
            for i, term in enumerate(_require(desc, "coeffs", field)):
                k = tuple(_int(v, f"{field}.coeffs[{i}].k") for v in _require(term, "k", f"{field}.coeffs[{i}]"))
                coeffs[k] = _matrix(_require(term, "c", f"{field}.coeffs[{i}]"), f"{field}.coeffs[{i}].c")
            r = next(iter(coeffs.values())).shape[0] if coeffs else 1
            return TrigPolynomial(n, r, coeffs)
        if kind == "random_trig":
            return random_hermitian_trig(
                n,
                _int(desc.get("r", 1), f"{field}.r"),
                _int(desc.get("degree", 2), f"{field}.degree"),
                seed=_int(desc.get("seed", seed), f"{field}.seed"),
                scale=_real(desc.get("scale", 1), f"{field}.scale"),
            )
        if kind == "radial_singular":
            center = tuple(_real(c, f"{field}.center") for c in desc.get("center", [0.5] * n))
            mat = desc.get("matrix")
            return RadialSingular(
                n,
                center,
                _real(_require(desc, "beta", field), f"{field}.beta"),
                amplitude=_real(desc.get("amplitude", 1), f"{field}.amplitude"),
                sign=_int(desc.get("sign", 1), f"{field}.sign"),
                matrix=None if mat is None else _matrix(mat, f"{field}.matrix"),
            )
        if kind == "indicator":
            return Indicator(
                n,
                tuple(_real(c, f"{field}.lower") for c in _require(desc, "lower", field)),
                tuple(_real(c, f"{field}.upper") for c in _require(desc, "upper", field)),
                _matrix(desc.get("value", 1), f"{field}.value"),
            )
        if kind == "sum":
            parts = [parse_potential(t, n, seed, f"{field}.terms[{i}]") for i, t in enumerate(_require(desc, "terms", field))]
            return PotentialSum(tuple(parts))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), field) from exc
    raise ConfigError(f"unknown potential type {kind!r}", f"{field}.type")


def parse_symbol(desc, n: int, field: str) -> MultiplierSymbol:
    """``{"kind": "homogeneous", "s": "-1"}``; angular kinds carry ``terms: [{alpha, c}]``."""
    if desc is None:
        desc = {"kind": "homogeneous", "s": -n / 2}
    if not isinstance(desc, dict):
        raise ConfigError("symbol descriptor must be an object", field)
    kind = desc.get("kind", "homogeneous")
    s = _real(desc.get("s", -n / 2), f"{field}.s")
    try:
        if kind == "angular":
            terms = {}
            for i, t in enumerate(_require(desc, "terms", field)):
                alpha = tuple(_int(a, f"{field}.terms[{i}].alpha") for a in _require(t, "alpha", f"{field}.terms[{i}]"))
                terms[alpha] = _matrix(_require(t, "c", f"{field}.terms[{i}]"), f"{field}.terms[{i}].c")
            return MultiplierSymbol(n, s, "angular", angular_terms=terms)
        mat = desc.get("matrix")
        r = _int(desc.get("r", 1), f"{field}.r")
        return MultiplierSymbol(n, s, kind, matrix=None if mat is None else _matrix(mat, f"{field}.matrix"), r=r)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), field) from exc


def _common(cfg: dict, seed: int):
    n = _int(cfg.get("n", 2), "n")
    if n < 1:
        raise ConfigError("dimension must be >= 1", "n")
    pot = parse_potential(_require(cfg, "potential", ""), n, seed) if "potential" in cfg else None
    return n, pot


def _cutoffs(cfg: dict, default: int = 24) -> list[int]:
    if "K_list" in cfg:
        Ks = [_int(k, "K_list") for k in cfg["K_list"]]
    else:
        Ks = [_int(cfg.get("K", default), "K")]
    if any(k < 0 for k in Ks):
        raise ConfigError("cutoffs must be nonnegative", "K")
    return Ks


# ---------------------------------------------------------------------------
# output helpers


def config_hash(cfg: dict, seed: int) -> str:
    canon = json.dumps({"config": cfg, "seed": seed}, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header, rows, provenance: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path: Path, data: dict, provenance: str) -> None:
    payload = {"provenance": provenance, **_jsonable(data)}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands


def run_spectrum(cfg: dict, out: Path, seed: int, threads: int, prov: str) -> int:
    n, pot = _common(cfg, seed)
    if pot is None:
        raise ConfigError("missing required key", "potential")
    K = _cutoffs(cfg)[0]
    lat = build_lattice(n, K)
    kind = cfg.get("operator", "qup")
    summary = {"operator": kind, "n": n, "K": K, "trusted_count": lat.trusted_count}
    if kind == "schrodinger":
        h = _real(cfg.get("h", 1), "h")
        if h <= 0:
            raise ConfigError("must be positive", "h")
        op = build_schrodinger(h, pot, lat)
        count, band = count_negative_with_band(op)
        summary.update(negative_count=count, near_zero=band)
    elif kind == "qup":
        op = build_qup(parse_symbol(cfg.get("Q"), n, "Q"), pot, parse_symbol(cfg.get("P"), n, "P"), lat)
    else:
        raise ConfigError(f"unknown operator {kind!r}", "operator")
    spec = spectrum(op)
    summary.update(dim=op.dim, residual=spec.residual, hermitian=spec.hermitian)
    size = spec.mu.size
    rows = []
    for j in range(size):
        lp = spec.lambda_plus[j] if j < spec.lambda_plus.size else 0.0
        lm = spec.lambda_minus[j] if j < spec.lambda_minus.size else 0.0
        rows.append((j, spec.mu[j], j * spec.mu[j], lp, lm))
    write_csv(out / "spectrum.csv", ("j", "mu_j", "j_mu_j", "lambda_plus_j", "lambda_minus_j"), rows, prov)
    write_json(out / "spectrum_summary.json", summary, prov)
    return EXIT_OK


def run_weyl(cfg: dict, out: Path, seed: int, threads: int, prov: str) -> int:
    n, pot = _common(cfg, seed)
    if pot is None:
        raise ConfigError("missing required key", "potential")
    Q, P = parse_symbol(cfg.get("Q"), n, "Q"), parse_symbol(cfg.get("P"), n, "P")
    sphere = sphere_quadrature(n, _int(cfg.get("sphere_nodes", 64), "sphere_nodes"))
    grid = torus_grid(n, _int(cfg["grid_m"], "grid_m")) if "grid_m" in cfg else None
    prediction = predict_cosphere_integral(Q, pot, P, sphere, grid)

    def one(K):
        lat = build_lattice(n, K)
        return estimate_weyl_limit(spectrum(build_qup(Q, pot, P, lat)), lat.trusted_count, prediction)

    Ks = _cutoffs(cfg)
    with ThreadPoolExecutor(max(1, threads)) as pool:
        reports = list(pool.map(one, Ks))
    rows = [(K, r.estimated_Lambda_abs, r.predicted_abs, r.estimated_Lambda_abs - r.predicted_abs) for K, r in zip(Ks, reports)]
    write_csv(out / "convergence.csv", ("K", "estimate", "prediction", "gap"), rows, prov)
    write_json(out / "weyl_report.json", {"K": Ks[-1], **reports[-1].to_dict()}, prov)
    return EXIT_OK


def run_semiclassical(cfg: dict, out: Path, seed: int, threads: int, prov: str) -> int:
    n, pot = _common(cfg, seed)
    if pot is None:
        raise ConfigError("missing required key", "potential")
    hs = [_real(h, "h_list") for h in _require(cfg, "h_list", "")]
    try:
        runs = semiclassical_sweep(pot, hs, threads=threads)
    except ValueError as exc:
        raise ConfigError(str(exc), "h_list") from exc
    rows = [(r.h, r.K, r.count if not r.skipped else "skipped", r.scaled, r.prediction, r.adequacy) for r in runs]
    write_csv(out / "sweep.csv", ("h", "K", "count", "scaled", "prediction", "adequacy"), rows, prov)
    return EXIT_OK


def run_clr(cfg: dict, out: Path, seed: int, threads: int, prov: str) -> int:
    n = _int(cfg.get("n", 2), "n")
    family = cfg.get("family")
    if family is None:
        amps = [_real(a, "amplitudes") for a in cfg.get("amplitudes", [1, 4, 16])]
        members = [(f"a={a!r}", cosine(n, amplitude=-a, offset=-a)) for a in amps]
    else:
        members = [(str(d.get("label", i)), parse_potential(d, n, seed, f"family[{i}]")) for i, d in enumerate(family)]
    jobs = [(label, V, K) for K in _cutoffs(cfg, default=12) for label, V in members]

    def one(job):
        label, V, K = job
        return label, K, clr_check(V, build_lattice(n, K))

    with ThreadPoolExecutor(max(1, threads)) as pool:
        results = list(pool.map(one, jobs))
    rows = [(label, K, rec.lhs, rec.orlicz, rec.ratio) for label, K, rec in results]
    write_csv(out / "clr.csv", ("member", "K", "lhs", "orlicz", "ratio"), rows, prov)
    return EXIT_OK


def run_ncint(cfg: dict, out: Path, seed: int, threads: int, prov: str) -> int:
    n, pot = _common(cfg, seed)
    K = _cutoffs(cfg, default=40)[0]
    lat = build_lattice(n, K)
    source = cfg.get("source", "multiplier")
    if source == "multiplier":
        sigma = parse_symbol(cfg.get("symbol", {"kind": "homogeneous", "s": -n}), n, "symbol")
        seq = np.sort(sigma.radial_values(lat) * sigma.matrix[0, 0].real)[::-1][: lat.trusted_count]
    elif source == "qup":
        if pot is None:
            raise ConfigError("missing required key", "potential")
        op = build_qup(parse_symbol(cfg.get("Q"), n, "Q"), pot, parse_symbol(cfg.get("P"), n, "P"), lat)
        seq = spectrum(op).lambda_by_modulus[: lat.trusted_count]
    else:
        raise ConfigError(f"unknown source {source!r}", "source")
    grid = [_int(N, "N_grid") for N in cfg["N_grid"]] if "N_grid" in cfg else None
    try:
        rep = nc_integral(seq, grid)
    except ValueError as exc:
        raise ConfigError(str(exc), "N_grid") from exc
    rows = []
    for N, v in zip(rep.N_grid, rep.values):
        spread = abs(cesaro_log_mean(seq, 2 * N) - v) if 2 * N <= len(seq) else None
        rows.append((N, v.real, v.imag, spread))
    write_csv(out / "ncint.csv", ("N", "log_mean_re", "log_mean_im", "dilation_spread"), rows, prov)
    write_json(out / "ncint_report.json", rep.to_dict(), prov)
    return EXIT_OK


def run_acceptance(cfg: dict, out: Path, seed: int, threads: int, prov: str) -> int:
    only = cfg.get("only")
    if only is not None:
        only = [_int(i, "only") for i in only]
        if any(i not in range(1, 11) for i in only):
            raise ConfigError("criteria are numbered 1..10", "only")
    results = run_all(seed=seed, only=only, threads=threads)
    for r in results:
        print(r.line())
    write_json(out / "acceptance_report.json",
               {"all_passed": all(r.passed for r in results), "criteria": [r.to_dict() for r in results]}, prov)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CRITERION


COMMANDS = {
    "spectrum": run_spectrum,
    "weyl": run_weyl,
    "semiclassical": run_semiclassical,
    "clr": run_clr,
    "ncint": run_ncint,
    "acceptance": run_acceptance,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torusweyl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else _int(cfg.get("seed", 0), "seed")
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer", "seed")
        if args.threads < 1:
            raise ConfigError("must be >= 1", "--threads")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        prov = f"torusweyl {__version__} config_sha256={config_hash(cfg, seed)}"
        return COMMANDS[args.command](cfg, out, seed, args.threads, prov)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
