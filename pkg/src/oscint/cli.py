"""Command-line front end.

Three subcommands::

    oscint integrate --config job.cfg [--threads N] [--out table.txt]
    oscint selftest [--quick]
    oscint bench --problem {eq4,eq6,eq7,eq8} [--out table.txt]

Configs are flat key=value text files; integrand and batch tables are
plain delimited text with '#' comments.  Exit codes: 0 success, 1 usage or
validation error, 2 completed with non-converged entries.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys

import numpy as np

from . import __version__
from .adaptive import LevinSettings
from .api import BatchRequest, IntegralType, Session
from .benchmarks import PROBLEMS, run_benchmark
from .integrand import IntegrandTable
from .selftest import run_selftest


class ConfigError(Exception):
    """Validation failure; the message names file, line and field."""


def _parse_bool(value: str, where: str) -> bool:
    low = value.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {value!r}")


def read_config(path: str) -> dict:
    """Flat key=value file; '#' starts a comment."""
    config = {}
    try:
        lines = open(path).read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}, line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        config[key] = value
    return config


def read_table(path: str) -> np.ndarray:
    """Delimited numeric table; '#' comments, optional header row."""
    try:
        raw = open(path).read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    rows, line_numbers = [], []
    for lineno, line in enumerate(raw, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        fields = text.replace(",", " ").split()
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            if not rows:
                continue    # header row
            raise ConfigError(f"{path}, line {lineno}: non-numeric field in {line!r}")
        line_numbers.append(lineno)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConfigError(f"{path}: rows have inconsistent column counts {sorted(widths)}")
    return np.array(rows), line_numbers


def load_integrand(path: str, log_x: bool, log_y: bool) -> IntegrandTable:
    data, _ = read_table(path)
    if data.shape[1] < 2:
        raise ConfigError(f"{path}: need at least two columns (x and one integrand)")
    try:
        return IntegrandTable(data[:, 0], data[:, 1:], log_x=log_x, log_y=log_y)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_float_list(value: str, where: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in value.replace(",", " ").split()])
    except ValueError:
        raise ConfigError(f"{where}: expected numbers, got {value!r}")


def build_request(config: dict, count: int, config_path: str) -> BatchRequest:
    diagonal = _parse_bool(config.get("diagonal", "false"), f"{config_path}: diagonal")
    k_keys = [f"k{i + 1}" for i in range(count)]
    ell_keys = [f"ell{i + 1}" for i in range(count)]

    if "batch_file" in config:
        path = config["batch_file"]
        data, line_numbers = read_table(path)
        expected = 2 + 2 * count
        if data.shape[1] != expected:
            raise ConfigError(
                f"{path}: expected {expected} columns "
                f"(a b {' '.join(k_keys)} {' '.join(ell_keys)}), got {data.shape[1]}"
            )
        a, b = data[:, 0], data[:, 1]
        ks = [data[:, 2 + i] for i in range(count)]
        ells = [data[:, 2 + count + i] for i in range(count)]
        # validate per row so errors carry the file location
        for row, lineno in enumerate(line_numbers, 1):
            if a[row - 1] <= 0:
                raise ConfigError(
                    f"{path}, row {row} (line {lineno}), field a: must be positive"
                )
            if a[row - 1] >= b[row - 1]:
                raise ConfigError(
                    f"{path}, row {row} (line {lineno}), field a: "
                    f"a < b required (a={a[row - 1]:g}, b={b[row - 1]:g})"
                )
            for key, col in zip(k_keys, ks):
                if col[row - 1] <= 0:
                    raise ConfigError(
                        f"{path}, row {row} (line {lineno}), field {key}: must be positive"
                    )
            for key, col in zip(ell_keys, ells):
                v = col[row - 1]
                if v < 0 or v != int(v):
                    raise ConfigError(
                        f"{path}, row {row} (line {lineno}), field {key}: "
                        f"must be a non-negative integer"
                    )
    else:
        missing = [key for key in ["a", "b", *k_keys, *ell_keys] if key not in config]
        if missing:
            raise ConfigError(
                f"{config_path}: missing batch keys {missing} (or use batch_file=...)"
            )
        arrays = {key: _parse_float_list(config[key], f"{config_path}: {key}")
                  for key in ["a", "b", *k_keys, *ell_keys]}
        m = max(len(v) for v in arrays.values())
        for key, v in arrays.items():
            if len(v) == 1 and m > 1:
                arrays[key] = np.full(m, v[0])
            elif len(v) != m:
                raise ConfigError(
                    f"{config_path}: {key} has {len(v)} entries, expected {m}"
                )
        a, b = arrays["a"], arrays["b"]
        ks = [arrays[key] for key in k_keys]
        ells = [arrays[key] for key in ell_keys]

    if len(a) == 0:
        raise ConfigError(f"{config_path}: empty batch")
    try:
        return BatchRequest(a=a, b=b, k=tuple(ks), ell=tuple(ells), diagonal=diagonal)
    except ValueError as exc:
        raise ConfigError(f"{config_path}: {exc}") from exc


def build_settings(config: dict, config_path: str) -> LevinSettings:
    kwargs = {}
    for key, cast in [("n_sub", int), ("max_bisections", int), ("rel_acc", float),
                      ("low_freq_threshold", float)]:
        if key in config:
            try:
                kwargs[key] = cast(config[key])
            except ValueError:
                raise ConfigError(f"{config_path}: {key}: expected {cast.__name__}")
    if "boost_bessel" in config:
        kwargs["boost_bessel"] = _parse_bool(
            config["boost_bessel"], f"{config_path}: boost_bessel")
    if "verbose" in config:
        kwargs["verbose"] = _parse_bool(config["verbose"], f"{config_path}: verbose")
    try:
        return LevinSettings(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{config_path}: {exc}") from exc


def _header_lines(config_path: str, settings: LevinSettings) -> list[str]:
    digest = hashlib.sha256(open(config_path, "rb").read()).hexdigest()[:16]
    return [
        f"# oscint {__version__}",
        f"# config sha256 {digest}",
        f"# settings n_sub={settings.n_sub} max_bisections={settings.max_bisections} "
        f"rel_acc={settings.rel_acc:g} low_freq_threshold={settings.low_freq_threshold:g}",
    ]


def cmd_integrate(args) -> int:
    config = read_config(args.config)
    for key in ("integral_type", "integrand_file"):
        if key not in config:
            raise ConfigError(f"{args.config}: missing required key {key}")
    try:
        integral_type = IntegralType(int(config["integral_type"]))
    except ValueError:
        raise ConfigError(
            f"{args.config}: integral_type must be an integer in 0..5, "
            f"got {config['integral_type']!r}"
        )
    log_x = _parse_bool(config.get("log_x", "false"), f"{args.config}: log_x")
    log_y = _parse_bool(config.get("log_y", "false"), f"{args.config}: log_y")
    table = load_integrand(config["integrand_file"], log_x, log_y)
    settings = build_settings(config, args.config)
    request = build_request(config, integral_type.count, args.config)

    workers = args.threads or int(os.environ.get("OSCINT_THREADS", "1"))
    session = Session(integral_type, table, settings, workers=workers)
    try:
        result = session.integrate_batch(request)
    except ValueError as exc:
        raise ConfigError(f"{args.config}: {exc}")

    out_path = args.out or config.get("output")
    lines = _header_lines(args.config, settings)
    count = integral_type.count
    cols = (["a", "b"] + [f"k{i + 1}" for i in range(count)]
            + [f"ell{i + 1}" for i in range(count)])
    if request.diagonal:
        cols += ["value", "converged"]
    else:
        cols += [f"value{j + 1}" for j in range(table.n_integrands)] + ["converged"]
    lines.append("# " + " ".join(cols))
    for i in range(len(request)):
        fields = [f"{request.a[i]:.17g}", f"{request.b[i]:.17g}"]
        fields += [f"{ki[i]:.17g}" for ki in request.k]
        fields += [str(li[i]) for li in request.ell]
        if request.diagonal:
            fields.append(f"{result.values[i]:.17g}")
        else:
            fields += [f"{v:.17g}" for v in result.values[i]]
        fields.append(str(int(result.converged[i])))
        lines.append(" ".join(fields))
    text = "\n".join(lines) + "\n"
    if out_path:
        open(out_path, "w").write(text)
    else:
        sys.stdout.write(text)

    if not result.converged.all():
        bad = np.flatnonzero(~result.converged)
        print(
            f"warning: {len(bad)} entries did not converge: {bad.tolist()}",
            file=sys.stderr,
        )
        return 2
    return 0


def cmd_selftest(args) -> int:
    a_matrix_fn = None
    if args.inject_a_sign_flip:
        from . import bessel

        def a_matrix_fn(kind, params, x):
            return -bessel.a_matrix(kind, params, x)

    return 0 if run_selftest(quick=args.quick, a_matrix_fn=a_matrix_fn) else 1


def cmd_bench(args) -> int:
    if args.problem not in PROBLEMS:
        print(f"unknown benchmark {args.problem!r}; choose from "
              f"{sorted(PROBLEMS)}", file=sys.stderr)
        return 1
    res = run_benchmark(args.problem, n_k=args.n_k, oracle_every=args.oracle_every)
    k = res["k"]
    levin_pp = res["levin_time"] / len(k)
    oracle_pp = res["oracle_time"] / max(1, res["n_oracle"])
    speedup = oracle_pp / levin_pp if levin_pp > 0 else float("inf")

    lines = [
        f"# oscint {__version__} bench {args.problem}",
        f"# levin warm total {res['levin_time']:.4g} s "
        f"(cold {res['cold_time']:.4g} s), oracle total {res['oracle_time']:.4g} s "
        f"over {res['n_oracle']} points, per-point speedup {speedup:.4g}x",
    ]
    cols = ["k", "levin", "oracle", "rel_diff", "levin_time", "oracle_time", "speedup"]
    if res["closed_form"] is not None:
        cols.insert(3, "closed_form")
    lines.append("# " + " ".join(cols))
    for i in range(len(k)):
        oracle = res["oracle"][i] if res["oracle_converged"][i] else float("nan")
        rel = (abs(res["levin"][i] - oracle) / abs(oracle)
               if np.isfinite(oracle) and oracle != 0 else float("nan"))
        fields = [f"{k[i]:.17g}", f"{res['levin'][i]:.17g}", f"{oracle:.17g}"]
        if res["closed_form"] is not None:
            fields.insert(3, f"{res['closed_form'][i]:.17g}")
        fields += [f"{rel:.6g}", f"{levin_pp:.6g}", f"{oracle_pp:.6g}", f"{speedup:.6g}"]
        lines.append(" ".join(fields))
    text = "\n".join(lines) + "\n"
    if args.out:
        open(args.out, "w").write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscint",
        description="Integrals of tabulated functions times products of Bessel functions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_int = sub.add_parser("integrate", help="run a batch of integrals from a config")
    p_int.add_argument("--config", required=True)
    p_int.add_argument("--threads", type=int, default=None)
    p_int.add_argument("--out", default=None)
    p_int.set_defaults(fn=cmd_integrate)

    p_self = sub.add_parser("selftest", help="run the built-in validation suite")
    p_self.add_argument("--quick", action="store_true")
    p_self.add_argument("--inject-a-sign-flip", action="store_true",
                        help=argparse.SUPPRESS)
    p_self.set_defaults(fn=cmd_selftest)

    p_bench = sub.add_parser("bench", help="benchmark against reference quadrature")
    p_bench.add_argument("--problem", required=True)
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--n-k", type=int, default=None)
    p_bench.add_argument("--oracle-every", type=int, default=1)
    p_bench.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
