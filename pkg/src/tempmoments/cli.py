"""Command-line interface.

Subcommands: ``generate``, ``moments``, ``fit``, ``compare``, ``simulate``,
``report`` and ``demo``. All files use SI units (Hz, seconds). Every output
file starts with provenance (tool version, seed, SHA-256 of inputs) and
contains no timestamps, so identical invocations give identical bytes.

Exit codes: 0 success, 1 computational failure, 2 input/format error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import secrets
import sys
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InputError, RealizationError, TempMomentsError
from .inference import FAMILIES, bootstrap_corr_ci, fit, pearson
from .models import MarginalParams, MvlnParams, MvnParams, load_params, params_to_dict
from .moments import MomentMatrix, batch_moments, read_moment_matrix, standardize_array, write_moment_matrix
from .report import density_grid, ecdf, qq_data, write_ecdf_csv, write_qq_csv
from .selection import compare
from .signal import read_frequency_response, write_frequency_response
from .simulate import SynthChannelConfig, generate_channels, sample_standardized

EXIT_OK, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2

STANDARDIZED_NAMES = ("p0", "tau_bar", "tau_rms")
MODEL_CORR_SAMPLES = 10_000


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class Provenance:
    """Header lines / JSON block shared by every output of one invocation."""

    def __init__(self, command, seed=None, inputs=()):
        self.command = command
        self.seed = seed
        self.inputs = [(str(p), _digest(p)) for p in inputs]

    def lines(self):
        out = [f"tempmoments {__version__}", f"command: {self.command}"]
        out.append(f"seed: {self.seed if self.seed is not None else 'not used'}")
        out += [f"input: {p} sha256={d}" for p, d in self.inputs]
        return out

    def as_dict(self):
        return {
            "tool": "tempmoments",
            "version": __version__,
            "command": self.command,
            "seed": self.seed,
            "inputs": [{"path": p, "sha256": d} for p, d in self.inputs],
        }


def _seed(args):
    if getattr(args, "seed", None) is None:
        return secrets.randbits(63)
    return args.seed


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _expand_inputs(items):
    files = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            files += sorted(q for q in p.iterdir() if q.suffix == ".csv")
        elif p.exists():
            files.append(p)
        else:
            raise InputError(f"{p}: no such file or directory")
    if not files:
        raise InputError("no input files")
    return files


# --- subcommands -------------------------------------------------------------


def cmd_generate(args):
    seed = _seed(args)
    cfg_inputs = []
    cfg = SynthChannelConfig()
    if args.config:
        with open(args.config) as fh:
            cfg = SynthChannelConfig.from_dict(json.load(fh))
        cfg_inputs = [args.config]
    if args.snr_db is not None:
        cfg = SynthChannelConfig.from_dict({**json.loads(cfg.to_json()), "snr_db": args.snr_db})
    out = _out_dir(args.out)
    prov = Provenance("generate", seed, cfg_inputs)
    channels = generate_channels(cfg, args.n, seed)
    width = max(4, len(str(args.n - 1)))
    for i, ch in enumerate(channels):
        write_frequency_response(ch, out / f"channel_{i:0{width}d}.csv", prov.lines())
    _write_json(out / "config.json", {**json.loads(cfg.to_json()), "provenance": prov.as_dict()})
    print(f"wrote {len(channels)} channels to {out}")
    return EXIT_OK


def cmd_moments(args):
    files = _expand_inputs(args.inputs)
    good, failures = [], []
    for f in files:
        try:
            good.append((f, read_frequency_response(f)))
        except TempMomentsError as exc:
            failures.append((f, exc))
    rows, used = [], []
    if good:
        ref = good[0][1]
        for f, freq in good:
            try:
                if freq.n_samples != ref.n_samples or not np.isclose(freq.delta_f, ref.delta_f, rtol=1e-9):
                    raise InputError("frequency grid differs from the first file")
                rows.append(batch_moments([freq], args.k, args.oversampling).values[0])
                used.append(f)
            except RealizationError as exc:
                failures.append((f, exc.cause))
            except TempMomentsError as exc:
                failures.append((f, exc))
    for f, exc in failures:
        print(f"error: {f}: {exc}", file=sys.stderr)
    if rows:
        prov = Provenance("moments", None, used)
        write_moment_matrix(MomentMatrix(np.array(rows)), args.out, prov.lines())
        print(f"wrote {len(rows)} x {args.k} moment matrix to {args.out}")
    if failures:
        return EXIT_INPUT if any(isinstance(e, InputError) for _, e in failures) else EXIT_COMPUTE
    return EXIT_OK


def cmd_fit(args):
    data = read_moment_matrix(args.data)
    family = args.family[0] if args.family else "mvln"
    res = fit(data, family)
    prov = Provenance("fit", None, [args.data])
    res.save(args.out, {"provenance": prov.as_dict()})
    print(_fit_summary(res))
    return EXIT_OK


def _fit_summary(res):
    lines = [f"{res.family}: log-likelihood {res.log_likelihood:.4f}, k={res.n_params}, N={res.n_obs}"]
    p = res.model
    ci = res.ci_half_widths or {}
    if isinstance(p, MvlnParams):
        for k in range(p.K):
            d = ci.get(f"mu{k}")
            lines.append(f"  mu{k} = {p.mu[k]:.6g}" + (f" (+-{d:.2g})" if d else ""))
        for i, j in zip(*np.triu_indices(p.K)):
            d = ci.get(f"sigma{i}{j}")
            lines.append(f"  sigma{i}{j} = {p.sigma[i, j]:.6g}" + (f" (+-{d:.2g})" if d else ""))
        if p.K >= 2:
            lines.append(f"  median mean delay = {np.exp(p.mu[1] - p.mu[0]) * 1e9:.4g} ns")
    return "\n".join(lines)


def cmd_compare(args):
    data = read_moment_matrix(args.data)
    families = args.family or list(FAMILIES)
    table = compare(data, families, label=Path(args.data).stem)
    prov = Provenance("compare", None, [args.data])
    table.write_csv(args.out, prov.lines())
    text = table.to_text()
    with open(Path(args.out).with_suffix(".txt"), "w") as fh:
        for h in prov.lines():
            fh.write(f"# {h}\n")
        fh.write(text)
    print(text, end="")
    return EXIT_OK


def _require_mvln(params):
    if not isinstance(params, MvlnParams):
        raise InputError(f"simulation needs mvln parameters, got {params.family}")
    return params


def cmd_simulate(args):
    seed = _seed(args)
    params = _require_mvln(load_params(args.params))
    out = _out_dir(args.out)
    prov = Provenance("simulate", seed, [args.params])
    lines = prov.lines()
    if params.K >= 3:
        sim = sample_standardized(params, args.n, seed)
        lines = lines + [f"rejected rows: {sim.n_rejected}", f"jitter: {sim.jitter!r}"]
        raw = sim.raw
        with open(out / "standardized.csv", "w", newline="") as fh:
            for h in lines:
                fh.write(f"# {h}\n")
            fh.write("p0,tau_bar_s,tau_rms_s\n")
            for row in sim.as_array():
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    else:
        from .simulate import sample_mvln

        raw = sample_mvln(params, args.n, seed)
        lines = lines + [f"jitter: {raw.meta['jitter']!r}"]
    write_moment_matrix(raw, out / "moments.csv", lines)
    print(f"wrote {args.n} simulated rows to {out}")
    return EXIT_OK


def _marginals_of(params):
    if isinstance(params, MvlnParams):
        return MarginalParams("lognormal", params.mu, np.sqrt(np.diag(params.sigma)))
    if isinstance(params, MvnParams):
        return MarginalParams("gaussian", params.mean, np.sqrt(np.diag(params.cov)))
    return params


def cmd_report(args):
    seed = _seed(args)
    data = read_moment_matrix(args.data)
    params = load_params(args.params)
    if params.K != data.K:
        raise InputError(f"data has K={data.K}, parameters have K={params.K}")
    out = _out_dir(args.out)
    prov = Provenance("report", seed, [args.data, args.params])
    lines = prov.lines()
    root = np.random.SeedSequence(seed)
    s_boot, s_grid, s_model = (int(s.generate_state(1, np.uint64)[0] >> 1) for s in root.spawn(3))

    marg = _marginals_of(params)
    qqs = [qq_data(data.column(k), marg.dist(k), dim=k) for k in range(data.K)]
    write_qq_csv(qqs, out / "qq.csv", lines)

    for k in range(data.K):
        v, f = ecdf(data.column(k))
        write_ecdf_csv(v, f, out / f"ecdf_m{k}.csv", lines)

    if isinstance(params, (MvlnParams, MvnParams)) and data.K >= 2:
        grid = density_grid(data, params, resolution=args.resolution, seed=s_grid)
        with open(out / "density.json", "w") as fh:
            fh.write(grid.to_json({"provenance": prov.as_dict()}))
            fh.write("\n")

    if data.K >= 3:
        p0, tau_bar, var = standardize_array(data.values)
        ok = var >= 0
        std = np.column_stack([p0[ok], tau_bar[ok], np.sqrt(var[ok])])
        rep = bootstrap_corr_ci(std, args.bootstrap, s_boot, STANDARDIZED_NAMES)
        rep.write_csv(out / "correlation.csv", lines)
        rep.write_percentile_csv(out / "correlation_percentile.csv", lines)
        for k, name in enumerate(STANDARDIZED_NAMES):
            v, f = ecdf(std[:, k])
            write_ecdf_csv(v, f, out / f"ecdf_{name}.csv", lines)
        if isinstance(params, MvlnParams):
            sim = sample_standardized(params, MODEL_CORR_SAMPLES, s_model)
            sa = sim.as_array()
            with open(out / "model_correlation.csv", "w", newline="") as fh:
                for h in lines + [f"rejected rows: {sim.n_rejected}"]:
                    fh.write(f"# {h}\n")
                fh.write("pair,rho,n_samples\n")
                for i, j in combinations(range(3), 2):
                    rho = pearson(sa[:, i], sa[:, j])
                    fh.write(f"{STANDARDIZED_NAMES[i]}-{STANDARDIZED_NAMES[j]},{rho:.17g},{len(sim)}\n")
    print(f"wrote report files to {out}")
    return EXIT_OK


def cmd_demo(args):
    """generate -> moments -> fit -> compare -> simulate -> report."""
    seed = args.seed if args.seed is not None else 2021
    out = _out_dir(args.out)
    ch = out / "channels"
    steps = [
        ["generate", "--n", str(args.n), "--seed", str(seed), "--snr-db", "40", "--out", str(ch)],
        ["moments", str(ch), "--k", str(args.k), "--oversampling", str(args.oversampling),
         "--out", str(out / "moments.csv")],
        ["fit", str(out / "moments.csv"), "--family", "mvln", "--out", str(out / "fit.json")],
        ["compare", str(out / "moments.csv"), "--out", str(out / "comparison.csv")],
        ["simulate", str(out / "fit.json"), "--n", str(args.n), "--seed", str(seed + 1),
         "--out", str(out / "simulated")],
        ["report", str(out / "moments.csv"), str(out / "fit.json"), "--seed", str(seed + 2),
         "--bootstrap", str(args.bootstrap), "--resolution", str(args.resolution),
         "--out", str(out / "report")],
    ]
    for argv in steps:
        print(f"$ tempmoments {' '.join(argv)}")
        code = main(argv)
        if code != EXIT_OK:
            return code
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tempmoments",
        description="Temporal moments of wideband channels and their joint log-normal model. "
        "Moments are computed without noise thresholding and without subtracting "
        "the delay spread of the measurement window.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False, k=False):
        if seed:
            p.add_argument("--seed", type=int, default=None, help="root RNG seed (recorded in outputs)")
        if k:
            p.add_argument("--k", type=int, default=3, help="number of raw moments (default 3)")
            p.add_argument("--oversampling", type=int, default=8, help="time-grid oversampling (default 8)")

    p = sub.add_parser("generate", help="synthetic multipath transfer functions")
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--snr-db", type=float, default=None)
    p.add_argument("--out", required=True, help="output directory")
    common(p, seed=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("moments", help="raw moments of f_hz,re,im CSV files")
    p.add_argument("inputs", nargs="+", help="CSV files or directories")
    p.add_argument("--out", required=True)
    common(p, k=True)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("fit", help="maximum-likelihood fit with Fisher intervals")
    p.add_argument("data", help="moment-matrix CSV")
    p.add_argument("--family", action="append", choices=FAMILIES)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="AIC/BIC comparison of model families")
    p.add_argument("data")
    p.add_argument("--family", action="append", choices=FAMILIES)
    p.add_argument("--out", required=True, help="comparison CSV (a .txt table is written alongside)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="sample raw and standardized moments from mvln parameters")
    p.add_argument("params", help="parameter or fit JSON")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--out", required=True, help="output directory")
    common(p, seed=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="Q-Q, density, ECDF and correlation data")
    p.add_argument("data")
    p.add_argument("params")
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--out", required=True, help="output directory")
    common(p, seed=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("demo", help="run the full pipeline on synthetic channels")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--out", required=True)
    common(p, seed=True, k=True)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TempMomentsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
