"""Command-line front end.

    sepdist protocol   build beta and report entanglement / correlations
    sepdist certify    separability certificate across a cut
    sepdist sweep      finite-count white-noise sweep (CSV + JSON)
    sepdist tomo       one simulated or supplied tomography reconstruction

Every output embeds the resolved configuration; timestamps go only to the
``run.log`` sidecar so outputs are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .correlations import cut_report, eq1_report, eq2_report
from .protocol import DEFAULT_CX, add_white_noise, build_beta
from .qstate import THREE_QUBIT_CUTS, QuantumState, as_bipartition, fidelity, load_matrix
from .separability import (
    DEFAULT_TOL,
    certify_separable,
    empty_dictionary,
    extend_dictionary,
    seed_dictionary_ideal,
    verify_certificate,
)
from .sweep import default_p_values, monte_carlo_sweep
from .tomography import (
    DEFAULT_INTENSITY,
    CountsTable,
    MLEConfig,
    linear_reconstruct,
    mle_reconstruct,
    simulate_counts,
)

log = logging.getLogger("sepdist")

EXIT_OK = 0
EXIT_NOT_CERTIFIED = 1
EXIT_ERROR = 2


class CLIError(Exception):
    pass


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="master RNG seed (default: %(default)s)")
    p.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    p.add_argument("--config", default=None, help="JSON file of option defaults")


def _add_state(p):
    p.add_argument("--state", default="beta", choices=["beta"], help="builtin target state")
    p.add_argument("--matrix", default=None, help="JSON matrix file overriding --state")
    p.add_argument("--cx", type=float, default=DEFAULT_CX, help="carrier parameter c_x (default: %(default)s)")
    p.add_argument("--noise", type=float, default=0.0, help="white-noise admixture p (default: %(default)s)")


def _add_mle(p):
    p.add_argument("--max-iter", type=int, default=5000, help="MLE iteration cap (default: %(default)s)")
    p.add_argument("--mle-tol", type=float, default=1e-10, help="relative log-likelihood tolerance (default: %(default)s)")
    p.add_argument("--dilution", type=float, default=1.0, help="dilution step for fallback updates (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepdist", description="Entanglement distribution via separable carriers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("protocol", help="build beta and report cuts, information and discord checks")
    _add_common(p)
    p.add_argument("--cx", type=float, default=DEFAULT_CX, help="carrier parameter c_x (default: %(default)s)")
    p.add_argument("--noise", type=float, default=0.0, help="white-noise admixture p (default: %(default)s)")
    p.add_argument("--grid-size", type=int, default=2000, help="Bloch-hemisphere grid for the deficit (default: %(default)s)")

    p = sub.add_parser("certify", help="certify separability by explicit product-state decomposition")
    _add_common(p)
    _add_state(p)
    p.add_argument("--cut", default="C|AB", help="bipartition, e.g. C|AB (default: %(default)s)")
    p.add_argument(
        "--dictionary",
        default="ideal+random",
        choices=["ideal", "random", "ideal+random"],
        help="product-state dictionary (default: %(default)s)",
    )
    p.add_argument("--n-random", type=int, default=3000, help="random product states to add (default: %(default)s)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="max-norm residual tolerance (default: %(default)s)")

    p = sub.add_parser("sweep", help="finite-count white-noise sweep")
    _add_common(p)
    p.add_argument("--pvalues", type=int, default=50, help="number of noise values (default: %(default)s)")
    p.add_argument("--pmax", type=float, default=1 / 3, help="largest noise value (default: 1/3)")
    p.add_argument("--samples", type=int, default=500, help="reconstructions per noise value (default: %(default)s)")
    p.add_argument("--intensity", type=float, default=DEFAULT_INTENSITY, help="expected counts per setting (default: 30000/27)")
    p.add_argument("--mode", default="mixture", choices=["mixture", "terms"], help="count simulation mode (default: %(default)s)")
    p.add_argument("--cx", type=float, default=DEFAULT_CX, help="carrier parameter c_x (default: %(default)s)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers; results do not depend on it (default: %(default)s)")
    _add_mle(p)

    p = sub.add_parser("tomo", help="single tomography reconstruction")
    _add_common(p)
    _add_state(p)
    p.add_argument("--counts", default=None, help="counts file (.csv or .json) instead of simulating")
    p.add_argument("--intensity", type=float, default=DEFAULT_INTENSITY, help="expected counts per setting (default: 30000/27)")
    _add_mle(p)
    return parser


def _load_config(path, command):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise CLIError("config file must hold a JSON object")
    section = data.get(command, data)
    return {k.replace("-", "_"): v for k, v in section.items() if not isinstance(v, dict)}


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        overrides = _load_config(args.config, args.command)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = set(overrides) - known
        if unknown:
            raise CLIError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        subparser.set_defaults(**overrides)
        args = parser.parse_args(argv)
    return args


def resolved_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "out")}


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _target_state(args) -> QuantumState:
    if args.matrix:
        try:
            state = load_matrix(args.matrix)
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise CLIError(f"malformed matrix file {args.matrix}: {exc}") from None
    else:
        state = build_beta(args.cx)
    return add_white_noise(state, args.noise) if args.noise else state


def _cut_reports(state):
    return [cut_report(state, c).to_dict() for c in THREE_QUBIT_CUTS]


def cmd_protocol(args) -> int:
    out = Path(args.out)
    config = resolved_config(args)
    beta = build_beta(args.cx)
    if args.noise:
        beta = add_white_noise(beta, args.noise)
    _write(out / "beta.json", _dump({**beta.to_dict(), "config": config}))
    report = {
        "config": config,
        "cuts": _cut_reports(beta),
        "information": eq1_report(beta).to_dict(),
        "discord": eq2_report(beta, grid_size=args.grid_size).to_dict(),
    }
    _write(out / "report.json", _dump(report))
    for c in report["cuts"]:
        print(f"{c['cut']:>5}  min PT eigenvalue {c['min_pt_eigenvalue']:+.6f}  {'PPT' if c['is_ppt'] else 'NPT'}")
    return EXIT_OK


def cmd_certify(args) -> int:
    out = Path(args.out)
    config = resolved_config(args)
    target = _target_state(args)
    try:
        cut = as_bipartition(args.cut, len(target.dims))
    except ValueError as exc:
        raise CLIError(str(exc)) from None

    witness = cut_report(target, cut)
    if not witness.is_ppt:
        record = {
            "config": config,
            "certified": False,
            "reason": "partial transpose has a negative eigenvalue; the state is entangled across this cut",
            "min_pt_eigenvalue": witness.min_pt_eigenvalue,
            "cut": str(cut),
        }
        _write(out / "failure.json", _dump(record))
        print(f"refused: {cut} is NPT (min PT eigenvalue {witness.min_pt_eigenvalue:+.6f})")
        return EXIT_NOT_CERTIFIED

    if args.dictionary == "random":
        d = empty_dictionary(cut, target.dims)
    else:
        d = seed_dictionary_ideal()
        if d.cut != cut or d.dims != tuple(target.dims):
            raise CLIError("the ideal dictionary only covers the C|AB cut of three qubits")
    if args.dictionary != "ideal":
        d = extend_dictionary(d, args.n_random, args.seed)

    result = certify_separable(target, cut, d, args.tol)
    if result.certified:
        check = verify_certificate(result, target)
        if check:
            _write(out / "certificate.json", _dump({**result.to_dict(), "config": config, "verified": True}))
            print(f"certified {cut}: {len(result.weights)} terms, residual {result.residual:.3e}")
            return EXIT_OK
        record = {**result.to_dict(), "certified": False, "verifier_reasons": check.reasons}
    else:
        record = result.to_dict()
    _write(out / "failure.json", _dump({**record, "config": config}))
    print(f"not certified {cut}: best residual {record.get('best_residual', record.get('residual')):.3e}")
    return EXIT_NOT_CERTIFIED


def cmd_sweep(args) -> int:
    out = Path(args.out)
    config = resolved_config(args)
    cfg = MLEConfig(args.max_iter, args.mle_tol, args.dilution)
    result = monte_carlo_sweep(
        build_beta(args.cx),
        p_values=default_p_values(args.pvalues, args.pmax),
        samples_per_p=args.samples,
        intensity=args.intensity,
        cfg=cfg,
        rng_seed=args.seed,
        mode=args.mode,
        n_jobs=args.jobs,
    )
    # n_jobs does not influence results, so it is kept out of the embedded config
    result.config["cli"] = {k: v for k, v in config.items() if k != "jobs"}
    _write(out / "sweep.csv", result.to_csv())
    _write(out / "sweep.json", result.to_json(sort_keys=True) + "\n")
    prop = result.success_proportion
    print(f"success proportion: p=0 -> {prop[0]:.3f}, p={result.p_values[-1]:.4f} -> {prop[-1]:.3f}")
    return EXIT_OK


def _load_counts(path) -> CountsTable:
    text = Path(path).read_text()
    try:
        return CountsTable.from_json(text) if str(path).endswith(".json") else CountsTable.from_csv(text)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise CLIError(f"malformed counts file {path}: {exc}") from None


def cmd_tomo(args) -> int:
    out = Path(args.out)
    config = resolved_config(args)
    truth = None
    if args.counts:
        counts = _load_counts(args.counts)
    else:
        truth = _target_state(args)
        counts = simulate_counts(truth, intensity=args.intensity, rng_seed=args.seed)
        _write(out / "counts.csv", f"# config: {json.dumps(config, sort_keys=True)}\n" + counts.to_csv())
    res = mle_reconstruct(counts, MLEConfig(args.max_iter, args.mle_tol, args.dilution))
    linear = linear_reconstruct(counts)
    _write(out / "state.json", _dump({**res.state.to_dict(), "config": config}))
    report = {
        "config": config,
        "mle": {"iterations": res.n_iter, "converged": res.converged, "log_likelihood": res.log_likelihood},
        "cuts": _cut_reports(res.state),
        "linear_inversion_min_eigenvalue": float(np.linalg.eigvalsh(linear.matrix)[0]),
    }
    if truth is not None:
        report["fidelity_to_truth"] = fidelity(res.state, truth)
    _write(out / "report.json", _dump(report))
    print(f"reconstructed in {res.n_iter} iterations; cuts: "
          + ", ".join(f"{c['cut']} {c['min_pt_eigenvalue']:+.4f}" for c in report["cuts"]))
    return EXIT_OK


COMMANDS = {"protocol": cmd_protocol, "certify": cmd_certify, "sweep": cmd_sweep, "tomo": cmd_tomo}


def _sidecar(out, argv):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.info("sepdist %s %s", __version__, " ".join(argv))
    return handler


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    handler = None
    try:
        handler = _sidecar(args.out, argv)
        code = COMMANDS[args.command](args)
        log.info("finished %s with exit code %d at %s", args.command, code, datetime.datetime.now().isoformat())
        return code
    except (CLIError, ValueError, OSError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        if handler is not None:
            log.removeHandler(handler)
            handler.close()


if __name__ == "__main__":
    sys.exit(main())
