"""Command-line front end.

Exit codes: 0 ok, 2 input error, 3 parity error, 4 non-convergence, 5 cross-check failure.
Every run writes a manifest into the output directory (``--out``, else the
``GMONOPOLE_OUTPUT_DIR`` environment variable, else ./gmonopole-runs).
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

EXIT_OK, EXIT_INPUT, EXIT_PARITY, EXIT_NONCONVERGED, EXIT_CROSSCHECK = 0, 2, 3, 4, 5
OUTPUT_ENV = "GMONOPOLE_OUTPUT_DIR"
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class InputError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None = None
    versions: dict = field(default_factory=dict)
    timestamps: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    exit_code: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(**{k: d[k] for k in ("command", "parameters", "seed", "versions", "timestamps",
                                         "outputs", "exit_code") if k in d})

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"manifest-{self.command}.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


def _versions() -> dict:
    import numpy
    import scipy
    from . import __version__
    return {"gmonopole": __version__, "numpy": numpy.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def output_dir(arg: str | None) -> Path:
    path = Path(arg or os.environ.get(OUTPUT_ENV) or "gmonopole-runs")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _ints(text: str | None) -> list[int]:
    if text is None or text == "":
        return []
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"expected integers, got {text!r}") from None


def _range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise InputError(f"range must look like lo..hi, got {text!r}") from None


def _load_manifold(path: str):
    from .topology import FourManifoldData
    try:
        return FourManifoldData.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise InputError(f"cannot read manifold file {path}: {exc}") from None


# ----------------------------------------------------------------------------- commands

def cmd_classify(args, outputs: list) -> int:
    from .topology import enumerate_spinh_classes, enumerate_spinu2_classes, has_spinc
    X = _load_manifold(args.manifold)
    if args.group == "spinc":
        ok, lift = has_spinc(X)
        _emit([[int(c) for c in lift]] if ok else [])
        return EXIT_OK
    lo_hi = _range(args.range)
    w2P = _ints(args.w2P) or [0] * X.b2
    if args.group == "spinh":
        _emit(enumerate_spinh_classes(X, w2P, lo_hi))
    else:
        classes = enumerate_spinu2_classes(X, w2P, _ints(args.c1) or [0] * X.b2, lo_hi)
        _emit([c.p1 for c in classes])
    return EXIT_OK


def cmd_dim(args, outputs: list) -> int:
    from .topology import expected_dimension
    sys.stdout.write(f"{expected_dimension(args.p1, args.c1sq, args.euler, args.sigma)}\n")
    return EXIT_OK


def cmd_admissible(args, outputs: list) -> int:
    from .reductions import SubpairSpec, is_admissible, quadratic_value
    try:
        spec = SubpairSpec.from_dict(json.loads(Path(args.subpair).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read subpair file: {exc}") from None
    res = is_admissible(spec)
    out = {"admissible": res.admissible, "reason": res.reason, "witness": None}
    if not res.admissible and res.witness_k is not None:
        enc = SubpairSpec(spec.group, [res.witness_k], [res.witness_v]).to_dict()
        out["witness"] = {"k": enc["h_basis"][0], "v": enc["v0_basis"][0],
                          "value": quadratic_value(res.witness_k, res.witness_v)}
    _emit(out)
    return EXIT_OK


def cmd_p2_example(args, outputs: list) -> int:
    from . import kahler
    try:
        report = kahler.p2_example_summary()
    except kahler.CrossCheckError as exc:
        sys.stderr.write(f"cross-check failed: {exc}\n")
        return EXIT_CROSSCHECK
    _emit(report)
    return EXIT_OK


SOLVE_DEFAULTS = {
    "lattice": {"n": 3, "a": 1.0, "kind": "abelian"},
    "variant": {"name": "plain", "beta": [0.0, 0.0, 0.0]},
    "start": {"mode": "perturbed", "size": 1e-2, "seed": 7},
    "solver": {"tol": 1e-8, "max_iter": 5000, "newton": True},
}


def load_solve_config(path) -> dict:
    import tomli
    try:
        raw = tomli.loads(Path(path).read_text())
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    cfg = {}
    for section, defaults in SOLVE_DEFAULTS.items():
        given = raw.get(section, {})
        unknown = set(given) - set(defaults)
        if unknown:
            raise InputError(f"unknown keys in [{section}]: {sorted(unknown)}")
        cfg[section] = {**defaults, **given}
    extra = set(raw) - set(SOLVE_DEFAULTS)
    if extra:
        raise InputError(f"unknown sections: {sorted(extra)}")
    return cfg


def cmd_solve(args, outputs: list) -> int:
    import numpy as np
    from .lattice import LatticeGeometry, Variant, flat_config, write_field_csv
    from .solver import StepPolicy, perturbed_flat, solve
    conf = load_solve_config(args.config)
    lat, var, start, sol = conf["lattice"], conf["variant"], conf["start"], conf["solver"]
    try:
        geom = LatticeGeometry(int(lat["n"]), float(lat["a"]))
        variant = Variant(var["name"], tuple(var["beta"]))
        if variant.kind != lat["kind"]:
            raise ValueError(f"variant {variant.name!r} needs kind {variant.kind!r}")
        if start["mode"] == "flat":
            cfg0 = flat_config(geom, lat["kind"])
        elif start["mode"] == "perturbed":
            cfg0 = perturbed_flat(geom, lat["kind"], float(start["size"]), int(start["seed"]))
        else:
            raise ValueError(f"unknown start mode {start['mode']!r}")
        if int(sol["max_iter"]) < 0:
            raise ValueError("max_iter must be non-negative")
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    policy = StepPolicy(newton=bool(sol["newton"]))
    cfg, rep = solve(cfg0, variant, tol=float(sol["tol"]), max_iter=int(sol["max_iter"]),
                     policy=policy, seed=int(start["seed"]))
    out = output_dir(args.out)
    report = {"config": conf, **rep.to_dict()}
    path = out / "report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    outputs.append(str(path))
    outputs.append(str(write_field_csv(out / "psi.csv", cfg.psi, geom, lat["kind"])))
    outputs.append(str(write_field_csv(out / "links.csv", cfg.gauge.links, geom, lat["kind"])))
    _emit({"converged": rep.converged, "iterations": rep.iterations,
           "final_residual": float(np.float64(rep.final_residual)), "message": rep.message})
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def cmd_replay(args, outputs: list) -> int:
    try:
        man = RunManifest.from_dict(json.loads(Path(args.manifest).read_text()))
        argv = list(man.parameters["argv"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read manifest: {exc}") from None
    if argv and argv[0] == "replay":
        raise InputError("refusing to replay a replay")
    return main(argv)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmonopole", description="G-monopole numerical workbench")
    p.add_argument("--threads", type=int, default=1, help="BLAS threads (default 1 for determinism)")
    p.add_argument("--out", default=None, help=f"output directory (else ${OUTPUT_ENV})")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="enumerate characteristic classes")
    c.add_argument("manifold", help="manifold JSON (euler, signature, b1, Q, w2)")
    c.add_argument("--group", choices=["spinc", "spinh", "spinu2"], required=True)
    c.add_argument("--w2P", default=None, help="w2(P) bits, comma separated")
    c.add_argument("--c1", default=None, help="c1 of the determinant line, comma separated")
    c.add_argument("--range", default="-8..8", help="p1 range lo..hi (use --range=-4..2)")
    c.set_defaults(func=cmd_classify)

    d = sub.add_parser("dim", help="expected moduli dimension")
    for name in ("p1", "c1sq", "euler", "sigma"):
        d.add_argument(f"--{name}", type=int, required=True)
    d.set_defaults(func=cmd_dim)

    a = sub.add_parser("admissible", help="check a subpair (H, V0) for admissibility")
    a.add_argument("subpair", help="SubpairSpec JSON")
    a.set_defaults(func=cmd_admissible)

    s = sub.add_parser("solve", help="solve the lattice monopole equations from a TOML config")
    s.add_argument("config")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("p2-example", help="cross-checked P^2 example summary")
    e.set_defaults(func=cmd_p2_example)

    r = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.threads < 1:
        sys.stderr.write("--threads must be positive\n")
        return EXIT_INPUT
    for var in THREAD_VARS:
        os.environ.setdefault(var, str(args.threads))
    from .topology import ParityError
    started = _now()
    outputs: list = []
    try:
        code = args.func(args, outputs)
    except ParityError as exc:
        sys.stderr.write(f"parity error: {exc}\n")
        code = EXIT_PARITY
    except (InputError, ValueError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        code = EXIT_INPUT
    if args.command != "replay":
        params = {k: v for k, v in vars(args).items() if k != "func"}
        params["argv"] = argv
        seed = None
        if args.command == "solve" and code in (EXIT_OK, EXIT_NONCONVERGED):
            seed = int(load_solve_config(args.config)["start"]["seed"])
        man = RunManifest(args.command, params, seed, _versions(),
                          {"started": started, "finished": _now()}, outputs, code)
        man.write(output_dir(args.out))
    return code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
