"""Command-line entry point: ``phasefield run|converge|stability-scan``.

Exit codes: 0 success, 2 invalid configuration, 3 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import _kernels
from .analysis import exact_linear, spatial_convergence, stability_scan, temporal_convergence
from .analysis.studies import _steps_for, error_norm
from .io import format_value, write_energy_csv, write_snapshot
from .models import ModelConfig, StabilizationPlan, resolve_A
from .spectral import GridSpec, PhysicalField, _synthesize
from .stepper import (
    DivergenceError,
    PoissonKernel,
    RandomBandlimited,
    SingleMode,
    StepperState,
    TwoMode,
    evolve,
    make_initial,
    run,
)

log = logging.getLogger("phasefield")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class RunConfig:
    model: str = "ch"
    nu: float = 0.1
    N: int = 32
    M: int = 0
    cutoff: str = "ball"
    tau: float = 0.01
    steps: int = 100
    stabilization: dict = field(default_factory=lambda: {"beta": 1.0})
    s_op: int = 1
    init: dict = field(default_factory=lambda: {"kind": "random", "seed": 0, "amplitude": 1.0, "band": 8})
    snapshot_every: int = 0
    out_dir: str = "out"
    enforce_mass: bool = True
    nonlinear: bool = True


_INIT_KINDS = {
    "random": (RandomBandlimited, {"seed", "amplitude", "band", "normalize"}),
    "single": (SingleMode, {"mode", "amplitude"}),
    "two": (TwoMode, {"k_a", "k_b", "a", "b"}),
    "poisson": (PoissonKernel, {"r", "amplitude", "shift"}),
}


def build_init(desc: dict):
    desc = dict(desc)
    kind = desc.pop("kind", "random")
    if kind not in _INIT_KINDS:
        raise ConfigError([f"init.kind: unknown kind {kind!r} (choose from {sorted(_INIT_KINDS)})"])
    cls, allowed = _INIT_KINDS[kind]
    extra = set(desc) - allowed
    if extra:
        raise ConfigError([f"init.{k}: not a parameter of kind {kind!r}" for k in sorted(extra)])
    if "mode" in desc:
        desc["k"] = tuple(desc.pop("mode"))
    for key in ("k_a", "k_b"):
        if key in desc:
            desc[key] = tuple(desc[key])
    return cls(**desc)


def parse_config(raw: dict) -> RunConfig:
    """Validate a config mapping; raises :class:`ConfigError` listing every bad field."""
    problems: list[str] = []
    known = set(RunConfig.__dataclass_fields__)
    for k in sorted(set(raw) - known):
        problems.append(f"{k}: unknown field")
    cfg = RunConfig(**{k: v for k, v in raw.items() if k in known})

    def positive(name, typ):
        v = getattr(cfg, name)
        if not isinstance(v, typ) or isinstance(v, bool) or not v > 0:
            problems.append(f"{name}: must be a positive {typ.__name__ if isinstance(typ, type) else 'number'}, got {v!r}")

    if cfg.model not in ("ch", "mbe"):
        problems.append(f"model: must be 'ch' or 'mbe', got {cfg.model!r}")
    positive("nu", (int, float))
    positive("N", int)
    positive("tau", (int, float))
    positive("steps", int)
    if not isinstance(cfg.M, int) or cfg.M < 0:
        problems.append(f"M: must be a nonnegative integer (0 = default), got {cfg.M!r}")
    if cfg.cutoff not in ("ball", "square"):
        problems.append(f"cutoff: must be 'ball' or 'square', got {cfg.cutoff!r}")
    if cfg.s_op not in (1, 2):
        problems.append(f"s_op: must be 1 or 2, got {cfg.s_op!r}")
    if not isinstance(cfg.snapshot_every, int) or cfg.snapshot_every < 0:
        problems.append(f"snapshot_every: must be a nonnegative integer, got {cfg.snapshot_every!r}")
    stab = cfg.stabilization
    if not isinstance(stab, dict):
        problems.append("stabilization: must be an object with 'beta' or 'A'")
    elif ("beta" in stab) == ("A" in stab):
        problems.append("stabilization: give exactly one of 'beta' or 'A'")
    else:
        for k in sorted(set(stab) - {"beta", "A"}):
            problems.append(f"stabilization.{k}: unknown field")
        if "beta" in stab and not (isinstance(stab["beta"], (int, float)) and stab["beta"] > 0):
            problems.append(f"stabilization.beta: must be positive, got {stab['beta']!r}")
        if "A" in stab and not (isinstance(stab["A"], (int, float)) and stab["A"] >= 0):
            problems.append(f"stabilization.A: must be nonnegative, got {stab['A']!r}")
    if not isinstance(cfg.init, dict):
        problems.append("init: must be an object")
    else:
        try:
            build_init(cfg.init)
        except ConfigError as exc:
            problems.extend(exc.problems)
        except TypeError as exc:
            problems.append(f"init: {exc}")
    if not problems:
        try:
            GridSpec(cfg.N, cfg.M, cfg.cutoff)
        except ValueError as exc:
            problems.append(f"M: {exc}")
    if problems:
        raise ConfigError(problems)
    return cfg


def _plan(cfg_model: ModelConfig, init, stab: dict, s_op: int) -> StabilizationPlan:
    if "A" in stab:
        return StabilizationPlan(A=float(stab["A"]), s_op=s_op)
    return resolve_A(cfg_model, init, float(stab["beta"]), s_op)


def execute_run(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = GridSpec(cfg.N, cfg.M, cfg.cutoff)
    model = ModelConfig(cfg.model, float(cfg.nu), cfg.nonlinear)
    try:
        init = make_initial(build_init(cfg.init), grid)
    except ValueError as exc:
        print(f"error: init: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    plan = _plan(model, init, cfg.stabilization, cfg.s_op)
    log.info("model=%s N=%d M=%d A=%s backend=%s", model.kind.value, grid.N, grid.M, plan.A, _kernels.BACKEND)

    def snap(st):
        if st.step % cfg.snapshot_every == 0:
            vals = PhysicalField(grid, _synthesize(st.field.coeffs))
            write_snapshot(out / f"snapshot_{st.step:07d}.pfld", vals, st.time, model.kind)

    if cfg.snapshot_every:
        snap(StepperState(init, cfg.tau))

    params = asdict(cfg)
    params.update(
        {"M": grid.M, "A": plan.A, "beta": plan.beta, "sup_norm": plan.sup_norm, "backend": _kernels.BACKEND}
    )
    (out / "params.json").write_text(json.dumps(params, indent=2, sort_keys=True) + "\n")

    try:
        record = run(
            init,
            model,
            plan,
            cfg.tau,
            cfg.steps,
            enforce_mass=cfg.enforce_mass,
            on_state=snap if cfg.snapshot_every else None,
        )
    except DivergenceError as exc:
        if exc.record is not None:
            write_energy_csv(out / "energy.csv", exc.record)
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    write_energy_csv(out / "energy.csv", record)
    log.info("wrote %d steps to %s", len(record), out)
    return EXIT_OK


# --- argument handling ----------------------------------------------------------


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["ch", "mbe"])
    p.add_argument("--nu", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--cutoff", choices=["ball", "square"])
    p.add_argument("--s-op", dest="s_op", type=int, choices=[1, 2])
    p.add_argument("--beta", type=float)
    p.add_argument("--A", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--band", type=int)
    p.add_argument("--out-dir", dest="out_dir")


def _merge(base: dict, args: argparse.Namespace, keys) -> dict:
    cfg = dict(base)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if args.beta is not None and args.A is not None:
        raise ConfigError(["stabilization: --beta and --A are mutually exclusive"])
    if args.beta is not None:
        cfg["stabilization"] = {"beta": args.beta}
    elif args.A is not None:
        cfg["stabilization"] = {"A": args.A}
    init = dict(cfg.get("init", RunConfig().init))
    for k in ("seed", "amplitude", "band"):
        v = getattr(args, k, None)
        if v is not None:
            init[k] = v
    cfg["init"] = init
    return cfg


def _load(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError([f"config: cannot read {path}: {exc}"])
    if not isinstance(data, dict):
        raise ConfigError(["config: top level must be a JSON object"])
    return data


def cmd_run(args) -> int:
    raw = _merge(_load(args.config), args, ["model", "nu", "N", "M", "cutoff", "s_op", "tau", "steps", "snapshot_every", "out_dir"])
    return execute_run(parse_config(raw))


def cmd_converge(args) -> int:
    raw = _merge(_load(args.config), args, ["model", "nu", "N", "M", "cutoff", "s_op", "out_dir"])
    if args.tau is not None:
        raw["tau"] = args.tau
    raw.setdefault("tau", 1e-3)
    if args.linear:
        raw["nonlinear"] = False
    cfg = parse_config(raw)
    model = ModelConfig(cfg.model, float(cfg.nu), cfg.nonlinear)
    kind = build_init(cfg.init)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.T is None or not args.T > 0:
        raise ConfigError(["T: must be positive"])
    lines = ["resolution,error"]
    if args.mode == "temporal":
        taus = _float_list(args.taus or "")
        if not taus:
            raise ConfigError(["taus: need at least one time step"])
        grid = GridSpec(cfg.N, cfg.M, cfg.cutoff)
        init = make_initial(kind, grid)
        plan = _plan(model, init, cfg.stabilization, cfg.s_op)
        if len(taus) == 1:
            if args.reference == "analytic":
                ref = exact_linear(init, model.nu, args.T)
            else:
                t_ref = taus[0] / 16
                ref = evolve(init, model, plan, t_ref, _steps_for(args.T, t_ref))
            u = evolve(init, model, plan, taus[0], _steps_for(args.T, taus[0]))
            res, errs = taus, [error_norm(u - ref, model.kind)]
            summary = "# fitted_order=n/a"
        else:
            est = temporal_convergence(model, init, taus, args.T, plan, reference=args.reference)
            res, errs = est.resolutions, est.errors
            if math.isnan(est.fitted_order):
                summary = "# fitted_order=n/a"
            else:
                summary = f"# fitted_order={format_value(est.fitted_order)},r_squared={format_value(est.r_squared)}"
    else:
        Ns = _int_list(args.Ns or "")
        if not Ns:
            raise ConfigError(["Ns: need at least one cutoff"])
        ref_grid = GridSpec(2 * max(Ns), 0, cfg.cutoff)
        plan = _plan(model, make_initial(kind, ref_grid), cfg.stabilization, cfg.s_op)
        table = spatial_convergence(model, Ns, cfg.tau, args.T, kind, plan, cutoff=cfg.cutoff)
        res, errs = table.N_list, table.errors
        if table.superalgebraic is None:
            summary = "# fitted_order=n/a"
        else:
            orders = ";".join(format_value(q) for q in table.local_orders)
            summary = f"# fitted_order=n/a,local_orders={orders},superalgebraic={str(table.superalgebraic).lower()}"
    lines += [f"{format_value(r)},{format_value(e)}" for r, e in zip(res, errs)]
    lines.append(summary)
    (out / "converge.csv").write_text("\n".join(lines) + "\n")
    print(summary.lstrip("# "))
    return EXIT_OK


def cmd_stability_scan(args) -> int:
    raw = _merge(_load(args.config), args, ["model", "nu", "N", "M", "cutoff", "s_op", "steps", "out_dir"])
    taus = _float_list(args.taus or "")
    betas = _float_list(args.betas) if args.betas else None
    As = _float_list(args.As) if args.As else None
    problems = []
    if not taus:
        problems.append("taus: need at least one time step")
    if (betas is None) == (As is None):
        problems.append("betas/As: give exactly one list")
    elif not (betas or As):
        problems.append("betas/As: list is empty")
    if problems:
        raise ConfigError(problems)
    cfg = parse_config(raw)
    model = ModelConfig(cfg.model, float(cfg.nu), cfg.nonlinear)
    grid = GridSpec(cfg.N, cfg.M, cfg.cutoff)
    init = make_initial(build_init(cfg.init), grid)
    result = stability_scan(model, init, taus, cfg.steps, A_list=As, beta_list=betas, s_op=cfg.s_op)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["tau,A,monotone,first_violation_step,final_energy"]
    for r in result.rows:
        fv = "" if r.first_violation is None else str(r.first_violation)
        lines.append(f"{format_value(r.tau)},{format_value(r.A)},{str(r.monotone).lower()},{fv},{format_value(r.final_energy)}")
    (out / "scan.csv").write_text("\n".join(lines) + "\n")
    for tau, a in result.minimal_A().items():
        print(f"tau={format_value(tau)} minimal_stabilizing_A={'none' if a is None else format_value(a)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasefield", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="advance a model and write energy.csv, params.json, snapshots")
    p.add_argument("config", nargs="?", help="JSON run configuration")
    _add_common(p)
    p.add_argument("--tau", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="temporal or spatial refinement study")
    p.add_argument("--config")
    _add_common(p)
    p.add_argument("--mode", choices=["temporal", "spatial"], default="temporal")
    p.add_argument("--taus", help="comma-separated decreasing time steps (temporal)")
    p.add_argument("--Ns", help="comma-separated mode cutoffs (spatial)")
    p.add_argument("--tau", type=float, help="time step for spatial mode")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--reference", choices=["numerical", "analytic"], default="numerical")
    p.add_argument("--linear", action="store_true", help="drop the nonlinearity (diagnostic)")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("stability-scan", help="energy-monotonicity table over (tau, A)")
    p.add_argument("--config")
    _add_common(p)
    p.add_argument("--taus", required=True)
    p.add_argument("--betas")
    p.add_argument("--As")
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_stability_scan)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:  # e.g. T not a multiple of tau
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
