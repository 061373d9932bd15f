"""
Command-line driver: ``srslab <subcommand> [flags]``.

Settings resolve as built-in defaults < ``--config`` file (key=value lines)
< command-line flags. Every run writes ``run-manifest.json`` into ``--out``
with the resolved settings and the list of files it produced.

Exit codes: 0 success, 1 invalid flags/config, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from . import activations as A
from . import data, dynamics, gradcheck, moments, train

log = logging.getLogger("srslab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in str(s).split(",") if v.strip())


def _strs(s):
    return tuple(v.strip() for v in str(s).split(",") if v.strip())


def _bools(s):
    out = []
    for v in _strs(s):
        if v.lower() in ("on", "true", "1", "yes"):
            out.append(True)
        elif v.lower() in ("off", "false", "0", "no"):
            out.append(False)
        else:
            raise ValueError(v)
    return tuple(out)


def _bool(s):
    (v,) = _bools(s)
    return v


TRAIN_OPTS = {
    "lr": (float, 0.01), "momentum": (float, 0.9), "weight-decay": (float, 5e-4),
    "batch-size": (int, 50), "steps": (int, 10_000), "init": (str, "gaussian"),
    "sigma": (float, 0.1), "use-bn": (_bool, False), "srs-init": (_floats, (3.0, 2.0)),
    "clamp-floor": (float, 0.01), "activation": (str, "srs"),
    "log-interval": (int, 100), "eval-interval": (int, 1000),
    "dataset": (str, "fashion-mnist"), "data-dir": (str, ""),
    "n": (int, 2000), "noise": (float, 1.0), "hidden": (_ints, ()),
}

OPTIONS = {
    "moments": {
        "alphas": (_floats, (0.5, 1.0, 2.0, 3.0, 4.0, 5.0)),
        "betas": (_floats, (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)),
        "truncation": (float, 12.0), "panels": (int, 2048), "rule": (str, "gauss-legendre"),
    },
    "landscape": {
        "acts": (_strs, ("srs", "relu")), "height": (int, 256), "width": (int, 256),
        "extent": (_floats, (-6.0, 6.0, -6.0, 6.0)), "pgm": (str, "p5"),
        "alpha": (float, 5.0), "beta": (float, 3.0),
    },
    "iterate": {
        "acts": (_strs, ("srs", "sigmoid", "relu")), "iters": (int, 50),
        "alpha": (float, 5.0), "beta": (float, 3.0),
    },
    "train": dict(TRAIN_OPTS),
    "ablate": {
        **TRAIN_OPTS,
        "acts": (_strs, ("srs", "relu")), "lrs": (_floats, (0.01, 0.1)),
        "bn": (_bools, (False, True)), "inits": (_strs, ("gaussian",)), "seeds": (_ints, (1, 2, 3)),
    },
    "gradcheck": {"batches": (int, 10), "batch": (int, 8)},
    "shape": {"alpha": (float, 5.0), "beta": (float, 3.0)},
}

HELP = {
    "moments": "output mean/variance table of SRS under N(0,1) input",
    "landscape": "random-network output landscapes (PGM + CSV)",
    "iterate": "single-unit forward-iteration trajectories",
    "train": "train one MLP and write per-step metrics",
    "ablate": "activation x lr x BN x init ablation table",
    "gradcheck": "finite-difference gradient suite",
    "shape": "minimum location/value and supremum of SRS",
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="srslab", description="Soft-Root-Sign activation lab")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, opts in OPTIONS.items():
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory (default: out/<subcommand>)")
        sp.add_argument("--config", default=None, help="key=value settings file")
        for flag, (typ, default) in opts.items():
            sp.add_argument(f"--{flag}", type=str, default=None, help=f"default: {_show(default)}")
    return p


def _show(v):
    if isinstance(v, tuple):
        return ",".join(_show(x) for x in v)
    if isinstance(v, bool):
        return "on" if v else "off"
    return repr(v) if isinstance(v, float) else str(v)


def resolve(args) -> dict:
    """Merge defaults, config file and flags into typed settings."""
    opts = OPTIONS[args.command]
    raw = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as f:
                fileval = train.parse_kv(f.read())
        except OSError as exc:
            raise UsageError(f"--config: cannot read {args.config}: {exc}") from None
        except train.ConfigError as exc:
            raise UsageError(f"--config: {exc}") from None
        for k, v in fileval.items():
            key = k.replace("_", "-")
            if key not in opts and key != "seed":
                raise UsageError(f"--config: unknown key {k!r} for {args.command}")
            raw[key] = v
    for flag in opts:
        v = getattr(args, flag.replace("-", "_"))
        if v is not None:
            raw[flag] = v
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    out = {}
    for flag, (typ, default) in opts.items():
        if flag in raw:
            try:
                out[flag] = typ(raw[flag])
            except (ValueError, TypeError):
                raise UsageError(f"--{flag}: invalid value {raw[flag]!r}") from None
        else:
            out[flag] = default
    try:
        out["seed"] = int(raw.get("seed", 1 if args.command in ("train", "ablate") else 0))
    except ValueError:
        raise UsageError(f"--seed: invalid value {raw['seed']!r}") from None
    return out


def _num(v):
    return f"{v:g}"


def manifest_config_text(manifest: dict) -> str:
    """``--config`` file contents that reproduce the run in ``manifest``."""
    lines = []
    for k, v in sorted(manifest["config"].items()):
        v = tuple(v) if isinstance(v, list) else v
        lines.append(f"{k}={_show(v)}")
    return "\n".join(lines) + "\n"


class Run:
    def __init__(self, command, settings, out_dir):
        self.command = command
        self.settings = settings
        self.out_dir = out_dir
        self.outputs: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def write(self, name, content):
        path = os.path.join(self.out_dir, name)
        mode = "wb" if isinstance(content, bytes) else "w"
        kw = {} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"}
        with open(path, mode, **kw) as f:
            f.write(content)
        self.outputs.append(name)
        return path

    def manifest(self, extra=None):
        m = {
            "version": __version__,
            "subcommand": self.command,
            "seed": self.settings["seed"],
            "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.settings.items()},
            "outputs": self.outputs + ["run-manifest.json"],
        }
        if extra:
            m.update(extra)
        with open(os.path.join(self.out_dir, "run-manifest.json"), "w", encoding="utf-8", newline="\n") as f:
            json.dump(m, f, indent=2, sort_keys=True)
            f.write("\n")


def _flag_error(exc, command) -> UsageError:
    """Prefix a library validation message with the flag it concerns."""
    msg = str(exc)
    for flag in sorted(OPTIONS[command], key=len, reverse=True):
        if flag.replace("-", "_") in msg or flag in msg:
            return UsageError(f"--{flag}: {msg}")
    if "intervals" in msg:
        return UsageError(f"--log-interval/--eval-interval: {msg}")
    return UsageError(msg)


def _act(name, s):
    try:
        kind = A.Kind(name)
    except ValueError:
        raise UsageError(f"--acts: unknown activation {name!r}") from None
    if kind is A.Kind.SRS:
        if A.srs_pole_exists(s["alpha"], s["beta"]) or min(s["alpha"], s["beta"]) <= 0:
            raise UsageError("--alpha/--beta: need 0 < beta < alpha*e")
        return A.srs(s["alpha"], s["beta"], trainable=False)
    return A.make(kind)


# ---------------------------------------------------------------------------
# subcommands


def cmd_moments(run: Run, s):
    cfg = moments.QuadratureConfig(s["truncation"], s["panels"], s["rule"])
    try:
        cfg.validate()
    except moments.ConfigError as exc:
        raise _flag_error(exc, "moments") from None
    grid = moments.moments_table(s["alphas"], s["betas"], cfg)
    run.write("moments.csv", moments.table_csv(s["alphas"], s["betas"], grid))
    n_div = sum(c.divergent for row in grid for c in row)
    print(f"{n_div} divergent cells of {len(s['alphas']) * len(s['betas'])}; wrote moments.csv")


def cmd_shape(run: Run, s):
    try:
        sh = A.srs_shape(s["alpha"], s["beta"])
    except A.InvalidParameterError as exc:
        raise UsageError(f"--alpha/--beta: {exc}") from None
    text = (f"alpha={_num(s['alpha'])} beta={_num(s['beta'])}\n"
            f"min_location={sh.min_location:.6f}\nmin_value={sh.min_value:.6f}\nsupremum={sh.supremum:.6f}\n")
    print(text, end="")
    run.write("shape.txt", text)


def cmd_landscape(run: Run, s):
    if len(s["extent"]) != 4:
        raise UsageError("--extent: expected xmin,xmax,ymin,ymax")
    if s["height"] < 2 or s["width"] < 2:
        raise UsageError("--height/--width: must be >= 2")
    if s["pgm"] not in ("p5", "p2"):
        raise UsageError("--pgm: expected p5 or p2")
    lines = ["activation,roughness"]
    for name in s["acts"]:
        act = _act(name, s)
        ls = dynamics.output_landscape(act, (s["height"], s["width"]), s["extent"], s["seed"])
        run.write(f"landscape-{name}.pgm", dynamics.to_pgm(ls.grid, binary=s["pgm"] == "p5"))
        run.write(f"landscape-{name}.csv", ls.to_csv())
        r = dynamics.landscape_roughness(ls)
        lines.append(f"{name},{r:.10g}")
        print(f"{name}: roughness {r:.4g}")
    run.write("roughness.csv", "\n".join(lines) + "\n")


def cmd_iterate(run: Run, s):
    if s["iters"] < 2:
        raise UsageError("--iters: must be >= 2")
    for name in s["acts"]:
        tr = dynamics.iterate_activation(_act(name, s), s["iters"], s["seed"])
        run.write(f"trajectory-{name}.csv", tr.to_csv())
        print(f"{name}: final x={tr.xs[-1]:.4f}")


def _train_config(s, command="train") -> train.TrainConfig:
    keys = {f.replace("-", "_"): v for f, v in s.items()
            if f.replace("-", "_") in train.TrainConfig.__dataclass_fields__}
    try:
        return train.TrainConfig(**keys).validate()
    except train.ConfigError as exc:
        raise _flag_error(exc, command) from None


def _datasets(s):
    if s["dataset"] == "fashion-mnist":
        tr, te = data.load_fashion_mnist(s["data_dir"] or None)
        return tr, te, s["hidden"] or (512, 512, 512, 256)
    if s["dataset"] not in data.TOY_CLASSES:
        raise UsageError(f"--dataset: unknown dataset {s['dataset']!r}")
    tr = data.gen_toy(s["dataset"], s["n"], s["noise"], s["seed"])
    te = data.gen_toy(s["dataset"], s["n"], s["noise"], s["seed"] + 10_000)
    return tr, te, s["hidden"] or (32, 32)


def _s(s):
    return {k.replace("-", "_"): v for k, v in s.items()}


def cmd_train(run: Run, s):
    s = _s(s)
    cfg = _train_config(s)
    tr, te, hidden = _datasets(s)
    mlog = train.run_experiment(cfg, tr, te, hidden)
    run.write("metrics.csv", mlog.to_csv())
    status = "diverged" if mlog.diverged else f"test error {100 * mlog.final_test_err:.2f}%"
    print(f"{cfg.activation}: {status}")


def cmd_ablate(run: Run, s):
    s = _s(s)
    base = _train_config(s, "ablate")
    for a in s["acts"]:
        _act(a, {"alpha": 5.0, "beta": 3.0})
    for i in s["inits"]:
        if i not in train.INITS:
            raise UsageError(f"--inits: unknown scheme {i!r}")
    tr, te, hidden = _datasets(s)
    cells = train.grid_cells(lr=list(s["lrs"]), use_bn=list(s["bn"]))
    if len(s["inits"]) > 1 or s["inits"] != ("gaussian",):
        cells = [{**c, "init": i} for c in cells for i in s["inits"]]
    res = train.run_ablation(base, s["acts"], cells, tr, te, s["seeds"], hidden)
    run.write("ablation.csv", res.to_csv())
    for (act, j), logs in sorted(res.runs.items()):
        for m in logs:
            run.write(f"metrics-{act}-cell{j}-seed{m.seed}.csv", m.to_csv())
    print(res.to_csv(), end="")


def cmd_gradcheck(run: Run, s):
    rep = gradcheck.gradient_suite(n_batches=s["batches"], batch=s["batch"], seed=s["seed"])
    lines = ["check,max_rel_err"] + [f"{k},{v:.6e}" for k, v in rep.items()]
    run.write("gradcheck.csv", "\n".join(lines) + "\n")
    worst = max(rep.values())
    print(f"max relative error {worst:.3e}")
    if not worst < 1e-5:
        raise RuntimeError(f"gradient check failed: max relative error {worst:.3e} >= 1e-5")


COMMANDS = {
    "moments": cmd_moments, "landscape": cmd_landscape, "iterate": cmd_iterate,
    "train": cmd_train, "ablate": cmd_ablate, "gradcheck": cmd_gradcheck, "shape": cmd_shape,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
        settings = resolve(args)
        out_dir = args.out or os.path.join("out", args.command)
        run = Run(args.command, settings, out_dir)
        with np.errstate(over="ignore", invalid="ignore"):
            COMMANDS[args.command](run, settings)
        run.manifest()
    except UsageError as exc:
        print(f"srslab: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"srslab: failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
