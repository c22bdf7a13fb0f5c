"""Command-line front end: ``photon-tam {verify,sweep,distribution,state,inspect}``.

Settings come from defaults, then an optional ``key = value`` config file,
then command-line flags.  Exit status: 0 success, 1 failed checks or a
numerical error, 2 invalid configuration.
"""

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import results
from . import spectra as sp
from . import states as st
from . import verify as vf

OBSERVABLE_TAGS = ("Lz", "Sz", "joint", "Szprime", "Lzprime")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n_p: int = st.DEFAULT_SHAPE[0]
    n_theta: int = st.DEFAULT_SHAPE[1]
    n_phi: int = st.DEFAULT_SHAPE[2]
    window_sigmas: float = st.WINDOW_SIGMAS
    band: int = sp.DEFAULT_BAND
    bins_per_unit: int = sp.BINS_PER_UNIT
    tolerance_scale: float = 1.0
    format: str = "csv"
    out: str = ""
    seed: int = vf.DEFAULT_SEED
    a: float = 0.1
    a_min: float = 0.01
    a_max: float = 2.0
    steps: int = 50
    scale: str = "log"
    observable: str = "joint"
    helicity: int = 1
    checks: str = ""

    @property
    def shape(self):
        return (self.n_p, self.n_theta, self.n_phi)

    def validate(self, command):
        if min(self.n_p, self.n_theta) < 8 or self.n_phi < 16 or self.n_phi % 2:
            raise ConfigError(f"need n_p, n_theta >= 8 and even n_phi >= 16, got {self.shape}")
        if command == "distribution" and self.n_phi < 2 * self.band + 6:
            raise ConfigError(f"n_phi={self.n_phi} too small for band={self.band}")
        if self.band < 0 or self.bins_per_unit < 1:
            raise ConfigError("band must be >= 0 and bins_per_unit >= 1")
        if not self.window_sigmas > 0 or not self.tolerance_scale > 0:
            raise ConfigError("window_sigmas and tolerance_scale must be positive")
        if self.format not in ("csv", "json", "text"):
            raise ConfigError(f"format must be csv, json or text, got {self.format!r}")
        if command in ("distribution", "state") and not self.a > 0:
            raise ConfigError(f"a must be positive, got {self.a}")
        if command == "sweep":
            if not 0 < self.a_min <= self.a_max or self.steps < 1:
                raise ConfigError("need 0 < a_min <= a_max and steps >= 1")
            if self.scale not in ("linear", "log"):
                raise ConfigError(f"scale must be linear or log, got {self.scale!r}")
        if command == "distribution" and self.observable not in OBSERVABLE_TAGS:
            raise ConfigError(f"observable must be one of {OBSERVABLE_TAGS}, got {self.observable!r}")
        if self.helicity not in (1, -1):
            raise ConfigError("helicity must be +1 or -1")
        if command == "state" and not self.out:
            raise ConfigError("state needs an output path (--out)")
        unknown = set(filter(None, self.checks.split(","))) - set(vf.CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks: {sorted(unknown)}")

    def as_dict(self):
        return asdict(self)


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key, raw):
    kind = FIELD_TYPES[key]
    kind = kind if isinstance(kind, type) else {"int": int, "float": float, "str": str}[kind]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment; keys are RunConfig fields."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value' with a known key, got {line!r}")
        values[key] = _coerce(key, raw.strip())
    return values


def build_config(args):
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for name in FIELD_TYPES:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    cfg = RunConfig(**values)
    cfg.validate(args.command)
    return cfg


def _emit(text, cfg):
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _grid(cfg, a):
    return st.auto_grid(a, cfg.shape, cfg.window_sigmas)


def cmd_verify(cfg):
    tolerances = vf.Tolerances().scaled(cfg.tolerance_scale)
    vcfg = vf.VerifyConfig(seed=cfg.seed, shape=cfg.shape, tolerances=tolerances)
    names = [n for n in cfg.checks.split(",") if n] or None
    reports = vf.run_all(vcfg, names)
    if cfg.format == "json":
        payload = json.loads(vf.reports_to_json(reports))
        payload["config"] = cfg.as_dict()
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = vf.reports_to_text(reports) + "\n"
    _emit(text, cfg)
    if not vf.all_passed(reports):
        failed = ", ".join(r.name for r in reports if not r.passed)
        raise vf.CheckFailure(f"failed checks: {failed}")
    return 0


def sweep_values(cfg):
    if cfg.scale == "log":
        return [float(x) for x in np.geomspace(cfg.a_min, cfg.a_max, cfg.steps)]
    return [float(x) for x in np.linspace(cfg.a_min, cfg.a_max, cfg.steps)]


def cmd_sweep(cfg):
    a_values = sweep_values(cfg)
    records = []
    for a in a_values:
        try:
            psi = st.gaussian_state(a, _grid(cfg, a), cfg.helicity)
        except ValueError as exc:
            records += [st.CumulantRecord(o, a, math.nan, math.nan, sp.observable_mode(o), f"error: {exc}")
                        for o in sp.SWEEP_OBSERVABLES]
            continue
        for o in sp.SWEEP_OBSERVABLES:
            rec = st.mean_and_variance(o, psi, sp.observable_mode(o))
            rec.a = a
            records.append(rec)
    f_values = {a: sp.f_of_a(a) for a in a_values}
    writer = results.records_to_json if cfg.format == "json" else results.records_to_csv
    _emit(writer(records, f_values, cfg.as_dict()), cfg)
    return 0


def distribution_table(cfg, psi):
    obs = cfg.observable
    if obs in ("joint", "Lz", "Sz"):
        joint = sp.joint_povm_Lz_Sz(psi, cfg.band)
        if obs == "joint":
            return joint
        return sp.marginal(joint, "OAM" if obs == "Lz" else "SAM")
    if obs == "Szprime":
        return sp.pvm_Sz_prime(psi, sp.default_sz_prime_bins(cfg.bins_per_unit))
    return sp.pvm_Lz_prime(psi, cfg.band, sp.default_lz_prime_bins(cfg.band, cfg.bins_per_unit))


def cmd_distribution(cfg):
    psi = st.gaussian_state(cfg.a, _grid(cfg, cfg.a), cfg.helicity)
    table = distribution_table(cfg, psi)
    writer = results.table_to_json if cfg.format == "json" else results.table_to_csv
    _emit(writer(table, cfg.a, cfg.as_dict()), cfg)
    return 0


def cmd_state(cfg):
    psi = st.gaussian_state(cfg.a, _grid(cfg, cfg.a), cfg.helicity)
    st.save_state(psi, cfg.out)
    return 0


def inspect_summary(psi):
    ppsi = st.apply_projector(psi)
    nrm2 = st.inner_product(psi, psi).real
    hel = st.inner_product(ppsi, st.apply_helicity(ppsi)).real / nrm2
    return {
        "grid": psi.grid.params(),
        "metadata": psi.metadata,
        "physical": psi.physical,
        "norm": math.sqrt(nrm2),
        "transversality_residual": st.transversality_residual(psi),
        "helicity_expectation": hel,
    }


def cmd_inspect(path, fmt):
    summary = inspect_summary(st.load_state(path))
    if fmt == "json":
        sys.stdout.write(json.dumps(results.jsonable(summary), indent=2, sort_keys=True) + "\n")
    else:
        for key, value in summary.items():
            sys.stdout.write(f"{key}: {json.dumps(results.jsonable(value), sort_keys=True)}\n")
    return 0


def _add_common(p):
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--n-p", dest="n_p", type=int)
    p.add_argument("--n-theta", dest="n_theta", type=int)
    p.add_argument("--n-phi", dest="n_phi", type=int)
    p.add_argument("--window-sigmas", dest="window_sigmas", type=float,
                   help="radial window half-width in Gaussian standard deviations")
    p.add_argument("--format", choices=("csv", "json", "text"))
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--helicity", type=int, choices=(1, -1))


def make_parser():
    parser = argparse.ArgumentParser(prog="photon-tam", description="Angular momentum observables of a single photon.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the identity and numerics checks")
    _add_common(p)
    p.add_argument("--tolerance-scale", dest="tolerance_scale", type=float,
                   help="multiply every residual tolerance by this factor")
    p.add_argument("--checks", help="comma-separated subset of checks")

    p = sub.add_parser("sweep", help="cumulants of Lz, Sz, L'z, S'z, Jz against a")
    _add_common(p)
    p.add_argument("--a-min", dest="a_min", type=float)
    p.add_argument("--a-max", dest="a_max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--scale", choices=("linear", "log"))

    p = sub.add_parser("distribution", help="outcome distribution of one observable")
    _add_common(p)
    p.add_argument("--observable", choices=OBSERVABLE_TAGS)
    p.add_argument("--a", type=float)
    p.add_argument("--band", type=int, help="|m| or |n| cut-off")
    p.add_argument("--bins-per-unit", dest="bins_per_unit", type=int)

    p = sub.add_parser("state", help="write a Gaussian state to a text file")
    _add_common(p)
    p.add_argument("--a", type=float)

    p = sub.add_parser("inspect", help="summarise a saved state")
    p.add_argument("path")
    p.add_argument("--format", choices=("text", "json"), default="text")
    return parser


COMMANDS = {"verify": cmd_verify, "sweep": cmd_sweep, "distribution": cmd_distribution, "state": cmd_state}


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "inspect":
            return cmd_inspect(args.path, args.format)
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except vf.CheckFailure as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
