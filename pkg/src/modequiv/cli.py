"""Command-line front end.

Every subcommand prints one JSON document (``schema_version`` 1) or a CSV
table.  Exit status: 0 on success, 2 when a computed quantity breaches its
tolerance, 3 on bad input.

Complex numbers are written ``a+bi`` (``i`` or ``j``, spaces allowed) and
matrices as ``a,b,c,d``.  Options are resolved in the order command line,
``MF_TRUNCATION`` environment variable, ``--config`` file, built-in default.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import equivariant as eq
from . import forms
from . import identities as ids
from . import moebius as mb
from . import qseries as qs
from . import zerofinder as zf

SCHEMA_VERSION = 1
EXIT_OK, EXIT_TOLERANCE, EXIT_INPUT = 0, 2, 3


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parsing and formatting


def parse_complex(text: str) -> complex:
    s = text.replace(" ", "").replace("i", "j")
    if s in ("inf", "oo", "∞"):
        return mb.INF
    s = re.sub(r"(^|[+-])j", r"\g<1>1j", s)
    try:
        return complex(s)
    except ValueError:
        raise InputError(f"cannot parse complex number {text!r}") from None


def parse_matrix(text: str) -> mb.MoebiusTransform:
    parts = text.split(",")
    if len(parts) != 4:
        raise InputError(f"matrix needs four entries a,b,c,d, got {text!r}")
    a, b, c, d = (parse_complex(p) for p in parts)
    try:
        return mb.mobius(a, b, c, d)
    except (ValueError, ZeroDivisionError) as err:
        raise InputError(str(err)) from None


def _num(x: float) -> str:
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def format_complex(z) -> str:
    z = complex(z)
    if mb.is_inf(z):
        return "inf"
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return "nan"
    x, y = z.real + 0.0, z.imag + 0.0  # drop signed zeros
    if y == 0:
        return _num(x)
    im = "i" if abs(y) == 1 else f"{_num(abs(y))}i"
    if x == 0:
        return im if y > 0 else f"-{im}"
    return f"{_num(x)}{'+' if y > 0 else '-'}{im}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return format_complex(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


# ---------------------------------------------------------------------------
# configuration


@dataclass
class Config:
    truncation_override: int | None = None
    tolerance: float = 1e-9
    seed: int = eq.DEFAULT_SEED
    y_min: float = qs.Y_MIN
    output_format: str = "json"

    def validate(self):
        if not self.tolerance > 0:
            raise InputError("tolerance must be positive")
        if not self.y_min > 0:
            raise InputError("y_min must be positive")
        if self.output_format not in ("json", "csv"):
            raise InputError(f"unknown output format {self.output_format!r}")
        if self.truncation_override is not None and self.truncation_override < 1:
            raise InputError("truncation must be a positive integer")
        return self


_CONFIG_TYPES = {"truncation_override": int, "tolerance": float, "seed": lambda s: int(s, 0),
                 "y_min": float, "output_format": str}


def read_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as err:
        raise InputError(f"cannot read config file: {err}") from None
    known = {f.name for f in fields(Config)}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise InputError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_TYPES[key](value)
        except ValueError:
            raise InputError(f"{path}:{n}: bad value for {key}") from None
    return out


def build_config(args) -> Config:
    values = read_config_file(args.config) if args.config else {}
    env = os.environ.get("MF_TRUNCATION")
    if env:
        try:
            values["truncation_override"] = int(env)
        except ValueError:
            raise InputError("MF_TRUNCATION must be an integer") from None
    cli = {"truncation_override": args.truncation, "tolerance": args.tol, "seed": args.seed,
           "y_min": args.y_min, "output_format": args.format}
    values.update({k: v for k, v in cli.items() if v is not None})
    return Config(**values).validate()


# ---------------------------------------------------------------------------
# targets


def _form(name: str, reduced: bool = False) -> forms.Form:
    try:
        return forms.get_form(name, reduced=reduced)
    except KeyError:
        raise InputError(f"unknown form {name!r}; known: {', '.join(forms.FORM_NAMES)}") from None


def _closed_form(name: str, params: list[str], weight: float) -> forms.Form:
    kw = {}
    for p in params:
        if "=" not in p:
            raise InputError(f"parameter {p!r} is not key=value")
        k, v = p.split("=", 1)
        c = parse_complex(v)
        kw[k] = c.real if c.imag == 0 else c
    try:
        return forms.closed_form(name, weight, **kw)
    except (TypeError, ValueError) as err:
        raise InputError(str(err)) from None


_CLOSED_RULES = ("power_of_z", "exponential", "cayley_product")
_PERTURBED = {"pert-exp": "exp", "pert-poly": "polynomial", "pert-const": "constant"}


def _zero_target(name: str, box: zf.SearchBox):
    """Registry forms, their derivatives (trailing '), and the perturbed quasi-forms."""
    if name in _PERTURBED:
        return ids.PerturbedQuasiForm(_PERTURBED[name])
    base, primes = name.rstrip("'"), len(name) - len(name.rstrip("'"))
    if primes > 1:
        raise InputError("only first derivatives are supported")
    # below Im 0.1 evaluate level-one forms through the fundamental domain
    reduced = base in ("E2", "E4", "E6", "Delta", "j") and box.im_min < 0.1
    f = _form(base, reduced)
    return zf.DerivativeOf(f) if primes else f


def _box(text: str, cfg: Config) -> zf.SearchBox:
    try:
        box = zf.SearchBox.parse(text)
    except (ValueError, TypeError) as err:
        raise InputError(f"bad box {text!r}: {err}") from None
    if box.im_min < cfg.y_min:
        raise InputError(f"box reaches below y_min = {cfg.y_min}")
    return box


# ---------------------------------------------------------------------------
# subcommands; each returns (payload, csv_rows, ok)


def cmd_eval(args, cfg):
    z = parse_complex(args.z)
    if mb.is_inf(z) or z.imag < cfg.y_min:
        raise InputError(f"Im z must be at least y_min = {cfg.y_min}")
    if args.form in _CLOSED_RULES:
        f = _closed_form(args.form, args.param, args.weight)
        value = complex(np.asarray(f(np.array([z])))[0])
        bound = 0.0
    else:
        f = _form(args.form)
        ev = f.evaluator
        try:
            if args.derivative:
                value = complex(np.asarray(f.derivative(np.array([z]), args.derivative))[0])
                bound = float("nan")
            else:
                v, b = ev.value_and_bound(np.array([z]), tol=cfg.tolerance)
                value, bound = complex(np.asarray(v)[0]), float(np.max(b))
        except qs.TruncationError as err:
            payload = {"form": args.form, "z": z, "error": str(err)}
            return payload, [payload], False
    payload = {"form": args.form, "z": z, "derivative": args.derivative, "value": value,
               "bound": bound}
    ok = not (bound > cfg.tolerance)
    return payload, [payload], ok


def cmd_classify(args, cfg):
    text = args.matrix_opt or args.matrix
    if text is None:
        raise InputError("classify needs a matrix a,b,c,d")
    g = parse_matrix(text)
    cls = mb.classify(g)
    try:
        fps = [{"point": p.point, "nature": p.nature} for p in mb.fixed_points(g)]
    except ValueError:
        fps = []
    payload = {"matrix": [g.a, g.b, g.c, g.d], "class": cls.tag, "trace": cls.trace_value,
               "fixed_points": fps}
    rows = [{"class": cls.tag, "trace": cls.trace_value, "fixed_point": fp["point"],
             "nature": fp["nature"]} for fp in fps] or [{"class": cls.tag, "trace": cls.trace_value}]
    return payload, rows, True


def _zero_payload(name, box, records):
    part = zf.classify_equivalence(records)
    payload = {
        "function": name,
        "box": [box.re_min, box.re_max, box.im_min, box.im_max],
        "zeros": [r.as_dict() for r in records],
        "orbits": part.as_dict(),
    }
    rows = [{"re": r.location.real, "im": r.location.imag, "residual": r.residual,
             "winding": r.winding_confirmed, "converged": r.converged,
             "fd_re": r.fd_representative.real, "fd_im": r.fd_representative.imag}
            for r in records]
    return payload, rows, all(r.converged for r in records)


def _run_zeros(args, cfg, critical: bool):
    box = _box(args.box, cfg)
    f = _zero_target(args.function, box)
    try:
        with np.errstate(all="ignore"):
            recs = (zf.critical_points if critical else zf.find_zeros)(f, box, max_zeros=args.max)
    except zf.WindingError as err:
        payload = {"function": args.function, "error": str(err)}
        return payload, [payload], False
    return _zero_payload(args.function, box, recs)


def cmd_zeros(args, cfg):
    return _run_zeros(args, cfg, critical=False)


def cmd_critical_points(args, cfg):
    return _run_zeros(args, cfg, critical=True)


def cmd_check_identities(args, cfg):
    # the catalog samples with seed 0 unless --sample-seed or --seed is given
    seed = args.seed_points if args.seed_points is not None else (args.seed or 0)
    checks = ids.full_catalog(n_points=args.n, seed=seed)
    if args.include_quoted:
        checks += ids.quoted_variant_checks(n_points=args.n, seed=seed)
    if args.only:
        wanted = set(args.only)
        unknown = wanted - {c.name for c in checks}
        if unknown:
            raise InputError(f"unknown check(s): {', '.join(sorted(unknown))}")
        checks = [c for c in checks if c.name in wanted]
    reports = ids.run_catalog(checks, cfg.truncation_override, cfg.tolerance)
    payload = {"n_checks": len(reports), "tolerance": cfg.tolerance, "checks": reports,
               "all_passed": all(r["passed"] for r in reports)}
    rows = [{k: r[k] for k in ("name", "max_residual", "mean_residual", "passed")} for r in reports]
    return payload, rows, payload["all_passed"]


_GROUP_NAMES = {"S": mb.S, "T": mb.T, "P": mb.P}


def _equivariant(name: str):
    if name == "identity":
        return eq.EquivariantFunction.identity_map()
    if name == "shift":  # z + 1: a negative control
        return eq.EquivariantFunction.custom(lambda z: z + 1, "shift")
    f = _form(name)
    if f.weight == 0:
        raise InputError(f"{name} has weight 0; h_f needs a nonzero weight")
    return eq.make_h_f(f, f.weight)


def cmd_equivariance(args, cfg):
    h = _equivariant(args.function)
    gens, names = [], []
    for tok in args.group.split(";"):
        tok = tok.strip()
        if tok in _GROUP_NAMES:
            gens.append(_GROUP_NAMES[tok])
            names.append(tok)
        else:
            gens.append(parse_matrix(tok))
            names.append(f"[{tok}]")
    tol = args.eq_tol
    rep = eq.check_equivariance(h, gens, n_samples=args.samples, word_len=args.word_len,
                                seed=cfg.seed, tol=tol, names=names,
                                min_image_im=cfg.y_min)
    payload = {"function": args.function, "group": names, "tolerance": tol, **rep.as_dict()}
    rows = [{k: v for k, v in payload.items() if k not in ("group", "worst_sample")}]
    return payload, rows, rep.n_fail == 0


def cmd_reduce(args, cfg):
    z = parse_complex(args.z)
    if mb.is_inf(z) or z.imag <= 0:
        raise InputError("z must lie in the upper half-plane")
    w, word, letters = mb.reduce_to_fundamental_domain(z, return_letters=True)
    payload = {"z": z, "z_reduced": w, "word": mb.word_string(letters),
               "matrix": [word.a, word.b, word.c, word.d]}
    return payload, [{"z": z, "z_reduced": w, "word": payload["word"]}], True


def cmd_coeffs(args, cfg):
    f = _form(args.form)
    n = args.order
    if n < 1:
        raise InputError("order must be positive")
    s = f.series(n)
    e = s.leading_exponent
    rows = [{"n": i, "exponent": str(e + i), "coefficient": str(c)}
            for i, c in enumerate(s.coefficients[: n + 1])]
    payload = {"form": args.form, "leading_exponent": str(e), "order": n,
               "coefficients": [r["coefficient"] for r in rows]}
    return payload, rows, True


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--config", metavar="FILE", default=None)
    common.add_argument("--truncation", type=int, default=None,
                        help="evaluate every q-series with exactly this many terms")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    common.add_argument("--y-min", type=float, default=None)

    p = _Parser(prog="modequiv", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("eval", parents=[common], help="evaluate a form at a point")
    s.add_argument("--form", required=True)
    s.add_argument("--z", required=True)
    s.add_argument("--derivative", type=int, default=0)
    s.add_argument("--param", action="append", default=[],
                   help="key=value for closed-form rules (power_of_z, exponential, cayley_product)")
    s.add_argument("--weight", type=float, default=0.0)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("classify", parents=[common], help="classify a Moebius transform")
    s.add_argument("matrix", nargs="?", help="a,b,c,d")
    s.add_argument("--matrix", dest="matrix_opt", default=None)
    s.set_defaults(func=cmd_classify)

    for name, fn, helptext in (("zeros", cmd_zeros, "zeros in a box"),
                               ("critical-points", cmd_critical_points, "zeros of f' in a box")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--function", required=True,
                       help="form name, optionally with a trailing ', or pert-exp/pert-poly/pert-const")
        s.add_argument("--box", required=True, help="re_min,re_max,im_min,im_max")
        s.add_argument("--max", type=int, default=1000)
        s.set_defaults(func=fn)

    s = sub.add_parser("check-identities", parents=[common], help="run the identity catalog")
    s.add_argument("--only", action="append", default=[])
    s.add_argument("--n", type=int, default=100, help="sample points per identity")
    s.add_argument("--sample-seed", dest="seed_points", type=int, default=None,
                   help="seed of the sample points (defaults to --seed, else 0)")
    s.add_argument("--include-quoted", action="store_true",
                   help="also run the variants that are known not to hold")
    s.set_defaults(func=cmd_check_identities)

    s = sub.add_parser("equivariance", parents=[common], help="randomized equivariance check of h_f")
    s.add_argument("--function", default="Delta", help="form name, 'identity' or 'shift'")
    s.add_argument("--group", default="S;T", help="';'-separated S, T, P or a,b,c,d matrices")
    s.add_argument("--samples", type=int, default=500)
    s.add_argument("--word-len", type=int, default=8)
    s.add_argument("--eq-tol", type=float, default=1e-7)
    s.set_defaults(func=cmd_equivariance)

    s = sub.add_parser("reduce", parents=[common], help="reduce a point to the fundamental domain")
    s.add_argument("--z", required=True)
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("coeffs", parents=[common], help="export exact q-coefficients")
    s.add_argument("--form", required=True)
    s.add_argument("--order", type=int, default=20)
    s.set_defaults(func=cmd_coeffs)
    return p


def _render(cfg: Config, command: str, payload, rows) -> str:
    if cfg.output_format == "csv":
        rows = [_jsonable(r) for r in rows]
        keys = list(dict.fromkeys(k for r in rows for k in r))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        return buf.getvalue()
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "result": _jsonable(payload)}
    return json.dumps(doc, indent=2) + "\n"


_VALUE_OPTIONS = ("--box", "--z", "--matrix", "--group", "--param")
_NEGATIVE = re.compile(r"^-[\d.ij]")


def _glue_values(argv):
    """Attach values such as ``-0.5,0.5,0.05,1`` to their option so argparse
    does not read them as flags; a bare negative matrix becomes ``--matrix``."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTIONS and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        if "," in tok and _NEGATIVE.match(tok):
            tok = f"--matrix={tok}"
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = make_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_glue_values(argv))
    try:
        cfg = build_config(args)
        with forms.fixed_truncation(cfg.truncation_override):
            payload, rows, ok = args.func(args, cfg)
    except InputError as err:
        print(f"modequiv: error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as err:
        print(f"modequiv: error: {err}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(_render(cfg, args.command, payload, rows))
    return EXIT_OK if ok else EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
