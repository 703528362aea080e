"""Command-line experiments.

Subcommands::

    rnss accuracy   round-trip error of recon/add/mult/inv over a sigma2_y sweep
    rnss mi         empirical leakage and closed-form bounds over a sweep
    rnss kalman     private vs plain Kalman filter, per-step error and IO count
    rnss demo OP    one-off share/recon/add/mult/inv on the simulated transport
    rnss serve      run one party of the Kalman experiment over TCP

Exit codes: 0 success, 1 other failure (e.g. a singular mask), 2 protocol
abort, 3 configuration error. A failed run never leaves a partial CSV
behind.
"""
from __future__ import annotations

import argparse
import io
import logging
import math
import os
import socket
import sys
import tempfile

import numpy as np

from . import privacy
from .arith import dealer_triple, inv, mult
from .core import (EvaluationDomain, SharingParams, ShareSet, default_points, interpolate_at, recon, share,
                   share_values)
from .errors import ConfigError, ConfigMismatch, ProtocolAbort, RnssError
from .kalman import mask_variance, model_from_config, party_script, run_direct
from .runtime import DirectEngine, RuntimeConfig, load_config, run_simulated, run_tcp, stream_rng

log = logging.getLogger("rnss")

DEFAULT_GRID = tuple(float(v) for v in range(1, 1000, 20))
SECRETS = (5.5, 34.7)


def parse_sweep(text: str) -> list[float]:
    """``"1,10,100"`` or ``"start:stop:count"`` (log-spaced, inclusive)."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            vals = np.geomspace(float(start), float(stop), int(count)).tolist()
        else:
            vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep {text!r}: {exc}") from None
    if not vals:
        raise ConfigError("sweep is empty")
    if any(v < 0 or not math.isfinite(v) for v in vals):
        raise ConfigError("sweep values must be finite and >= 0")
    return vals


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def emit(text: str, out: str | None):
    """Write all of ``text`` or nothing."""
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rnss-", suffix=".csv")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _domain(args) -> EvaluationDomain:
    pts = tuple(float(p) for p in args.points.split(",")) if args.points else default_points(args.n)
    if len(pts) != args.n:
        raise ConfigError(f"--points gives {len(pts)} points for n={args.n}")
    try:
        return EvaluationDomain(pts, args.t)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- accuracy ------------------------------------------------------------------

def accuracy_rows(domain: EvaluationDomain, sweep, trials: int, seed: int, secrets=SECRETS):
    """Median and max absolute error per operation, ``trials`` independent runs each.

    Errors: recon of s1, add s1 + s2, mult s1 * s2, inv 1 / s1.
    """
    s1, s2 = secrets
    rows = []
    for sigma2 in sweep:
        params = SharingParams(sigma2_y=sigma2)
        mask = mask_variance(sigma2, None)
        rng = stream_rng(seed, "accuracy", repr(float(sigma2)))
        engine = DirectEngine(domain, seed)
        shape = (trials,)
        x = _batch(np.full(shape, s1), domain, params, rng)
        y = _batch(np.full(shape, s2), domain, params, rng)
        err = {}
        err["recon"] = np.abs(np.asarray(recon(x)) - s1)
        err["add"] = np.abs(engine.open(x + y) - (s1 + s2))
        z, _ = mult(x, y, dealer_triple(domain, params, sigma2_r=mask, rng=rng, shape=shape), engine)
        err["mult"] = np.abs(engine.open(z) - s1 * s2)
        r = engine.joint_random(params, shape, mask)
        w, _ = inv(x, r, dealer_triple(domain, params, sigma2_r=mask, rng=rng, shape=shape), engine)
        err["inv"] = np.abs(engine.open(w) - 1.0 / s1)
        for op in ("recon", "add", "mult", "inv"):
            e = np.atleast_1d(err[op])
            rows.append((sigma2, op, float(np.median(e)), float(e.max()), trials))
    return rows


def _batch(secrets, domain, params, rng):
    values, _, _ = share_values(secrets, domain, params, rng)
    return ShareSet(domain, values)


def cmd_accuracy(args) -> str:
    domain = _domain(args)
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    sweep = parse_sweep(args.sigma2_y) if args.sigma2_y else DEFAULT_GRID
    rows = accuracy_rows(domain, sweep, args.trials, args.seed)
    return to_csv(("sigma2_y", "op", "rse_median", "rse_max", "trials"), rows)


# -- mutual information --------------------------------------------------------

def mi_rows(domain: EvaluationDomain, sweep, samples: int, seed: int, quantities,
            sigma2_s: float = 1.0, bias_correct: bool = False):
    rows = []
    for sigma2 in sweep:
        params = SharingParams(sigma2_y=sigma2)
        mask = mask_variance(sigma2, None)
        for q in quantities:
            sub = int(stream_rng(seed, "mi", f"{float(sigma2)!r}|{q}").integers(2**63))
            spec = privacy.MiSampleSpec(domain, params, q, sigma2_s=sigma2_s, samples=samples,
                                        mask_sigma2=mask, seed=sub, bias_correct=bias_correct)
            est = privacy.empirical_mi(spec)
            if est.near_singular:
                log.warning("sigma2_y=%r %s: near-singular sample covariance", sigma2, q)
            bound = privacy.worst_case_bound(domain, params, q, sigma2_s, mask_sigma2=mask)
            rows.append((sigma2, q, est.bits, bound, samples))
    return rows


def cmd_mi(args) -> str:
    domain = _domain(args)
    if args.samples < 10:
        raise ConfigError("--samples must be >= 10")
    sweep = parse_sweep(args.sigma2_y) if args.sigma2_y else DEFAULT_GRID
    quantities = tuple(q.strip() for q in args.quantities.split(","))
    for q in quantities:
        if q not in privacy.QUANTITIES:
            raise ConfigError(f"unknown quantity {q!r}")
    rows = mi_rows(domain, sweep, args.samples, args.seed, quantities, bias_correct=args.bias_correct)
    return to_csv(("sigma2_y", "quantity", "mi_estimate_bits", "mi_bound_bits", "N"), rows)


# -- kalman ----------------------------------------------------------------------

KALMAN_HEADER = ("k", "rse", "io_cumulative")


def _free_ports(count: int) -> list[int]:
    socks = []
    try:
        for _ in range(count):
            s = socket.socket()
            s.bind(("127.0.0.1", 0))
            socks.append(s)
        return [s.getsockname()[1] for s in socks]
    finally:
        for s in socks:
            s.close()


def kalman_config(args) -> RuntimeConfig:
    if args.config:
        return load_config(args.config)
    points = tuple(float(p) for p in args.points.split(",")) if args.points else ()
    return RuntimeConfig(n=args.n, t=args.t, points=points, sigma2_y=float(args.sigma2_y),
                         seed=args.seed, steps=args.steps)


def kalman_csv(cfg: RuntimeConfig, transport: str, timeout: float = 30.0) -> str:
    model, x0 = model_from_config(cfg)
    domain = cfg.domain()
    if transport == "direct":
        rows = run_direct(model, x0, domain, cfg.sigma2_y, cfg.steps, cfg.seed, cfg.mask_sigma2)
        return to_csv(KALMAN_HEADER, rows)
    script = party_script(model, x0, domain, cfg.sigma2_y, cfg.steps, cfg.seed, cfg.mask_sigma2)
    if transport == "sim":
        tr = run_simulated(cfg.n, cfg.t, script, seed=cfg.seed, points=cfg.points, timeout=timeout)
    elif transport == "tcp":
        if not cfg.addresses:
            cfg = RuntimeConfig(**{**cfg.__dict__, "addresses": tuple(
                ("127.0.0.1", p) for p in _free_ports(cfg.n))})
        tr = run_tcp(cfg.addresses, script, t=cfg.t, seed=cfg.seed, points=cfg.points,
                     digest=cfg.digest(), timeout=timeout)
    else:
        raise ConfigError(f"unknown transport {transport!r}")
    outputs = {to_csv(KALMAN_HEADER, rows) for rows in tr.results.values()}
    if len(outputs) != 1:
        raise ProtocolAbort("parties disagree on the output")
    return outputs.pop()


def cmd_kalman(args) -> str:
    return kalman_csv(kalman_config(args), args.transport, args.timeout)


def cmd_serve(args) -> str:
    cfg = load_config(args.config)
    if not cfg.addresses:
        raise ConfigError("serve needs addresses in the config")
    if not 0 <= args.party < cfg.n:
        raise ConfigError(f"party index must be in 0..{cfg.n - 1}")
    model, x0 = model_from_config(cfg)
    script = party_script(model, x0, cfg.domain(), cfg.sigma2_y, cfg.steps, cfg.seed, cfg.mask_sigma2)
    tr = run_tcp(cfg.addresses, script, t=cfg.t, seed=cfg.seed, points=cfg.points,
                 digest=cfg.digest(), local=[args.party], timeout=args.timeout)
    return to_csv(KALMAN_HEADER, tr.results[args.party])


# -- demo ------------------------------------------------------------------------

def cmd_demo(args) -> str:
    domain = _domain(args)
    params = SharingParams(sigma2_y=float(args.sigma2_y), rng_seed=args.seed)
    rng = params.rng()
    out = io.StringIO()
    a, wa = share(args.a, domain, params, rng)
    if args.op in ("share", "recon"):
        out.write(f"secret {args.a!r}\nanchors {list(wa.xs)}\n")
        for p, v in zip(domain.points, a.values):
            out.write(f"party x={p!r} share={float(v)!r}\n")
        if args.op == "recon":
            out.write(f"recon {recon(a)!r}\n")
        return out.getvalue()
    b, _ = share(args.b, domain, params, rng)
    mask = mask_variance(params.sigma2_y, None)
    triple = dealer_triple(domain, params, sigma2_r=mask, rng=rng)

    def script(party):
        i = party.index
        x, y, tr = a.for_party(i), b.for_party(i), triple.for_party(i)
        opened = {}
        if args.op == "add":
            z = x + y
        elif args.op == "mult":
            z, m = mult(x, y, tr, party)
            opened = {"d": m.d, "e": m.e}
        elif args.op == "inv":
            r = party.joint_random(params, (), mask)
            z, m = inv(x, r, tr, party)
            opened = {"d": m.d, "e": m.e, "sr": m.sr}
        else:
            raise ConfigError(f"unknown demo op {args.op!r}")
        return opened, _deliver(party, z)

    t = run_simulated(domain.n, domain.threshold, script, seed=args.seed, points=domain.points)
    opened, result = t.results[0]
    expected = {"add": args.a + args.b, "mult": args.a * args.b, "inv": 1.0 / args.a}[args.op]
    for k, v in opened.items():
        out.write(f"opened {k} {float(v)!r}\n")
    out.write(f"result {result!r}\nexpected {expected!r}\nio {t.io[0]}\n")
    return out.getvalue()


def _deliver(party, z):
    """Output delivery to every party, reconstructed from the lowest ``t + 1`` shares."""
    got = party.deliver(z)
    k = party.t + 1
    return interpolate_at(party.domain.points[:k], np.stack(got[:k]), 0.0)


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rnss", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n, t, sigma2):
        sp.add_argument("--n", type=int, default=n)
        sp.add_argument("--t", type=int, default=t)
        sp.add_argument("--points", default=None, help="comma-separated evaluation points")
        sp.add_argument("--sigma2-y", dest="sigma2_y", default=sigma2,
                        help='comma list or "start:stop:count" (log-spaced)')
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    sp = sub.add_parser("accuracy", help="round-trip accuracy sweep")
    common(sp, 11, 5, None)
    sp.add_argument("--trials", type=int, default=100)
    sp.set_defaults(func=cmd_accuracy)

    sp = sub.add_parser("mi", help="mutual-information sweep")
    common(sp, 11, 5, None)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--quantities", default="single_share,t_shares,t_shares_plus_mask")
    sp.add_argument("--bias-correct", action="store_true")
    sp.set_defaults(func=cmd_mi)

    sp = sub.add_parser("kalman", help="private Kalman filter experiment")
    common(sp, 3, 1, "1000")
    sp.add_argument("--steps", type=int, default=50)
    sp.add_argument("--transport", choices=("sim", "tcp", "direct"), default="sim")
    sp.add_argument("--config", default=None)
    sp.add_argument("--timeout", type=float, default=30.0)
    sp.set_defaults(func=cmd_kalman)

    sp = sub.add_parser("demo", help="single operation on the simulated transport")
    sp.add_argument("op", choices=("share", "recon", "add", "mult", "inv"))
    common(sp, 5, 2, "100")
    sp.add_argument("--a", type=float, default=5.5)
    sp.add_argument("--b", type=float, default=34.7)
    sp.set_defaults(func=cmd_demo)

    sp = sub.add_parser("serve", help="run one party of the Kalman experiment over TCP")
    sp.add_argument("--party", type=int, required=True)
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default=None)
    sp.add_argument("--timeout", type=float, default=60.0)
    sp.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = args.func(args)
        emit(text, args.out)
    except (ConfigError, ConfigMismatch, ValueError) as exc:
        print(f"rnss: configuration error: {exc}", file=sys.stderr)
        return 3
    except ProtocolAbort as exc:
        print(f"rnss: protocol aborted: {exc}", file=sys.stderr)
        return 2
    except RnssError as exc:
        print(f"rnss: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
