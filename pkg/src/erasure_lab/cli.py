"""Command-line entry point: ``erasure-lab <subcommand> ...``.

Exit codes: 0 on success, 1 when a verification (or recovery) fails,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import struct
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels, analytics
from .channel import ChannelError, Memoryless, parse_channel
from .codecs import CodeParams, CodecError, is_mds, mds_codebook, rs_code
from .galois import GaloisError, field_of_order
from .ml_oracle import near_clone_codebook, verify_proposition_one
from .montecarlo import (CSV_COLUMNS, FAMILIES, CampaignConfig, ConfigError,
                         InvariantViolation, run_campaign)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

HEADER_MAGIC = b"ELFEC\x00\x01\x00"
HEADER = struct.Struct("<8sQ")  # magic, original length in bytes


class UsageError(Exception):
    pass


class UnrecoverableBlock(Exception):
    def __init__(self, blocks):
        self.blocks = list(blocks)
        super().__init__(f"unrecoverable blocks: {self.blocks}")


# --- argument helpers ----------------------------------------------------------

def _prob(text: str):
    try:
        val = Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a probability: {text!r}") from None
    if not 0 <= val <= 1:
        raise argparse.ArgumentTypeError(f"probability must lie in [0, 1], got {text}")
    return val


def _positive(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return val


def _nonneg(text: str) -> int:
    val = int(text)
    if val < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return val


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout
    return open(path, "w", encoding="utf-8", newline="")


def _emit_json(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    fh = _open_out(path)
    try:
        fh.write(text)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


# --- exponents -------------------------------------------------------------------

LOG_COLUMNS = ("R_nats", "u_R", "envelope_u", "E_r", "lin_bound")


def cmd_exponents(args) -> int:
    if args.q < 2:
        raise UsageError("--q must be at least 2")
    field_of_order(args.q)
    if not 0 < float(args.pi) < 1:
        raise UsageError("--pi must lie strictly between 0 and 1")
    curve = analytics.exponent_curve(args.q, float(args.pi), points=args.points, N=args.N)
    if args.bits:
        # display only: every log-scaled column goes to base 2
        for row in curve.rows:
            for c in LOG_COLUMNS:
                row[c] = row[c] / math.log(2)
            row["R_bits"] = row.pop("R_nats")
        columns = ["R_bits"] + analytics.CURVE_COLUMNS[1:]
    else:
        columns = analytics.CURVE_COLUMNS
    fh = _open_out(args.out)
    try:
        fh.write(",".join(columns) + "\n")
        for row in curve.rows:
            fh.write(",".join(analytics._fmt(row[c]) for c in columns) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# --- tail ------------------------------------------------------------------------------

def tail_report(N: int, K: int, q: int, pi: float) -> dict:
    """Exact values and bounds for one (N, K, q, pi) point as a JSON-ready dict."""
    if not 1 <= K < N:
        raise UsageError(f"need 1 <= K < N, got N={N}, K={K}")
    pi = float(pi)
    alpha = (N - K) / N
    R = K / N * math.log(q)
    p_sub = analytics.mds_tail_exact(N, K, pi)
    out = {
        "inputs": {"N": N, "K": K, "q": q, "pi": pi},
        "R_nats": R,
        "alpha": alpha,
        "capacity": analytics.capacity(q, pi),
        "critical_rate": analytics.critical_rate(q, pi),
        "regime": analytics.regime(R, q, pi),
        "mds_tail_exact": p_sub,
        "mds_ml_error": analytics.mds_ml_error(N, K, q, pi),
        "ml_sandwich": list(analytics.ml_sandwich(p_sub, q)),
        "lin_tail_exact": analytics.lin_tail_exact(N, K, q, pi),
    }
    try:
        lo, hi = analytics.mds_tail_bounds(N, K, pi)
        out["mds_tail_bounds"] = {"lower": lo, "upper": hi, "above_capacity": False}
    except analytics.AboveCapacity:
        out["mds_tail_bounds"] = {"lower": None, "upper": None, "above_capacity": True}
    if pi == 0:
        # no erasures: the only failure left is a singular generator
        out["lin_error_bound"] = out["lin_tail_exact"]
    else:
        out["lin_error_bound"] = analytics.lin_error_bound(N, K, q, pi)
    return {k: _jsonable(v) for k, v in out.items()}


def cmd_tail(args) -> int:
    field_of_order(args.q)
    _emit_json(tail_report(args.N, args.K, args.q, args.pi), args.out)
    return EXIT_OK


# --- simulate --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.channel and args.pi is not None:
        raise UsageError("give either --channel or --pi, not both")
    if args.channel:
        ch = parse_channel(args.channel)
    elif args.pi is not None:
        ch = Memoryless(args.pi)
    else:
        raise UsageError("one of --channel or --pi is required")
    field_of_order(args.q)
    cfg = CampaignConfig(args.family, args.N, args.K, args.q, ch, args.trials,
                         seed=args.seed, resample_generator=not args.fixed_generator,
                         backend=args.backend)
    try:
        result = run_campaign(cfg)
    except InvariantViolation as exc:
        print(f"erasure-lab: {exc}", file=sys.stderr)
        return EXIT_FAIL
    fh = _open_out(args.out)
    try:
        if args.format == "json":
            fh.write(result.to_json())
        else:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            fh.write(",".join(str(v) for v in result.csv_row()) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK if result.verdict.get("passed") else EXIT_FAIL


# --- verify-mds -------------------------------------------------------------------------

def cmd_verify_mds(args) -> int:
    params = CodeParams(args.N, args.K, field_of_order(args.q))
    rng = np.random.default_rng(args.seed)
    extra = []
    if args.inject_non_mds:
        # deterministic fixture: the MDS code with one codeword duplicated
        fixture = near_clone_codebook(mds_codebook(params), np.random.default_rng(args.seed + 1))
        if is_mds(fixture):
            raise UsageError("could not build a non-MDS fixture for these parameters")
        extra.append(fixture)
    report = verify_proposition_one(params, Memoryless(args.pi), args.codebooks, rng,
                                    extra_codebooks=extra)
    report["injected_non_mds"] = len(extra)
    _emit_json(report, args.out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# --- codec-demo ---------------------------------------------------------------------------

@dataclass
class DemoReport:
    blocks: int
    packets_per_block: int
    packet_symbols: int
    original_length: int
    erased_packets: int = 0
    unrecoverable: list = field(default_factory=list)

    @property
    def recovered_all(self) -> bool:
        return not self.unrecoverable

    def to_dict(self) -> dict:
        return {
            "blocks": self.blocks,
            "packets_per_block": self.packets_per_block,
            "packet_symbols": self.packet_symbols,
            "original_length": self.original_length,
            "erased_packets": self.erased_packets,
            "unrecoverable_blocks": self.unrecoverable,
            "recovered_blocks": self.blocks - len(self.unrecoverable),
            "recovered_all": self.recovered_all,
        }


def _symbol_width(q: int) -> int:
    if q == 256:
        return 1
    if q == 65536:
        return 2
    raise UsageError("codec-demo supports q = 256 (bytes) or q = 65536 (16-bit symbols)")


def frame_file(data: bytes, q: int, K: int, packet_symbols: int) -> np.ndarray:
    """Header + data + zero padding as a (blocks, K, packet_symbols) symbol array.

    Row k of block b is the payload of source packet k; column t of a block is
    one K-symbol message.
    """
    width = _symbol_width(q)
    raw = HEADER.pack(HEADER_MAGIC, len(data)) + data
    per_block = K * packet_symbols * width
    blocks = max(1, -(-len(raw) // per_block))
    raw = raw + bytes(blocks * per_block - len(raw))
    dtype = np.uint8 if width == 1 else np.dtype(">u2")
    sym = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    return sym.reshape(blocks, K, packet_symbols)


def unframe(blocks: np.ndarray, q: int) -> bytes:
    width = _symbol_width(q)
    dtype = np.uint8 if width == 1 else np.dtype(">u2")
    raw = blocks.astype(dtype).tobytes()
    magic, length = HEADER.unpack_from(raw)
    if magic != HEADER_MAGIC:
        raise CodecError("bad frame header")
    return raw[HEADER.size:HEADER.size + length]


def encode_blocks(source: np.ndarray, code) -> np.ndarray:
    """(blocks, K, P) source symbols -> (blocks, N, P) coded packets."""
    B, K, P = source.shape
    msgs = source.transpose(0, 2, 1).reshape(B * P, K)
    words = code.encode_batch(msgs)
    return words.reshape(B, P, code.params.N).transpose(0, 2, 1)


def decode_blocks(packets: np.ndarray, erased: np.ndarray, code):
    """Recover (blocks, K, P) source symbols from the first K surviving packets.

    Returns the recovered array (zeros for lost blocks) and the list of block
    indices with fewer than K surviving packets.
    """
    B, N, P = packets.shape
    K = code.params.K
    F = code.params.field
    out = np.zeros((B, K, P), dtype=np.int64)
    lost = []
    G = code.generator.entries
    for b in range(B):
        kept = np.flatnonzero(~erased[b])
        if kept.size < K:
            lost.append(b)
            continue
        cols = kept[:K]
        y = packets[b][cols].T  # (P, K): one row per message
        status, msgs, _ = _kernels.solve_batch(F, G[:, cols], y, np.zeros(y.shape, dtype=bool))
        if np.any(status != _kernels.OK):
            raise CodecError(f"block {b}: decoder failed on {K} surviving packets")
        out[b] = msgs.T
    return out, lost


def parse_erasures(specs, blocks: int, N: int) -> np.ndarray:
    """``i,j`` erases packets i and j in every block; ``b:i,j`` only in block b."""
    erased = np.zeros((blocks, N), dtype=bool)
    for spec in specs or ():
        target, sep, rest = spec.rpartition(":")
        try:
            idx = [int(v) for v in rest.split(",") if v.strip()]
            rows = [int(target)] if sep else list(range(blocks))
        except ValueError:
            raise UsageError(f"malformed --erase value {spec!r}") from None
        if any(not 0 <= i < N for i in idx):
            raise UsageError(f"--erase packet index out of range 0..{N - 1}: {spec!r}")
        if any(not 0 <= r < blocks for r in rows):
            raise UsageError(f"--erase block index out of range 0..{blocks - 1}: {spec!r}")
        for r in rows:
            erased[r, idx] = True
    return erased


def run_codec_demo(data: bytes, q: int, N: int, K: int, pi: float = 0.0,
                   erase=(), packet_symbols: int = 1024, seed: int = 0):
    """Full round trip; returns ``(recovered_bytes, DemoReport)``."""
    if not 1 <= K < N:
        raise UsageError(f"need 1 <= K < N, got N={N}, K={K}")
    code = rs_code(CodeParams(N, K, field_of_order(q)))
    source = frame_file(data, q, K, packet_symbols)
    packets = encode_blocks(source, code)
    B = source.shape[0]
    erased = parse_erasures(erase, B, N)
    if pi:
        rng = np.random.default_rng(seed)
        erased |= rng.random((B, N)) < float(pi)
    report = DemoReport(B, N, packet_symbols, len(data), int(erased.sum()))
    received = np.where(erased[:, :, None], 0, packets)
    recovered, lost = decode_blocks(received, erased, code)
    report.unrecoverable = lost
    if 0 in lost:
        # header lost with block 0: return the raw padded payload
        width = _symbol_width(q)
        dtype = np.uint8 if width == 1 else np.dtype(">u2")
        return recovered.astype(dtype).tobytes()[HEADER.size:], report
    return unframe(recovered, q), report


def cmd_codec_demo(args) -> int:
    if args.packet_size < 1:
        raise UsageError("--packet-size must be positive")
    with open(args.input, "rb") as fh:
        data = fh.read()
    out_bytes, report = run_codec_demo(data, args.q, args.N, args.K, float(args.pi),
                                       args.erase, args.packet_size, args.seed)
    with open(args.output, "wb") as fh:
        fh.write(out_bytes)
    summary = report.to_dict()
    summary["byte_exact"] = out_bytes == data
    _emit_json(summary, args.report)
    if report.unrecoverable:
        print(f"erasure-lab: {UnrecoverableBlock(report.unrecoverable)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# --- parser --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="erasure-lab",
        description="Erasure-channel coding: exponents, exact error values, "
                    "Monte Carlo campaigns, MDS optimality checks and a file FEC demo.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="write the exponent curves as CSV")
    p.add_argument("--q", type=int, required=True, help="field / alphabet size")
    p.add_argument("--pi", type=_prob, required=True, help="erasure probability")
    p.add_argument("--points", type=_positive, default=400, help="uniform grid size (default 400)")
    p.add_argument("--N", type=_positive, default=None,
                   help="block length for the linear-code bound column (default q+1)")
    p.add_argument("--bits", action="store_true", help="report rates and exponents in bits")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("tail", help="exact error values and bounds as JSON")
    p.add_argument("--N", type=_positive, required=True)
    p.add_argument("--K", type=_positive, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--pi", type=_prob, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("simulate", help="run a seeded Monte Carlo campaign")
    p.add_argument("--family", choices=FAMILIES, default="rs")
    p.add_argument("--N", type=_positive, required=True)
    p.add_argument("--K", type=_positive, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--pi", type=_prob, default=None, help="memoryless erasure probability")
    p.add_argument("--channel", default=None,
                   help="channel spec, e.g. memoryless:pi=0.1 or ge:pgb=0.01,pbg=0.2,pig=0,pib=0.5")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--fixed-generator", action="store_true",
                   help="draw one generator for the whole campaign instead of one per trial")
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-mds", help="exhaustive MDS optimality check")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--N", type=_positive, required=True)
    p.add_argument("--K", type=_positive, required=True)
    p.add_argument("--pi", type=_prob, required=True, help="may be rational, e.g. 3/10")
    p.add_argument("--codebooks", type=_nonneg, default=200, help="non-MDS codebooks to sample")
    p.add_argument("--inject-non-mds", action="store_true",
                   help="also check a fixed near-clone non-MDS codebook")
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify_mds)

    p = sub.add_parser("codec-demo", help="protect a file with RS packets and recover it")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--q", type=int, choices=(256, 65536), default=256)
    p.add_argument("--N", type=_positive, default=6)
    p.add_argument("--K", type=_positive, default=4)
    p.add_argument("--pi", type=_prob, default=0.0, help="per-packet erasure probability")
    p.add_argument("--erase", action="append", default=[],
                   help="fixed erasures: 'i,j' in every block or 'b:i,j' in block b (repeatable)")
    p.add_argument("--packet-size", type=int, default=1024, help="symbols per packet")
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--report", default=None, help="JSON report path (default stdout)")
    p.set_defaults(func=cmd_codec_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, ChannelError, GaloisError, CodecError,
            analytics.AnalyticsError) as exc:
        print(f"erasure-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"erasure-lab {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
