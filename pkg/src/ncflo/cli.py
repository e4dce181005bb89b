"""Command-line interface.

Subcommands cover the experiment modes (``rates``, ``branch``, ``chi``,
``stats``, ``witness``, ``fermionant-check``) plus ``selftest``, which runs
the cross-route and closed-form consistency battery and exits nonzero on any
failure. Options may also come from a JSON config file (``--config``); flags
given on the command line win. Exit codes: 0 success, 1 failed validation or
failed checks, 2 usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .branch import (
    amplitude_table,
    amplitude_table_full,
    branch_operator_dense,
    branch_operator_pathcycle,
    commuting_control_instance,
    dress,
    fermionant,
    normalize_beta,
)
from .ensemble import ExperimentConfig, run_ensemble
from .errors import NcfloError
from .kernel import build_kernel, kernel_element_oracle
from .linalg import haar_unitary
from .model import (
    DiluteConfig,
    collision_free_rate_asymptotic,
    collision_free_rate_exact,
    make_instance,
    post_select,
)
from .mpo import rank_witness
from .rng import RngStream
from .weyl import (
    encode_decode_check_d2,
    teleport_update,
    weyl_matrix,
    weyl_transpose_relabel,
)


def parse_int_list(text: str) -> tuple[int, ...]:
    """Accept ``4``, ``2..6``, or ``8,12,16``."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(part) for part in text.split(",") if part)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with ExperimentConfig fields")
    parser.add_argument("--n", type=parse_int_list, help="particle counts, e.g. 4, 2..6, 8,12,16")
    parser.add_argument("--d", type=parse_int_list, help="local dimensions")
    parser.add_argument("--kappa", type=float, help="dilution parameter (default 0.5)")
    parser.add_argument("--eps", type=float, help="truncation tolerance (default 1e-3)")
    parser.add_argument("--instances", type=int, help="instances per grid point (default 200)")
    parser.add_argument("--shots", type=int, help="Born samples per instance (default 1000)")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--out", help="output bundle directory")
    parser.add_argument("--threads", type=int, help="instance-level worker threads")
    parser.add_argument("--control", choices=("monitored", "commuting"), help="ensemble flavor")
    parser.add_argument("--boundary-l", type=int, help="input boundary label (default 0)")
    parser.add_argument("--boundary-r", type=int, help="readout boundary label (default 0)")
    parser.add_argument("--timings", action="store_true", help="record wall times (breaks byte reproducibility)")
    parser.add_argument("--branches", action="store_true", help="also write branches.csv")
    parser.add_argument(
        "--chi-boundaries", choices=("contracted", "open"), help="routing-tensor boundary handling"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncflo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in ("rates", "branch", "chi", "stats", "all"):
        p = sub.add_parser(mode, help=f"run the {mode} experiment")
        _add_common(p)
    p = sub.add_parser("witness", help="used-leg sector rank witness")
    _add_common(p)
    p.add_argument("--t", type=int, help="cut position (default floor(n/2))")
    p = sub.add_parser("fermionant-check", help="fermionant and cyclic-closure identities")
    _add_common(p)
    p = sub.add_parser("selftest", help="cross-route and closed-form consistency battery")
    p.add_argument("--seed", type=int, default=2024)
    return parser


def _config_from_args(args: argparse.Namespace, mode: str) -> ExperimentConfig:
    data: dict = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            data.update(json.load(fh))
    data["mode"] = mode
    overrides = {
        "n_values": args.n,
        "d_values": args.d,
        "kappa": args.kappa,
        "epsilon": args.eps,
        "instances": args.instances,
        "shots_per_instance": args.shots,
        "seed": args.seed,
        "out_dir": args.out,
        "threads": args.threads,
        "control": args.control,
        "boundary_l": getattr(args, "boundary_l", None),
        "boundary_r": getattr(args, "boundary_r", None),
        "chi_boundaries": getattr(args, "chi_boundaries", None),
        "witness_t": getattr(args, "t", None),
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if getattr(args, "timings", False):
        data["record_timings"] = True
    if getattr(args, "branches", False):
        data["include_branches"] = True
    if "n_values" not in data:
        raise NcfloError("no particle counts given; pass --n or a config file")
    return ExperimentConfig.from_dict(data)


def _print_summary(bundle) -> None:
    cfg = bundle.manifest["config"]
    print(f"mode={cfg['mode']} points={len(cfg['d_values']) * len(cfg['n_values'])} "
          f"instances={len(bundle.records)}")
    if bundle.witness_rows:
        for n, t, d, size, rank, expected, off, ok in bundle.witness_rows:
            status = "ok" if ok else "FAIL"
            print(f"witness n={n} t={t} d={d}: rank {rank}/{expected}, "
                  f"max offdiag {off:.2e} [{status}]")
    if bundle.fermionant_rows:
        for n, d, det_err, perm_err, closure_err, ok in bundle.fermionant_rows:
            status = "ok" if ok else "FAIL"
            print(f"fermionant n={n} d={d}: det {det_err:.2e} perm {perm_err:.2e} "
                  f"closure {closure_err:.2e} [{status}]")
    if bundle.out_dir:
        print(f"bundle written to {bundle.out_dir}")


def run_selftest(seed: int) -> int:
    """Deterministic consistency battery; prints one line per check."""
    failures = 0

    def check(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        if ok:
            print(f"ok   {name}")
        else:
            failures += 1
            print(f"FAIL {name}: {detail}")

    rng = RngStream(seed)

    # Weyl algebra: group law and transpose relabeling, all labels
    worst = 0.0
    for d in (2, 3, 5):
        for a in range(d):
            for b in range(d):
                phase, a2, b2 = weyl_transpose_relabel(d, a, b)
                delta = np.max(np.abs(
                    weyl_matrix(d, a, b).T - phase * weyl_matrix(d, a2, b2)
                ))
                worst = max(worst, delta)
    check("weyl transpose relabeling (d in {2,3,5})", worst < 1e-12, f"max error {worst:.2e}")

    worst = 0.0
    for d in (2, 3):
        for _ in range(200):
            psi = rng.gen.standard_normal(d) + 1j * rng.gen.standard_normal(d)
            psi /= np.linalg.norm(psi)
            xi = rng.gen.standard_normal((d, d)) + 1j * rng.gen.standard_normal((d, d))
            beta = (int(rng.gen.integers(d)), int(rng.gen.integers(d)))
            try:
                teleport_update(psi, xi, beta)
            except NcfloError as exc:
                worst = max(worst, 1.0)
    check("fusion update identity (600 random triples)", worst == 0.0, "self-check raised")

    report = encode_decode_check_d2(np.array([1.0, 0.0]))
    check("two-qubit occupation gadget", report.ok, f"max error {report.max_error:.2e}")

    # closed forms: two-step and three-step branch operators
    worst = 0.0
    for d in (2, 3):
        for _ in range(50):
            blocks = haar_unitary(2 * d, rng)[: 2 * d, : 2 * d]
            S = np.stack(
                [[blocks[i * d:(i + 1) * d, j * d:(j + 1) * d] for j in range(2)] for i in range(2)]
            )
            beta = normalize_beta(rng.gen.integers(0, d, size=(2, 2)), d)
            dr = dress(S, beta)
            closed = (dr[1, 1] @ dr[0, 0] - np.trace(dr[1, 0]) * dr[0, 1]) / d**2
            got = branch_operator_pathcycle(S, beta).matrix
            worst = max(worst, float(np.max(np.abs(closed - got))))
    check("two-step closed form", worst < 1e-12, f"max error {worst:.2e}")

    worst = 0.0
    for d in (2, 3):
        for _ in range(25):
            big = haar_unitary(3 * d, rng)
            S = np.stack(
                [[big[i * d:(i + 1) * d, j * d:(j + 1) * d] for j in range(3)] for i in range(3)]
            )
            beta = normalize_beta(rng.gen.integers(0, d, size=(3, 2)), d)
            b = dress(S, beta)
            terms = (
                b[2, 2] @ b[1, 1] @ b[0, 0]
                - np.trace(b[1, 0]) * (b[2, 2] @ b[0, 1])
                - np.trace(b[2, 1]) * (b[1, 2] @ b[0, 0])
                - np.trace(b[2, 0] @ b[1, 1]) * b[0, 2]
                + b[1, 2] @ b[2, 0] @ b[0, 1]
                + np.trace(b[1, 0]) * np.trace(b[2, 1]) * b[0, 2]
            ) / d**3
            got = branch_operator_pathcycle(S, beta).matrix
            worst = max(worst, float(np.max(np.abs(terms - got))))
    check("three-step closed form (all six wirings)", worst < 1e-12, f"max error {worst:.2e}")

    # cross-route equivalence and completeness
    worst = 0.0
    parseval = 0.0
    for d in (2, 3):
        for n in (2, 3, 4):
            cfgp = DiluteConfig(n=n, d=d, kappa=1.0)
            V = make_instance(cfgp, rng)
            _, sub, _ = post_select(V, cfgp, rng)
            for _ in range(5):
                beta = normalize_beta(rng.gen.integers(0, d, size=(n, 2)), d)
                a = branch_operator_pathcycle(sub, beta).matrix
                bmat = branch_operator_dense(sub, beta).matrix
                worst = max(worst, float(np.max(np.abs(a - bmat))))
            full = amplitude_table_full(sub, 0)
            kern = build_kernel(sub)
            lhs = float(np.sum(np.abs(full) ** 2))
            rhs = float(d) ** (-n) * float(np.linalg.norm(kern) ** 2)
            parseval = max(parseval, abs(lhs - rhs))
    check("path/cycle vs dense contraction", worst < 1e-10, f"max error {worst:.2e}")
    check("readout completeness identity", parseval < 1e-10, f"max defect {parseval:.2e}")

    # kernel vs single-particle minors
    worst = 0.0
    for d in (2, 3):
        cfgp = DiluteConfig(n=2, d=d, kappa=1.0)
        V = make_instance(cfgp, rng)
        record, sub, _ = post_select(V, cfgp, rng)
        kern = build_kernel(sub)
        for row in range(d**2):
            for col in range(d**2):
                out_labels = (row // d, row % d)
                in_labels = (col // d, col % d)
                oracle = kernel_element_oracle(
                    V, cfgp.input_blocks, record.blocks, out_labels, in_labels
                )
                worst = max(worst, abs(kern[row, col] - oracle))
    check("kernel vs Fock-space minors", worst < 1e-10, f"max error {worst:.2e}")

    # fermionant specializations
    w = rng.gen.standard_normal((5, 5)) + 1j * rng.gen.standard_normal((5, 5))
    det_err = abs(fermionant(w, 1.0) - complex(np.linalg.det(w)))
    check("fermionant at weight 1 equals det", det_err < 1e-11, f"error {det_err:.2e}")

    wit = rank_witness(4, 2, 2)
    check(
        "sector witness n=4 t=2",
        wit.rank == 6 and wit.max_offdiag < 1e-12,
        f"rank {wit.rank}, offdiag {wit.max_offdiag:.2e}",
    )

    spot = abs(collision_free_rate_exact(2, 4, 2) - 24.0 / 28.0)
    spot2 = abs(collision_free_rate_asymptotic(0.5, 2) - float(np.exp(-0.5)))
    check("collision-rate closed forms", spot < 1e-12 and spot2 < 1e-12, f"{spot:.2e}/{spot2:.2e}")

    # commuting control is exactly commuting
    sub, beta = commuting_control_instance(4, 2, rng)
    dressed = dress(sub, beta)
    fam = dressed.reshape(-1, 2, 2)
    prod = np.einsum("iab,jbc->ijac", fam, fam)
    comm = float(np.max(np.abs(prod - prod.transpose(1, 0, 2, 3))))
    check("commuting control family", comm == 0.0, f"max commutator {comm:.2e}")

    print(f"selftest: {'PASS' if failures == 0 else f'{failures} FAILURES'}")
    return 0 if failures == 0 else 1


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "selftest":
        return run_selftest(args.seed)
    try:
        cfg = _config_from_args(args, args.command)
        bundle = run_ensemble(cfg)
    except (NcfloError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _print_summary(bundle)
    if bundle.witness_rows and not all(r[-1] for r in bundle.witness_rows):
        return 1
    if bundle.fermionant_rows and not all(r[-1] for r in bundle.fermionant_rows):
        return 1
    return 0


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
