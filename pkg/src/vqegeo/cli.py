"""Command-line entry point: ``vqegeo <subcommand> <input file> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence


from . import io
from .fci import fci_energy, fci_geometry_optimize, ground_state
from .hamiltonian import electronic_structure, qubit_hamiltonian
from .integrals import compute_ao_integrals, format_integrals
from .molecule import InputError, Molecule, parse_molecule
from .scf import OrbitalMatchingError, ScfConvergenceError, run_rhf
from .statevector import Circuit, hf_occupations
from .vqe import OptimizerConfig, Trajectory, adaptive_select, joint_optimize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_SCF = 3
EXIT_NOT_CONVERGED = 4

log = logging.getLogger("vqegeo")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}")
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _optimizer_flags(p: argparse.ArgumentParser):
    d = OptimizerConfig()
    g = p.add_argument_group("optimizer")
    g.add_argument("--step-theta", type=_positive(float), default=d.step_theta,
                   help="gradient-descent step for circuit angles (rad per Ha; default %(default)s)")
    g.add_argument("--step-x", type=_positive(float), default=d.step_x,
                   help="gradient-descent step for coordinates (Bohr per Ha/Bohr; default %(default)s)")
    g.add_argument("--tol-grad-x", type=_positive(float), default=d.grad_tolerance_x,
                   help="stop when max |nuclear gradient| is at most this (Ha/Bohr; default %(default)s)")
    g.add_argument("--max-iter", type=_positive(int), default=d.max_iterations,
                   help="iteration cap (default %(default)s)")
    g.add_argument("--fd-delta", type=_positive(float), default=d.fd_delta,
                   help="central-difference step for dH/dx (Bohr; default %(default)s)")
    g.add_argument("--adaptive-threshold", type=_positive(float), default=d.adaptive_grad_threshold,
                   help="keep gates whose gradient exceeds this (Ha; default %(default)s)")
    g.add_argument("--threads", type=_positive(int), default=d.threads,
                   help="worker threads for gradient evaluation (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vqegeo", description=(
        "Molecular equilibrium geometries from joint optimization of circuit "
        "angles and nuclear coordinates (STO-3G, statevector simulation)."))
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("hf", help="restricted Hartree-Fock summary")
    p.add_argument("input")
    p.add_argument("--dump-integrals", action="store_true", help="print the AO integrals")

    p = sub.add_parser("hamiltonian", help="qubit Hamiltonian as Pauli-sum text")
    p.add_argument("input")
    p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("adaptive", help="adaptive gate selection report")
    p.add_argument("input")
    _optimizer_flags(p)

    p = sub.add_parser("optimize", help="adaptive circuit, then joint angle/geometry optimization")
    p.add_argument("input")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--with-fci", action="store_true",
                   help="compare the final energy with FCI at the final geometry")
    p.add_argument("--hf-preopt", action="store_true",
                   help="relax the geometry at the Hartree-Fock level first")
    p.add_argument("--dump-hamiltonian", action="store_true",
                   help="write hamiltonian.txt at the starting geometry")
    p.add_argument("--dump-integrals", action="store_true",
                   help="write integrals.txt at the starting geometry")
    _optimizer_flags(p)

    p = sub.add_parser("fci", help="exact ground-state energy or FCI geometry optimization")
    p.add_argument("input")
    p.add_argument("--optimize-geometry", action="store_true")
    p.add_argument("--out", default=".", help="output directory for --optimize-geometry")
    _optimizer_flags(p)
    return parser


def _config(args) -> OptimizerConfig:
    return OptimizerConfig(
        step_theta=args.step_theta,
        step_x=args.step_x,
        grad_tolerance_x=args.tol_grad_x,
        max_iterations=args.max_iter,
        fd_delta=args.fd_delta,
        adaptive_grad_threshold=args.adaptive_threshold,
        threads=args.threads,
    )


def _load(path: str) -> Molecule:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_molecule(text)


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {path}: {exc}") from exc
    return out


def _trajectory_exit(traj: Trajectory) -> int:
    if traj.status == "error":
        print(f"error: {traj.message}", file=sys.stderr)
        return EXIT_SCF
    if traj.status != "converged":
        print(f"error: no convergence within {len(traj.records) - 1} iterations", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_hf(args) -> int:
    mol = _load(args.input)
    ints = compute_ao_integrals(mol)
    scf = run_rhf(mol, ints)
    scf.require_converged()
    print(f"converged in {scf.iterations} iterations")
    print(f"hf energy (Ha): {scf.hf_energy:.10f}")
    print("orbital energies (Ha):")
    for k, e in enumerate(scf.orbital_energies):
        print(f"  {k:3d} {e:+.8f} {'occ' if k < scf.n_occupied else 'virt'}")
    if args.dump_integrals:
        sys.stdout.write(format_integrals(ints))
    return EXIT_OK


def cmd_hamiltonian(args) -> int:
    mol = _load(args.input)
    text = qubit_hamiltonian(electronic_structure(mol).active).to_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_adaptive(args) -> int:
    mol = _load(args.input)
    rep = adaptive_select(mol, config=_config(args))
    n_s, n_d = len(rep.singles), len(rep.doubles)
    print(f"candidates: {n_s + n_d} ({n_d} double, {n_s} single)")
    print(f"selected: {rep.n_selected} ({len(rep.selected_doubles)} double, "
          f"{len(rep.selected_singles)} single)")
    print(f"doubles pre-optimization iterations: {rep.doubles_iterations}")
    sys.stdout.write(io.circuit_text(rep.circuit))
    return EXIT_OK


def _hf_preoptimize(mol: Molecule, config: OptimizerConfig) -> Molecule:
    es = electronic_structure(mol)
    empty = Circuit(es.n_qubits, hf_occupations(es.active.n_active_electrons, es.n_qubits))
    traj = joint_optimize(mol, None, empty, config)
    if traj.status == "error":
        raise ScfConvergenceError(traj.message)
    log.info("hf pre-optimization: %s after %d iterations", traj.status, traj.final.iteration)
    return traj.final_molecule


def cmd_optimize(args) -> int:
    mol = _load(args.input)
    out = _out_dir(args.out)
    config = _config(args)
    if args.dump_integrals:
        (out / "integrals.txt").write_text(format_integrals(compute_ao_integrals(mol)))
    if args.dump_hamiltonian:
        es = electronic_structure(mol)
        (out / "hamiltonian.txt").write_text(qubit_hamiltonian(es.active).to_text())
    if args.hf_preopt:
        mol = _hf_preoptimize(mol, config)
    rep = adaptive_select(mol, config=config)
    log.info("adaptive circuit: %d gates", rep.n_selected)
    traj = joint_optimize(mol, None, rep.circuit, config, callback=_progress)
    _write_outputs(out, traj, with_fci=args.with_fci)
    return _trajectory_exit(traj)


def _progress(rec):
    log.info("iter %4d  E = %.10f  max|gx| = %.3e", rec.iteration, rec.energy, rec.max_grad_x)


def _write_outputs(out: Path, traj: Trajectory, with_fci: bool):
    if not traj.records:
        return
    (out / "trajectory.csv").write_text(io.trajectory_csv(traj))
    (out / "final.xyz").write_text(io.xyz_text(traj.final_molecule, f"E = {traj.final.energy:.10f} Ha"))
    if traj.circuit is not None:
        (out / "circuit.txt").write_text(io.circuit_text(traj.circuit, traj.final.theta))
    e_fci = fci_energy(traj.molecule, traj.final.x) if with_fci else None
    (out / "summary.txt").write_text(io.summary_text(traj, e_fci))


def cmd_fci(args) -> int:
    mol = _load(args.input)
    if not args.optimize_geometry:
        es = electronic_structure(mol)
        energy, _ = ground_state(qubit_hamiltonian(es.active), es.active.n_active_electrons)
        print(f"hf energy (Ha): {es.scf.hf_energy:.10f}")
        print(f"fci energy (Ha): {energy:.10f}")
        return EXIT_OK
    out = _out_dir(args.out)
    traj = fci_geometry_optimize(mol, None, _config(args), callback=_progress)
    _write_outputs(out, traj, with_fci=False)
    if traj.records:
        sys.stdout.write(io.summary_text(traj))
    return _trajectory_exit(traj)


COMMANDS = {
    "hf": cmd_hf,
    "hamiltonian": cmd_hamiltonian,
    "adaptive": cmd_adaptive,
    "optimize": cmd_optimize,
    "fci": cmd_fci,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"vqegeo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ScfConvergenceError, OrbitalMatchingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCF


if __name__ == "__main__":
    sys.exit(main())
