"""Command-line front end.

Every command writes one run report (schema ``v1``) as JSON or CSV and exits
with status 0 iff no reported check failed.  Input errors exit with status 2.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import channel_ops as co
from . import circuit_model as cm
from . import classical_problems as cp
from . import clique_engine as ce
from . import lemmas
from . import reductions as rd
from .config import set_validation_tolerance, settings
from .tensor_core import DensityOperator, decode_matrix, decode_vector, encode_matrix

SCHEMA = "v1"


class InputError(Exception):
    pass


class Report:
    """Accumulates results and checks for one command run."""

    def __init__(self, command: str, seed: int):
        self.command = command
        self.seed = seed
        self.inputs: dict[str, str] = {}
        self.results: list[dict] = []
        self.outputs: list[str] = []
        self.start = time.perf_counter()

    def add_input(self, path) -> bytes:
        data = Path(path).read_bytes()
        self.inputs[str(path)] = hashlib.sha256(data).hexdigest()
        return data

    def value(self, name: str, value, provenance: str, tol: float | None = None, **extra):
        self.results.append({"name": name, "value": value, "tol": tol, "provenance": provenance, **extra})

    def check(self, c: lemmas.Check, prefix: str = ""):
        d = c.to_dict()
        d["name"] = prefix + d.pop("name")
        d["value"] = d.pop("observed")
        self.results.append(d)

    @property
    def violations(self) -> int:
        return sum(1 for r in self.results if r.get("passed") is False)

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "command": self.command, "inputs": dict(sorted(self.inputs.items())),
                "seed": self.seed, "tolerances": settings.as_dict(),
                "results": sorted(self.results, key=lambda r: r["name"]), "outputs": sorted(self.outputs),
                "violations": self.violations, "wall_time": round(time.perf_counter() - self.start, 6)}


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return str(x)


def render(report: Report, fmt: str) -> str:
    doc = report.to_dict()
    if fmt == "json":
        return json.dumps(doc, indent=1, default=_jsonable) + "\n"
    buf = io.StringIO()
    cols = ["name", "value", "bound", "relation", "tol", "provenance", "passed"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in doc["results"]:
        row = []
        for c in cols:
            v = r.get(c)
            row.append(json.dumps(v, default=_jsonable) if isinstance(v, (list, dict, tuple)) else v)
        w.writerow(row)
    return buf.getvalue()


# input parsing --------------------------------------------------------------

def _read_json(report: Report, path) -> dict:
    text = report.add_input(path).decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _parse_state(spec: str | None, n_qubits: int, report: Report) -> np.ndarray:
    d = 2 ** n_qubits
    if spec is None:
        spec = "0" * n_qubits
    if spec == "mixed":
        return np.eye(d, dtype=complex) / d
    if set(spec) <= {"0", "1"} and spec:
        if len(spec) != n_qubits:
            raise InputError(f"basis state {spec!r} has {len(spec)} bits, circuit has {n_qubits} inputs")
        rho = np.zeros((d, d), dtype=complex)
        rho[int(spec, 2), int(spec, 2)] = 1.0
        return rho
    doc = _read_json(report, spec)
    if "amplitudes" in doc:
        v = decode_vector(doc["amplitudes"])
        rho = np.outer(v, v.conj())
    elif "matrix" in doc:
        rho = decode_matrix(doc["matrix"])
    else:
        raise InputError(f"{spec}: state file needs 'amplitudes' or 'matrix'")
    if rho.shape != (d, d):
        raise InputError(f"{spec}: state has dimension {rho.shape[0]}, circuit expects {d}")
    return DensityOperator(rho).matrix


def _load_channel(report: Report, path):
    """Circuit, channel or Hamiltonian file -> (channel, promise or None, label)."""
    doc = _read_json(report, path)
    if isinstance(doc, dict) and "terms" in doc:
        inst = rd.local_ham_to_clique(rd.HamiltonianInstance.from_dict(doc))
        return inst.channel, inst.promise, "hamiltonian"
    if isinstance(doc, dict) and "gates" in doc and "in" in doc:
        return co.CircuitChannel(cm.circuit_from_dict(doc)), None, "circuit"
    if isinstance(doc, dict) and "type" in doc:
        return co.channel_from_dict(doc), None, "channel"
    raise InputError(f"{path}: not a circuit, channel or Hamiltonian document")


def _write(report: Report, path, text: str):
    Path(path).write_text(text)
    report.outputs.append(str(path))


# commands -------------------------------------------------------------------

def cmd_simulate(args, report: Report):
    circ = cm.circuit_from_dict(_read_json(report, args.circuit))
    rho = _parse_state(args.input, circ.in_count, report)
    out = cm.evaluate(circ, rho)
    m = out.matrix
    report.value("output.matrix", encode_matrix(m), "simulated", settings.eig)
    report.value("output.trace", float(np.real(np.trace(m))), "simulated", settings.trace)
    report.value("output.purity", out.purity(), "simulated", settings.eig)
    for q in range(circ.out_count):
        report.value(f"output.qubit{q}.p0", cm.qubit_zero_probability(m, q), "simulated", settings.eig)
    lam = np.linalg.eigvalsh(m)
    report.results.append({"name": "output.valid_density", "value": float(lam[0]), "bound": -settings.psd,
                           "relation": ">=", "tol": 0.0, "provenance": "simulated",
                           "passed": bool(lam[0] >= -settings.psd)})


def cmd_clique(args, report: Report):
    channel, promise, label = _load_channel(report, args.channel)
    fn = ce.max_clique_value if args.kind == "clique" else ce.min_is_value
    cert = fn(channel, args.k, restarts=args.restarts, iterations=args.iterations, seed=args.seed,
              threads=args.threads)
    try:
        cert.revalidate(channel)
        ok = True
    except ce.CertificateError:
        ok = False
    report.value("certificate", cert.to_dict(), "optimized")
    report.value("value", cert.value, "optimized", settings.eig)
    report.results.append({"name": "certificate.revalidates", "value": bool(ok), "bound": True, "relation": "==",
                           "tol": 0, "provenance": "simulated", "passed": bool(ok)})
    if promise is not None:
        report.value("promise", promise.to_dict(), "closed-form")
    if args.certificate:
        _write(report, args.certificate, json.dumps(cert.to_dict(), indent=1) + "\n")


def _reduce_np(args, report):
    if args.cnf:
        cnf = cp.parse_dimacs(report.add_input(args.cnf).decode())
        v, x = cp.cnf_verifier(cnf), cp.cnf_instance_bits(cnf)
        sat = cp.brute_force_sat(cnf)[0]
        report.value("sat", sat, "exact")
    elif args.verifier:
        v = cp.classical_from_dict(_read_json(report, args.verifier))
        x, sat = args.instance or "", None
    else:
        raise InputError("np reductions need --cnf or --verifier")
    if args.kind == "np-clique":
        out = cp.np_reduce_clique(v, x)
        decision = cp.has_k_clique(out, 2)
    else:
        out = cp.np_reduce_is(v, x)
        decision = cp.has_k_is(out, 2)
    report.value("decision", bool(decision[0]), "exact", witness=decision[1])
    report.value("size", out.size, "exact")
    if sat is not None:
        report.results.append({"name": "decision_matches_sat", "value": bool(decision[0]), "bound": sat,
                               "relation": "==", "tol": 0, "provenance": "exact",
                               "passed": bool(decision[0]) == sat})
    return out


def _reduce_ma(args, report):
    if not args.verifier:
        raise InputError("ma reductions need --verifier")
    v = cp.as_probabilistic(cp.classical_from_dict(_read_json(report, args.verifier)))
    x = args.instance or ""
    if args.kind == "ma-clique":
        out = cp.ma_reduce_clique(v, x)
        val, pair = cp.best_pair(out, "clique")
    else:
        out = cp.ma_reduce_is(v, x)
        val, pair = cp.best_pair(out, "is")
    report.value("best_pair_collision", str(val), "exact", pair=list(pair))
    return out


def _reduce_qma(args, report):
    if not args.verifier:
        raise InputError("qma reductions need --verifier")
    verifier = cm.circuit_from_dict(_read_json(report, args.verifier))
    k = 2 if args.kind == "qma2" else args.k
    inst = rd.qmak_hard_instance(verifier, k, p=args.p, eta=args.eta)
    report.value("promise", inst.promise.to_dict(), "closed-form")
    report.value("circuit.size", inst.circuit.size, "exact")
    report.value("circuit.width", inst.circuit.peak_width, "exact")
    if args.optimize:
        cert = ce.max_clique_value(inst.channel, 2, restarts=args.restarts, iterations=args.iterations,
                                   seed=args.seed, threads=args.threads)
        report.value("optimized_value", cert.value, "optimized", settings.eig)
    return inst.circuit


def _reduce_localham(args, report):
    if not args.hamiltonian:
        raise InputError("qma-localham needs --hamiltonian")
    hm = rd.HamiltonianInstance.from_dict(_read_json(report, args.hamiltonian))
    inst = rd.local_ham_to_clique(hm)
    e0 = hm.ground_energy()
    report.value("promise", inst.promise.to_dict(), "closed-form")
    report.value("ground_energy", e0, "exact", settings.eig)
    report.value("ground_pair_overlap", rd.local_ham_overlap(e0, hm.t), "closed-form", settings.eig)
    return inst.channel


def _reduce_k_to_2(args, report):
    if args.verifier:
        f = cp.classical_from_dict(_read_json(report, args.verifier))
        k = args.k
        if isinstance(f, cp.ProbabilisticCircuit):
            if args.mode == "is":
                # values are IS strengths alpha = 1 - collision; the check is on the
                # witness pair (x, (x_1, ..., x_1)), which realises the map exactly
                out = cp.k_to_2_is_prob(f, k)
                coll, xs = cp.best_tuple(f, k, "is")
                before = 1 - coll
                after = 1 - cp.collision_prob(out, "".join(xs), xs[0] * k)
                mapped = cp.k_to_2_is_map(before, k)
                report.value("best_pair_value", str(1 - cp.best_pair(out, "is")[0]), "exact")
            else:
                out = cp.k_to_2_clique_prob(f, k)
                before = cp.best_tuple(f, k, "clique")[0]
                after = cp.best_pair(out, "clique")[0]
                mapped = cp.k_to_2_clique_map(before, k)
            report.value("k_value", str(before), "exact")
            report.value("pair_value", str(after), "exact")
            report.results.append({"name": "value_map", "value": str(after), "bound": str(mapped), "relation": "==",
                                   "tol": 0, "provenance": "exact", "passed": after == mapped})
        else:
            has = cp.has_k_is if args.mode == "is" else cp.has_k_clique
            out = (cp.k_to_2_is_det if args.mode == "is" else cp.k_to_2_clique_det)(f, k)
            a, b = has(f, k)[0], has(out, 2)[0]
            report.results.append({"name": "decision_preserved", "value": bool(b), "bound": bool(a),
                                   "relation": "==", "tol": 0, "provenance": "exact", "passed": a == b})
        return out
    if not args.channel:
        raise InputError("k-to-2 needs --verifier (classical) or --channel (quantum)")
    channel, _, _ = _load_channel(report, args.channel)
    w = args.weights or (1 / 3, 1 / 3, 1 / 3)
    inst = rd.q_k_to_2(channel, args.k, *w)
    report.value("alpha_prime", inst.alpha_prime(args.alpha), "closed-form", settings.eig, alpha=args.alpha)
    report.value("beta_prime", inst.beta_prime(args.alpha), "closed-form", settings.eig, beta=args.alpha)
    return inst.channel


def _reduce_alt(args, report):
    if not args.unitary:
        raise InputError("alt-qma2 needs --unitary")
    doc = _read_json(report, args.unitary)
    v = decode_matrix(doc["matrix"] if isinstance(doc, dict) else doc)
    inst = rd.alt_qma2_instance(v, args.m, args.workspace, args.c, args.s)
    report.value("promise", inst.promise.to_dict(), "closed-form")
    return inst.channel


REDUCERS = {"np-clique": _reduce_np, "np-is": _reduce_np, "ma-clique": _reduce_ma, "ma-is": _reduce_ma,
            "qma2": _reduce_qma, "qmak": _reduce_qma, "qma-localham": _reduce_localham,
            "k-to-2": _reduce_k_to_2, "alt-qma2": _reduce_alt}


def cmd_reduce(args, report: Report):
    out = REDUCERS[args.kind](args, report)
    if args.output:
        if isinstance(out, cm.Circuit):
            text = out.to_json() + "\n"
        elif isinstance(out, (cp.ClassicalCircuit, cp.ProbabilisticCircuit)):
            text = json.dumps(out.to_dict(), indent=1) + "\n"
        else:
            text = json.dumps(co.channel_to_dict(out)) + "\n"
        _write(report, args.output, text)


def cmd_verify_lemmas(args, report: Report):
    names = args.suite or sorted(lemmas.SUITES)
    for name in names:
        for c in lemmas.run_suite(name, args.samples, args.seed):
            report.check(c, prefix=f"{name}: ")


# parser ---------------------------------------------------------------------

def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # the subcommand copies use SUPPRESS so they do not reset flags given before the subcommand
    def d(value):
        return argparse.SUPPRESS if suppress else value

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=d(0))
    common.add_argument("--tol", type=float, default=d(None), help="validation tolerance for states and unitaries")
    common.add_argument("--max-qubits", type=int, default=d(None))
    common.add_argument("--format", choices=["json", "csv"], default=d("json"))
    common.add_argument("--out", default=d(None), help="write the report here instead of stdout")
    common.add_argument("--threads", type=int, default=d(1))
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qclique", description="Channel clique tools.",
                                     parents=[_global_flags(False)])
    common = _global_flags(True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="evaluate a circuit on an input state")
    p.add_argument("circuit")
    p.add_argument("--input", default=None, help="bitstring, 'mixed', or a JSON state file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("clique", parents=[common], help="search for a clique or independent set")
    p.add_argument("channel", help="circuit, channel or Hamiltonian JSON file")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--kind", choices=["clique", "is"], default="clique")
    p.add_argument("--restarts", type=int, default=ce.DEFAULT_RESTARTS)
    p.add_argument("--iterations", type=int, default=ce.DEFAULT_ITERATIONS)
    p.add_argument("--certificate", default=None, help="write the certificate JSON here")
    p.set_defaults(func=cmd_clique)

    p = sub.add_parser("reduce", parents=[common], help="build a reduction instance")
    p.add_argument("kind", choices=sorted(REDUCERS))
    p.add_argument("--cnf", help="DIMACS file (np-clique, np-is)")
    p.add_argument("--verifier", help="verifier circuit: classical JSON or quantum circuit JSON")
    p.add_argument("--instance", help="instance bits for a classical verifier")
    p.add_argument("--hamiltonian", help="Hamiltonian JSON (qma-localham)")
    p.add_argument("--channel", help="channel for the quantum k-to-2 reduction")
    p.add_argument("--unitary", help="verifier unitary JSON (alt-qma2)")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--mode", choices=["clique", "is"], default="clique")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--weights", type=float, nargs=3, default=None)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--workspace", type=int, default=1)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--restarts", type=int, default=ce.DEFAULT_RESTARTS)
    p.add_argument("--iterations", type=int, default=ce.DEFAULT_ITERATIONS)
    p.add_argument("--output", "-o", default=None, help="write the constructed object here")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify-lemmas", parents=[common], help="run sampled lemma checks")
    p.add_argument("--suite", action="append", choices=sorted(lemmas.SUITES))
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_verify_lemmas)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    saved = settings.as_dict()
    try:
        if args.tol is not None:
            set_validation_tolerance(args.tol)
        if args.max_qubits is not None:
            settings.max_qubits = args.max_qubits
        report = Report(args.command, args.seed)
        try:
            args.func(args, report)
        except (InputError, ValueError, KeyError, OSError) as exc:
            print(f"qclique {args.command}: error: {exc}", file=sys.stderr)
            return 2
        text = render(report, args.format)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return 0 if report.violations == 0 else 1
    finally:
        for key, val in saved.items():
            setattr(settings, key, val)


if __name__ == "__main__":
    sys.exit(main())
