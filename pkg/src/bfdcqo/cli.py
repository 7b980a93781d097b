"""Command-line entry point: build, run, oracle, postprocess, report, lower.

Exit codes: 0 success, 2 invalid input, 3 capacity exceeded, 4 internal
invariant violation.  Every JSON output is written with sorted keys and a
fixed layout so identical inputs and seeds give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import click

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .builders.maxsat import build_max4sat, gen_random_4sat, parse_dimacs
from .builders.protein import ContactEnergyTable, PeptideSequence, ProteinEncoding, build_protein, decode_fold
from .builders.spinglass import SkInstanceConfig, gen_sk
from .cdsynth import CdProgram, PruningPolicy, Schedule, synthesize
from .errors import BfdcqoError, CapacityError, InvalidInputError
from .hubo import HuboHamiltonian, brute_force_spectrum, ground_states
from .optimizer import CvarConfig, merged_samples, optimize
from .postprocess import PpConfig, local_search
from .simulator import DEFAULT_MAX_QUBITS, SampleSet
from .transpile import cost_report, lower, zz_count

EXIT_INVALID, EXIT_CAPACITY, EXIT_INTERNAL = 2, 3, 4
OUTPUT_ROOT_ENV = "BFDCQO_OUTPUT_ROOT"
MAX_LISTED_GROUND_STATES = 1000


def dump_json(data: Any, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")


def load_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InvalidInputError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from None


def pauli_term_count(h: HuboHamiltonian) -> int:
    """Pauli strings in ``h`` including the identity when the offset is nonzero."""
    return h.num_terms + (1 if h.offset != 0 else 0)


def meta_path(instance: Path) -> Path:
    name = instance.name
    stem = name[: -len(".hubo.json")] if name.endswith(".hubo.json") else instance.stem
    return instance.with_name(stem + ".meta.json")


def energy_histogram_csv(samples: SampleSet, h: HuboHamiltonian) -> str:
    hist: dict[float, int] = {}
    for b, e in samples.energies(h).items():
        key = round(e, 9) + 0.0
        hist[key] = hist.get(key, 0) + samples.counts[b]
    rows = ["energy,count"] + [f"{e!r},{c}" for e, c in sorted(hist.items())]
    return "\n".join(rows) + "\n"


# -- instance building ----------------------------------------------------------
def build_instance(family: str, params: dict) -> tuple[HuboHamiltonian, dict, dict[str, str]]:
    """Returns (hamiltonian, metadata, extra files by suffix)."""
    extra: dict[str, str] = {}
    if family == "protein":
        seq = PeptideSequence(params["sequence"])
        table = ContactEnergyTable.from_csv(Path(params["table"])) if params.get("table") else ContactEnergyTable.default()
        enc = ProteinEncoding(len(seq), float(params.get("lambda_gc", 10.0)), float(params.get("lambda_in", 10.0)))
        inst = build_protein(seq, table, enc)
        meta = inst.metadata()
        meta["cutoff_family"] = f"protein:{seq.residues}"
        return inst.hamiltonian, meta, extra
    if family == "max4sat":
        if params.get("cnf"):
            formula = parse_dimacs(Path(params["cnf"]))
        else:
            if params.get("n") is None:
                raise InvalidInputError("max4sat needs --n or --cnf")
            formula = gen_random_4sat(int(params["n"]), int(params.get("seed", 0)))
        extra[".cnf"] = formula.to_dimacs()
        meta = {"family": "max4sat", "num_vars": formula.num_vars, "num_clauses": formula.num_clauses}
        meta["cutoff_family"] = "max4sat"
        return build_max4sat(formula), meta, extra
    if family == "sk":
        if params.get("n") is None:
            raise InvalidInputError("sk needs --n")
        keys = ("field_mean", "field_var", "coupling_mean", "coupling_var")
        cfg = SkInstanceConfig(
            int(params["n"]), **{k: float(params[k]) for k in keys if params.get(k) is not None}, seed=int(params.get("seed", 0))
        )
        return gen_sk(cfg), {"family": "sk", "config": cfg.to_dict(), "cutoff_family": "sk"}, extra
    raise InvalidInputError(f"unknown problem family {family!r}")


def default_name(family: str, params: dict) -> str:
    if family == "protein":
        return f"protein-{str(params['sequence']).upper()}"
    if family == "max4sat" and params.get("cnf"):
        return f"max4sat-{Path(params['cnf']).stem}"
    return f"{family}-{params.get('n')}-s{params.get('seed', 0)}"


def write_instance(out_dir: Path, name: str, h: HuboHamiltonian, meta: dict, extra: dict[str, str]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.hubo.json"
    dump_json(h.to_dict(), path)
    dump_json(meta, out_dir / f"{name}.meta.json")
    for suffix, text in extra.items():
        (out_dir / f"{name}{suffix}").write_text(text)
    return path


# -- manifests ------------------------------------------------------------------
@dataclass
class RunManifest:
    base_dir: Path
    instance: str | None = None
    problem: dict = field(default_factory=dict)
    output: str = "run"
    seed: int = 0
    iterations: int = 10
    schedule: dict = field(default_factory=dict)
    pruning: dict = field(default_factory=dict)
    cvar: dict = field(default_factory=dict)
    postprocess: dict = field(default_factory=dict)
    oracle: bool = False
    max_qubits: int = DEFAULT_MAX_QUBITS

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        text = path.read_text()
        try:
            data = tomllib.loads(text) if path.suffix == ".toml" else json.loads(text)
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot parse manifest {path}: {exc}") from None
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown manifest keys: {sorted(unknown)}")
        m = cls(base_dir=path.parent, **data)
        if (m.instance is None) == (not m.problem):
            raise InvalidInputError("manifest needs exactly one of 'instance' or [problem]")
        if m.iterations < 1:
            raise InvalidInputError("iterations must be at least 1")
        return m

    def resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q

    def output_dir(self) -> Path:
        out = Path(self.output)
        if out.is_absolute():
            return out
        root = os.environ.get(OUTPUT_ROOT_ENV)
        return (Path(root) if root else self.base_dir) / out

    def load_problem(self) -> tuple[HuboHamiltonian, dict]:
        if self.instance is not None:
            path = self.resolve(self.instance)
            h = HuboHamiltonian.from_dict(load_json(path))
            mp = meta_path(path)
            return h, (load_json(mp) if mp.exists() else {})
        params = dict(self.problem)
        family = params.pop("family", None)
        for key in ("table", "cnf"):
            if params.get(key):
                params[key] = str(self.resolve(params[key]))
        h, meta, _ = build_instance(str(family), params)
        return h, meta

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "problem": self.problem,
            "seed": self.seed,
            "iterations": self.iterations,
            "schedule": self.schedule,
            "pruning": self.pruning,
            "cvar": self.cvar,
            "postprocess": self.postprocess,
            "oracle": self.oracle,
        }


def pruning_from(cfg: dict, meta: dict) -> PruningPolicy:
    mode = cfg.get("mode", "soft")
    if "theta_cutoff" in cfg:
        return PruningPolicy(float(cfg["theta_cutoff"]), mode)
    family = cfg.get("family") or meta.get("cutoff_family") or meta.get("family")
    if mode != "none" and family is None:
        raise InvalidInputError("pruning needs theta_cutoff or a known problem family")
    try:
        return PruningPolicy.for_family(family or "", mode)
    except KeyError:
        raise InvalidInputError(f"no default cutoffs for family {family!r}") from None


def oracle_summary(h: HuboHamiltonian) -> dict:
    e0, states = ground_states(h)
    return {
        "ground_energy": e0,
        "degeneracy": len(states),
        "ground_states": states[:MAX_LISTED_GROUND_STATES],
    }


def execute_run(manifest: RunManifest) -> dict:
    """Run the loop described by ``manifest`` and write every output file."""
    h, meta = manifest.load_problem()
    if h.num_qubits > manifest.max_qubits:
        raise CapacityError(
            f"{h.num_qubits} qubits exceeds the {manifest.max_qubits}-qubit statevector cap"
        )
    sched = Schedule(**manifest.schedule)
    prune = pruning_from(manifest.pruning, meta)
    cv = dict(manifest.cvar)
    if "shots" in cv:
        cv["n_shots"] = cv.pop("shots")
    cfg = CvarConfig(**cv)
    out = manifest.output_dir()
    records = optimize(h, sched, prune, cfg, manifest.iterations, manifest.seed, max_qubits=manifest.max_qubits)
    for r in records:
        (out / "histograms").mkdir(parents=True, exist_ok=True)
        (out / "histograms" / f"iter_{r.iteration:02d}.csv").write_text(energy_histogram_csv(r.samples, h))
        program = synthesize(h, r.bias, sched, prune)
        dump_json(program.to_dict(), out / "programs" / f"iter_{r.iteration:02d}.json")
    merged = merged_samples(records)
    dump_json(merged.to_dict(), out / "samples.json")
    final = records[-1]
    summary: dict[str, Any] = {
        "family": meta.get("family"),
        "num_qubits": h.num_qubits,
        "pauli_terms": pauli_term_count(h),
        "pruning_mode": prune.mode,
        "theta_cutoff": prune.theta_cutoff,
        "zz_gates": list(cost_report([r.zz_count for r in records])),
        "best_energy": final.global_best_energy,
        "best_bitstring": final.global_best_bitstring,
    }
    pp_cfg = dict(manifest.postprocess)
    if pp_cfg.pop("enabled", True):
        pp = local_search(merged, h, PpConfig(**pp_cfg), manifest.seed)
        if pp.energy > final.global_best_energy + 1e-12:
            raise AssertionError("post-processing returned an energy above the best sample")
        summary["postprocess"] = pp.to_dict()
        summary["best_energy_pp"] = pp.energy
    if manifest.oracle:
        orc = oracle_summary(h)
        dump_json(orc, out / "oracle.json")
        summary["optimal_energy"] = orc["ground_energy"]
    if meta.get("family") == "protein":
        enc = ProteinEncoding.from_dict(meta["encoding"])
        best = summary.get("postprocess", {}).get("bitstring", summary["best_bitstring"])
        fold = decode_fold(best, enc)
        summary["fold"] = {"turns": list(fold.turns), "valid": fold.valid, "contacts": [list(c) for c in fold.contacts]}
    result = {
        "manifest": manifest.to_dict(),
        "schedule": sched.to_dict(),
        "cvar": cfg.to_dict(),
        "iterations": [r.to_dict() for r in records],
        "summary": summary,
    }
    dump_json(result, out / "result.json")
    return result


# -- reporting ------------------------------------------------------------------
REPORT_COLUMNS = ("run", "family", "qubits", "pauli_terms", "pruning", "zz_min", "zz_max", "best", "best_pp", "optimal", "hit")


def _fmt(v: Any, precise: bool = False) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, float):
        return repr(v) if precise else f"{v:.6g}"
    return str(v)


def report_row(run_dir: Path) -> dict:
    result = load_json(run_dir / "result.json")
    s = result["summary"]
    programs = sorted((run_dir / "programs").glob("iter_*.json"))
    if programs:
        zz = cost_report([zz_count(CdProgram.from_dict(load_json(p))) for p in programs])
    else:
        zz = tuple(s["zz_gates"])
    optimal = s.get("optimal_energy")
    if optimal is None and (run_dir / "oracle.json").exists():
        optimal = load_json(run_dir / "oracle.json")["ground_energy"]
    best_final = s.get("best_energy_pp", s["best_energy"])
    hit = None if optimal is None else abs(best_final - optimal) <= 1e-9 * max(1.0, abs(optimal))
    return {
        "run": run_dir.name,
        "family": s.get("family"),
        "qubits": s["num_qubits"],
        "pauli_terms": s["pauli_terms"],
        "pruning": s["pruning_mode"],
        "zz_min": zz[0],
        "zz_max": zz[1],
        "best": s["best_energy"],
        "best_pp": s.get("best_energy_pp"),
        "optimal": optimal,
        "hit": hit,
    }


def render_table(rows: list[dict]) -> str:
    cells = [[_fmt(r[c]) + ("*" if c == "best_pp" and r["hit"] else "") for c in REPORT_COLUMNS] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(REPORT_COLUMNS)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(REPORT_COLUMNS, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v, precise=True) for k, v in r.items()})
    return buf.getvalue()


# -- click wiring ---------------------------------------------------------------
def _output_root(out: str | None) -> Path:
    if out:
        return Path(out)
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


@click.group()
@click.version_option(package_name="artifact")
def cli() -> None:
    """Bias-field counterdiabatic optimization of HUBO problems (noiseless simulation)."""


@cli.command("build")
@click.argument("family", type=click.Choice(["protein", "max4sat", "sk"]))
@click.argument("sequence", required=False)
@click.option("--n", "n", type=int, help="Number of variables or spins.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cnf", type=click.Path(exists=True, dir_okay=False), help="DIMACS file instead of a random formula.")
@click.option("--table", type=click.Path(exists=True, dir_okay=False), help="Contact-energy CSV (res1,res2,energy).")
@click.option("--lambda-gc", type=float, default=10.0, show_default=True)
@click.option("--lambda-in", type=float, default=10.0, show_default=True)
@click.option("--field-mean", type=float)
@click.option("--field-var", type=float)
@click.option("--coupling-mean", type=float)
@click.option("--coupling-var", type=float)
@click.option("--out", type=click.Path(file_okay=False), help="Output directory (default: $BFDCQO_OUTPUT_ROOT or .).")
@click.option("--name", help="File stem for the written instance.")
def cmd_build(family, sequence, out, name, **params):
    """Build a problem instance and write <name>.hubo.json plus <name>.meta.json."""
    if family == "protein":
        if not sequence:
            raise InvalidInputError("protein needs a SEQUENCE argument")
        params["sequence"] = sequence
    h, meta, extra = build_instance(family, params)
    path = write_instance(_output_root(out), name or default_name(family, params), h, meta, extra)
    click.echo(f"instance: {path}")
    click.echo(f"qubits: {h.num_qubits}")
    click.echo(f"pauli_terms: {pauli_term_count(h)}")
    click.echo(f"locality: {h.locality}")
    if family == "max4sat":
        click.echo(f"clauses: {meta['num_clauses']}")
    if family == "protein":
        enc = meta["encoding"]
        click.echo(f"config_qubits: {enc['num_config_qubits']}")
        click.echo(f"interaction_qubits: {enc['num_interaction_qubits']}")


@cli.command("run")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
def cmd_run(manifest):
    """Execute a run manifest (TOML or JSON)."""
    m = RunManifest.load(Path(manifest))
    result = execute_run(m)
    s = result["summary"]
    click.echo(f"output: {m.output_dir()}")
    click.echo(f"best_energy: {s['best_energy']!r} ({s['best_bitstring']})")
    if "best_energy_pp" in s:
        click.echo(f"best_energy_pp: {s['best_energy_pp']!r}")
    if "optimal_energy" in s:
        found = abs(s.get("best_energy_pp", s["best_energy"]) - s["optimal_energy"]) <= 1e-9 * max(1.0, abs(s["optimal_energy"]))
        click.echo(f"optimal_energy: {s['optimal_energy']!r}")
        click.echo(f"optimal found = {str(found).lower()}")
    click.echo(f"zz_gates: {tuple(s['zz_gates'])}")


@cli.command("oracle")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), help="Directory for oracle.json and spectrum.csv.")
def cmd_oracle(instance, out):
    """Exhaustive ground energy, ground states and spectrum histogram."""
    h = HuboHamiltonian.from_dict(load_json(Path(instance)))
    spectrum = brute_force_spectrum(h)
    summary = oracle_summary(h)
    out_dir = Path(out) if out else Path(instance).parent
    dump_json(summary, out_dir / "oracle.json")
    (out_dir / "spectrum.csv").write_text(spectrum.to_csv())
    click.echo(f"ground_energy: {summary['ground_energy']!r}")
    click.echo(f"degeneracy: {summary['degeneracy']}")
    click.echo(f"levels: {len(spectrum.levels)}")


@cli.command("postprocess")
@click.argument("samples", type=click.Path(exists=True, dir_okay=False))
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--elite-fraction", type=float, default=0.05, show_default=True)
@click.option("--max-sweeps", type=int, default=3, show_default=True)
@click.option("--strict", is_flag=True, help="Reject equal-energy moves.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Write the result JSON here.")
def cmd_postprocess(samples, instance, elite_fraction, max_sweeps, strict, seed, out):
    """Zero-temperature local search over the best samples of a SampleSet JSON."""
    h = HuboHamiltonian.from_dict(load_json(Path(instance)))
    ss = SampleSet.from_dict(load_json(Path(samples)))
    res = local_search(ss, h, PpConfig(elite_fraction, max_sweeps, not strict), seed)
    if out:
        dump_json(res.to_dict(), Path(out))
    click.echo(f"input_best_energy: {res.input_best_energy!r}")
    click.echo(f"energy: {res.energy!r} ({res.bitstring})")
    click.echo(f"locally_optimal: {str(res.converged).lower()}")


@cli.command("report")
@click.argument("run_dirs", nargs=-1, type=click.Path(exists=True, file_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Also write the table as CSV.")
def cmd_report(run_dirs, csv_path):
    """Consolidate run directories into one results table (* marks optimal hits)."""
    if not run_dirs:
        raise click.UsageError("give at least one run directory")
    rows = [report_row(Path(d)) for d in run_dirs]
    click.echo(render_table(rows), nl=False)
    if csv_path:
        Path(csv_path).write_text(render_csv(rows))


@cli.command("lower")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Write the native gate list JSON here.")
def cmd_lower(program, out):
    """Lower a stored program JSON to native trapped-ion gates."""
    circ = lower(CdProgram.from_dict(load_json(Path(program))))
    if out:
        dump_json(circ.to_list(), Path(out))
    for kind, c in circ.counts().items():
        click.echo(f"{kind}: {c}")
    click.echo(f"two_qubit_depth: {circ.two_qubit_depth}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="bfdcqo", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return EXIT_INVALID
    except CapacityError as exc:
        click.echo(f"capacity error: {exc}", err=True)
        return EXIT_CAPACITY
    except (InvalidInputError, ValueError, KeyError, TypeError) as exc:
        click.echo(f"invalid input: {exc}", err=True)
        return EXIT_INVALID
    except (BfdcqoError, AssertionError, FloatingPointError) as exc:
        click.echo(f"internal error: {exc}", err=True)
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
