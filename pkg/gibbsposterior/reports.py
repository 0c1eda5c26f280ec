"""
Report files for gibbsposterior runs
Headered CSV dumps, trajectory/emission files, the JSON summary and the text display
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError
from .posterior import ConcentrationReport, PosteriorGrid, RateTable
from .simulate import EmissionSequence, Trajectory
from .thermo import GibbsAudit

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def fmt(value: Any) -> str:
    """Shortest round-trip text for floats; everything else via str"""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def header_line(fields: Mapping[str, Any]) -> str:
    """'# key=value key=value' provenance line"""
    return "# " + " ".join(f"{key}={fmt(value)}" for key, value in fields.items())


def parse_header(line: str) -> Dict[str, str]:
    if not line.startswith("#"):
        raise ConfigError(f"missing '#' provenance header, got {line[:40]!r}")
    fields = {}
    for token in line[1:].split():
        key, _, value = token.partition("=")
        fields[key] = value
    return fields


def write_table(
    path: PathLike, header: Mapping[str, Any], columns: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    """Write a CSV file preceded by its provenance header line"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        handle.write(header_line(header) + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    logger.debug("wrote %s", path)
    return path


def read_table(path: PathLike) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """Header fields and rows of a file written by write_table"""
    with Path(path).open(newline="") as handle:
        header = parse_header(handle.readline().rstrip("\n"))
        return header, list(csv.DictReader(handle))


class ReportWriter:
    """Writes the report files of one scenario run under `output_dir`

    Every file carries the run header (seed, scenario, beta, grid hash). With
    `enabled=False` nothing touches the filesystem and the paths are still returned.
    """

    def __init__(self, output_dir: PathLike, header: Mapping[str, Any], enabled: bool = True) -> None:
        self.output_dir = Path(output_dir)
        self.header = dict(header)
        self.enabled = enabled
        self.files: List[str] = []

    def _table(self, name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        path = self.output_dir / name
        if self.enabled:
            write_table(path, self.header, columns, list(rows))
        self.files.append(name)
        return path

    def posterior(self, name: str, posteriors: Sequence[PosteriorGrid]) -> Path:
        rows = []
        for post in posteriors:
            masses = post.masses
            for i in range(len(post.grid)):
                rows.append((post.n, post.grid.label(i), float(post.log_weights[i]), float(masses[i])))
        return self._table(name, ("n", "theta", "log_weight", "posterior_mass"), rows)

    def rates(self, name: str, table: RateTable) -> Path:
        rows = [(r["theta"], r["V_hat"], r["stderr"], r["V_closed"], r["V_limit"]) for r in table.rows()]
        return self._table(name, ("theta", "V_hat", "stderr", "V_closed", "V_limit"), rows)

    def audit(self, name: str, audits: Sequence[Tuple[str, GibbsAudit]]) -> Path:
        rows = [
            (label, row.m, row.ratio_min, row.ratio_max)
            for label, audit in audits
            for row in audit.rows
        ]
        return self._table(name, ("theta", "m", "ratio_min", "ratio_max"), rows)

    def concentration(self, name: str, reports: Sequence[ConcentrationReport]) -> Path:
        rows = [
            (replicate, row.n, row.outside_mass, row.log_inside_rate)
            for replicate, report in enumerate(reports)
            for row in report.rows
        ]
        return self._table(name, ("replicate", "n", "outside_mass", "log_inside_rate"), rows)

    def rows(self, name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        return self._table(name, columns, rows)

    def summary(self, summary: Mapping[str, Any], name: str = "summary.json") -> Path:
        path = self.output_dir / name
        if self.enabled:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_value) + "\n")
        self.files.append(name)
        return path


def _json_value(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_trajectory(path: PathLike, trajectory: Trajectory, theta_star: Optional[str] = None) -> Path:
    header = {"seed": trajectory.seed, "source": trajectory.source, "theta_star": theta_star or "-"}
    rows = ((k, int(s)) for k, s in enumerate(trajectory.symbols))
    return write_table(path, header, ("k", "symbol"), rows)


def read_trajectory(path: PathLike) -> Trajectory:
    header, rows = read_table(path)
    symbols = np.array([int(r["symbol"]) for r in rows], dtype=np.int64)
    return Trajectory(symbols=symbols, seed=int(header.get("seed", 0)), source=header.get("source", "file"))


def write_emissions(path: PathLike, emissions: EmissionSequence, theta_star: Optional[str] = None) -> Path:
    header = {"seed": emissions.seed, "source": emissions.source, "theta_star": theta_star or "-"}
    rows = ((k, float(v)) for k, v in enumerate(emissions.values))
    return write_table(path, header, ("k", "value"), rows)


def read_emissions(path: PathLike) -> EmissionSequence:
    header, rows = read_table(path)
    values = np.array([float(r["value"]) for r in rows])
    return EmissionSequence(values=values, seed=int(header.get("seed", 0)), source=header.get("source", "file"))


def format_summary(summary: Mapping[str, Any]) -> str:
    """Human-readable run summary for the terminal"""
    passed = summary.get("passed", False)
    parts = [
        "=== gibbsposterior run ===",
        f"Scenario: {summary.get('scenario', '?')}",
        f"Result: {'PASS' if passed else 'FAIL'}",
        "",
    ]
    if summary.get("error"):
        parts.append(f"Error: {summary['error']}")
        parts.append("")
    checks = summary.get("checks", [])
    if checks:
        parts.append("=== Checks ===")
        for check in checks:
            mark = "ok" if check["passed"] else "FAILED"
            parts.append(f"  [{mark}] {check['name']}: {check['detail']}")
        parts.append("")
    metrics = summary.get("metrics", {})
    if metrics:
        parts.append("=== Metrics ===")
        for key in sorted(metrics):
            parts.append(f"  {key}: {metrics[key]}")
        parts.append("")
    files = summary.get("files", [])
    if files:
        parts.append(f"Files: {', '.join(files)}")
    return "\n".join(parts)
