"""Reading and writing states, scans and reports.

Floats are written with 17 significant digits so every file round-trips
bit-exactly.  Writes go through a temporary file and an atomic rename.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .detection import MOMENT_FIELDS, LockedScan, ScanCurve, ScanKind
from .errors import ParseError
from .reconstruct import Comparison, FitReport, ReconstructionResult
from .state import PLUSMINUS, SIDEBAND, EnergySummary, TwoModeState

SCAN_HEADER = ["kind", "abscissa", "value", "sigma"]
LOCKED_HEADER = ["detuning", *MOMENT_FIELDS, *(f"sigma_{f}" for f in MOMENT_FIELDS)]


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with fixed 17-digit float formatting."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _load_json(path):
    path = Path(path)
    text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def _require(doc: dict, keys, where: str):
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected a JSON object")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ParseError(f"{where}: missing field(s) {', '.join(missing)}")


# -- states ---------------------------------------------------------------------


def state_to_dict(state: TwoModeState) -> dict:
    return {"mean": state.mean.tolist(), "cov": state.cov.tolist(), "basis": state.basis}


def state_from_dict(doc: dict, where: str = "state") -> TwoModeState:
    _require(doc, ("mean", "cov"), where)
    basis = doc.get("basis", SIDEBAND)
    if basis not in (SIDEBAND, PLUSMINUS):
        raise ParseError(f"{where}: basis must be 'sideband' or 'plusminus', got {basis!r}")
    try:
        return TwoModeState(doc["mean"], doc["cov"], basis)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{where}: {exc}") from None


def write_state(path, state: TwoModeState) -> Path:
    return write_atomic(path, dumps(state_to_dict(state)) + "\n")


def read_state(path) -> TwoModeState:
    return state_from_dict(_load_json(path), str(path))


def energy_to_dict(e: EnergySummary) -> dict:
    d = e._asdict()
    d["ratio"] = e.ratio
    return d


# -- scans -------------------------------------------------------------------------


def scan_to_csv(curve: ScanCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    for x, v, s in zip(curve.abscissa, curve.values, curve.sigma):
        w.writerow([curve.kind.value, fmt(x), fmt(v), fmt(s)])
    return buf.getvalue()


def scan_from_csv(text: str, where: str = "<scan>") -> ScanCurve:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != SCAN_HEADER:
        raise ParseError(f"{where}:1: header must be {','.join(SCAN_HEADER)}")
    kinds, xs, vs, ss = [], [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"{where}:{lineno}: expected 4 fields, got {len(row)}")
        try:
            kinds.append(ScanKind(row[0]))
        except ValueError:
            raise ParseError(f"{where}:{lineno}: unknown scan kind {row[0]!r}") from None
        try:
            xs.append(float(row[1]))
            vs.append(float(row[2]))
            ss.append(float(row[3]))
        except ValueError as exc:
            raise ParseError(f"{where}:{lineno}: {exc}") from None
    if len(set(kinds)) != 1:
        raise ParseError(f"{where}: a scan file must hold exactly one kind")
    try:
        return ScanCurve(xs, vs, ss, kinds[0])
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def scan_to_json(curve: ScanCurve) -> str:
    pts = [
        {"kind": curve.kind.value, "abscissa": float(x), "value": float(v), "sigma": float(s)}
        for x, v, s in zip(curve.abscissa, curve.values, curve.sigma)
    ]
    return dumps(pts) + "\n"


def scan_from_json(text: str, where: str = "<scan>") -> ScanCurve:
    try:
        pts = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{where}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(pts, list) or not pts:
        raise ParseError(f"{where}: expected a non-empty JSON array of points")
    for i, p in enumerate(pts):
        _require(p, SCAN_HEADER, f"{where}: point {i}")
    kinds = {p["kind"] for p in pts}
    if len(kinds) != 1:
        raise ParseError(f"{where}: a scan file must hold exactly one kind")
    try:
        return ScanCurve(
            [p["abscissa"] for p in pts], [p["value"] for p in pts], [p["sigma"] for p in pts], kinds.pop()
        )
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{where}: {exc}") from None


def write_scan(path, curve: ScanCurve) -> Path:
    path = Path(path)
    text = scan_to_json(curve) if path.suffix == ".json" else scan_to_csv(curve)
    return write_atomic(path, text)


def read_scan(path) -> ScanCurve:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return scan_from_json(text, str(path))
    return scan_from_csv(text, str(path))


def locked_to_csv(scan: LockedScan) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOCKED_HEADER)
    for d, v, s in zip(scan.detuning, scan.values, scan.sigma):
        w.writerow([fmt(d), *map(fmt, v), *map(fmt, s)])
    return buf.getvalue()


def locked_from_csv(text: str, where: str = "<locked scan>") -> LockedScan:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != LOCKED_HEADER:
        raise ParseError(f"{where}:1: header must be {','.join(LOCKED_HEADER)}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(LOCKED_HEADER):
            raise ParseError(f"{where}:{lineno}: expected {len(LOCKED_HEADER)} fields, got {len(row)}")
        try:
            data.append([float(x) for x in row])
        except ValueError as exc:
            raise ParseError(f"{where}:{lineno}: {exc}") from None
    if not data:
        raise ParseError(f"{where}: no data rows")
    a = np.array(data)
    return LockedScan(a[:, 0], a[:, 1:6], a[:, 6:11])


def write_locked(path, scan: LockedScan) -> Path:
    return write_atomic(path, locked_to_csv(scan))


def read_locked(path) -> LockedScan:
    path = Path(path)
    return locked_from_csv(path.read_text(), str(path))


# -- reports ---------------------------------------------------------------------------


def report_to_dict(r: FitReport) -> dict:
    return {
        "coefficients": dict(r.coefficients),
        "coeff_covariance": np.asarray(r.coeff_covariance).tolist(),
        "residual_rms": r.residual_rms,
        "design_rank": r.design_rank,
        "condition_number": r.condition_number,
    }


def report_from_dict(doc: dict, where: str = "report") -> FitReport:
    _require(doc, ("coefficients", "coeff_covariance", "residual_rms", "design_rank", "condition_number"), where)
    return FitReport(
        {k: float(v) for k, v in doc["coefficients"].items()},
        np.array(doc["coeff_covariance"], dtype=float),
        float(doc["residual_rms"]),
        int(doc["design_rank"]),
        float(doc["condition_number"]),
    )


def result_to_dict(r: ReconstructionResult) -> dict:
    return {
        "state": state_to_dict(r.state),
        "report": report_to_dict(r.report),
        "purity": r.purity,
        "energies": energy_to_dict(r.energies),
        "projection_distance": r.projection_distance,
    }


def result_from_dict(doc: dict, where: str = "result") -> ReconstructionResult:
    _require(doc, ("state", "report", "purity", "energies"), where)
    e = doc["energies"]
    _require(e, ("e_upper", "e_lower", "sum", "imbalance"), f"{where}: energies")
    return ReconstructionResult(
        state_from_dict(doc["state"], f"{where}: state"),
        report_from_dict(doc["report"], f"{where}: report"),
        float(doc["purity"]),
        EnergySummary(float(e["e_upper"]), float(e["e_lower"]), float(e["sum"]), float(e["imbalance"])),
        float(doc.get("projection_distance", 0.0)),
    )


def comparison_to_dict(c: Comparison) -> dict:
    return c._asdict()


def write_json(path, doc) -> Path:
    return write_atomic(path, dumps(doc) + "\n")


def read_json(path):
    return _load_json(path)
