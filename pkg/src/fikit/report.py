"""Check reports: machine-readable JSON records plus markdown summaries."""
from dataclasses import dataclass, field
import hashlib
import json

import numpy as np

STATUSES = ("pass", "fail", "inconclusive")


def digest(*arrays, **constants):
    """Content hash of input arrays and scalar constants."""
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=float)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    h.update(json.dumps(_jsonable(constants), sort_keys=True).encode())
    return h.hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


@dataclass
class CheckReport:
    """Outcome of one inequality check.

    ``passed`` is always recomputable as ``margin >= -tolerance``. ``status``
    adds a third value, ``inconclusive``, for suites whose hypotheses could
    not be verified.
    """

    name: str
    lhs: float
    rhs: float
    tolerance: float = 0.0
    constants: dict = field(default_factory=dict)
    inputs_digest: str = ""
    details: dict = field(default_factory=dict)
    clauses: list = field(default_factory=list)
    inconclusive: bool = False

    @property
    def margin(self):
        return float(self.rhs) - float(self.lhs)

    @property
    def passed(self):
        return bool(self.margin >= -self.tolerance)

    @property
    def status(self):
        if self.inconclusive:
            return "inconclusive"
        return "pass" if self.passed else "fail"

    def to_dict(self):
        return _jsonable({
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "status": self.status,
            "constants": self.constants,
            "inputs_digest": self.inputs_digest,
            "details": self.details,
            "clauses": [c.to_dict() for c in self.clauses],
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data):
        return cls(
            name=data["name"], lhs=data["lhs"], rhs=data["rhs"],
            tolerance=data.get("tolerance", 0.0),
            constants=data.get("constants", {}),
            inputs_digest=data.get("inputs_digest", ""),
            details=data.get("details", {}),
            clauses=[cls.from_dict(c) for c in data.get("clauses", [])],
            inconclusive=data.get("status") == "inconclusive",
        )

    def to_markdown(self):
        lines = [f"### {self.name}", "", summary_table([self]), ""]
        if self.constants:
            consts = ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.constants.items()))
            lines += [f"constants: {consts}", ""]
        if self.clauses:
            lines += [summary_table(self.clauses), ""]
        return "\n".join(lines)

    def __bool__(self):
        return self.passed and not self.inconclusive


def aggregate(name, clauses, constants=None, inputs_digest="", details=None,
              inconclusive=False):
    """Combine clause reports; the worst clause (least slack) becomes the headline.

    The aggregate passes exactly when every clause passes.
    """
    if not clauses:
        raise ValueError("aggregate needs at least one clause")
    worst = min(clauses, key=lambda c: c.margin + c.tolerance)
    return CheckReport(name=name, lhs=worst.lhs, rhs=worst.rhs,
                       tolerance=worst.tolerance, constants=constants or {},
                       inputs_digest=inputs_digest, details=details or {},
                       clauses=list(clauses), inconclusive=inconclusive)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def summary_table(reports):
    rows = ["| check | lhs | rhs | margin | tol | status |",
            "|---|---|---|---|---|---|"]
    for r in reports:
        rows.append(f"| {r.name} | {r.lhs:.6g} | {r.rhs:.6g} | {r.margin:.3g} "
                    f"| {r.tolerance:.1e} | {r.status} |")
    return "\n".join(rows)
