from sqlmodel import SQLModel, Field, JSON, Column
from pydantic import field_validator
from datetime import datetime
from typing import Optional, List, Dict, Any, ClassVar
from enum import Enum

from app.errors import VerificationError


class GraphKind(str, Enum):
    """Graph families the command line can build."""

    COMPLETE = "complete"
    LATTICE = "lattice"
    RANDOM = "random"
    FILE = "file"


class DeltaPolicy(str, Enum):
    """How the control angle delta is chosen."""

    EXPLICIT = "explicit"
    ZERO = "zero"
    GENERIC = "generic"  # tan(delta) = 1/sqrt(g)
    LATTICE = "lattice"  # tan(delta) by lattice dimension


# Non-persistent schemas for reports and artifacts
class CheckResult(SQLModel, table=False):
    """Outcome of one numerical check."""

    check_name: str = Field(max_length=200)
    passed: bool
    residual: Optional[float] = Field(default=None)
    expected: Optional[float] = Field(default=None)
    measured: Optional[float] = Field(default=None)
    informational: bool = Field(default=False)
    detail: str = Field(default="", max_length=500)

    @classmethod
    def within(
        cls,
        name: str,
        residual: float,
        tolerance: float,
        expected: Optional[float] = None,
        measured: Optional[float] = None,
        detail: str = "",
    ) -> "CheckResult":
        """Pass when residual is finite and below tolerance."""
        ok = bool(residual == residual and abs(residual) < tolerance)
        return cls(check_name=name, passed=ok, residual=float(residual), expected=expected, measured=measured, detail=detail)

    @classmethod
    def counts(cls, name: str, expected: int, measured: int) -> "CheckResult":
        """Exact integer equality."""
        return cls(
            check_name=name,
            passed=expected == measured,
            residual=float(abs(expected - measured)),
            expected=float(expected),
            measured=float(measured),
        )

    @classmethod
    def bound(cls, name: str, holds: bool, expected: float, measured: float, applicable: bool = True) -> "CheckResult":
        """Inequality check; reported but not asserted when the hypothesis does not apply."""
        return cls(
            check_name=name,
            passed=holds or not applicable,
            residual=float(measured - expected),
            expected=float(expected),
            measured=float(measured),
            informational=not applicable,
            detail="" if applicable else "hypothesis not met; informational only",
        )

    def to_record(self) -> Dict[str, Any]:
        return {
            "check_name": self.check_name,
            "pass": self.passed,
            "residual": self.residual,
            "expected": self.expected,
            "measured": self.measured,
        }


class VerificationReport(SQLModel, table=False):
    """Named collection of checks for one instance."""

    suite: str = Field(max_length=100)
    instance: str = Field(default="", max_length=200)
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def max_residual(self) -> float:
        residuals = [abs(c.residual) for c in self.checks if c.residual is not None and not c.informational]
        return max(residuals, default=0.0)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def get(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.check_name == name:
                return check
        raise KeyError(name)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def raise_for_failures(self) -> None:
        """Raise VerificationError naming every failed check."""
        failed = self.failures()
        if failed:
            names = ", ".join(check.check_name for check in failed)
            raise VerificationError(f"{self.suite} on {self.instance}: failed {names}")

    def to_record(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "instance": self.instance,
            "pass": self.passed,
            "checks": [check.to_record() for check in self.checks],
        }


class SearchSummary(SQLModel, table=False):
    """Scalar outcome of one search run."""

    n_vertices: int = Field(ge=2)
    degree: int = Field(ge=1)
    n_targets: int = Field(ge=1)
    gap: float
    delta: float = Field(ge=0.0)
    alpha: float = Field(gt=0.0)
    steps: int = Field(ge=0)
    p_success: float
    d_s: float
    pwt2: float

    def to_record(self) -> Dict[str, Any]:
        return {
            "N": self.n_vertices,
            "d": self.degree,
            "M": self.n_targets,
            "g": self.gap,
            "delta": self.delta,
            "alpha": self.alpha,
            "Q": self.steps,
            "p_s_at_Q": self.p_success,
            "D_s": self.d_s,
            "pwt2": self.pwt2,
        }


class HittingRow(SQLModel, table=False):
    """One row of the hitting-time CSV."""

    n_vertices: int
    degree: int
    n_targets: int
    alpha: float
    h_exact: float
    h_mc: Optional[float] = Field(default=None)
    stderr: Optional[float] = Field(default=None)
    l1_over_sqrt_n: float
    product_h_alpha2: float

    COLUMNS: ClassVar[List[str]] = [
        "N",
        "d",
        "M",
        "alpha",
        "h_exact",
        "h_mc",
        "stderr",
        "l1_over_sqrtN",
        "product_hT_alpha2",
    ]

    def to_row(self) -> List[Any]:
        return [
            self.n_vertices,
            self.degree,
            self.n_targets,
            self.alpha,
            self.h_exact,
            self.h_mc,
            self.stderr,
            self.l1_over_sqrt_n,
            self.product_h_alpha2,
        ]


class ExperimentConfig(SQLModel, table=False):
    """Command configuration assembled from a JSON file and command-line flags."""

    graph: str = Field(default="complete")
    n: Optional[int] = Field(default=None, ge=2)
    side: Optional[int] = Field(default=None, ge=2)
    dim: Optional[int] = Field(default=None, ge=1)
    degree: Optional[int] = Field(default=None, ge=1)
    targets: Optional[List[int]] = Field(default=None)
    m: int = Field(default=1, ge=1)
    delta: str = Field(default="auto")
    steps: str = Field(default="auto")
    seed: int = Field(default=0, ge=0)
    out: str = Field(default="out")
    jobs: int = Field(default=1, ge=1)
    trials: int = Field(default=100_000, ge=1000)
    axis: Optional[str] = Field(default=None)
    points: List[float] = Field(default_factory=list)
    fit: List[str] = Field(default_factory=list)
    record: bool = Field(default=False)

    @field_validator("graph")
    @classmethod
    def _known_graph(cls, value: str) -> str:
        kind = value.split(":", 1)[0]
        if kind not in {k.value for k in GraphKind}:
            raise ValueError(f"unknown graph kind '{value}'")
        if kind == GraphKind.FILE.value and not value[len("file:") :]:
            raise ValueError("file graph needs a path: file:PATH")
        return value

    @field_validator("delta")
    @classmethod
    def _delta_spec(cls, value: str) -> str:
        if value in {"auto", "zero"}:
            return value
        number = float(value)
        if not 0.0 <= number < 1.5707963267948966:
            raise ValueError(f"delta must lie in [0, pi/2), got {value}")
        return value

    @field_validator("steps")
    @classmethod
    def _steps_spec(cls, value: str) -> str:
        if value != "auto" and int(value) < 0:
            raise ValueError(f"steps must be 'auto' or a non-negative integer, got {value}")
        return value

    @field_validator("axis")
    @classmethod
    def _sweep_axis(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in {"N", "L", "M", "delta"}:
            raise ValueError(f"sweep axis must be one of N, L, M, delta; got {value}")
        return value

    @property
    def graph_kind(self) -> GraphKind:
        return GraphKind(self.graph.split(":", 1)[0])

    @property
    def graph_path(self) -> Optional[str]:
        return self.graph[len("file:") :] if self.graph_kind == GraphKind.FILE else None


# Persistent run ledger
class SearchRecord(SQLModel, table=True):
    """Stored summary of a search run."""

    __tablename__ = "search_runs"  # type: ignore[assignment]

    id: Optional[int] = Field(default=None, primary_key=True)
    graph_label: str = Field(max_length=200)
    n_vertices: int
    degree: int
    n_targets: int
    gap: float
    delta: float
    alpha: float
    steps: int
    p_success: float
    d_s: float
    pwt2: float
    config: Dict[str, Any] = Field(default_factory=dict, sa_column=Column(JSON))
    created_at: datetime = Field(default_factory=datetime.utcnow)


class VerificationRecord(SQLModel, table=True):
    """Stored outcome of one verification check."""

    __tablename__ = "verification_checks"  # type: ignore[assignment]

    id: Optional[int] = Field(default=None, primary_key=True)
    suite: str = Field(max_length=100)
    instance: str = Field(max_length=200)
    check_name: str = Field(max_length=200)
    passed: bool
    residual: Optional[float] = Field(default=None)
    created_at: datetime = Field(default_factory=datetime.utcnow)
