"""Detector tuning certificates: 6x6 semidefiniteness conditions and constants.

Robustness (to distributed uncertainty) and attack sensitivity of the
observer residual are certified by two structured symmetric 6x6 matrices,
A <= 0 and B >= 0, whose entries are closed forms in the tuning tuple
(c, lambda, alpha_1..6, lambda_1..6, beta_1, beta_2).  Feasibility is
decided with an in-house cyclic Jacobi eigensolver; the certified design
also carries the derived residual-envelope constants K1..K5, M2 and the
initial-error budget epsilon.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TuningParams",
    "InitialBounds",
    "Theorem3Constants",
    "DesignCertificate",
    "SearchSpace",
    "ScanResult",
    "InfeasibleDesignError",
    "assemble_lmi",
    "jacobi_eigenvalues",
    "check_semidefinite",
    "SemidefiniteVerdict",
    "theorem3_constants",
    "scan_design",
    "default_search_space",
    "save_certificate",
    "load_certificate",
]

FEASIBILITY_TOL = 1e-10


class InfeasibleDesignError(RuntimeError):
    """Raised by callers that require a feasible design and got none."""


@dataclass(frozen=True)
class TuningParams:
    """Tuning tuple for the residual certificates.

    Requires c > lambda > 0, all lambda_i > 0 and positive requirement
    levels beta1 (robustness) and beta2 (sensitivity); alpha is the plant
    reaction coefficient and the alphas are free splitting constants.
    """

    c: float
    lam: float
    alphas: tuple[float, ...]
    lams: tuple[float, ...]
    beta1: float
    beta2: float
    alpha: float

    def __post_init__(self):
        if not (self.c > self.lam > 0):
            raise ValueError("need c > lambda > 0")
        if len(self.alphas) != 6 or len(self.lams) != 6:
            raise ValueError("alphas and lams must have six entries")
        if any(l <= 0 for l in self.lams):
            raise ValueError("all lambda_i must be positive")
        if self.beta1 <= 0 or self.beta2 <= 0:
            raise ValueError("beta1 and beta2 must be positive")

    @property
    def s2(self) -> float:
        return 1.0 + (self.c + self.alpha) / 2.0

    @property
    def s16(self) -> float:
        return 1.0 + (self.c + self.alpha) / 16.0


def assemble_lmi(p: TuningParams) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the robustness matrix A and the sensitivity matrix B.

    Only the diagonals and the symmetric (1,4), (2,5), (3,6) couplings are
    nonzero; the couplings vanish exactly when the corresponding alpha_i
    equals one.
    """
    c, lam = p.c, p.lam
    a1, a2, a3, a4, a5, a6 = p.alphas
    l1, l2, l3, l4, l5, l6 = p.lams
    s2, s16 = p.s2, p.s16

    A = np.zeros((6, 6))
    A[0, 0] = 1.0 - c * c + c * a1 * l1 / 2.0
    A[1, 1] = -c + s2 * a2 * l2 / 2.0
    A[2, 2] = -c + s16 * a3 * l3 / 2.0
    A[3, 3] = c * a1 / (2.0 * l1) - p.beta1**2
    A[4, 4] = s2 * a2 / (2.0 * l2) - p.beta1**2
    A[5, 5] = s16 * a3 / (2.0 * l3) - p.beta1**2
    A[0, 3] = A[3, 0] = c * (1.0 - a1) / 2.0
    A[1, 4] = A[4, 1] = s2 * (1.0 - a2) / 2.0
    A[2, 5] = A[5, 2] = s16 * (1.0 - a3) / 2.0

    B = np.zeros((6, 6))
    B[0, 0] = 1.0 + c * c - c * a4 * l4 / 2.0
    B[1, 1] = c - s2 * a5 * l5 / 2.0
    B[2, 2] = c - s16 * a6 * l6 / 2.0
    B[3, 3] = -c * a4 / (2.0 * l4) - p.beta2**2
    B[4, 4] = -s2 * a5 / (2.0 * l5) - p.beta2**2
    B[5, 5] = -s16 * a6 / (2.0 * l6) - p.beta2**2
    B[0, 3] = B[3, 0] = -c * (1.0 - a4) / 2.0
    B[1, 4] = B[4, 1] = -s2 * (1.0 - a5) / 2.0
    B[2, 5] = B[5, 2] = -s16 * (1.0 - a6) / 2.0
    return A, B


def jacobi_eigenvalues(M: np.ndarray, max_sweeps: int = 50) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops below
    1e-14 * max(1, ||M||_F); convergence is quadratic so a handful of
    sweeps suffices for the 6x6 matrices used here.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise ValueError("matrix must be symmetric")
    A = 0.5 * (A + A.T)
    scale = max(1.0, np.linalg.norm(A))
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= 1e-14 * scale:
            break
        for pp, qq in itertools.combinations(range(n), 2):
            apq = A[pp, qq]
            if abs(apq) <= 1e-30 * scale:
                continue
            tau = (A[qq, qq] - A[pp, pp]) / (2.0 * apq)
            if abs(tau) > 1e150:
                t = 1.0 / (2.0 * tau)
            elif tau == 0:
                t = 1.0
            else:
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
            cth = 1.0 / np.sqrt(1.0 + t * t)
            sth = t * cth
            rot = np.eye(n)
            rot[pp, pp] = rot[qq, qq] = cth
            rot[pp, qq] = sth
            rot[qq, pp] = -sth
            A = rot.T @ A @ rot
    return np.sort(np.diag(A))


@dataclass(frozen=True)
class SemidefiniteVerdict:
    ok: bool
    extreme_eigenvalue: float
    eigenvalues: np.ndarray


def check_semidefinite(M: np.ndarray, sense: str, tol: float = FEASIBILITY_TOL) -> SemidefiniteVerdict:
    """Decide M <= 0 (sense='neg') or M >= 0 (sense='pos') within tol."""
    eig = jacobi_eigenvalues(M)
    if sense == "neg":
        extreme = float(eig[-1])
        return SemidefiniteVerdict(extreme <= tol, extreme, eig)
    if sense == "pos":
        extreme = float(eig[0])
        return SemidefiniteVerdict(extreme >= -tol, extreme, eig)
    raise ValueError("sense must be 'neg' or 'pos'")


@dataclass(frozen=True)
class InitialBounds:
    """Bounds on the transformed initial error: norms, slope norm, boundary value."""

    psi0_bar: float
    psix0_bar: float
    psi10_bar: float
    psi10_lower: float

    def __post_init__(self):
        if self.psi10_lower <= 0:
            raise ValueError("psi10_lower must be positive")
        if self.psi10_bar < self.psi10_lower:
            raise ValueError("psi10_bar must be >= psi10_lower")
        if self.psi0_bar < 0 or self.psix0_bar < 0:
            raise ValueError("norm bounds must be nonnegative")


@dataclass(frozen=True)
class Theorem3Constants:
    K1: float
    K2: float
    K3: float
    K4: float
    K5: float
    M2: float
    epsilon: float


def theorem3_constants(p: TuningParams, bounds: InitialBounds) -> Theorem3Constants:
    """Residual-envelope constants derived from a feasible tuning tuple."""
    c, lam = p.c, p.lam
    k1 = (2.0 / c) * (c / 2.0 + (bounds.psi0_bar + bounds.psix0_bar) / (2.0 * bounds.psi10_lower))
    m2 = max(c * c, p.s2**2, p.s16**2) / (2.0 * lam)
    return Theorem3Constants(
        K1=k1,
        K2=2.0 * c,
        K3=k1,
        K4=2.0 * (c - lam),
        K5=m2 / (c * (c - lam)),
        M2=m2,
        epsilon=(c / 2.0) * bounds.psi10_bar**2 + bounds.psi0_bar**2 + bounds.psix0_bar**2,
    )


@dataclass(frozen=True)
class DesignCertificate:
    """A tuning tuple together with its matrices, margins and constants."""

    params: TuningParams
    A: np.ndarray
    B: np.ndarray
    eig_A_max: float
    eig_B_min: float
    constants: Theorem3Constants
    bounds: InitialBounds

    @property
    def feasible(self) -> bool:
        return self.eig_A_max <= FEASIBILITY_TOL and self.eig_B_min >= -FEASIBILITY_TOL

    @property
    def margin(self) -> float:
        return min(-self.eig_A_max, self.eig_B_min)

    def with_bounds(self, bounds: InitialBounds) -> "DesignCertificate":
        """Re-derive the constants for scenario-specific initial bounds."""
        return DesignCertificate(
            params=self.params,
            A=self.A,
            B=self.B,
            eig_A_max=self.eig_A_max,
            eig_B_min=self.eig_B_min,
            constants=theorem3_constants(self.params, bounds),
            bounds=bounds,
        )


def certify(p: TuningParams, bounds: InitialBounds) -> DesignCertificate:
    """Assemble, eigen-check and package a certificate for one tuning tuple."""
    A, B = assemble_lmi(p)
    va = check_semidefinite(A, "neg")
    vb = check_semidefinite(B, "pos")
    return DesignCertificate(
        params=p,
        A=A,
        B=B,
        eig_A_max=va.extreme_eigenvalue,
        eig_B_min=vb.extreme_eigenvalue,
        constants=theorem3_constants(p, bounds),
        bounds=bounds,
    )


@dataclass(frozen=True)
class SearchSpace:
    """Grid over the tuning scalars; the three robustness alphas are tied
    together, as are the three sensitivity alphas and all six lambda_i."""

    c_values: tuple[float, ...] = (1.5, 2.0, 3.0, 4.0)
    lam_values: tuple[float, ...] = (0.25, 0.5, 1.0)
    alpha_rob_values: tuple[float, ...] = (0.5, 1.0, 2.0)
    alpha_sen_values: tuple[float, ...] = (-20.0, -10.0, -5.0)
    lam_i_values: tuple[float, ...] = (0.05, 0.1, 0.2)

    def __iter__(self):
        yield from itertools.product(
            self.c_values,
            self.lam_values,
            self.alpha_rob_values,
            self.alpha_sen_values,
            self.lam_i_values,
        )

    def size(self) -> int:
        return (
            len(self.c_values)
            * len(self.lam_values)
            * len(self.alpha_rob_values)
            * len(self.alpha_sen_values)
            * len(self.lam_i_values)
        )


def default_search_space() -> SearchSpace:
    return SearchSpace()


@dataclass(frozen=True)
class ScanResult:
    certificate: DesignCertificate | None
    total: int
    feasible_count: int
    best_margin: float
    message: str

    @property
    def feasible(self) -> bool:
        return self.certificate is not None


def scan_design(
    alpha: float,
    beta1: float,
    beta2: float,
    space: SearchSpace | None = None,
    bounds: InitialBounds | None = None,
) -> ScanResult:
    """Exhaustive deterministic grid scan for a feasible certificate.

    Candidates are visited in the lattice order of the space; the feasible
    certificate maximizing min(-max eig A, min eig B) wins, ties broken by
    the earlier lattice position.  An empty feasible set yields a result
    carrying the best margin seen instead of a certificate.
    """
    if space is None:
        space = default_search_space()
    if bounds is None:
        bounds = InitialBounds(1.0, 1.0, 1.0, 1.0)
    if space.size() == 0:
        raise ValueError("empty search space")
    best: DesignCertificate | None = None
    best_margin = -np.inf
    feas = 0
    total = 0
    for c, lam, a_rob, a_sen, l_i in space:
        if not c > lam:
            continue
        total += 1
        p = TuningParams(
            c=c,
            lam=lam,
            alphas=(a_rob,) * 3 + (a_sen,) * 3,
            lams=(l_i,) * 6,
            beta1=beta1,
            beta2=beta2,
            alpha=alpha,
        )
        cert = certify(p, bounds)
        if cert.feasible:
            feas += 1
            if best is None or cert.margin > best.margin:
                best = cert
        if cert.margin > best_margin:
            best_margin = cert.margin
    if best is None:
        return ScanResult(
            certificate=None,
            total=total,
            feasible_count=0,
            best_margin=best_margin,
            message=f"infeasible at requested (beta1={beta1:g}, beta2={beta2:g})",
        )
    return ScanResult(
        certificate=best,
        total=total,
        feasible_count=feas,
        best_margin=best.margin,
        message="feasible",
    )


# ---------------------------------------------------------------------------
# serialization (structured text document with stable key order)
# ---------------------------------------------------------------------------

def certificate_to_dict(cert: DesignCertificate) -> dict:
    p = cert.params
    k = cert.constants
    b = cert.bounds
    return {
        "params": {
            "c": p.c,
            "lambda": p.lam,
            "alphas": list(p.alphas),
            "lambdas": list(p.lams),
            "beta1": p.beta1,
            "beta2": p.beta2,
            "alpha": p.alpha,
        },
        "A": [list(map(float, row)) for row in cert.A],
        "B": [list(map(float, row)) for row in cert.B],
        "eig_A_max": cert.eig_A_max,
        "eig_B_min": cert.eig_B_min,
        "feasible": cert.feasible,
        "margin": cert.margin,
        "constants": {
            "K1": k.K1,
            "K2": k.K2,
            "K3": k.K3,
            "K4": k.K4,
            "K5": k.K5,
            "M2": k.M2,
            "epsilon": k.epsilon,
        },
        "initial_bounds": {
            "psi0_bar": b.psi0_bar,
            "psix0_bar": b.psix0_bar,
            "psi10_bar": b.psi10_bar,
            "psi10_lower": b.psi10_lower,
        },
    }


def save_certificate(path, cert: DesignCertificate) -> None:
    with open(path, "w") as fh:
        json.dump(certificate_to_dict(cert), fh, indent=2)
        fh.write("\n")


def load_certificate(path) -> DesignCertificate:
    with open(path) as fh:
        doc = json.load(fh)
    p = doc["params"]
    params = TuningParams(
        c=p["c"],
        lam=p["lambda"],
        alphas=tuple(p["alphas"]),
        lams=tuple(p["lambdas"]),
        beta1=p["beta1"],
        beta2=p["beta2"],
        alpha=p["alpha"],
    )
    b = doc["initial_bounds"]
    bounds = InitialBounds(
        psi0_bar=b["psi0_bar"],
        psix0_bar=b["psix0_bar"],
        psi10_bar=b["psi10_bar"],
        psi10_lower=b["psi10_lower"],
    )
    k = doc["constants"]
    return DesignCertificate(
        params=params,
        A=np.asarray(doc["A"], dtype=float),
        B=np.asarray(doc["B"], dtype=float),
        eig_A_max=float(doc["eig_A_max"]),
        eig_B_min=float(doc["eig_B_min"]),
        constants=Theorem3Constants(
            K1=k["K1"], K2=k["K2"], K3=k["K3"], K4=k["K4"], K5=k["K5"],
            M2=k["M2"], epsilon=k["epsilon"],
        ),
        bounds=bounds,
    )
