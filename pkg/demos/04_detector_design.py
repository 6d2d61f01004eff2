"""Certified detector design by scanning the tuning lattice.

The robustness matrix must be negative semidefinite and the sensitivity
matrix positive semidefinite; the scan visits a small deterministic grid
of tuning tuples, keeps the feasible ones, and reports the best margin
together with the residual-envelope constants.
"""

from pathlib import Path

from pdesec.lmi import InitialBounds, default_search_space, save_certificate, scan_design

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

result = scan_design(
    alpha=-1.0, beta1=4.0, beta2=5.0,
    space=default_search_space(),
    bounds=InitialBounds(1.0, 1.0, 1.0, 1.0),
)
print(f"candidates: {result.total}, feasible: {result.feasible_count}")
cert = result.certificate
print(f"best margin {cert.margin:.4f} at c={cert.params.c}, lambda={cert.params.lam}, "
      f"alphas={cert.params.alphas}, lambda_i={cert.params.lams[0]}")
k = cert.constants
print(f"envelope constants: K1={k.K1:.3f} K2={k.K2} K4={k.K4} K5={k.K5:.3f} eps={k.epsilon:.3f}")
save_certificate(out / "certificate.json", cert)
print(f"wrote {out / 'certificate.json'}")

tight = scan_design(alpha=-1.0, beta1=0.5, beta2=50.0)
print(f"demanding levels (beta1=0.5, beta2=50): {tight.message}")
