"""Synthesizing an attack that the boundary measurement cannot see.

With phi(x) = 1 + cos(pi x), a uniform attack channel, and the target of a
permanently zero output, the inverse problem has the closed-form answer
delta(t) = -pi^2 exp((-1 - pi^2) t).  All three solvers recover it, and
feeding the synthesized attack back through the forward solver confirms
the output stays at zero.
"""

from pathlib import Path

import numpy as np

from pdesec.spectral import ModalCoefficients, SampledSignal, eigenvalues
from pdesec.stealth import (
    StealthProblem,
    assemble_volterra,
    neumann_series_solve,
    operator_norm,
    solve_volterra2,
    tikhonov_solve,
    verify_stealth,
    write_attack_csv,
)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

dt = 1e-3
problem = StealthProblem(
    basis=eigenvalues(-1.0, 64),
    phi1=ModalCoefficients.from_list([1.0, 1.0], 64),
    Da=ModalCoefficients.from_list([1.0], 64),
    target=SampledSignal.zeros(0.0, 1.0, dt),
)
system = assemble_volterra(problem, dt, 1.0)

delta = solve_volterra2(system)
exact = -np.pi**2 * np.exp((-1 - np.pi**2) * system.t_grid)
print(f"direct solver vs closed form: {np.max(np.abs(delta.values - exact)):.2e}")

series = neumann_series_solve(system, 25)
print(f"Neumann series last increment: {series.last_increment:.2e}")

gamma = 1e-8 * operator_norm(system) ** 2
tik = tikhonov_solve(system, gamma)
print(f"Tikhonov (gamma = {gamma:.2e}) vs direct: {np.max(np.abs(tik.values - delta.values)):.2e}")

print(f"stealth closure: max |y| under attack = {verify_stealth(delta, problem, dt):.2e}")
write_attack_csv(out / "stealth_attack.csv", delta)
print(f"wrote {out / 'stealth_attack.csv'}")
