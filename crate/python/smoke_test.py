"""Smoke test for the rfi_ent extension module.

Build first:  pip install --no-build-isolation -e crates/py
"""

import math

import rfi_ent


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    bell = rfi_ent.DensityMatrix.phi_minus()
    q = bell.rfi()
    close(q["q2"], 3.0, 1e-10)
    close(q["q3"], 1.0, 1e-10)
    close(q["q4"], 6.0, 1e-10)
    close(q["q5"], 3.0, 1e-10)
    close(bell.concurrence(), 1.0, 1e-9)

    rotated = bell.rotated(seed=7)
    close(rotated.rfi()["q2"], 3.0, 1e-9)

    table = rfi_ent.DensityMatrix.werner(0.88).pauli_table()
    close(rfi_ent.rfi_quantities(table)["q2"], 3 * 0.88**2, 1e-12)

    iv = rfi_ent.concurrence_interval_from_q2(2.6)
    close(iv["lower"]["value"], math.sqrt((2.6 - 1) / 2), 1e-9)
    close(iv["upper"]["value"], (2 + math.sqrt(13.6)) / 6, 1e-9)

    rho = rfi_ent.DensityMatrix.random(rank=3, seed=1)
    moments = [rho.trace_moment(n) for n in range(1, 5)]
    for a, b in zip(rfi_ent.eigenvalues_from_moments(moments), rho.eigenvalues()):
        close(a, b, 1e-8)
    close(rho.renyi(2), -math.log(rho.purity()), 1e-12)

    records = rfi_ent.simulate(fidelity=0.91, budget=100_000, seed=3, rotation=2)
    assert len(records) == 9
    report = rfi_ent.analyze(records)
    assert report["rfi"]["normalized"]["q2"]["value"] > 1 / 3
    assert report["separability"]["verdict"] == "entangled"

    adaptive = rfi_ent.adaptive_q2(fidelity=1.0, budget=1_000_000, seed=4)
    assert adaptive["verdict"] == "entangled"

    suite = rfi_ent.verify(samples=500, seed=2)
    assert all(c["passed"] for c in suite["checks"]), suite

    summary = rfi_ent.montecarlo_summary(samples=2000, seed=5)
    assert summary["lower_bound_violations"] == 0

    try:
        rfi_ent.DensityMatrix.werner(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("werner(1.5) should be rejected")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
