"""Smoke test for the `pea` extension module.

Build and install first:  (cd crates/py && maturin develop --release)
"""

import math
from pathlib import Path

import pea

DATA = Path(__file__).resolve().parent.parent / "crates" / "core" / "data"


def close(a, b, tol=1e-9):
    assert abs(a - b) <= tol, (a, b)


def main():
    hw = pea.NoiseModel.load(str(DATA / "hardware.model"))
    tg = pea.NoiseModel.load(str(DATA / "target.model"))
    assert hw.n_qubits == 2 and len(hw.channels()) == 8

    close(pea.sample_probability(0.05), 0.952418709017980, 1e-12)
    close(hw.pauli_fidelity("ZZ"), math.exp(-0.3), 1e-12)

    zz = pea.PauliString("ZZ")
    assert not zz.anticommutes(pea.PauliString("XX"))
    assert str(pea.PauliString("XX") * pea.PauliString("ZZ")) == "-YY"

    circuit = pea.Circuit.clifford_zz(2, 0.2, 5, hw)
    plan = pea.Plan(hw, tg)
    cases = {p: c for p, c, _, _ in plan.entries()}
    assert cases["ZY"] == "INJECT" and cases["YI"] == "MITIGATE"

    k, kt = pea.fidelity_products(circuit, hw, tg, "ZZ")
    close(k, math.exp(-1.5))
    close(kt, math.exp(-0.5))
    close(plan.predict(circuit, "ZZ", 1.0), math.exp(-1.7))
    close(circuit.reference(tg, "ZZ")[-1], math.exp(-0.5))

    g1, g2 = pea.optimal_gains(k, kt)
    close(pea.lambert_w0(math.exp(-1)), 0.2784645427610738, 1e-12)
    close(g2, 2.2784645427610738)
    assert pea.optimal_shots([g1, g2], k, kt, 10_000) == [3882, 6118]
    close(pea.min_error_bound(k, kt, 10_000), 0.1247996, 1e-6)

    gains, means, errs = [], [], []
    for j, (g, s) in enumerate(zip([g1, g2], [38818, 61182])):
        m, e = plan.sample(circuit, "ZZ", g, s, 11 + j)
        gains.append(g)
        means.append(m)
        errs.append(e)
    fit = pea.extrapolate_exponential(gains, means, errs)
    assert abs(fit["value"] - kt) < 5 * fit["error"], fit

    try:
        pea.NoiseModel(2, [("XYZ", 0.1)])
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("python smoke test ok:", pea.__version__, f"F(0) = {fit['value']:.4f} +- {fit['error']:.4f}")


if __name__ == "__main__":
    main()
