"""Smoke test for the qfisher extension module: python3 python/smoke_test.py"""

import math

import qfisher


def close(a, b, tol):
    assert abs(a - b) <= tol * max(1.0, abs(b)), (a, b)


def main():
    g = qfisher.Grid(-8.0, 8.0, 2049)
    xs = g.points()
    c = qfisher.Constants()

    p = qfisher.Density(g, [math.exp(-x * x / 2) for x in xs])
    close(p.mass(), 1.0, 1e-12)
    close(p.fisher_information(), 1.0, 1e-6)
    close(p.mean_quantum_potential(c), 0.125, 1e-6)
    spread, scale = p.qp_form_spread(c)
    assert spread <= 1e-5 * scale
    f = p.fluctuations(c)
    assert abs(f["mean"]) <= 1e-8
    close(f["second_moment"], 0.25, 1e-6)

    epi = qfisher.epi_solve(g, [[x * x for x in xs]], [-4.0])
    close(epi.fisher_information, 2.0, 1e-3)
    assert epi.euler_lagrange_residual() <= 1e-3

    dens, alpha, _ = qfisher.maxent_solve(g, [x * x for x in xs], 1.0)
    close(alpha, 0.5, 1e-6)
    close(dens.variance(), 1.0, 1e-8)

    rows = qfisher.sweep(g, [x * x for x in xs], [-1.0, -2.0, -4.0])
    assert [r["status"] for r in rows] == ["ok"] * 3

    try:
        qfisher.epi_solve(g, [[x * x for x in xs]], [4.0])
    except qfisher.QFisherError as e:
        assert e.args[0] == "EdgeLocalized", e.args
    else:
        raise AssertionError("expected EdgeLocalized")

    g2 = qfisher.Grid(-12.0, 12.0, 1537)
    xs2 = g2.points()
    psi_re = [math.exp(-x * x / 4) for x in xs2]
    traj = qfisher.evolve(g2, psi_re, [0.0] * len(xs2), [0.0] * len(xs2), c, 1e-3, 4)
    assert len(traj) == 5
    assert traj.continuity_residual(2) <= 1e-3

    hf = qfisher.HeatField(g, [0.5 * x * x for x in xs], c)
    hp = hf.density()
    close(hf.fisher_coupling(hp), hp.fisher_information(), 1e-8)
    assert all(chk["pass"] for chk in hf.coherence_suite())

    assert "eq2.4 mean-QP-equals-FI" in qfisher.list_checks().splitlines()
    print("smoke test OK")


if __name__ == "__main__":
    main()
